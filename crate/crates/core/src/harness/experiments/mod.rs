//! The experiment suites behind `affsim run`.
//!
//! Each suite takes the configuration and one seed and returns its checks,
//! CSV tables and summary numbers. Replicas run in parallel with one random
//! stream per replica and are reduced in replica order, so results do not
//! depend on the number of worker threads.

mod exact;
mod group;
mod process;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::report::{Check, Outcome};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::rootsys::{build_root_system, RootSystem};
use crate::stats::MeanSe;

/// Relative floor added to standard errors of nearly deterministic estimates,
/// so that rounding noise is not read as a statistical deviation.
pub const SE_FLOOR: f64 = 1e-12;

/// Runs one suite at one seed.
pub fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::Identities => exact::identities(cfg),
        Experiment::Characters => exact::characters(cfg),
        Experiment::Radial => group::radial(cfg, seed),
        Experiment::Endorbit => group::endorbit(cfg, seed),
        Experiment::Kirillov => group::kirillov(cfg, seed),
        Experiment::Endpoint => group::endpoint(cfg, seed),
        Experiment::Condorbit => group::condorbit(cfg, seed),
        Experiment::Gauge => group::gauge(cfg, seed),
        Experiment::Martingale => process::martingale(cfg, seed),
        Experiment::PhiQ => process::phiq(cfg, seed),
        Experiment::Entrance => process::entrance(cfg, seed),
        Experiment::Intertwine => process::intertwine(cfg, seed),
        Experiment::Main => process::main_law(cfg, seed),
    }
}

/// Ranks the suite runs at: the configured rank if it is supported, else the defaults.
fn ranks(cfg: &ExperimentConfig, defaults: &[usize], supported: &[usize]) -> Result<Vec<usize>> {
    match cfg.rank {
        None => Ok(defaults.to_vec()),
        Some(r) if supported.contains(&r) => Ok(vec![r]),
        Some(r) => Err(Error::config(
            "rank",
            format!(
                "experiment `{}` supports ranks {supported:?}, got {r}",
                cfg.experiment
            ),
        )),
    }
}

fn root_system(cfg: &ExperimentConfig, rank: usize) -> Result<RootSystem> {
    build_root_system(cfg.family, rank)
}

/// Runs `f` for replicas `0..n` with the streams `(seed, tag, r)`.
fn par_replicas<T, F>(n: usize, seed: u64, tag: &str, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, tag, r);
            f(r, &mut rng)
        })
        .collect()
}

/// `|estimate − exact| / se`, with the standard error floored at
/// `SE_FLOOR · max(|exact|, |estimate|)`.
fn z_score(estimate: f64, se: f64, exact: f64) -> f64 {
    let floor = SE_FLOOR * exact.abs().max(estimate.abs());
    (estimate - exact).abs() / se.hypot(floor)
}

fn z_check(name: impl Into<String>, m: &MeanSe, exact: f64, k: f64) -> Check {
    Check::at_most(name, z_score(m.mean(), m.se(), exact), k).with_note(format!(
        "estimate {:.6e} ± {:.2e}, exact {:.6e}",
        m.mean(),
        m.se(),
        exact
    ))
}

/// Draws a point of the open alcove, uniformly among those at distance at
/// least `margin` from the walls.
fn uniform_alcove_point(rs: &RootSystem, margin: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use rand::Rng;
    let verts = rs.alcove_vertices();
    loop {
        let e: Vec<f64> = (0..verts.len())
            .map(|_| -rng.random::<f64>().ln())
            .collect();
        let s: f64 = e.iter().sum();
        let z: Vec<f64> = (0..rs.rank())
            .map(|c| verts.iter().zip(&e).map(|(v, w)| v[c] * w / s).sum())
            .collect();
        if rs.alcove_wall_distance(&z, 1.0) >= margin {
            return z;
        }
    }
}

/// Partition of the alcove into `m^n` congruent simplices (`n ≤ 2`):
/// intervals of equal length for rank one, the `m × m` triangle
/// subdivision for rank two.
struct AlcoveCells {
    rank: usize,
    m: usize,
    verts: Vec<Vec<f64>>,
    simple: Vec<Vec<f64>>,
}

/// Cell key `(i, j, upward)` in the subdivision lattice.
type CellKey = (usize, usize, bool);

impl AlcoveCells {
    fn new(rs: &RootSystem, m: usize) -> Result<Self> {
        if rs.rank() > 2 {
            return Err(Error::config(
                "rank",
                "alcove cells are implemented for ranks 1 and 2",
            ));
        }
        Ok(AlcoveCells {
            rank: rs.rank(),
            m,
            verts: rs.alcove_vertices(),
            simple: rs.simple_roots().to_vec(),
        })
    }

    /// Every cell key, in a fixed order.
    fn keys(&self) -> Vec<CellKey> {
        let m = self.m;
        if self.rank == 1 {
            return (0..m).map(|i| (i, 0, true)).collect();
        }
        let mut k = Vec::new();
        for i in 0..m {
            for j in 0..m - i {
                k.push((i, j, true));
                if i + j + 1 < m {
                    k.push((i, j, false));
                }
            }
        }
        k
    }

    // Barycentric coordinates on the vertices ω_k: the simple root values.
    fn bary(&self, z: &[f64]) -> Vec<f64> {
        self.simple
            .iter()
            .map(|a| a.iter().zip(z).map(|(p, q)| p * q).sum())
            .collect()
    }

    fn locate(&self, z: &[f64]) -> Option<CellKey> {
        let b = self.bary(z);
        let m = self.m as f64;
        if b.iter().any(|v| *v < 0.0) || b.iter().sum::<f64>() > 1.0 {
            return None;
        }
        let p: Vec<f64> = b.iter().map(|v| v * m).collect();
        let i = (p[0].floor() as usize).min(self.m - 1);
        if self.rank == 1 {
            return Some((i, 0, true));
        }
        let j = (p[1].floor() as usize).min(self.m - 1 - i);
        let up = (p[0] - i as f64) + (p[1] - j as f64) < 1.0 || i + j + 1 >= self.m;
        Some((i, j, up))
    }

    fn point(&self, p: &[f64]) -> Vec<f64> {
        (0..self.rank)
            .map(|c| {
                (0..self.rank)
                    .map(|k| p[k] / self.m as f64 * self.verts[k + 1][c])
                    .sum()
            })
            .collect()
    }

    fn cell_vertices(&self, key: CellKey) -> Vec<Vec<f64>> {
        let (i, j, up) = key;
        let (i, j) = (i as f64, j as f64);
        if self.rank == 1 {
            return vec![self.point(&[i]), self.point(&[i + 1.0])];
        }
        let lattice = if up {
            [[i, j], [i + 1.0, j], [i, j + 1.0]]
        } else {
            [[i + 1.0, j], [i, j + 1.0], [i + 1.0, j + 1.0]]
        };
        lattice.iter().map(|p| self.point(p)).collect()
    }
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let k = points.len() as f64;
    (0..points[0].len())
        .map(|c| points.iter().map(|p| p[c]).sum::<f64>() / k)
        .collect()
}

/// Compares cell means of `(z, value)` samples with `f` at the cell
/// barycenters. The discretisation error of a cell is half the range of `f`
/// over the points halfway between the barycenter and the cell vertices; it
/// is added in quadrature to the standard error. Returns the fraction of
/// evaluable cells (at least `min_count` samples) within `k` combined
/// standard errors, the number of evaluable cells and a table.
fn binned_regression(
    cells: &AlcoveCells,
    samples: &[(Vec<f64>, f64)],
    f: &dyn Fn(&[f64]) -> Result<f64>,
    k: f64,
    min_count: usize,
    table_name: &str,
) -> Result<(f64, usize, super::report::Table)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<CellKey, MeanSe> = BTreeMap::new();
    for (z, v) in samples {
        if let Some(key) = cells.locate(z) {
            acc.entry(key).or_default().push(*v);
        }
    }
    let mut cols = vec!["cell"];
    cols.extend(
        ["barycenter_1", "barycenter_2"][..cells.rank]
            .iter()
            .copied(),
    );
    cols.extend(["count", "mean", "se", "predicted", "discretisation", "z"]);
    let mut table = super::report::Table::new(table_name, &cols);
    let (mut good, mut evaluable) = (0usize, 0usize);
    for (idx, key) in cells.keys().into_iter().enumerate() {
        let verts = cells.cell_vertices(key);
        let c = centroid(&verts);
        let pred = f(&c)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &verts {
            let mid: Vec<f64> = c.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
            let val = f(&mid)?;
            lo = lo.min(val);
            hi = hi.max(val);
        }
        let disc = 0.5 * (hi - lo);
        let m = acc.get(&key).copied().unwrap_or_default();
        let se = m.se().hypot(disc);
        let z = if m.count() >= min_count {
            z_score(m.mean(), se, pred)
        } else {
            f64::NAN
        };
        if m.count() >= min_count {
            evaluable += 1;
            good += (z <= k) as usize;
        }
        let mut row = vec![idx as f64];
        row.extend(&c);
        row.extend([m.count() as f64, m.mean(), m.se(), pred, disc, z]);
        table.push(row);
    }
    let frac = if evaluable == 0 {
        0.0
    } else {
        good as f64 / evaluable as f64
    };
    Ok((frac, evaluable, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_tile_the_alcove() {
        for n in 1..=2 {
            let rs = build_root_system(crate::rootsys::Family::A, n).unwrap();
            let cells = AlcoveCells::new(&rs, 6).unwrap();
            let keys = cells.keys();
            assert_eq!(keys.len(), 6usize.pow(n as u32));
            let mut rng = stream(1, "cells", 0);
            for _ in 0..2000 {
                let z = uniform_alcove_point(&rs, 0.0, &mut rng);
                let key = cells.locate(&z).unwrap();
                assert!(keys.contains(&key));
                // The point lies in the convex hull of its cell.
                let v = cells.cell_vertices(key);
                let b = cells.bary(&z);
                let bv: Vec<Vec<f64>> = v.iter().map(|p| cells.bary(p)).collect();
                for c in 0..n {
                    let lo = bv.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
                    let hi = bv.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
                    assert!(b[c] >= lo - 1e-12 && b[c] <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn z_score_floor() {
        assert_eq!(z_score(1.0, 0.0, 1.0), 0.0);
        assert!(z_score(1.0 + 1e-15, 0.0, 1.0) < 1.0);
        assert!((z_score(1.3, 0.1, 1.0) - 3.0).abs() < 1e-9);
    }
}
