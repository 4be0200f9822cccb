//! Monte Carlo suites on the compact group.

use std::f64::consts::{PI, SQRT_2};

use super::{binned_regression, par_replicas, ranks, root_system, z_check, AlcoveCells};
use crate::affinephi::{phi_hat, phi_hat_d};
use crate::charfun::{
    generic_direction, kirillov_ratio, to_complex, weyl_character, weyl_dimension, HeatKernel, C64,
};
use crate::error::Result;
use crate::groupsim::{
    gauge_residual, haar_sample, loop_on_grid, rad_of_bm, radial_part, sample_bm_path,
    stochastic_exponential, torus_element, GroupElement,
};
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, Outcome, Table};
use crate::rootsys::RootSystem;
use crate::stats::{ks_one_sample, MeanSe};

const P_MIN: f64 = 0.01;
const CELL_FRACTION: f64 = 0.9;
const MIN_CELL_COUNT: usize = 30;

/// CDF of `α(rad)` for rank one, tabulated from the radial density.
fn radial_cdf(rs: &RootSystem, hk: &HeatKernel, points: usize) -> Vec<f64> {
    let h = 1.0 / points as f64;
    let dens: Vec<f64> = (0..=points)
        .map(|k| hk.radial_density(rs, &[k as f64 * h / SQRT_2]))
        .collect();
    let mut cdf = vec![0.0; points + 1];
    for k in 1..=points {
        cdf[k] = cdf[k - 1] + 0.5 * h * (dens[k - 1] + dens[k]);
    }
    let total = cdf[points];
    cdf.iter_mut().for_each(|v| *v /= total);
    cdf
}

fn interpolate(table: &[f64], u: f64) -> f64 {
    let m = table.len() - 1;
    let p = (u.clamp(0.0, 1.0)) * m as f64;
    let k = (p.floor() as usize).min(m - 1);
    let f = p - k as f64;
    table[k] * (1.0 - f) + table[k + 1] * f
}

pub(super) fn radial(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    ranks(cfg, &[1], &[1])?;
    let rs = root_system(cfg, 1)?;
    let sigma = 1.0;
    let n = cfg.replicas.unwrap_or(20_000);
    let steps = cfg.steps.unwrap_or(2_000);
    let us: Vec<f64> = par_replicas(n, seed, "radial", |_, rng| {
        Ok(rs.root_values(rad_of_bm(&rs, sigma, steps, rng)?.coords())[0])
    })?;
    let hk = HeatKernel::new(&rs, sigma, &cfg.truncation)?;
    let cdf = radial_cdf(&rs, &hk, 8_000);
    let (d, p) = ks_one_sample(&us, |u| interpolate(&cdf, u))?;
    let mut out = Outcome::default();
    out.check(
        Check::above("KS p-value, alpha(rad) vs radial density", p, P_MIN)
            .with_note(format!("D = {d:.4e}, N = {n}, S = {steps}")),
    );
    let mut t = Table::new("samples", &["alpha_of_rad"]);
    us.iter().for_each(|u| t.push(vec![*u]));
    out.tables.push(t);
    out.summary("ks_statistic", d);
    out.summary("ks_p", p);
    Ok(out)
}

/// `Σ_λ coef_λ/dim_λ · ch_λ(e^{−a}) ch_λ(e^{b})`.
fn orbit_character_sum(rs: &RootSystem, hk: &HeatKernel, a: &[f64], b: &[f64]) -> Result<f64> {
    let na: Vec<f64> = a.iter().map(|v| -v).collect();
    let mut s = 0.0;
    for (w, c) in hk.weights().iter().zip(hk.coefficients()) {
        let d = weyl_dimension(rs, w);
        let v: C64 =
            weyl_character(rs, w, &to_complex(&na))? * weyl_character(rs, w, &to_complex(b))?;
        s += c / d * v.re;
    }
    Ok(s)
}

pub(super) fn endorbit(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    ranks(cfg, &[1], &[1])?;
    let rs = root_system(cfg, 1)?;
    let n = cfg.replicas.unwrap_or(100_000);
    let haar: Vec<GroupElement> =
        par_replicas(n, seed, "endorbit", |_, rng| Ok(haar_sample(&rs, rng)))?;
    let grid = [0.2, 0.5, 0.8];
    let mut out = Outcome::default();
    let mut table = Table::new(
        "grid",
        &[
            "s_sigma",
            "alpha_k1",
            "alpha_k2",
            "mc_mean",
            "mc_se",
            "character_sum",
            "z",
        ],
    );
    // sσ = 1 as the headline case; sσ = 0.1 keeps the higher characters visible.
    for &time in &[1.0, 0.1] {
        let hk = HeatKernel::new(&rs, time, &cfg.truncation)?;
        for &a1 in &grid {
            for &a2 in &grid {
                let k1 = [a1 / SQRT_2];
                let k2 = [a2 / SQRT_2];
                let g1inv = torus_element(&rs, &[-k1[0]]);
                let g2 = torus_element(&rs, &k2);
                let vals: Vec<f64> = par_replicas(n, seed, "endorbit-eval", |r, _| {
                    let u = &haar[r as usize];
                    let g = g1inv.mul(u).mul(&g2).mul(&u.adjoint());
                    Ok(hk.value(&rs, radial_part(&rs, &g)?.coords()))
                })?;
                let m = MeanSe::from_values(vals);
                let exact = orbit_character_sum(&rs, &hk, &k1, &k2)?;
                let c = z_check(
                    format!("s_sigma={time} alpha(k1)={a1} alpha(k2)={a2}: |MC - series|/SE"),
                    &m,
                    exact,
                    4.0,
                );
                table.push(vec![time, a1, a2, m.mean(), m.se(), exact, c.statistic]);
                out.check(c);
            }
        }
    }
    out.tables.push(table);
    Ok(out)
}

pub(super) fn kirillov(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let n = cfg.replicas.unwrap_or(100_000);
    let mut out = Outcome::default();
    let mut table = Table::new(
        "pairs",
        &["rank", "pair", "x_scale", "mc_mean", "mc_se", "ratio", "z"],
    );
    for rank in ranks(cfg, &[1, 2], &[1, 2, 3])? {
        let rs = root_system(cfg, rank)?;
        let pairs: Vec<(f64, Vec<i64>)> = [(0.5, 0), (0.8, 1), (0.4, 2), (1.5, 0), (-0.6, 3)]
            .iter()
            .map(|&(s, k)| {
                let mut d = vec![0i64; rank];
                d[0] = k;
                if rank > 1 && k > 0 {
                    d[rank - 1] = k - 1;
                }
                (s, d)
            })
            .collect();
        let haar: Vec<GroupElement> =
            par_replicas(n, seed, &format!("kirillov-A{rank}"), |_, rng| {
                Ok(haar_sample(&rs, rng))
            })?;
        for (idx, (scale, dynkin)) in pairs.iter().enumerate() {
            let w = rs.weight_from_dynkin(dynkin);
            let lambda: Vec<f64> = w.coords.iter().zip(rs.rho()).map(|(a, b)| a + b).collect();
            let x: Vec<f64> = generic_direction(rank).iter().map(|v| v * scale).collect();
            let lh = rs.to_ambient(&lambda);
            let xh = rs.to_ambient(&x);
            let m_dim = rs.ambient_dim();
            let vals: Vec<f64> = haar
                .iter()
                .map(|u| {
                    let mut e = 0.0;
                    for j in 0..m_dim {
                        let beta: f64 = (0..m_dim)
                            .map(|k| u.matrix[(j, k)].norm_sqr() * lh[k])
                            .sum();
                        e += beta * xh[j];
                    }
                    e.exp()
                })
                .collect();
            let m = MeanSe::from_values(vals);
            let exact = kirillov_ratio(&rs, &to_complex(&x), &lambda)?.re;
            let c = z_check(format!("A{rank} pair {idx} (lambda = weight {dynkin:?} + rho, |x| = {}): |MC - ratio|/SE", scale.abs()), &m, exact, 3.0);
            table.push(vec![
                rank as f64,
                idx as f64,
                *scale,
                m.mean(),
                m.se(),
                exact,
                c.statistic,
            ]);
            out.check(c);
        }
    }
    out.tables.push(table);
    Ok(out)
}

/// Samples `(rad(x), e^{(y, x_t)/σ})` with `x_t` the Cartan part of the path at time `t`.
fn endpoint_samples(
    rs: &RootSystem,
    sigma: f64,
    y: &[f64],
    t_fraction: f64,
    n: usize,
    steps: usize,
    seed: u64,
    tag: &str,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let k_end = (t_fraction * steps as f64).round() as usize;
    par_replicas(n, seed, tag, |_, rng| {
        let p = sample_bm_path(rs, sigma, steps, rng)?;
        let mut xt = vec![0.0; rs.rank()];
        for inc in &p.increments[..k_end] {
            for (a, b) in xt.iter_mut().zip(inc) {
                *a += b;
            }
        }
        let e = stochastic_exponential(rs, &p, 1.0, false)?;
        let r = radial_part(rs, &e.endpoint)?.into_coords();
        let pair: f64 = y.iter().zip(&xt).map(|(a, b)| a * b).sum();
        Ok((r, (pair / sigma).exp()))
    })
}

fn phi_ratio(
    rs: &RootSystem,
    sigma: f64,
    y: &[f64],
    z: &[f64],
    cfg: &ExperimentConfig,
) -> Result<f64> {
    let tau = 1.0 / sigma;
    let pos: Vec<f64> = z.iter().map(|v| v * tau).collect();
    Ok(phi_hat(rs, tau, &pos, &to_complex(y), &cfg.truncation)?.re
        / phi_hat_d(rs, tau, &pos, &cfg.truncation)?)
}

pub(super) fn endpoint(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    for rank in ranks(cfg, &[1], &[1, 2])? {
        let rs = root_system(cfg, rank)?;
        let n = cfg.replicas.unwrap_or(1_000_000);
        let steps = cfg.steps.unwrap_or(200);
        let (coarse, fine) = if rank == 1 { (50, 100) } else { (10, 20) };
        // σ = 1 as specified; σ = 0.1, where the ratio varies across the alcove, as a sharper probe.
        for (sigma, y_scale, share) in [(1.0, 0.5, 1usize), (0.1, 0.4, 5)] {
            let y: Vec<f64> = generic_direction(rank)
                .iter()
                .map(|v| v * y_scale)
                .collect();
            let samples = endpoint_samples(
                &rs,
                sigma,
                &y,
                1.0,
                n / share,
                steps,
                seed,
                &format!("endpoint-A{rank}-{sigma}"),
            )?;
            let f = |z: &[f64]| phi_ratio(&rs, sigma, &y, z, cfg);
            for m in [coarse, fine] {
                let cells = AlcoveCells::new(&rs, m)?;
                let name = format!("A{rank}_sigma{sigma}_cells{}", cells.keys().len());
                let (frac, evaluable, table) =
                    binned_regression(&cells, &samples, &f, 3.0, MIN_CELL_COUNT, &name)?;
                out.check(
                    Check::at_least(
                        format!(
                            "A{rank} sigma={sigma}: fraction of {} cells within 3 combined SE",
                            cells.keys().len()
                        ),
                        frac,
                        CELL_FRACTION,
                    )
                    .with_note(format!(
                        "{evaluable} cells with at least {MIN_CELL_COUNT} samples, N = {}",
                        n / share
                    )),
                );
                out.tables.push(table);
            }
        }
    }
    Ok(out)
}

pub(super) fn condorbit(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    ranks(cfg, &[1], &[1])?;
    let rs = root_system(cfg, 1)?;
    let sigma = 0.1;
    let t = 0.6;
    let n = cfg.replicas.unwrap_or(200_000);
    let steps = cfg.steps.unwrap_or(200);
    let y = vec![0.4];
    let hk = HeatKernel::new(&rs, sigma, &cfg.truncation)?;
    let neg_ty = to_complex(&[-t * y[0]]);
    let chy: Vec<f64> = hk
        .weights()
        .iter()
        .map(|w| Ok(weyl_character(&rs, w, &neg_ty)?.re))
        .collect::<Result<_>>()?;
    let dims: Vec<f64> = hk
        .weights()
        .iter()
        .map(|w| weyl_dimension(&rs, w))
        .collect();
    let coefs = hk.coefficients();
    let prefactor = (t * y[0] * y[0] / (2.0 * sigma)).exp();
    let f = |z: &[f64]| -> Result<f64> {
        let mut num = 0.0;
        for ((w, c), (cy, d)) in hk.weights().iter().zip(&coefs).zip(chy.iter().zip(&dims)) {
            num += c / d * cy * weyl_character(&rs, w, &to_complex(z))?.re;
        }
        Ok(prefactor * num / hk.value(&rs, z))
    };
    let samples = endpoint_samples(&rs, sigma, &y, t, n, steps, seed, "condorbit")?;
    let cells = AlcoveCells::new(&rs, 20)?;
    let (frac, evaluable, table) =
        binned_regression(&cells, &samples, &f, 3.0, MIN_CELL_COUNT, "cells")?;
    let mut out = Outcome::default();
    out.check(
        Check::at_least(
            "fraction of 20 cells within 3 combined SE",
            frac,
            CELL_FRACTION,
        )
        .with_note(format!(
            "{evaluable} evaluable cells, sigma = {sigma}, t = {t}, N = {n}"
        )),
    );
    out.tables.push(table);
    Ok(out)
}

pub(super) fn gauge(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    for rank in ranks(cfg, &[1], &[1, 2, 3])? {
        let rs = root_system(cfg, rank)?;
        let reps = cfg.replicas.unwrap_or(100);
        let fine = cfg.steps.unwrap_or(1024);
        let dim = rs.algebra_dim();
        let generator = move |s: f64| -> Vec<f64> {
            let w = 2.0 * PI * s;
            (0..dim)
                .map(|c| {
                    let k = (c % 3 + 1) as f64;
                    (0.4 / k) * (k * w).sin() + 0.1 * (c % 2) as f64 * (1.0 - w.cos())
                })
                .collect()
        };
        let levels: Vec<usize> = [8usize, 4, 2, 1].iter().map(|d| fine / d).collect();
        let mut table = Table::new(format!("levels_A{rank}"), &["steps", "mean_residual", "se"]);
        let mut means = Vec::new();
        for &level in &levels {
            let gammas = loop_on_grid(&rs, generator, level)?;
            let vals = par_replicas(reps, seed, &format!("gauge-A{rank}"), |_, rng| {
                let p = sample_bm_path(&rs, 1.0, fine, rng)?.coarsen(fine / level)?;
                gauge_residual(&rs, &gammas, &p, 1.0)
            })?;
            let m = MeanSe::from_values(vals);
            table.push(vec![level as f64, m.mean(), m.se()]);
            means.push(m.mean());
        }
        for (k, w) in means.windows(2).enumerate() {
            let ratio = w[0] / w[1];
            out.check(
                Check::at_most(
                    format!(
                        "A{rank} |residual ratio - 2| at {} -> {} steps",
                        levels[k],
                        levels[k + 1]
                    ),
                    (ratio - 2.0).abs(),
                    0.6,
                )
                .with_note(format!("ratio {ratio:.4}")),
            );
        }
        out.tables.push(table);
    }
    Ok(out)
}
