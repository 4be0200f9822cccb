//! Deterministic suites: series identities and character values.

use std::time::Instant;

use rand::Rng;

use super::{ranks, root_system, uniform_alcove_point};
use crate::affinephi::{phi_hat_charsum, phi_hat_d, phi_hat_lattice, theta_pair, PhiArgs};
use crate::charfun::{
    generic_direction, radial_normalizer, to_complex, weyl_character, weyl_dimension, HeatKernel,
    C64,
};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Check, Outcome, Table};
use crate::rng::stream;

const TWO_FORM_POINTS: usize = 50;
const TWO_FORM_TOL: f64 = 1e-8;
const THETA_TOL: f64 = 1e-10;
const WALL_TOL: f64 = 1e-8;
const IDENTITY_BUDGET_S: f64 = 30.0;
const CHARACTER_BUDGET_S: f64 = 10.0;

fn rel_diff(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

pub(super) fn identities(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let tr = &cfg.truncation;
    let mut out = Outcome::default();
    for n in ranks(cfg, &[1, 2], &[1, 2, 3, 4])? {
        let rs = root_system(cfg, n)?;
        let mut rng = stream(cfg.seed, "identities", n as u64);

        // Lattice form against character form at random regular points.
        let mut table = Table::new(
            format!("two_forms_A{n}"),
            &[
                "sigma",
                "re_y_norm",
                "im_y_norm",
                "lattice_re",
                "character_re",
                "rel_diff",
            ],
        );
        let mut worst = 0f64;
        while table.rows.len() < TWO_FORM_POINTS {
            let z = uniform_alcove_point(&rs, 0.02, &mut rng);
            let sigma = 1.0 / rng.random_range(4.0..8.0);
            let y: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)))
                .collect();
            let args = PhiArgs {
                b: 1.0,
                y: y.clone(),
                a: 1.0 / sigma,
                x: z.iter().map(|v| v / sigma).collect(),
            };
            let lattice = match phi_hat_lattice(&rs, &args, tr) {
                Err(Error::SingularInput(_)) => continue,
                other => other?,
            };
            let chars = phi_hat_charsum(&rs, sigma, &z, &y, tr)?;
            let d = rel_diff(lattice, chars);
            worst = worst.max(d);
            let norm = |f: fn(&C64) -> f64| y.iter().map(|v| f(v).powi(2)).sum::<f64>().sqrt();
            table.push(vec![
                sigma,
                norm(|v| v.re),
                norm(|v| v.im),
                lattice.re,
                chars.re,
                d,
            ]);
        }
        out.check(Check::at_most(
            format!("A{n} lattice vs character form, max relative difference"),
            worst,
            TWO_FORM_TOL,
        ));
        out.tables.push(table);

        // Theta Poisson identity on a 5 × 5 grid.
        let mut table = Table::new(
            format!("theta_A{n}"),
            &["x_norm", "t", "lhs", "rhs", "ratio"],
        );
        let dir = generic_direction(n);
        let mut ratios = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let t = 0.2 + 0.4 * j as f64;
                let x: Vec<f64> = dir.iter().map(|v| 0.17 * i as f64 * v).collect();
                let (l, r) = theta_pair(&rs, &x, t, tr)?;
                ratios.push(l / r);
                table.push(vec![0.17 * i as f64, t, l, r, l / r]);
            }
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        out.check(Check::at_most(
            format!("A{n} theta ratio relative spread"),
            (hi - lo) / mean,
            THETA_TOL,
        ));
        out.check(Check::at_most(
            format!("A{n} theta ratio vs sqrt(n+1)"),
            (mean / ((n + 1) as f64).sqrt() - 1.0).abs(),
            THETA_TOL,
        ));
        out.tables.push(table);

        // Sign of φ̂_d: zero on the walls, positive inside.
        let verts = rs.alcove_vertices();
        let mut wall_worst = 0f64;
        let mut min_inside = f64::INFINITY;
        for &t in &[0.3, 1.0, 2.5, 8.0] {
            let scale_pt: Vec<f64> = rs.alcove_barycenter().iter().map(|v| v * t).collect();
            let scale = phi_hat_d(&rs, t, &scale_pt, tr)?;
            for skip in 0..verts.len() {
                let others: Vec<&Vec<f64>> = verts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, v)| v)
                    .collect();
                let x: Vec<f64> = (0..n)
                    .map(|c| t * others.iter().map(|v| v[c]).sum::<f64>() / others.len() as f64)
                    .collect();
                wall_worst = wall_worst.max(phi_hat_d(&rs, t, &x, tr)?.abs() / scale);
            }
            for _ in 0..10 {
                let z = uniform_alcove_point(&rs, 0.02, &mut rng);
                let x: Vec<f64> = z.iter().map(|v| v * t).collect();
                min_inside = min_inside.min(phi_hat_d(&rs, t, &x, tr)? / scale);
            }
        }
        out.check(Check::at_most(
            format!("A{n} |phi_d| on walls / interior scale"),
            wall_worst,
            WALL_TOL,
        ));
        out.check(Check::above(
            format!("A{n} min phi_d / scale at interior points"),
            min_inside,
            0.0,
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    out.summary("runtime_seconds", elapsed);
    out.check(Check::at_most(
        "runtime seconds",
        elapsed,
        IDENTITY_BUDGET_S,
    ));
    Ok(out)
}

pub(super) fn characters(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let tr = &cfg.truncation;
    let mut out = Outcome::default();
    for n in ranks(cfg, &[1, 2, 3], &[1, 2, 3, 4])? {
        let rs = root_system(cfg, n)?;
        let mut weights = rs.dominant_weights_ball(10.0)?;
        weights.truncate(10);
        if weights.len() < 10 {
            return Err(Error::Internal(
                "fewer than ten dominant weights in the search ball".into(),
            ));
        }
        let zero = vec![C64::new(0.0, 0.0); n];
        let mut table = Table::new(
            format!("dimensions_A{n}"),
            &["weight_index", "weyl_dimension", "character_at_identity"],
        );
        let mut worst_dim = 0f64;
        for (i, w) in weights.iter().enumerate() {
            let d = weyl_dimension(&rs, w);
            let c = weyl_character(&rs, w, &zero)?;
            worst_dim = worst_dim.max((c - d).norm());
            table.push(vec![i as f64, d, c.re]);
        }
        out.tables.push(table);
        out.check(Check::at_most(
            format!("A{n} |ch(e^0) - dim| over 10 lowest weights"),
            worst_dim,
            0.0,
        ));

        let mut rng = stream(cfg.seed, "characters", n as u64);
        let mut excess = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xc = to_complex(&x);
            for w in &weights {
                let d = weyl_dimension(&rs, w);
                excess = excess.max((weyl_character(&rs, w, &xc)?.norm() - d) / d);
            }
        }
        out.check(Check::at_most(
            format!("A{n} max (|ch| - dim)/dim at 1000 points"),
            excess,
            1e-9,
        ));

        let hk = HeatKernel::new(&rs, 0.5, tr)?;
        let trivial = hk
            .weights()
            .iter()
            .position(|w| w.dynkin.iter().all(|&d| d == 0))
            .ok_or_else(|| Error::Internal("trivial weight missing from the heat kernel".into()))?;
        out.check(Check::at_most(
            format!("A{n} |trivial coefficient of p - 1|"),
            (hk.coefficients()[trivial] - 1.0).abs(),
            0.0,
        ));
        if n <= 2 {
            // ∫_A p|π|² equals the covolume √(n+1) of the coroot lattice.
            let mass = radial_normalizer(&rs, 0.5, tr)?;
            out.check(Check::at_most(
                format!("A{n} relative error of the radial mass"),
                (mass / ((n + 1) as f64).sqrt() - 1.0).abs(),
                1e-6,
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    out.summary("runtime_seconds", elapsed);
    out.check(Check::at_most(
        "runtime seconds",
        elapsed,
        CHARACTER_BUDGET_S,
    ));
    Ok(out)
}
