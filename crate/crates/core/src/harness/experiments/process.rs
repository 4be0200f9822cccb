//! Suites for the space-time motion in the affine chamber.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use super::{par_replicas, ranks, root_system, z_check, z_score};
use crate::affinephi::{phi_hat, phi_hat_d};
use crate::charfun::{generic_direction, to_complex, Truncation};
use crate::doobsim::{
    radial_entrance, weighted_expectation, ConditionedSimulator, EntranceSampler, SimOptions,
    SpaceTimePoint, DEFAULT_T0,
};
use crate::error::{Error, Result};
use crate::groupsim::{
    radial_part, sample_bm_path, sample_sheet, sheet_radial_process, stochastic_exponential,
};
use crate::harness::config::{EntranceChoice, ExperimentConfig};
use crate::harness::report::{Check, Outcome, Relation, Table};
use crate::rng::stream;
use crate::rootsys::RootSystem;
use crate::stats::{chi_square, energy_test, two_sample_stats, MeanSe, ENERGY_PERMUTATIONS};

const P_MIN: f64 = 0.01;
const RADIAL_ENTRANCE_STEPS: usize = 400;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// `φ̂_{d+y}(τ, b) / φ̂_d(τ, b)` for real `y`.
fn phi_ratio(rs: &RootSystem, tau: f64, b: &[f64], y: &[f64], tr: &Truncation) -> Result<f64> {
    Ok(phi_hat(rs, tau, b, &to_complex(y), tr)?.re / phi_hat_d(rs, tau, b, tr)?)
}

/// `n` entrance samples at `t0`, replica `r` drawn from the stream `(seed, tag, r)`.
/// Returns the samples and, for rejection, the acceptance rate.
fn entrance_points(
    rs: &RootSystem,
    t0: f64,
    n: usize,
    mode: EntranceChoice,
    tr: &Truncation,
    seed: u64,
    tag: &str,
) -> Result<(Vec<SpaceTimePoint>, f64)> {
    match mode {
        EntranceChoice::Rejection => {
            let mut sampler = EntranceSampler::new(rs, t0, tr)?;
            let mut pts = Vec::with_capacity(n);
            for r in 0..n as u64 {
                let mut rng = stream(seed, tag, r);
                pts.push(sampler.sample(&mut rng)?);
            }
            Ok((pts, sampler.acceptance_rate()))
        }
        EntranceChoice::Radial => {
            let pts = par_replicas(n, seed, tag, |_, rng| {
                radial_entrance(rs, t0, RADIAL_ENTRANCE_STEPS, rng)
            })?;
            Ok((pts, 1.0))
        }
    }
}

/// Conditioned evolution of each start point, recording `b/τ` at the
/// absolute times `times`. Replicas ending in a step failure are dropped
/// and counted.
fn evolve(
    sim: &ConditionedSimulator,
    starts: &[SpaceTimePoint],
    times: &[f64],
    dt: f64,
    seed: u64,
    tag: &str,
) -> Result<(Vec<Vec<Vec<f64>>>, usize)> {
    let t_start = starts[0].tau;
    let horizon = times.last().copied().unwrap_or(t_start) - t_start;
    let steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / steps as f64;
    let idx: Vec<usize> = times
        .iter()
        .map(|t| ((t - t_start) / h).round() as usize)
        .collect();
    let res = par_replicas(starts.len(), seed, tag, |r, rng| {
        match sim.simulate(&starts[r as usize], horizon, SimOptions::new(dt), rng) {
            Ok(traj) => Ok(Some(
                idx.iter()
                    .map(|&k| traj.points[k].ratio())
                    .collect::<Vec<_>>(),
            )),
            Err(Error::StepFailure { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let failures = res.iter().filter(|v| v.is_none()).count();
    Ok((res.into_iter().flatten().collect(), failures))
}

pub(super) fn martingale(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let tr = &cfg.truncation;
    for rank in ranks(cfg, &[1], &[1, 2])? {
        let rs = root_system(cfg, rank)?;
        let n = cfg.replicas.unwrap_or(20_000);
        let times = cfg.t_grid.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
        // u above the largest time keeps the martingale square integrable.
        let u = 2.0 * times.last().copied().unwrap_or(1.0);
        let x = scaled(&rs.alcove_barycenter(), u);
        let y = scaled(&generic_direction(rank), 0.7);
        let yy = dot(&y, &y);
        let m0 = phi_hat(&rs, u, &x, &to_complex(&y), tr)?.re;
        let vals: Vec<Vec<f64>> =
            par_replicas(n, seed, &format!("martingale-A{rank}"), |_, rng| {
                let mut b = x.clone();
                let mut prev = 0.0;
                let mut row = Vec::with_capacity(times.len());
                for &t in &times {
                    let sd = (t - prev).sqrt();
                    prev = t;
                    for v in b.iter_mut() {
                        let z: f64 = StandardNormal.sample(rng);
                        *v += sd * z;
                    }
                    row.push(
                        (-yy * t / 2.0).exp() * phi_hat(&rs, u + t, &b, &to_complex(&y), tr)?.re,
                    );
                }
                Ok(row)
            })?;
        let mut table = Table::new(
            format!("A{rank}"),
            &["t", "mean", "se", "initial_value", "z"],
        );
        for (k, &t) in times.iter().enumerate() {
            let m = MeanSe::from_values(vals.iter().map(|r| r[k]));
            let c = z_check(
                format!("A{rank} t={t}: |mean - initial value|/SE"),
                &m,
                m0,
                3.0,
            );
            table.push(vec![t, m.mean(), m.se(), m0, c.statistic]);
            out.check(c);
        }
        out.tables.push(table);
    }
    Ok(out)
}

pub(super) fn phiq(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    for rank in ranks(cfg, &[1], &[1, 2])? {
        // u = 0.2 as specified; u = 10, where the ratio varies over the alcove
        // and free paths survive, exercises both estimators non-trivially.
        for u in [0.2, 10.0] {
            phiq_at(cfg, seed, rank, u, &mut out)?;
        }
    }
    Ok(out)
}

fn phiq_at(
    cfg: &ExperimentConfig,
    seed: u64,
    rank: usize,
    u: f64,
    out: &mut Outcome,
) -> Result<()> {
    let tr = &cfg.truncation;
    let rs = root_system(cfg, rank)?;
    let n = cfg.replicas.unwrap_or(10_000);
    let dt = cfg.dt.unwrap_or(1e-3);
    let horizon = 0.5;
    let tag = format!("A{rank} u={u}");
    let start = SpaceTimePoint::new(&rs, u, scaled(&rs.alcove_barycenter(), u))?;
    let ys: Vec<Vec<f64>> = [0.3, 0.6, 1.0]
        .iter()
        .map(|s| scaled(&generic_direction(rank), *s))
        .collect();
    let sim = ConditionedSimulator::new(&rs, u + horizon, tr)?;
    let ends: Vec<Option<SpaceTimePoint>> =
        par_replicas(n, seed, &format!("phiq-{tag}"), |_, rng| {
            match sim.simulate(&start, horizon, SimOptions::new(dt), rng) {
                Ok(traj) => Ok(Some(traj.last().clone())),
                Err(Error::StepFailure { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })?;
    let failures = ends.iter().filter(|e| e.is_none()).count();
    let ends: Vec<SpaceTimePoint> = ends.into_iter().flatten().collect();
    out.summary(
        format!("{tag} step_failure_rate"),
        failures as f64 / n as f64,
    );
    let mut table = Table::new(
        format!("A{rank}_u{u}"),
        &[
            "y_norm",
            "h_transform_mean",
            "h_transform_se",
            "closed_form",
            "weighted_mean",
            "weighted_se",
        ],
    );
    for y in &ys {
        let yn = dot(y, y).sqrt();
        let closed = phi_ratio(&rs, u, &start.b, y, tr)? * (dot(y, y) * horizon / 2.0).exp();
        let vals = ends
            .iter()
            .map(|p| phi_ratio(&rs, p.tau, &p.b, y, tr))
            .collect::<Result<Vec<_>>>()?;
        let m = MeanSe::from_values(vals);
        out.check(z_check(
            format!("{tag} |y|={yn:.2}: h-transform vs closed form (SE units)"),
            &m,
            closed,
            3.0,
        ));
        let functional = |path: &[SpaceTimePoint]| -> f64 {
            let p = path.last().expect("non-empty path");
            phi_ratio(&rs, p.tau, &p.b, y, tr).unwrap_or(f64::NAN)
        };
        let name = format!("{tag} |y|={yn:.2}: weighted vs h-transform (combined SE units)");
        match weighted_expectation(&rs, &start, horizon, dt, &functional, tr, n, seed) {
            Ok(w) => {
                let z = (w.value - m.mean()).abs()
                    / w.stderr.hypot(m.se()).hypot(super::SE_FLOOR * closed.abs());
                out.check(Check::at_most(name, z, 3.0).with_note(format!(
                    "weighted {:.6e} ± {:.2e} from {} surviving paths",
                    w.value, w.stderr, w.effective
                )));
                table.push(vec![yn, m.mean(), m.se(), closed, w.value, w.stderr]);
            }
            Err(Error::Degenerate(msg)) => {
                out.check(Check::failed(
                    name,
                    Relation::AtMost,
                    3.0,
                    format!("weighted estimator degenerate: {msg}"),
                ));
                table.push(vec![yn, m.mean(), m.se(), closed, f64::NAN, f64::NAN]);
            }
            Err(e) => return Err(e),
        }
    }
    out.tables.push(table);
    Ok(())
}

/// Probabilities of `20` equal bins of `α ∈ [0, 1]` under the density `2 sin²(πα)`.
fn sin2_bin_probs(bins: usize) -> Vec<f64> {
    let prim = |a: f64| a - (2.0 * PI * a).sin() / (2.0 * PI);
    (0..bins)
        .map(|k| prim((k + 1) as f64 / bins as f64) - prim(k as f64 / bins as f64))
        .collect()
}

fn alphas(rs: &RootSystem, pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    pts.iter().map(|z| vec![rs.root_values(z)[0]]).collect()
}

pub(super) fn entrance(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    ranks(cfg, &[1], &[1])?;
    let rs = root_system(cfg, 1)?;
    let tr = &cfg.truncation;
    let n = cfg.replicas.unwrap_or(10_000);
    let t0 = cfg.t0.unwrap_or(DEFAULT_T0);
    let dt = cfg.dt.unwrap_or(1e-3);
    let mut out = Outcome::default();
    let mut rng = stream(seed, "entrance-stats", 0);

    // Rejection and radial modes at t0.
    let (rej, rate) = entrance_points(
        &rs,
        t0,
        n,
        EntranceChoice::Rejection,
        tr,
        seed,
        "entrance-rejection",
    )?;
    let (rad, _) = entrance_points(
        &rs,
        t0,
        n,
        EntranceChoice::Radial,
        tr,
        seed,
        "entrance-radial",
    )?;
    out.summary("acceptance_rate_t0", rate);
    let non_interior = rej
        .iter()
        .chain(&rad)
        .filter(|p| !p.is_interior(&rs))
        .count();
    out.check(Check::at_most(
        "entrance samples outside the open chamber",
        non_interior as f64,
        0.0,
    ));
    let ra: Vec<Vec<f64>> = rej.iter().map(|p| p.ratio()).collect();
    let rb: Vec<Vec<f64>> = rad.iter().map(|p| p.ratio()).collect();
    let st = two_sample_stats(&alphas(&rs, &ra), &alphas(&rs, &rb), &mut rng)?;
    out.check(
        Check::above(
            format!("t0={t0}: rejection vs radial mode, KS p"),
            st.ks_p,
            P_MIN,
        )
        .with_note(format!("D = {:.4e}", st.ks_stat)),
    );

    // Small-time limit: b_t/t against C π² on 20 bins.
    let t_small = 0.01;
    let n_small = 2 * n;
    let (small, rate_small) = entrance_points(
        &rs,
        t_small,
        n_small,
        EntranceChoice::Rejection,
        tr,
        seed,
        "entrance-small",
    )?;
    out.summary("acceptance_rate_t0.01", rate_small);
    let bins = 20;
    let mut counts = vec![0u64; bins];
    for p in &small {
        let a = rs.root_values(&p.ratio())[0];
        counts[((a * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let probs = sin2_bin_probs(bins);
    let (chi2, dof, p) = chi_square(&counts, &probs)?;
    out.check(
        Check::above(
            format!("t={t_small}: chi-square p vs C pi^2 (20 bins)"),
            p,
            P_MIN,
        )
        .with_note(format!("chi2 = {chi2:.3}, dof = {dof}")),
    );
    let mut table = Table::new("small_time_bins", &["bin", "count", "expected"]);
    for (k, c) in counts.iter().enumerate() {
        table.push(vec![k as f64, *c as f64, probs[k] * n_small as f64]);
    }
    out.tables.push(table);

    // Entrance at t0 evolved to t1 matches the entrance law at t1.
    let t1 = 0.5;
    let sim = ConditionedSimulator::new(&rs, t1, tr)?;
    let (evolved, failures) = evolve(&sim, &rej, &[t1], dt, seed, "entrance-evolve")?;
    out.summary("step_failures", failures as f64);
    let (direct, _) = entrance_points(
        &rs,
        t1,
        n,
        EntranceChoice::Rejection,
        tr,
        seed,
        "entrance-direct",
    )?;
    let ea: Vec<Vec<f64>> = evolved.iter().map(|v| v[0].clone()).collect();
    let eb: Vec<Vec<f64>> = direct.iter().map(|p| p.ratio()).collect();
    let st = two_sample_stats(&alphas(&rs, &ea), &alphas(&rs, &eb), &mut rng)?;
    out.check(
        Check::above(
            format!("entrance at {t0} evolved to {t1} vs entrance at {t1}, KS p"),
            st.ks_p,
            P_MIN,
        )
        .with_note(format!("D = {:.4e}", st.ks_stat)),
    );
    Ok(out)
}

pub(super) fn intertwine(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    ranks(cfg, &[1], &[1])?;
    let rs = root_system(cfg, 1)?;
    let tr = &cfg.truncation;
    let n = cfg.replicas.unwrap_or(10_000);
    let dt = cfg.dt.unwrap_or(1e-3);
    let steps = cfg.steps.unwrap_or(200);
    let (u0, t) = (5.0f64, 1.0f64);
    let x0 = rs.alcove_barycenter();
    // Piecewise-constant Cartan-valued y on [0, r): y₁ on [0, r₁), y₂ on [r₁, r).
    let (r1, r) = (0.3f64, 0.6f64);
    let (y1, y2) = (0.3f64, -0.2f64);
    let yy_int = r1 * y1 * y1 + (r - r1) * y2 * y2;
    let a = vec![r1 * y1 + (r - r1) * y2];
    let aa = a[0] * a[0];
    let closed = ((t + u0) / 2.0 * yy_int - u0 / 2.0 * aa).exp()
        * phi_ratio(&rs, u0, &scaled(&x0, u0), &a, tr)?;
    let mut out = Outcome::default();

    // P_t Λ: conditioned motion from (u0, u0 x0), then the closed-form kernel.
    let sim = ConditionedSimulator::new(&rs, u0 + t, tr)?;
    let start = SpaceTimePoint::new(&rs, u0, scaled(&x0, u0))?;
    let (ends, failures) = evolve(&sim, &vec![start; n], &[u0 + t], dt, seed, "intertwine-q")?;
    out.summary("step_failures", failures as f64);
    let tau = u0 + t;
    let vals = ends
        .iter()
        .map(|v| {
            Ok((tau / 2.0 * (yy_int - aa)).exp()
                * phi_ratio(&rs, tau, &scaled(&v[0], tau), &a, tr)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let ma = MeanSe::from_values(vals);
    out.check(z_check(
        "P_t Lambda pipeline vs closed form (SE units)",
        &ma,
        closed,
        3.0,
    ));

    // Λ Q_t: Brownian paths of variance 1/u0 binned on rad ≈ x0, plus the
    // independent sheet increment of variance t.
    let sigma = 1.0 / u0;
    let half_width = 0.025;
    let alpha0 = rs.root_values(&x0)[0];
    let nb = 20 * n;
    let k1 = (r1 * steps as f64).round() as usize;
    let k2 = (r * steps as f64).round() as usize;
    let binned: Vec<Option<f64>> = par_replicas(nb, seed, "intertwine-lambda", |_, rng| {
        let p = sample_bm_path(&rs, sigma, steps, rng)?;
        let e = stochastic_exponential(&rs, &p, 1.0, false)?;
        let alpha = rs.root_values(radial_part(&rs, &e.endpoint)?.coords())[0];
        if (alpha - alpha0).abs() >= half_width {
            return Ok(None);
        }
        let mut s = 0.0;
        for (k, inc) in p.increments[..k2].iter().enumerate() {
            s += if k < k1 { y1 } else { y2 } * inc[0];
        }
        Ok(Some((u0 * s).exp()))
    })?;
    let mb = MeanSe::from_values(
        binned
            .into_iter()
            .flatten()
            .map(|v| v * (t / 2.0 * yy_int).exp()),
    );
    out.check(
        z_check(
            "Lambda Q_t pipeline vs closed form (SE units)",
            &mb,
            closed,
            3.0,
        )
        .with_note(format!("{} paths in the bin", mb.count())),
    );
    let z = z_score(ma.mean() - mb.mean(), ma.se().hypot(mb.se()), 0.0);
    out.check(Check::at_most(
        "P_t Lambda vs Lambda Q_t (combined SE units)",
        z,
        3.0,
    ));
    let mut table = Table::new("pipelines", &["pipeline", "mean", "se", "closed_form"]);
    table.push(vec![0.0, ma.mean(), ma.se(), closed]);
    table.push(vec![1.0, mb.mean(), mb.se(), closed]);
    out.tables.push(table);
    Ok(out)
}

pub(super) fn main_law(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let tr = &cfg.truncation;
    for rank in ranks(cfg, &[1], &[1, 2])? {
        let rs = root_system(cfg, rank)?;
        let n = cfg.replicas.unwrap_or(10_000);
        let dt = cfg.dt.unwrap_or(1e-3);
        let t0 = cfg.t0.unwrap_or(DEFAULT_T0);
        let s_steps = cfg.steps.unwrap_or(400);
        let times = cfg.t_grid.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
        if times[0] <= t0 {
            return Err(Error::config(
                "t_grid",
                format!("times must exceed t0 = {t0}"),
            ));
        }
        let (starts, rate) = entrance_points(
            &rs,
            t0,
            n,
            cfg.entrance,
            tr,
            seed,
            &format!("main-entrance-A{rank}"),
        )?;
        out.summary(format!("A{rank}_entrance_acceptance_rate"), rate);
        let sim = ConditionedSimulator::new(&rs, *times.last().expect("non-empty grid"), tr)?;
        let (cond, failures) = evolve(
            &sim,
            &starts,
            &times,
            dt,
            seed,
            &format!("main-conditioned-A{rank}"),
        )?;
        out.summary(format!("A{rank}_step_failures"), failures as f64);
        let sheets: Vec<Vec<Vec<f64>>> =
            par_replicas(n, seed, &format!("main-sheet-A{rank}"), |_, rng| {
                let sheet = sample_sheet(&rs, s_steps, &times, rng)?;
                Ok(sheet_radial_process(&rs, &sheet)?
                    .into_iter()
                    .map(|(_, z)| z.into_coords())
                    .collect())
            })?;
        let mut rng = stream(seed, &format!("main-stats-A{rank}"), 0);
        let mut cols = vec!["source", "t"];
        cols.extend(["coord_1", "coord_2"][..rank].iter().copied());
        let mut table = Table::new(format!("samples_A{rank}"), &cols);
        for (k, &t) in times.iter().enumerate() {
            let a: Vec<Vec<f64>> = cond.iter().map(|v| v[k].clone()).collect();
            let b: Vec<Vec<f64>> = sheets.iter().map(|v| v[k].clone()).collect();
            let st = two_sample_stats(&a, &b, &mut rng)?;
            out.check(
                Check::above(
                    format!("A{rank} t={t}: conditioned b_t/t vs sheet radial part, KS p"),
                    st.ks_p,
                    P_MIN,
                )
                .with_note(format!(
                    "D = {:.4e}, energy p = {:.3}",
                    st.ks_stat, st.energy_p
                )),
            );
            for (src, set) in [(0.0, &a), (1.0, &b)] {
                for z in set.iter() {
                    let mut row = vec![src, t];
                    row.extend(z);
                    table.push(row);
                }
            }
        }
        if times.len() >= 2 {
            let joint = |rows: &[Vec<Vec<f64>>]| -> Vec<Vec<f64>> {
                rows.iter()
                    .map(|v| [v[0].clone(), v[1].clone()].concat())
                    .collect()
            };
            let (e, p) = energy_test(
                &joint(&cond),
                &joint(&sheets),
                ENERGY_PERMUTATIONS,
                &mut rng,
            )?;
            out.check(
                Check::above(
                    format!(
                        "A{rank} joint law at t=({}, {}): energy test p",
                        times[0], times[1]
                    ),
                    p,
                    P_MIN,
                )
                .with_note(format!("energy statistic {e:.4e}")),
            );
        }
        out.tables.push(table);
    }
    Ok(out)
}
