//! Space-time Brownian motion conditioned to stay in the affine Weyl chamber.
//!
//! A space-time point is `τd + b` with `τ > 0` and `b` in the Cartan algebra;
//! it lies in the open chamber iff `b/τ` is in the open alcove. The
//! conditioned process is the Doob transform of `(τ_0 + t, b_0 + B_t)` by
//! `φ̂_d`: `db = dB + ∇_b log φ̂_d(τ, b) dt`, `dτ = dt`. The same law is
//! reached without discretising a drift by weighting free paths with
//! `φ̂_d(τ_t, b_t)/φ̂_d(τ_0, b_0) 1_{T > t}`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::affinephi::PhiDField;
use crate::charfun::{pi_abs, Truncation};
use crate::error::{Error, Result};
use crate::groupsim::rad_of_bm;
use crate::numerics::KahanSum;
use crate::rng::stream;
use crate::rootsys::RootSystem;

/// Steps are subdivided while the wall distance is below this many `√h`.
pub const WALL_SAFETY: f64 = 5.0;
/// Smallest sub-step, relative to the nominal step.
pub const STEP_FLOOR: f64 = 1e-12;
/// Resampling attempts at the step floor before giving up.
pub const MAX_FLOOR_RETRIES: usize = 64;
/// Rejection sampling gives up below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Safety factor applied to the grid maximum of the rejection weight.
pub const ENVELOPE_FACTOR: f64 = 1.1;
/// Default entrance time.
pub const DEFAULT_T0: f64 = 0.05;

/// The space-time point `τd + b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceTimePoint {
    pub tau: f64,
    pub b: Vec<f64>,
}

impl SpaceTimePoint {
    /// Checked constructor: `b/τ` must lie in the open alcove.
    pub fn new(rs: &RootSystem, tau: f64, b: Vec<f64>) -> Result<Self> {
        let p = SpaceTimePoint { tau, b };
        if !(tau > 0.0 && tau.is_finite()) || p.b.len() != rs.rank() {
            return Err(Error::Domain(format!("invalid space-time point τ = {tau}")));
        }
        if !p.is_interior(rs) {
            return Err(Error::Domain(format!(
                "b/τ = {:?} is not in the open alcove",
                p.ratio()
            )));
        }
        Ok(p)
    }

    /// `b/τ`.
    pub fn ratio(&self) -> Vec<f64> {
        self.b.iter().map(|v| v / self.tau).collect()
    }

    pub fn is_interior(&self, rs: &RootSystem) -> bool {
        rs.alcove_wall_distance(&self.b, self.tau) > 0.0
    }

    /// Euclidean distance from `b` to the walls of `τA`.
    pub fn wall_distance(&self, rs: &RootSystem) -> f64 {
        rs.alcove_wall_distance(&self.b, self.tau)
    }
}

/// A conditioned path recorded on the nominal time grid.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionedTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<SpaceTimePoint>,
    /// Drift at the start of each nominal step.
    pub drifts: Vec<Vec<f64>>,
    pub min_wall_distance: f64,
    /// Number of step subdivisions caused by wall proximity.
    pub subdivisions: usize,
    /// Proposals that left the chamber and were resampled.
    pub resamples: usize,
    /// Only with the drift disabled: index of the first node outside the chamber.
    pub exit_index: Option<usize>,
}

impl ConditionedTrajectory {
    pub fn last(&self) -> &SpaceTimePoint {
        self.points.last().expect("trajectory has a start point")
    }
}

/// Options for the conditioned simulation.
#[derive(Clone, Copy, Debug)]
pub struct SimOptions {
    pub dt: f64,
    /// Disables the drift and the exit handling (sanity checks only).
    pub zero_drift: bool,
}

impl SimOptions {
    pub fn new(dt: f64) -> Self {
        SimOptions {
            dt,
            zero_drift: false,
        }
    }
}

fn gaussian<R: Rng>(n: usize, sd: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Doob-transform simulator with a precomputed `∇ log φ̂_d` field.
pub struct ConditionedSimulator<'a> {
    rs: &'a RootSystem,
    field: PhiDField,
    t_max: f64,
}

impl<'a> ConditionedSimulator<'a> {
    /// Valid for all time slots up to `t_max`.
    pub fn new(rs: &'a RootSystem, t_max: f64, tr: &Truncation) -> Result<Self> {
        Ok(ConditionedSimulator {
            rs,
            field: PhiDField::new(rs, t_max, tr)?,
            t_max,
        })
    }

    pub fn field(&self) -> &PhiDField {
        &self.field
    }

    pub fn drift(&self, p: &SpaceTimePoint) -> Result<Vec<f64>> {
        self.field.grad_log(self.rs, p.tau, &p.b)
    }

    /// Euler–Maruyama for `db = dB + ∇ log φ̂_d dt`, `dτ = dt` over `horizon`.
    ///
    /// Each nominal step is split while the wall distance is below
    /// `5√h`; proposals leaving the chamber are redrawn with half the step,
    /// and at the step floor redrawn up to a retry cap.
    pub fn simulate<R: Rng>(
        &self,
        start: &SpaceTimePoint,
        horizon: f64,
        opts: SimOptions,
        rng: &mut R,
    ) -> Result<ConditionedTrajectory> {
        let rs = self.rs;
        if !(horizon > 0.0) || !(opts.dt > 0.0) {
            return Err(Error::Domain(format!(
                "horizon {horizon} and dt {} must be positive",
                opts.dt
            )));
        }
        if !start.is_interior(rs) {
            return Err(Error::Domain(
                "start point is not in the open chamber".into(),
            ));
        }
        if start.tau + horizon > self.t_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "horizon reaches τ = {} beyond the field limit {}",
                start.tau + horizon,
                self.t_max
            )));
        }
        let n = rs.rank();
        let steps = (horizon / opts.dt).round().max(1.0) as usize;
        let dt = horizon / steps as f64;
        let floor = dt * STEP_FLOOR;
        let mut traj = ConditionedTrajectory {
            times: vec![0.0],
            points: vec![start.clone()],
            drifts: Vec::with_capacity(steps),
            min_wall_distance: start.wall_distance(rs),
            subdivisions: 0,
            resamples: 0,
            exit_index: None,
        };
        let mut cur = start.clone();
        for k in 0..steps {
            if opts.zero_drift {
                let noise = gaussian(n, dt.sqrt(), rng);
                cur = SpaceTimePoint {
                    tau: cur.tau + dt,
                    b: cur.b.iter().zip(&noise).map(|(p, q)| p + q).collect(),
                };
                traj.drifts.push(vec![0.0; n]);
                traj.times.push((k + 1) as f64 * dt);
                traj.points.push(cur.clone());
                if !cur.is_interior(rs) {
                    traj.exit_index = Some(k + 1);
                    return Ok(traj);
                }
                traj.min_wall_distance = traj.min_wall_distance.min(cur.wall_distance(rs));
                continue;
            }
            let mut remaining = dt;
            let mut first_drift = None;
            while remaining > 0.0 {
                let mut h = remaining;
                let dist = cur.wall_distance(rs);
                while dist < WALL_SAFETY * h.sqrt() && h / 2.0 >= floor {
                    h /= 2.0;
                    traj.subdivisions += 1;
                }
                let g = self.drift(&cur).map_err(|e| match e {
                    Error::Boundary { distance } => Error::StepFailure {
                        time: cur.tau,
                        distance,
                        retries: 0,
                    },
                    other => other,
                })?;
                if first_drift.is_none() {
                    first_drift = Some(g.clone());
                }
                let mut retries = 0;
                let next = loop {
                    let noise = gaussian(n, h.sqrt(), rng);
                    let cand = SpaceTimePoint {
                        tau: cur.tau + h,
                        b: (0..n).map(|c| cur.b[c] + g[c] * h + noise[c]).collect(),
                    };
                    if cand.is_interior(rs) {
                        break cand;
                    }
                    traj.resamples += 1;
                    if h / 2.0 >= floor {
                        h /= 2.0;
                    } else {
                        retries += 1;
                        if retries > MAX_FLOOR_RETRIES {
                            return Err(Error::StepFailure {
                                time: cur.tau,
                                distance: dist,
                                retries,
                            });
                        }
                    }
                };
                remaining = if h >= remaining { 0.0 } else { remaining - h };
                cur = next;
                traj.min_wall_distance = traj.min_wall_distance.min(cur.wall_distance(rs));
            }
            // Keep τ on the nominal grid despite rounding in the sub-steps.
            cur.tau = start.tau + (k + 1) as f64 * dt;
            traj.drifts
                .push(first_drift.unwrap_or_else(|| vec![0.0; n]));
            traj.times.push((k + 1) as f64 * dt);
            traj.points.push(cur.clone());
        }
        Ok(traj)
    }
}

/// Conditioned trajectory from `start` over `horizon`.
pub fn simulate_conditioned<R: Rng>(
    rs: &RootSystem,
    start: &SpaceTimePoint,
    horizon: f64,
    dt: f64,
    tr: &Truncation,
    rng: &mut R,
) -> Result<ConditionedTrajectory> {
    let sim = ConditionedSimulator::new(rs, start.tau + horizon, tr)?;
    sim.simulate(start, horizon, SimOptions::new(dt), rng)
}

/// Free space-time Brownian path `(τ_0 + t, b_0 + B_t)` on a grid, with the
/// first grid index at which `b/τ` leaves the open alcove.
#[derive(Clone, Debug)]
pub struct FreePath {
    pub points: Vec<SpaceTimePoint>,
    pub exit_index: Option<usize>,
}

impl FreePath {
    /// Last grid index not after `k` at which the path is still observed
    /// (the exit node for stopped paths).
    pub fn stopped_index(&self, k: usize) -> usize {
        self.exit_index.map_or(k, |e| e.min(k))
    }

    pub fn survives_to(&self, k: usize) -> bool {
        self.exit_index.is_none_or(|e| e > k)
    }
}

pub fn free_path<R: Rng>(
    rs: &RootSystem,
    start: &SpaceTimePoint,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<FreePath> {
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(Error::Domain("horizon and dt must be positive".into()));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let h = horizon / steps as f64;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(start.clone());
    let mut exit_index = None;
    let mut b = start.b.clone();
    for k in 1..=steps {
        for (v, z) in b.iter_mut().zip(gaussian(rs.rank(), h.sqrt(), rng)) {
            *v += z;
        }
        let p = SpaceTimePoint {
            tau: start.tau + k as f64 * h,
            b: b.clone(),
        };
        if exit_index.is_none() && !p.is_interior(rs) {
            exit_index = Some(k);
        }
        points.push(p);
    }
    Ok(FreePath { points, exit_index })
}

/// Estimate and standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Number of contributing paths (surviving paths for the weighted estimator).
    pub effective: usize,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().copied().fold(KahanSum::new(), |mut s, v| {
        s.add(v);
        s
    });
    let m = mean.value() / n;
    let mut var = KahanSum::new();
    for v in values {
        var.add((v - m) * (v - m));
    }
    let var = if values.len() > 1 {
        var.value() / (n - 1.0)
    } else {
        0.0
    };
    (m, (var / n).sqrt())
}

/// Weighted estimator of `E_Q[f(path)]` under the free measure:
/// mean of `f · φ̂_d(τ_t, b_t)/φ̂_d(u, x) · 1_{T > t}` over `replicas` paths,
/// `T` the first grid exit. Replica `r` uses the stream `(seed, "weighted", r)`.
#[allow(clippy::too_many_arguments)]
pub fn weighted_expectation(
    rs: &RootSystem,
    start: &SpaceTimePoint,
    horizon: f64,
    dt: f64,
    functional: &(dyn Fn(&[SpaceTimePoint]) -> f64 + Sync),
    tr: &Truncation,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    let field = PhiDField::new(rs, start.tau + horizon, tr)?;
    let log0 = field.log_value(rs, start.tau, &start.b)?;
    if !log0.is_finite() {
        return Err(Error::Domain(
            "start point is not in the open chamber".into(),
        ));
    }
    let values: Vec<Result<(f64, bool)>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, "weighted", r as u64);
            let path = free_path(rs, start, horizon, dt, &mut rng)?;
            if path.exit_index.is_some() {
                return Ok((0.0, false));
            }
            let end = path.points.last().expect("non-empty path");
            let w = (field.log_value(rs, end.tau, &end.b)? - log0).exp();
            Ok((functional(&path.points) * w, true))
        })
        .collect();
    let mut vals = Vec::with_capacity(replicas);
    let mut alive = 0;
    for v in values {
        let (x, ok) = v?;
        vals.push(x);
        alive += ok as usize;
    }
    if alive == 0 {
        return Err(Error::Degenerate("every path left the chamber".into()));
    }
    let (value, stderr) = mean_se(&vals);
    Ok(Estimate {
        value,
        stderr,
        effective: alive,
    })
}

/// How the entrance law is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EntranceMode {
    /// Rejection from the free Gaussian law with weight `φ̂_d · π · 1_A`.
    Rejection,
    /// `t0 · rad(ε(x^{1/t0}))` with the given number of path steps.
    Radial { steps: usize },
}

/// Sampler for the entrance law at time `t0`:
/// `C φ̂_d(t0, z) π(z/t0) 1_A(z/t0) W_0(b_{t0} ∈ dz)`.
pub struct EntranceSampler<'a> {
    rs: &'a RootSystem,
    t0: f64,
    field: PhiDField,
    log_envelope: f64,
    proposals: u64,
    accepted: u64,
}

impl<'a> EntranceSampler<'a> {
    pub fn new(rs: &'a RootSystem, t0: f64, tr: &Truncation) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
        }
        let field = PhiDField::new(rs, t0, tr)?;
        let mut s = EntranceSampler {
            rs,
            t0,
            field,
            log_envelope: f64::NEG_INFINITY,
            proposals: 0,
            accepted: 0,
        };
        s.log_envelope = s.grid_log_max()? + ENVELOPE_FACTOR.ln();
        Ok(s)
    }

    fn log_weight(&self, z: &[f64]) -> Result<f64> {
        let u: Vec<f64> = z.iter().map(|v| v / self.t0).collect();
        if !self.rs.is_alcove_interior(&u) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.field.log_value(self.rs, self.t0, z)? + pi_abs(self.rs, &u).ln())
    }

    // Maximum of the weight over a barycentric grid of the scaled alcove.
    fn grid_log_max(&self) -> Result<f64> {
        let verts = self.rs.alcove_vertices();
        let n = self.rs.rank();
        let res = match n {
            1 => 400,
            2 => 60,
            3 => 24,
            _ => 12,
        };
        let mut best = f64::NEG_INFINITY;
        let mut idx = vec![0usize; n];
        loop {
            let used: usize = idx.iter().sum();
            if used < res {
                let mut z = vec![0.0; n];
                for (k, &c) in idx.iter().enumerate() {
                    for (zc, vc) in z.iter_mut().zip(&verts[k + 1]) {
                        *zc += self.t0 * c as f64 / res as f64 * vc;
                    }
                }
                best = best.max(self.log_weight(&z)?);
            }
            let mut k = 0;
            loop {
                if k == n {
                    return Ok(best);
                }
                idx[k] += 1;
                if idx.iter().sum::<usize>() <= res {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    /// One sample by rejection.
    pub fn sample<R: Rng>(&mut self, rng: &mut R) -> Result<SpaceTimePoint> {
        let n = self.rs.rank();
        loop {
            self.proposals += 1;
            let z = gaussian(n, self.t0.sqrt(), rng);
            let lw = self.log_weight(&z)?;
            if lw > self.log_envelope {
                return Err(Error::Numerical(format!(
                    "rejection weight exceeds the envelope at {z:?}; refine the envelope grid"
                )));
            }
            let u: f64 = rng.random();
            if u.ln() < lw - self.log_envelope {
                self.accepted += 1;
                return Ok(SpaceTimePoint { tau: self.t0, b: z });
            }
            if self.proposals >= 100_000 && self.acceptance_rate() < MIN_ACCEPTANCE {
                return Err(Error::Efficiency {
                    rate: self.acceptance_rate(),
                });
            }
        }
    }
}

/// One entrance-law sample at time `t0`.
pub fn entrance_sample<R: Rng>(
    rs: &RootSystem,
    t0: f64,
    mode: EntranceMode,
    tr: &Truncation,
    rng: &mut R,
) -> Result<SpaceTimePoint> {
    match mode {
        EntranceMode::Rejection => EntranceSampler::new(rs, t0, tr)?.sample(rng),
        EntranceMode::Radial { steps } => radial_entrance(rs, t0, steps, rng),
    }
}

/// Radial mode: `t0 · rad(ε(x^{1/t0}))`, redrawn on the (null) event of a wall hit.
pub fn radial_entrance<R: Rng>(
    rs: &RootSystem,
    t0: f64,
    steps: usize,
    rng: &mut R,
) -> Result<SpaceTimePoint> {
    if !(t0 > 0.0) {
        return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
    }
    loop {
        let r = rad_of_bm(rs, 1.0 / t0, steps, rng)?;
        let p = SpaceTimePoint {
            tau: t0,
            b: r.coords().iter().map(|v| v * t0).collect(),
        };
        if p.is_interior(rs) {
            return Ok(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_root_system, Family};

    fn a(n: usize) -> RootSystem {
        build_root_system(Family::A, n).unwrap()
    }

    #[test]
    fn space_time_point_validation() {
        let rs = a(1);
        assert!(SpaceTimePoint::new(&rs, 0.2, vec![0.05]).is_ok());
        assert!(SpaceTimePoint::new(&rs, 0.2, vec![-0.05]).is_err());
        assert!(SpaceTimePoint::new(&rs, 0.0, vec![0.05]).is_err());
        // α(b) = √2·b must stay below τ.
        assert!(SpaceTimePoint::new(&rs, 0.2, vec![0.2]).is_err());
    }

    #[test]
    fn conditioned_paths_stay_inside() {
        let tr = Truncation::default();
        for n in 1..=2 {
            let rs = a(n);
            let sim = ConditionedSimulator::new(&rs, 1.2, &tr).unwrap();
            let bary = rs.alcove_barycenter();
            let start =
                SpaceTimePoint::new(&rs, 0.2, bary.iter().map(|v| 0.2 * v).collect()).unwrap();
            let mut rng = stream(1, "doob-test", n as u64);
            for _ in 0..20 {
                let tr = sim
                    .simulate(&start, 1.0, SimOptions::new(1e-3), &mut rng)
                    .unwrap();
                assert_eq!(tr.points.len(), 1001);
                assert!(tr.points.iter().all(|p| p.is_interior(&rs)));
                assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
                assert!((tr.last().tau - 1.2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn drift_free_paths_exit() {
        let rs = a(1);
        let tr = Truncation::default();
        let sim = ConditionedSimulator::new(&rs, 1.2, &tr).unwrap();
        let start = SpaceTimePoint::new(&rs, 0.2, vec![0.2 / (2.0 * 2f64.sqrt())]).unwrap();
        let mut rng = stream(2, "doob-test", 0);
        let opts = SimOptions {
            dt: 1e-3,
            zero_drift: true,
        };
        let exits = (0..100)
            .filter(|_| {
                sim.simulate(&start, 1.0, opts, &mut rng)
                    .unwrap()
                    .exit_index
                    .is_some()
            })
            .count();
        assert!(exits > 0);
    }

    #[test]
    fn weight_of_constant_functional_is_near_one() {
        let rs = a(1);
        let tr = Truncation::default();
        // Near the chamber tip survival is astronomically rare, so start at τ = 3.
        let start = SpaceTimePoint::new(&rs, 3.0, vec![3.0 / (2.0 * 2f64.sqrt())]).unwrap();
        let est = weighted_expectation(&rs, &start, 0.5, 2.5e-4, &|_| 1.0, &tr, 8000, 3).unwrap();
        // Grid exit detection overestimates survival by O(√dt); allow 3 SE plus 2%.
        assert!((est.value - 1.0).abs() < 3.0 * est.stderr + 0.02, "{est:?}");
    }

    #[test]
    fn weighted_estimator_degenerates_near_the_tip() {
        let rs = a(1);
        let tr = Truncation::default();
        let start = SpaceTimePoint::new(&rs, 0.2, vec![0.2 / (2.0 * 2f64.sqrt())]).unwrap();
        let r = weighted_expectation(&rs, &start, 0.3, 1e-3, &|_| 1.0, &tr, 500, 3);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn entrance_samples_are_interior() {
        let rs = a(1);
        let tr = Truncation::default();
        let mut sampler = EntranceSampler::new(&rs, 0.05, &tr).unwrap();
        let mut rng = stream(4, "entrance", 0);
        for _ in 0..200 {
            let p = sampler.sample(&mut rng).unwrap();
            assert!(p.is_interior(&rs));
            assert_eq!(p.tau, 0.05);
        }
        assert!(sampler.acceptance_rate() > MIN_ACCEPTANCE);
        let p = radial_entrance(&rs, 0.05, 200, &mut rng).unwrap();
        assert!(p.is_interior(&rs));
    }

    #[test]
    fn tiny_entrance_time_is_inefficient() {
        let rs = a(3);
        let tr = Truncation::default();
        let mut sampler = EntranceSampler::new(&rs, 0.002, &tr).unwrap();
        let mut rng = stream(5, "entrance", 0);
        let r = (0..20).try_for_each(|_| sampler.sample(&mut rng).map(|_| ()));
        assert!(matches!(r, Err(Error::Efficiency { .. })), "{r:?}");
    }
}
