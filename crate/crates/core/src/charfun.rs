//! Class functions on the compact group: the Weyl denominator, Weyl
//! characters, the heat kernel as a character series, the radial density of
//! Brownian motion and the compact Kirillov ratio.
//!
//! Characters of type A are Schur polynomials in `z_j = e^{2πi h_j}`, where
//! `h` are the ambient coordinates of the argument. Alternants
//! `A_ν = Σ_w det(w) e^{2πi(wν, x)}` are therefore determinants `det(z_k^{l_j})`
//! with `l = ν` written as a strict partition.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    choose_radius, integrate_simplex, lattice_tail_bound, ComplexSum, GaussTail,
};
use crate::rootsys::{dot, norm, AlcovePoint, RootSystem, Weight, MAX_AMBIENT};

pub type C64 = Complex64;

/// Below this modulus of the Weyl denominator characters are evaluated by
/// the branching rule instead of the alternant quotient.
const DIRECT_QUOTIENT_MIN: f64 = 1e-3;

/// Cutoffs for the infinite series.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Truncation {
    /// Largest admissible cutoff on `‖λ + ρ‖` in character sums.
    pub weight_radius: f64,
    /// Largest admissible cutoff on `‖γ‖` in lattice sums.
    pub lattice_radius: f64,
    /// Target bound on the absolute value of the discarded tail.
    pub tail_tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            weight_radius: 60.0,
            lattice_radius: 60.0,
            tail_tol: 1e-13,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("weight_radius", self.weight_radius),
            ("lattice_radius", self.lattice_radius),
            ("tail_tol", self.tail_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

pub(crate) fn ambient_c(rs: &RootSystem, x: &[C64]) -> [C64; MAX_AMBIENT] {
    let mut h = [C64::new(0.0, 0.0); MAX_AMBIENT];
    for (row, &c) in rs.basis().iter().zip(x) {
        for (hj, bj) in h.iter_mut().zip(row) {
            *hj += c * bj;
        }
    }
    h
}

/// Complex root values `α(x)` for the positive roots.
pub(crate) fn root_values_c(rs: &RootSystem, x: &[C64]) -> Vec<C64> {
    let h = ambient_c(rs, x);
    rs.root_pairs().iter().map(|&(j, k)| h[j] - h[k]).collect()
}

/// `π(x) = Π_{α>0} (e^{iπα(x)} − e^{−iπα(x)})`.
pub fn pi_value(rs: &RootSystem, x: &[C64]) -> C64 {
    root_values_c(rs, x)
        .into_iter()
        .map(|a| C64::new(0.0, 2.0) * (a * PI).sin())
        .product()
}

pub fn pi_value_real(rs: &RootSystem, x: &[f64]) -> C64 {
    rs.root_values(x)
        .into_iter()
        .map(|a| C64::new(0.0, 2.0 * (PI * a).sin()))
        .product()
}

/// `|π(x)|` for real `x`.
pub fn pi_abs(rs: &RootSystem, x: &[f64]) -> f64 {
    rs.root_values(x)
        .into_iter()
        .map(|a| 2.0 * (PI * a).sin().abs())
        .product()
}

/// `h(x) = Π_{α>0} 2πi α(x)`.
pub fn h_value(rs: &RootSystem, x: &[C64]) -> C64 {
    root_values_c(rs, x)
        .into_iter()
        .map(|a| C64::new(0.0, 2.0 * PI) * a)
        .product()
}

/// `Π_{α>0} α(x)` for real `x`.
pub fn root_product(rs: &RootSystem, x: &[f64]) -> f64 {
    rs.root_values(x).into_iter().product()
}

/// Ambient partition `m_j = Σ_{i>j} a_i` (with `m_n = 0`) of a dominant weight.
pub(crate) fn partition(dynkin: &[i64]) -> [i64; MAX_AMBIENT] {
    let mut m = [0i64; MAX_AMBIENT];
    for j in 0..dynkin.len() {
        m[j] = dynkin[j..].iter().sum();
    }
    m
}

/// Strict partition `l_j = m_j + n − j` representing `λ + ρ`.
pub(crate) fn shifted_partition(dynkin: &[i64]) -> [i64; MAX_AMBIENT] {
    let n = dynkin.len();
    let mut l = partition(dynkin);
    for (j, lj) in l.iter_mut().enumerate().take(n + 1) {
        *lj += (n - j) as i64;
    }
    l
}

/// Weyl dimension `Π α(λ+ρ) / Π α(ρ)`, exact for the supported ranks.
pub fn weyl_dimension(rs: &RootSystem, lambda: &Weight) -> f64 {
    let l = shifted_partition(&lambda.dynkin);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for &(j, k) in rs.root_pairs() {
        num *= (l[j] - l[k]) as u128;
        den *= (k - j) as u128;
    }
    (num / den) as f64
}

/// Powers `z_k^p` for `p = 0..=max` of `z_k = e^{2πi h_k}`.
pub(crate) struct PowerTable {
    rows: Vec<Vec<C64>>,
}

impl PowerTable {
    pub(crate) fn new(rs: &RootSystem, x: &[C64], max: usize) -> Self {
        let h = ambient_c(rs, x);
        let rows = (0..rs.ambient_dim())
            .map(|k| {
                let z = (C64::new(0.0, 2.0 * PI) * h[k]).exp();
                let mut row = Vec::with_capacity(max + 1);
                row.push(C64::new(1.0, 0.0));
                let mut cur = C64::new(1.0, 0.0);
                for p in 1..=max {
                    // Recompute directly every 16 powers to bound error growth.
                    cur = if p % 16 == 0 {
                        (C64::new(0.0, 2.0 * PI * p as f64) * h[k]).exp()
                    } else {
                        cur * z
                    };
                    row.push(cur);
                }
                row
            })
            .collect();
        PowerTable { rows }
    }

    pub(crate) fn pow(&self, k: usize, p: i64) -> C64 {
        self.rows[k][p as usize]
    }

    /// `det(z_k^{l_j})` expanded over the Weyl group.
    pub(crate) fn alternant(&self, rs: &RootSystem, l: &[i64]) -> C64 {
        let m = rs.ambient_dim();
        let mut s = ComplexSum::new();
        for w in rs.weyl_group() {
            let mut t = C64::new(w.sign as f64, 0.0);
            for j in 0..m {
                t *= self.pow(w.perm[j], l[j]);
            }
            s.add(t);
        }
        s.value()
    }

    /// Schur polynomial `s_m(z)` by the branching rule over interlacing
    /// partitions; exact on walls where the alternant quotient is 0/0.
    pub(crate) fn schur(&self, m: &[i64]) -> C64 {
        let vars = self.rows.len();
        let mut level: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
        level.insert(m[..vars].to_vec(), C64::new(1.0, 0.0));
        for k in (1..vars).rev() {
            let mut next: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
            for (p, c) in &level {
                let size_p: i64 = p.iter().sum();
                let mut q = vec![0i64; k];
                interlace(p, &mut q, 0, &mut |q: &[i64]| {
                    let deg = size_p - q.iter().sum::<i64>();
                    *next.entry(q.to_vec()).or_insert(C64::new(0.0, 0.0)) += c * self.pow(k, deg);
                });
            }
            level = next;
        }
        let mut s = ComplexSum::new();
        for (p, c) in &level {
            s.add(c * self.pow(0, p[0]));
        }
        s.value()
    }
}

// Enumerates q with p_0 ≥ q_0 ≥ p_1 ≥ … ≥ q_{k−1} ≥ p_k.
fn interlace(p: &[i64], q: &mut Vec<i64>, i: usize, f: &mut impl FnMut(&[i64])) {
    if i == q.len() {
        f(q);
        return;
    }
    for v in p[i + 1]..=p[i] {
        q[i] = v;
        interlace(p, q, i + 1, f);
    }
}

/// `A_ν(x) = Σ_w det(w) e^{2πi(wν, x)}` for `ν = λ + ρ`, `λ` dominant.
pub fn alternant(rs: &RootSystem, lambda: &Weight, x: &[C64]) -> C64 {
    let l = shifted_partition(&lambda.dynkin);
    PowerTable::new(rs, x, l[0] as usize).alternant(rs, &l)
}

/// Weyl character `ch_λ(e^x)`, including arguments on root hyperplanes.
pub fn weyl_character(rs: &RootSystem, lambda: &Weight, x: &[C64]) -> Result<C64> {
    check_weight(rs, lambda)?;
    check_point(rs, x)?;
    let l = shifted_partition(&lambda.dynkin);
    let table = PowerTable::new(rs, x, l[0] as usize);
    let denom = pi_value(rs, x);
    if denom.norm() >= DIRECT_QUOTIENT_MIN {
        Ok(table.alternant(rs, &l) / denom)
    } else {
        Ok(table.schur(&partition(&lambda.dynkin)))
    }
}

fn check_weight(rs: &RootSystem, lambda: &Weight) -> Result<()> {
    if lambda.dynkin.len() != rs.rank() {
        return Err(Error::Domain(format!(
            "weight has {} labels, rank is {}",
            lambda.dynkin.len(),
            rs.rank()
        )));
    }
    if !lambda.is_dominant() {
        return Err(Error::Domain(format!(
            "weight {:?} is not dominant",
            lambda.dynkin
        )));
    }
    Ok(())
}

fn check_point(rs: &RootSystem, x: &[C64]) -> Result<()> {
    if x.len() != rs.rank() || x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Domain(format!("invalid Cartan vector {x:?}")));
    }
    Ok(())
}

struct HeatTerm {
    shifted: [i64; MAX_AMBIENT],
    partition: [i64; MAX_AMBIENT],
    coef: f64,
}

/// Heat kernel `p_s^σ` of Brownian motion on the group, as a truncated
/// character series `Σ_λ dim(λ) ch_λ e^{−sσ·2π²(‖λ+ρ‖² − ‖ρ‖²)}` with a
/// certified bound on the discarded tail. The Haar measure is normalised to
/// total mass one, so the trivial character contributes exactly 1.
pub struct HeatKernel {
    rank: usize,
    time: f64,
    terms: Vec<HeatTerm>,
    weights: Vec<Weight>,
    max_power: usize,
    cutoff: f64,
    tail: f64,
}

impl HeatKernel {
    /// `time` is the product `sσ`.
    pub fn new(rs: &RootSystem, time: f64, tr: &Truncation) -> Result<Self> {
        tr.validate()?;
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::Domain(format!(
                "heat kernel time must be positive, got {time}"
            )));
        }
        let c = 2.0 * PI * PI * time;
        let rho2 = dot(rs.rho(), rs.rho());
        let nroots = rs.num_positive_roots() as i32;
        let rho_prod = root_product(rs, rs.rho());
        // dim(λ) ≤ (√2 ‖λ+ρ‖)^N / Π α(ρ) and |ch_λ| ≤ dim(λ).
        let dmax = 2f64.powf(nroots as f64 / 2.0) / rho_prod;
        let g = GaussTail {
            log_amp: 2.0 * dmax.ln() + c * rho2,
            power: 2.0 * nroots as f64,
            rate: c,
            shift: 0.0,
        };
        let covol = 1.0 / rs.coroot_covolume();
        let d = rs.weight_covering_radius();
        let (cutoff, tail) =
            choose_radius(tr.tail_tol, norm(rs.rho()), 0.25, tr.weight_radius, |r| {
                lattice_tail_bound(rs.rank(), covol, d, &g, r)
            })?;
        let weights = rs.dominant_weights_ball(cutoff)?;
        let terms: Vec<HeatTerm> = weights
            .iter()
            .map(|w| {
                let nu: Vec<f64> = w.coords.iter().zip(rs.rho()).map(|(a, b)| a + b).collect();
                HeatTerm {
                    shifted: shifted_partition(&w.dynkin),
                    partition: partition(&w.dynkin),
                    coef: weyl_dimension(rs, w) * (-c * (dot(&nu, &nu) - rho2)).exp(),
                }
            })
            .collect();
        let max_power = terms.iter().map(|t| t.shifted[0]).max().unwrap_or(0) as usize;
        Ok(HeatKernel {
            rank: rs.rank(),
            time,
            terms,
            weights,
            max_power,
            cutoff,
            tail,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }
    /// Certified bound on the discarded part of the series for `p`.
    pub fn tail_bound(&self) -> f64 {
        self.tail
    }
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }
    /// Coefficients `dim(λ)·e^{−sσ·2π²(‖λ+ρ‖²−‖ρ‖²)}` in the order of [`Self::weights`].
    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.coef).collect()
    }

    fn check(&self, rs: &RootSystem) {
        assert_eq!(
            self.rank,
            rs.rank(),
            "heat kernel built for a different root system"
        );
    }

    /// `Σ_λ coef_λ A_{λ+ρ}(x)`, i.e. `p(e^x)·π(x)`.
    pub fn numerator(&self, rs: &RootSystem, x: &[f64]) -> C64 {
        self.check(rs);
        let table = PowerTable::new(rs, &to_complex(x), self.max_power);
        let mut s = ComplexSum::new();
        for t in &self.terms {
            s.add(t.coef * table.alternant(rs, &t.shifted));
        }
        s.value()
    }

    /// `p_s^σ(e^x)`.
    pub fn value(&self, rs: &RootSystem, x: &[f64]) -> f64 {
        self.check(rs);
        let denom = pi_value_real(rs, x);
        let v = if denom.norm() >= DIRECT_QUOTIENT_MIN {
            self.numerator(rs, x) / denom
        } else {
            let table = PowerTable::new(rs, &to_complex(x), self.max_power);
            let mut s = ComplexSum::new();
            for t in &self.terms {
                s.add(t.coef * table.schur(&t.partition));
            }
            s.value()
        };
        debug_assert!(
            v.im.abs() <= 1e-8 * v.re.abs().max(1.0),
            "heat kernel residue {v}"
        );
        v.re
    }

    /// Unnormalised radial density `p(e^z)|π(z)|²·1_A(z)`, computed without division.
    pub fn radial_density(&self, rs: &RootSystem, z: &[f64]) -> f64 {
        if !rs.in_alcove(z, 0.0) {
            return 0.0;
        }
        let v = (self.numerator(rs, z) * pi_value_real(rs, z).conj()).re;
        v.max(0.0)
    }
}

pub fn heat_kernel(rs: &RootSystem, s: f64, sigma: f64, x: &[f64], tr: &Truncation) -> Result<f64> {
    if !(s > 0.0 && sigma > 0.0) {
        return Err(Error::Domain(format!(
            "s and σ must be positive, got {s}, {sigma}"
        )));
    }
    Ok(HeatKernel::new(rs, s * sigma, tr)?.value(rs, x))
}

/// Unnormalised density of the radial part of Brownian motion with variance
/// `σ` at time one, with respect to Lebesgue measure on the alcove.
pub fn radial_density(
    rs: &RootSystem,
    sigma: f64,
    z: &AlcovePoint,
    tr: &Truncation,
) -> Result<f64> {
    Ok(HeatKernel::new(rs, sigma, tr)?.radial_density(rs, z.coords()))
}

/// `∫_A p_1^σ |π|²` by Gauss quadrature on the alcove (relative accuracy 1e−7).
pub fn radial_normalizer(rs: &RootSystem, sigma: f64, tr: &Truncation) -> Result<f64> {
    let hk = HeatKernel::new(rs, sigma, tr)?;
    radial_normalizer_for(rs, &hk)
}

pub fn radial_normalizer_for(rs: &RootSystem, hk: &HeatKernel) -> Result<f64> {
    integrate_simplex(&rs.alcove_vertices(), 1e-7, 256, |z| {
        Ok(hk.radial_density(rs, z))
    })
}

/// `Σ_w det(w) e^{(wλ, x)}` (no `2πi`), evaluated as an ambient determinant.
pub fn weyl_exp_sum(rs: &RootSystem, lambda: &[f64], x: &[C64]) -> C64 {
    let m = rs.ambient_dim();
    let lh = rs.to_ambient(lambda);
    let xh = ambient_c(rs, x);
    let mut e = [[C64::new(0.0, 0.0); MAX_AMBIENT]; MAX_AMBIENT];
    for j in 0..m {
        for k in 0..m {
            e[j][k] = (xh[k] * lh[j]).exp();
        }
    }
    let mut s = ComplexSum::new();
    for w in rs.weyl_group() {
        let mut t = C64::new(w.sign as f64, 0.0);
        for j in 0..m {
            t *= e[j][w.perm[j]];
        }
        s.add(t);
    }
    s.value()
}

/// Fourier–Laplace transform of the normalised orbit measure through `λ`:
///
/// `Π α(ρ) · Σ_w det(w) e^{(wλ, x)} / (Π α(λ) · Π α(x))`,
///
/// which tends to 1 as `x → 0`. On root hyperplanes of `x` the removable
/// singularity is resolved by symmetric perturbation and Richardson extrapolation.
pub fn kirillov_ratio(rs: &RootSystem, x: &[C64], lambda: &[f64]) -> Result<C64> {
    check_point(rs, x)?;
    if lambda.len() != rs.rank() {
        return Err(Error::Domain("λ has the wrong dimension".into()));
    }
    let lam_scale = norm(lambda).max(1.0);
    let lam_prod = root_product(rs, lambda);
    let nroots = rs.num_positive_roots() as i32;
    if lam_prod.abs() <= 1e-12 * lam_scale.powi(nroots) {
        return Err(Error::Domain(format!(
            "λ = {lambda:?} lies on a root hyperplane"
        )));
    }
    let factor = root_product(rs, rs.rho()) / lam_prod;
    let direct = |x: &[C64]| -> C64 {
        let xprod: C64 = root_values_c(rs, x).into_iter().product();
        factor * weyl_exp_sum(rs, lambda, x) / xprod
    };

    let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if xnorm == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let scale = xnorm.max(1.0);
    let roots = root_values_c(rs, x);
    let vanishing = roots.iter().filter(|a| a.norm() < 1e-6 * scale).count();
    let xprod: C64 = roots.iter().product();
    if vanishing == 0 && xprod.norm() > 1e-8 * scale.powi(nroots) {
        return Ok(direct(x));
    }
    // Symmetric averages remove odd orders; two Romberg levels remove ε² and ε⁴.
    let vanishing = vanishing.max(1) as f64;
    let eps = 4.0 * 10f64.powf(-16.0 / (vanishing + 6.0)) * scale / lam_scale;
    let u = generic_direction(rs.rank());
    let sym = |e: f64| -> C64 {
        let plus: Vec<C64> = x.iter().zip(&u).map(|(a, b)| a + e * b).collect();
        let minus: Vec<C64> = x.iter().zip(&u).map(|(a, b)| a - e * b).collect();
        0.5 * (direct(&plus) + direct(&minus))
    };
    let (f1, f2, f4) = (sym(eps), sym(0.5 * eps), sym(0.25 * eps));
    let r1 = (4.0 * f2 - f1) / 3.0;
    let r2 = (4.0 * f4 - f2) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

/// A fixed unit vector off every root hyperplane.
pub fn generic_direction(n: usize) -> Vec<f64> {
    let raw = [
        1.0,
        0.5f64.sqrt() * 1.3,
        3f64.sqrt() * 0.37,
        5f64.sqrt() * 0.61,
    ];
    let v = &raw[..n];
    let s = norm(v);
    v.iter().map(|a| a / s).collect()
}
