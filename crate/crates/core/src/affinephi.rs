//! The affine theta series φ̂ attached to the affine Weyl group `W ⋉ Q∨`.
//!
//! Two representations are implemented:
//!
//! * the lattice form, an alternating Gaussian sum over `W × Q∨`,
//! * the character form, a sum over dominant weights obtained from the
//!   lattice form by Poisson summation.
//!
//! Phase convention: values are multiplied by `(−i)^N`, `N = |R₊|`, so that
//! φ̂ is real for real `y` and φ̂ at `y = 0` is positive inside the chamber.
//! The constant relating the two forms is `1/√(n+1)` with this convention;
//! it is recomputed once per root system from both forms and cached.

use std::f64::consts::PI;

use crate::charfun::{
    ambient_c, partition, pi_value, pi_value_real, root_product, shifted_partition, to_complex,
    weyl_dimension, PowerTable, Truncation, C64,
};
use crate::error::{Error, Result};
use crate::numerics::{choose_radius, lattice_tail_bound, ComplexSum, GaussTail, KahanSum};
use crate::rootsys::{dot, norm, RootSystem, MAX_AMBIENT};

/// Below this modulus of `π(−y/b)` the lattice form is refused.
const LATTICE_DENOM_MIN: f64 = 1e-10;
/// Minimum time slot at which the lattice form is used by the dispatchers.
pub const LATTICE_SWITCH: f64 = 6.0;
/// Largest accepted cancellation exponent `2π²‖ρ‖²/τ` for the lattice form.
const LATTICE_CANCELLATION: f64 = 8.0;
/// Minimum wall distance (in alcove coordinates) accepted by the gradient.
pub const GRADIENT_WALL_MIN: f64 = 1e-8;

/// Arguments of `φ̂_{bd+y}(a, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiArgs {
    pub b: f64,
    pub y: Vec<C64>,
    pub a: f64,
    pub x: Vec<f64>,
}

impl PhiArgs {
    fn validate(&self, rs: &RootSystem) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::Domain(format!(
                "a and b must be positive, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.x.len() != rs.rank() || self.y.len() != rs.rank() {
            return Err(Error::Domain(
                "argument dimension does not match rank".into(),
            ));
        }
        if self.x.iter().any(|v| !v.is_finite())
            || self
                .y
                .iter()
                .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Domain("non-finite argument".into()));
        }
        Ok(())
    }
}

/// Bilinear (not Hermitian) extension of the invariant form.
pub fn bilinear(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn minus_i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// `φ̂_{bd+y}(a, x)` from the lattice form
/// `(−i)^N / π(−y/b) · Σ_{γ ∈ Q∨} Σ_{w} det(w) e^{(w(x+aγ), y) − b((x,γ) + ½a|γ|²)}`.
///
/// For `y = 0` the removable singularity is resolved analytically (see
/// [`phi_hat_d_lattice`]); for small nonzero `|π(−y/b)|` a singular-input
/// error is returned and the character form should be used.
pub fn phi_hat_lattice(rs: &RootSystem, args: &PhiArgs, tr: &Truncation) -> Result<C64> {
    args.validate(rs)?;
    tr.validate()?;
    if args.y.iter().all(|v| *v == C64::new(0.0, 0.0)) {
        return Ok(C64::new(
            phi_hat_d_lattice(rs, args.b, args.a, &args.x, tr)?,
            0.0,
        ));
    }
    let nroots = rs.num_positive_roots();
    let scaled: Vec<C64> = args.y.iter().map(|v| -v / args.b).collect();
    let denom = pi_value(rs, &scaled);
    if denom.norm() < LATTICE_DENOM_MIN {
        return Err(Error::SingularInput(format!(
            "|π(−y/b)| = {:e} too small for the lattice form; use the character form",
            denom.norm()
        )));
    }
    let (a, b) = (args.a, args.b);
    let x = &args.x;
    let yre: Vec<f64> = args.y.iter().map(|v| v.re).collect();
    let yre_norm = norm(&yre);

    // Each term equals e^{M0} e^{−(b/2a)|v − (a/b)w⁻¹Re y|²}·(phase) with v = x + aγ,
    // M0 = (b/2a)|x|² + (a/2b)|Re y|². With r = ‖x/a + γ‖ the Gaussian factor is
    // at most exp(−(ab/2)(r − |Re y|/b)²) once r ≥ |Re y|/b.
    let m0 = b / (2.0 * a) * dot(x, x) + a / (2.0 * b) * dot(&yre, &yre);
    let g = GaussTail {
        log_amp: (rs.weyl_group().len() as f64).ln(),
        power: 0.0,
        rate: a * b / 2.0,
        shift: yre_norm / b,
    };
    let center: Vec<f64> = x.iter().map(|v| v / a).collect();
    let (radius, _) = choose_radius(tr.tail_tol, 1.0, 0.25, tr.lattice_radius, |r| {
        lattice_tail_bound(
            rs.rank(),
            rs.coroot_covolume(),
            rs.coroot_covering_radius(),
            &g,
            r,
        )
    })?;
    let gammas = rs.coroot_ball_around(&center, radius)?;

    let yh = ambient_c(rs, &args.y);
    let m = rs.ambient_dim();
    let mut exps: Vec<C64> = Vec::with_capacity(gammas.len() * rs.weyl_group().len());
    for gamma in &gammas {
        let v: Vec<f64> = x.iter().zip(gamma).map(|(p, q)| p + a * q).collect();
        let vh = rs.to_ambient(&v);
        let quad = -b * (dot(x, gamma) + 0.5 * a * dot(gamma, gamma));
        for w in rs.weyl_group() {
            // (w v, y) = Σ_j v_j y_{perm[j]} in ambient coordinates.
            let mut e = C64::new(quad - m0, 0.0);
            for j in 0..m {
                e += vh[j] * yh[w.perm[j]];
            }
            exps.push(if w.sign > 0 { e } else { e + C64::new(0.0, PI) });
        }
    }
    let shift = exps.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let mut s = ComplexSum::new();
    for e in &exps {
        s.add((e - shift).exp());
    }
    let log_scale = m0 + shift;
    Ok(minus_i_pow(nroots) * s.value() * log_scale.exp() / denom)
}

/// `φ̂_{bd}(a, x)`, the `y → 0` limit of the lattice form:
///
/// `(b/2π)^N / Π α(ρ) · Σ_{γ ∈ Q∨} Π_α α(x + aγ) · e^{−b((x,γ) + ½a|γ|²)}`.
pub fn phi_hat_d_lattice(
    rs: &RootSystem,
    b: f64,
    a: f64,
    x: &[f64],
    tr: &Truncation,
) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || x.len() != rs.rank() {
        return Err(Error::Domain(format!(
            "invalid arguments a = {a}, b = {b}, x = {x:?}"
        )));
    }
    let nroots = rs.num_positive_roots() as i32;
    let (log_sum, sign) = lattice_d_log_sum(rs, b, a, x, tr)?;
    let pref = (b / (2.0 * PI)).powi(nroots) / root_product(rs, rs.rho());
    Ok(sign * pref * log_sum.exp())
}

// Returns (log |Σ|, sign) of e^{(b/2a)|x|²} Σ_γ Πα(v) e^{−(b/2a)|v|²}, v = x + aγ.
fn lattice_d_log_sum(
    rs: &RootSystem,
    b: f64,
    a: f64,
    x: &[f64],
    tr: &Truncation,
) -> Result<(f64, f64)> {
    let nroots = rs.num_positive_roots();
    let center: Vec<f64> = x.iter().map(|v| v / a).collect();
    // |Πα(v)| e^{−(b/2a)|v|²} ≤ (√2 a r)^N e^{−(ab/2) r²} with r = ‖x/a + γ‖;
    // tail measured relative to a^N.
    let g = GaussTail {
        log_amp: nroots as f64 * 0.5 * 2f64.ln(),
        power: nroots as f64,
        rate: a * b / 2.0,
        shift: 0.0,
    };
    let (radius, _) = choose_radius(tr.tail_tol, 1.0, 0.25, tr.lattice_radius, |r| {
        lattice_tail_bound(
            rs.rank(),
            rs.coroot_covolume(),
            rs.coroot_covering_radius(),
            &g,
            r,
        )
    })?;
    let gammas = rs.coroot_ball_around(&center, radius)?;
    let mut s = KahanSum::new();
    let mut lead = f64::NEG_INFINITY;
    let exps: Vec<(f64, f64)> = gammas
        .iter()
        .map(|gamma| {
            let v: Vec<f64> = x.iter().zip(gamma).map(|(p, q)| p + a * q).collect();
            let p = root_product(rs, &v);
            let e = -b / (2.0 * a) * dot(&v, &v);
            lead = lead.max(e);
            (p, e)
        })
        .collect();
    for (p, e) in exps {
        s.add(p * (e - lead).exp());
    }
    let v = s.value();
    Ok((v.abs().ln() + lead + b / (2.0 * a) * dot(x, x), v.signum()))
}

/// Dominant weights with data needed by the character form.
struct WeightEntry {
    shifted: [i64; MAX_AMBIENT],
    partition: [i64; MAX_AMBIENT],
    dim: f64,
    nu_norm: f64,
    nu2_minus_rho2: f64,
}

fn weight_table(rs: &RootSystem, radius: f64) -> Result<Vec<WeightEntry>> {
    let rho2 = dot(rs.rho(), rs.rho());
    Ok(rs
        .dominant_weights_ball(radius)?
        .into_iter()
        .map(|w| {
            let nu: Vec<f64> = w.coords.iter().zip(rs.rho()).map(|(p, q)| p + q).collect();
            let nu2 = dot(&nu, &nu);
            WeightEntry {
                shifted: shifted_partition(&w.dynkin),
                partition: partition(&w.dynkin),
                dim: weyl_dimension(rs, &w),
                nu_norm: nu2.sqrt(),
                nu2_minus_rho2: nu2 - rho2,
            }
        })
        .collect())
}

/// Cutoff on `‖λ+ρ‖` for `Σ_λ A_{λ+ρ}(x) ch_λ(e^{−y}) e^{−2π²σ(‖λ+ρ‖² − ‖ρ‖²)}`
/// with `|A| ≤ |W|`, `|ch_λ(e^{−y})| ≤ dim(λ) e^{2π‖λ+ρ‖‖Im y‖}`.
fn charsum_cutoff(
    rs: &RootSystem,
    sigma: f64,
    im_y: f64,
    extra_power: f64,
    tr: &Truncation,
) -> Result<f64> {
    let nroots = rs.num_positive_roots() as f64;
    let rho2 = dot(rs.rho(), rs.rho());
    let c = 2.0 * PI * PI * sigma;
    let s = im_y / (2.0 * PI * sigma);
    let dmax = 2f64.powf(nroots / 2.0) / root_product(rs, rs.rho());
    let g = GaussTail {
        log_amp: (rs.weyl_group().len() as f64 * dmax).ln() + c * (s * s + rho2),
        power: nroots + extra_power,
        rate: c,
        shift: s,
    };
    let covol = 1.0 / rs.coroot_covolume();
    let d = rs.weight_covering_radius();
    let (r, _) = choose_radius(tr.tail_tol, norm(rs.rho()), 0.25, tr.weight_radius, |r| {
        lattice_tail_bound(rs.rank(), covol, d, &g, r)
    })?;
    Ok(r)
}

/// `(−i)^N Σ_{λ ∈ P₊} A_{λ+ρ}(x) ch_λ(e^{−y}) e^{−2π²σ(‖λ+ρ‖² − ‖ρ‖²)}`.
fn charsum_core(rs: &RootSystem, sigma: f64, x: &[f64], y: &[C64], tr: &Truncation) -> Result<C64> {
    let im_y = y.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    let cutoff = charsum_cutoff(rs, sigma, im_y, 0.0, tr)?;
    let table = weight_table(rs, cutoff)?;
    let lmax = table.iter().map(|e| e.shifted[0]).max().unwrap_or(0) as usize;
    let px = PowerTable::new(rs, &to_complex(x), lmax);
    let neg_y: Vec<C64> = y.iter().map(|v| -v).collect();
    let py = PowerTable::new(rs, &neg_y, lmax);
    let pi_neg_y = pi_value(rs, &neg_y);
    let quotient = pi_neg_y.norm() >= 1e-3;
    let c = 2.0 * PI * PI * sigma;
    let mut s = ComplexSum::new();
    for e in &table {
        let ch = if quotient {
            py.alternant(rs, &e.shifted) / pi_neg_y
        } else {
            py.schur(&e.partition)
        };
        s.add(px.alternant(rs, &e.shifted) * ch * (-c * e.nu2_minus_rho2).exp());
    }
    Ok(minus_i_pow(rs.num_positive_roots()) * s.value())
}

fn charsum_log_prefactor(rs: &RootSystem, sigma: f64, x: &[f64]) -> f64 {
    let n = rs.rank() as f64;
    0.5 * n * (2.0 * PI * sigma).ln() + dot(x, x) / (2.0 * sigma)
        - 2.0 * PI * PI * sigma * dot(rs.rho(), rs.rho())
}

/// `φ̂_{d+y}(1/σ, x/σ)` from the character form
///
/// `C (2πσ)^{n/2} e^{((y,y) + (x,x))/(2σ)} (−i)^N Σ_{μ ∈ P₊} A_{μ+ρ}(x) ch_μ(e^{−y}) e^{−2π²σ‖μ+ρ‖²}`,
///
/// valid for every complex `y`. `C` is [`phi_constant`].
pub fn phi_hat_charsum(
    rs: &RootSystem,
    sigma: f64,
    x: &[f64],
    y: &[C64],
    tr: &Truncation,
) -> Result<C64> {
    let c = phi_constant(rs);
    Ok(c * phi_hat_charsum_uncalibrated(rs, sigma, x, y, tr)?)
}

fn phi_hat_charsum_uncalibrated(
    rs: &RootSystem,
    sigma: f64,
    x: &[f64],
    y: &[C64],
    tr: &Truncation,
) -> Result<C64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("σ must be positive, got {sigma}")));
    }
    if x.len() != rs.rank() || y.len() != rs.rank() {
        return Err(Error::Domain(
            "argument dimension does not match rank".into(),
        ));
    }
    tr.validate()?;
    let core = charsum_core(rs, sigma, x, y, tr)?;
    let log_pref = charsum_log_prefactor(rs, sigma, x);
    Ok(core * (bilinear(y, y) / (2.0 * sigma) + log_pref).exp())
}

/// The constant relating the lattice and character forms, obtained by
/// evaluating both at one fixed regular point. Equals `1/√(n+1)`.
pub fn phi_constant(rs: &RootSystem) -> f64 {
    *rs.phi_constant.get_or_init(|| {
        let tr = Truncation::default();
        let n = rs.rank();
        let tau = lattice_switch(rs);
        let bary = rs.alcove_barycenter();
        let z: Vec<f64> = bary
            .iter()
            .enumerate()
            .map(|(i, v)| 0.9 * v + 0.01 * i as f64)
            .collect();
        let y: Vec<C64> = crate::charfun::generic_direction(n)
            .iter()
            .map(|v| C64::new(0.3 * v, 0.0))
            .collect();
        let args = PhiArgs {
            b: 1.0,
            y: y.clone(),
            a: tau,
            x: z.iter().map(|v| v * tau).collect(),
        };
        let lattice = phi_hat_lattice(rs, &args, &tr).expect("calibration lattice sum");
        let chars = phi_hat_charsum_uncalibrated(rs, 1.0 / tau, &z, &y, &tr)
            .expect("calibration character sum");
        (lattice / chars).re
    })
}

/// Time slot from which the dispatchers use the lattice form.
///
/// The lattice terms are of size one while their alternating sum is of size
/// `e^{−2π²‖ρ‖²/τ}`, so small slots lose all digits to cancellation.
pub fn lattice_switch(rs: &RootSystem) -> f64 {
    let rho2 = dot(rs.rho(), rs.rho());
    LATTICE_SWITCH.max(2.0 * PI * PI * rho2 / LATTICE_CANCELLATION)
}

/// `φ̂_{d+y}(τ, b)`, choosing the cheaper representation.
pub fn phi_hat(rs: &RootSystem, tau: f64, pos: &[f64], y: &[C64], tr: &Truncation) -> Result<C64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!(
            "time slot must be positive, got {tau}"
        )));
    }
    if tau < lattice_switch(rs) {
        let xs: Vec<f64> = pos.iter().map(|v| v / tau).collect();
        return phi_hat_charsum(rs, 1.0 / tau, &xs, y, tr);
    }
    let args = PhiArgs {
        b: 1.0,
        y: y.to_vec(),
        a: tau,
        x: pos.to_vec(),
    };
    match phi_hat_lattice(rs, &args, tr) {
        Err(Error::SingularInput(_)) => {
            let xs: Vec<f64> = pos.iter().map(|v| v / tau).collect();
            phi_hat_charsum(rs, 1.0 / tau, &xs, y, tr)
        }
        other => other,
    }
}

/// `φ̂_d(τ, b)`.
pub fn phi_hat_d(rs: &RootSystem, tau: f64, pos: &[f64], tr: &Truncation) -> Result<f64> {
    let zero = vec![C64::new(0.0, 0.0); rs.rank()];
    Ok(phi_hat(rs, tau, pos, &zero, tr)?.re)
}

/// Both sides of the theta-function Poisson identity at `(x, t)`:
///
/// `lhs = Σ_{μ ∈ P} e^{2πiμ(x) − 2π²t(μ,μ)}`,
/// `rhs = (2πt)^{−n/2} Σ_{z ∈ Q∨} e^{−(x+z, x+z)/(2t)}`.
///
/// Their ratio is the constant `√(n+1)`.
pub fn theta_pair(rs: &RootSystem, x: &[f64], t: f64, tr: &Truncation) -> Result<(f64, f64)> {
    if !(t > 0.0) || x.len() != rs.rank() {
        return Err(Error::Domain(format!(
            "invalid theta arguments t = {t}, x = {x:?}"
        )));
    }
    tr.validate()?;
    let n = rs.rank();
    let g_lhs = GaussTail {
        log_amp: 0.0,
        power: 0.0,
        rate: 2.0 * PI * PI * t,
        shift: 0.0,
    };
    let (r_lhs, _) = choose_radius(tr.tail_tol, 1.0, 0.25, tr.weight_radius, |r| {
        lattice_tail_bound(
            n,
            1.0 / rs.coroot_covolume(),
            rs.weight_covering_radius(),
            &g_lhs,
            r,
        )
    })?;
    let mut lhs = KahanSum::new();
    for mu in rs.weight_lattice_ball(r_lhs)? {
        lhs.add(
            (2.0 * PI * dot(&mu.coords, x)).cos()
                * (-2.0 * PI * PI * t * dot(&mu.coords, &mu.coords)).exp(),
        );
    }

    let pref = (2.0 * PI * t).powf(-(n as f64) / 2.0);
    let g_rhs = GaussTail {
        log_amp: pref.ln(),
        power: 0.0,
        rate: 1.0 / (2.0 * t),
        shift: 0.0,
    };
    let (r_rhs, _) = choose_radius(tr.tail_tol, 1.0, 0.25, tr.lattice_radius, |r| {
        lattice_tail_bound(
            n,
            rs.coroot_covolume(),
            rs.coroot_covering_radius(),
            &g_rhs,
            r,
        )
    })?;
    let mut rhs = KahanSum::new();
    for z in rs.coroot_ball_around(x, r_rhs)? {
        let v: Vec<f64> = x.iter().zip(&z).map(|(p, q)| p + q).collect();
        rhs.add(pref * (-dot(&v, &v) / (2.0 * t)).exp());
    }
    Ok((lhs.value(), rhs.value()))
}

/// `∇_x log φ̂_d(t, x)` for `x/t` strictly inside the alcove.
pub fn grad_log_phi_d(rs: &RootSystem, t: f64, x: &[f64], tr: &Truncation) -> Result<Vec<f64>> {
    if !(t > 0.0) || x.len() != rs.rank() {
        return Err(Error::Domain(format!(
            "invalid gradient arguments t = {t}, x = {x:?}"
        )));
    }
    let z: Vec<f64> = x.iter().map(|v| v / t).collect();
    let dist = rs.alcove_wall_distance(&z, 1.0);
    if dist < GRADIENT_WALL_MIN {
        return Err(Error::Boundary { distance: dist });
    }
    if t < lattice_switch(rs) {
        let field = PhiDField::new(rs, t, tr)?;
        field.grad_log(rs, t, x)
    } else {
        grad_log_lattice(rs, t, x, tr)
    }
}

fn grad_log_lattice(rs: &RootSystem, t: f64, x: &[f64], tr: &Truncation) -> Result<Vec<f64>> {
    let n = rs.rank();
    let nroots = rs.num_positive_roots();
    let center: Vec<f64> = x.iter().map(|v| v / t).collect();
    // Gradient terms carry one extra factor ‖v‖/t or a degree N−1 product.
    let g = GaussTail {
        log_amp: nroots as f64 * 0.5 * 2f64.ln() + (1.0 + t).ln(),
        power: nroots as f64 + 1.0,
        rate: t / 2.0,
        shift: 0.0,
    };
    let (radius, _) = choose_radius(tr.tail_tol, 1.0, 0.25, tr.lattice_radius, |r| {
        lattice_tail_bound(n, rs.coroot_covolume(), rs.coroot_covering_radius(), &g, r)
    })?;
    let gammas = rs.coroot_ball_around(&center, radius)?;
    let data: Vec<(Vec<f64>, f64)> = gammas
        .iter()
        .map(|gamma| {
            let v: Vec<f64> = x.iter().zip(gamma).map(|(p, q)| p + t * q).collect();
            let e = -dot(&v, &v) / (2.0 * t);
            (v, e)
        })
        .collect();
    let lead = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    let mut den = KahanSum::new();
    let mut num: Vec<KahanSum> = vec![KahanSum::new(); n];
    for (v, e) in &data {
        let w = (e - lead).exp();
        let vals = rs.root_values(v);
        let prod: f64 = vals.iter().product();
        den.add(prod * w);
        // ∇Πα(v) = Σ_α α Π_{β≠α} β(v).
        let mut grad = vec![0.0; n];
        for (i, root) in rs.positive_roots().iter().enumerate() {
            let others: f64 = vals
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| b)
                .product();
            for c in 0..n {
                grad[c] += root[c] * others;
            }
        }
        for c in 0..n {
            num[c].add((grad[c] - prod * v[c] / t) * w);
        }
    }
    let d = den.value();
    Ok((0..n).map(|c| x[c] / t + num[c].value() / d).collect())
}

/// Precomputed character-form evaluator of `φ̂_d(τ, ·)` and its log-gradient
/// for all time slots `τ ≤ t_max`.
pub struct PhiDField {
    rank: usize,
    t_max: f64,
    table: Vec<WeightEntry>,
    lmax: usize,
    tr: Truncation,
    log_c: f64,
}

impl PhiDField {
    pub fn new(rs: &RootSystem, t_max: f64, tr: &Truncation) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::Domain(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        tr.validate()?;
        let cutoff = charsum_cutoff(rs, 1.0 / t_max, 0.0, 1.0, tr)?;
        let table = weight_table(rs, cutoff)?;
        let lmax = table.iter().map(|e| e.shifted[0]).max().unwrap_or(0) as usize;
        Ok(PhiDField {
            rank: rs.rank(),
            t_max,
            table,
            lmax,
            tr: *tr,
            log_c: phi_constant(rs).ln(),
        })
    }

    fn terms(&self, rs: &RootSystem, t: f64) -> Result<&[WeightEntry]> {
        assert_eq!(
            self.rank,
            rs.rank(),
            "field built for a different root system"
        );
        if t > self.t_max * (1.0 + 1e-12) || !(t > 0.0) {
            return Err(Error::Domain(format!(
                "time slot {t} outside (0, {}]",
                self.t_max
            )));
        }
        let cutoff = charsum_cutoff(rs, 1.0 / t, 0.0, 1.0, &self.tr)?;
        let k = self
            .table
            .partition_point(|e| e.nu_norm <= cutoff * (1.0 + 1e-14));
        Ok(&self.table[..k])
    }

    /// `S(z) = (−i)^N Σ dim(λ) A_{λ+ρ}(z) e^{−2π²σ(‖λ+ρ‖²−‖ρ‖²)}` and its gradient.
    fn series(
        &self,
        rs: &RootSystem,
        t: f64,
        z: &[f64],
        with_grad: bool,
    ) -> Result<(f64, Vec<f64>)> {
        let terms = self.terms(rs, t)?;
        let m = rs.ambient_dim();
        let c = 2.0 * PI * PI / t;
        let px = PowerTable::new(rs, &to_complex(z), self.lmax);
        let mut val = ComplexSum::new();
        let mut grad_h = [ComplexSum::new(); MAX_AMBIENT];
        for e in terms {
            let coef = e.dim * (-c * e.nu2_minus_rho2).exp();
            if !with_grad {
                val.add(coef * px.alternant(rs, &e.shifted));
                continue;
            }
            let mut tot = C64::new(0.0, 0.0);
            let mut gh = [C64::new(0.0, 0.0); MAX_AMBIENT];
            for w in rs.weyl_group() {
                let mut term = C64::new(w.sign as f64, 0.0);
                for j in 0..m {
                    term *= px.pow(w.perm[j], e.shifted[j]);
                }
                tot += term;
                for j in 0..m {
                    gh[w.perm[j]] += term * e.shifted[j] as f64;
                }
            }
            val.add(coef * tot);
            for k in 0..m {
                grad_h[k].add(coef * gh[k]);
            }
        }
        let phase = minus_i_pow(rs.num_positive_roots());
        let s = (phase * val.value()).re;
        let grad = if with_grad {
            let gh: Vec<f64> = (0..m)
                .map(|k| (phase * C64::new(0.0, 2.0 * PI) * grad_h[k].value()).re)
                .collect();
            rs.from_ambient(&gh)
        } else {
            Vec::new()
        };
        Ok((s, grad))
    }

    /// `log φ̂_d(t, x)`; `−∞` outside the open chamber.
    pub fn log_value(&self, rs: &RootSystem, t: f64, x: &[f64]) -> Result<f64> {
        let z: Vec<f64> = x.iter().map(|v| v / t).collect();
        if !rs.is_alcove_interior(&z) {
            return Ok(f64::NEG_INFINITY);
        }
        let (s, _) = self.series(rs, t, &z, false)?;
        if s <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_c + s.ln() + charsum_log_prefactor(rs, 1.0 / t, &z))
    }

    /// `φ̂_d(t, x)`, zero outside the open chamber.
    pub fn value(&self, rs: &RootSystem, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.log_value(rs, t, x)?.exp())
    }

    pub fn grad_log(&self, rs: &RootSystem, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let z: Vec<f64> = x.iter().map(|v| v / t).collect();
        let dist = rs.alcove_wall_distance(&z, 1.0);
        if dist < GRADIENT_WALL_MIN {
            return Err(Error::Boundary { distance: dist });
        }
        let (s, g) = self.series(rs, t, &z, true)?;
        if !(s > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive φ̂_d series {s:e} at {z:?}"
            )));
        }
        Ok(x.iter()
            .zip(&g)
            .map(|(xi, gi)| xi / t + gi / (t * s))
            .collect())
    }
}

/// `φ̂_d(1/σ, z/σ)` expressed through the heat kernel:
/// `C (2πσ)^{n/2} e^{|z|²/(2σ)} e^{−2π²σ‖ρ‖²} p_1^σ(e^z) (−i)^N π(z)`.
pub fn phi_hat_d_from_heat_kernel(
    rs: &RootSystem,
    sigma: f64,
    z: &[f64],
    tr: &Truncation,
) -> Result<f64> {
    let hk = crate::charfun::HeatKernel::new(rs, sigma, tr)?;
    let pi = minus_i_pow(rs.num_positive_roots()) * pi_value_real(rs, z);
    Ok(phi_constant(rs) * charsum_log_prefactor(rs, sigma, z).exp() * hk.value(rs, z) * pi.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_root_system, Family};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn a(n: usize) -> RootSystem {
        build_root_system(Family::A, n).unwrap()
    }

    fn real(y: &[f64]) -> Vec<C64> {
        to_complex(y)
    }

    // Random point strictly inside the alcove, at wall distance ≥ margin (barycentric).
    fn interior_point(rs: &RootSystem, rng: &mut ChaCha8Rng, margin: f64) -> Vec<f64> {
        let verts = rs.alcove_vertices();
        let k = verts.len();
        let raw: Vec<f64> = (0..k).map(|_| margin + rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        (0..rs.rank())
            .map(|c| verts.iter().zip(&raw).map(|(v, r)| v[c] * r / s).sum())
            .collect()
    }

    #[test]
    fn constant_is_inverse_sqrt_of_ambient_dimension() {
        for n in 1..=3 {
            let rs = a(n);
            let c = phi_constant(&rs);
            assert!(
                (c - 1.0 / ((n + 1) as f64).sqrt()).abs() < 1e-10,
                "rank {n}: {c}"
            );
        }
    }

    #[test]
    fn rank_one_lattice_oracle() {
        let rs = a(1);
        let s2 = 2f64.sqrt();
        let (b, aa) = (1.0, 1.0);
        let y = 0.3 / s2;
        let x = 0.2 * s2;
        let mut sum = 0.0;
        for m in -12i32..=12 {
            let g = m as f64 * s2;
            for s in [1.0, -1.0] {
                sum += s * (s * (x + aa * g) * y - b * (x * g + 0.5 * aa * g * g)).exp();
            }
        }
        let expect = sum / (2.0 * (0.3 * PI).sin());
        let args = PhiArgs {
            b,
            y: real(&[y]),
            a: aa,
            x: vec![x],
        };
        let v = phi_hat_lattice(&rs, &args, &Truncation::default()).unwrap();
        assert!((v.re - expect).abs() < 1e-10 * expect.abs() && v.im.abs() < 1e-12);
    }

    #[test]
    fn lattice_weyl_antisymmetry() {
        let rs = a(2);
        let tr = Truncation::default();
        let x = vec![0.21, -0.13];
        let y = vec![C64::new(0.4, 0.1), C64::new(-0.2, 0.05)];
        let base = phi_hat_lattice(
            &rs,
            &PhiArgs {
                b: 1.3,
                y: y.clone(),
                a: 6.0,
                x: x.clone(),
            },
            &tr,
        )
        .unwrap();
        for w in rs.weyl_group() {
            let args = PhiArgs {
                b: 1.3,
                y: y.clone(),
                a: 6.0,
                x: w.apply(&x),
            };
            let v = phi_hat_lattice(&rs, &args, &tr).unwrap() * w.sign as f64;
            assert!((v - base).norm() < 1e-10 * base.norm());
        }
    }

    #[test]
    fn lattice_refuses_small_denominator() {
        let rs = a(2);
        let args = PhiArgs {
            b: 1.0,
            y: real(&[1e-12, 0.0]),
            a: 1.0,
            x: vec![0.1, 0.1],
        };
        assert!(matches!(
            phi_hat_lattice(&rs, &args, &Truncation::default()),
            Err(Error::SingularInput(_))
        ));
    }

    #[test]
    fn two_forms_agree() {
        let tr = Truncation::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=2 {
            let rs = a(n);
            for _ in 0..20 {
                // Small σ: the lattice form is only accurate at large slots.
                let sigma = 1.0 / (4.0 + 4.0 * rng.random::<f64>());
                let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                let y: Vec<f64> = (0..n).map(|_| 1.5 * (rng.random::<f64>() - 0.5)).collect();
                let cs = phi_hat_charsum(&rs, sigma, &x, &real(&y), &tr).unwrap();
                let args = PhiArgs {
                    b: 1.0,
                    y: real(&y),
                    a: 1.0 / sigma,
                    x: x.iter().map(|v| v / sigma).collect(),
                };
                let lt = phi_hat_lattice(&rs, &args, &tr).unwrap();
                assert!(
                    (cs - lt).norm() <= 1e-8 * lt.norm(),
                    "rank {n}: {cs} vs {lt}"
                );
            }
        }
    }

    #[test]
    fn two_forms_agree_for_complex_y() {
        let rs = a(2);
        let tr = Truncation::default();
        let x = [0.17, 0.05];
        let y = [C64::new(0.3, 0.2), C64::new(-0.1, 0.4)];
        let sigma = 1.0 / 6.0;
        let cs = phi_hat_charsum(&rs, sigma, &x, &y, &tr).unwrap();
        let args = PhiArgs {
            b: 1.0,
            y: y.to_vec(),
            a: 1.0 / sigma,
            x: x.iter().map(|v| v / sigma).collect(),
        };
        let lt = phi_hat_lattice(&rs, &args, &tr).unwrap();
        assert!((cs - lt).norm() <= 1e-8 * lt.norm());
    }

    #[test]
    fn phi_d_positive_inside_and_zero_on_walls() {
        let tr = Truncation::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=2 {
            let rs = a(n);
            for &t in &[0.3, 1.0, 2.5, 8.0] {
                for _ in 0..10 {
                    let z = interior_point(&rs, &mut rng, 0.02);
                    let x: Vec<f64> = z.iter().map(|v| v * t).collect();
                    assert!(phi_hat_d(&rs, t, &x, &tr).unwrap() > 0.0);
                }
                let scale = phi_hat_d(
                    &rs,
                    t,
                    &rs.alcove_barycenter()
                        .iter()
                        .map(|v| v * t)
                        .collect::<Vec<_>>(),
                    &tr,
                )
                .unwrap();
                let verts = rs.alcove_vertices();
                for skip in 0..verts.len() {
                    // Centroid of the face opposite one vertex.
                    let others: Vec<&Vec<f64>> = verts
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != skip)
                        .map(|(_, v)| v)
                        .collect();
                    let x: Vec<f64> = (0..n)
                        .map(|c| t * others.iter().map(|v| v[c]).sum::<f64>() / others.len() as f64)
                        .collect();
                    assert!(phi_hat_d(&rs, t, &x, &tr).unwrap().abs() <= 1e-8 * scale);
                    let y = real(&crate::charfun::generic_direction(n));
                    let vy = phi_hat(&rs, t, &x, &y, &tr).unwrap();
                    assert!(vy.norm() <= 1e-8 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn limit_form_matches_character_form() {
        let tr = Truncation::default();
        let rs = a(2);
        let zero = vec![C64::new(0.0, 0.0); 2];
        for &t in &[5.0, 6.0, 9.0] {
            let z = [0.2, 0.1];
            let x: Vec<f64> = z.iter().map(|v| v * t).collect();
            let l = phi_hat_d_lattice(&rs, 1.0, t, &x, &tr).unwrap();
            let c = phi_hat_charsum(&rs, 1.0 / t, &z, &zero, &tr).unwrap().re;
            assert!((l - c).abs() <= 1e-9 * c.abs(), "{l} vs {c}");
            let h = phi_hat_d_from_heat_kernel(&rs, 1.0 / t, &z, &tr).unwrap();
            assert!((h - c).abs() <= 1e-9 * c.abs());
        }
    }

    #[test]
    fn theta_ratio_is_constant() {
        let tr = Truncation::default();
        for n in 1..=2 {
            let rs = a(n);
            let mut ratios = Vec::new();
            for i in 0..5 {
                for j in 0..5 {
                    let t = 0.2 + 0.4 * j as f64;
                    let x: Vec<f64> = (0..n).map(|c| 0.13 * i as f64 - 0.07 * c as f64).collect();
                    let (l, r) = theta_pair(&rs, &x, t, &tr).unwrap();
                    ratios.push(l / r);
                }
            }
            let expect = ((n + 1) as f64).sqrt();
            for r in &ratios {
                assert!((r / expect - 1.0).abs() < 1e-10, "rank {n}: {r}");
            }
        }
        let rs = a(2);
        let x = [0.3, -0.2];
        let shifted: Vec<f64> = x
            .iter()
            .zip(&rs.simple_roots()[1])
            .map(|(p, q)| p + q)
            .collect();
        let (l1, _) = theta_pair(&rs, &x, 0.7, &tr).unwrap();
        let (l2, _) = theta_pair(&rs, &shifted, 0.7, &tr).unwrap();
        assert!((l1 - l2).abs() < 1e-12 * l1.abs());
    }

    fn fd_grad_log(rs: &RootSystem, t: f64, x: &[f64], tr: &Truncation) -> Vec<f64> {
        let h = 1e-5 * t;
        (0..x.len())
            .map(|c| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[c] += h;
                m[c] -= h;
                (phi_hat_d(rs, t, &p, tr).unwrap().ln() - phi_hat_d(rs, t, &m, tr).unwrap().ln())
                    / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let tr = Truncation::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=2 {
            let rs = a(n);
            for &t in &[0.5, 1.0, 2.0, 7.0] {
                for _ in 0..20 {
                    let z = interior_point(&rs, &mut rng, 0.05);
                    let x: Vec<f64> = z.iter().map(|v| v * t).collect();
                    let g = grad_log_phi_d(&rs, t, &x, &tr).unwrap();
                    let f = fd_grad_log(&rs, t, &x, &tr);
                    let scale = norm(&f).max(1.0);
                    for (p, q) in g.iter().zip(&f) {
                        assert!(
                            (p - q).abs() <= 1e-5 * scale,
                            "rank {n} t {t}: {g:?} vs {f:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn lattice_and_character_gradients_agree() {
        let tr = Truncation::default();
        let rs = a(2);
        let t = 7.0;
        let x: Vec<f64> = rs.alcove_barycenter().iter().map(|v| 0.8 * v * t).collect();
        let field = PhiDField::new(&rs, t, &tr).unwrap();
        let g1 = field.grad_log(&rs, t, &x).unwrap();
        let g2 = grad_log_lattice(&rs, t, &x, &tr).unwrap();
        for (p, q) in g1.iter().zip(&g2) {
            assert!((p - q).abs() < 1e-8 * norm(&g2).max(1.0));
        }
        let lv = field.log_value(&rs, t, &x).unwrap();
        let direct = phi_hat_d_lattice(&rs, 1.0, t, &x, &tr).unwrap().ln();
        assert!((lv - direct).abs() < 1e-9);
    }

    #[test]
    fn gradient_rank_one_closed_form_and_sign() {
        let rs = a(1);
        let tr = Truncation::default();
        let s2 = 2f64.sqrt();
        for &t in &[0.5, 1.0, 2.0] {
            // Closed form in u = α(x): φ̂_d ∝ Σ_m (u + 2tm) e^{−um − tm²}.
            let f = |u: f64, du: bool| -> f64 {
                (-60i32..=60)
                    .map(|m| {
                        let m = m as f64;
                        let e = (-u * m - t * m * m).exp();
                        if du {
                            e * (1.0 - m * (u + 2.0 * t * m))
                        } else {
                            (u + 2.0 * t * m) * e
                        }
                    })
                    .sum()
            };
            for u in [0.5 * t, 0.3 * t, 0.8 * t] {
                let g = grad_log_phi_d(&rs, t, &[u / s2], &tr).unwrap();
                let oracle = s2 * f(u, true) / f(u, false);
                assert!(
                    (g[0] - oracle).abs() < 1e-7 * oracle.abs().max(1.0),
                    "{g:?} vs {oracle}"
                );
            }
            let low = grad_log_phi_d(&rs, t, &[1e-4 * t / s2], &tr).unwrap();
            assert!(low[0] > 0.0);
        }
        assert!(matches!(
            grad_log_phi_d(&rs, 1.0, &[1e-10], &tr),
            Err(Error::Boundary { .. })
        ));
    }

    // Single lattice term: det(w) e^{(w(b+τγ), y) − ((b,γ) + ½τ|γ|²)}.
    fn lattice_term(
        rs: &RootSystem,
        w: usize,
        gamma: &[f64],
        y: &[C64],
        tau: f64,
        pos: &[f64],
    ) -> C64 {
        let el = &rs.weyl_group()[w];
        let v: Vec<f64> = pos.iter().zip(gamma).map(|(p, q)| p + tau * q).collect();
        let wv = to_complex(&el.apply(&v));
        let e = bilinear(&wv, y) - dot(pos, gamma) - 0.5 * tau * dot(gamma, gamma);
        el.sign as f64 * e.exp()
    }

    #[test]
    fn lattice_terms_solve_the_heat_equation() {
        let rs = a(2);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-3;
        for k in 0..25 {
            // The first cases take y = 0, where the terms are space-time harmonic.
            let scale_y = if k < 5 { 0.0 } else { 1.0 };
            let y: Vec<C64> = (0..2)
                .map(|_| scale_y * C64::new(rng.random::<f64>() - 0.5, 0.3 * rng.random::<f64>()))
                .collect();
            let tau = 0.5 + rng.random::<f64>();
            let pos: Vec<f64> = (0..2).map(|_| 0.3 * rng.random::<f64>()).collect();
            let gamma = &rs.coroot_lattice_ball(1.5).unwrap()[rng.random_range(0..7)];
            let w = rng.random_range(0..6);
            let f = |t: f64, p: &[f64]| lattice_term(&rs, w, gamma, &y, t, p);
            let f0 = f(tau, &pos);
            let mut lap = C64::new(0.0, 0.0);
            for c in 0..2 {
                let mut p = pos.clone();
                let mut m = pos.clone();
                p[c] += h;
                m[c] -= h;
                lap += (f(tau, &p) - 2.0 * f0 + f(tau, &m)) / (h * h);
            }
            let dt = (f(tau + h, &pos) - f(tau - h, &pos)) / (2.0 * h);
            let resid = 0.5 * lap + dt - 0.5 * bilinear(&y, &y) * f0;
            assert!(resid.norm() <= 1e-4 * f0.norm().max(1.0), "{resid}");
        }
    }
}
