//! Brownian motion on `SU(n+1)` and its Lie algebra.
//!
//! Algebra elements are coordinate vectors in a fixed orthonormal basis of
//! `(𝔨, (X,Y) = −tr(XY)/(4π²))`: first the Cartan directions
//! `2πi·diag(B_k)` for the orthonormal Cartan basis, then for each `j < k`
//! the pair `2π(E_jk − E_kj)/√2`, `2πi(E_jk + E_kj)/√2`. Matrices are only
//! built inside exponentials.

use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::charfun::C64;
use crate::error::{Error, Result};
use crate::rng::SeedRecord;
use crate::rootsys::{AlcovePoint, Family, RootSystem, MAX_AMBIENT};

pub type CMatrix = DMatrix<C64>;

/// Unitarity drift beyond which a path is re-orthonormalised.
pub const REORTH_TOL: f64 = 1e-12;

/// A discretised Brownian path in `𝔨` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub sigma: f64,
    /// `S` increments, each a coordinate vector of length `dim 𝔨`.
    pub increments: Vec<Vec<f64>>,
    pub seed: Option<SeedRecord>,
}

impl PathSample {
    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    /// Cumulative values `x_{k/S}`, `k = 0..=S`.
    pub fn cumulative(&self) -> Vec<Vec<f64>> {
        let dim = self.increments.first().map_or(0, |v| v.len());
        let mut out = Vec::with_capacity(self.steps() + 1);
        let mut cur = vec![0.0; dim];
        out.push(cur.clone());
        for inc in &self.increments {
            for (c, d) in cur.iter_mut().zip(inc) {
                *c += d;
            }
            out.push(cur.clone());
        }
        out
    }

    /// The path on a grid coarser by `factor` (summed increments).
    pub fn coarsen(&self, factor: usize) -> Result<PathSample> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return Err(Error::Domain(format!(
                "cannot coarsen {} steps by {factor}",
                self.steps()
            )));
        }
        let increments = self
            .increments
            .chunks(factor)
            .map(|chunk| {
                let mut s = vec![0.0; chunk[0].len()];
                for inc in chunk {
                    for (a, b) in s.iter_mut().zip(inc) {
                        *a += b;
                    }
                }
                s
            })
            .collect();
        Ok(PathSample {
            sigma: self.sigma,
            increments,
            seed: self.seed.clone(),
        })
    }
}

/// An element of `SU(n+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: CMatrix,
}

impl GroupElement {
    pub fn identity(rs: &RootSystem) -> Self {
        let m = rs.ambient_dim();
        GroupElement {
            matrix: CMatrix::identity(m, m),
        }
    }

    /// `‖U*U − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.matrix.nrows();
        (self.matrix.adjoint() * &self.matrix - CMatrix::identity(m, m)).norm()
    }

    pub fn det(&self) -> C64 {
        self.matrix.determinant()
    }

    pub fn adjoint(&self) -> Self {
        GroupElement {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn mul(&self, other: &GroupElement) -> Self {
        GroupElement {
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `Tr` in the defining representation.
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Brownian sheet increments over the rectangles `[s_i, s_{i+1}] × [t_{j−1}, t_j]`
/// with `s_i = i/S` and `t_0 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetSample {
    pub s_steps: usize,
    pub t_grid: Vec<f64>,
    /// Row-major `[i][j][coordinate]`.
    pub increments: Vec<f64>,
    pub dim: usize,
    pub seed: Option<SeedRecord>,
}

impl SheetSample {
    pub fn rect(&self, i: usize, j: usize) -> &[f64] {
        let off = (i * self.t_grid.len() + j) * self.dim;
        &self.increments[off..off + self.dim]
    }

    /// The path `s ↦ x_s^{t_k} / t_k` as a [`PathSample`] of variance `1/t_k`.
    pub fn scaled_path(&self, k: usize) -> PathSample {
        let t = self.t_grid[k];
        let increments = (0..self.s_steps)
            .map(|i| {
                let mut v = vec![0.0; self.dim];
                for j in 0..=k {
                    for (a, b) in v.iter_mut().zip(self.rect(i, j)) {
                        *a += b;
                    }
                }
                v.iter_mut().for_each(|a| *a /= t);
                v
            })
            .collect();
        PathSample {
            sigma: 1.0 / t,
            increments,
            seed: self.seed.clone(),
        }
    }
}

/// Matrix of the algebra element with the given coordinates.
pub fn algebra_matrix(rs: &RootSystem, coords: &[f64]) -> CMatrix {
    let n = rs.rank();
    let m = rs.ambient_dim();
    let mut x = CMatrix::zeros(m, m);
    let h = rs.to_ambient(&coords[..n]);
    for j in 0..m {
        x[(j, j)] = C64::new(0.0, 2.0 * PI * h[j]);
    }
    let c = 2.0 * PI / SQRT_2;
    let mut idx = n;
    for j in 0..m {
        for k in (j + 1)..m {
            let (a, b) = (coords[idx], coords[idx + 1]);
            idx += 2;
            x[(j, k)] += C64::new(c * a, c * b);
            x[(k, j)] += C64::new(-c * a, c * b);
        }
    }
    x
}

/// Coordinates of the orthogonal projection of `x` onto `𝔨`
/// (anti-Hermitian, trace-free part).
pub fn algebra_coords(rs: &RootSystem, x: &CMatrix) -> Vec<f64> {
    let n = rs.rank();
    let m = rs.ambient_dim();
    let mut out = Vec::with_capacity(rs.algebra_dim());
    let diag: Vec<f64> = (0..m).map(|j| x[(j, j)].im / (2.0 * PI)).collect();
    out.extend(rs.from_ambient(&diag));
    let c = 2.0 * PI / SQRT_2;
    for j in 0..m {
        for k in (j + 1)..m {
            // Basis element E has entries (c, −c) real or (ic, ic); (X,E) = −tr(XE)/4π².
            let re = (x[(j, k)].re - x[(k, j)].re) * c / (4.0 * PI * PI);
            let im = (x[(j, k)].im + x[(k, j)].im) * c / (4.0 * PI * PI);
            out.push(re);
            out.push(im);
        }
    }
    debug_assert_eq!(out.len(), n + m * (m - 1));
    out
}

/// `exp(X)` for anti-Hermitian trace-free `X`.
pub fn exp_algebra(x: &CMatrix) -> Result<CMatrix> {
    let m = x.nrows();
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Data("non-finite algebra element".into()));
    }
    if m == 2 {
        // X² = −det(X)·I, det(X) = θ² ≥ 0.
        let theta = x.determinant().re.max(0.0).sqrt();
        let (s, c) = theta.sin_cos();
        let sinc = if theta < 1e-8 {
            1.0 - theta * theta / 6.0
        } else {
            s / theta
        };
        return Ok(CMatrix::identity(2, 2) * C64::new(c, 0.0) + x * C64::new(sinc, 0.0));
    }
    // X = iH with H Hermitian.
    let h = x * C64::new(0.0, -1.0);
    let eig = nalgebra::SymmetricEigen::try_new(h, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition failed".into()))?;
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, l).exp()));
    Ok(v * phases * v.adjoint())
}

/// Projects a nearly unitary matrix back to `SU(n+1)`: Gram–Schmidt via QR
/// followed by removal of the determinant phase.
pub fn reorthonormalize(u: &CMatrix) -> CMatrix {
    let m = u.nrows();
    let qr = u.clone().qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..m {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= ph;
        }
    }
    remove_det_phase(&mut q);
    q
}

fn remove_det_phase(q: &mut CMatrix) {
    let m = q.nrows();
    let det = q.determinant();
    let fix = C64::from_polar(1.0, -det.arg() / m as f64);
    *q *= fix;
}

/// `S` iid increments `N(0, σ/S)` per coordinate.
pub fn sample_bm_path<R: Rng>(
    rs: &RootSystem,
    sigma: f64,
    steps: usize,
    rng: &mut R,
) -> Result<PathSample> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("σ must be positive, got {sigma}")));
    }
    if steps == 0 {
        return Err(Error::Domain("at least one step is required".into()));
    }
    let dim = rs.algebra_dim();
    let sd = (sigma / steps as f64).sqrt();
    let increments = (0..steps)
        .map(|_| {
            (0..dim)
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    Ok(PathSample {
        sigma,
        increments,
        seed: None,
    })
}

/// Same as [`sample_bm_path`], drawing from the stream of `seed`.
pub fn sample_bm_path_seeded(
    rs: &RootSystem,
    sigma: f64,
    steps: usize,
    seed: SeedRecord,
) -> Result<PathSample> {
    let mut rng = seed.rng();
    let mut p = sample_bm_path(rs, sigma, steps, &mut rng)?;
    p.seed = Some(seed);
    Ok(p)
}

/// Result of a Lie–Euler solve.
#[derive(Clone, Debug)]
pub struct StochasticExp {
    pub endpoint: GroupElement,
    /// `X_{k/S}` for `k = 0..=S` when requested.
    pub path: Option<Vec<GroupElement>>,
    /// Number of re-orthonormalisation events.
    pub reorthonormalizations: usize,
}

/// Solves `λ dX = X ∘ dx`, `X_0 = I`, by the Lie–Euler scheme
/// `X_{k+1} = X_k exp(Δx_k / λ)`.
pub fn stochastic_exponential(
    rs: &RootSystem,
    path: &PathSample,
    lambda: f64,
    keep_path: bool,
) -> Result<StochasticExp> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
    }
    let dim = rs.algebra_dim();
    for inc in &path.increments {
        if inc.len() != dim {
            return Err(Error::Data(format!(
                "increment of length {} for dim 𝔨 = {dim}",
                inc.len()
            )));
        }
        if inc.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite path increment".into()));
        }
    }
    if rs.ambient_dim() == 2 && !keep_path {
        return Ok(StochasticExp {
            endpoint: su2_product(rs, path, lambda),
            path: None,
            reorthonormalizations: 0,
        });
    }
    let m = rs.ambient_dim();
    let mut x = CMatrix::identity(m, m);
    let mut events = 0;
    let mut out = keep_path.then(|| vec![GroupElement { matrix: x.clone() }]);
    let scaled: Vec<f64> = vec![0.0; dim];
    let mut scaled = scaled;
    for inc in &path.increments {
        for (s, v) in scaled.iter_mut().zip(inc) {
            *s = v / lambda;
        }
        x = &x * exp_algebra(&algebra_matrix(rs, &scaled))?;
        let defect = (x.adjoint() * &x - CMatrix::identity(m, m)).norm();
        if defect > REORTH_TOL {
            x = reorthonormalize(&x);
            events += 1;
        }
        if let Some(p) = out.as_mut() {
            p.push(GroupElement { matrix: x.clone() });
        }
    }
    Ok(StochasticExp {
        endpoint: GroupElement { matrix: x },
        path: out,
        reorthonormalizations: events,
    })
}

// SU(2) as unit quaternions q = (w, v): the element exp(Σ c_k E_k) with
// |c| = θ/(2π) in the normalised form corresponds to rotation angle θ.
fn su2_product(rs: &RootSystem, path: &PathSample, lambda: f64) -> GroupElement {
    // In the basis (E_0 = 2πi diag(1,−1)/√2, E_1 = 2π(E_01 − E_10)/√2,
    // E_2 = 2πi(E_01 + E_10)/√2), E_k = √2·π·(i σ_z, iσ_y-like, i σ_x) with
    // (E_k)² = −2π² I, so exp(Σ c_k E_k) = cos θ + sin θ·Σ c_k E_k/θ,
    // θ = √2 π |c|.
    let sign = rs.basis()[0][0].signum();
    let mut q = [1.0f64, 0.0, 0.0, 0.0];
    for inc in &path.increments {
        let c = [sign * inc[0] / lambda, inc[1] / lambda, inc[2] / lambda];
        let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        let theta = SQRT_2 * PI * r;
        let (s, co) = theta.sin_cos();
        let f = if r > 0.0 { s / r } else { SQRT_2 * PI };
        let p = [co, f * c[0], f * c[1], f * c[2]];
        q = quat_mul(&q, &p);
    }
    let nrm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter_mut().for_each(|v| *v /= nrm);
    GroupElement {
        matrix: quat_matrix(&q),
    }
}

// Units I = iσ_z (E_0 direction), J = (E_01 − E_10), K = i(E_01 + E_10),
// with I J = K, J K = I, K I = J and I² = J² = K² = −1.
fn quat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn quat_matrix(q: &[f64; 4]) -> CMatrix {
    // w + a I + b J + c K = [[w + ia, b + ic], [−b + ic, w − ia]].
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(q[0], q[1]),
            C64::new(q[2], q[3]),
            C64::new(-q[2], q[3]),
            C64::new(q[0], -q[1]),
        ],
    )
}

/// Alcove point `r` with `exp(r)` conjugate to `U`.
pub fn radial_part(rs: &RootSystem, u: &GroupElement) -> Result<AlcovePoint> {
    let m = rs.ambient_dim();
    if u.matrix.nrows() != m || u.matrix.ncols() != m {
        return Err(Error::Domain(
            "matrix size does not match the root system".into(),
        ));
    }
    let mut h = [0.0; MAX_AMBIENT];
    if m == 2 {
        // U = [[a, −b̄], [b, ā]], eigenvalues e^{±iθ}, θ ∈ [0, π].
        let a = (u.matrix[(0, 0)] + u.matrix[(1, 1)].conj()) * 0.5;
        let b = (u.matrix[(1, 0)] - u.matrix[(0, 1)].conj()) * 0.5;
        let s = (a.im * a.im + b.norm_sqr()).sqrt();
        let theta = s.atan2(a.re);
        h[0] = theta / (2.0 * PI);
        h[1] = -h[0];
    } else {
        let eig = u
            .matrix
            .clone()
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Numerical("Schur decomposition failed".into()))?;
        for j in 0..m {
            h[j] = eig[j].arg() / (2.0 * PI);
        }
        // det U = 1, so Σ h_j is an integer; remove it from one entry.
        let k = h[..m].iter().sum::<f64>().round();
        h[0] -= k;
    }
    let x = rs.from_ambient(&h[..m]);
    Ok(rs.fold_to_alcove(&x)?.0)
}

/// Haar-distributed element of `SU(n+1)`.
pub fn haar_sample<R: Rng>(rs: &RootSystem, rng: &mut R) -> GroupElement {
    let m = rs.ambient_dim();
    let g = CMatrix::from_fn(m, m, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    GroupElement {
        matrix: reorthonormalize(&g),
    }
}

/// `exp(y)` for a Cartan vector `y`.
pub fn torus_element(rs: &RootSystem, y: &[f64]) -> GroupElement {
    let m = rs.ambient_dim();
    let h = rs.to_ambient(y);
    GroupElement {
        matrix: CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            m,
            (0..m).map(|j| C64::from_polar(1.0, 2.0 * PI * h[j])),
        )),
    }
}

/// Radial part of the stochastic exponential (λ = 1) of a fresh Brownian path.
pub fn rad_of_bm<R: Rng>(
    rs: &RootSystem,
    sigma: f64,
    steps: usize,
    rng: &mut R,
) -> Result<AlcovePoint> {
    let path = sample_bm_path(rs, sigma, steps, rng)?;
    let e = stochastic_exponential(rs, &path, 1.0, false)?;
    radial_part(rs, &e.endpoint)
}

/// Sheet increments for `S` space steps and the given time grid.
pub fn sample_sheet<R: Rng>(
    rs: &RootSystem,
    s_steps: usize,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<SheetSample> {
    if s_steps == 0 {
        return Err(Error::Domain("at least one space step is required".into()));
    }
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "time grid must be positive and strictly increasing".into(),
        ));
    }
    let dim = rs.algebra_dim();
    let ds = 1.0 / s_steps as f64;
    let mut increments = Vec::with_capacity(s_steps * t_grid.len() * dim);
    for _ in 0..s_steps {
        let mut prev = 0.0;
        for &t in t_grid {
            let sd = (ds * (t - prev)).sqrt();
            prev = t;
            for _ in 0..dim {
                increments.push(sd * rng.sample::<f64, _>(StandardNormal));
            }
        }
    }
    Ok(SheetSample {
        s_steps,
        t_grid: t_grid.to_vec(),
        increments,
        dim,
        seed: None,
    })
}

/// `(t, rad(ε(x^t / t)))` along the sheet's time grid.
pub fn sheet_radial_process(
    rs: &RootSystem,
    sheet: &SheetSample,
) -> Result<Vec<(f64, AlcovePoint)>> {
    if sheet.dim != rs.algebra_dim() {
        return Err(Error::Data(
            "sheet dimension does not match the algebra".into(),
        ));
    }
    if sheet.t_grid.is_empty()
        || sheet.t_grid[0] <= 0.0
        || sheet.t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Domain(
            "time grid must be positive and strictly increasing".into(),
        ));
    }
    (0..sheet.t_grid.len())
        .map(|k| {
            let path = sheet.scaled_path(k);
            let e = stochastic_exponential(rs, &path, 1.0, false)?;
            Ok((sheet.t_grid[k], radial_part(rs, &e.endpoint)?))
        })
        .collect()
}

/// Loop `γ_s = exp(g(s))` sampled at `s = k/S`, `k = 0..=S`.
pub fn loop_on_grid(
    rs: &RootSystem,
    generator: impl Fn(f64) -> Vec<f64>,
    steps: usize,
) -> Result<Vec<GroupElement>> {
    (0..=steps)
        .map(|k| {
            let g = generator(k as f64 / steps as f64);
            if g.len() != rs.algebra_dim() {
                return Err(Error::Domain(
                    "loop generator has the wrong dimension".into(),
                ));
            }
            Ok(GroupElement {
                matrix: exp_algebra(&algebra_matrix(rs, &g))?,
            })
        })
        .collect()
}

/// Gauge action on a discretised path:
/// `Δy_k = Ad(γ_k)Δx_k − λ P_𝔨[(γ_{k+1} − γ_k)γ_k^{−1}]`.
pub fn gauge_act(
    rs: &RootSystem,
    gammas: &[GroupElement],
    path: &PathSample,
    lambda: f64,
) -> Result<PathSample> {
    if gammas.len() != path.steps() + 1 {
        return Err(Error::Domain(format!(
            "loop has {} grid values, path needs {}",
            gammas.len(),
            path.steps() + 1
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
    }
    let closed = (&gammas[0].matrix - &gammas[gammas.len() - 1].matrix).norm();
    if closed > 1e-12 {
        return Err(Error::Domain(format!(
            "loop is not closed (endpoint gap {closed:e})"
        )));
    }
    let increments = path
        .increments
        .iter()
        .enumerate()
        .map(|(k, inc)| {
            let g = &gammas[k].matrix;
            let ginv = g.adjoint();
            let ad = g * algebra_matrix(rs, inc) * &ginv;
            let dg = (&gammas[k + 1].matrix - g) * &ginv;
            let y = ad - dg * C64::new(lambda, 0.0);
            algebra_coords(rs, &y)
        })
        .collect();
    Ok(PathSample {
        sigma: path.sigma,
        increments,
        seed: path.seed.clone(),
    })
}

/// `‖ε(γ.x)_1 − γ_0 ε(x)_1 γ_1^{−1}‖_F` for a discretised path and loop.
pub fn gauge_residual(
    rs: &RootSystem,
    gammas: &[GroupElement],
    path: &PathSample,
    lambda: f64,
) -> Result<f64> {
    let moved = gauge_act(rs, gammas, path, lambda)?;
    let lhs = stochastic_exponential(rs, &moved, lambda, false)?.endpoint;
    let base = stochastic_exponential(rs, path, lambda, false)?.endpoint;
    let g0 = &gammas[0].matrix;
    let g1 = &gammas[gammas.len() - 1].matrix;
    let rhs = g0 * base.matrix * g1.adjoint();
    Ok((lhs.matrix - rhs).norm())
}

const DUMP_MAGIC: &[u8; 8] = b"AFFSIMD\0";
/// Version of the binary sample dump format.
pub const DUMP_VERSION: u32 = 1;

/// Writes a path (`t_steps = 0`) or sheet sample in the binary dump format:
/// magic, version (u32), family (u8), rank (u32), S (u64), T (u64), seed (u64),
/// then the increments as little-endian f64 in row-major order.
fn write_dump<W: Write>(
    w: &mut W,
    rs: &RootSystem,
    s: u64,
    t: u64,
    seed: u64,
    data: impl Iterator<Item = f64>,
) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&[match rs.family() {
        Family::A => b'A',
    }])?;
    w.write_all(&(rs.rank() as u32).to_le_bytes())?;
    w.write_all(&s.to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_path_dump<W: Write>(w: &mut W, rs: &RootSystem, path: &PathSample) -> Result<()> {
    let seed = path.seed.as_ref().map_or(0, |s| s.seed);
    write_dump(
        w,
        rs,
        path.steps() as u64,
        0,
        seed,
        path.increments.iter().flatten().copied(),
    )
}

pub fn write_sheet_dump<W: Write>(w: &mut W, rs: &RootSystem, sheet: &SheetSample) -> Result<()> {
    let seed = sheet.seed.as_ref().map_or(0, |s| s.seed);
    write_dump(
        w,
        rs,
        sheet.s_steps as u64,
        sheet.t_grid.len() as u64,
        seed,
        sheet.increments.iter().copied(),
    )
}

/// Header and payload of a binary dump.
#[derive(Clone, Debug, PartialEq)]
pub struct Dump {
    pub version: u32,
    pub family: Family,
    pub rank: usize,
    pub s_steps: u64,
    pub t_steps: u64,
    pub seed: u64,
    pub data: Vec<f64>,
}

pub fn read_dump<R: Read>(r: &mut R) -> Result<Dump> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Data("not an affsim sample dump".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != DUMP_VERSION {
        return Err(Error::Data(format!("unsupported dump version {version}")));
    }
    r.read_exact(&mut b1)?;
    let family = match b1[0] {
        b'A' => Family::A,
        other => return Err(Error::Data(format!("unknown family byte {other}"))),
    };
    r.read_exact(&mut b4)?;
    let rank = u32::from_le_bytes(b4) as usize;
    let mut next = || -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let s_steps = next()?;
    let t_steps = next()?;
    let seed = next()?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.len() % 8 != 0 {
        return Err(Error::Data("truncated dump payload".into()));
    }
    let data = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Dump {
        version,
        family,
        rank,
        s_steps,
        t_steps,
        seed,
        data,
    })
}
