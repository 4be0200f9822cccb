//! Finite root data for the compact simply connected groups SU(n+1).
//!
//! The Cartan subalgebra is realised inside the trace-zero hyperplane of
//! ℝ^{n+1} ("ambient" coordinates `h`), where a Cartan element acts on the
//! defining representation as `2πi·diag(h)`. Public vectors are expressed in
//! an orthonormal basis of that hyperplane, so the invariant form is the
//! Euclidean dot product and the identification of the Cartan subalgebra with
//! its dual is the identity on coordinates. With this scaling the highest root
//! has squared length 2 and the coroot lattice is the kernel of `exp`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported rank.
pub const MAX_RANK: usize = 4;
/// Largest ambient dimension (`MAX_RANK + 1`).
pub const MAX_AMBIENT: usize = MAX_RANK + 1;

/// Tolerance used for alcove membership and wall detection.
pub const ALCOVE_TOL: f64 = 1e-12;

const FOLD_ITERATION_CAP: usize = 10_000;
const DEFAULT_LATTICE_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Family {
    A,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::A => write!(f, "A"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            other => Err(Error::config(
                "family",
                format!("unsupported root system family `{other}` (supported: A)"),
            )),
        }
    }
}

/// An element of the finite Weyl group, stored both as a permutation of the
/// ambient coordinates and as an orthogonal matrix in the orthonormal basis.
#[derive(Clone, Debug)]
pub struct WeylElement {
    /// `(w h)[perm[j]] = h[j]`.
    pub perm: Vec<usize>,
    /// Row-major `rank × rank` matrix.
    pub matrix: Vec<f64>,
    /// `det(w) = ±1`.
    pub sign: i32,
}

impl WeylElement {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[i * n + j] * x[j]).sum())
            .collect()
    }
}

/// A dominant (or general integral) weight with its Dynkin labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    pub dynkin: Vec<i64>,
    pub coords: Vec<f64>,
}

impl Weight {
    pub fn is_dominant(&self) -> bool {
        self.dynkin.iter().all(|&a| a >= 0)
    }
}

/// A point of the closed fundamental alcove `A = {x : 0 ≤ α(x) ≤ 1, α > 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlcovePoint {
    coords: Vec<f64>,
}

impl AlcovePoint {
    /// Checks the alcove constraints (within [`ALCOVE_TOL`]).
    pub fn new(rs: &RootSystem, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != rs.rank() {
            return Err(Error::Domain(format!(
                "alcove point has {} coordinates, rank is {}",
                coords.len(),
                rs.rank()
            )));
        }
        if !rs.in_alcove(&coords, ALCOVE_TOL) {
            return Err(Error::Domain(format!(
                "{coords:?} is not in the fundamental alcove"
            )));
        }
        Ok(AlcovePoint { coords })
    }

    pub(crate) fn new_unchecked(coords: Vec<f64>) -> Self {
        AlcovePoint { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Immutable Cartan and Weyl data for a compact simple group of type A.
#[derive(Debug)]
pub struct RootSystem {
    family: Family,
    rank: usize,
    /// Orthonormal basis of the trace-zero hyperplane, `rank` rows of length `rank + 1`.
    basis: Vec<Vec<f64>>,
    simple_roots: Vec<Vec<f64>>,
    positive_roots: Vec<Vec<f64>>,
    /// Ambient index pairs `(j, k)`, `j < k`, of the positive roots `e_j - e_k`.
    root_pairs: Vec<(usize, usize)>,
    coroots: Vec<Vec<f64>>,
    fundamental_weights: Vec<Vec<f64>>,
    rho: Vec<f64>,
    theta: Vec<f64>,
    dual_coxeter: u32,
    weyl_group: Vec<WeylElement>,
    lattice_cap: usize,
    pub(crate) phi_constant: OnceLock<f64>,
}

pub fn build_root_system(family: Family, rank: usize) -> Result<RootSystem> {
    RootSystem::new(family, rank)
}

impl RootSystem {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        match family {
            Family::A => {}
        }
        if !(1..=MAX_RANK).contains(&rank) {
            return Err(Error::config(
                "rank",
                format!("rank {rank} outside supported range 1..={MAX_RANK}"),
            ));
        }
        let n = rank;
        let m = n + 1;

        // Helmert basis of the trace-zero hyperplane.
        let basis: Vec<Vec<f64>> = (1..=n)
            .map(|k| {
                let s = 1.0 / ((k * (k + 1)) as f64).sqrt();
                (0..m)
                    .map(|j| match j.cmp(&k) {
                        std::cmp::Ordering::Less => s,
                        std::cmp::Ordering::Equal => -(k as f64) * s,
                        std::cmp::Ordering::Greater => 0.0,
                    })
                    .collect()
            })
            .collect();

        let reduce = |h: &[f64]| -> Vec<f64> {
            basis
                .iter()
                .map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum())
                .collect()
        };
        let unit_diff = |j: usize, k: usize| -> Vec<f64> {
            let mut h = vec![0.0; m];
            h[j] = 1.0;
            h[k] = -1.0;
            h
        };

        let simple_roots: Vec<Vec<f64>> = (0..n).map(|i| reduce(&unit_diff(i, i + 1))).collect();
        let mut root_pairs = Vec::new();
        let mut positive_roots = Vec::new();
        for j in 0..m {
            for k in (j + 1)..m {
                root_pairs.push((j, k));
                positive_roots.push(reduce(&unit_diff(j, k)));
            }
        }
        // Simply laced with (α, α) = 2: coroots coincide with roots.
        let coroots = positive_roots.clone();
        let fundamental_weights: Vec<Vec<f64>> = (1..=n)
            .map(|i| {
                let h: Vec<f64> = (0..m)
                    .map(|j| if j < i { 1.0 } else { 0.0 } - i as f64 / m as f64)
                    .collect();
                reduce(&h)
            })
            .collect();
        let rho: Vec<f64> = (0..n)
            .map(|c| fundamental_weights.iter().map(|w| w[c]).sum())
            .collect();
        let theta = reduce(&unit_diff(0, n));

        let weyl_group = permutations(m)
            .into_iter()
            .map(|perm| {
                let sign = permutation_sign(&perm);
                let mut matrix = vec![0.0; n * n];
                // w_reduced = B P Bᵀ with P[perm[j]][j] = 1.
                for a in 0..n {
                    for b in 0..n {
                        matrix[a * n + b] = (0..m).map(|j| basis[a][perm[j]] * basis[b][j]).sum();
                    }
                }
                WeylElement { perm, matrix, sign }
            })
            .collect();

        let mut rs = RootSystem {
            family,
            rank,
            basis,
            simple_roots,
            positive_roots,
            root_pairs,
            coroots,
            fundamental_weights,
            rho,
            theta,
            dual_coxeter: 0,
            weyl_group,
            lattice_cap: DEFAULT_LATTICE_CAP,
            phi_constant: OnceLock::new(),
        };
        let theta_coroot = rs.theta.clone();
        rs.dual_coxeter = 1 + dot(&rs.rho, &theta_coroot).round() as u32;
        Ok(rs)
    }

    /// Limits the number of points a lattice enumeration may return.
    pub fn with_lattice_cap(mut self, cap: usize) -> Self {
        self.lattice_cap = cap;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn ambient_dim(&self) -> usize {
        self.rank + 1
    }
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }
    pub fn simple_roots(&self) -> &[Vec<f64>] {
        &self.simple_roots
    }
    pub fn positive_roots(&self) -> &[Vec<f64>] {
        &self.positive_roots
    }
    pub(crate) fn root_pairs(&self) -> &[(usize, usize)] {
        &self.root_pairs
    }
    pub fn coroots(&self) -> &[Vec<f64>] {
        &self.coroots
    }
    /// Simple coroots; equal to the simple roots under the chosen normalisation.
    pub fn simple_coroots(&self) -> &[Vec<f64>] {
        &self.simple_roots
    }
    pub fn fundamental_weights(&self) -> &[Vec<f64>] {
        &self.fundamental_weights
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn dual_coxeter(&self) -> u32 {
        self.dual_coxeter
    }
    pub fn weyl_group(&self) -> &[WeylElement] {
        &self.weyl_group
    }
    pub fn num_positive_roots(&self) -> usize {
        self.positive_roots.len()
    }
    /// Dimension of the compact Lie algebra, `(n+1)² − 1`.
    pub fn algebra_dim(&self) -> usize {
        (self.rank + 1) * (self.rank + 1) - 1
    }

    /// Ambient (trace-zero) coordinates of `x`.
    pub fn to_ambient(&self, x: &[f64]) -> [f64; MAX_AMBIENT] {
        let mut h = [0.0; MAX_AMBIENT];
        for (row, &c) in self.basis.iter().zip(x) {
            for (hj, bj) in h.iter_mut().zip(row) {
                *hj += c * bj;
            }
        }
        h
    }

    /// Orthonormal coordinates of the projection of `h` onto the trace-zero hyperplane.
    pub fn from_ambient(&self, h: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Values `α(x)` for all positive roots, in the order of [`Self::positive_roots`].
    pub fn root_values(&self, x: &[f64]) -> Vec<f64> {
        let h = self.to_ambient(x);
        self.root_pairs.iter().map(|&(j, k)| h[j] - h[k]).collect()
    }

    pub fn in_alcove(&self, x: &[f64], tol: f64) -> bool {
        let h = self.to_ambient(x);
        self.root_pairs
            .iter()
            .all(|&(j, k)| h[j] - h[k] >= -tol && h[j] - h[k] <= 1.0 + tol)
    }

    /// Euclidean distance from `x` to the boundary of `scale·A` (negative outside).
    pub fn alcove_wall_distance(&self, x: &[f64], scale: f64) -> f64 {
        let h = self.to_ambient(x);
        let inv_len = std::f64::consts::FRAC_1_SQRT_2;
        let mut d = f64::INFINITY;
        for i in 0..self.rank {
            d = d.min((h[i] - h[i + 1]) * inv_len);
        }
        d.min((scale - (h[0] - h[self.rank])) * inv_len)
    }

    /// Vertices of the fundamental alcove: the origin and the fundamental coweights.
    pub fn alcove_vertices(&self) -> Vec<Vec<f64>> {
        let mut v = vec![vec![0.0; self.rank]];
        v.extend(self.fundamental_weights.iter().cloned());
        v
    }

    /// Barycenter of the fundamental alcove.
    pub fn alcove_barycenter(&self) -> Vec<f64> {
        let verts = self.alcove_vertices();
        let k = verts.len() as f64;
        (0..self.rank)
            .map(|c| verts.iter().map(|v| v[c]).sum::<f64>() / k)
            .collect()
    }

    /// Lebesgue volume of the fundamental alcove.
    pub fn alcove_volume(&self) -> f64 {
        let n = self.rank;
        let verts = self.alcove_vertices();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = verts[i + 1][j];
            }
        }
        m.determinant().abs() / factorial(n)
    }

    /// Dynkin labels `(λ, α_i^∨)` of a weight.
    pub fn dynkin_labels(&self, lambda: &[f64]) -> Vec<f64> {
        self.simple_roots.iter().map(|a| dot(a, lambda)).collect()
    }

    pub fn weight_from_dynkin(&self, dynkin: &[i64]) -> Weight {
        let mut coords = vec![0.0; self.rank];
        for (a, w) in dynkin.iter().zip(&self.fundamental_weights) {
            for (c, wc) in coords.iter_mut().zip(w) {
                *c += *a as f64 * wc;
            }
        }
        Weight {
            dynkin: dynkin.to_vec(),
            coords,
        }
    }

    /// Covolume of the coroot lattice, `sqrt(det(Cartan matrix)) = sqrt(n + 1)`.
    pub fn coroot_covolume(&self) -> f64 {
        ((self.rank + 1) as f64).sqrt()
    }

    /// Upper bound on the covering radius of the weight lattice: half the sum
    /// of the basis lengths.
    pub(crate) fn weight_covering_radius(&self) -> f64 {
        0.5 * self
            .fundamental_weights
            .iter()
            .map(|w| norm(w))
            .sum::<f64>()
    }

    /// Upper bound on the covering radius of the coroot lattice.
    pub(crate) fn coroot_covering_radius(&self) -> f64 {
        0.5 * self.rank as f64 * 2f64.sqrt()
    }

    /// Reflection `s_α(x) = x − α(x) α^∨` for a positive root index.
    pub fn reflect(&self, root: usize, x: &[f64]) -> Vec<f64> {
        let a = &self.positive_roots[root];
        let c = dot(a, x);
        x.iter()
            .zip(&self.coroots[root])
            .map(|(xi, ci)| xi - c * ci)
            .collect()
    }

    /// Folds a real Cartan vector into the fundamental alcove under the group
    /// generated by the reflections `s_α` and the translations by coroots.
    ///
    /// Returns the folded point and whether it lies in the open alcove.
    pub fn fold_to_alcove(&self, x: &[f64]) -> Result<(AlcovePoint, bool)> {
        if x.len() != self.rank || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("cannot fold {x:?}")));
        }
        let folded = if self.in_alcove(x, ALCOVE_TOL) {
            x.to_vec()
        } else {
            let direct = self.fold_normal_form(x);
            if self.in_alcove(&direct, ALCOVE_TOL) {
                direct
            } else {
                self.fold_by_reflections(x)?
            }
        };
        let interior = self.is_alcove_interior(&folded);
        Ok((AlcovePoint::new_unchecked(folded), interior))
    }

    pub fn is_alcove_interior(&self, x: &[f64]) -> bool {
        self.root_values(x)
            .iter()
            .all(|&a| a > ALCOVE_TOL && a < 1.0 - ALCOVE_TOL)
    }

    /// Type-A normal form: reduce ambient coordinates mod 1, sort decreasingly
    /// and shift the largest `M` entries down by one to restore trace zero.
    fn fold_normal_form(&self, x: &[f64]) -> Vec<f64> {
        let m = self.rank + 1;
        let h = self.to_ambient(x);
        let mut frac = [0.0; MAX_AMBIENT];
        for j in 0..m {
            frac[j] = h[j] - h[j].floor();
            if frac[j] >= 1.0 {
                frac[j] = 0.0;
            }
        }
        let shift = frac[..m].iter().sum::<f64>().round() as usize;
        let mut sorted = frac[..m].to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut out = Vec::with_capacity(m);
        out.extend_from_slice(&sorted[shift.min(m)..]);
        out.extend(sorted[..shift.min(m)].iter().map(|v| v - 1.0));
        self.from_ambient(&out)
    }

    fn fold_by_reflections(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for _ in 0..FOLD_ITERATION_CAP {
            let h = self.to_ambient(&y);
            if let Some(i) = (0..self.rank).find(|&i| h[i] - h[i + 1] < -ALCOVE_TOL) {
                y = self.reflect(i_simple_to_positive(i, self.rank), &y);
                continue;
            }
            let top = h[0] - h[self.rank];
            if top > 1.0 + ALCOVE_TOL {
                // Affine reflection in the wall θ = 1.
                let c = top - 1.0;
                for (yi, ti) in y.iter_mut().zip(&self.theta) {
                    *yi -= c * ti;
                }
                continue;
            }
            return Ok(y);
        }
        Err(Error::Internal(format!(
            "alcove folding of {x:?} did not terminate after {FOLD_ITERATION_CAP} reflections (last {y:?})"
        )))
    }

    /// All coroot lattice points of norm at most `radius`, sorted by norm.
    pub fn coroot_lattice_ball(&self, radius: f64) -> Result<Vec<Vec<f64>>> {
        self.coroot_ball_around(&vec![0.0; self.rank], radius)
    }

    /// Coroot lattice points γ with `‖center + γ‖ ≤ radius`, sorted by that distance.
    pub fn coroot_ball_around(&self, center: &[f64], radius: f64) -> Result<Vec<Vec<f64>>> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "lattice radius must be positive, got {radius}"
            )));
        }
        // Coefficient of α_i^∨ in γ is (ω_i, γ); bound by ‖ω_i‖(radius + ‖center‖).
        let reach = radius + norm(center);
        let bounds: Vec<i64> = self
            .fundamental_weights
            .iter()
            .map(|w| (norm(w) * reach).floor() as i64)
            .collect();
        self.check_box(&bounds)?;
        let mut pts: Vec<(f64, Vec<i64>, Vec<f64>)> = Vec::new();
        for_each_in_box(&bounds, |m| {
            let mut g = vec![0.0; self.rank];
            for (mi, a) in m.iter().zip(&self.simple_roots) {
                for (gc, ac) in g.iter_mut().zip(a) {
                    *gc += *mi as f64 * ac;
                }
            }
            let d: f64 = g
                .iter()
                .zip(center)
                .map(|(a, b)| (a + b) * (a + b))
                .sum::<f64>()
                .sqrt();
            if d <= radius * (1.0 + 1e-14) {
                pts.push((d, m.to_vec(), g));
            }
        });
        if pts.len() > self.lattice_cap {
            return Err(Error::Resource(format!(
                "{} lattice points exceed cap {}",
                pts.len(),
                self.lattice_cap
            )));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        Ok(pts.into_iter().map(|p| p.2).collect())
    }

    /// All weights `μ ∈ P` with `‖μ‖ ≤ radius`, sorted by norm.
    pub fn weight_lattice_ball(&self, radius: f64) -> Result<Vec<Weight>> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "lattice radius must be positive, got {radius}"
            )));
        }
        // Dynkin label a_i = (μ, α_i^∨) with ‖α_i^∨‖ = √2.
        let b = (2f64.sqrt() * radius).floor() as i64;
        let bounds = vec![b; self.rank];
        self.check_box(&bounds)?;
        let mut pts = Vec::new();
        for_each_in_box(&bounds, |m| {
            let w = self.weight_from_dynkin(m);
            let r = norm(&w.coords);
            if r <= radius * (1.0 + 1e-14) {
                pts.push((r, w));
            }
        });
        self.finish_weights(pts)
    }

    /// Dominant weights λ with `‖λ + ρ‖ ≤ radius`, sorted by `‖λ + ρ‖` ascending.
    pub fn dominant_weights_ball(&self, radius: f64) -> Result<Vec<Weight>> {
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::Domain(format!(
                "radius must be non-negative, got {radius}"
            )));
        }
        // a_i + 1 = (λ + ρ, α_i^∨) ≤ √2 ‖λ + ρ‖.
        let b = ((2f64.sqrt() * radius).floor() as i64 - 1).max(-1);
        if b < 0 {
            return Ok(Vec::new());
        }
        let bounds = vec![b; self.rank];
        self.check_box(&bounds)?;
        let mut pts = Vec::new();
        for_each_in_box_nonneg(&bounds, |m| {
            let w = self.weight_from_dynkin(m);
            let shifted: Vec<f64> = w.coords.iter().zip(&self.rho).map(|(a, b)| a + b).collect();
            let r = norm(&shifted);
            if r <= radius * (1.0 + 1e-14) {
                pts.push((r, w));
            }
        });
        self.finish_weights(pts)
    }

    fn finish_weights(&self, mut pts: Vec<(f64, Weight)>) -> Result<Vec<Weight>> {
        if pts.len() > self.lattice_cap {
            return Err(Error::Resource(format!(
                "{} weights exceed cap {}",
                pts.len(),
                self.lattice_cap
            )));
        }
        pts.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| a.1.dynkin.cmp(&b.1.dynkin))
        });
        Ok(pts.into_iter().map(|p| p.1).collect())
    }

    fn check_box(&self, bounds: &[i64]) -> Result<()> {
        let count: f64 = bounds.iter().map(|&b| (2 * b + 1) as f64).product();
        if count > 50.0 * self.lattice_cap as f64 {
            return Err(Error::Resource(format!(
                "enumeration box of {count:e} points exceeds cap {}",
                self.lattice_cap
            )));
        }
        Ok(())
    }
}

// The simple root α_i = e_i − e_{i+1} sits at this index of the positive root list.
fn i_simple_to_positive(i: usize, rank: usize) -> usize {
    let m = rank + 1;
    // Pairs (j, k) are listed row by row: j = 0 contributes m-1 entries, etc.
    (0..i).map(|j| m - 1 - j).sum::<usize>()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    heap_permute(m, &mut cur, &mut out);
    out.sort();
    out
}

fn heap_permute(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(a.clone());
        return;
    }
    for i in 0..k {
        heap_permute(k - 1, a, out);
        if k.is_multiple_of(2) {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}

fn permutation_sign(p: &[usize]) -> i32 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn for_each_in_box(bounds: &[i64], mut f: impl FnMut(&[i64])) {
    let mut m: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        f(&m);
        let mut i = 0;
        loop {
            if i == m.len() {
                return;
            }
            if m[i] < bounds[i] {
                m[i] += 1;
                break;
            }
            m[i] = -bounds[i];
            i += 1;
        }
    }
}

fn for_each_in_box_nonneg(bounds: &[i64], mut f: impl FnMut(&[i64])) {
    let mut m = vec![0i64; bounds.len()];
    loop {
        f(&m);
        let mut i = 0;
        loop {
            if i == m.len() {
                return;
            }
            if m[i] < bounds[i] {
                m[i] += 1;
                break;
            }
            m[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(n: usize) -> RootSystem {
        build_root_system(Family::A, n).unwrap()
    }

    #[test]
    fn basic_invariants() {
        for n in 1..=MAX_RANK {
            let rs = a(n);
            assert!((dot(rs.theta(), rs.theta()) - 2.0).abs() < 1e-14);
            for (i, ai) in rs.simple_roots().iter().enumerate() {
                assert!((dot(ai, ai) - 2.0).abs() < 1e-14);
                assert!((dot(rs.rho(), ai) - 1.0).abs() < 1e-14);
                for (j, wj) in rs.fundamental_weights().iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(ai, wj) - e).abs() < 1e-14);
                }
            }
            assert_eq!(rs.dual_coxeter() as usize, n + 1);
            assert_eq!(rs.weyl_group().len(), factorial(n + 1) as usize);
            assert_eq!(rs.num_positive_roots(), n * (n + 1) / 2);
        }
    }

    #[test]
    fn rank_one_and_two_examples() {
        let rs = a(1);
        assert_eq!(rs.dual_coxeter(), 2);
        assert!((rs.rho()[0] - rs.positive_roots()[0][0] / 2.0).abs() < 1e-15);
        let signs: Vec<i32> = rs.weyl_group().iter().map(|w| w.sign).collect();
        let mats: Vec<f64> = rs.weyl_group().iter().map(|w| w.matrix[0]).collect();
        for (s, m) in signs.iter().zip(&mats) {
            assert!((*s as f64 - m).abs() < 1e-15);
        }
        assert!(signs.contains(&1) && signs.contains(&-1));
        let rs2 = a(2);
        assert_eq!(rs2.positive_roots().len(), 3);
        assert_eq!(rs2.weyl_group().len(), 6);
        assert_eq!(rs2.dual_coxeter(), 3);
    }

    #[test]
    fn unsupported_rank_names_field() {
        match build_root_system(Family::A, 0) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "rank"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_root_system(Family::A, 5).is_err());
        match "B".parse::<Family>() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "family"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn compose(rs: &RootSystem, u: &WeylElement, v: &WeylElement) -> Vec<f64> {
        let n = rs.rank();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..n)
                    .map(|k| u.matrix[i * n + k] * v.matrix[k * n + j])
                    .sum();
            }
        }
        m
    }

    #[test]
    fn weyl_group_closure_and_sign_homomorphism() {
        for n in 1..=3 {
            let rs = a(n);
            let w = rs.weyl_group();
            for u in w {
                for v in w {
                    let m = compose(&rs, u, v);
                    let hit = w
                        .iter()
                        .find(|z| z.matrix.iter().zip(&m).all(|(p, q)| (p - q).abs() < 1e-12));
                    let z = hit.expect("composition not in group");
                    assert_eq!(z.sign, u.sign * v.sign);
                }
            }
        }
    }

    #[test]
    fn sign_matches_determinant() {
        for n in 1..=MAX_RANK {
            let rs = a(n);
            for w in rs.weyl_group() {
                let m = nalgebra::DMatrix::from_row_slice(n, n, &w.matrix);
                assert!((m.determinant() - w.sign as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fold_examples() {
        let rs = a(1);
        let (p, interior) = rs.fold_to_alcove(&[0.0]).unwrap();
        assert_eq!(p.coords(), &[0.0]);
        assert!(!interior);

        // α(x) = √2·x for the rank-one basis.
        let x = [2.3 / 2f64.sqrt()];
        let (p, interior) = rs.fold_to_alcove(&x).unwrap();
        assert!((rs.root_values(p.coords())[0] - 0.3).abs() < 1e-12);
        assert!(interior);

        let rs2 = a(2);
        let inside = rs2.alcove_barycenter();
        let (p, interior) = rs2.fold_to_alcove(&inside).unwrap();
        assert_eq!(p.coords(), inside.as_slice());
        assert!(interior);
    }

    #[test]
    fn lattice_ball_examples() {
        let rs = a(1);
        assert_eq!(rs.coroot_lattice_ball(0.5).unwrap().len(), 1);
        let b = rs.coroot_lattice_ball(1.5).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b[0], vec![0.0]);
        let rs2 = a(2);
        let b2 = rs2.coroot_lattice_ball(1.5).unwrap();
        assert_eq!(b2.len(), 7);
        for g in &b2 {
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            assert!(b2
                .iter()
                .any(|h| h.iter().zip(&neg).all(|(p, q)| (p - q).abs() < 1e-12)));
        }
        assert!(matches!(rs.coroot_lattice_ball(0.0), Err(Error::Domain(_))));
        let capped = a(3).with_lattice_cap(10);
        assert!(matches!(
            capped.coroot_lattice_ball(5.0),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn dominant_ball_examples() {
        let rs = a(1);
        let w = rs.dominant_weights_ball(0.8).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].dynkin, vec![0]);
        let w = rs.dominant_weights_ball(1.5).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].dynkin, vec![1]);
        let alpha_half = rs.positive_roots()[0][0] / 2.0;
        assert!((w[1].coords[0] - alpha_half).abs() < 1e-15);
        assert!(a(2).dominant_weights_ball(0.0).unwrap().is_empty());
    }

    #[test]
    fn dominant_ball_sorted_and_complete() {
        let rs = a(2);
        let r = 4.0;
        let w = rs.dominant_weights_ball(r).unwrap();
        let shifted = |x: &Weight| {
            let v: Vec<f64> = x.coords.iter().zip(rs.rho()).map(|(p, q)| p + q).collect();
            norm(&v)
        };
        for pair in w.windows(2) {
            assert!(shifted(&pair[0]) <= shifted(&pair[1]) + 1e-14);
        }
        // Brute force over a generous box.
        let mut count = 0;
        for a1 in 0..20 {
            for a2 in 0..20 {
                if shifted(&rs.weight_from_dynkin(&[a1, a2])) <= r {
                    count += 1;
                }
            }
        }
        assert_eq!(count, w.len());
    }

    #[test]
    fn alcove_volume_matches_covolume() {
        for n in 1..=MAX_RANK {
            let rs = a(n);
            let expect = rs.coroot_covolume() / factorial(n + 1);
            assert!((rs.alcove_volume() - expect).abs() < 1e-12 * expect);
        }
    }

    // Brute-force search: apply words in the simple reflections and coroot
    // translations, keep whichever image lands in the alcove.
    fn brute_force_fold(rs: &RootSystem, x: &[f64]) -> Vec<f64> {
        let n = rs.rank();
        let lattice = rs.coroot_lattice_ball(8.0).unwrap();
        let mut best: Option<Vec<f64>> = None;
        for w in rs.weyl_group() {
            let wx = w.apply(x);
            for g in &lattice {
                let y: Vec<f64> = (0..n).map(|i| wx[i] + g[i]).collect();
                if rs.in_alcove(&y, 1e-9) {
                    best = Some(y);
                }
            }
        }
        best.expect("no alcove image found")
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fold_lands_in_alcove_and_is_idempotent(
            n in 1usize..=4,
            raw in proptest::collection::vec(-3.0f64..3.0, 4)
        ) {
            let rs = a(n);
            let x = &raw[..n];
            let (p, _) = rs.fold_to_alcove(x).unwrap();
            prop_assert!(rs.in_alcove(p.coords(), ALCOVE_TOL));
            let (q, _) = rs.fold_to_alcove(p.coords()).unwrap();
            prop_assert_eq!(p.coords(), q.coords());
        }

        #[test]
        fn fold_matches_brute_force(
            n in 1usize..=3,
            raw in proptest::collection::vec(-2.0f64..2.0, 3)
        ) {
            let rs = a(n);
            let x = &raw[..n];
            let (p, interior) = rs.fold_to_alcove(x).unwrap();
            let b = brute_force_fold(&rs, x);
            // Alcove images are unique for interior points.
            if interior {
                for (u, v) in p.coords().iter().zip(&b) {
                    prop_assert!((u - v).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn weyl_preserves_form(
            n in 1usize..=4,
            u in proptest::collection::vec(-2.0f64..2.0, 4),
            v in proptest::collection::vec(-2.0f64..2.0, 4)
        ) {
            let rs = a(n);
            let (u, v) = (&u[..n], &v[..n]);
            for w in rs.weyl_group() {
                let d = dot(&w.apply(u), &w.apply(v)) - dot(u, v);
                prop_assert!(d.abs() < 1e-13);
            }
        }
    }
}
