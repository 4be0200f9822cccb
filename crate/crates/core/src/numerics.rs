//! Small numerical building blocks shared by the series and quadrature code:
//! compensated summation, lattice tail certificates and simplex quadrature.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: Complex64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = KahanSum::new();
    for v in values {
        s.add(v);
    }
    s.value()
}

/// Surface area of the unit sphere in ℝⁿ.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0),
    }
}

/// Radial profile `g(u) = exp(log_amp) · u^power · exp(−rate (u − shift)²)`.
#[derive(Clone, Copy, Debug)]
pub struct GaussTail {
    pub log_amp: f64,
    pub power: f64,
    pub rate: f64,
    pub shift: f64,
}

impl GaussTail {
    pub fn eval(&self, u: f64) -> f64 {
        (self.log_amp + self.power * u.ln() - self.rate * (u - self.shift).powi(2)).exp()
    }
}

/// Upper bound for `Σ_{ν ∈ L, ‖ν‖ > R} g(‖ν‖)` over a (possibly shifted)
/// lattice `L ⊂ ℝⁿ` with covolume `covol` and covering radius at most `d`.
///
/// Every lattice point owns its Voronoi cell, of volume `covol` and inside
/// the ball of radius `d` around it, so for `g` non-increasing on
/// `[a, ∞)`, `a = R − 2d`, the sum is at most
/// `(|S^{n−1}| / covol) ∫_a^∞ f`, `f(u) = g(u) (u + d)^{n−1}`.
/// On `[a, ∞)` the log-derivative of `f` is at most
/// `−κ = (power + n − 1)/a − 2·rate·(a − shift)`, hence `∫_a^∞ f ≤ f(a)/κ`.
/// Returns `+∞` when `a ≤ 0` or `κ ≤ 0`.
pub fn lattice_tail_bound(n: usize, covol: f64, d: f64, g: &GaussTail, radius: f64) -> f64 {
    let a = radius - 2.0 * d;
    if a <= 0.0 {
        return f64::INFINITY;
    }
    let kappa = 2.0 * g.rate * (a - g.shift) - (g.power + n as f64 - 1.0) / a;
    if kappa <= 0.0 {
        return f64::INFINITY;
    }
    let fa = g.eval(a) * (a + d).powi(n as i32 - 1);
    sphere_area(n) / covol * fa / kappa
}

/// Smallest radius on the grid `start, start + step, …` whose certified tail
/// is below `target`; precision error if `max_radius` is reached first.
pub fn choose_radius(
    target: f64,
    start: f64,
    step: f64,
    max_radius: f64,
    bound: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let mut r = start.max(step);
    loop {
        let b = bound(r);
        if b < target {
            return Ok((r, b));
        }
        if r >= max_radius {
            return Err(Error::Precision {
                target,
                achievable: bound(max_radius),
            });
        }
        r = (r + step).min(max_radius);
    }
}

/// Tensor-product Gauss–Legendre rule on a simplex, built with the Duffy
/// collapse from the unit cube. Returns `(points, weights)` with weights
/// summing to the simplex volume.
pub fn simplex_rule(vertices: &[Vec<f64>], order: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = vertices.len() - 1;
    let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
    let nodes: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| a - b).collect())
        .collect();
    let jac = if n == 0 {
        1.0
    } else {
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = edges[i][j];
            }
        }
        m.determinant().abs()
    };

    let mut pts = Vec::new();
    let mut wts = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        // Duffy collapse: barycentric λ_k = u_k Π_{i<k} (1 − u_i), with
        // Jacobian Π_k (1 − u_k)^{n−1−k} (0-based k).
        let mut rem = 1.0;
        let mut w = jac;
        let mut bary = vec![0.0; n];
        for k in 0..n {
            let (u, wu) = nodes[idx[k]];
            bary[k] = rem * u;
            w *= wu * (1.0 - u).powi((n - 1 - k) as i32);
            rem *= 1.0 - u;
        }
        let p: Vec<f64> = (0..n)
            .map(|c| vertices[0][c] + (0..n).map(|k| bary[k] * edges[k][c]).sum::<f64>())
            .collect();
        pts.push(p);
        wts.push(w);

        let mut k = 0;
        loop {
            if k == n {
                return (pts, wts);
            }
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Integrates `f` over a simplex, doubling the Gauss order until successive
/// estimates agree to `rel_tol`.
pub fn integrate_simplex(
    vertices: &[Vec<f64>],
    rel_tol: f64,
    max_order: usize,
    f: impl Fn(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let eval = |order: usize| -> Result<f64> {
        let (pts, wts) = simplex_rule(vertices, order);
        let mut s = KahanSum::new();
        for (p, w) in pts.iter().zip(&wts) {
            s.add(w * f(p)?);
        }
        Ok(s.value())
    };
    let mut order = 8;
    let mut prev = eval(order)?;
    let mut achieved = f64::INFINITY;
    while order < max_order {
        order *= 2;
        let cur = eval(order)?;
        achieved = (cur - prev).abs() / cur.abs();
        if achieved <= rel_tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Precision {
        target: rel_tol,
        achievable: achieved,
    })
}
