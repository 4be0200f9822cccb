//! Statistical machinery for equality-in-law and moment checks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numerics::KahanSum;

/// Minimum sample size accepted by the two-sample tests.
pub const MIN_SAMPLE: usize = 100;
/// Largest `n·m` for which the two-sample KS p-value is computed exactly.
pub const KS_EXACT_LIMIT: f64 = 2.5e7;
/// Subsample size cap for the energy statistic.
pub const ENERGY_SUBSAMPLE: usize = 1000;
/// Number of permutations for the energy test.
pub const ENERGY_PERMUTATIONS: usize = 200;

/// Running mean and standard error (Welford).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct MeanSe {
    n: usize,
    mean: f64,
    m2: f64,
}

impl MeanSe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn from_values(xs: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::new();
        for x in xs {
            s.push(x);
        }
        s
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn se(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Statistics(format!(
            "{what} contains non-finite values"
        )));
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample KS statistic `sup |F_a − G_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

// P(D ≥ d) for continuous samples by counting lattice paths that stay inside
// the band |i/n − j/m| < d; probabilities instead of counts avoid overflow.
fn ks_exact_p(n: usize, m: usize, d: f64) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let eps = 1e-12;
    let inside = |i: usize, j: usize| (i as f64 / nf - j as f64 / mf).abs() < d - eps;
    let mut row = vec![0.0f64; m + 1];
    for (j, r) in row.iter_mut().enumerate() {
        *r = if inside(0, j) { 1.0 } else { 0.0 };
        if *r == 0.0 {
            break;
        }
    }
    for i in 1..=n {
        let mut prev = if inside(i, 0) { row[0] } else { 0.0 };
        row[0] = prev;
        for j in 1..=m {
            let v = if inside(i, j) {
                (i as f64 * row[j] + j as f64 * prev) / (i + j) as f64
            } else {
                0.0
            };
            row[j] = v;
            prev = v;
        }
    }
    (1.0 - row[m]).clamp(0.0, 1.0)
}

/// Two-sample KS test: `(D, p)`; exact when `n·m ≤ 2.5e7`, otherwise the
/// asymptotic law with the usual effective-size correction.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    check_finite(a, "first sample")?;
    check_finite(b, "second sample")?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Statistics("empty sample".into()));
    }
    let d = ks_statistic(a, b);
    if d == 0.0 {
        return Ok((0.0, 1.0));
    }
    let (n, m) = (a.len(), b.len());
    let p = if (n as f64) * (m as f64) <= KS_EXACT_LIMIT {
        ks_exact_p(n, m, d)
    } else {
        let ne = (n * m) as f64 / (n + m) as f64;
        let s = ne.sqrt();
        kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
    };
    Ok((d, p))
}

/// One-sample KS test of `xs` against the continuous CDF `cdf` (asymptotic p).
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    check_finite(xs, "sample")?;
    if xs.is_empty() {
        return Err(Error::Statistics("empty sample".into()));
    }
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d = 0f64;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let s = n.sqrt();
    Ok((d, kolmogorov_sf((s + 0.12 + 0.11 / s) * d)))
}

/// `W₁ = ∫ |F_a − G_b|` for one-dimensional samples.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<f64> = a.iter().chain(&b).copied().collect();
    all.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let mut s = KahanSum::new();
    for w in all.windows(2) {
        while i < a.len() && a[i] <= w[0] {
            i += 1;
        }
        while j < b.len() && b[j] <= w[0] {
            j += 1;
        }
        s.add((i as f64 / n - j as f64 / m).abs() * (w[1] - w[0]));
    }
    s.value()
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

// Energy statistic from a precomputed pooled distance matrix and a labelling.
fn energy_from_matrix(d: &[f64], total: usize, first: &[usize], second: &[usize]) -> f64 {
    let mean = |x: &[usize], y: &[usize]| {
        let mut s = KahanSum::new();
        for &i in x {
            for &j in y {
                s.add(d[i * total + j]);
            }
        }
        s.value() / (x.len() * y.len()) as f64
    };
    2.0 * mean(first, second) - mean(first, first) - mean(second, second)
}

/// Energy distance between multivariate samples with a permutation p-value.
/// Each sample is subsampled to at most 1000 points.
pub fn energy_test<R: Rng>(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    permutations: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Statistics("empty sample".into()));
    }
    if a.iter().chain(b).any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::Statistics("non-finite sample point".into()));
    }
    let pick = |s: &[Vec<f64>], rng: &mut R| -> Vec<Vec<f64>> {
        if s.len() <= ENERGY_SUBSAMPLE {
            s.to_vec()
        } else {
            let mut idx: Vec<usize> = (0..s.len()).collect();
            idx.shuffle(rng);
            idx[..ENERGY_SUBSAMPLE]
                .iter()
                .map(|&i| s[i].clone())
                .collect()
        }
    };
    let sa = pick(a, rng);
    let sb = pick(b, rng);
    let pooled: Vec<&Vec<f64>> = sa.iter().chain(&sb).collect();
    let total = pooled.len();
    let mut d = vec![0.0; total * total];
    for i in 0..total {
        for j in (i + 1)..total {
            let v = dist(pooled[i], pooled[j]);
            d[i * total + j] = v;
            d[j * total + i] = v;
        }
    }
    let mut labels: Vec<usize> = (0..total).collect();
    let obs = energy_from_matrix(&d, total, &labels[..sa.len()], &labels[sa.len()..]);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        labels.shuffle(rng);
        let e = energy_from_matrix(&d, total, &labels[..sa.len()], &labels[sa.len()..]);
        if e >= obs - 1e-15 * obs.abs() {
            exceed += 1;
        }
    }
    Ok((obs, (exceed + 1) as f64 / (permutations + 1) as f64))
}

/// Summary of a two-sample comparison.
#[derive(Clone, Debug, Serialize)]
pub struct TwoSampleStats {
    /// Largest per-coordinate KS statistic.
    pub ks_stat: f64,
    /// Bonferroni-adjusted smallest per-coordinate KS p-value.
    pub ks_p: f64,
    /// Only for one-dimensional samples.
    pub wasserstein1: Option<f64>,
    pub energy_stat: f64,
    pub energy_p: f64,
}

/// KS on every coordinate, `W₁` in dimension one and the energy test.
pub fn two_sample_stats<R: Rng>(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    rng: &mut R,
) -> Result<TwoSampleStats> {
    if a.len() < MIN_SAMPLE || b.len() < MIN_SAMPLE {
        return Err(Error::Statistics(format!(
            "samples of size {} and {} are below the minimum {MIN_SAMPLE}",
            a.len(),
            b.len()
        )));
    }
    let dim = a[0].len();
    if dim == 0 || a.iter().chain(b).any(|p| p.len() != dim) {
        return Err(Error::Statistics("inconsistent sample dimensions".into()));
    }
    let first = &a[0];
    if a.iter().chain(b).all(|p| p == first) {
        return Err(Error::Statistics(
            "degenerate samples: all points coincide".into(),
        ));
    }
    let mut ks_stat = 0f64;
    let mut ks_p = 1f64;
    for c in 0..dim {
        let xa: Vec<f64> = a.iter().map(|p| p[c]).collect();
        let xb: Vec<f64> = b.iter().map(|p| p[c]).collect();
        let (d, p) = ks_two_sample(&xa, &xb)?;
        ks_stat = ks_stat.max(d);
        ks_p = ks_p.min(p);
    }
    let ks_p = (ks_p * dim as f64).min(1.0);
    let wasserstein1 = (dim == 1).then(|| {
        let xa: Vec<f64> = a.iter().map(|p| p[0]).collect();
        let xb: Vec<f64> = b.iter().map(|p| p[0]).collect();
        wasserstein1(&xa, &xb)
    });
    let (energy_stat, energy_p) = energy_test(a, b, ENERGY_PERMUTATIONS, rng)?;
    Ok(TwoSampleStats {
        ks_stat,
        ks_p,
        wasserstein1,
        energy_stat,
        energy_p,
    })
}

/// Pearson χ² goodness of fit: `(statistic, degrees of freedom, p)`.
/// Bins with zero expected probability must have zero counts.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> Result<(f64, usize, f64)> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::Statistics(
            "χ² needs matching bins, at least two".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Statistics("χ² with no observations".into()));
    }
    let psum: f64 = probs.iter().sum();
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = total as f64 * p / psum;
        if e <= 0.0 {
            if c > 0 {
                return Err(Error::Statistics(
                    "observation in a bin of zero probability".into(),
                ));
            }
            continue;
        }
        bins += 1;
        stat += (c as f64 - e).powi(2) / e;
    }
    let dof = bins.saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Statistics(e.to_string()))?;
    Ok((stat, dof, dist.sf(stat)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut r = stream(seed, "stats-test", 0);
        (0..n)
            .map(|_| shift + r.sample::<f64, _>(StandardNormal))
            .collect()
    }

    #[test]
    fn identical_samples() {
        let a = normals(1, 200, 0.0);
        let (d, p) = ks_two_sample(&a, &a).unwrap();
        assert_eq!((d, p), (0.0, 1.0));
        assert_eq!(wasserstein1(&a, &a), 0.0);
    }

    #[test]
    fn exact_ks_matches_small_cases() {
        // n = m = 2: D = 1 happens for 2 of the C(4,2) = 6 orderings.
        assert!((ks_exact_p(2, 2, 1.0) - 2.0 / 6.0).abs() < 1e-15);
        // D ≥ 1/2 always holds for n = m = 2.
        assert!((ks_exact_p(2, 2, 0.5) - 1.0).abs() < 1e-15);
        // n = 3, m = 2, D = 1: 2 of 10 orderings.
        assert!((ks_exact_p(3, 2, 1.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exact_and_asymptotic_agree_for_moderate_sizes() {
        let d = 0.08;
        let (n, m) = (800usize, 700usize);
        let ne = (n * m) as f64 / (n + m) as f64;
        let s = ne.sqrt();
        let asym = kolmogorov_sf((s + 0.12 + 0.11 / s) * d);
        assert!((ks_exact_p(n, m, d) - asym).abs() < 5e-3);
    }

    #[test]
    fn power_against_shift() {
        let a = normals(2, 2000, 0.0);
        let b = normals(3, 2000, 0.5);
        let (_, p) = ks_two_sample(&a, &b).unwrap();
        assert!(p < 1e-6);
        let w = wasserstein1(&a, &b);
        assert!((w - 0.5).abs() < 0.1);
    }

    #[test]
    fn energy_test_detects_shift_only_when_present() {
        let mut rng = stream(4, "perm", 0);
        let mk = |seed: u64, shift: f64| -> Vec<Vec<f64>> {
            let x = normals(seed, 300, shift);
            let y = normals(seed + 100, 300, 0.0);
            x.into_iter().zip(y).map(|(p, q)| vec![p, q]).collect()
        };
        let (_, p_same) = energy_test(&mk(5, 0.0), &mk(6, 0.0), 200, &mut rng).unwrap();
        let (_, p_diff) = energy_test(&mk(7, 0.0), &mk(8, 0.6), 200, &mut rng).unwrap();
        assert!(p_same > 0.01);
        assert!(p_diff < 0.01);
    }

    #[test]
    fn two_sample_stats_contract() {
        let mut rng = stream(9, "perm", 0);
        let small: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        assert!(two_sample_stats(&small, &small, &mut rng).is_err());
        let constant = vec![vec![1.0]; 150];
        assert!(matches!(
            two_sample_stats(&constant, &constant, &mut rng),
            Err(Error::Statistics(_))
        ));
        let a: Vec<Vec<f64>> = normals(10, 150, 0.0).into_iter().map(|v| vec![v]).collect();
        let s = two_sample_stats(&a, &a, &mut rng).unwrap();
        assert_eq!(s.ks_stat, 0.0);
        assert_eq!(s.ks_p, 1.0);
        assert_eq!(s.wasserstein1, Some(0.0));
    }

    #[test]
    fn one_sample_ks_and_chi_square() {
        use statrs::distribution::Normal;
        let x = normals(11, 5000, 0.0);
        let nd = Normal::new(0.0, 1.0).unwrap();
        let (_, p) = ks_one_sample(&x, |v| nd.cdf(v)).unwrap();
        assert!(p > 0.01);
        let (_, p) = ks_one_sample(&x, |v| nd.cdf(v - 0.2)).unwrap();
        assert!(p < 1e-6);
        let (stat, dof, p) = chi_square(&[25, 25, 25, 25], &[0.25; 4]).unwrap();
        assert_eq!((stat, dof), (0.0, 3));
        assert!((p - 1.0).abs() < 1e-12);
        assert!(chi_square(&[1, 0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn mean_se_matches_direct_formulae() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let s = MeanSe::from_values(x);
        assert!((s.mean() - 3.75).abs() < 1e-15);
        let var = x.iter().map(|v| (v - 3.75f64).powi(2)).sum::<f64>() / 3.0;
        assert!((s.variance() - var).abs() < 1e-12);
        assert!((s.se() - (var / 4.0).sqrt()).abs() < 1e-12);
    }
}
