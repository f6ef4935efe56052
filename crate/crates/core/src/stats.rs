//! Observables computed from angle samples and polynomials, and the
//! two-sample tests used to compare ensembles.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::poly::SelfReciprocalPoly;
use crate::rng::{derive_stream_seed, rng_from_seed};
use crate::roots::{circle_classify, default_tolerance, find_roots};
use crate::samplers::{AngleDomain, EnsembleSpec, SampleBatch};

/// Monte Carlo mean with its standard error and the number of items that
/// could not be processed (root finding or pairing failures).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub used: usize,
    pub skipped: usize,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn estimate(values: Vec<Option<f64>>) -> Result<Estimate> {
    let total = values.len();
    let used: Vec<f64> = values.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::InsufficientData(format!(
            "all {total} items failed root finding"
        )));
    }
    let (mean, stderr) = mean_and_stderr(&used);
    Ok(Estimate {
        mean,
        stderr,
        used: used.len(),
        skipped: total - used.len(),
    })
}

/// Mean over polynomials of the fraction `L/N` of zeros on the circle.
pub fn fraction_on_circle(polys: &[SelfReciprocalPoly], tol: f64) -> Result<Estimate> {
    if polys.is_empty() {
        return Err(Error::InsufficientData("no polynomials".into()));
    }
    let values: Vec<Option<f64>> = polys
        .par_iter()
        .map(|p| {
            let zc = circle_classify(&find_roots(p).ok()?, tol).ok()?;
            Some(zc.angles().len() as f64 / p.degree() as f64)
        })
        .collect();
    estimate(values)
}

/// Self-reciprocal form of `sum_{k=1}^{N} c_k cos(k x)`: multiplying by
/// `2 z^N / c_N` at `z = e^{ix}` gives a real monic polynomial of degree `2N`
/// whose zeros on the circle are the real zeros of the cosine sum.
pub fn cosine_sum_polynomial(c: &[f64]) -> Result<SelfReciprocalPoly> {
    let n = c.len();
    let lead = c[n - 1];
    if n == 0 || lead == 0.0 {
        return Err(Error::DegenerateInput("leading cosine coefficient is zero".into()));
    }
    let mut a = vec![Complex64::new(0.0, 0.0); 2 * n];
    for k in 1..=n {
        let v = Complex64::new(c[k - 1] / lead, 0.0);
        if k < n {
            a[n - k - 1] = v;
        }
        a[n + k - 1] = v;
    }
    SelfReciprocalPoly::from_coefficients(&a, 0.0)
}

/// Mean number of real zeros in `[0, 2pi)` of `sum_{k=1}^{N} c_k cos(k x)` with
/// independent standard normal `c_k`.
pub fn dunnage_real_zero_count(n: usize, samples: usize, seed: u64) -> Result<Estimate> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("degree must be at least 2, got {n}")));
    }
    if samples == 0 {
        return Err(Error::InsufficientData("no samples requested".into()));
    }
    let tol = default_tolerance(2 * n);
    let values: Vec<Option<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_stream_seed(seed, 5, k));
            let c: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let p = cosine_sum_polynomial(&c).ok()?;
            let zc = circle_classify(&find_roots(&p).ok()?, tol).ok()?;
            Some(zc.angles().len() as f64)
        })
        .collect();
    estimate(values)
}

/// Every zero angle on the full circle. Upper-half batches are reflected and,
/// for odd degree, completed with the zero at `pi`.
pub fn full_circle_angles(batch: &SampleBatch, set: &[f64]) -> Vec<f64> {
    match batch.domain {
        AngleDomain::Circle => set.to_vec(),
        AngleDomain::UpperHalf => {
            let mut out: Vec<f64> = set.iter().flat_map(|&t| [t, TAU - t]).collect();
            if batch.spec.n % 2 == 1 && !matches!(batch.spec.model, crate::samplers::Model::Mcmc(_)) {
                out.push(PI);
            }
            out.sort_by(f64::total_cmp);
            out
        }
    }
}

/// Consecutive gaps of sorted angles around the circle, wrap-around included.
pub fn circular_gaps(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    (0..n)
        .map(|i| {
            if i + 1 < n {
                sorted[i + 1] - sorted[i]
            } else {
                sorted[0] + TAU - sorted[n - 1]
            }
        })
        .collect()
}

/// Gaps unfolded by the mean density `N / 2pi`, so they average exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSample {
    pub unfolded_gaps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<EnsembleSpec>,
}

/// Equal-width histogram starting at 0. `mass[i]` is the fraction of all values
/// in bin `i` (values past the last edge count towards `overflow`), and
/// `density[i] = mass[i] / width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mass: Vec<f64>,
    pub density: Vec<f64>,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, width: f64) -> Result<Self> {
        if bins == 0 || !(width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "histogram needs bins > 0 and width > 0, got {bins} and {width}"
            )));
        }
        let mut counts = vec![0u64; bins];
        let mut overflow = 0;
        for &v in values {
            let idx = (v / width).floor();
            if idx >= 0.0 && (idx as usize) < bins {
                counts[idx as usize] += 1;
            } else {
                overflow += 1;
            }
        }
        let total = values.len().max(1) as f64;
        let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        Ok(Self {
            edges: (0..=bins).map(|i| i as f64 * width).collect(),
            density: mass.iter().map(|m| m / width).collect(),
            counts,
            mass,
            overflow,
        })
    }
}

/// Nearest-neighbour gaps of every set in `batch`, unfolded per set.
pub fn unfolded_gaps(batch: &SampleBatch) -> Result<SpacingSample> {
    let mut gaps = Vec::new();
    for set in &batch.angle_sets {
        let full = full_circle_angles(batch, set);
        if full.len() < 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: full.len(),
            });
        }
        let scale = full.len() as f64 / TAU;
        gaps.extend(circular_gaps(&full).into_iter().map(|g| g * scale));
    }
    Ok(SpacingSample {
        unfolded_gaps: gaps,
        source: Some(batch.spec.clone()),
    })
}

/// Unfolded gaps and their histogram over `[0, bins * bin_width)`.
pub fn spacing_histogram(batch: &SampleBatch, bins: usize, bin_width: f64) -> Result<(SpacingSample, Histogram)> {
    let sample = unfolded_gaps(batch)?;
    let hist = Histogram::new(&sample.unfolded_gaps, bins, bin_width)?;
    Ok((sample, hist))
}

/// Lowest zero statistics for upper-half batches, where the density vanishes
/// at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeZoneStats {
    /// Mean of the smallest `t`, unfolded by the full-circle density `N / 2pi`.
    pub mean_lowest: f64,
    pub stderr_lowest: f64,
    /// Mean of `(t_2 - t_1)` unfolded the same way, when `M >= 2`.
    pub mean_first_gap: Option<f64>,
}

pub fn edge_zone_statistics(batch: &SampleBatch) -> Result<EdgeZoneStats> {
    if batch.domain != AngleDomain::UpperHalf {
        return Err(Error::InvalidArgument(
            "edge-zone statistics apply to upper-half batches".into(),
        ));
    }
    if batch.angle_sets.is_empty() {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    let mut lowest = Vec::with_capacity(batch.angle_sets.len());
    let mut first_gap = Vec::new();
    for set in &batch.angle_sets {
        let scale = full_circle_angles(batch, set).len() as f64 / TAU;
        lowest.push(set[0] * scale);
        if set.len() >= 2 {
            first_gap.push((set[1] - set[0]) * scale);
        }
    }
    let (mean_lowest, stderr_lowest) = mean_and_stderr(&lowest);
    Ok(EdgeZoneStats {
        mean_lowest,
        stderr_lowest,
        mean_first_gap: (!first_gap.is_empty()).then(|| mean_and_stderr(&first_gap).0),
    })
}

/// Pair-correlation estimate on a grid of bin midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Estimate {
    /// Bin edges the pair distances were counted in.
    pub edges: Vec<f64>,
    /// Bin midpoints; `values[i]` estimates `R_2(grid[i])`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Poisson standard errors.
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    pub empty_bins: Vec<usize>,
}

/// `R_2` from ordered pairs of each set: circular distances folded into
/// `[0, pi]` are counted in the bins given by `edges`, and each count is
/// divided by the count expected for independent uniform angles,
/// `sets * n (n - 1) * width / pi`.
pub fn pair_correlation(batch: &SampleBatch, edges: &[f64]) -> Result<R2Estimate> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) || !(edges[0] >= 0.0) {
        return Err(Error::InvalidArgument(
            "pair-correlation edges must be non-negative and strictly increasing".into(),
        ));
    }
    let bins = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[bins];
    let per_set: Vec<(Vec<u64>, f64)> = batch
        .angle_sets
        .par_iter()
        .map(|set| {
            let full = full_circle_angles(batch, set);
            let n = full.len();
            let mut counts = vec![0u64; bins];
            for i in 0..n {
                for j in 0..i {
                    let d = (full[i] - full[j]).abs().rem_euclid(TAU);
                    let d = d.min(TAU - d);
                    if d < lo || d >= hi {
                        continue;
                    }
                    let k = edges.partition_point(|&e| e <= d) - 1;
                    counts[k.min(bins - 1)] += 2;
                }
            }
            (counts, (n * n.saturating_sub(1)) as f64)
        })
        .collect();
    let mut counts = vec![0u64; bins];
    let mut pairs = 0.0;
    for (c, p) in per_set {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
        pairs += p;
    }
    if pairs == 0.0 {
        return Err(Error::InsufficientData("no pairs in batch".into()));
    }
    let mut values = Vec::with_capacity(bins);
    let mut stderr = Vec::with_capacity(bins);
    let mut empty_bins = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        let expected = pairs * (edges[i + 1] - edges[i]) / PI;
        values.push(c as f64 / expected);
        // Ordered pairs are counted twice.
        stderr.push((2.0 * c as f64).sqrt() / expected);
        if c == 0 {
            empty_bins.push(i);
        }
    }
    Ok(R2Estimate {
        grid: edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        edges: edges.to_vec(),
        values,
        stderr,
        counts,
        empty_bins,
    })
}

/// Slope of `log R_2` against `log delta` over grid points in `[lo, hi]` with
/// positive values, with the slope's standard error.
///
/// Points are weighted by their pair counts, the inverse Poisson variance of
/// `log R_2`; the sparse bins nearest zero would otherwise dominate the noise.
pub fn repulsion_exponent(r2: &R2Estimate, fit_range: (f64, f64)) -> Result<(f64, f64)> {
    let points: Vec<(f64, f64, f64)> = r2
        .grid
        .iter()
        .zip(&r2.values)
        .zip(&r2.counts)
        .filter(|((&d, &v), &c)| d >= fit_range.0 && d <= fit_range.1 && v > 0.0 && d > 0.0 && c > 0)
        .map(|((&d, &v), &c)| (d.ln(), v.ln(), c as f64))
        .collect();
    let n = points.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 positive grid points in the fit range, found {n}"
        )));
    }
    let total: f64 = points.iter().map(|p| p.2).sum();
    let mx = points.iter().map(|p| p.2 * p.0).sum::<f64>() / total;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / total;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|&(x, y, w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (rss / (n as f64 - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum TestKind {
    Ks,
    /// Equal-width bins over the pooled range.
    ChiSquare {
        bins: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// Degrees of freedom after pooling (chi-square only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Asymptotic Kolmogorov distribution tail `Q_KS(lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 2.0;
    let mut prev = 0.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() <= 1e-12 * prev || term.abs() <= 1e-300 {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        prev = term.abs();
    }
    1.0
}

/// Two-sample Kolmogorov-Smirnov statistic `D` computed exactly, with the
/// asymptotic p-value at `lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) D`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    let p_value = if d == 0.0 {
        1.0
    } else {
        kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
    };
    Ok(TestResult {
        statistic: d,
        p_value,
        n_x: n,
        n_y: m,
        dof: None,
    })
}

/// Merge adjacent bins left to right until every merged bin has
/// `min_expected(a_i, b_i) >= 5`; a deficient tail joins the last full bin.
fn pool_bins(a: &[f64], b: &[f64], ok: impl Fn(f64, f64) -> bool) -> (Vec<f64>, Vec<f64>) {
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    let (mut sa, mut sb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sa += x;
        sb += y;
        if ok(sa, sb) {
            pa.push(sa);
            pb.push(sb);
            sa = 0.0;
            sb = 0.0;
        }
    }
    if sa > 0.0 || sb > 0.0 {
        if let (Some(la), Some(lb)) = (pa.last_mut(), pb.last_mut()) {
            *la += sa;
            *lb += sb;
        } else {
            pa.push(sa);
            pb.push(sb);
        }
    }
    (pa, pb)
}

fn pooled_dof(bins: usize) -> Result<usize> {
    if bins < 2 {
        return Err(Error::InsufficientData(
            "fewer than two bins remain after pooling to 5 expected counts".into(),
        ));
    }
    Ok(bins - 1)
}

fn chi_square_p(statistic: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
}

/// Chi-square test that two binned samples come from the same distribution:
/// `sum (sqrt(m/n) a_i - sqrt(n/m) b_i)^2 / (a_i + b_i)` with `n = sum a`,
/// `m = sum b`, after pooling bins until each sample expects at least 5
/// counts; `bins - 1` degrees of freedom.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<TestResult> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(
            "count vectors must be nonempty and equal length".into(),
        ));
    }
    let n: f64 = a.iter().map(|&x| x as f64).sum();
    let m: f64 = b.iter().map(|&x| x as f64).sum();
    if n == 0.0 || m == 0.0 {
        return Err(Error::InsufficientData("a sample has no counts".into()));
    }
    let af: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let bf: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    let (pa, pb) = pool_bins(&af, &bf, |x, y| {
        let t = x + y;
        t * n / (n + m) >= 5.0 && t * m / (n + m) >= 5.0
    });
    let r = (m / n).sqrt();
    let statistic: f64 = pa
        .iter()
        .zip(&pb)
        .filter(|(x, y)| **x + **y > 0.0)
        .map(|(x, y)| (r * x - y / r).powi(2) / (x + y))
        .sum();
    let dof = pooled_dof(pa.len())?;
    Ok(TestResult {
        statistic,
        p_value: chi_square_p(statistic, dof),
        n_x: n as usize,
        n_y: m as usize,
        dof: Some(dof),
    })
}

/// Pearson goodness of fit of `observed` counts against bin probabilities,
/// pooling bins until each expects at least 5.
pub fn chi_square_goodness_of_fit(observed: &[u64], probabilities: &[f64]) -> Result<TestResult> {
    if observed.len() != probabilities.len() || observed.is_empty() {
        return Err(Error::InvalidArgument("observed and probabilities must match".into()));
    }
    let total: f64 = observed.iter().map(|&x| x as f64).sum();
    let psum: f64 = probabilities.iter().sum();
    let expected: Vec<f64> = probabilities.iter().map(|p| p / psum * total).collect();
    let obs: Vec<f64> = observed.iter().map(|&x| x as f64).collect();
    let (pe, po) = pool_bins(&expected, &obs, |e, _| e >= 5.0);
    let statistic: f64 = pe
        .iter()
        .zip(&po)
        .filter(|(e, _)| **e > 0.0)
        .map(|(e, o)| (o - e).powi(2) / e)
        .sum();
    let dof = pooled_dof(pe.len())?;
    Ok(TestResult {
        statistic,
        p_value: chi_square_p(statistic, dof),
        n_x: total as usize,
        n_y: 0,
        dof: Some(dof),
    })
}

/// Two-sample test on raw values.
pub fn two_sample_test(xs: &[f64], ys: &[f64], kind: TestKind) -> Result<TestResult> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InsufficientData("both samples must be nonempty".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples contain non-finite values".into()));
    }
    let first = xs[0];
    if xs.iter().chain(ys).all(|&v| v == first) {
        return Err(Error::DegenerateInput("every value is identical".into()));
    }
    match kind {
        TestKind::Ks => ks_two_sample(xs, ys),
        TestKind::ChiSquare { bins } => {
            if bins < 2 {
                return Err(Error::InvalidArgument("chi-square needs at least 2 bins".into()));
            }
            let lo = xs.iter().chain(ys).copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().chain(ys).copied().fold(f64::NEG_INFINITY, f64::max);
            let width = (hi - lo) / bins as f64;
            let bin = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
            let mut a = vec![0u64; bins];
            let mut b = vec![0u64; bins];
            for &v in xs {
                a[bin(v)] += 1;
            }
            for &v in ys {
                b[bin(v)] += 1;
            }
            chi_square_homogeneity(&a, &b)
        }
    }
}

/// Counts of `(x, y)` points on a `bins x bins` grid over `[lo, hi)^2`.
pub fn histogram_2d(points: &[(f64, f64)], bins: usize, lo: f64, hi: f64) -> Vec<u64> {
    let width = (hi - lo) / bins as f64;
    let idx = |v: f64| (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
    let mut counts = vec![0u64; bins * bins];
    for &(x, y) in points {
        counts[idx(x) * bins + idx(y)] += 1;
    }
    counts
}
