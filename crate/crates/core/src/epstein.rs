//! Epstein zeta functions of positive-definite binary quadratic forms:
//! reduction to the fundamental domain, direct and incomplete-gamma evaluation,
//! and zero finding on the critical line.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::upper_gamma_tail;

/// `Q(m, n) = a m^2 + b m n + c n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticForm {
    /// Requires `a > 0` and `b^2 - 4ac < 0`.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let q = Self { a, b, c };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.a.is_finite() && self.b.is_finite() && self.c.is_finite();
        if !(finite && self.a > 0.0 && self.discriminant() < 0.0) {
            return Err(Error::NotPositiveDefinite {
                a: self.a,
                b: self.b,
                c: self.c,
            });
        }
        Ok(())
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    pub fn eval(&self, m: i64, n: i64) -> f64 {
        let (m, n) = (m as f64, n as f64);
        self.a * m * m + self.b * m * n + self.c * n * n
    }

    /// Smallest eigenvalue of `[[a, b/2], [b/2, c]]`, so `Q(v) >= lambda |v|^2`.
    pub fn min_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.a + self.c);
        let diff = 0.5 * (self.a - self.c);
        mean - (diff * diff + 0.25 * self.b * self.b).sqrt()
    }

    /// `sqrt|Delta| / 2pi`, the base of the gamma factor.
    pub fn gamma_factor_base(&self) -> f64 {
        (-self.discriminant()).sqrt() / TAU
    }

    /// Point `z = x + iy` with `Q(m, n) = a |m + n z|^2`.
    pub fn upper_half_point(&self) -> UpperHalfPoint {
        UpperHalfPoint {
            x: self.b / (2.0 * self.a),
            y: (-self.discriminant()).sqrt() / (2.0 * self.a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    pub x: f64,
    pub y: f64,
}

impl UpperHalfPoint {
    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// `-1/2 < x <= 1/2` and `|z| > 1`, or `|z| = 1` with `x >= 0`.
    pub fn in_fundamental_domain(&self) -> bool {
        let r = self.norm_sqr();
        self.x > -0.5 && self.x <= 0.5 && (r > 1.0 || (r == 1.0 && self.x >= 0.0))
    }
}

const REDUCTION_MAX_STEPS: usize = 10_000;
const UNIT_CIRCLE_SLACK: f64 = 1e-14;

/// Reduce `z(q)` into the fundamental domain by translations and `z -> -1/z`.
///
/// Returns the reduced point and `a y`, for which
/// `L_Q(s) = 2 (a y)^{-s} E(z; s)`. Points within `1e-14` of the unit circle
/// are treated as on it.
pub fn reduce_form(q: &QuadraticForm) -> Result<(UpperHalfPoint, f64)> {
    q.validate()?;
    let z0 = q.upper_half_point();
    let scale = q.a * z0.y;
    let (mut x, mut y) = (z0.x, z0.y);
    for _ in 0..REDUCTION_MAX_STEPS {
        x -= (x + 0.5).floor();
        if x <= -0.5 {
            x += 1.0;
        }
        let r = x * x + y * y;
        if r < 1.0 - UNIT_CIRCLE_SLACK {
            x = -x / r;
            y /= r;
            continue;
        }
        if (r - 1.0).abs() <= UNIT_CIRCLE_SLACK && x < 0.0 {
            x = -x;
        }
        if x == -0.5 {
            x = 0.5;
        }
        return Ok((UpperHalfPoint { x, y }, scale));
    }
    Err(Error::DomainError(format!(
        "reduction of ({}, {}, {}) did not terminate",
        q.a, q.b, q.c
    )))
}

/// The equivalent form whose point lies in the fundamental domain.
pub fn reduced_form(q: &QuadraticForm) -> Result<QuadraticForm> {
    let (z, scale) = reduce_form(q)?;
    let a = scale / z.y;
    Ok(QuadraticForm {
        a,
        b: 2.0 * a * z.x,
        c: a * z.norm_sqr(),
    })
}

/// Truncated lattice sum and a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectSum {
    pub value: Complex64,
    pub tail_bound: f64,
    pub radius: u32,
}

/// `sum' Q(m, n)^{-s}` over `0 < max(|m|, |n|) <= radius`.
///
/// Shell `r` has `8r` points with `Q >= lambda_min r^2`, which bounds the tail
/// by `8 lambda_min^{-sigma} R^{2 - 2 sigma} / (2 sigma - 2)`.
pub fn epstein_direct(q: &QuadraticForm, s: Complex64, radius: u32) -> Result<DirectSum> {
    q.validate()?;
    if !(s.re > 1.0) {
        return Err(Error::DomainError(format!("direct summation needs Re(s) > 1, got {s}")));
    }
    if radius == 0 {
        return Err(Error::InvalidArgument("radius must be at least 1".into()));
    }
    let r = radius as i64;
    let real = s.im == 0.0;
    let term = |v: f64| -> Complex64 {
        if real {
            Complex64::new(v.powf(-s.re), 0.0)
        } else {
            (-s * v.ln()).exp()
        }
    };
    // Half lattice (n > 0, or n = 0 < m), doubled by Q(-v) = Q(v).
    let half: Complex64 = (0..=r)
        .into_par_iter()
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            let m_lo = if n == 0 { 1 } else { -r };
            for m in m_lo..=r {
                acc += term(q.eval(m, n));
            }
            acc
        })
        .sum();
    let lambda = q.min_eigenvalue();
    let sigma = s.re;
    let rf = radius as f64;
    let tail_bound = 8.0 * lambda.powf(-sigma) * rf.powf(2.0 - 2.0 * sigma) / (2.0 * sigma - 2.0);
    Ok(DirectSum {
        value: 2.0 * half,
        tail_bound,
        radius,
    })
}

const POLE_RADIUS: f64 = 1e-6;
/// `e^{-ROTATION_BUDGET}` is the worst cancellation accepted from the rotated
/// contour at large `|Im s|`.
const ROTATION_BUDGET: f64 = 4.0;
const TAIL_RELATIVE: f64 = 1e-17;

/// Contour rotation `delta = e^{i phi}` for `s`: `phi` approaches
/// `+-pi/2` so that `|delta^{-s}|` offsets the `e^{-pi |t| / 2}` decay of
/// `Gamma(s)`.
pub fn default_rotation(s: Complex64) -> Complex64 {
    let t = s.im;
    let phi = t.signum() * (FRAC_PI_2 - ROTATION_BUDGET / t.abs()).max(0.0);
    Complex64::from_polar(1.0, phi)
}

/// `f` values with multiplicities for a reduced form, half lattice doubled.
#[derive(Debug, Clone, PartialEq)]
struct Lattice {
    /// Sorted `(f, multiplicity)` with `f = Q(v) / A`.
    terms: Vec<(f64, f64)>,
    f_max: f64,
}

impl Lattice {
    fn build(q: &QuadraticForm, base: f64, f_max: f64) -> Self {
        let q_max = f_max * base;
        let z = q.upper_half_point();
        let n_max = (q_max / (q.a * z.y * z.y)).sqrt().floor() as i64;
        let mut raw = Vec::new();
        for n in 0..=n_max {
            let nf = n as f64;
            let room = q_max / q.a - z.y * z.y * nf * nf;
            if room < 0.0 {
                continue;
            }
            let centre = -nf * z.x;
            let w = room.sqrt();
            let lo = if n == 0 { 1 } else { (centre - w).floor() as i64 - 1 };
            let hi = (centre + w).ceil() as i64 + 1;
            for m in lo..=hi {
                let v = q.eval(m, n);
                if v <= q_max && v > 0.0 {
                    raw.push(v / base);
                }
            }
        }
        raw.sort_by(f64::total_cmp);
        let mut terms: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for f in raw {
            match terms.last_mut() {
                Some((g, mult)) if *g == f => *mult += 2.0,
                _ => terms.push((f, 2.0)),
            }
        }
        Self { terms, f_max }
    }
}

/// Lattice data for repeated evaluation of one form's completed zeta function
/// `Lambda(s) = A^s Gamma(s) L_Q(s)`, `A = sqrt|Delta| / 2pi`.
#[derive(Debug, Clone)]
pub struct EpsteinSeries {
    form: QuadraticForm,
    reduced: QuadraticForm,
    base: f64,
    lattice: Lattice,
}

/// Smallest `f_max` for which the tail bound at `|Im s| = t` is negligible.
fn required_f_max(t: f64, sigma: f64) -> f64 {
    let k = default_rotation(Complex64::new(sigma, t)).re.max(1e-300);
    let p = (sigma - 1.0).max(-sigma).max(0.0);
    (60.0 + (1.0 / k).ln() + p) / k
}

impl EpsteinSeries {
    pub fn new(q: &QuadraticForm) -> Result<Self> {
        Self::with_height(q, 10.0)
    }

    /// Pre-size the lattice for `|Im s| <= t_max` with `0 <= Re s <= 1`.
    pub fn with_height(q: &QuadraticForm, t_max: f64) -> Result<Self> {
        let reduced = reduced_form(q)?;
        let base = q.gamma_factor_base();
        let f_max = required_f_max(t_max.abs(), 1.0);
        Ok(Self {
            form: *q,
            reduced,
            base,
            lattice: Lattice::build(&reduced, base, f_max),
        })
    }

    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }

    pub fn reduced(&self) -> &QuadraticForm {
        &self.reduced
    }

    fn check_pole(s: Complex64) -> Result<()> {
        for pole in [0.0, 1.0] {
            if (s - pole).norm() < POLE_RADIUS {
                return Err(Error::PoleProximity {
                    re: s.re,
                    im: s.im,
                    radius: POLE_RADIUS,
                });
            }
        }
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite s = {s}")));
        }
        Ok(())
    }

    /// Sum `sum' [G(s, f delta) + delta^{-1} G(1 - s, f / delta)]` (or only the
    /// first half when `second` is false), stopping once the tail bound is
    /// negligible against the accumulated magnitude.
    fn lattice_sum(&self, s: Complex64, delta: Complex64, second: bool) -> Complex64 {
        let k = (delta / delta.norm()).re;
        let p = (s.re - 1.0).max(-s.re).max(0.0);
        let tail = |f: f64| {
            let lo = (f * delta.norm().min(1.0 / delta.norm())) * k;
            if lo <= p + 1.0 {
                f64::INFINITY
            } else {
                (-lo).exp() / (k * (lo - p))
            }
        };
        let extended;
        let needed = {
            let sigma = s.re.clamp(-1.0, 2.0);
            required_f_max(s.im.abs(), sigma) / delta.norm().min(1.0 / delta.norm())
        };
        let terms = if needed > self.lattice.f_max {
            extended = Lattice::build(&self.reduced, self.base, needed);
            &extended.terms
        } else {
            &self.lattice.terms
        };
        let one_minus_s = Complex64::new(1.0, 0.0) - s;
        let inv_delta = delta.inv();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut magnitude = 0.0;
        for &(f, mult) in terms {
            let mut term = upper_gamma_tail(s, delta * f);
            if second {
                term += inv_delta * upper_gamma_tail(one_minus_s, inv_delta * f);
            }
            sum += mult * term;
            magnitude += mult * term.norm();
            if tail(f) <= TAIL_RELATIVE * magnitude {
                break;
            }
        }
        sum
    }

    /// `Lambda(s)` with the Mellin integral split along `delta` (`|arg delta|
    /// < pi/2`); the value does not depend on `delta` in exact arithmetic.
    pub fn completed_with_rotation(&self, s: Complex64, delta: Complex64) -> Result<Complex64> {
        Self::check_pole(s)?;
        if !(delta.re > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rotation must have positive real part, got {delta}"
            )));
        }
        let sum = self.lattice_sum(s, delta, true);
        let constants = (delta * (s - 1.0)).inv() - s.inv();
        Ok((s * delta.ln()).exp() * (sum + constants))
    }

    /// `Lambda(s) = (sqrt|Delta| / 2pi)^s Gamma(s) L_Q(s)`.
    pub fn completed(&self, s: Complex64) -> Result<Complex64> {
        self.completed_with_rotation(s, default_rotation(s))
    }

    /// `Z(t) = e^{pi |t| / 2} Lambda(1/2 + it)`, real for real forms. The
    /// exponential keeps the value away from underflow at large `|t|`.
    ///
    /// On the critical line the two halves of the lattice sum are complex
    /// conjugates, so only one is evaluated.
    pub fn hardy_z(&self, t: f64) -> f64 {
        let s = Complex64::new(0.5, t);
        let delta = default_rotation(s);
        let sum = self.lattice_sum(s, delta, false);
        let scaled = (s * delta.ln() + PI * t.abs() / 2.0).exp();
        let constants = (delta * (s - 1.0)).inv() - s.inv();
        2.0 * (scaled * sum).re + (scaled * constants).re
    }
}

/// `Lambda(s)` for a single evaluation.
pub fn epstein_completed(q: &QuadraticForm, s: Complex64) -> Result<Complex64> {
    EpsteinSeries::with_height(q, s.im.abs())?.completed(s)
}

/// `L_Q(s)` from `Lambda(s) / (A^s Gamma(s))`.
pub fn epstein_zeta(q: &QuadraticForm, s: Complex64) -> Result<Complex64> {
    let lambda = epstein_completed(q, s)?;
    let base = q.gamma_factor_base();
    Ok(lambda / ((s * base.ln()).exp() * crate::special::gamma(s)))
}

/// A zero `1/2 + it` bracketed to `refinement_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalZero {
    pub t: f64,
    pub refinement_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum ScanWarning {
    /// Two sign changes within three grid steps: zeros may have been missed
    /// nearby.
    StepTooCoarse { t_left: f64, t_right: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalScan {
    pub zeros: Vec<CriticalZero>,
    pub warnings: Vec<ScanWarning>,
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
}

const BISECTION_WIDTH: f64 = 1e-9;

fn bisect(series: &EpsteinSeries, mut lo: f64, mut hi: f64, mut z_lo: f64) -> CriticalZero {
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let z_mid = series.hardy_z(mid);
        if z_mid == 0.0 {
            return CriticalZero {
                t: mid,
                refinement_width: 0.0,
            };
        }
        if (z_mid > 0.0) == (z_lo > 0.0) {
            lo = mid;
            z_lo = z_mid;
        } else {
            hi = mid;
        }
    }
    CriticalZero {
        t: 0.5 * (lo + hi),
        refinement_width: hi - lo,
    }
}

/// Zeros of `Z(t)` on `[t_min, t_max]` located by sign changes on a grid of
/// spacing `step` and refined by bisection to width `1e-9`.
pub fn scan_critical_line(q: &QuadraticForm, t_min: f64, t_max: f64, step: f64) -> Result<CriticalScan> {
    if !(t_min >= 0.0 && t_max > t_min && step > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= t_min < t_max and step > 0, got [{t_min}, {t_max}] step {step}"
        )));
    }
    let series = EpsteinSeries::with_height(q, t_max)?;
    let count = ((t_max - t_min) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=count).map(|i| (t_min + i as f64 * step).min(t_max)).collect();
    // Z(0) is the value at s = 1/2, which is harmless; only the exact poles
    // are excluded.
    let values: Vec<f64> = grid.par_iter().map(|&t| series.hardy_z(t)).collect();

    let mut brackets = Vec::new();
    let mut i = 0;
    while i + 1 < grid.len() {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            brackets.push((i, Some(grid[i])));
        } else if b != 0.0 && (a > 0.0) != (b > 0.0) {
            brackets.push((i, None));
        }
        i += 1;
    }
    if values[grid.len() - 1] == 0.0 {
        brackets.push((grid.len() - 1, Some(grid[grid.len() - 1])));
    }
    let mut zeros: Vec<CriticalZero> = brackets
        .par_iter()
        .map(|&(i, exact)| match exact {
            Some(t) => CriticalZero {
                t,
                refinement_width: 0.0,
            },
            None => bisect(&series, grid[i], grid[i + 1], values[i]),
        })
        .collect();
    zeros.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut warnings = Vec::new();
    for w in brackets.windows(2) {
        if w[1].0 - w[0].0 < 3 {
            warnings.push(ScanWarning::StepTooCoarse {
                t_left: grid[w[0].0],
                t_right: grid[(w[1].0 + 1).min(grid.len() - 1)],
            });
        }
    }
    Ok(CriticalScan {
        zeros,
        warnings,
        t_min,
        t_max,
        step,
    })
}

/// `Phi(t) = (t / pi) log(A t / e)`: the smooth zero-counting function of
/// `Lambda` up to an additive constant.
pub fn smooth_zero_count(base: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    t / PI * (base * t / std::f64::consts::E).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormZeros {
    pub form: QuadraticForm,
    pub zeros: Vec<f64>,
    /// Final bisection bracket of each zero.
    pub refinement_widths: Vec<f64>,
    pub warnings: Vec<ScanWarning>,
    /// Differences of consecutive zero ordinates.
    pub raw_gaps: Vec<f64>,
    /// Gaps in the unfolded variable, rescaled to mean 1.
    pub unfolded_gaps: Vec<f64>,
    /// Fitted `N(t) ~ alpha Phi(t) + beta`.
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsteinSpacings {
    pub per_form: Vec<FormZeros>,
    /// Unfolded gaps of every form, in form order.
    pub pooled: Vec<f64>,
}

/// Unfold a sorted zero list by fitting the counting function
/// `N(t_k) = k` against `Phi(t_k)`.
pub fn unfold_zeros(base: f64, zeros: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if zeros.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 zeros to unfold, found {}",
            zeros.len()
        )));
    }
    let phi: Vec<f64> = zeros.iter().map(|&t| smooth_zero_count(base, t)).collect();
    let n = phi.len() as f64;
    let mx = phi.iter().sum::<f64>() / n;
    let my = (n - 1.0) / 2.0 + 1.0;
    let sxx: f64 = phi.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = phi
        .iter()
        .enumerate()
        .map(|(k, x)| (x - mx) * ((k + 1) as f64 - my))
        .sum();
    let alpha = if sxx > 0.0 { sxy / sxx } else { 1.0 };
    let beta = my - alpha * mx;
    let mut gaps: Vec<f64> = phi.windows(2).map(|w| alpha * (w[1] - w[0])).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if mean > 0.0 {
        for g in &mut gaps {
            *g /= mean;
        }
    }
    Ok((gaps, alpha, beta))
}

/// Critical-line zeros of each form on `t_range`, with raw and unfolded gaps.
pub fn epstein_zero_spacings(forms: &[QuadraticForm], t_range: (f64, f64), step: f64) -> Result<EpsteinSpacings> {
    if forms.is_empty() {
        return Err(Error::InvalidArgument("no forms given".into()));
    }
    let mut per_form = Vec::with_capacity(forms.len());
    let mut pooled = Vec::new();
    for q in forms {
        let scan = scan_critical_line(q, t_range.0, t_range.1, step)?;
        let zeros: Vec<f64> = scan.zeros.iter().map(|z| z.t).collect();
        let refinement_widths = scan.zeros.iter().map(|z| z.refinement_width).collect();
        let raw_gaps: Vec<f64> = zeros.windows(2).map(|w| w[1] - w[0]).collect();
        let (unfolded_gaps, alpha, beta) = unfold_zeros(q.gamma_factor_base(), &zeros)?;
        pooled.extend_from_slice(&unfolded_gaps);
        per_form.push(FormZeros {
            form: *q,
            zeros,
            refinement_widths,
            warnings: scan.warnings,
            raw_gaps,
            unfolded_gaps,
            alpha,
            beta,
        });
    }
    Ok(EpsteinSpacings { per_form, pooled })
}
