//! Jacobians of the coefficient-to-root maps and the unnormalized
//! log-densities of the ensembles compared in this crate.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{elementary_symmetric, elementary_symmetric_all, unit_points, ZeroConfiguration};

/// Target densities on angle vectors.
///
/// Circular kinds (`COE`, `CUE`, `THM1_EVEN`) act on `n` angles in `[0, 2pi)`;
/// the real kinds act on `m` angles `t` in `(0, pi)`, one per conjugate pair
/// `e^{+-it}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum DensityKind {
    /// `|Delta|`.
    #[serde(rename = "COE")]
    Coe { n: usize },
    /// `|Delta|^2`.
    #[serde(rename = "CUE")]
    Cue { n: usize },
    /// `|e_{N/2}| |Delta|`, the induced density for even complex degree.
    #[serde(rename = "THM1_EVEN")]
    EvenSelfReciprocal { n: usize },
    /// The real-coefficient Jacobian, a square root of the USp Haar density.
    #[serde(rename = "THM2_REAL")]
    RealSelfReciprocal { m: usize },
    #[serde(rename = "USP_HAAR")]
    UspHaar { m: usize },
}

impl DensityKind {
    /// Number of angles a point of this kind carries.
    pub fn arity(&self) -> usize {
        match *self {
            Self::Coe { n } | Self::Cue { n } | Self::EvenSelfReciprocal { n } => n,
            Self::RealSelfReciprocal { m } | Self::UspHaar { m } => m,
        }
    }

    /// True for the kinds whose angles live in `(0, pi)`.
    pub fn is_half_circle(&self) -> bool {
        matches!(self, Self::RealSelfReciprocal { .. } | Self::UspHaar { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.arity() == 0 {
            return Err(Error::InvalidArgument(format!("{self:?} has no angles")));
        }
        if let Self::EvenSelfReciprocal { n } = *self {
            if n % 2 != 0 {
                return Err(Error::InvalidArgument(format!("THM1_EVEN needs even degree, got {n}")));
            }
        }
        Ok(())
    }
}

/// Degree parity for the real-coefficient Jacobian. Odd degree adds the forced
/// zero at `-1`, which does not change the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// `1 / ((4 sqrt(pi))^N Gamma(1 + N/2))`, the normalization quoted for the COE
/// eigenangle density.
pub fn coe_normalization(n: usize) -> f64 {
    let log = -(n as f64) * (4.0 * PI.sqrt()).ln() - statrs::function::gamma::ln_gamma(1.0 + n as f64 / 2.0);
    log.exp()
}

/// `log |e^{ia} - e^{ib}| = log |2 sin((a - b)/2)|`; exact `-inf` when `a == b`.
fn log_chord(a: f64, b: f64) -> f64 {
    (2.0 * ((a - b) / 2.0).sin()).abs().ln()
}

/// `log |Delta(e^{i delta_1}, ..., e^{i delta_N})|` in chord form.
pub fn log_vandermonde_angles(delta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..delta.len() {
        for j in 0..k {
            acc += log_chord(delta[k], delta[j]);
        }
    }
    acc
}

fn log_jacobian_complex(roots: &[Complex64], m: usize, sum_log_rho: f64, log_vdm: f64) -> f64 {
    let n = roots.len();
    let m = m as f64;
    if n % 2 == 1 {
        (m - (n - 1) as f64 / 2.0) * LN_2 - sum_log_rho + log_vdm
    } else {
        let e_half = elementary_symmetric(n / 2, roots).norm();
        (m - n as f64 / 2.0) * LN_2 - sum_log_rho + e_half.ln() + log_vdm
    }
}

/// `log` of [`jacobian_complex_circle`].
pub fn log_jacobian_complex_circle(delta: &[f64]) -> f64 {
    let roots = unit_points(delta);
    log_jacobian_complex(&roots, 0, 0.0, log_vandermonde_angles(delta))
}

/// `|J|` for the map from `N = delta.len()` on-circle angles to the real
/// coefficient coordinates: `2^{-(N-1)/2} |Delta|` for odd `N`,
/// `2^{-N/2} |e_{N/2}| |Delta|` for even `N`.
pub fn jacobian_complex_circle(delta: &[f64]) -> f64 {
    log_jacobian_complex_circle(delta).exp()
}

/// `log` of [`jacobian_complex_general`].
pub fn log_jacobian_complex_general(zc: &ZeroConfiguration) -> f64 {
    let pairs = zc.off_pairs();
    if pairs.is_empty() {
        return log_jacobian_complex_circle(zc.angles());
    }
    let roots = zc.roots();
    let sum_log_rho: f64 = pairs.iter().map(|p| p.rho.ln()).sum();
    log_jacobian_complex(
        &roots,
        pairs.len(),
        sum_log_rho,
        crate::poly::log_vandermonde_abs(&roots),
    )
}

/// `|J|` with `M` off-circle pairs parametrized by `(rho, theta)`:
/// `2^{M-(N-1)/2} prod(1/rho) |Delta|` (odd `N`) or
/// `2^{M-N/2} prod(1/rho) |e_{N/2}| |Delta|` (even `N`), with `Delta` over all
/// `N` zeros.
pub fn jacobian_complex_general(zc: &ZeroConfiguration) -> f64 {
    log_jacobian_complex_general(zc).exp()
}

/// `log` of [`jacobian_real`].
pub fn log_jacobian_real(t: &[f64]) -> f64 {
    // |e^{it} - e^{-it}| = |2 sin t|, and the pair products are chords.
    let mut acc: f64 = t.iter().map(|&x| (2.0 * x.sin()).abs().ln()).sum();
    for k in 1..t.len() {
        for j in 0..k {
            acc += log_chord(t[k], t[j]) + log_chord(t[k], -t[j]);
        }
    }
    acc
}

/// `|prod (e^{it_m} - e^{-it_m}) prod_{j<k} (e^{it_k} - e^{it_j})(e^{it_k} - e^{-it_j})|`,
/// equal to `2^{M^2} |prod sin t_m prod sin((t_k - t_j)/2) sin((t_k + t_j)/2)|`.
/// The value does not depend on the degree parity.
pub fn jacobian_real(t: &[f64], _parity: Parity) -> f64 {
    log_jacobian_real(t).exp()
}

/// Unnormalized log-density of `kind` at `angles`; `-inf` on coincident angles.
pub fn log_density(kind: DensityKind, angles: &[f64]) -> Result<f64> {
    if angles.len() != kind.arity() {
        return Err(Error::ArityMismatch {
            expected: kind.arity(),
            got: angles.len(),
        });
    }
    Ok(match kind {
        DensityKind::Coe { .. } => log_vandermonde_angles(angles),
        DensityKind::Cue { .. } => 2.0 * log_vandermonde_angles(angles),
        DensityKind::EvenSelfReciprocal { n } => {
            let e = elementary_symmetric(n / 2, &unit_points(angles)).norm();
            e.ln() + log_vandermonde_angles(angles)
        }
        DensityKind::RealSelfReciprocal { .. } => log_jacobian_real(angles),
        DensityKind::UspHaar { .. } => 2.0 * log_jacobian_real(angles),
    })
}

/// The three coefficient maps whose Jacobians have closed forms.
///
/// Complex points are laid out `[rho_1, theta_1, ..., rho_M, theta_M,
/// delta_1, ..., delta_L]`. Real points are the angles `t_1, ..., t_M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum CoefficientMap {
    /// Odd degree: outputs `Re a_1, Im a_1, ..., Re a_K, Im a_K, arg a_N`,
    /// `K = (N-1)/2`.
    ComplexOdd { pairs: usize },
    /// Even degree: outputs `Re a_1, Im a_1, ..., Re a_{N/2}, Im a_{N/2}`.
    ComplexEven { pairs: usize },
    /// Outputs `a_1, ..., a_M` of `prod (z^2 - 2 cos(t_m) z + 1)`, times
    /// `(z + 1)` for odd degree.
    Real { parity: Parity },
}

impl CoefficientMap {
    /// Complex map with `pairs` off-circle pairs and parity taken from the
    /// point length.
    pub fn complex(pairs: usize, degree: usize) -> Self {
        if degree % 2 == 1 {
            Self::ComplexOdd { pairs }
        } else {
            Self::ComplexEven { pairs }
        }
    }

    fn roots(&self, point: &[f64]) -> Vec<Complex64> {
        match *self {
            Self::ComplexOdd { pairs } | Self::ComplexEven { pairs } => {
                let mut out = Vec::with_capacity(point.len());
                for p in 0..pairs {
                    let (rho, theta) = (point[2 * p], point[2 * p + 1]);
                    out.push(Complex64::from_polar(rho, theta));
                    out.push(Complex64::from_polar(1.0 / rho, theta));
                }
                out.extend(unit_points(&point[2 * pairs..]));
                out
            }
            Self::Real { parity } => {
                let mut out: Vec<Complex64> = point
                    .iter()
                    .flat_map(|&t| [Complex64::from_polar(1.0, t), Complex64::from_polar(1.0, -t)])
                    .collect();
                if parity == Parity::Odd {
                    out.push(Complex64::new(-1.0, 0.0));
                }
                out
            }
        }
    }

    /// Coefficients `a_0 = 1, a_1, ..., a_N`.
    fn coefficients(&self, point: &[f64]) -> Vec<Complex64> {
        let e = elementary_symmetric_all(&self.roots(point));
        e.into_iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { v } else { -v })
            .collect()
    }

    fn check(&self, point: &[f64], step: f64) -> Result<()> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateInput("non-finite coordinate".into()));
        }
        let guard = 10.0 * step;
        match *self {
            Self::ComplexOdd { pairs } | Self::ComplexEven { pairs } => {
                let n = point.len();
                if n < 2 * pairs || n == 0 {
                    return Err(Error::ArityMismatch {
                        expected: 2 * pairs.max(1),
                        got: n,
                    });
                }
                let odd = matches!(self, Self::ComplexOdd { .. });
                if (n % 2 == 1) != odd {
                    return Err(Error::DegenerateInput(format!(
                        "point of length {n} does not match the map parity"
                    )));
                }
                for p in 0..pairs {
                    if (point[2 * p] - 1.0).abs() <= guard || point[2 * p] <= 0.0 {
                        return Err(Error::DegenerateInput(format!(
                            "pair radius {} is on or too close to the circle",
                            point[2 * p]
                        )));
                    }
                }
            }
            Self::Real { .. } => {
                if point.is_empty() {
                    return Err(Error::ArityMismatch { expected: 1, got: 0 });
                }
                if point.iter().any(|&t| t <= guard || t >= PI - guard) {
                    return Err(Error::DegenerateInput("real-case angle too close to 0 or pi".into()));
                }
            }
        }
        let roots = self.roots(point);
        for k in 1..roots.len() {
            for j in 0..k {
                if (roots[k] - roots[j]).norm() <= guard {
                    return Err(Error::DegenerateInput(format!(
                        "zeros {j} and {k} are closer than 10 * step"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Real output coordinates at `point`, plus `a_N` for the phase
    /// differencing of the odd complex map.
    fn outputs(&self, point: &[f64]) -> (Vec<f64>, Complex64) {
        let a = self.coefficients(point);
        let n = a.len() - 1;
        let mut out = Vec::with_capacity(point.len());
        match *self {
            Self::ComplexOdd { .. } => {
                for k in 1..=(n - 1) / 2 {
                    out.push(a[k].re);
                    out.push(a[k].im);
                }
            }
            Self::ComplexEven { .. } => {
                for k in 1..=n / 2 {
                    out.push(a[k].re);
                    out.push(a[k].im);
                }
            }
            Self::Real { .. } => {
                out.extend(a[1..=point.len()].iter().map(|c| c.re));
            }
        }
        (out, a[n])
    }
}

/// Central-difference Jacobians at `step` and `2 * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifferenceReport {
    pub value: f64,
    pub coarse: f64,
    /// Relative disagreement between the two step sizes.
    pub richardson_gap: f64,
}

fn fd_determinant(map: CoefficientMap, point: &[f64], step: f64) -> f64 {
    let dim = point.len();
    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    let mut x = point.to_vec();
    for col in 0..dim {
        x[col] = point[col] + step;
        let (plus, a_plus) = map.outputs(&x);
        x[col] = point[col] - step;
        let (minus, a_minus) = map.outputs(&x);
        x[col] = point[col];
        for row in 0..plus.len() {
            jac[(row, col)] = (plus[row] - minus[row]) / (2.0 * step);
        }
        if let CoefficientMap::ComplexOdd { .. } = map {
            jac[(dim - 1, col)] = (a_plus / a_minus).arg() / (2.0 * step);
        }
    }
    jac.determinant().abs()
}

/// `|det|` of the central-difference Jacobian of `map` at `point`.
pub fn finite_difference_jacobian(map: CoefficientMap, point: &[f64], step: f64) -> Result<f64> {
    map.check(point, step)?;
    Ok(fd_determinant(map, point, step))
}

/// [`finite_difference_jacobian`] together with the `2 * step` estimate.
pub fn finite_difference_report(map: CoefficientMap, point: &[f64], step: f64) -> Result<FiniteDifferenceReport> {
    map.check(point, 2.0 * step)?;
    let value = fd_determinant(map, point, step);
    let coarse = fd_determinant(map, point, 2.0 * step);
    Ok(FiniteDifferenceReport {
        value,
        coarse,
        richardson_gap: (value - coarse).abs() / value.abs().max(f64::MIN_POSITIVE),
    })
}

/// Closed-form `|J|` matching a [`CoefficientMap`] point layout.
pub fn closed_form_jacobian(map: CoefficientMap, point: &[f64]) -> Result<f64> {
    match map {
        CoefficientMap::ComplexOdd { pairs } | CoefficientMap::ComplexEven { pairs } => {
            if point.len() < 2 * pairs {
                return Err(Error::ArityMismatch {
                    expected: 2 * pairs,
                    got: point.len(),
                });
            }
            let off = (0..pairs)
                .map(|p| crate::poly::OffPair {
                    rho: point[2 * p],
                    theta: point[2 * p + 1],
                })
                .collect();
            let zc = ZeroConfiguration::new(point[2 * pairs..].to_vec(), off, 0.0)?;
            Ok(jacobian_complex_general(&zc))
        }
        CoefficientMap::Real { parity } => Ok(jacobian_real(point, parity)),
    }
}

/// Random point for `map` away from the degenerate set: zeros pairwise at
/// least `separation` apart, off-circle radii in `[1.1, 2.5]`, and for even
/// complex degree `|e_{N/2}| > separation`. `size` is the degree for complex
/// maps and the angle count for the real map.
pub fn random_nondegenerate_point<R: Rng + ?Sized>(
    map: CoefficientMap,
    size: usize,
    separation: f64,
    rng: &mut R,
) -> Vec<f64> {
    let tau = 2.0 * PI;
    loop {
        let point: Vec<f64> = match map {
            CoefficientMap::ComplexOdd { pairs } | CoefficientMap::ComplexEven { pairs } => {
                let mut point = Vec::with_capacity(size);
                for _ in 0..pairs {
                    point.push(rng.random_range(1.1..2.5));
                    point.push(rng.random_range(0.0..tau));
                }
                point.extend((0..size.saturating_sub(2 * pairs)).map(|_| rng.random_range(0.0..tau)));
                point
            }
            CoefficientMap::Real { .. } => (0..size)
                .map(|_| rng.random_range(separation..PI - separation))
                .collect(),
        };
        let roots = map.roots(&point);
        let separated = (1..roots.len()).all(|k| (0..k).all(|j| (roots[k] - roots[j]).norm() > separation));
        let middle_ok = match map {
            CoefficientMap::ComplexEven { .. } => elementary_symmetric(roots.len() / 2, &roots).norm() > separation,
            _ => true,
        };
        if separated && middle_ok {
            return point;
        }
    }
}
