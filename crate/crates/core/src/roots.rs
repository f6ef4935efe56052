//! Root finding for self-reciprocal polynomials and the split of the zeros
//! into on-circle angles and reflected pairs.

use std::f64::consts::TAU;

use nalgebra::{linalg::Schur, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{wrap_angle, OffPair, SelfReciprocalPoly, ZeroConfiguration, DEGREE_TOLERANCE};

/// Raw output of [`find_roots`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootFindReport {
    pub raw_roots: Vec<Complex64>,
    /// `max |p(z)| / max(1, |z|)^N` over the roots.
    pub residual_max: f64,
    /// Aberth sweeps used by the polishing stage.
    pub iterations: usize,
}

const SCHUR_MAX_ITER: usize = 1_000;
const POLISH_MAX_ITER: usize = 60;
const FALLBACK_MAX_ITER: usize = 800;

/// Default on-circle tolerance for degree `n`.
pub fn default_tolerance(n: usize) -> f64 {
    1e-8 * n as f64
}

/// All `N` zeros of `p`.
///
/// Eigenvalues of the balanced companion matrix seed an Aberth-Ehrlich polish.
/// If the eigensolver fails or the polished roots are not accurate, the polish
/// is rerun from points on a circle before giving up.
pub fn find_roots(p: &SelfReciprocalPoly) -> Result<RootFindReport> {
    let c = p.monic_coeffs();
    let n = p.degree();
    let accept = acceptance_residual(&c);

    let mut best: Option<RootFindReport> = None;
    if let Some(seed) = companion_eigenvalues(&c) {
        let report = polish(&c, seed, POLISH_MAX_ITER);
        if report.residual_max <= accept {
            return Ok(report);
        }
        best = Some(report);
    }
    let start: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, TAU * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    let report = polish(&c, start, FALLBACK_MAX_ITER);
    if report.residual_max <= accept {
        return Ok(report);
    }
    let worst = match best {
        Some(b) if b.residual_max < report.residual_max => b,
        _ => report,
    };
    Err(Error::ConvergenceFailure {
        iterations: worst.iterations,
        residual: worst.residual_max,
    })
}

/// Residual considered converged: a few ulps of the largest term in the
/// polynomial, scaled by degree.
fn acceptance_residual(c: &[Complex64]) -> f64 {
    let sum: f64 = c.iter().map(|a| a.norm()).sum();
    DEGREE_TOLERANCE * 1e-2 * c.len() as f64 * sum
}

fn companion_eigenvalues(c: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = c.len() - 1;
    if n == 1 {
        return Some(vec![-c[1]]);
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1];
    }
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    balance(&mut m);
    // Power-of-two balancing keeps a real matrix exactly real.
    let eig: Vec<Complex64> = if c.iter().all(|a| a.im == 0.0) {
        let real = m.map(|z| z.re);
        Schur::try_new(real, f64::EPSILON, SCHUR_MAX_ITER)?
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    } else {
        let (_, t) = Schur::try_new(m, f64::EPSILON, SCHUR_MAX_ITER)?.unpack();
        (0..n).map(|i| t[(i, i)]).collect()
    };
    eig.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(eig)
}

/// Parlett-Reinsch diagonal similarity with power-of-two scalings.
fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].l1_norm();
                    row += m[(i, j)].l1_norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut g = row / radix;
            while col < g {
                f *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix * radix;
            }
            if (col + row) / f < 0.95 * total {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// `p(z)/p'(z)` and the scaled residual `|p(z)| / max(1, |z|)^N`. Outside the
/// unit disk the reversed polynomial is used so nothing overflows.
fn newton_ratio(c: &[Complex64], z: Complex64) -> (Complex64, f64) {
    let n = c.len() - 1;
    if z.norm() <= 1.0 {
        let mut p = c[0];
        let mut dp = Complex64::new(0.0, 0.0);
        for &a in &c[1..] {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p / dp, p.norm())
    } else {
        // p(z) = z^N q(w), w = 1/z, q(w) = sum_k c_k w^k
        let w = z.inv();
        let mut q = c[n];
        let mut dq = Complex64::new(0.0, 0.0);
        for &a in c[..n].iter().rev() {
            dq = dq * w + q;
            q = q * w + a;
        }
        (z * q / (q * n as f64 - w * dq), q.norm())
    }
}

fn polish(c: &[Complex64], mut z: Vec<Complex64>, max_iter: usize) -> RootFindReport {
    let n = z.len();
    let mut iterations = 0;
    let mut converged = vec![false; n];
    for it in 0..max_iter {
        iterations = it + 1;
        let mut moved = false;
        for k in 0..n {
            if converged[k] {
                continue;
            }
            let (ratio, _) = newton_ratio(c, z[k]);
            if !(ratio.re.is_finite() && ratio.im.is_finite()) {
                converged[k] = true;
                continue;
            }
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .filter(|v| v.re.is_finite() && v.im.is_finite())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !(step.re.is_finite() && step.im.is_finite()) {
                converged[k] = true;
                continue;
            }
            z[k] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[k].norm().max(1e-300) {
                converged[k] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let residual_max = z.iter().map(|&r| newton_ratio(c, r).1).fold(0.0, f64::max);
    RootFindReport {
        raw_roots: z,
        residual_max,
        iterations,
    }
}

/// Split roots into on-circle angles (`| |z| - 1 | < tol`) and reflected pairs.
///
/// Outer roots are matched greedily, largest modulus first, to the unused inner
/// root nearest their reflection `1/conj(beta)`; a match must lie within
/// `10 * tol`.
pub fn circle_classify(report: &RootFindReport, tol: f64) -> Result<ZeroConfiguration> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut angles = Vec::new();
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for &z in &report.raw_roots {
        let r = z.norm();
        if (r - 1.0).abs() < tol {
            angles.push(wrap_angle(z.arg()));
        } else if r > 1.0 {
            outer.push(z);
        } else {
            inner.push(z);
        }
    }
    outer.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let mut used = vec![false; inner.len()];
    let radius = 10.0 * tol;
    let mut pairs = Vec::with_capacity(outer.len());
    for beta in outer {
        let target = beta.conj().inv();
        let best = inner
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, g)| (i, (g - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, d)) if d < radius => {
                used[i] = true;
                let gamma = inner[i];
                pairs.push(OffPair {
                    rho: (beta.norm() / gamma.norm()).sqrt(),
                    theta: (beta / beta.norm() + gamma / gamma.norm()).arg(),
                });
            }
            _ => {
                return Err(Error::UnpairedRoot {
                    re: beta.re,
                    im: beta.im,
                    radius,
                })
            }
        }
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::UnpairedRoot {
            re: inner[i].re,
            im: inner[i].im,
            radius,
        });
    }
    ZeroConfiguration::new(angles, pairs, tol)
}

/// Number of zeros of `p` on the unit circle at tolerance `tol`.
pub fn count_on_circle(p: &SelfReciprocalPoly, tol: f64) -> Result<usize> {
    let report = find_roots(p)?;
    Ok(circle_classify(&report, tol)?.angles().len())
}
