//! Complex gamma function and the incomplete-gamma tail used by the Epstein
//! zeta evaluation.

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Principal-ish `ln Gamma(z)` (Lanczos, g = 7). Only `exp` of the result is
/// meaningful: the imaginary part is not unwrapped onto a single branch.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Complex64::new(HALF_LN_TWO_PI, 0.0) + (z + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

const CF_MAX_ITER: usize = 5_000;
const SERIES_MAX_ITER: usize = 5_000;
const EPS: f64 = 1e-16;

/// `G(s, w) = int_1^inf u^{s-1} e^{-w u} du = w^{-s} Gamma(s, w)` for `Re w > 0`.
///
/// Large `|w|` relative to `|s|` uses the Legendre continued fraction; small
/// `|w|` subtracts the lower integral `int_0^1` (an everywhere-convergent
/// series) from `Gamma(s) w^{-s}`. Non-positive integer `s` is handled through
/// the exponential integrals `E_n`.
pub fn upper_gamma_tail(s: Complex64, w: Complex64) -> Complex64 {
    debug_assert!(w.re > 0.0, "upper_gamma_tail needs Re w > 0, got {w}");
    if w.norm() > s.norm() + 1.5 {
        return tail_continued_fraction(s, w);
    }
    if let Some(n) = nonpositive_integer(s) {
        return exponential_integral(n + 1, w);
    }
    gamma(s) * (-s * w.ln()).exp() - lower_series(s, w)
}

fn nonpositive_integer(s: Complex64) -> Option<u32> {
    if s.im != 0.0 || s.re > 0.0 {
        return None;
    }
    let r = s.re.round();
    ((s.re - r).abs() < 1e-12).then_some((-r) as u32)
}

/// `G(s, w) = e^{-w} / (w + 1 - s - 1(1-s) / (w + 3 - s - 2(2-s) / ...))`,
/// evaluated with the modified Lentz method.
fn tail_continued_fraction(s: Complex64, w: Complex64) -> Complex64 {
    // Complex division squares moduli, so the Lentz guard must stay well
    // above sqrt(f64::MIN_POSITIVE).
    let tiny = Complex64::new(1e-30, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut b = w + 1.0 - s;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -(i as f64) * (Complex64::new(i as f64, 0.0) - s);
        b += 2.0;
        d = an * d + b;
        if d.norm() < 1e-30 {
            d = tiny;
        }
        c = b + an / c;
        if c.norm() < 1e-30 {
            c = tiny;
        }
        d = one / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).norm() < EPS {
            break;
        }
    }
    (-w).exp() * h
}

/// `int_0^1 u^{s-1} e^{-w u} du = e^{-w} sum_k w^k / (s (s+1) ... (s+k))`.
fn lower_series(s: Complex64, w: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0) / s;
    let mut sum = term;
    for k in 1..SERIES_MAX_ITER {
        term *= w / (s + k as f64);
        sum += term;
        if term.norm() < EPS * sum.norm() {
            break;
        }
    }
    (-w).exp() * sum
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E_n(w) = int_1^inf u^{-n} e^{-w u} du` for `n >= 1`, small `|w|`.
fn exponential_integral(n: u32, w: Complex64) -> Complex64 {
    // E_1 from its power series, then E_{k+1} = (e^{-w} - w E_k) / k.
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..SERIES_MAX_ITER {
        term *= -w / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() < EPS * sum.norm().max(1e-300) {
            break;
        }
    }
    let mut e = -Complex64::new(EULER_GAMMA, 0.0) - w.ln() - sum;
    let ew = (-w).exp();
    for k in 1..n {
        e = (ew - w * e) / k as f64;
    }
    e
}
