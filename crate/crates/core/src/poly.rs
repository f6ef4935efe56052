//! Self-reciprocal polynomials and the symmetric-function toolkit around them.
//!
//! A monic polynomial `f(z) = z^N + a_1 z^{N-1} + ... + a_N` is self-reciprocal
//! when `|a_N| = 1` and `a_{N-j} = a_N * conj(a_j)`. Its zeros lie on the unit
//! circle or come in pairs `beta, 1/conj(beta)` reflected through it.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Base tolerance per unit of degree used when validating computed polynomials.
pub const DEGREE_TOLERANCE: f64 = 1e-10;

/// Reduce an angle into `[0, 2pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `e_n(xs)`, the n-th elementary symmetric function.
///
/// Built with the one-pass table recurrence `e_k <- e_k + x * e_{k-1}`, so the
/// cost is `O(n * |xs|)`. `e_0 = 1` and `e_n = 0` for `n > |xs|`.
pub fn elementary_symmetric(n: usize, xs: &[Complex64]) -> Complex64 {
    if n > xs.len() {
        return Complex64::new(0.0, 0.0);
    }
    let mut e = vec![Complex64::new(0.0, 0.0); n + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        let top = n.min(i + 1);
        for k in (1..=top).rev() {
            let prev = e[k - 1];
            e[k] += x * prev;
        }
    }
    e[n]
}

/// All of `e_0, ..., e_{|xs|}` at once.
pub fn elementary_symmetric_all(xs: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); xs.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            let prev = e[k - 1];
            e[k] += x * prev;
        }
    }
    e
}

/// `log prod_{j<k} |x_k - x_j|`; `-inf` when two entries coincide.
pub fn log_vandermonde_abs(xs: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..xs.len() {
        for j in 0..k {
            acc += (xs[k] - xs[j]).norm().ln();
        }
    }
    acc
}

/// `prod_{j<k} |x_k - x_j|`. Empty and singleton inputs give the empty product 1.
pub fn vandermonde_abs(xs: &[Complex64]) -> f64 {
    log_vandermonde_abs(xs).exp()
}

/// Points `e^{i delta}` on the unit circle.
pub fn unit_points(angles: &[f64]) -> Vec<Complex64> {
    angles.iter().map(|&d| Complex64::from_polar(1.0, d)).collect()
}

/// A monic self-reciprocal polynomial. The leading 1 is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfReciprocalPoly {
    coeffs: Vec<Complex64>,
    is_real: bool,
}

impl SelfReciprocalPoly {
    /// Validate `a_1, ..., a_N` and build the polynomial.
    ///
    /// Checks `| |a_N| - 1 | <= tol` and, componentwise,
    /// `|a_{N-n} - a_N conj(a_n)| <= tol`. When every imaginary part is below
    /// `tol` the polynomial is flagged real and the imaginary parts are zeroed.
    pub fn from_coefficients(coeffs: &[Complex64], tol: f64) -> Result<Self> {
        let n = coeffs.len();
        if n == 0 {
            return Err(Error::EmptyCoefficients);
        }
        let a_n = coeffs[n - 1];
        let modulus = a_n.norm();
        if !((modulus - 1.0).abs() <= tol) {
            return Err(Error::UnitModulusViolation { modulus, tol });
        }
        // a_j with a_0 = 1: for 1 <= j <= N-1 check a_{N-j} = a_N conj(a_j).
        for j in 1..n {
            let expected = a_n * coeffs[j - 1].conj();
            let actual = coeffs[n - j - 1];
            let deviation = (actual.re - expected.re).abs().max((actual.im - expected.im).abs());
            if !(deviation <= tol) {
                return Err(Error::SymmetryViolation {
                    index: j,
                    deviation,
                    tol,
                });
            }
        }
        let is_real = coeffs.iter().all(|c| c.im.abs() < tol);
        let coeffs = if is_real {
            coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect()
        } else {
            coeffs.to_vec()
        };
        Ok(Self { coeffs, is_real })
    }

    /// Expand `prod (z - root)` over every root of the configuration.
    ///
    /// `a_n = (-1)^n e_n(roots)`; the result is validated with tolerance
    /// `1e-10 * N`.
    pub fn from_roots(zc: &ZeroConfiguration) -> Result<Self> {
        let roots = zc.roots();
        let e = elementary_symmetric_all(&roots);
        let coeffs: Vec<Complex64> = e
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &v)| if k % 2 == 0 { v } else { -v })
            .collect();
        Self::from_coefficients(&coeffs, DEGREE_TOLERANCE * roots.len() as f64)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `a_1, ..., a_N`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// `a_N`, the unimodular constant term.
    pub fn constant(&self) -> Complex64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Coefficients highest power first, leading 1 included.
    pub fn monic_coeffs(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(Complex64::new(1.0, 0.0));
        out.extend_from_slice(&self.coeffs);
        out
    }

    /// Horner evaluation of `f(z)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(1.0, 0.0), |acc, &a| acc * z + a)
    }

    /// Convert to the real trigonometric form of `a_N^{-1/2} z^{-N/2} f(z)` at
    /// `z = e^{ix}`, with `a_N^{-1/2}` taken on the principal branch and then
    /// multiplied by `branch`.
    pub fn to_trigonometric(&self, branch: Branch) -> TrigPoly {
        let n = self.degree();
        // Principal half-angle with arg(a_N) in (-pi, pi]; a signed zero in the
        // imaginary part must not flip the branch.
        let a_n = self.constant();
        let phi = if a_n.im == 0.0 && a_n.re < 0.0 { PI } else { a_n.arg() };
        let scale = Complex64::from_polar(branch.sign(), -phi / 2.0);
        let half = n / 2;
        let mut c = Vec::with_capacity(half + 1);
        let mut d = Vec::with_capacity(half + 1);
        for k in 0..=half {
            let a_k = if k == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                self.coeffs[k - 1]
            };
            let b = scale * a_k;
            if 2 * k == n {
                // Middle term: b is real up to rounding.
                c.push(b.re);
                d.push(0.0);
            } else {
                c.push(2.0 * b.re);
                d.push(-2.0 * b.im);
            }
        }
        TrigPoly {
            degree: n,
            c,
            d,
            branch,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    degree: usize,
    coeffs: Vec<[f64; 2]>,
    is_real: bool,
}

impl Serialize for SelfReciprocalPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            degree: self.degree(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            is_real: self.is_real,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SelfReciprocalPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = PolyRepr::deserialize(deserializer)?;
        if repr.coeffs.len() != repr.degree {
            return Err(D::Error::custom(format!(
                "degree {} but {} coefficients",
                repr.degree,
                repr.coeffs.len()
            )));
        }
        let coeffs: Vec<Complex64> = repr.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        SelfReciprocalPoly::from_coefficients(&coeffs, DEGREE_TOLERANCE * repr.degree.max(1) as f64)
            .map_err(D::Error::custom)
    }
}

/// Sign applied to the principal value of `a_N^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// `sum_{0<=n<=N/2} c_n cos((N/2 - n) x) + d_n sin((N/2 - n) x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub degree: usize,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub branch: Branch,
}

impl TrigPoly {
    pub fn eval(&self, x: f64) -> f64 {
        let half = self.degree as f64 / 2.0;
        self.c
            .iter()
            .zip(&self.d)
            .enumerate()
            .map(|(n, (&c, &d))| {
                let freq = (half - n as f64) * x;
                c * freq.cos() + d * freq.sin()
            })
            .sum()
    }
}

/// An off-circle pair `{rho e^{i theta}, e^{i theta} / rho}` with `rho > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffPair {
    pub rho: f64,
    pub theta: f64,
}

impl OffPair {
    pub fn outer(&self) -> Complex64 {
        Complex64::from_polar(self.rho, self.theta)
    }

    pub fn inner(&self) -> Complex64 {
        Complex64::from_polar(1.0 / self.rho, self.theta)
    }
}

/// The zeros of a self-reciprocal polynomial split into on-circle angles and
/// reflected off-circle pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroConfiguration {
    on_circle: Vec<f64>,
    off_pairs: Vec<OffPair>,
    tolerance_used: f64,
}

impl ZeroConfiguration {
    /// Angles are wrapped into `[0, 2pi)` and sorted; a pair given with
    /// `rho < 1` is replaced by its reflected partner.
    pub fn new(on_circle: Vec<f64>, off_pairs: Vec<OffPair>, tolerance_used: f64) -> Result<Self> {
        let mut on_circle: Vec<f64> = on_circle.into_iter().map(wrap_angle).collect();
        if on_circle.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfiguration("non-finite angle".into()));
        }
        on_circle.sort_by(f64::total_cmp);
        let mut pairs = Vec::with_capacity(off_pairs.len());
        for p in off_pairs {
            if !(p.rho.is_finite() && p.rho > 0.0 && p.theta.is_finite()) {
                return Err(Error::InvalidConfiguration(format!(
                    "bad off-circle pair rho={}, theta={}",
                    p.rho, p.theta
                )));
            }
            if p.rho == 1.0 {
                return Err(Error::InvalidConfiguration("off-circle pair with rho = 1".into()));
            }
            let rho = if p.rho < 1.0 { 1.0 / p.rho } else { p.rho };
            pairs.push(OffPair {
                rho,
                theta: wrap_angle(p.theta),
            });
        }
        if on_circle.is_empty() && pairs.is_empty() {
            return Err(Error::InvalidConfiguration("no zeros".into()));
        }
        Ok(Self {
            on_circle,
            off_pairs: pairs,
            tolerance_used,
        })
    }

    /// All zeros on the circle.
    pub fn on_circle(angles: Vec<f64>) -> Result<Self> {
        Self::new(angles, Vec::new(), 0.0)
    }

    pub fn angles(&self) -> &[f64] {
        &self.on_circle
    }

    pub fn off_pairs(&self) -> &[OffPair] {
        &self.off_pairs
    }

    pub fn tolerance_used(&self) -> f64 {
        self.tolerance_used
    }

    /// `N = L + 2M`.
    pub fn degree(&self) -> usize {
        self.on_circle.len() + 2 * self.off_pairs.len()
    }

    /// Roots ordered `beta_1, 1/conj(beta_1), ..., beta_M, 1/conj(beta_M), alpha_1, ..., alpha_L`.
    pub fn roots(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.degree());
        for p in &self.off_pairs {
            out.push(p.outer());
            out.push(p.inner());
        }
        out.extend(unit_points(&self.on_circle));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reals(xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| c(x, 0.0)).collect()
    }

    #[test]
    fn elementary_symmetric_examples() {
        assert_eq!(elementary_symmetric(1, &reals(&[2.0, 3.0])), c(5.0, 0.0));
        assert_eq!(elementary_symmetric(2, &reals(&[1.0, 2.0, 3.0])), c(11.0, 0.0));
        assert_eq!(elementary_symmetric(0, &reals(&[7.0, -1.0])), c(1.0, 0.0));
        assert_eq!(elementary_symmetric(0, &[]), c(1.0, 0.0));
        assert_eq!(elementary_symmetric(4, &reals(&[1.0, 2.0, 3.0])), c(0.0, 0.0));
        assert_eq!(
            elementary_symmetric_all(&reals(&[1.0, 2.0, 3.0])),
            reals(&[1.0, 6.0, 11.0, 6.0])
        );
    }

    #[test]
    fn vandermonde_examples() {
        assert_eq!(vandermonde_abs(&[Complex64::from_polar(1.0, 0.3)]), 1.0);
        assert_eq!(vandermonde_abs(&[]), 1.0);
        assert_abs_diff_eq!(vandermonde_abs(&reals(&[1.0, -1.0])), 2.0, epsilon = 1e-15);
        let square = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        assert_abs_diff_eq!(vandermonde_abs(&square), 16.0, epsilon = 1e-13);
        assert_eq!(vandermonde_abs(&reals(&[1.0, 2.0, 1.0])), 0.0);
        assert_eq!(log_vandermonde_abs(&reals(&[1.0, 1.0])), f64::NEG_INFINITY);
    }

    #[test]
    fn from_coefficients_examples() {
        let p = SelfReciprocalPoly::from_coefficients(&[c(-1.0, 0.0)], 1e-12).unwrap();
        assert_eq!(p.degree(), 1);
        assert!(p.is_real());
        assert_eq!(p.eval(c(1.0, 0.0)), c(0.0, 0.0));

        let p = SelfReciprocalPoly::from_coefficients(&[c(0.0, 0.0), c(1.0, 0.0)], 1e-12).unwrap();
        assert_eq!(p.monic_coeffs(), reals(&[1.0, 0.0, 1.0]));

        let err = SelfReciprocalPoly::from_coefficients(&[c(1.0, 0.0), c(-1.0, 0.0)], 1e-12).unwrap_err();
        match err {
            Error::SymmetryViolation { index, deviation, .. } => {
                assert_eq!(index, 1);
                assert_abs_diff_eq!(deviation, 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }

        let err = SelfReciprocalPoly::from_coefficients(&[c(0.5, 0.0)], 1e-12).unwrap_err();
        assert!(matches!(err, Error::UnitModulusViolation { .. }));
        assert_eq!(
            SelfReciprocalPoly::from_coefficients(&[], 1e-12).unwrap_err(),
            Error::EmptyCoefficients
        );
    }

    #[test]
    fn complex_flag_and_zeroing() {
        // z^2 + (1+i) z + i: a_2 = i, a_1 = 1 + i, a_2 conj(a_1) = i (1 - i) = 1 + i.
        let p = SelfReciprocalPoly::from_coefficients(&[c(1.0, 1.0), c(0.0, 1.0)], 1e-12).unwrap();
        assert!(!p.is_real());
        let q = SelfReciprocalPoly::from_coefficients(&[c(2.0, 1e-14), c(1.0, -1e-14)], 1e-12).unwrap();
        assert!(q.is_real());
        assert!(q.coeffs().iter().all(|a| a.im == 0.0));
    }

    #[test]
    fn from_roots_examples() {
        let zc = ZeroConfiguration::on_circle(vec![0.0, PI]).unwrap();
        let p = SelfReciprocalPoly::from_roots(&zc).unwrap();
        assert_abs_diff_eq!(p.coeffs()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeffs()[1].re, -1.0, epsilon = 1e-15);

        let zc = ZeroConfiguration::on_circle(vec![FRAC_PI_2, 3.0 * FRAC_PI_2]).unwrap();
        let p = SelfReciprocalPoly::from_roots(&zc).unwrap();
        assert_abs_diff_eq!(p.coeffs()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeffs()[1].re, 1.0, epsilon = 1e-15);

        let zc = ZeroConfiguration::new(vec![], vec![OffPair { rho: 2.0, theta: 0.0 }], 0.0).unwrap();
        let p = SelfReciprocalPoly::from_roots(&zc).unwrap();
        assert!(p.is_real());
        assert_abs_diff_eq!(p.coeffs()[0].re, -2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeffs()[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pair_canonicalisation() {
        let zc = ZeroConfiguration::new(vec![], vec![OffPair { rho: 0.5, theta: -1.0 }], 0.0).unwrap();
        assert_eq!(zc.off_pairs()[0].rho, 2.0);
        assert_abs_diff_eq!(zc.off_pairs()[0].theta, TAU - 1.0, epsilon = 1e-15);
        assert!(ZeroConfiguration::new(vec![], vec![OffPair { rho: 1.0, theta: 0.0 }], 0.0).is_err());
        assert!(ZeroConfiguration::new(vec![], vec![], 0.0).is_err());
    }

    #[test]
    fn trigonometric_examples() {
        // z^2 + 1 -> 2 cos x
        let p = SelfReciprocalPoly::from_coefficients(&[c(0.0, 0.0), c(1.0, 0.0)], 1e-12).unwrap();
        let t = p.to_trigonometric(Branch::Plus);
        assert_eq!(t.c, vec![2.0, 0.0]);
        assert_eq!(t.d, vec![0.0, 0.0]);

        // z^2 - 1 -> 2 sin x with a_N^{-1/2} = -i
        let p = SelfReciprocalPoly::from_coefficients(&[c(0.0, 0.0), c(-1.0, 0.0)], 1e-12).unwrap();
        let t = p.to_trigonometric(Branch::Plus);
        for x in [0.1, 0.7, 2.0, 4.5] {
            assert_abs_diff_eq!(t.eval(x), 2.0 * x.sin(), epsilon = 1e-14);
        }
        let t = p.to_trigonometric(Branch::Minus);
        assert_abs_diff_eq!(t.eval(0.7), -2.0 * 0.7f64.sin(), epsilon = 1e-14);

        // z - 1 -> 2 sin(x/2)
        let p = SelfReciprocalPoly::from_coefficients(&[c(-1.0, 0.0)], 1e-12).unwrap();
        let t = p.to_trigonometric(Branch::Plus);
        for x in [0.1, 0.7, 2.0, 4.5] {
            assert_abs_diff_eq!(t.eval(x), 2.0 * (x / 2.0).sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn json_shape() {
        let p = SelfReciprocalPoly::from_coefficients(&[c(1.0, 1.0), c(0.0, 1.0)], 1e-12).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"degree": 2, "coeffs": [[1.0, 1.0], [0.0, 1.0]], "is_real": false})
        );
        let back: SelfReciprocalPoly = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
        let bad = serde_json::json!({"degree": 2, "coeffs": [[1.0, 0.0], [-1.0, 0.0]], "is_real": true});
        assert!(serde_json::from_value::<SelfReciprocalPoly>(bad).is_err());
    }

    fn complex_strategy() -> impl Strategy<Value = Complex64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| c(re, im))
    }

    fn config_strategy() -> impl Strategy<Value = ZeroConfiguration> {
        (
            prop::collection::vec(0.0..TAU, 0..6),
            prop::collection::vec((1.05..3.0f64, 0.0..TAU), 0..3),
        )
            .prop_filter("nonempty", |(a, p)| !a.is_empty() || !p.is_empty())
            .prop_map(|(angles, pairs)| {
                let pairs = pairs.into_iter().map(|(rho, theta)| OffPair { rho, theta }).collect();
                ZeroConfiguration::new(angles, pairs, 0.0).unwrap()
            })
    }

    proptest! {
        #[test]
        fn pascal_recurrence(xs in prop::collection::vec(complex_strategy(), 0..8),
                             y in complex_strategy(), n in 1usize..9) {
            let mut ext = xs.clone();
            ext.push(y);
            let lhs = elementary_symmetric(n, &ext);
            let rhs = elementary_symmetric(n, &xs) + y * elementary_symmetric(n - 1, &xs);
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }

        #[test]
        fn vandermonde_permutation_invariant(xs in prop::collection::vec(complex_strategy(), 0..7),
                                             seed in any::<u64>()) {
            let mut ys = xs.clone();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..ys.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ys.swap(i, (s >> 33) as usize % (i + 1));
            }
            let a = vandermonde_abs(&xs);
            let b = vandermonde_abs(&ys);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            if xs.len() >= 2 {
                let mut dup = xs.clone();
                dup.push(xs[0]);
                prop_assert_eq!(vandermonde_abs(&dup), 0.0);
            }
        }

        #[test]
        fn from_roots_is_self_reciprocal(zc in config_strategy()) {
            let p = SelfReciprocalPoly::from_roots(&zc).unwrap();
            prop_assert_eq!(p.degree(), zc.degree());
            // Re-validate at the tight tolerance scaled by coefficient size.
            let scale = p.coeffs().iter().map(|a| a.norm()).fold(1.0, f64::max);
            prop_assert!(SelfReciprocalPoly::from_coefficients(p.coeffs(), 1e-12 * scale).is_ok());
            for r in zc.roots() {
                prop_assert!(p.eval(r).norm() <= 1e-9 * scale * r.norm().max(1.0).powi(p.degree() as i32));
            }
        }

        #[test]
        fn trig_form_matches_definition(zc in config_strategy(), x in 0.0..TAU) {
            let p = SelfReciprocalPoly::from_roots(&zc).unwrap();
            let n = p.degree() as f64;
            let t = p.to_trigonometric(Branch::Plus);
            let a_n = p.constant();
            let z = Complex64::from_polar(1.0, x);
            let phi = if a_n.im == 0.0 && a_n.re < 0.0 { PI } else { a_n.arg() };
            let direct = Complex64::from_polar(1.0, -phi / 2.0)
                * Complex64::from_polar(1.0, -n * x / 2.0)
                * p.eval(z);
            let scale = p.coeffs().iter().map(|a| a.norm()).fold(1.0, f64::max);
            prop_assert!(direct.im.abs() <= 1e-10 * scale);
            prop_assert!((t.eval(x) - direct.re).abs() <= 1e-10 * scale);
        }

        #[test]
        fn real_polys_have_even_trig_form(angles in prop::collection::vec(0.05..3.09f64, 1..5)) {
            // conjugate pairs give a_N = 1
            let mut all = angles.clone();
            all.extend(angles.iter().map(|a| TAU - a));
            let zc = ZeroConfiguration::on_circle(all).unwrap();
            let p = SelfReciprocalPoly::from_roots(&zc).unwrap();
            prop_assert!(p.is_real());
            let t = p.to_trigonometric(Branch::Plus);
            prop_assert!(t.d.iter().all(|&d| d.abs() <= 1e-12));
        }
    }
}
