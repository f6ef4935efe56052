use std::f64::consts::PI;

use circlezeros::epstein::{
    default_rotation, epstein_completed, epstein_direct, epstein_zero_spacings, epstein_zeta, reduce_form,
    reduced_form, scan_critical_line, EpsteinSeries, QuadraticForm,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta by Euler-Maclaurin after `K = 60` explicit terms.
fn hurwitz(s: Complex64, a: f64) -> Complex64 {
    let k = 60;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..k {
        sum += (-s * (j as f64 + a).ln()).exp();
    }
    let x = k as f64 + a;
    let lx = x.ln();
    sum += ((1.0 - s) * lx).exp() / (s - 1.0) + 0.5 * (-s * lx).exp();
    let mut rising = s;
    let mut fact = 2.0;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let p = 2 * j as i32 + 2;
        sum += b / fact * rising * (-(s + (p - 1) as f64) * lx).exp();
        rising *= (s + (p - 1) as f64) * (s + p as f64);
        fact *= ((p + 1) * (p + 2)) as f64;
    }
    sum
}

/// `ln Gamma` by Stirling's series after shifting `Re z` past 15.
fn ln_gamma(mut z: Complex64) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let mut series = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln();
    let mut zp = z;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let k = 2.0 * (j + 1) as f64;
        series += b / (k * (k - 1.0)) / zp;
        zp *= z * z;
    }
    series - shift
}

/// `Lambda(s)` of `m^2 + n^2` from `pi^{-s} Gamma(s) 4 zeta(s) L(s, chi_4)`.
fn sum_of_two_squares_completed(s: Complex64) -> Complex64 {
    let zeta = hurwitz(s, 1.0);
    let l = (-s * 4f64.ln()).exp() * (hurwitz(s, 0.25) - hurwitz(s, 0.75));
    (ln_gamma(s) - s * PI.ln()).exp() * 4.0 * zeta * l
}

/// Catalan's constant by Cohen-Villegas-Zagier acceleration.
fn catalan() -> f64 {
    let n = 40;
    let mut d = (3.0 + 8f64.sqrt()).powi(n);
    d = (d + 1.0 / d) / 2.0;
    let (mut b, mut cc, mut s) = (-1.0, -d, 0.0);
    for k in 0..n {
        cc = b - cc;
        s += cc / ((2 * k + 1) as f64).powi(2);
        let (kf, nf) = (k as f64, n as f64);
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

fn random_reduced_form(rng: &mut ChaCha8Rng) -> QuadraticForm {
    let x: f64 = rng.random_range(-0.5..0.5);
    let y = rng.random_range((1.0 - x * x).sqrt()..2.5);
    let a = rng.random_range(0.5..2.0);
    QuadraticForm::new(a, 2.0 * a * x, a * (x * x + y * y)).unwrap()
}

#[test]
fn sum_of_two_squares_at_two() {
    let q = QuadraticForm::new(1.0, 0.0, 1.0).unwrap();
    let expected = 4.0 * PI * PI / 6.0 * catalan();
    let value = epstein_zeta(&q, c(2.0, 0.0)).unwrap();
    assert!((value.re - expected).abs() < 1e-12 * expected && value.im.abs() < 1e-14);

    let direct = epstein_direct(&q, c(2.0, 0.0), 400).unwrap();
    let gap = expected - direct.value.re;
    assert!(gap > 0.0 && gap <= direct.tail_bound);
}

#[test]
fn completed_matches_factorisation() {
    let q = QuadraticForm::new(1.0, 0.0, 1.0).unwrap();
    for s in [
        c(2.0, 0.0),
        c(0.5, 6.0),
        c(0.3, 14.0),
        c(0.8, -9.5),
        c(1.5, 25.0),
        c(-0.7, 3.0),
    ] {
        let got = epstein_completed(&q, s).unwrap();
        let want = sum_of_two_squares_completed(s);
        assert!((got - want).norm() < 1e-10 * want.norm(), "s={s}: {got} vs {want}");
    }
}

#[test]
fn completed_matches_direct_sum() {
    let q = QuadraticForm::new(1.3, 0.4, 2.1).unwrap();
    let s = c(2.5, 3.0);
    let direct = epstein_direct(&q, s, 300).unwrap();
    let value = epstein_zeta(&q, s).unwrap();
    assert!((value - direct.value).norm() <= direct.tail_bound + 1e-12);
}

#[test]
fn direct_sum_is_class_invariant() {
    let q = QuadraticForm::new(1.3, 0.4, 2.1).unwrap();
    // Q(m + n, n)
    let shifted = QuadraticForm::new(q.a, 2.0 * q.a + q.b, q.a + q.b + q.c).unwrap();
    let reduced = reduced_form(&shifted).unwrap();
    let s = c(3.0, 1.0);
    let a = epstein_direct(&q, s, 400).unwrap();
    let b = epstein_direct(&shifted, s, 400).unwrap();
    let r = epstein_direct(&reduced, s, 400).unwrap();
    assert!((a.value - b.value).norm() <= a.tail_bound + b.tail_bound);
    assert!((a.value - r.value).norm() <= a.tail_bound + r.tail_bound);
}

#[test]
fn scaling_the_form_scales_the_function() {
    let q = QuadraticForm::new(1.1, -0.3, 0.9).unwrap();
    let lambda = 2.7;
    let scaled = QuadraticForm::new(lambda * q.a, lambda * q.b, lambda * q.c).unwrap();
    for s in [c(2.0, 0.0), c(0.5, 10.0), c(0.2, -3.0)] {
        let a = epstein_zeta(&scaled, s).unwrap();
        let b = (-s * lambda.ln()).exp() * epstein_zeta(&q, s).unwrap();
        assert!((a - b).norm() < 1e-11 * b.norm());
    }
}

#[test]
fn functional_equation_on_random_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let q = random_reduced_form(&mut rng);
        let series = EpsteinSeries::with_height(&q, 30.0).unwrap();
        for _ in 0..20 {
            let s = c(rng.random_range(0.01..0.99), rng.random_range(-30.0..30.0));
            let left = series.completed(s).unwrap();
            // Split the other side along a different contour.
            let delta = 1.4 * default_rotation(1.0 - s);
            let right = series.completed_with_rotation(1.0 - s, delta).unwrap();
            assert!((left - right).norm() < 1e-8 * left.norm(), "{q:?} s={s}");
        }
    }
}

#[test]
fn lowest_zeros_match_factorisation() {
    let q = QuadraticForm::new(1.0, 0.0, 1.0).unwrap();
    let scan = scan_critical_line(&q, 1.0, 20.0, 0.01).unwrap();
    let oracle = |t: f64| (sum_of_two_squares_completed(c(0.5, t)) * (PI * t / 2.0).exp()).re;
    let mut expected = Vec::new();
    let mut t = 1.0;
    while t < 20.0 {
        let (mut lo, mut hi) = (t, t + 0.01);
        if (oracle(lo) > 0.0) != (oracle(hi) > 0.0) {
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if (oracle(mid) > 0.0) == (oracle(lo) > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            expected.push(0.5 * (lo + hi));
        }
        t += 0.01;
    }
    let found: Vec<f64> = scan.zeros.iter().map(|z| z.t).collect();
    assert_eq!(found.len(), expected.len(), "{found:?} vs {expected:?}");
    for (a, b) in found.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert!((found[0] - 6.020_948_904).abs() < 1e-6);
}

#[test]
fn equivalent_forms_share_zeros() {
    let forms = [
        QuadraticForm::new(1.0, 0.0, 1.0).unwrap(),
        QuadraticForm::new(1.0, 2.0, 2.0).unwrap(),
        QuadraticForm::new(2.0, 2.0, 1.0).unwrap(),
    ];
    let base = scan_critical_line(&forms[0], 0.0, 30.0, 0.02).unwrap();
    for q in &forms[1..] {
        let (z, _) = reduce_form(q).unwrap();
        assert!((z.x).abs() < 1e-14 && (z.y - 1.0).abs() < 1e-14);
        let other = scan_critical_line(q, 0.0, 30.0, 0.02).unwrap();
        assert_eq!(base.zeros.len(), other.zeros.len());
        for (a, b) in base.zeros.iter().zip(&other.zeros) {
            assert!((a.t - b.t).abs() < 1e-8);
        }
    }
}

#[test]
fn halving_the_step_keeps_every_zero() {
    let q = QuadraticForm::new(1.0, 0.37, 1.9).unwrap();
    let coarse = scan_critical_line(&q, 0.0, 40.0, 0.05).unwrap();
    let fine = scan_critical_line(&q, 0.0, 40.0, 0.025).unwrap();
    assert!(fine.zeros.len() >= coarse.zeros.len());
    for z in &coarse.zeros {
        assert!(fine.zeros.iter().any(|w| (w.t - z.t).abs() < 1e-8), "lost {}", z.t);
        assert!(z.refinement_width <= 1e-9);
    }
}

#[test]
fn generic_form_gaps() {
    let q = QuadraticForm::new(1.0, 0.61, 2.3).unwrap();
    let res = epstein_zero_spacings(&[q], (0.0, 50.0), 0.02).unwrap();
    let f = &res.per_form[0];
    assert!(f.raw_gaps.iter().all(|&g| g > 0.0));
    let span = f.zeros.last().unwrap() - f.zeros[0];
    assert!((f.raw_gaps.iter().sum::<f64>() - span).abs() < 1e-9);
    let mean = f.unfolded_gaps.iter().sum::<f64>() / f.unfolded_gaps.len() as f64;
    assert!((mean - 1.0).abs() < 1e-12);
    assert_eq!(res.pooled.len(), f.unfolded_gaps.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn reduction_lands_in_fundamental_domain(a in 0.1..5.0f64, b in -20.0..20.0f64, extra in 0.05..10.0f64) {
        let c = (b * b / (4.0 * a)) + extra;
        let q = QuadraticForm::new(a, b, c).unwrap();
        let (z, scale) = reduce_form(&q).unwrap();
        prop_assert!(z.x > -0.5 && z.x <= 0.5);
        prop_assert!(z.norm_sqr() >= 1.0 - 1e-12);
        prop_assert!((scale - (-q.discriminant()).sqrt() / 2.0).abs() < 1e-12 * scale);
        let r = reduced_form(&q).unwrap();
        prop_assert!((r.discriminant() - q.discriminant()).abs() < 1e-9 * q.discriminant().abs());
    }

    #[test]
    fn completed_is_real_on_critical_line(seed in any::<u64>(), t in 0.5..60.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_reduced_form(&mut rng);
        let lambda = epstein_completed(&q, c(0.5, t)).unwrap();
        prop_assert!(lambda.im.abs() <= 1e-10 * lambda.norm());
    }
}
