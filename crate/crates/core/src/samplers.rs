//! Samplers for every ensemble: uniform-disk rejection onto polynomials with
//! all zeros on the circle, Gaussian self-reciprocal coefficients, Haar
//! matrix ensembles and Metropolis sampling of the closed-form densities.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{linalg::Schur, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{log_density, DensityKind};
use crate::poly::{wrap_angle, SelfReciprocalPoly};
use crate::rng::{derive_stream_seed, rng_from_seed};
use crate::roots::{circle_classify, default_tolerance, find_roots};

/// Which random model generates the angles or polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Model {
    UniformDiskComplex,
    UniformDiskReal,
    GaussianSr,
    MatrixCoe,
    MatrixCue,
    Mcmc(DensityKind),
}

/// Metropolis settings. `thin` defaults to `10 N` when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub thin: Option<usize>,
    pub proposal_scale: f64,
    pub chains: usize,
    /// Tune the proposal scale during burn-in towards 30% acceptance.
    pub adapt: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            thin: None,
            proposal_scale: 0.3,
            chains: 8,
            adapt: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub model: Model,
    /// Polynomial degree, or the angle count for matrix and MCMC models.
    pub n: usize,
    /// Gaussian model only: `sigma = epsilon / sqrt(N)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub seed: u64,
    /// On-circle tolerance; `1e-8 N` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
}

impl EnsembleSpec {
    pub fn new(model: Model, n: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            epsilon: None,
            seed,
            tolerance: None,
            mcmc: None,
        }
    }

    pub fn gaussian(n: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon: Some(epsilon),
            ..Self::new(Model::GaussianSr, n, seed)
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| default_tolerance(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("degree must be positive".into()));
        }
        match (self.model, self.epsilon) {
            (Model::GaussianSr, Some(e)) if e > 0.0 && e.is_finite() => {}
            (Model::GaussianSr, _) => return Err(Error::InvalidSpec("GAUSSIAN_SR needs epsilon > 0".into())),
            (_, Some(_)) => return Err(Error::InvalidSpec("epsilon is only meaningful for GAUSSIAN_SR".into())),
            _ => {}
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidSpec(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Model::Mcmc(kind) = self.model {
            kind.validate().map_err(|e| Error::InvalidSpec(e.to_string()))?;
            if kind.arity() != self.n {
                return Err(Error::InvalidSpec(format!(
                    "MCMC target {kind:?} has {} angles but n = {}",
                    kind.arity(),
                    self.n
                )));
            }
            let cfg = self.mcmc.unwrap_or_default();
            if !(cfg.proposal_scale > 0.0) || cfg.chains == 0 {
                return Err(Error::InvalidSpec(
                    "MCMC needs proposal_scale > 0 and at least one chain".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Where the angles of a batch live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleDomain {
    /// `N` angles in `[0, 2pi)`.
    Circle,
    /// One angle `t` in `(0, pi)` per conjugate pair `e^{+-it}`.
    UpperHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub spec: EnsembleSpec,
    pub domain: AngleDomain,
    /// Sorted angle tuples.
    pub angle_sets: Vec<Vec<f64>>,
    pub accepted: usize,
    pub attempted: u64,
    /// Derived seed of each accepted item (per chain for MCMC).
    pub seed_chain: Vec<u64>,
    /// Post-burn-in Metropolis acceptance rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub move_acceptance: Option<f64>,
}

impl SampleBatch {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempted as f64
        }
    }

    /// Angle count per set.
    pub fn arity(&self) -> usize {
        match (self.spec.model, self.domain) {
            (Model::Mcmc(kind), _) => kind.arity(),
            (_, AngleDomain::Circle) => self.spec.n,
            (_, AngleDomain::UpperHalf) => self.spec.n / 2,
        }
    }
}

/// Failure of a sampler, carrying whatever was produced before it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleError {
    pub error: Error,
    pub partial: Option<SampleBatch>,
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for SampleError {}

impl From<Error> for SampleError {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

impl From<SampleError> for Error {
    fn from(e: SampleError) -> Self {
        e.error
    }
}

/// `binom(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn uniform_disk<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random_range(0.0..TAU))
}

/// Coefficients `a_1..a_N` of one uniform-disk draw.
fn uniform_disk_coefficients<R: Rng>(rng: &mut R, n: usize, real: bool) -> Vec<Complex64> {
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    if real {
        a[n - 1] = Complex64::new(1.0, 0.0);
        for k in 1..=n / 2 {
            let b = binomial(n, k);
            let v = Complex64::new(rng.random_range(-b..=b), 0.0);
            a[k - 1] = v;
            a[n - k - 1] = v;
        }
        return a;
    }
    if n % 2 == 1 {
        for k in 1..=(n - 1) / 2 {
            a[k - 1] = uniform_disk(rng, binomial(n, k));
        }
        let phi = rng.random_range(0.0..TAU);
        a[n - 1] = Complex64::from_polar(1.0, phi);
    } else {
        for k in 1..=n / 2 {
            a[k - 1] = uniform_disk(rng, binomial(n, k));
        }
        // a_{N/2} = a_N conj(a_{N/2}) fixes a_N.
        let mid = a[n / 2 - 1];
        a[n - 1] = mid / mid.conj();
    }
    let a_n = a[n - 1];
    for k in 1..n.div_ceil(2) {
        a[n - k - 1] = a_n * a[k - 1].conj();
    }
    a
}

/// Upper-half angles of a real polynomial's zeros, dropping the forced zero at
/// `-1` for odd degree. `None` if the conjugate structure is not clean.
fn upper_half_angles(mut angles: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    if n % 2 == 1 {
        let idx = angles
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - PI).abs().total_cmp(&(b.1 - PI).abs()))?
            .0;
        angles.remove(idx);
    }
    let mut t: Vec<f64> = angles.into_iter().filter(|&a| a > 0.0 && a < PI).collect();
    if t.len() != n / 2 {
        return None;
    }
    t.sort_by(f64::total_cmp);
    Some(t)
}

/// One rejection attempt: the sorted angles if every zero is on the circle.
fn rejection_attempt(spec: &EnsembleSpec, seed: u64) -> Option<Vec<f64>> {
    let real = spec.model == Model::UniformDiskReal;
    let mut rng = rng_from_seed(seed);
    let a = uniform_disk_coefficients(&mut rng, spec.n, real);
    // Sampled coefficients satisfy the symmetry exactly by construction.
    let p = SelfReciprocalPoly::from_coefficients(&a, 1e-9 * binomial(spec.n, spec.n / 2)).ok()?;
    let report = find_roots(&p).ok()?;
    let zc = circle_classify(&report, spec.tolerance()).ok()?;
    if !zc.off_pairs().is_empty() {
        return None;
    }
    let angles = zc.angles().to_vec();
    if real {
        upper_half_angles(angles, spec.n)
    } else {
        Some(angles)
    }
}

const REJECTION_CHUNK: u64 = 8_192;
const STREAM_REJECTION: u64 = 1;
const STREAM_GAUSSIAN: u64 = 2;
const STREAM_MATRIX: u64 = 3;
const STREAM_MCMC: u64 = 4;

/// Uniform-disk coefficients restricted to polynomials with every zero on the
/// unit circle, by exact rejection.
///
/// Attempt `k` uses the seed derived from `(spec.seed, k)`; attempts run in
/// parallel chunks but are accepted in index order, so the batch does not
/// depend on the number of workers. `max_attempts` bounds the total number of
/// attempts.
pub fn sample_cn_rejection(
    spec: &EnsembleSpec,
    count: usize,
    max_attempts: u64,
) -> std::result::Result<SampleBatch, SampleError> {
    spec.validate()?;
    let domain = match spec.model {
        Model::UniformDiskComplex => AngleDomain::Circle,
        Model::UniformDiskReal => AngleDomain::UpperHalf,
        other => {
            return Err(
                Error::InvalidSpec(format!("rejection sampling needs a uniform-disk model, got {other:?}")).into(),
            )
        }
    };
    if domain == AngleDomain::UpperHalf && spec.n < 2 {
        return Err(Error::InvalidSpec("real model needs degree at least 2".into()).into());
    }
    let mut batch = SampleBatch {
        spec: spec.clone(),
        domain,
        angle_sets: Vec::with_capacity(count),
        accepted: 0,
        attempted: 0,
        seed_chain: Vec::with_capacity(count),
        move_acceptance: None,
    };
    let mut next = 0u64;
    while batch.accepted < count && next < max_attempts {
        let end = (next + REJECTION_CHUNK).min(max_attempts);
        let results: Vec<(u64, u64, Option<Vec<f64>>)> = (next..end)
            .into_par_iter()
            .map(|k| {
                let seed = derive_stream_seed(spec.seed, STREAM_REJECTION, k);
                (k, seed, rejection_attempt(spec, seed))
            })
            .collect();
        for (k, seed, angles) in results {
            if let Some(angles) = angles {
                batch.angle_sets.push(angles);
                batch.seed_chain.push(seed);
                batch.accepted += 1;
                if batch.accepted == count {
                    batch.attempted = k + 1;
                    return Ok(batch);
                }
            }
        }
        next = end;
    }
    batch.attempted = next;
    if batch.accepted == count {
        return Ok(batch);
    }
    Err(SampleError {
        error: Error::AttemptBudgetExhausted {
            accepted: batch.accepted,
            requested: count,
            attempted: batch.attempted,
        },
        partial: Some(batch),
    })
}

/// Self-reciprocal polynomials with `a_N = 1` and complex normal `a_j`,
/// `E|a_j|^2 = sigma^2`, `sigma = epsilon / sqrt(N)`, for `j < N/2`. The middle
/// coefficient of even degree is forced real and drawn as `N(0, sigma^2)`.
pub fn sample_gaussian_sr(spec: &EnsembleSpec, count: usize) -> Result<Vec<SelfReciprocalPoly>> {
    spec.validate()?;
    if spec.model != Model::GaussianSr {
        return Err(Error::InvalidSpec(format!(
            "expected GAUSSIAN_SR, got {:?}",
            spec.model
        )));
    }
    let n = spec.n;
    let sigma = spec.epsilon.unwrap() / (n as f64).sqrt();
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_stream_seed(spec.seed, STREAM_GAUSSIAN, k));
            let coeffs = gaussian_coefficients(&mut rng, n, sigma);
            SelfReciprocalPoly::from_coefficients(&coeffs, 0.0)
        })
        .collect()
}

fn gaussian_coefficients<R: Rng>(rng: &mut R, n: usize, sigma: f64) -> Vec<Complex64> {
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    a[n - 1] = Complex64::new(1.0, 0.0);
    let s = sigma / std::f64::consts::SQRT_2;
    for j in 1..n.div_ceil(2) {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        a[j - 1] = Complex64::new(s * re, s * im);
        a[n - j - 1] = a[j - 1].conj();
    }
    if n % 2 == 0 {
        let x: f64 = StandardNormal.sample(rng);
        a[n / 2 - 1] = Complex64::new(sigma * x, 0.0);
    }
    a
}

/// Haar-distributed unitary matrix: QR of a complex Gaussian matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let z = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn unitary_eigenangles(m: DMatrix<Complex64>) -> Option<Vec<f64>> {
    let n = m.nrows();
    let (_, t) = Schur::try_new(m, f64::EPSILON, 10_000)?.unpack();
    let mut angles: Vec<f64> = (0..n).map(|i| wrap_angle(t[(i, i)].arg())).collect();
    angles.sort_by(f64::total_cmp);
    Some(angles)
}

/// Eigenangles of Haar unitaries (CUE) or of `U^T U` (COE).
pub fn sample_matrix_ensemble_angles(spec: &EnsembleSpec, count: usize) -> Result<SampleBatch> {
    spec.validate()?;
    let orthogonal = match spec.model {
        Model::MatrixCoe => true,
        Model::MatrixCue => false,
        other => {
            return Err(Error::InvalidSpec(format!(
                "expected MATRIX_COE or MATRIX_CUE, got {other:?}"
            )))
        }
    };
    let n = spec.n;
    let items: Vec<(u64, Vec<f64>)> = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let seed = derive_stream_seed(spec.seed, STREAM_MATRIX, k);
            let mut rng = rng_from_seed(seed);
            let u = haar_unitary(&mut rng, n);
            let m = if orthogonal { u.transpose() * &u } else { u };
            unitary_eigenangles(m)
                .map(|a| (seed, a))
                .ok_or(Error::EigensolveFailure { dim: n })
        })
        .collect::<Result<_>>()?;
    let (seed_chain, angle_sets) = items.into_iter().unzip();
    Ok(SampleBatch {
        spec: spec.clone(),
        domain: AngleDomain::Circle,
        angle_sets,
        accepted: count,
        attempted: count as u64,
        seed_chain,
        move_acceptance: None,
    })
}

fn reflect_half(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        TAU - y
    } else {
        y
    }
}

struct ChainOutput {
    samples: Vec<Vec<f64>>,
    accepted_moves: u64,
    proposed_moves: u64,
}

fn run_chain(kind: DensityKind, count: usize, cfg: &McmcConfig, thin: usize, seed: u64) -> ChainOutput {
    let dim = kind.arity();
    let half = kind.is_half_circle();
    let upper = if half { PI } else { TAU };
    let mut rng = rng_from_seed(seed);
    let density = |x: &[f64]| log_density(kind, x).unwrap_or(f64::NEG_INFINITY);

    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..upper)).collect();
    let mut lp = density(&x);
    while !lp.is_finite() {
        x = (0..dim).map(|_| rng.random_range(0.0..upper)).collect();
        lp = density(&x);
    }

    let mut scale = cfg.proposal_scale;
    let mut proposal = vec![0.0; dim];
    let mut step = |x: &mut Vec<f64>, lp: &mut f64, scale: f64, rng: &mut rand_chacha::ChaCha8Rng| -> bool {
        for (p, &xi) in proposal.iter_mut().zip(x.iter()) {
            let z: f64 = StandardNormal.sample(rng);
            let y = xi + scale * z;
            *p = if half { reflect_half(y) } else { y.rem_euclid(TAU) };
        }
        let lq = density(&proposal);
        let u: f64 = rng.random();
        if lq.is_finite() && (lq - *lp >= 0.0 || u.ln() < lq - *lp) {
            x.copy_from_slice(&proposal);
            *lp = lq;
            true
        } else {
            false
        }
    };

    let window = 200;
    let mut window_acc = 0;
    for i in 0..cfg.burn_in {
        if step(&mut x, &mut lp, scale, &mut rng) {
            window_acc += 1;
        }
        if cfg.adapt && (i + 1) % window == 0 {
            let rate = window_acc as f64 / window as f64;
            scale *= ((rate - 0.3) * 2.0).exp();
            scale = scale.clamp(1e-4, upper);
            window_acc = 0;
        }
    }

    let mut samples = Vec::with_capacity(count);
    let mut accepted_moves = 0;
    let mut proposed_moves = 0;
    while samples.len() < count {
        for _ in 0..thin {
            proposed_moves += 1;
            if step(&mut x, &mut lp, scale, &mut rng) {
                accepted_moves += 1;
            }
        }
        let mut s = x.clone();
        s.sort_by(f64::total_cmp);
        samples.push(s);
    }
    ChainOutput {
        samples,
        accepted_moves,
        proposed_moves,
    }
}

/// Metropolis random walk targeting `exp(log_density(kind, .))`.
///
/// Circular kinds move on the torus; the real kinds move on `(0, pi)^M` with
/// reflecting walls. Every coordinate is updated in each step. `count`
/// samples are split over `cfg.chains` independent chains, which run in
/// parallel and are concatenated in chain order.
pub fn mcmc_sample(kind: DensityKind, count: usize, cfg: &McmcConfig, seed: u64) -> Result<SampleBatch> {
    kind.validate()?;
    if !(cfg.proposal_scale > 0.0) || cfg.chains == 0 {
        return Err(Error::InvalidArgument(
            "MCMC needs proposal_scale > 0 and at least one chain".into(),
        ));
    }
    let dim = kind.arity();
    let thin = cfg.thin.unwrap_or(10 * dim).max(1);
    let chains = cfg.chains;
    let per_chain = count.div_ceil(chains);
    let outputs: Vec<(u64, ChainOutput)> = (0..chains as u64)
        .into_par_iter()
        .map(|c| {
            let chain_seed = derive_stream_seed(seed, STREAM_MCMC, c);
            let want = per_chain.min(count.saturating_sub(c as usize * per_chain));
            (chain_seed, run_chain(kind, want, cfg, thin, chain_seed))
        })
        .collect();
    let mut angle_sets = Vec::with_capacity(count);
    let mut seed_chain = Vec::with_capacity(chains);
    let (mut acc, mut prop) = (0u64, 0u64);
    for (s, out) in outputs {
        angle_sets.extend(out.samples);
        seed_chain.push(s);
        acc += out.accepted_moves;
        prop += out.proposed_moves;
    }
    let mut spec = EnsembleSpec::new(Model::Mcmc(kind), dim, seed);
    spec.mcmc = Some(*cfg);
    let domain = if kind.is_half_circle() {
        AngleDomain::UpperHalf
    } else {
        AngleDomain::Circle
    };
    Ok(SampleBatch {
        spec,
        domain,
        accepted: angle_sets.len(),
        attempted: angle_sets.len() as u64,
        angle_sets,
        seed_chain,
        move_acceptance: Some(if prop == 0 { 0.0 } else { acc as f64 / prop as f64 }),
    })
}

/// Dispatch on `spec.model` for the samplers that produce angle sets.
pub fn sample_angles(
    spec: &EnsembleSpec,
    count: usize,
    max_attempts: u64,
) -> std::result::Result<SampleBatch, SampleError> {
    match spec.model {
        Model::UniformDiskComplex | Model::UniformDiskReal => sample_cn_rejection(spec, count, max_attempts),
        Model::MatrixCoe | Model::MatrixCue => Ok(sample_matrix_ensemble_angles(spec, count)?),
        Model::Mcmc(kind) => {
            spec.validate()?;
            let mut batch = mcmc_sample(kind, count, &spec.mcmc.unwrap_or_default(), spec.seed)?;
            batch.spec = spec.clone();
            Ok(batch)
        }
        Model::GaussianSr => Err(Error::InvalidSpec("GAUSSIAN_SR produces polynomials, not angle sets".into()).into()),
    }
}
