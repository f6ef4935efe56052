//! Experiment configuration files. A config is resolved once (seeds filled
//! in, flag overrides applied) and the resolved form is what the manifest
//! records, so replaying it needs no flags.

use std::path::{Path, PathBuf};

use circlezeros::epstein::QuadraticForm;
use circlezeros::rng::derive_seed;
use circlezeros::samplers::{EnsembleSpec, McmcConfig, Model};
use circlezeros::stats::TestKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// On-circle tolerance for every source that does not set its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    Sample(SampleConfig),
    JacobianCheck(JacobianConfig),
    Spacings(SpacingsConfig),
    Fraction(FractionConfig),
    Dunnage(DunnageConfig),
    EpsteinEval(EpsteinEvalConfig),
    EpsteinZeros(EpsteinZerosConfig),
    Compare(CompareConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sample(_) => "sample",
            Self::JacobianCheck(_) => "jacobian-check",
            Self::Spacings(_) => "spacings",
            Self::Fraction(_) => "fraction",
            Self::Dunnage(_) => "dunnage",
            Self::EpsteinEval(_) => "epstein-eval",
            Self::EpsteinZeros(_) => "epstein-zeros",
            Self::Compare(_) => "compare",
        }
    }
}

fn default_max_attempts() -> u64 {
    1_000_000_000
}

/// One ensemble to draw from. `seed` defaults to a value derived from the run
/// seed and the source's position in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub model: Model,
    pub n: usize,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u64,
}

impl SourceConfig {
    /// Spec after resolution; the seed must already be set.
    pub fn spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            model: self.model,
            n: self.n,
            epsilon: self.epsilon,
            seed: self.seed.unwrap_or_default(),
            tolerance: self.tolerance,
            mcmc: self.mcmc,
        }
    }

    fn resolve(&mut self, master: u64, index: u64, tolerance: Option<f64>) {
        self.seed.get_or_insert(derive_seed(master, index));
        if self.tolerance.is_none() {
            self.tolerance = tolerance;
        }
        if let (Model::Mcmc(_), None) = (self.model, self.mcmc) {
            self.mcmc = Some(McmcConfig::default());
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(CliError::ConfigInvalid("source count must be positive".into()));
        }
        self.spec()
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub source: SourceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianFamily {
    Complex,
    Real,
}

fn default_trials() -> usize {
    100
}
fn default_step() -> f64 {
    1e-5
}
fn default_separation() -> f64 {
    0.05
}

/// Closed-form Jacobians against the finite-difference oracle. For the
/// complex family `n` is the degree and trials cycle through every number of
/// off-circle pairs; for the real family `n` is the number of angles and
/// trials alternate parity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianConfig {
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_family")]
    pub family: JacobianFamily,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_separation")]
    pub separation: f64,
}

fn default_family() -> JacobianFamily {
    JacobianFamily::Complex
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R2Config {
    #[serde(default)]
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    /// Range of `delta` used for the log-log slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_range: Option<(f64, f64)>,
}

impl R2Config {
    pub fn edges(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.bins as f64;
        (0..=self.bins).map(|i| self.lo + i as f64 * w).collect()
    }
}

fn default_bins() -> usize {
    30
}
fn default_bin_width() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingsConfig {
    pub source: SourceConfig,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<R2Config>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionConfig {
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DunnageConfig {
    pub n: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsteinValue {
    /// `L_Q(s)`.
    Zeta,
    /// `Lambda(s) = A^s Gamma(s) L_Q(s)`.
    Completed,
}

fn default_value() -> EpsteinValue {
    EpsteinValue::Zeta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsteinEvalConfig {
    pub form: QuadraticForm,
    /// Points `[Re s, Im s]`.
    pub s: Vec<[f64; 2]>,
    #[serde(default = "default_value")]
    pub value: EpsteinValue,
}

/// Forms drawn with `a, b, c` uniform in the box, keeping `b^2 < 4ac`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBox {
    pub count: usize,
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub c: (f64, f64),
}

fn default_step_t() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsteinZerosConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forms: Vec<QuadraticForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_forms: Option<FormBox>,
    #[serde(default)]
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "default_step_t")]
    pub step: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CompareInput {
    /// Angle sets (`.jsonl`) or gap values (`.csv`).
    File {
        file: PathBuf,
    },
    Source {
        source: SourceConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub a: CompareInput,
    pub b: CompareInput,
    #[serde(default = "default_test")]
    pub test: TestKind,
}

fn default_test() -> TestKind {
    TestKind::Ks
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub alpha: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    /// Apply overrides, fill in derived seeds and validate.
    pub fn resolve(mut self, overrides: Overrides) -> Result<Self> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(t) = overrides.tolerance {
            self.tolerance = Some(t);
        }
        if let Some(a) = overrides.alpha {
            self.alpha = a;
        }
        let (master, tol) = (self.seed, self.tolerance);
        match &mut self.experiment {
            Experiment::Sample(c) => c.source.resolve(master, 0, tol),
            Experiment::Spacings(c) => c.source.resolve(master, 0, tol),
            Experiment::Compare(c) => {
                for (i, input) in [&mut c.a, &mut c.b].into_iter().enumerate() {
                    if let CompareInput::Source { source } = input {
                        source.resolve(master, i as u64, tol);
                    }
                }
            }
            _ => {}
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::ConfigInvalid(m.into()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return bad("tolerance must be positive");
            }
        }
        match &self.experiment {
            Experiment::Sample(c) => c.source.validate(),
            Experiment::Spacings(c) => {
                c.source.validate()?;
                if matches!(c.source.model, Model::GaussianSr) {
                    return bad("spacings need an angle-producing model");
                }
                if c.bins == 0 || !(c.bin_width > 0.0) {
                    return bad("histogram needs bins > 0 and bin_width > 0");
                }
                if let Some(r2) = &c.r2 {
                    if r2.bins == 0 || !(r2.hi > r2.lo) || r2.lo < 0.0 {
                        return bad("r2 needs 0 <= lo < hi and bins > 0");
                    }
                }
                Ok(())
            }
            Experiment::JacobianCheck(c) => {
                if c.n == 0 || c.trials == 0 || !(c.step > 0.0) {
                    return bad("jacobian-check needs n > 0, trials > 0, step > 0");
                }
                Ok(())
            }
            Experiment::Fraction(c) => {
                if c.n == 0 || c.samples == 0 || c.epsilons.is_empty() {
                    return bad("fraction needs n > 0, samples > 0 and at least one epsilon");
                }
                if c.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                    return bad("epsilons must be positive");
                }
                Ok(())
            }
            Experiment::Dunnage(c) => {
                if c.n == 0 || c.samples == 0 {
                    return bad("dunnage needs n > 0 and samples > 0");
                }
                Ok(())
            }
            Experiment::EpsteinEval(c) => {
                c.form.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
                if c.s.is_empty() {
                    return bad("epstein-eval needs at least one s");
                }
                Ok(())
            }
            Experiment::EpsteinZeros(c) => {
                for f in &c.forms {
                    f.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
                }
                match (&c.random_forms, c.forms.is_empty()) {
                    (None, true) => return bad("epstein-zeros needs forms or random_forms"),
                    (Some(b), _) => {
                        if b.count == 0
                            || !(b.a.0 > 0.0 && b.a.1 > b.a.0)
                            || !(b.b.1 >= b.b.0)
                            || !(b.c.1 > b.c.0 && b.c.0 > 0.0)
                        {
                            return bad("random_forms needs count > 0, 0 < a_lo < a_hi, b_lo <= b_hi, 0 < c_lo < c_hi");
                        }
                        let min_b = if b.b.0 <= 0.0 && b.b.1 >= 0.0 {
                            0.0
                        } else {
                            b.b.0.abs().min(b.b.1.abs())
                        };
                        if min_b * min_b >= 4.0 * b.a.1 * b.c.1 {
                            return bad("random_forms box contains no positive-definite form");
                        }
                    }
                    _ => {}
                }
                if !(c.t_max > c.t_min && c.t_min >= 0.0 && c.step > 0.0) {
                    return bad("epstein-zeros needs 0 <= t_min < t_max and step > 0");
                }
                Ok(())
            }
            Experiment::Compare(c) => {
                for input in [&c.a, &c.b] {
                    if let CompareInput::Source { source } = input {
                        source.validate()?;
                    }
                }
                if let TestKind::ChiSquare { bins } = c.test {
                    if bins < 2 {
                        return bad("chi-square needs at least 2 bins");
                    }
                }
                Ok(())
            }
        }
    }
}
