use std::path::PathBuf;

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("cannot parse {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Library {
        context: String,
        #[source]
        source: circlezeros::Error,
    },
    #[error("replay produced different bytes for {}", files.join(", "))]
    ReplayMismatch { files: Vec<String> },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn library(context: impl Into<String>, source: impl Into<circlezeros::Error>) -> Self {
        Self::Library {
            context: context.into(),
            source: source.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::ConfigInvalid(_) => "ConfigInvalid",
            Self::Format { .. } => "FormatError",
            Self::Io { .. } => "IoError",
            Self::Library { source, .. } => library_kind(source),
            Self::ReplayMismatch { .. } => "ReplayMismatch",
        }
    }

    /// Machine-readable record written to stderr on failure.
    pub fn record(&self) -> Value {
        let mut rec = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            Self::Library { context, .. } => rec["context"] = json!(context),
            Self::Format { path, .. } | Self::Io { path, .. } => rec["path"] = json!(path),
            Self::ReplayMismatch { files } => rec["files"] = json!(files),
            Self::ConfigInvalid(_) => {}
        }
        rec
    }
}

fn library_kind(e: &circlezeros::Error) -> &'static str {
    use circlezeros::Error as E;
    match e {
        E::EmptyCoefficients => "EmptyCoefficients",
        E::UnitModulusViolation { .. } => "UnitModulusViolation",
        E::SymmetryViolation { .. } => "SymmetryViolation",
        E::InvalidConfiguration(_) => "InvalidConfiguration",
        E::ConvergenceFailure { .. } => "ConvergenceFailure",
        E::UnpairedRoot { .. } => "UnpairedRoot",
        E::ArityMismatch { .. } => "ArityMismatch",
        E::DegenerateInput(_) => "DegenerateInput",
        E::InvalidSpec(_) => "InvalidSpec",
        E::AttemptBudgetExhausted { .. } => "AttemptBudgetExhausted",
        E::EigensolveFailure { .. } => "EigensolveFailure",
        E::InsufficientData(_) => "InsufficientData",
        E::NotPositiveDefinite { .. } => "NotPositiveDefinite",
        E::DomainError(_) => "DomainError",
        E::PoleProximity { .. } => "PoleProximity",
        E::InvalidArgument(_) => "InvalidArgument",
    }
}
