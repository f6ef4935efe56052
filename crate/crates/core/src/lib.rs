//! Random self-reciprocal polynomials, the circular ensembles they are
//! compared against, and Epstein zeta functions.

pub mod epstein;
pub mod error;
pub mod measures;
pub mod poly;
pub mod rng;
pub mod roots;
pub mod samplers;
pub mod special;
pub mod stats;

pub use epstein::{EpsteinSeries, QuadraticForm};
pub use error::{Error, Result};
pub use measures::{CoefficientMap, DensityKind, Parity};
pub use poly::{Branch, OffPair, SelfReciprocalPoly, TrigPoly, ZeroConfiguration};
pub use roots::{circle_classify, find_roots, RootFindReport};
pub use samplers::{EnsembleSpec, McmcConfig, Model, SampleBatch};
