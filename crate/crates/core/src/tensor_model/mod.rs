//! Online variational CP-tensor regression.

mod context;
mod factor;
mod posterior;
mod snapshot;

pub use context::{clamp_norm, ContextTensor};
pub use factor::{FactorState, FactorUpdate};
pub use posterior::{FactorStep, PosteriorConfig, Prediction, SusceptibilityPosterior};
pub use snapshot::{PosteriorSnapshot, SNAPSHOT_VERSION};
