//! Post-data inference about a population quantity when the true sampling
//! distribution is only known to lie in a space covered by a finite set of
//! parametric families.
//!
//! The pipeline is:
//!
//! 1. fit a conditional posterior of each family's parameters ([`inference`]);
//! 2. weight the families by their post-data predictive density at the
//!    observed data ([`predictive`], [`modelspace`]);
//! 3. push each family's posterior through the quantity of interest and mix
//!    the results by those weights ([`quantity`]).
//!
//! [`diagnostics`] holds weighted P values and the family-substitution
//! sensitivity check, and [`simulate`] runs coverage experiments with true
//! distributions outside the model.

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod families;
pub mod inference;
pub mod modelspace;
pub mod numeric;
pub mod pipeline;
pub mod predictive;
pub mod quantity;
pub mod simulate;

pub use error::{Error, Result};
pub use exec::Execution;
pub use families::{Dataset, FamilyKind, FamilySpec, Fingerprint, ParamVector, Parametrization, SamplingDistribution};
pub use inference::{ComponentPrior, ConditionalPosterior, FitSettings, InferenceEngine, PriorSpec};
pub use modelspace::{ModelEntry, ModelWeights, PopulationSpaceModel, RatioElicitation};
pub use pipeline::{analyze, Analysis};
pub use quantity::{MixturePosterior, QuantityLaw, QuantitySpec, Summary};
