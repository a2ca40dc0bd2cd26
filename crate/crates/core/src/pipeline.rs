//! Fit every family, score it at the data, and weight the families.

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::families::Dataset;
use crate::inference::{ConditionalPosterior, FitSettings, InferenceEngine};
use crate::modelspace::{weights_from_predictive, ModelWeights, PopulationSpaceModel};
use crate::predictive::log_predictive_with;
use crate::quantity::{mixture_posterior_with, MixturePosterior, QuantitySpec};

#[derive(Debug, Clone)]
pub struct FamilyFit {
    pub family_id: String,
    pub posterior: Option<ConditionalPosterior>,
    /// `−∞` when the family cannot have produced the data.
    pub log_predictive: f64,
    /// Why the family was excluded, if it was.
    pub failure: Option<Error>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub fits: Vec<FamilyFit>,
    pub weights: ModelWeights,
    settings: FitSettings,
}

impl Analysis {
    pub fn posteriors(&self) -> Vec<Option<ConditionalPosterior>> {
        self.fits.iter().map(|f| f.posterior.clone()).collect()
    }

    pub fn log_predictives(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.log_predictive).collect()
    }

    pub fn mixture(&self, model: &PopulationSpaceModel, q: QuantitySpec) -> Result<MixturePosterior> {
        mixture_posterior_with(model, &self.weights, &self.posteriors(), q, self.settings.execution)
    }

    /// Same fits, different family weights (for example elicited ones).
    pub fn with_weights(&self, weights: ModelWeights) -> Self {
        Self { weights, ..self.clone() }
    }
}

/// Families whose fit is degenerate or whose predictive density vanishes get
/// zero weight; any other error aborts the analysis.
pub fn analyze(
    engine: &dyn InferenceEngine,
    model: &PopulationSpaceModel,
    data: &Dataset,
    settings: &FitSettings,
) -> Result<Analysis> {
    let entries = model.entries();
    let fits: Vec<Result<FamilyFit>> = map_indexed(settings.execution, entries.len(), |i| {
        let e = &entries[i];
        let id = e.family.id().to_string();
        let excluded = |err: Error| FamilyFit {
            family_id: id.clone(),
            posterior: None,
            log_predictive: f64::NEG_INFINITY,
            failure: Some(err),
        };
        let post = match engine.fit(&e.family, &e.prior, data, settings) {
            Ok(p) => p,
            Err(err @ Error::DegenerateFit { .. }) => return Ok(excluded(err)),
            Err(err) => return Err(err),
        };
        match log_predictive_with(&e.family, &post, data, settings.execution) {
            Ok(lp) => Ok(FamilyFit { family_id: id, posterior: Some(post), log_predictive: lp.value, failure: None }),
            Err(err @ Error::ImpossibleFamily(_)) => Ok(FamilyFit { posterior: Some(post), ..excluded(err) }),
            Err(err) => Err(err),
        }
    });
    let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;
    if fits.iter().all(|f| f.log_predictive == f64::NEG_INFINITY) {
        // Report the single family's own reason when there is only one.
        if let [only] = fits.as_slice() {
            if let Some(err) = &only.failure {
                return Err(err.clone());
            }
        }
        return Err(Error::NoAdmissibleFamily);
    }
    let lp: Vec<f64> = fits.iter().map(|f| f.log_predictive).collect();
    let weights = weights_from_predictive(model, &lp)?;
    Ok(Analysis { fits, weights, settings: *settings })
}
