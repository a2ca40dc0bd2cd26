//! Post-data predictive density of a replicate dataset, evaluated at the
//! observed data: `ln ∫ π(y | F[θ]) dπ(θ | F, y)`.
//!
//! This uses the data twice (once to fit, once to score), so it is not the
//! marginal likelihood and is never smaller than it on well-behaved fits.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::families::{Dataset, FamilySpec, Fingerprint};
use crate::inference::ConditionalPosterior;
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPredictive {
    pub value: f64,
    pub data_fingerprint: Fingerprint,
}

pub fn log_predictive_at_observed(
    family: &FamilySpec,
    posterior: &ConditionalPosterior,
    data: &Dataset,
) -> Result<LogPredictive> {
    log_predictive_with(family, posterior, data, Execution::default())
}

pub fn log_predictive_with(
    family: &FamilySpec,
    posterior: &ConditionalPosterior,
    data: &Dataset,
    execution: Execution,
) -> Result<LogPredictive> {
    let fingerprint = data.fingerprint();
    if posterior.data_fingerprint() != fingerprint {
        return Err(Error::FingerprintMismatch { family: family.id().into() });
    }
    if posterior.family_id() != family.id() || posterior.param_names() != family.param_names() {
        return Err(Error::InvalidArgument(format!(
            "posterior for `{}` used with family `{}`",
            posterior.family_id(),
            family.id()
        )));
    }
    let prepared = family.prepare(data);
    let terms = map_indexed(execution, posterior.len(), |k| {
        let m = posterior.masses()[k];
        if m <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let ll = prepared.log_likelihood(&family.resolve_unchecked(posterior.node(k)));
        if ll.is_nan() { f64::NEG_INFINITY } else { m.ln() + ll }
    });
    let value = log_sum_exp(&terms);
    if value == f64::NEG_INFINITY {
        return Err(Error::ImpossibleFamily(family.id().into()));
    }
    Ok(LogPredictive { value, data_fingerprint: fingerprint })
}
