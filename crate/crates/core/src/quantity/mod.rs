//! Population quantities and the overall post-data law of `Q`.
//!
//! Each family's posterior is pushed through `Q(θ)` (a point mass per
//! parameter value), and the resulting laws are mixed with the family weights:
//! `π(Q | y) = Σ_i π(F_i | y) · π(Q | F_i, y)`.

mod law;
mod spec;

pub use law::{DensityRow, QuantityLaw};
pub use spec::{quantity_value, Integrand, QuantitySpec};
pub(crate) use spec::quantity_of;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::families::FamilySpec;
use crate::inference::ConditionalPosterior;
use crate::modelspace::{ModelWeights, PopulationSpaceModel};

/// Rows in the plotting density table.
pub const DENSITY_ROWS: usize = 201;

/// Law of `Q` under one family's posterior.
pub fn family_quantity_posterior(
    family: &FamilySpec,
    posterior: &ConditionalPosterior,
    q: QuantitySpec,
) -> Result<QuantityLaw> {
    family_quantity_posterior_with(family, posterior, q, Execution::default())
}

pub fn family_quantity_posterior_with(
    family: &FamilySpec,
    posterior: &ConditionalPosterior,
    q: QuantitySpec,
    execution: Execution,
) -> Result<QuantityLaw> {
    let q = q.validated()?;
    if posterior.family_id() != family.id() {
        return Err(Error::InvalidArgument(format!(
            "posterior for `{}` used with family `{}`",
            posterior.family_id(),
            family.id()
        )));
    }
    let values: Vec<Result<f64>> = map_indexed(execution, posterior.len(), |k| {
        quantity_of(family.id(), &family.resolve_unchecked(posterior.node(k)), q)
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    QuantityLaw::from_weighted(&values, posterior.masses())
}

#[derive(Debug, Clone)]
pub struct FamilyQuantity {
    pub family_id: String,
    pub weight: f64,
    /// `None` when the family has zero weight and no usable law.
    pub law: Option<QuantityLaw>,
}

#[derive(Debug, Clone)]
pub struct MixturePosterior {
    quantity: QuantitySpec,
    weights: ModelWeights,
    per_family: Vec<FamilyQuantity>,
    combined: QuantityLaw,
    mean: f64,
}

/// Mix per-family laws of `Q` by the model weights. `posteriors[i]` may be
/// `None` only for a family with zero weight.
pub fn mixture_posterior(
    model: &PopulationSpaceModel,
    weights: &ModelWeights,
    posteriors: &[Option<ConditionalPosterior>],
    q: QuantitySpec,
) -> Result<MixturePosterior> {
    mixture_posterior_with(model, weights, posteriors, q, Execution::default())
}

pub fn mixture_posterior_with(
    model: &PopulationSpaceModel,
    weights: &ModelWeights,
    posteriors: &[Option<ConditionalPosterior>],
    q: QuantitySpec,
    execution: Execution,
) -> Result<MixturePosterior> {
    let q = q.validated()?;
    if posteriors.len() != model.len() || weights.weights().len() != model.len() {
        return Err(Error::InvalidArgument("weights and posteriors must align with the model families".into()));
    }
    if weights.family_ids() != model.family_ids().as_slice() {
        return Err(Error::InvalidArgument("weights were computed for a different model".into()));
    }
    let entries = model.entries();
    let laws: Vec<Result<Option<QuantityLaw>>> = map_indexed(execution, posteriors.len(), |i| {
        let post = &posteriors[i];
        let family = &entries[i].family;
        let w = weights.weights()[i];
        match post {
            None if w > 0.0 => Err(Error::InvalidArgument(format!("family `{}` has weight but no posterior", family.id()))),
            None => Ok(None),
            Some(p) => match family_quantity_posterior_with(family, p, q, Execution::Sequential) {
                Ok(l) => Ok(Some(l)),
                Err(e @ Error::UndefinedQuantity { .. }) if w > 0.0 => Err(e),
                Err(_) if w == 0.0 => Ok(None),
                Err(e) => Err(e),
            },
        }
    });
    let mut per_family = Vec::with_capacity(model.len());
    for (i, law) in laws.into_iter().enumerate() {
        per_family.push(FamilyQuantity {
            family_id: entries[i].family.id().to_string(),
            weight: weights.weights()[i],
            law: law?,
        });
    }
    let combined = combine(&per_family)?;
    let mean = combined.mean();
    Ok(MixturePosterior { quantity: q, weights: weights.clone(), per_family, combined, mean })
}

fn combine(parts: &[FamilyQuantity]) -> Result<QuantityLaw> {
    let mut values = Vec::new();
    let mut masses = Vec::new();
    for part in parts {
        if part.weight == 0.0 {
            continue;
        }
        let law = part.law.as_ref().expect("weighted families have laws");
        values.extend_from_slice(law.atoms());
        masses.extend(law.masses().iter().map(|m| part.weight * m));
    }
    QuantityLaw::from_weighted(&values, &masses)
}

impl MixturePosterior {
    pub fn quantity(&self) -> QuantitySpec {
        self.quantity
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn per_family(&self) -> &[FamilyQuantity] {
        &self.per_family
    }

    pub fn family_law(&self, id: &str) -> Option<&QuantityLaw> {
        self.per_family.iter().find(|f| f.family_id == id).and_then(|f| f.law.as_ref())
    }

    /// The exact weighted-atom law of `Q`.
    pub fn combined(&self) -> &QuantityLaw {
        &self.combined
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn summarize(&self, level: f64) -> Result<Summary> {
        summarize(self, level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub density: Vec<DensityRow>,
}

impl Summary {
    pub fn of_law(law: &QuantityLaw, level: f64) -> Result<Self> {
        let (lower, upper) = law.interval(level)?;
        Ok(Self {
            mean: law.mean(),
            sd: law.sd(),
            median: law.quantile(0.5)?,
            level,
            lower,
            upper,
            density: law.density_table(DENSITY_ROWS),
        })
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Mean, equal-tailed interval at `level`, and a plotting density table.
pub fn summarize(mp: &MixturePosterior, level: f64) -> Result<Summary> {
    Summary::of_law(&mp.combined, level)
}
