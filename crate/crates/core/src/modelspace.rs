//! The population space model `M = {F_1, …, F_m}` and post-data family weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::inference::PriorSpec;

/// One family with its prior region probability and conditional parameter prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub family: FamilySpec,
    pub prior_weight: f64,
    pub prior: PriorSpec,
}

impl ModelEntry {
    pub fn new(family: FamilySpec, prior_weight: f64, prior: PriorSpec) -> Self {
        Self { family, prior_weight, prior }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpaceModel {
    entries: Vec<ModelEntry>,
}

/// Tolerance on the sum of the prior family probabilities.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

impl PopulationSpaceModel {
    /// Validates the entries and stores the prior weights rescaled so that
    /// they sum to exactly 1 in floating point, in model order.
    pub fn new(entries: Vec<ModelEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidModel("the model needs at least one family".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.family.id() == e.family.id()) {
                return Err(Error::InvalidModel(format!("family id `{}` appears more than once", e.family.id())));
            }
            if !(e.prior_weight.is_finite() && e.prior_weight > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "prior weight of `{}` must be positive and finite, got {}",
                    e.family.id(),
                    e.prior_weight
                )));
            }
            e.prior.resolve(&e.family)?;
        }
        let sum: f64 = entries.iter().map(|e| e.prior_weight).sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!("prior weights sum to {sum}, not 1")));
        }
        let mut entries = entries;
        let mut w: Vec<f64> = entries.iter().map(|e| e.prior_weight / sum).collect();
        canonicalize(&mut w);
        if w.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidModel("prior weights are too small to normalise".into()));
        }
        for (e, w) in entries.iter_mut().zip(w) {
            e.prior_weight = w;
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn families(&self) -> impl Iterator<Item = &FamilySpec> {
        self.entries.iter().map(|e| &e.family)
    }

    pub fn family_ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.family.id().to_string()).collect()
    }

    pub fn priors(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.prior_weight).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.family.id() == id)
    }

    fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::InvalidElicitation(format!("family `{id}` is not in the model")))
    }
}

/// Make the left-to-right sum exactly 1. The residual goes to the largest
/// entry when that works; otherwise the last entry absorbs it, which always
/// does because `1 − partial` rounds back to a sum of exactly 1.
fn canonicalize(w: &mut [f64]) {
    let big = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
    for _ in 0..4 {
        let s: f64 = w.iter().sum();
        if s == 1.0 {
            return;
        }
        w[big] += 1.0 - s;
    }
    let (last, head) = w.split_last_mut().expect("nonempty");
    let partial: f64 = head.iter().sum();
    *last = 1.0 - partial;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Predictive,
    Elicited,
}

/// Post-data probabilities `π(F_j | y)` aligned with the model's families.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    family_ids: Vec<String>,
    weights: Vec<f64>,
    excluded: Vec<bool>,
    provenance: Provenance,
    notes: Vec<String>,
}

impl ModelWeights {
    pub fn family_ids(&self) -> &[String] {
        &self.family_ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.family_ids.iter().position(|f| f == id).map(|i| self.weights[i])
    }

    /// Families given zero weight because the data are impossible under them.
    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Free-text reasoning attached to an elicitation.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }
}

/// `w_j ∝ π(F_j) · exp(ℓ_j)`, with `ℓ_j` the log predictive density at the data.
/// A family with `ℓ_j = −∞` gets weight exactly zero and is flagged.
pub fn weights_from_predictive(model: &PopulationSpaceModel, log_predictives: &[f64]) -> Result<ModelWeights> {
    if log_predictives.len() != model.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} log predictive values, got {}",
            model.len(),
            log_predictives.len()
        )));
    }
    if log_predictives.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::InvalidArgument("log predictive values must be finite or -inf".into()));
    }
    let max = log_predictives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoAdmissibleFamily);
    }
    let terms: Vec<f64> = model
        .entries
        .iter()
        .zip(log_predictives)
        .map(|(e, &l)| if l == f64::NEG_INFINITY { 0.0 } else { e.prior_weight * (l - max).exp() })
        .collect();
    let total: f64 = terms.iter().sum();
    Ok(ModelWeights {
        family_ids: model.family_ids(),
        weights: terms.iter().map(|t| t / total).collect(),
        excluded: log_predictives.iter().map(|&l| l == f64::NEG_INFINITY).collect(),
        provenance: Provenance::Predictive,
        notes: Vec::new(),
    })
}

/// `π(P_i | y) / π(P_anchor | y)`, kept as a fraction so prior ratios can be
/// normalised without a rounding step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub numerator: f64,
    pub denominator: f64,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.numerator / self.denominator
    }
}

/// Ratios of post-data family probabilities against a single anchor family.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioElicitation {
    anchor: String,
    ratios: Vec<(String, Ratio)>,
    notes: Vec<String>,
}

impl RatioElicitation {
    pub fn new<S: Into<String>>(anchor: impl Into<String>, ratios: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let anchor = anchor.into();
        let mut out: Vec<(String, Ratio)> = Vec::new();
        for (id, r) in ratios {
            let id = id.into();
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidElicitation(format!("ratio for `{id}` must be finite and positive, got {r}")));
            }
            if id == anchor {
                return Err(Error::InvalidElicitation(format!("anchor `{anchor}` cannot have a ratio against itself")));
            }
            if out.iter().any(|(o, _)| *o == id) {
                return Err(Error::InvalidElicitation(format!("ratio for `{id}` given more than once")));
            }
            out.push((id, Ratio { numerator: r, denominator: 1.0 }));
        }
        Ok(Self { anchor, ratios: out, notes: Vec::new() })
    }

    /// Record the sub-region reasoning behind the ratios.
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn anchor(&self) -> &str {
        &self.anchor
    }

    pub fn ratios(&self) -> &[(String, Ratio)] {
        &self.ratios
    }

    pub fn ratio(&self, id: &str) -> Option<f64> {
        self.ratios.iter().find(|(o, _)| o == id).map(|(_, r)| r.value())
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }
}

/// Set every post-data ratio equal to the corresponding prior ratio.
pub fn apply_prior_ratio_rule(model: &PopulationSpaceModel, anchor: &str) -> Result<RatioElicitation> {
    let a = model.require(anchor)?;
    let pa = model.entries[a].prior_weight;
    let ratios = model
        .entries
        .iter()
        .filter(|e| e.family.id() != anchor)
        .map(|e| (e.family.id().to_string(), Ratio { numerator: e.prior_weight, denominator: pa }))
        .collect();
    Ok(RatioElicitation {
        anchor: anchor.to_string(),
        ratios,
        notes: vec!["ratios set equal to prior ratios".to_string()],
    })
}

/// `w_i = r_i / (1 + Σ r_k)` and `w_anchor = 1 / (1 + Σ r_k)`.
pub fn weights_from_ratios(model: &PopulationSpaceModel, elicitation: &RatioElicitation) -> Result<ModelWeights> {
    let anchor = model.require(&elicitation.anchor)?;
    let mut slots: Vec<Option<Ratio>> = vec![None; model.len()];
    for (id, r) in &elicitation.ratios {
        let i = model.require(id)?;
        if i == anchor || slots[i].is_some() {
            return Err(Error::InvalidElicitation(format!("ratio for `{id}` over-specifies the elicitation")));
        }
        slots[i] = Some(*r);
    }
    let missing: Vec<&str> = (0..model.len())
        .filter(|&i| i != anchor && slots[i].is_none())
        .map(|i| model.entries[i].family.id())
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteElicitation(format!("no ratio for {}", missing.join(", "))));
    }
    let given: Vec<Ratio> = slots.iter().flatten().copied().collect();
    // With a shared denominator d the unnormalised weights are the numerators
    // and d itself, which avoids dividing twice.
    let shared = given.first().map(|r| r.denominator).filter(|d| given.iter().all(|r| r.denominator == *d));
    let terms: Vec<f64> = slots
        .iter()
        .map(|s| match (s, shared) {
            (None, Some(d)) => d,
            (None, None) => 1.0,
            (Some(r), Some(_)) => r.numerator,
            (Some(r), None) => r.value(),
        })
        .collect();
    let total: f64 = terms.iter().sum();
    Ok(ModelWeights {
        family_ids: model.family_ids(),
        weights: terms.iter().map(|t| t / total).collect(),
        excluded: vec![false; model.len()],
        provenance: Provenance::Elicited,
        notes: elicitation.notes.clone(),
    })
}
