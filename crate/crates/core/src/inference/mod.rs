//! Conditional post-data distribution of a family's parameters given the data.
//!
//! The default engine, `bayes-grid`, computes the Bayes posterior under a
//! proper prior on a tensor-product quadrature grid. Other engines can be
//! plugged in through [`InferenceEngine`].

mod grid;
mod prior;

pub use grid::{BayesGrid, Transform};
pub use prior::{ComponentPrior, PriorSpec};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::families::{Dataset, FamilySpec, Fingerprint, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    /// Grid nodes per free parameter.
    pub nodes_per_dim: usize,
    /// Half-width of the initial grid in posterior standard deviations.
    pub span_sd: f64,
    /// How many times a grid edge may be pushed outwards when it still carries mass.
    pub max_extensions: usize,
    pub execution: Execution,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { nodes_per_dim: 401, span_sd: 8.0, max_extensions: 6, execution: Execution::default() }
    }
}

pub trait InferenceEngine: Send + Sync {
    fn name(&self) -> &'static str;

    fn fit(
        &self,
        family: &FamilySpec,
        prior: &PriorSpec,
        data: &Dataset,
        settings: &FitSettings,
    ) -> Result<ConditionalPosterior>;
}

static BAYES_GRID: BayesGrid = BayesGrid;

/// Look up a registered engine by name.
pub fn engine(name: &str) -> Option<&'static dyn InferenceEngine> {
    match name {
        "bayes-grid" => Some(&BAYES_GRID),
        _ => None,
    }
}

pub fn default_engine() -> &'static dyn InferenceEngine {
    &BAYES_GRID
}

pub fn fit_conditional_posterior(
    family: &FamilySpec,
    prior: &PriorSpec,
    data: &Dataset,
    settings: &FitSettings,
) -> Result<ConditionalPosterior> {
    BAYES_GRID.fit(family, prior, data, settings)
}

/// `ln ∫ π(y | F_i[θ]) π(θ | F_i) dθ`, computed on the same grid as the posterior.
pub fn log_marginal_likelihood(
    family: &FamilySpec,
    prior: &PriorSpec,
    data: &Dataset,
    settings: &FitSettings,
) -> Result<f64> {
    let post = fit_conditional_posterior(family, prior, data, settings)?;
    match post.log_normalizer() {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(Error::DegenerateFit {
            family: family.id().into(),
            reason: "marginal likelihood is zero".into(),
        }),
    }
}

/// One axis of a posterior grid, on the transformed (unbounded) scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridAxis {
    pub param: usize,
    pub transform: Transform,
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl GridAxis {
    pub fn spacing(&self) -> f64 {
        if self.nodes > 1 { (self.hi - self.lo) / (self.nodes - 1) as f64 } else { 0.0 }
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.nodes { self.hi } else { self.lo + k as f64 * self.spacing() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Grid(Vec<GridAxis>),
    WeightedSamples,
}

/// Normalised discrete representation of `π(θ⁽ⁱ⁾ | F_i, y)`.
#[derive(Debug, Clone)]
pub struct ConditionalPosterior {
    family_id: String,
    engine: String,
    representation: Representation,
    param_names: Vec<&'static str>,
    nodes: Vec<f64>,
    masses: Vec<f64>,
    log_normalizer: Option<f64>,
    data_fingerprint: Fingerprint,
}

impl ConditionalPosterior {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        family: &FamilySpec,
        engine: &str,
        representation: Representation,
        nodes: Vec<f64>,
        masses: Vec<f64>,
        log_normalizer: Option<f64>,
        data_fingerprint: Fingerprint,
    ) -> Self {
        debug_assert_eq!(nodes.len(), masses.len() * family.param_names().len());
        Self {
            family_id: family.id().to_string(),
            engine: engine.to_string(),
            representation,
            param_names: family.param_names().to_vec(),
            nodes,
            masses,
            log_normalizer,
            data_fingerprint,
        }
    }

    /// Posterior given directly as weighted parameter vectors.
    pub fn from_weighted_samples(
        family: &FamilySpec,
        samples: &[ParamVector],
        weights: &[f64],
        data: &Dataset,
    ) -> Result<Self> {
        if samples.is_empty() || samples.len() != weights.len() {
            return Err(Error::InvalidArgument("need one weight per sample and at least one sample".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("sample weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateWeight);
        }
        let mut nodes = Vec::with_capacity(samples.len() * family.param_names().len());
        for s in samples {
            family.distribution(s)?;
            nodes.extend_from_slice(s.values());
        }
        let masses = weights.iter().map(|w| w / total).collect();
        Ok(Self::from_parts(
            family,
            "weighted-samples",
            Representation::WeightedSamples,
            nodes,
            masses,
            None,
            data.fingerprint(),
        ))
    }

    /// All posterior mass at `theta`.
    pub fn point_mass(family: &FamilySpec, theta: &ParamVector, data: &Dataset) -> Result<Self> {
        Self::from_weighted_samples(family, std::slice::from_ref(theta), &[1.0], data)
    }

    pub fn family_id(&self) -> &str {
        &self.family_id
    }

    pub fn engine(&self) -> &str {
        &self.engine
    }

    pub fn representation(&self) -> &Representation {
        &self.representation
    }

    pub fn param_names(&self) -> &[&'static str] {
        &self.param_names
    }

    pub fn dim(&self) -> usize {
        self.param_names.len()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Parameter values of node `k`.
    pub fn node(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.nodes[k * d..(k + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.dim()).zip(self.masses.iter().copied())
    }

    /// Log marginal likelihood of the family under its prior, when known.
    pub fn log_normalizer(&self) -> Option<f64> {
        self.log_normalizer
    }

    pub fn data_fingerprint(&self) -> Fingerprint {
        self.data_fingerprint
    }

    pub fn mean(&self, param: usize) -> f64 {
        self.iter().map(|(t, m)| m * t[param]).sum()
    }

    pub fn variance(&self, param: usize) -> f64 {
        let mean = self.mean(param);
        self.iter().map(|(t, m)| m * (t[param] - mean) * (t[param] - mean)).sum()
    }

    /// Node with the largest mass.
    pub fn mode(&self) -> &[f64] {
        let k = self
            .masses
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.node(k)
    }
}
