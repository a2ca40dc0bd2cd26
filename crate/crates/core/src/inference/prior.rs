use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Bounds, FamilySpec, SamplingDistribution};

/// Prior for one parameter component. Components are independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ComponentPrior {
    Normal { mean: f64, sd: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    /// All prior mass on one value; the component is not integrated over.
    PointMass { value: f64 },
}

impl ComponentPrior {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Self::LogNormal { meanlog, sdlog } => meanlog.is_finite() && sdlog.is_finite() && sdlog > 0.0,
            Self::Gamma { shape, scale } => shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0,
            Self::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Self::PointMass { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPrior(format!("{self:?} is not a proper distribution")))
        }
    }

    /// Closed support interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::LogNormal { .. } | Self::Gamma { .. } => (0.0, f64::INFINITY),
            Self::Uniform { lo, hi } => (lo, hi),
            Self::PointMass { value } => (value, value),
        }
    }

    fn as_distribution(&self) -> Option<SamplingDistribution> {
        match *self {
            Self::Normal { mean, sd } => Some(SamplingDistribution::Normal { mu: mean, sigma: sd }),
            Self::LogNormal { meanlog, sdlog } => Some(SamplingDistribution::LogNormal { meanlog, sdlog }),
            Self::Gamma { shape, scale } => Some(SamplingDistribution::Gamma { shape, scale }),
            Self::Uniform { lo, hi } => {
                Some(SamplingDistribution::Uniform { center: 0.5 * (lo + hi), half_width: 0.5 * (hi - lo) })
            }
            Self::PointMass { .. } => None,
        }
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        match *self {
            // Evaluate the box directly so both closed endpoints are admitted exactly.
            Self::Uniform { lo, hi } => {
                if x >= lo && x <= hi { -(hi - lo).ln() } else { f64::NEG_INFINITY }
            }
            Self::PointMass { value } => {
                if x == value { 0.0 } else { f64::NEG_INFINITY }
            }
            _ => self.as_distribution().expect("continuous prior").ln_pdf(x),
        }
    }

    /// Central interval holding all but `tail` of the prior mass on each side.
    pub(crate) fn central_range(&self, tail: f64) -> (f64, f64) {
        match self.as_distribution() {
            Some(d) => (d.quantile(tail), d.quantile(1.0 - tail)),
            None => self.support(),
        }
    }

    fn fits_within(&self, b: Bounds) -> bool {
        let (lo, hi) = self.support();
        match self {
            Self::PointMass { value } => b.contains(*value),
            // Endpoints have zero prior mass, so a closed support may touch an open bound.
            _ => lo >= b.lo && hi <= b.hi,
        }
    }
}

/// Conditional prior `π(θ⁽ⁱ⁾ | F_i)`: one independent component per free parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorSpec {
    components: Vec<(String, ComponentPrior)>,
}

impl PriorSpec {
    pub fn new<S: Into<String>>(components: impl IntoIterator<Item = (S, ComponentPrior)>) -> Self {
        Self { components: components.into_iter().map(|(n, p)| (n.into(), p)).collect() }
    }

    /// Bounded uniform box over the named components.
    pub fn uniform_box<S: Into<String>>(bounds: impl IntoIterator<Item = (S, f64, f64)>) -> Self {
        Self::new(bounds.into_iter().map(|(n, lo, hi)| (n, ComponentPrior::Uniform { lo, hi })))
    }

    pub fn components(&self) -> &[(String, ComponentPrior)] {
        &self.components
    }

    /// Check the prior against a family and align it with the family's
    /// parameter order. Fixed parameters map to `None`.
    pub fn resolve(&self, family: &FamilySpec) -> Result<Vec<Option<ComponentPrior>>> {
        let names = family.param_names();
        let bounds = family.bounds();
        let mut out: Vec<Option<ComponentPrior>> = vec![None; names.len()];
        for (name, prior) in &self.components {
            prior.validate().map_err(|e| match e {
                Error::InvalidPrior(m) => Error::InvalidPrior(format!("`{}`.{name}: {m}", family.id())),
                other => other,
            })?;
            let idx = family.param_index(name).map_err(|_| {
                Error::InvalidPrior(format!("family `{}` has no parameter `{name}`", family.id()))
            })?;
            if family.fixed()[idx].is_some() {
                return Err(Error::InvalidPrior(format!(
                    "parameter `{name}` of `{}` is fixed and cannot take a prior",
                    family.id()
                )));
            }
            if out[idx].is_some() {
                return Err(Error::InvalidPrior(format!("duplicate prior for `{}`.{name}", family.id())));
            }
            if !prior.fits_within(bounds[idx]) {
                return Err(Error::InvalidPrior(format!(
                    "prior {prior:?} for `{}`.{name} puts mass outside the parameter space ({}, {})",
                    family.id(),
                    bounds[idx].lo,
                    bounds[idx].hi
                )));
            }
            out[idx] = Some(*prior);
        }
        for (i, name) in names.iter().enumerate() {
            if family.fixed()[i].is_none() && out[i].is_none() {
                return Err(Error::InvalidPrior(format!("no prior given for `{}`.{name}", family.id())));
            }
        }
        Ok(out)
    }
}
