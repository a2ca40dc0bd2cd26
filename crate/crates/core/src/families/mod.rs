//! Parametric families of sampling distributions.
//!
//! A [`FamilySpec`] is one family `F_i` together with the parametrization its
//! parameter vectors use. Log-normal and gamma (and normal, Student-t with more
//! than two degrees of freedom) can be parametrized by `(mean, variance)`,
//! which is the common coordinate system for comparing families.

mod dist;
pub(crate) mod likelihood;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use dist::SamplingDistribution;
pub(crate) use likelihood::PreparedData;

use crate::error::{Error, Result};

/// The observed sample `y = {y_1, ..., y_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidData("dataset is empty".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!("value {v} at index {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population (divide-by-n) variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    /// Data shifted by a constant.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v + c).collect())
    }

    /// SHA-256 of the little-endian bit patterns of the values.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_bits().to_le_bytes());
        }
        Fingerprint(h.finalize().into())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 32]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const REAL: Bounds = Bounds { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const POSITIVE: Bounds = Bounds { lo: 0.0, hi: f64::INFINITY };

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v > self.lo && v < self.hi
    }
}

/// Named parameter values of one family, `θ⁽ⁱ⁾`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamVector {
    names: Vec<&'static str>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| *n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Display for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (n, v)) in self.names.iter().zip(&self.values).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    Normal,
    LogNormal,
    Gamma,
    /// Uniform on `[θ - a, θ + a]` with known half-width `a`.
    UniformLocation { half_width: f64 },
    /// Location-scale Student-t with fixed degrees of freedom.
    StudentT { dof: f64 },
}

impl FamilyKind {
    /// Identifier used in configuration files.
    pub fn key(&self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::LogNormal => "lognormal",
            Self::Gamma => "gamma",
            Self::UniformLocation { .. } => "uniform_loc",
            Self::StudentT { .. } => "student_t",
        }
    }

    fn display_name(&self) -> String {
        match self {
            Self::Normal => "normal".into(),
            Self::LogNormal => "log-normal".into(),
            Self::Gamma => "gamma".into(),
            Self::UniformLocation { half_width } => format!("uniform location (half-width {half_width})"),
            Self::StudentT { dof } => format!("Student-t (nu = {dof})"),
        }
    }

    fn default_region_label(&self) -> &'static str {
        match self {
            Self::Normal => "symmetric, mesokurtic",
            Self::LogNormal => "right-skewed, heavy right tail",
            Self::Gamma => "right-skewed, moderate right tail",
            Self::UniformLocation { .. } => "symmetric, bounded support, platykurtic",
            Self::StudentT { .. } => "symmetric, leptokurtic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parametrization {
    #[default]
    Natural,
    MeanVariance,
}

/// One parametric family `F_i` in the population space model.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    id: String,
    name: String,
    kind: FamilyKind,
    parametrization: Parametrization,
    region_label: String,
    fixed: Vec<Option<f64>>,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind) -> Result<Self> {
        match kind {
            FamilyKind::UniformLocation { half_width } if !(half_width > 0.0 && half_width.is_finite()) => {
                return Err(Error::InvalidFamily(format!("uniform half-width must be positive, got {half_width}")));
            }
            FamilyKind::StudentT { dof } if !(dof > 0.0 && dof.is_finite()) => {
                return Err(Error::InvalidFamily(format!("Student-t degrees of freedom must be positive, got {dof}")));
            }
            _ => {}
        }
        Ok(Self {
            id: kind.key().to_string(),
            name: kind.display_name(),
            kind,
            parametrization: Parametrization::Natural,
            region_label: kind.default_region_label().to_string(),
            fixed: vec![None; Self::names_for(kind, Parametrization::Natural).len()],
        })
    }

    pub fn normal() -> Self {
        Self::new(FamilyKind::Normal).expect("valid")
    }

    pub fn lognormal() -> Self {
        Self::new(FamilyKind::LogNormal).expect("valid")
    }

    pub fn gamma() -> Self {
        Self::new(FamilyKind::Gamma).expect("valid")
    }

    pub fn uniform_location(half_width: f64) -> Result<Self> {
        Self::new(FamilyKind::UniformLocation { half_width })
    }

    pub fn student_t(dof: f64) -> Result<Self> {
        Self::new(FamilyKind::StudentT { dof })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_region_label(mut self, label: impl Into<String>) -> Self {
        self.region_label = label.into();
        self
    }

    /// Switch parametrization. Clears any fixed components.
    pub fn with_parametrization(mut self, p: Parametrization) -> Result<Self> {
        let ok = match (self.kind, p) {
            (_, Parametrization::Natural) => true,
            (FamilyKind::UniformLocation { .. }, Parametrization::MeanVariance) => false,
            (FamilyKind::StudentT { dof }, Parametrization::MeanVariance) => dof > 2.0,
            _ => true,
        };
        if !ok {
            return Err(Error::InvalidFamily(format!(
                "family `{}` has no (mean, variance) parametrization",
                self.id
            )));
        }
        self.parametrization = p;
        self.fixed = vec![None; Self::names_for(self.kind, p).len()];
        Ok(self)
    }

    /// Hold one parameter at a known value.
    pub fn with_fixed(mut self, name: &str, value: f64) -> Result<Self> {
        let idx = self.param_index(name)?;
        if !self.bounds()[idx].contains(value) {
            return Err(Error::ParameterDomain { family: self.id.clone(), param: name.into(), value });
        }
        self.fixed[idx] = Some(value);
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn parametrization(&self) -> Parametrization {
        self.parametrization
    }

    pub fn region_label(&self) -> &str {
        &self.region_label
    }

    pub fn fixed(&self) -> &[Option<f64>] {
        &self.fixed
    }

    /// Indices of parameters that are not held fixed.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| self.fixed[i].is_none()).collect()
    }

    pub fn supports_mean_variance(&self) -> bool {
        match self.kind {
            FamilyKind::UniformLocation { .. } => false,
            FamilyKind::StudentT { dof } => dof > 2.0,
            _ => true,
        }
    }

    fn names_for(kind: FamilyKind, p: Parametrization) -> &'static [&'static str] {
        match (kind, p) {
            (FamilyKind::UniformLocation { .. }, _) => &["theta"],
            (_, Parametrization::MeanVariance) => &["mean", "variance"],
            (FamilyKind::Normal, _) => &["mu", "sigma"],
            (FamilyKind::LogNormal, _) => &["meanlog", "sdlog"],
            (FamilyKind::Gamma, _) => &["shape", "scale"],
            (FamilyKind::StudentT { .. }, _) => &["location", "scale"],
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        Self::names_for(self.kind, self.parametrization)
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.param_names()
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::InvalidFamily(format!("family `{}` has no parameter `{name}`", self.id)))
    }

    /// Parameter space `Θ⁽ⁱ⁾` as one open interval per component.
    pub fn bounds(&self) -> Vec<Bounds> {
        let positive_mean = matches!(self.kind, FamilyKind::LogNormal | FamilyKind::Gamma);
        self.param_names()
            .iter()
            .map(|n| match *n {
                "mu" | "meanlog" | "location" | "theta" => Bounds::REAL,
                "mean" if !positive_mean => Bounds::REAL,
                _ => Bounds::POSITIVE,
            })
            .collect()
    }

    /// Build a validated parameter vector in this family's parametrization.
    pub fn params(&self, values: &[f64]) -> Result<ParamVector> {
        self.check(values)?;
        Ok(ParamVector { names: self.param_names().to_vec(), values: values.to_vec() })
    }

    fn check(&self, values: &[f64]) -> Result<()> {
        let names = self.param_names();
        if values.len() != names.len() {
            return Err(Error::ParameterCount { family: self.id.clone(), expected: names.len(), got: values.len() });
        }
        for ((b, v), n) in self.bounds().iter().zip(values).zip(names) {
            if !b.contains(*v) {
                return Err(Error::ParameterDomain { family: self.id.clone(), param: (*n).into(), value: *v });
            }
        }
        Ok(())
    }

    fn check_vector(&self, theta: &ParamVector) -> Result<()> {
        if theta.names.as_slice() != self.param_names() {
            return Err(Error::InvalidFamily(format!(
                "parameter names {:?} do not match family `{}` ({:?})",
                theta.names,
                self.id,
                self.param_names()
            )));
        }
        self.check(&theta.values)
    }

    /// Resolve raw parameter values into a sampling distribution.
    pub fn distribution_from(&self, values: &[f64]) -> Result<SamplingDistribution> {
        self.check(values)?;
        Ok(self.resolve_unchecked(values))
    }

    pub fn distribution(&self, theta: &ParamVector) -> Result<SamplingDistribution> {
        self.check_vector(theta)?;
        Ok(self.resolve_unchecked(&theta.values))
    }

    /// Resolution without bounds checks, for values produced in-bounds by construction.
    pub(crate) fn resolve_unchecked(&self, v: &[f64]) -> SamplingDistribution {
        use SamplingDistribution as D;
        match (self.kind, self.parametrization) {
            (FamilyKind::UniformLocation { half_width }, _) => D::Uniform { center: v[0], half_width },
            (FamilyKind::Normal, Parametrization::Natural) => D::Normal { mu: v[0], sigma: v[1] },
            (FamilyKind::Normal, Parametrization::MeanVariance) => D::Normal { mu: v[0], sigma: v[1].sqrt() },
            (FamilyKind::LogNormal, Parametrization::Natural) => D::LogNormal { meanlog: v[0], sdlog: v[1] },
            (FamilyKind::LogNormal, Parametrization::MeanVariance) => {
                let (m, var) = (v[0], v[1]);
                let s2 = (var / (m * m)).ln_1p();
                D::LogNormal { meanlog: m.ln() - 0.5 * s2, sdlog: s2.sqrt() }
            }
            (FamilyKind::Gamma, Parametrization::Natural) => D::Gamma { shape: v[0], scale: v[1] },
            (FamilyKind::Gamma, Parametrization::MeanVariance) => {
                let (m, var) = (v[0], v[1]);
                D::Gamma { shape: m * m / var, scale: var / m }
            }
            (FamilyKind::StudentT { dof }, Parametrization::Natural) => D::StudentT { location: v[0], scale: v[1], dof },
            (FamilyKind::StudentT { dof }, Parametrization::MeanVariance) => D::StudentT {
                location: v[0],
                scale: (v[1] * (dof - 2.0) / dof).sqrt(),
                dof,
            },
        }
    }

    /// Log density at `point`; `-inf` outside the support.
    pub fn log_density(&self, theta: &ParamVector, point: f64) -> Result<f64> {
        if !point.is_finite() {
            return Err(Error::InvalidArgument(format!("density point {point} is not finite")));
        }
        Ok(self.distribution(theta)?.ln_pdf(point))
    }

    pub fn cdf(&self, theta: &ParamVector, point: f64) -> Result<f64> {
        Ok(self.distribution(theta)?.cdf(point))
    }

    pub fn sf(&self, theta: &ParamVector, point: f64) -> Result<f64> {
        Ok(self.distribution(theta)?.sf(point))
    }

    pub fn quantile(&self, theta: &ParamVector, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityDomain(p));
        }
        Ok(self.distribution(theta)?.quantile(p))
    }

    /// Parameter vector (in this family's parametrization) with the given mean and variance.
    pub fn moments_to_params(&self, mean: f64, variance: f64) -> Result<ParamVector> {
        let unattainable = || Error::MomentDomain { family: self.id.clone(), mean, variance };
        if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
            return Err(unattainable());
        }
        if self.parametrization == Parametrization::MeanVariance {
            return self.params(&[mean, variance]).map_err(|_| unattainable());
        }
        let values = match self.kind {
            FamilyKind::Normal => vec![mean, variance.sqrt()],
            FamilyKind::LogNormal => {
                if mean <= 0.0 {
                    return Err(unattainable());
                }
                let s2 = (variance / (mean * mean)).ln_1p();
                vec![mean.ln() - 0.5 * s2, s2.sqrt()]
            }
            FamilyKind::Gamma => {
                if mean <= 0.0 {
                    return Err(unattainable());
                }
                vec![mean * mean / variance, variance / mean]
            }
            FamilyKind::UniformLocation { half_width } => {
                let fixed = half_width * half_width / 3.0;
                if ((variance - fixed) / fixed).abs() > 1e-9 {
                    return Err(unattainable());
                }
                vec![mean]
            }
            FamilyKind::StudentT { dof } => {
                if dof <= 2.0 {
                    return Err(unattainable());
                }
                vec![mean, (variance * (dof - 2.0) / dof).sqrt()]
            }
        };
        self.params(&values).map_err(|_| unattainable())
    }

    /// `(mean, variance)` of `F_i[θ]`.
    pub fn params_to_moments(&self, theta: &ParamVector) -> Result<(f64, f64)> {
        let d = self.distribution(theta)?;
        let undefined = |q: &str| Error::UndefinedQuantity { family: self.id.clone(), quantity: q.into() };
        let mean = d.mean().ok_or_else(|| undefined("mean"))?;
        let var = d.variance().ok_or_else(|| undefined("variance"))?;
        Ok((mean, var))
    }

    /// Draw `n` observations; deterministic in `seed`.
    pub fn sample(&self, theta: &ParamVector, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        let d = self.distribution(theta)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new(d.sample(&mut rng, n))
    }

    pub(crate) fn prepare(&self, data: &Dataset) -> PreparedData {
        match self.kind {
            FamilyKind::Normal => PreparedData::normal(data),
            FamilyKind::LogNormal => PreparedData::lognormal(data),
            FamilyKind::Gamma => PreparedData::gamma(data),
            FamilyKind::UniformLocation { .. } => PreparedData::uniform(data),
            FamilyKind::StudentT { .. } => PreparedData::raw(data),
        }
    }

    /// Joint log density of `data` under `F_i[θ]`.
    pub fn log_likelihood(&self, theta: &ParamVector, data: &Dataset) -> Result<f64> {
        let d = self.distribution(theta)?;
        Ok(self.prepare(data).log_likelihood(&d))
    }

    /// Rough data-based parameter values used to start a mode search.
    /// Fixed components take their fixed value.
    pub(crate) fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let mean = data.mean();
        let var = {
            let v = data.variance();
            if v > 0.0 { v } else { mean.abs().max(1.0) }
        };
        let positive = data.values().iter().all(|&v| v > 0.0);
        let mut guess = match (self.kind, self.parametrization) {
            (FamilyKind::UniformLocation { .. }, _) => {
                let v = data.values();
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                vec![0.5 * (lo + hi)]
            }
            (FamilyKind::LogNormal | FamilyKind::Gamma, Parametrization::MeanVariance) => {
                if positive { vec![mean, var] } else { vec![1.0, 1.0] }
            }
            (_, Parametrization::MeanVariance) => vec![mean, var],
            (FamilyKind::Normal, _) => vec![mean, var.sqrt()],
            (FamilyKind::StudentT { dof }, _) => {
                let s = if dof > 2.0 { (var * (dof - 2.0) / dof).sqrt() } else { var.sqrt() };
                vec![mean, s]
            }
            (FamilyKind::LogNormal, _) => {
                if positive {
                    let logs = Dataset::new(data.values().iter().map(|v| v.ln()).collect()).expect("finite logs");
                    let lv = logs.variance();
                    vec![logs.mean(), if lv > 0.0 { lv.sqrt() } else { 1.0 }]
                } else {
                    vec![0.0, 1.0]
                }
            }
            (FamilyKind::Gamma, _) => {
                if positive { vec![mean * mean / var, var / mean] } else { vec![1.0, 1.0] }
            }
        };
        for (g, f) in guess.iter_mut().zip(&self.fixed) {
            if let Some(v) = f {
                *g = *v;
            }
        }
        guess
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quadrature::integrate;
    use proptest::prelude::*;

    fn all_families() -> Vec<FamilySpec> {
        vec![
            FamilySpec::normal(),
            FamilySpec::lognormal(),
            FamilySpec::gamma(),
            FamilySpec::uniform_location(1.5).unwrap(),
            FamilySpec::student_t(4.0).unwrap(),
        ]
    }

    #[test]
    fn log_density_examples() {
        let n = FamilySpec::normal();
        let th = n.params(&[0.0, 1.0]).unwrap();
        assert!((n.log_density(&th, 0.0).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-12);

        let u = FamilySpec::uniform_location(1.0).unwrap();
        let th = u.params(&[0.0]).unwrap();
        assert!((u.log_density(&th, 0.5).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(u.log_density(&th, 1.5).unwrap(), f64::NEG_INFINITY);

        let g = FamilySpec::gamma();
        let th = g.params(&[1.0, 2.0]).unwrap();
        let expected = (0.5 * (-1.5f64).exp()).ln();
        assert!((g.log_density(&th, 3.0).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn cdf_and_quantile_examples() {
        let n = FamilySpec::normal();
        assert_eq!(n.quantile(&n.params(&[0.0, 1.0]).unwrap(), 0.5).unwrap(), 0.0);
        let u = FamilySpec::uniform_location(1.0).unwrap();
        assert!((u.cdf(&u.params(&[0.0]).unwrap(), 0.5).unwrap() - 0.75).abs() < 1e-15);
        let l = FamilySpec::lognormal();
        assert!((l.cdf(&l.params(&[0.0, 1.0]).unwrap(), 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantile_rejects_bad_probability() {
        let n = FamilySpec::normal();
        let th = n.params(&[0.0, 1.0]).unwrap();
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(n.quantile(&th, p), Err(Error::ProbabilityDomain(_))));
        }
    }

    #[test]
    fn out_of_bounds_parameters_rejected() {
        let g = FamilySpec::gamma();
        assert!(matches!(g.params(&[-1.0, 2.0]), Err(Error::ParameterDomain { .. })));
        assert!(matches!(g.params(&[1.0]), Err(Error::ParameterCount { .. })));
        let n = FamilySpec::normal();
        assert!(matches!(n.params(&[0.0, 0.0]), Err(Error::ParameterDomain { .. })));
    }

    #[test]
    fn moment_examples() {
        let g = FamilySpec::gamma();
        let th = g.moments_to_params(2.0, 4.0).unwrap();
        assert!((th.get("shape").unwrap() - 1.0).abs() < 1e-15);
        assert!((th.get("scale").unwrap() - 2.0).abs() < 1e-15);

        let n = FamilySpec::normal();
        let th = n.moments_to_params(3.0, 4.0).unwrap();
        assert_eq!(th.values(), &[3.0, 2.0]);

        let l = FamilySpec::lognormal();
        let th = l.moments_to_params(1.0, 1e-8).unwrap();
        assert!(th.get("sdlog").unwrap() < 1e-3);
        assert!(th.get("meanlog").unwrap().abs() < 1e-3);

        assert!(matches!(g.moments_to_params(-1.0, 1.0), Err(Error::MomentDomain { .. })));
        assert!(matches!(l.moments_to_params(0.0, 1.0), Err(Error::MomentDomain { .. })));
        let t = FamilySpec::student_t(2.0).unwrap();
        assert!(matches!(t.moments_to_params(0.0, 1.0), Err(Error::MomentDomain { .. })));
        let u = FamilySpec::uniform_location(1.0).unwrap();
        assert!(u.moments_to_params(0.3, 1.0 / 3.0).is_ok());
        assert!(matches!(u.moments_to_params(0.3, 1.0), Err(Error::MomentDomain { .. })));
    }

    #[test]
    fn student_t_variance_undefined_for_low_dof() {
        let t = FamilySpec::student_t(2.0).unwrap();
        let th = t.params(&[0.0, 1.0]).unwrap();
        assert!(matches!(t.params_to_moments(&th), Err(Error::UndefinedQuantity { .. })));
    }

    #[test]
    fn mean_variance_parametrization_unavailable_for_uniform() {
        let u = FamilySpec::uniform_location(1.0).unwrap();
        assert!(u.with_parametrization(Parametrization::MeanVariance).is_err());
    }

    #[test]
    fn sampling_examples() {
        let n = FamilySpec::normal();
        let th = n.params(&[0.0, 1.0]).unwrap();
        let d = n.sample(&th, 100_000, 42).unwrap();
        assert!(d.mean().abs() < 0.02);

        for f in all_families() {
            let th = f.params(&f.initial_guess(&Dataset::new(vec![1.0, 2.0, 3.0]).unwrap())).unwrap();
            let a = f.sample(&th, 1, 9).unwrap();
            let b = f.sample(&th, 1, 9).unwrap();
            assert_eq!(a.values()[0].to_bits(), b.values()[0].to_bits());
        }

        let u = FamilySpec::uniform_location(1.0).unwrap();
        let d = u.sample(&u.params(&[0.0]).unwrap(), 10_000, 3).unwrap();
        assert!(d.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN]).is_err());
        assert!(Dataset::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn prepared_likelihood_matches_pointwise_sum() {
        let data = Dataset::new(vec![0.3, 1.2, 2.5, 0.9, 4.1]).unwrap();
        let cases: Vec<(FamilySpec, Vec<f64>)> = vec![
            (FamilySpec::normal(), vec![1.0, 1.3]),
            (FamilySpec::lognormal(), vec![0.1, 0.8]),
            (FamilySpec::gamma(), vec![1.7, 1.1]),
            (FamilySpec::gamma().with_parametrization(Parametrization::MeanVariance).unwrap(), vec![1.7, 1.1]),
            (FamilySpec::uniform_location(2.5).unwrap(), vec![2.0]),
            (FamilySpec::student_t(3.0).unwrap(), vec![1.0, 0.7]),
        ];
        for (f, v) in cases {
            let th = f.params(&v).unwrap();
            let direct: f64 = data.values().iter().map(|&y| f.log_density(&th, y).unwrap()).sum();
            let fast = f.log_likelihood(&th, &data).unwrap();
            assert!((direct - fast).abs() < 1e-10 * (1.0 + direct.abs()), "{}: {direct} vs {fast}", f.id());
        }
    }

    fn family_and_theta() -> impl Strategy<Value = (FamilySpec, Vec<f64>)> {
        prop_oneof![
            (-5.0..5.0f64, 0.2..4.0f64).prop_map(|(a, b)| (FamilySpec::normal(), vec![a, b])),
            (-1.0..1.0f64, 0.1..1.2f64).prop_map(|(a, b)| (FamilySpec::lognormal(), vec![a, b])),
            (0.8..20.0f64, 0.2..5.0f64).prop_map(|(a, b)| (FamilySpec::gamma(), vec![a, b])),
            (-5.0..5.0f64, 0.1..3.0f64)
                .prop_map(|(a, w)| (FamilySpec::uniform_location(w).unwrap(), vec![a])),
            (-5.0..5.0f64, 0.2..3.0f64, 1.0..30.0f64)
                .prop_map(|(a, b, nu)| (FamilySpec::student_t(nu).unwrap(), vec![a, b])),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quantile_inverts_cdf((f, v) in family_and_theta(), u in 0.02..0.98f64) {
            let th = f.params(&v).unwrap();
            let d = f.distribution(&th).unwrap();
            // A support-interior point that is not deep in a tail.
            let x = d.quantile(u);
            let p = d.cdf(x);
            let back = d.quantile(p);
            prop_assert!((back - x).abs() <= 1e-8 * (1.0 + x.abs()), "{} {:?}: x={} back={}", f.id(), v, x, back);
        }

        #[test]
        fn density_integrates_to_one((f, v) in family_and_theta()) {
            let th = f.params(&v).unwrap();
            let d = f.distribution(&th).unwrap();
            let (lo, hi) = d.support();
            let r = integrate(|x| d.pdf(x), lo, hi, 1e-10, 1e-10, 2000);
            prop_assert!((r.value - 1.0).abs() < 1e-6, "{} {:?}: {}", f.id(), v, r.value);
        }

        #[test]
        fn moment_round_trip((f, v) in family_and_theta()) {
            let th = f.params(&v).unwrap();
            if let Ok((m, var)) = f.params_to_moments(&th) {
                let back = f.moments_to_params(m, var).unwrap();
                let (m2, var2) = f.params_to_moments(&back).unwrap();
                prop_assert!((m2 - m).abs() <= 1e-10 * (1.0 + m.abs()));
                prop_assert!((var2 - var).abs() <= 1e-10 * (1.0 + var.abs()));
            }
        }

        #[test]
        fn sampling_is_deterministic((f, v) in family_and_theta(), seed in any::<u64>()) {
            let th = f.params(&v).unwrap();
            let a = f.sample(&th, 16, seed).unwrap();
            let b = f.sample(&th, 16, seed).unwrap();
            let bits = |d: &Dataset| d.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a), bits(&b));
        }
    }
}
