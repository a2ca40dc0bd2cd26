use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Dataset, FamilySpec, ParamVector, SamplingDistribution};
use crate::inference::ConditionalPosterior;
use crate::numeric::{std_normal_cdf, std_normal_sf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatistic {
    /// The single observation itself; needs `n = 1`.
    ObsValue,
    /// The sample mean, with a normal null built from the family's moments.
    SampleMean,
}

impl TestStatistic {
    pub fn key(self) -> &'static str {
        match self {
            Self::ObsValue => "obs_value",
            Self::SampleMean => "sample_mean",
        }
    }
}

impl fmt::Display for TestStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for TestStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obs_value" => Ok(Self::ObsValue),
            "sample_mean" => Ok(Self::SampleMean),
            _ => Err(Error::InvalidArgument(format!("unknown test statistic `{s}`"))),
        }
    }
}

fn two_sided(lower: f64, upper: f64) -> f64 {
    (2.0 * lower.min(upper)).min(1.0)
}

fn pvalue_at(family_id: &str, dist: &SamplingDistribution, data: &Dataset, statistic: TestStatistic) -> Result<f64> {
    let undefined = |reason: &str| Error::UndefinedStatistic {
        family: family_id.to_string(),
        statistic: statistic.key().to_string(),
        reason: reason.to_string(),
    };
    match statistic {
        TestStatistic::ObsValue => {
            if data.len() != 1 {
                return Err(undefined("the observation-value statistic needs exactly one observation"));
            }
            let y = data.values()[0];
            Ok(two_sided(dist.cdf(y), dist.sf(y)))
        }
        TestStatistic::SampleMean => {
            let mean = dist.mean().ok_or_else(|| undefined("the null mean does not exist"))?;
            let var = dist.variance().ok_or_else(|| undefined("the null variance does not exist"))?;
            let z = (data.mean() - mean) / (var / data.len() as f64).sqrt();
            Ok(two_sided(std_normal_cdf(z), std_normal_sf(z)))
        }
    }
}

/// Two-sided P value `2·min(F₀(t), 1 − F₀(t))` of the statistic under `F[θ₀]`.
pub fn pointwise_pvalue(family: &FamilySpec, theta0: &ParamVector, data: &Dataset, statistic: TestStatistic) -> Result<f64> {
    let dist = family.distribution(theta0)?;
    pvalue_at(family.id(), &dist, data, statistic)
}

/// `λ = Σ α·w / Σ w`.
pub fn lambda(alphas: &[f64], weights: &[f64]) -> Result<f64> {
    if alphas.len() != weights.len() || alphas.is_empty() {
        return Err(Error::InvalidArgument("need one weight per P value".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidArgument("P values must lie in [0, 1]".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeight);
    }
    let num: f64 = alphas.iter().zip(weights).map(|(a, w)| a * w).sum();
    Ok((num / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueNode {
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueReport {
    pub family: String,
    pub statistic: TestStatistic,
    pub lambda: f64,
    pub nodes: Vec<PValueNode>,
}

/// Posterior-weighted average of the pointwise P values over the posterior nodes.
pub fn weighted_pvalue(
    family: &FamilySpec,
    posterior: &ConditionalPosterior,
    data: &Dataset,
    statistic: TestStatistic,
) -> Result<PValueReport> {
    let thetas: Vec<Vec<f64>> = posterior.iter().map(|(t, _)| t.to_vec()).collect();
    report(family, thetas, posterior.masses().to_vec(), data, statistic)
}

/// As [`weighted_pvalue`] with an arbitrary nonnegative weight per parameter value.
pub fn weighted_pvalue_with(
    family: &FamilySpec,
    thetas: &[ParamVector],
    weights: &[f64],
    data: &Dataset,
    statistic: TestStatistic,
) -> Result<PValueReport> {
    for t in thetas {
        family.distribution(t)?;
    }
    report(family, thetas.iter().map(|t| t.values().to_vec()).collect(), weights.to_vec(), data, statistic)
}

fn report(
    family: &FamilySpec,
    thetas: Vec<Vec<f64>>,
    weights: Vec<f64>,
    data: &Dataset,
    statistic: TestStatistic,
) -> Result<PValueReport> {
    let alphas = thetas
        .iter()
        .map(|t| pvalue_at(family.id(), &family.resolve_unchecked(t), data, statistic))
        .collect::<Result<Vec<f64>>>()?;
    let lambda = lambda(&alphas, &weights)?;
    let nodes = thetas
        .into_iter()
        .zip(alphas)
        .zip(weights)
        .map(|((theta, alpha), weight)| PValueNode { theta, alpha, weight })
        .collect();
    Ok(PValueReport { family: family.id().to_string(), statistic, lambda, nodes })
}

/// Facts about one observation from a uniform with known half-width `a`,
/// tested against `θ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformDemo {
    pub half_width: f64,
    pub y: f64,
    pub prior_null_prob: f64,
    pub p_value: f64,
    pub null_density: f64,
    pub max_density: f64,
    pub density_is_max: bool,
    /// `y` lies outside the null support, so the null is excluded outright.
    pub outside_support: bool,
    /// `(θ, f(y | θ) / f(y | 0))` over `θ ∈ [−2, 2]`.
    pub likelihood_ratios: Vec<(f64, f64)>,
    pub max_likelihood_ratio: f64,
}

const DEMO_GRID: usize = 401;

pub fn uniform_demo(a: f64, y: f64, prior_null_prob: f64) -> Result<UniformDemo> {
    if !(prior_null_prob > 0.0 && prior_null_prob < 1.0) {
        return Err(Error::ProbabilityDomain(prior_null_prob));
    }
    if !y.is_finite() {
        return Err(Error::InvalidData(format!("observation must be finite, got {y}")));
    }
    let family = FamilySpec::uniform_location(a)?;
    let null = family.params(&[0.0])?;
    let max_density = 1.0 / (2.0 * a);
    let null_density = family.log_density(&null, y)?.exp();
    let outside_support = null_density == 0.0;
    let data = Dataset::new(vec![y])?;
    let p_value = if outside_support { 0.0 } else { pointwise_pvalue(&family, &null, &data, TestStatistic::ObsValue)? };
    let mut likelihood_ratios = Vec::new();
    if !outside_support {
        for k in 0..DEMO_GRID {
            let theta = -2.0 + 4.0 * k as f64 / (DEMO_GRID - 1) as f64;
            let l = family.log_density(&family.params(&[theta])?, y)?.exp();
            likelihood_ratios.push((theta, l / null_density));
        }
    }
    let max_likelihood_ratio = likelihood_ratios.iter().map(|r| r.1).fold(f64::NAN, f64::max);
    Ok(UniformDemo {
        half_width: a,
        y,
        prior_null_prob,
        p_value,
        null_density,
        max_density,
        density_is_max: null_density == max_density,
        outside_support,
        likelihood_ratios,
        max_likelihood_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_examples() {
        let u = FamilySpec::uniform_location(1.0).unwrap();
        let th = u.params(&[0.0]).unwrap();
        let p = pointwise_pvalue(&u, &th, &Dataset::new(vec![1.0 - 1e-7]).unwrap(), TestStatistic::ObsValue).unwrap();
        assert!((p - 1e-7).abs() < 1e-15 && p < 1e-6);
        let p = pointwise_pvalue(&u, &th, &Dataset::new(vec![0.0]).unwrap(), TestStatistic::ObsValue).unwrap();
        assert_eq!(p, 1.0);
        let n = FamilySpec::normal();
        let th = n.params(&[0.0, 1.0]).unwrap();
        let p = pointwise_pvalue(&n, &th, &Dataset::new(vec![1.96]).unwrap(), TestStatistic::ObsValue).unwrap();
        assert!((p - 0.049_995_790_296_440_94).abs() < 1e-14);
        let two = Dataset::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            pointwise_pvalue(&n, &th, &two, TestStatistic::ObsValue),
            Err(Error::UndefinedStatistic { .. })
        ));
        let t = FamilySpec::student_t(2.0).unwrap();
        assert!(pointwise_pvalue(&t, &t.params(&[0.0, 1.0]).unwrap(), &two, TestStatistic::SampleMean).is_err());
    }

    #[test]
    fn pointwise_is_monotone_away_from_the_median() {
        let n = FamilySpec::normal();
        let th = n.params(&[1.0, 2.0]).unwrap();
        let p = |y: f64| pointwise_pvalue(&n, &th, &Dataset::new(vec![y]).unwrap(), TestStatistic::ObsValue).unwrap();
        let mut last = p(1.0);
        assert_eq!(last, 1.0);
        for k in 1..200 {
            let up = p(1.0 + 0.05 * k as f64);
            let down = p(1.0 - 0.05 * k as f64);
            assert!(up <= last && (up - down).abs() < 1e-15);
            last = up;
        }
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda(&[0.3; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.3);
        assert!((lambda(&[0.1, 0.5], &[1.0, 3.0]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(lambda(&[0.1, 0.5], &[0.0, 0.0]), Err(Error::DegenerateWeight));
    }

    #[test]
    fn report_is_consistent_with_its_table() {
        let n = FamilySpec::normal();
        let thetas: Vec<_> = (0..5).map(|k| n.params(&[0.2 * k as f64, 1.0]).unwrap()).collect();
        let d = Dataset::new(vec![0.3, 0.9, -0.4]).unwrap();
        let r = weighted_pvalue_with(&n, &thetas, &[1.0, 2.0, 0.5, 0.0, 4.0], &d, TestStatistic::SampleMean).unwrap();
        let num: f64 = r.nodes.iter().map(|x| x.alpha * x.weight).sum();
        let den: f64 = r.nodes.iter().map(|x| x.weight).sum();
        assert!((r.lambda - num / den).abs() < 1e-12);
    }

    #[test]
    fn uniform_demonstration() {
        let d = uniform_demo(1.0, 1.0 - 1e-7, 0.5).unwrap();
        assert!((d.p_value - 1e-7).abs() < 1e-15);
        assert_eq!(d.null_density, 0.5);
        assert!(d.density_is_max);
        assert!(d.max_likelihood_ratio <= 1.0);
        let d = uniform_demo(1.0, 0.0, 0.5).unwrap();
        assert_eq!((d.p_value, d.null_density), (1.0, 0.5));
        let d = uniform_demo(1.0, 0.5, 0.5).unwrap();
        assert_eq!(d.max_likelihood_ratio, 1.0);
        assert_eq!(d.likelihood_ratios.len(), 401);
        let d = uniform_demo(1.0, 1.5, 0.5).unwrap();
        assert!(d.outside_support && d.p_value == 0.0);
    }
}
