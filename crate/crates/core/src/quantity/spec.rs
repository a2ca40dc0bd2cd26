use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::families::{FamilySpec, ParamVector, SamplingDistribution};
use crate::numeric::{quadrature, std_normal_cdf};

/// Function `q` in `Q = E[q(Y)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    Identity,
    Square,
    Abs,
    Log,
}

impl Integrand {
    pub fn key(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Square => "square",
            Self::Abs => "abs",
            Self::Log => "log",
        }
    }

    fn eval(self, y: f64) -> f64 {
        match self {
            Self::Identity => y,
            Self::Square => y * y,
            Self::Abs => y.abs(),
            Self::Log => y.ln(),
        }
    }
}

impl FromStr for Integrand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "square" => Ok(Self::Square),
            "abs" => Ok(Self::Abs),
            "log" => Ok(Self::Log),
            _ => Err(Error::InvalidArgument(format!("unknown integrand `{s}`"))),
        }
    }
}

/// A population quantity, as a functional of the sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantitySpec {
    Mean,
    Variance,
    Sd,
    Quantile(f64),
    /// `P(Y > threshold)`.
    TailProb(f64),
    ExpectationOf(Integrand),
}

impl QuantitySpec {
    pub fn quantile(p: f64) -> Result<Self> {
        Self::Quantile(p).validated()
    }

    pub fn tail_prob(threshold: f64) -> Result<Self> {
        Self::TailProb(threshold).validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Quantile(p) if !(p > 0.0 && p < 1.0) => Err(Error::ProbabilityDomain(p)),
            Self::TailProb(t) if !t.is_finite() => {
                Err(Error::InvalidArgument(format!("tail threshold must be finite, got {t}")))
            }
            q => Ok(q),
        }
    }
}

impl fmt::Display for QuantitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mean => write!(f, "mean"),
            Self::Variance => write!(f, "variance"),
            Self::Sd => write!(f, "sd"),
            Self::Quantile(p) => write!(f, "quantile:{p}"),
            Self::TailProb(t) => write!(f, "tailprob:{t}"),
            Self::ExpectationOf(g) => write!(f, "expectation:{}", g.key()),
        }
    }
}

impl FromStr for QuantitySpec {
    type Err = Error;

    /// `mean`, `variance`, `sd`, `quantile:<p>`, `tailprob:<t>` or `expectation:<integrand>`.
    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| {
            v.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number `{v}` in quantity `{s}`")))
        };
        match s.trim().split_once(':') {
            None => match s.trim() {
                "mean" => Ok(Self::Mean),
                "variance" => Ok(Self::Variance),
                "sd" => Ok(Self::Sd),
                _ => Err(Error::InvalidArgument(format!("unknown quantity `{s}`"))),
            },
            Some(("quantile", v)) => Self::quantile(num(v)?),
            Some(("tailprob", v)) => Self::tail_prob(num(v)?),
            Some(("expectation", v)) => Ok(Self::ExpectationOf(v.trim().parse()?)),
            Some(_) => Err(Error::InvalidArgument(format!("unknown quantity `{s}`"))),
        }
    }
}

/// Value of `q` for `F[θ]`.
pub fn quantity_value(family: &FamilySpec, theta: &ParamVector, q: QuantitySpec) -> Result<f64> {
    let dist = family.distribution(theta)?;
    quantity_of(family.id(), &dist, q.validated()?)
}

pub(crate) fn quantity_of(family_id: &str, dist: &SamplingDistribution, q: QuantitySpec) -> Result<f64> {
    let undefined = || Error::UndefinedQuantity { family: family_id.to_string(), quantity: q.to_string() };
    match q {
        QuantitySpec::Mean => dist.mean().ok_or_else(undefined),
        QuantitySpec::Variance => dist.variance().ok_or_else(undefined),
        QuantitySpec::Sd => dist.variance().map(f64::sqrt).ok_or_else(undefined),
        QuantitySpec::Quantile(p) => Ok(dist.quantile(p)),
        QuantitySpec::TailProb(t) => Ok(dist.sf(t)),
        QuantitySpec::ExpectationOf(g) => expectation(dist, g).ok_or_else(undefined),
    }
}

fn expectation(dist: &SamplingDistribution, g: Integrand) -> Option<f64> {
    let (lo, hi) = dist.support();
    match g {
        Integrand::Identity => return dist.mean(),
        Integrand::Square => return Some(dist.variance()? + dist.mean()?.powi(2)),
        Integrand::Log if lo < 0.0 => return None,
        Integrand::Log => {
            if let Some(v) = dist.mean_log() {
                return Some(v);
            }
        }
        Integrand::Abs if lo >= 0.0 => return dist.mean(),
        Integrand::Abs => match *dist {
            SamplingDistribution::Normal { mu, sigma } => {
                let z = mu / sigma;
                let folded = sigma * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * z * z).exp()
                    + mu * (1.0 - 2.0 * std_normal_cdf(-z));
                return Some(folded);
            }
            SamplingDistribution::StudentT { dof, .. } if dof <= 1.0 => return None,
            _ => {}
        },
    }
    // Remaining cases: numerical integration of q against the density, split
    // at the median so each piece is monotone-tailed.
    let m = dist.quantile(0.5);
    let f = |y: f64| {
        let d = dist.pdf(y);
        if d == 0.0 { 0.0 } else { g.eval(y) * d }
    };
    let a = quadrature::integrate(f, lo, m, 1e-13, 1e-11, MAX_SUBINTERVALS);
    let b = quadrature::integrate(f, m, hi, 1e-13, 1e-11, MAX_SUBINTERVALS);
    let v = a.value + b.value;
    v.is_finite().then_some(v)
}

/// Cap on adaptive Gauss–Kronrod subintervals per integral.
const MAX_SUBINTERVALS: usize = 64;
