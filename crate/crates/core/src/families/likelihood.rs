//! Data summaries that make a log-likelihood evaluation O(1) per parameter
//! value for the families that admit sufficient statistics.

use super::{Dataset, SamplingDistribution};
use crate::numeric::{self, LN_SQRT_2PI};

#[derive(Debug, Clone)]
pub(crate) enum PreparedData {
    /// n, mean, centred sum of squares.
    Normal { n: f64, mean: f64, ss: f64 },
    /// Same statistics on `ln y`; `None` when any observation is nonpositive.
    LogNormal(Option<LogStats>),
    Gamma(Option<GammaStats>),
    Uniform { n: f64, min: f64, max: f64 },
    Raw(Vec<f64>),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogStats {
    n: f64,
    sum_log: f64,
    mean_log: f64,
    ss_log: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GammaStats {
    n: f64,
    sum: f64,
    sum_log: f64,
}

fn centred(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, f64) {
    let n = values.clone().count() as f64;
    let sum: f64 = values.clone().sum();
    let mean = sum / n;
    let ss = values.map(|v| (v - mean) * (v - mean)).sum();
    (n, mean, ss)
}

impl PreparedData {
    pub(crate) fn normal(data: &Dataset) -> Self {
        let (n, mean, ss) = centred(data.values().iter().copied());
        Self::Normal { n, mean, ss }
    }

    pub(crate) fn lognormal(data: &Dataset) -> Self {
        if data.values().iter().any(|&v| v <= 0.0) {
            return Self::LogNormal(None);
        }
        let logs = data.values().iter().map(|v| v.ln());
        let (n, mean_log, ss_log) = centred(logs.clone());
        Self::LogNormal(Some(LogStats { n, sum_log: logs.sum(), mean_log, ss_log }))
    }

    pub(crate) fn gamma(data: &Dataset) -> Self {
        if data.values().iter().any(|&v| v <= 0.0) {
            return Self::Gamma(None);
        }
        let v = data.values();
        Self::Gamma(Some(GammaStats {
            n: v.len() as f64,
            sum: v.iter().sum(),
            sum_log: v.iter().map(|x| x.ln()).sum(),
        }))
    }

    pub(crate) fn uniform(data: &Dataset) -> Self {
        let v = data.values();
        Self::Uniform {
            n: v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub(crate) fn raw(data: &Dataset) -> Self {
        Self::Raw(data.values().to_vec())
    }

    /// Joint log density of the whole dataset under `dist`.
    pub(crate) fn log_likelihood(&self, dist: &SamplingDistribution) -> f64 {
        match (self, dist) {
            (Self::Normal { n, mean, ss }, SamplingDistribution::Normal { mu, sigma }) => {
                let d = mean - mu;
                -n * (sigma.ln() + LN_SQRT_2PI) - (ss + n * d * d) / (2.0 * sigma * sigma)
            }
            (Self::LogNormal(stats), SamplingDistribution::LogNormal { meanlog, sdlog }) => match stats {
                None => f64::NEG_INFINITY,
                Some(s) => {
                    let d = s.mean_log - meanlog;
                    -s.sum_log - s.n * (sdlog.ln() + LN_SQRT_2PI) - (s.ss_log + s.n * d * d) / (2.0 * sdlog * sdlog)
                }
            },
            (Self::Gamma(stats), SamplingDistribution::Gamma { shape, scale }) => match stats {
                None => f64::NEG_INFINITY,
                Some(s) => {
                    (shape - 1.0) * s.sum_log - s.sum / scale - s.n * (numeric::ln_gamma(*shape) + shape * scale.ln())
                }
            },
            (Self::Uniform { n, min, max }, SamplingDistribution::Uniform { center, half_width }) => {
                // Same expressions as `likelihood_support`, so its endpoints are admitted exactly.
                if *center >= max - half_width && *center <= min + half_width {
                    -n * (2.0 * half_width).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            (Self::Raw(values), SamplingDistribution::StudentT { location, scale, dof }) => {
                let n = values.len() as f64;
                let norm = crate::numeric::student_t_ln_pdf(0.0, *dof) - scale.ln();
                let inv = 1.0 / (scale * scale * dof);
                let tail: f64 = values
                    .iter()
                    .map(|&y| {
                        let d = y - location;
                        (d * d * inv).ln_1p()
                    })
                    .sum();
                n * norm - 0.5 * (dof + 1.0) * tail
            }
            (Self::Raw(values), d) => values.iter().map(|&y| d.ln_pdf(y)).sum(),
            (_, d) => panic!("prepared data does not match distribution {d:?}"),
        }
    }

    /// Interval of the uniform centre over which the likelihood is positive.
    pub(crate) fn uniform_center_support(&self, half_width: f64) -> Option<(f64, f64)> {
        match self {
            Self::Uniform { min, max, .. } => Some((max - half_width, min + half_width)),
            _ => None,
        }
    }
}
