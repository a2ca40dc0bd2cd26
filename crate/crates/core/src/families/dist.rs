use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, StudentT, Uniform};

use crate::numeric::{
    self, expand_lower, expand_upper, invert_monotone, std_normal_cdf, std_normal_ln_pdf, std_normal_quantile,
    std_normal_sf, student_t_cdf, student_t_ln_pdf, student_t_sf,
};

/// A single, fully specified sampling distribution `F_i[θ]` in its natural
/// parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingDistribution {
    Normal { mu: f64, sigma: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { center: f64, half_width: f64 },
    StudentT { location: f64, scale: f64, dof: f64 },
}

impl SamplingDistribution {
    /// Closed support interval `(lo, hi)`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Normal { .. } | Self::StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::LogNormal { .. } | Self::Gamma { .. } => (0.0, f64::INFINITY),
            Self::Uniform { center, half_width } => (center - half_width, center + half_width),
        }
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => std_normal_ln_pdf((x - mu) / sigma) - sigma.ln(),
            Self::LogNormal { meanlog, sdlog } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                std_normal_ln_pdf((lx - meanlog) / sdlog) - sdlog.ln() - lx
            }
            Self::Gamma { shape, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => -scale.ln(),
                        _ => f64::NEG_INFINITY,
                    };
                }
                (shape - 1.0) * x.ln() - x / scale - numeric::ln_gamma(shape) - shape * scale.ln()
            }
            Self::Uniform { center, half_width } => {
                if x >= center - half_width && x <= center + half_width {
                    -(2.0 * half_width).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::StudentT { location, scale, dof } => student_t_ln_pdf((x - location) / scale, dof) - scale.ln(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Self::LogNormal { meanlog, sdlog } => {
                if x <= 0.0 { 0.0 } else { std_normal_cdf((x.ln() - meanlog) / sdlog) }
            }
            Self::Gamma { shape, scale } => numeric::gamma_p(shape, x / scale),
            Self::Uniform { center, half_width } => (((x - center) + half_width) / (2.0 * half_width)).clamp(0.0, 1.0),
            Self::StudentT { location, scale, dof } => student_t_cdf((x - location) / scale, dof),
        }
    }

    /// Survival function `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => std_normal_sf((x - mu) / sigma),
            Self::LogNormal { meanlog, sdlog } => {
                if x <= 0.0 { 1.0 } else { std_normal_sf((x.ln() - meanlog) / sdlog) }
            }
            Self::Gamma { shape, scale } => numeric::gamma_q(shape, x / scale),
            Self::Uniform { center, half_width } => (((center + half_width) - x) / (2.0 * half_width)).clamp(0.0, 1.0),
            Self::StudentT { location, scale, dof } => student_t_sf((x - location) / scale, dof),
        }
    }

    /// Quantile for `p` in `(0, 1)`; the caller validates `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => mu + sigma * std_normal_quantile(p),
            Self::LogNormal { meanlog, sdlog } => (meanlog + sdlog * std_normal_quantile(p)).exp(),
            Self::Gamma { shape, scale } => scale * gamma_standard_quantile(shape, p),
            Self::Uniform { center, half_width } => center + half_width * (2.0 * p - 1.0),
            Self::StudentT { location, scale, dof } => location + scale * student_t_quantile(dof, p),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            Self::Normal { mu, .. } => Some(mu),
            Self::LogNormal { meanlog, sdlog } => Some((meanlog + 0.5 * sdlog * sdlog).exp()),
            Self::Gamma { shape, scale } => Some(shape * scale),
            Self::Uniform { center, .. } => Some(center),
            Self::StudentT { location, dof, .. } => (dof > 1.0).then_some(location),
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match *self {
            Self::Normal { sigma, .. } => Some(sigma * sigma),
            Self::LogNormal { meanlog, sdlog } => {
                let s2 = sdlog * sdlog;
                Some(s2.exp_m1() * (2.0 * meanlog + s2).exp())
            }
            Self::Gamma { shape, scale } => Some(shape * scale * scale),
            Self::Uniform { half_width, .. } => Some(half_width * half_width / 3.0),
            Self::StudentT { scale, dof, .. } => (dof > 2.0).then(|| scale * scale * dof / (dof - 2.0)),
        }
    }

    /// `E[ln Y]` where it has a closed form.
    pub(crate) fn mean_log(&self) -> Option<f64> {
        match *self {
            Self::LogNormal { meanlog, .. } => Some(meanlog),
            Self::Gamma { shape, scale } => Some(numeric::digamma(shape) + scale.ln()),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        match *self {
            Self::Normal { mu, sigma } => {
                let d = Normal::new(mu, sigma).expect("validated parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Self::LogNormal { meanlog, sdlog } => {
                let d = LogNormal::new(meanlog, sdlog).expect("validated parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Self::Gamma { shape, scale } => {
                let d = Gamma::new(shape, scale).expect("validated parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Self::Uniform { center, half_width } => {
                let d = Uniform::new_inclusive(center - half_width, center + half_width).expect("validated parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Self::StudentT { location, scale, dof } => {
                let d = StudentT::new(dof).expect("validated parameters");
                (0..n).map(|_| location + scale * d.sample(rng)).collect()
            }
        }
    }
}

fn gamma_standard_quantile(shape: f64, p: f64) -> f64 {
    // Wilson–Hilferty starting point.
    let z = std_normal_quantile(p);
    let c = 1.0 / (9.0 * shape);
    let wh = shape * (1.0 - c + z * c.sqrt()).powi(3);
    let x0 = if wh.is_finite() && wh > 0.0 { wh } else { shape };
    let ln_norm = numeric::ln_gamma(shape);
    let pdf = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            ((shape - 1.0) * x.ln() - x - ln_norm).exp()
        }
    };
    if p <= 0.5 {
        let f = |x: f64| numeric::gamma_p(shape, x);
        let hi = expand_upper(&f, p, x0.max(1.0));
        invert_monotone(f, pdf, p, 0.0, hi, x0)
    } else {
        // Work with the upper tail to keep precision for p near 1.
        let q = 1.0 - p;
        let f = |x: f64| -numeric::gamma_q(shape, x);
        let hi = expand_upper(&f, -q, x0.max(1.0));
        invert_monotone(f, pdf, -q, 0.0, hi, x0)
    }
}

fn student_t_quantile(dof: f64, p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let x0 = std_normal_quantile(p);
    let pdf = move |t: f64| student_t_ln_pdf(t, dof).exp();
    if p < 0.5 {
        let f = |t: f64| student_t_cdf(t, dof);
        let lo = expand_lower(&f, p, x0.min(-1.0));
        invert_monotone(f, pdf, p, lo, 0.0, x0)
    } else {
        let q = 1.0 - p;
        let f = |t: f64| -student_t_sf(t, dof);
        let hi = expand_upper(&f, -q, x0.max(1.0));
        invert_monotone(f, pdf, -q, 0.0, hi, x0)
    }
}
