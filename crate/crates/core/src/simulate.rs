//! Coverage and weight-concentration experiments with known true distributions,
//! including ones outside the model.
//!
//! Every replicate draws its data from its own seed, derived from the
//! experiment seed and the replicate index, so parallel and sequential runs
//! produce identical tables.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::families::{Dataset, FamilySpec, ParamVector, SamplingDistribution};
use crate::inference::{FitSettings, InferenceEngine};
use crate::modelspace::PopulationSpaceModel;
use crate::numeric::{std_normal_cdf, std_normal_sf};
use crate::pipeline::analyze;
use crate::quantity::{family_quantity_posterior_with, quantity_of, Integrand, QuantitySpec, Summary};

/// Posterior predictive weights score each family on the same data that
/// fitted it, so interval coverage here is an empirical check, not a guarantee.
pub const DOUBLE_USE_NOTE: &str =
    "family weights evaluate the predictive density at the data used for fitting (the data are used twice)";

/// Default number of draws for Monte Carlo truth values.
pub const DEFAULT_ORACLE_DRAWS: usize = 10_000_000;

/// Seed for replicate `stream` of an experiment seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrueDistSpec {
    Family { family: FamilySpec, theta: ParamVector },
    NormalMixture { weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64> },
    /// With probability `fraction` a draw comes from the contaminant instead of the base.
    Contaminated { base: SamplingDistribution, fraction: f64, contaminant: SamplingDistribution },
    PointMass { value: f64 },
}

impl TrueDistSpec {
    pub fn family(family: FamilySpec, theta: ParamVector) -> Result<Self> {
        family.distribution(&theta)?;
        Ok(Self::Family { family, theta })
    }

    pub fn normal_mixture(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("normal mixture: {m}")));
        if weights.is_empty() || weights.len() != means.len() || weights.len() != sds.len() {
            return bad("weights, means and sds must be nonempty and the same length");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("weights must be positive");
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("weights must sum to 1");
        }
        if means.iter().any(|m| !m.is_finite()) || sds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("means must be finite and sds positive");
        }
        Ok(Self::NormalMixture { weights, means, sds })
    }

    pub fn contaminated(
        base: (&FamilySpec, &ParamVector),
        fraction: f64,
        contaminant: (&FamilySpec, &ParamVector),
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!("contamination fraction must lie in [0, 1), got {fraction}")));
        }
        Ok(Self::Contaminated {
            base: base.0.distribution(base.1)?,
            fraction,
            contaminant: contaminant.0.distribution(contaminant.1)?,
        })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument("point mass must be finite".into()));
        }
        Ok(Self::PointMass { value })
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = match self {
            Self::Family { family, theta } => return family.sample(theta, n, seed),
            Self::PointMass { value } => vec![*value; n],
            Self::NormalMixture { weights, means, sds } => (0..n)
                .map(|_| {
                    let k = pick(&mut rng, weights);
                    Normal::new(means[k], sds[k]).expect("validated").sample(&mut rng)
                })
                .collect(),
            Self::Contaminated { base, fraction, contaminant } => (0..n)
                .map(|_| {
                    let d = if rng.random::<f64>() < *fraction { contaminant } else { base };
                    d.sample(&mut rng, 1)[0]
                })
                .collect(),
        };
        Dataset::new(values)
    }

    /// True value of `q`, in closed form where one exists and by Monte Carlo otherwise.
    pub fn true_quantity(&self, q: QuantitySpec, oracle_draws: usize, seed: u64) -> Result<TrueValue> {
        let q = q.validated()?;
        let closed = |value| Ok(TrueValue { value, method: OracleMethod::ClosedForm, draws: 0 });
        let undefined = || Error::UndefinedQuantity { family: "truth".into(), quantity: q.to_string() };
        match self {
            Self::Family { family, theta } => closed(quantity_of("truth", &family.distribution(theta)?, q)?),
            Self::PointMass { value } => {
                let v = *value;
                closed(match q {
                    QuantitySpec::Mean | QuantitySpec::Quantile(_) => v,
                    QuantitySpec::Variance | QuantitySpec::Sd => 0.0,
                    QuantitySpec::TailProb(t) => f64::from(u8::from(v > t)),
                    QuantitySpec::ExpectationOf(Integrand::Identity) => v,
                    QuantitySpec::ExpectationOf(Integrand::Square) => v * v,
                    QuantitySpec::ExpectationOf(Integrand::Abs) => v.abs(),
                    QuantitySpec::ExpectationOf(Integrand::Log) if v > 0.0 => v.ln(),
                    QuantitySpec::ExpectationOf(Integrand::Log) => return Err(undefined()),
                })
            }
            Self::NormalMixture { weights, means, sds } => {
                let mean: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
                let second: f64 = weights.iter().zip(means).zip(sds).map(|((w, m), s)| w * (s * s + m * m)).sum();
                let cdf = |x: f64| -> f64 {
                    weights.iter().zip(means).zip(sds).map(|((w, m), s)| w * std_normal_cdf((x - m) / s)).sum()
                };
                closed(match q {
                    QuantitySpec::Mean | QuantitySpec::ExpectationOf(Integrand::Identity) => mean,
                    QuantitySpec::Variance => second - mean * mean,
                    QuantitySpec::Sd => (second - mean * mean).sqrt(),
                    QuantitySpec::ExpectationOf(Integrand::Square) => second,
                    QuantitySpec::TailProb(t) => {
                        weights.iter().zip(means).zip(sds).map(|((w, m), s)| w * std_normal_sf((t - m) / s)).sum()
                    }
                    QuantitySpec::Quantile(p) => {
                        let lo = means.iter().zip(sds).map(|(m, s)| m - 40.0 * s).fold(f64::INFINITY, f64::min);
                        let hi = means.iter().zip(sds).map(|(m, s)| m + 40.0 * s).fold(f64::NEG_INFINITY, f64::max);
                        bisect(cdf, p, lo, hi)
                    }
                    QuantitySpec::ExpectationOf(Integrand::Abs) => weights
                        .iter()
                        .zip(means)
                        .zip(sds)
                        .map(|((w, &m), &s)| {
                            let d = SamplingDistribution::Normal { mu: m, sigma: s };
                            w * quantity_of("truth", &d, q).expect("normal |y| exists")
                        })
                        .sum(),
                    QuantitySpec::ExpectationOf(Integrand::Log) => return Err(undefined()),
                })
            }
            Self::Contaminated { .. } => {
                if oracle_draws < 2 {
                    return Err(Error::InvalidArgument("Monte Carlo truth needs at least 2 draws".into()));
                }
                let mut draws = self.sample(oracle_draws, seed)?.values().to_vec();
                let value = monte_carlo(&mut draws, q).ok_or_else(undefined)?;
                Ok(TrueValue { value, method: OracleMethod::MonteCarlo, draws: oracle_draws })
            }
        }
    }
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

fn bisect<F: Fn(f64) -> f64>(cdf: F, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < p { lo = mid } else { hi = mid }
    }
    0.5 * (lo + hi)
}

fn monte_carlo(draws: &mut [f64], q: QuantitySpec) -> Option<f64> {
    let n = draws.len() as f64;
    let mean = |f: &dyn Fn(f64) -> f64| draws.iter().map(|&x| f(x)).sum::<f64>() / n;
    match q {
        QuantitySpec::Mean | QuantitySpec::ExpectationOf(Integrand::Identity) => Some(mean(&|x| x)),
        QuantitySpec::Variance | QuantitySpec::Sd => {
            let m = mean(&|x| x);
            let v = draws.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
            Some(if matches!(q, QuantitySpec::Sd) { v.sqrt() } else { v })
        }
        QuantitySpec::ExpectationOf(Integrand::Square) => Some(mean(&|x| x * x)),
        QuantitySpec::ExpectationOf(Integrand::Abs) => Some(mean(&f64::abs)),
        QuantitySpec::ExpectationOf(Integrand::Log) => {
            draws.iter().all(|&x| x > 0.0).then(|| mean(&f64::ln))
        }
        QuantitySpec::TailProb(t) => Some(draws.iter().filter(|&&x| x > t).count() as f64 / n),
        QuantitySpec::Quantile(p) => {
            let pos = p * (n - 1.0);
            let k = pos.floor() as usize;
            let (_, lo, rest) = draws.select_nth_unstable_by(k, f64::total_cmp);
            let lo = *lo;
            let hi = rest.iter().copied().fold(f64::INFINITY, f64::min);
            Some(if hi.is_finite() { lo + (pos - k as f64) * (hi - lo) } else { lo })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrueValue {
    pub value: f64,
    pub method: OracleMethod,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub quantity: QuantitySpec,
    pub truth: TrueDistSpec,
    pub n: usize,
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
    pub settings: FitSettings,
    pub oracle_draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    /// Why the replicate produced no mixture, if it did not.
    pub degenerate: Option<String>,
    pub mixture: Option<Interval>,
    /// One entry per model family; `None` when that family had no usable law.
    pub per_family: Vec<Option<Interval>>,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodCoverage {
    pub method: String,
    pub valid: usize,
    pub covered: usize,
    pub rate: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageTable {
    pub quantity: String,
    pub true_value: TrueValue,
    pub level: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub degenerate: usize,
    pub family_ids: Vec<String>,
    pub methods: Vec<MethodCoverage>,
    pub records: Vec<RepRecord>,
    pub note: &'static str,
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::DegenerateFit { .. } | Error::NoAdmissibleFamily | Error::ImpossibleFamily(_))
}

/// Replicates run in parallel when the settings ask for it; each fit inside a
/// replicate then runs sequentially.
fn split_execution(settings: &FitSettings) -> (Execution, FitSettings) {
    (settings.execution, FitSettings { execution: Execution::Sequential, ..*settings })
}

pub fn run_coverage_experiment(
    engine: &dyn InferenceEngine,
    model: &PopulationSpaceModel,
    cfg: &CoverageConfig,
) -> Result<CoverageTable> {
    let q = cfg.quantity.validated()?;
    if cfg.reps == 0 || cfg.n == 0 {
        return Err(Error::InvalidArgument("reps and n must be at least 1".into()));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {}", cfg.level)));
    }
    let truth = cfg.truth.true_quantity(q, cfg.oracle_draws, derive_seed(cfg.seed, u64::MAX))?;
    let (outer, inner) = split_execution(&cfg.settings);
    let interval = |s: Summary| Interval { lower: s.lower, upper: s.upper, covered: s.covers(truth.value) };

    let records: Vec<Result<RepRecord>> = map_indexed(outer, cfg.reps, |rep| {
        let seed = derive_seed(cfg.seed, rep as u64);
        let mut rec = RepRecord {
            rep,
            seed,
            degenerate: None,
            mixture: None,
            per_family: vec![None; model.len()],
            weights: None,
        };
        let data = cfg.truth.sample(cfg.n, seed)?;
        let analysis = match analyze(engine, model, &data, &inner) {
            Ok(a) => a,
            Err(e) if is_degenerate(&e) => {
                rec.degenerate = Some(e.to_string());
                return Ok(rec);
            }
            Err(e) => return Err(e),
        };
        rec.weights = Some(analysis.weights.weights().to_vec());
        for (i, fit) in analysis.fits.iter().enumerate() {
            if fit.failure.is_some() {
                continue;
            }
            if let Some(post) = &fit.posterior {
                let family = &model.entries()[i].family;
                if let Ok(law) = family_quantity_posterior_with(family, post, q, Execution::Sequential) {
                    rec.per_family[i] = Some(interval(Summary::of_law(&law, cfg.level)?));
                }
            }
        }
        match analysis.mixture(model, q) {
            Ok(mp) => rec.mixture = Some(interval(mp.summarize(cfg.level)?)),
            Err(e) => rec.degenerate = Some(e.to_string()),
        }
        Ok(rec)
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let tally = |method: String, hits: Vec<Option<bool>>| {
        let valid = hits.iter().flatten().count();
        let covered = hits.iter().flatten().filter(|&&c| c).count();
        let rate = if valid > 0 { covered as f64 / valid as f64 } else { f64::NAN };
        let standard_error = if valid > 0 { (rate * (1.0 - rate) / valid as f64).sqrt() } else { f64::NAN };
        MethodCoverage { method, valid, covered, rate, standard_error }
    };
    let mut methods = vec![tally("mixture".into(), records.iter().map(|r| r.mixture.map(|i| i.covered)).collect())];
    for (i, id) in model.family_ids().into_iter().enumerate() {
        methods.push(tally(id, records.iter().map(|r| r.per_family[i].map(|x| x.covered)).collect()));
    }
    Ok(CoverageTable {
        quantity: q.to_string(),
        true_value: truth,
        level: cfg.level,
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        degenerate: records.iter().filter(|r| r.mixture.is_none()).count(),
        family_ids: model.family_ids(),
        methods,
        records,
        note: DOUBLE_USE_NOTE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    /// Mean weight per model family over the valid replicates.
    pub mean_weights: Vec<f64>,
    pub valid: usize,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationTable {
    pub family_ids: Vec<String>,
    pub true_family: String,
    pub reps: usize,
    pub seed: u64,
    pub rows: Vec<ConcentrationRow>,
    pub note: &'static str,
}

pub const DEFAULT_SCHEDULE: [usize; 3] = [25, 100, 400];

/// Mean family weights as the sample size grows, with data drawn from a
/// member of one of the model's families.
pub fn weight_concentration_experiment(
    engine: &dyn InferenceEngine,
    model: &PopulationSpaceModel,
    truth: &TrueDistSpec,
    schedule: &[usize],
    reps: usize,
    seed: u64,
    settings: &FitSettings,
) -> Result<ConcentrationTable> {
    let TrueDistSpec::Family { family, .. } = truth else {
        return Err(Error::InvalidArgument("the truth must be a member of one of the model's families".into()));
    };
    let true_family = model
        .families()
        .find(|f| f.kind() == family.kind())
        .map(|f| f.id().to_string())
        .ok_or_else(|| Error::InvalidArgument(format!("no model family of kind `{}`", family.kind().key())))?;
    if reps == 0 || schedule.is_empty() || schedule.contains(&0) {
        return Err(Error::InvalidArgument("reps and every sample size must be at least 1".into()));
    }
    let (outer, inner) = split_execution(settings);
    let mut rows = Vec::with_capacity(schedule.len());
    for (step, &n) in schedule.iter().enumerate() {
        let weights: Vec<Result<Option<Vec<f64>>>> = map_indexed(outer, reps, |rep| {
            let s = derive_seed(seed, ((step as u64) << 32) | rep as u64);
            let data = truth.sample(n, s)?;
            match analyze(engine, model, &data, &inner) {
                Ok(a) => Ok(Some(a.weights.weights().to_vec())),
                Err(e) if is_degenerate(&e) => Ok(None),
                Err(e) => Err(e),
            }
        });
        let weights = weights.into_iter().collect::<Result<Vec<_>>>()?;
        let valid: Vec<&Vec<f64>> = weights.iter().flatten().collect();
        let mut mean_weights = vec![0.0; model.len()];
        for w in &valid {
            for (acc, x) in mean_weights.iter_mut().zip(w.iter()) {
                *acc += x;
            }
        }
        for m in &mut mean_weights {
            *m /= valid.len().max(1) as f64;
        }
        rows.push(ConcentrationRow { n, mean_weights, valid: valid.len(), degenerate: reps - valid.len() });
    }
    Ok(ConcentrationTable {
        family_ids: model.family_ids(),
        true_family,
        reps,
        seed,
        rows,
        note: DOUBLE_USE_NOTE,
    })
}
