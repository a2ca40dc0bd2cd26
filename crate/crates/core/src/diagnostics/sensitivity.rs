use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{join, map_indexed};
use crate::families::{Dataset, FamilySpec, Parametrization};
use crate::inference::{default_engine, ComponentPrior, ConditionalPosterior, FitSettings, PriorSpec};
use crate::modelspace::PopulationSpaceModel;
use crate::quantity::{family_quantity_posterior_with, QuantityLaw, QuantitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Adequate,
    EnlargeModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityOptions {
    /// KS distance above which the model should be enlarged.
    pub threshold: f64,
    pub settings: FitSettings,
    /// Points per axis of the shared (mean, variance) grid.
    pub joint_grid: usize,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self { threshold: 0.1, settings: FitSettings::default(), joint_grid: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub family: String,
    pub family_star: String,
    pub quantity: String,
    pub ks: f64,
    pub overlap: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub mean: f64,
    pub mean_star: f64,
    /// Largest absolute gap between the two joint (mean, variance) posterior densities on a shared grid.
    pub joint_sup_abs: f64,
    /// The same gap divided by the larger of the two density peaks.
    pub joint_sup_rel: f64,
}

const OVERLAP_BINS: usize = 512;

/// Fit `i` and `i_star` in (mean, variance) form under the same prior, push
/// both posteriors through `q`, and compare the two laws.
pub fn sensitivity_compare(
    model: &PopulationSpaceModel,
    i: &str,
    i_star: &FamilySpec,
    q: QuantitySpec,
    data: &Dataset,
    prior: &PriorSpec,
    options: &SensitivityOptions,
) -> Result<SensitivityReport> {
    let q = q.validated()?;
    let base = model
        .index_of(i)
        .map(|k| &model.entries()[k].family)
        .ok_or_else(|| Error::InvalidArgument(format!("family `{i}` is not in the model")))?;
    let a = mean_variance_form(base)?;
    let b = mean_variance_form(i_star)?;
    let exec = options.settings.execution;
    let engine = default_engine();
    let (pa, pb) = join(
        exec,
        || engine.fit(&a, prior, data, &options.settings),
        || engine.fit(&b, prior, data, &options.settings),
    );
    let (pa, pb) = (pa?, pb?);
    let la = family_quantity_posterior_with(&a, &pa, q, exec)?;
    let lb = family_quantity_posterior_with(&b, &pb, q, exec)?;
    let ks = ks_distance(&la, &lb);
    let overlap = overlap(&la, &lb);
    let (joint_sup_abs, joint_sup_rel) = joint_gap(&a, &pa, &b, &pb, prior, data, options)?;
    Ok(SensitivityReport {
        family: a.id().to_string(),
        family_star: b.id().to_string(),
        quantity: q.to_string(),
        ks,
        overlap,
        threshold: options.threshold,
        verdict: if ks > options.threshold { Verdict::EnlargeModel } else { Verdict::Adequate },
        mean: la.mean(),
        mean_star: lb.mean(),
        joint_sup_abs,
        joint_sup_rel,
    })
}

fn mean_variance_form(f: &FamilySpec) -> Result<FamilySpec> {
    if !f.supports_mean_variance() {
        return Err(Error::UnsupportedComparison(format!("family `{}` has no (mean, variance) parametrization", f.id())));
    }
    f.clone().with_parametrization(Parametrization::MeanVariance)
}

/// Largest gap between the two mid-distribution cdfs, checked at every atom
/// of either law from both sides.
pub(crate) fn ks_distance(a: &QuantityLaw, b: &QuantityLaw) -> f64 {
    let mut d: f64 = 0.0;
    for &x in a.atoms().iter().chain(b.atoms()) {
        d = d.max((a.cdf(x) - b.cdf(x)).abs());
        d = d.max((a.cdf_left(x) - b.cdf_left(x)).abs());
    }
    d.min(1.0)
}

fn overlap(a: &QuantityLaw, b: &QuantityLaw) -> f64 {
    let lo = a.atoms()[0].min(b.atoms()[0]);
    let hi = a.atoms()[a.len() - 1].max(b.atoms()[b.len() - 1]);
    if hi == lo {
        return 1.0;
    }
    let hist = |l: &QuantityLaw| {
        let mut h = vec![0.0; OVERLAP_BINS];
        let total = l.total_mass();
        for (x, m) in l.atoms().iter().zip(l.masses()) {
            let k = (((x - lo) / (hi - lo)) * OVERLAP_BINS as f64) as usize;
            h[k.min(OVERLAP_BINS - 1)] += m / total;
        }
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    ha.iter().zip(&hb).map(|(x, y)| x.min(*y)).sum::<f64>().clamp(0.0, 1.0)
}

fn joint_gap(
    a: &FamilySpec,
    pa: &ConditionalPosterior,
    b: &FamilySpec,
    pb: &ConditionalPosterior,
    prior: &PriorSpec,
    data: &Dataset,
    options: &SensitivityOptions,
) -> Result<(f64, f64)> {
    let n = options.joint_grid.max(2);
    let range = |j: usize| {
        let vals = pa.iter().chain(pb.iter()).map(|(t, _)| t[j]);
        vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (m_lo, m_hi) = range(0);
    let (v_lo, v_hi) = range(1);
    let density = |f: &FamilySpec, p: &ConditionalPosterior| -> Result<Vec<f64>> {
        let comps = prior.resolve(f)?;
        let log_z = p.log_normalizer().filter(|z| z.is_finite()).ok_or_else(|| Error::DegenerateFit {
            family: f.id().into(),
            reason: "posterior has no normalizing constant".into(),
        })?;
        let prepared = f.prepare(data);
        let bounds = f.bounds();
        let lprior = |t: &[f64]| -> f64 {
            comps
                .iter()
                .zip(t)
                .map(|(c, &x)| match c {
                    Some(ComponentPrior::PointMass { .. }) | None => 0.0,
                    Some(c) => c.ln_density(x),
                })
                .sum()
        };
        Ok(map_indexed(options.settings.execution, n * n, |k| {
            let mean = m_lo + (m_hi - m_lo) * (k / n) as f64 / (n - 1) as f64;
            let var = v_lo + (v_hi - v_lo) * (k % n) as f64 / (n - 1) as f64;
            let t = [mean, var];
            let lp = lprior(&t);
            if lp == f64::NEG_INFINITY || !(bounds[0].contains(mean) && bounds[1].contains(var)) {
                return 0.0;
            }
            let ll = prepared.log_likelihood(&f.resolve_unchecked(&t));
            let v = (ll + lp - log_z).exp();
            if v.is_finite() { v } else { 0.0 }
        }))
    };
    let da = density(a, pa)?;
    let db = density(b, pb)?;
    let sup = da.iter().zip(&db).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let peak = da.iter().chain(&db).copied().fold(0.0, f64::max);
    Ok((sup, if peak > 0.0 { sup / peak } else { 0.0 }))
}
