//! The `bayes-grid` engine.
//!
//! Free parameters are mapped to an unbounded scale (log for positive
//! parameters). The log posterior is maximised there, its curvature at the
//! mode sets a grid of `mode ± span·sd` per axis, and the grid is integrated
//! with the trapezoid rule. Edges that still carry non-negligible density are
//! pushed outwards before the masses are normalised.

use serde::Serialize;

use super::{ComponentPrior, ConditionalPosterior, FitSettings, GridAxis, InferenceEngine, PriorSpec, Representation};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::families::{Bounds, Dataset, FamilySpec, PreparedData};
use crate::numeric::{log_sum_exp, optimize};

/// Log density below the grid maximum at which an edge counts as empty.
const EDGE_LOG_DROP: f64 = 28.0;
/// Nodes this far (in log mass) below the heaviest node are dropped.
const PRUNE_LOG_DROP: f64 = 69.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Log,
}

impl Transform {
    fn for_bounds(b: Bounds) -> Option<Self> {
        if b == Bounds::REAL {
            Some(Self::Identity)
        } else if b == Bounds::POSITIVE {
            Some(Self::Log)
        } else {
            None
        }
    }

    pub fn to_unbounded(self, theta: f64) -> f64 {
        match self {
            Self::Identity => theta,
            Self::Log => theta.ln(),
        }
    }

    pub fn from_unbounded(self, u: f64) -> f64 {
        match self {
            Self::Identity => u,
            Self::Log => u.exp(),
        }
    }

    /// `ln |dθ/du|`.
    pub fn ln_jacobian(self, u: f64) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::Log => u,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BayesGrid;

/// Log posterior density on the unbounded scale, up to the evidence.
struct Target<'a> {
    family: &'a FamilySpec,
    prepared: PreparedData,
    base: Vec<f64>,
    free: Vec<usize>,
    transforms: Vec<Transform>,
    priors: Vec<ComponentPrior>,
    bounds: Vec<Bounds>,
    /// Constant added to every log likelihood; zero outside tests.
    log_offset: f64,
}

impl Target<'_> {
    fn theta(&self, u: &[f64]) -> Vec<f64> {
        let mut th = self.base.clone();
        for (j, &i) in self.free.iter().enumerate() {
            th[i] = self.transforms[j].from_unbounded(u[j]);
        }
        th
    }

    fn log_density(&self, u: &[f64]) -> f64 {
        let th = self.theta(u);
        let mut lp = 0.0;
        for (j, &i) in self.free.iter().enumerate() {
            if !self.bounds[i].contains(th[i]) {
                return f64::NEG_INFINITY;
            }
            lp += self.priors[j].ln_density(th[i]) + self.transforms[j].ln_jacobian(u[j]);
        }
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        let ll = self.prepared.log_likelihood(&self.family.resolve_unchecked(&th));
        let v = lp + ll + self.log_offset;
        if v.is_nan() { f64::NEG_INFINITY } else { v }
    }
}

fn degenerate(family: &FamilySpec, reason: impl Into<String>) -> Error {
    Error::DegenerateFit { family: family.id().into(), reason: reason.into() }
}

impl InferenceEngine for BayesGrid {
    fn name(&self) -> &'static str {
        "bayes-grid"
    }

    fn fit(
        &self,
        family: &FamilySpec,
        prior: &PriorSpec,
        data: &Dataset,
        settings: &FitSettings,
    ) -> Result<ConditionalPosterior> {
        self.fit_with_offset(family, prior, data, settings, 0.0)
    }
}

impl BayesGrid {
    fn fit_with_offset(
        &self,
        family: &FamilySpec,
        prior: &PriorSpec,
        data: &Dataset,
        settings: &FitSettings,
        log_offset: f64,
    ) -> Result<ConditionalPosterior> {
        if settings.nodes_per_dim < 2 || !(settings.span_sd > 0.0) {
            return Err(Error::InvalidArgument("grid needs at least 2 nodes per axis and a positive span".into()));
        }
        let resolved = prior.resolve(family)?;
        let bounds = family.bounds();
        let mut base = family.initial_guess(data);
        let mut free = Vec::new();
        let mut priors = Vec::new();
        for (i, p) in resolved.iter().enumerate() {
            match p {
                None => {}
                Some(ComponentPrior::PointMass { value }) => base[i] = *value,
                Some(p) => {
                    free.push(i);
                    priors.push(*p);
                }
            }
        }
        if free.len() > 2 {
            return Err(Error::InvalidArgument("grid engine supports at most two free parameters".into()));
        }
        let transforms = free
            .iter()
            .map(|&i| Transform::for_bounds(bounds[i]))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidFamily(format!("family `{}` has a parameter with unsupported bounds", family.id())))?;

        let target = Target { family, prepared: family.prepare(data), base, free, transforms, priors, bounds, log_offset };
        let fingerprint = data.fingerprint();

        if target.free.is_empty() {
            let ll = target.log_density(&[]);
            if ll == f64::NEG_INFINITY {
                return Err(degenerate(family, "the data have zero likelihood at the prior point mass"));
            }
            let nodes = target.theta(&[]);
            return Ok(ConditionalPosterior::from_parts(
                family,
                self.name(),
                Representation::Grid(vec![]),
                nodes,
                vec![1.0],
                Some(ll),
                fingerprint,
            ));
        }

        let (feas_lo, feas_hi) = feasible_box(&target)?;
        let start = starting_point(&target, &feas_lo, &feas_hi)?;
        let (mode, _) = optimize::maximize(&|u: &[f64]| target.log_density(u), &start, &feas_lo, &feas_hi);
        let sds = curvature_sds(&target, &mode);

        let d = target.free.len();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for j in 0..d {
            lo[j] = (mode[j] - settings.span_sd * sds[j]).max(feas_lo[j]);
            hi[j] = (mode[j] + settings.span_sd * sds[j]).min(feas_hi[j]);
            if !(lo[j].is_finite() && hi[j].is_finite()) {
                return Err(degenerate(family, "posterior is not localised on a finite grid"));
            }
        }

        let n = settings.nodes_per_dim;
        let mut extensions = 0;
        let (axes, log_post) = loop {
            let axes: Vec<GridAxis> = (0..d)
                .map(|j| GridAxis {
                    param: target.free[j],
                    transform: target.transforms[j],
                    lo: lo[j],
                    hi: hi[j],
                    nodes: if hi[j] > lo[j] { n } else { 1 },
                })
                .collect();
            let total: usize = axes.iter().map(|a| a.nodes).product();
            let log_post = map_indexed(settings.execution, total, |flat| {
                let u = grid_point(&axes, flat);
                target.log_density(&u)
            });
            let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(degenerate(family, "every grid node has zero posterior density"));
            }
            let mut grew = false;
            if extensions < settings.max_extensions {
                for j in 0..d {
                    if axes[j].nodes < 2 {
                        continue;
                    }
                    let step = 0.5 * settings.span_sd * sds[j].min(hi[j] - lo[j]).max(1e-12);
                    let edge_max = |k: usize| edge_max(&axes, &log_post, j, k);
                    if lo[j] > feas_lo[j] && edge_max(0) > max - EDGE_LOG_DROP {
                        lo[j] = (lo[j] - step).max(feas_lo[j]);
                        grew = true;
                    }
                    if hi[j] < feas_hi[j] && edge_max(axes[j].nodes - 1) > max - EDGE_LOG_DROP {
                        hi[j] = (hi[j] + step).min(feas_hi[j]);
                        grew = true;
                    }
                }
            }
            if !grew {
                break (axes, log_post);
            }
            extensions += 1;
        };

        // Trapezoid weights on every axis.
        let weighted: Vec<f64> = log_post
            .iter()
            .enumerate()
            .map(|(flat, lp)| lp + log_trapezoid_weight(&axes, flat))
            .collect();
        let lse = log_sum_exp(&weighted);
        let log_cell: f64 = axes.iter().filter(|a| a.nodes > 1).map(|a| a.spacing().ln()).sum();
        let zero_width = axes.iter().any(|a| a.nodes == 1);
        let log_normalizer = if zero_width { f64::NEG_INFINITY } else { lse + log_cell };

        let max_w = weighted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let keep: Vec<usize> = (0..weighted.len()).filter(|&k| weighted[k] > max_w - PRUNE_LOG_DROP).collect();
        let raw: Vec<f64> = keep.iter().map(|&k| (weighted[k] - lse).exp()).collect();
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.into_iter().map(|m| m / total).collect();
        let mut nodes = Vec::with_capacity(keep.len() * target.base.len());
        for &k in &keep {
            nodes.extend(target.theta(&grid_point(&axes, k)));
        }
        Ok(ConditionalPosterior::from_parts(
            family,
            self.name(),
            Representation::Grid(axes),
            nodes,
            masses,
            Some(log_normalizer),
            fingerprint,
        ))
    }
}

fn grid_point(axes: &[GridAxis], mut flat: usize) -> Vec<f64> {
    // Last axis varies fastest.
    let mut u = vec![0.0; axes.len()];
    for j in (0..axes.len()).rev() {
        let n = axes[j].nodes;
        u[j] = axes[j].node(flat % n);
        flat /= n;
    }
    u
}

fn axis_index(axes: &[GridAxis], mut flat: usize, axis: usize) -> usize {
    for j in (axis + 1..axes.len()).rev() {
        flat /= axes[j].nodes;
    }
    flat % axes[axis].nodes
}

fn log_trapezoid_weight(axes: &[GridAxis], flat: usize) -> f64 {
    let mut w = 0.0;
    for (j, a) in axes.iter().enumerate() {
        if a.nodes > 1 {
            let k = axis_index(axes, flat, j);
            if k == 0 || k + 1 == a.nodes {
                w -= std::f64::consts::LN_2;
            }
        }
    }
    w
}

fn edge_max(axes: &[GridAxis], log_post: &[f64], axis: usize, k: usize) -> f64 {
    log_post
        .iter()
        .enumerate()
        .filter(|(flat, _)| axis_index(axes, *flat, axis) == k)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Box on the unbounded scale where the posterior can be positive:
/// prior support ∩ parameter space ∩ likelihood support.
fn feasible_box(t: &Target<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (j, &i) in t.free.iter().enumerate() {
        let (mut a, mut b) = t.priors[j].support();
        a = a.max(t.bounds[i].lo);
        b = b.min(t.bounds[i].hi);
        if let crate::families::FamilyKind::UniformLocation { half_width } = t.family.kind() {
            if let Some((ls, hs)) = t.prepared.uniform_center_support(half_width) {
                a = a.max(ls);
                b = b.min(hs);
            }
        }
        if !(a <= b) {
            return Err(degenerate(t.family, format!("no value of `{}` is compatible with both prior and data", t.family.param_names()[i])));
        }
        lo.push(t.transforms[j].to_unbounded(a));
        hi.push(t.transforms[j].to_unbounded(b));
    }
    Ok((lo, hi))
}

fn starting_point(t: &Target<'_>, lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    let d = t.free.len();
    let mut u: Vec<f64> = (0..d)
        .map(|j| {
            let guess = t.base[t.free[j]];
            let g = if t.bounds[t.free[j]].contains(guess) { t.transforms[j].to_unbounded(guess) } else { 0.0 };
            clamp_inside(g, lo[j], hi[j])
        })
        .collect();
    if t.log_density(&u).is_finite() {
        return Ok(u);
    }
    // Coarse scan over the prior's central region.
    let ranges: Vec<(f64, f64)> = (0..d)
        .map(|j| {
            let (a, b) = t.priors[j].central_range(1e-6);
            let ua = t.transforms[j].to_unbounded(a.max(t.bounds[t.free[j]].lo)).max(lo[j]);
            let ub = t.transforms[j].to_unbounded(b.min(t.bounds[t.free[j]].hi)).min(hi[j]);
            (ua.max(-700.0), ub.min(700.0))
        })
        .collect();
    const SCAN: usize = 41;
    let total = SCAN.pow(d as u32);
    let mut best = f64::NEG_INFINITY;
    for flat in 0..total {
        let mut f = flat;
        let p: Vec<f64> = (0..d)
            .map(|j| {
                let k = f % SCAN;
                f /= SCAN;
                let (a, b) = ranges[j];
                a + (b - a) * k as f64 / (SCAN - 1) as f64
            })
            .collect();
        let v = t.log_density(&p);
        if v > best {
            best = v;
            u = p;
        }
    }
    if best.is_finite() {
        Ok(u)
    } else {
        Err(degenerate(t.family, "no parameter value in the prior support gives the data positive likelihood"))
    }
}

fn clamp_inside(x: f64, lo: f64, hi: f64) -> f64 {
    if x >= lo && x <= hi {
        return x;
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 1.0,
        (false, false) => x,
    }
}

/// Marginal posterior standard deviations on the unbounded scale from the
/// finite-difference Hessian at the mode. Axes without usable curvature get
/// an infinite value, so the grid falls back to the feasible box.
fn curvature_sds(t: &Target<'_>, mode: &[f64]) -> Vec<f64> {
    let f = |u: &[f64]| t.log_density(u);
    let steps: Vec<f64> = mode.iter().map(|v| 1e-4 * (1.0 + v.abs())).collect();
    let (_, h) = optimize::gradient_hessian(&f, mode, &steps);
    if let Some(cov) = optimize::covariance_from_hessian(&h) {
        let sds: Vec<f64> = (0..mode.len()).map(|j| cov[j][j].sqrt()).collect();
        if sds.iter().all(|s| s.is_finite() && *s > 0.0) {
            return sds;
        }
    }
    (0..mode.len())
        .map(|j| {
            let c = -h[j][j];
            if c.is_finite() && c > 0.0 { 1.0 / c.sqrt() } else { f64::INFINITY }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::inference::{fit_conditional_posterior, log_marginal_likelihood};

    fn known_sigma_normal() -> FamilySpec {
        FamilySpec::normal().with_fixed("sigma", 1.0).unwrap()
    }

    fn mu_prior() -> PriorSpec {
        PriorSpec::new([("mu", ComponentPrior::Normal { mean: 0.0, sd: 10.0 })])
    }

    fn conjugate_data() -> Dataset {
        let theta = FamilySpec::normal().params(&[2.0, 1.0]).unwrap();
        FamilySpec::normal().sample(&theta, 50, 0).unwrap()
    }

    // Closed-form posterior and evidence for y_i ~ N(mu, 1), mu ~ N(0, 10^2).
    fn conjugate_oracle(y: &[f64]) -> (f64, f64, f64) {
        let n = y.len() as f64;
        let sum: f64 = y.iter().sum();
        let ybar = sum / n;
        let prec = n + 0.01;
        let ss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
        let tau2 = 100.0;
        let s2 = tau2 + 1.0 / n;
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let log_ev = -0.5 * n * ln2pi - 0.5 * ss + 0.5 * (ln2pi - n.ln()) - 0.5 * (ln2pi + s2.ln()) - ybar * ybar / (2.0 * s2);
        (sum / prec, 1.0 / prec, log_ev)
    }

    #[test]
    fn conjugate_normal_posterior_and_evidence() {
        let data = conjugate_data();
        let post = fit_conditional_posterior(&known_sigma_normal(), &mu_prior(), &data, &FitSettings::default()).unwrap();
        let (m, v, ev) = conjugate_oracle(data.values());
        assert!((post.mean(0) - m).abs() < 1e-4, "{} vs {m}", post.mean(0));
        assert!((post.variance(0) / v - 1.0).abs() < 1e-3);
        let lz = post.log_normalizer().unwrap();
        assert!(((lz - ev) / ev).abs() < 1e-6, "{lz} vs {ev}");
        let total: f64 = post.masses().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(post.iter().all(|(t, _)| t[1] == 1.0));
    }

    #[test]
    fn doubling_resolution_barely_moves_moments() {
        let data = conjugate_data();
        let coarse = FitSettings::default();
        let fine = FitSettings { nodes_per_dim: 801, ..coarse };
        let a = fit_conditional_posterior(&known_sigma_normal(), &mu_prior(), &data, &coarse).unwrap();
        let b = fit_conditional_posterior(&known_sigma_normal(), &mu_prior(), &data, &fine).unwrap();
        assert!(((a.mean(0) - b.mean(0)) / b.mean(0)).abs() < 1e-3);
        assert!(((a.variance(0) - b.variance(0)) / b.variance(0)).abs() < 1e-3);

        let fam = FamilySpec::normal();
        let prior = PriorSpec::new([
            ("mu", ComponentPrior::Normal { mean: 0.0, sd: 10.0 }),
            ("sigma", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 1.0 }),
        ]);
        let a = fit_conditional_posterior(&fam, &prior, &data, &coarse).unwrap();
        let b = fit_conditional_posterior(&fam, &prior, &data, &fine).unwrap();
        for j in 0..2 {
            assert!(((a.mean(j) - b.mean(j)) / b.mean(j)).abs() < 1e-3);
            assert!(((a.variance(j) - b.variance(j)) / b.variance(j)).abs() < 1e-3);
        }
    }

    #[test]
    fn uniform_location_single_point_is_flat_on_the_support() {
        let fam = FamilySpec::uniform_location(1.0).unwrap();
        let prior = PriorSpec::new([("theta", ComponentPrior::Uniform { lo: -5.0, hi: 5.0 })]);
        let data = Dataset::new(vec![0.3]).unwrap();
        let post = fit_conditional_posterior(&fam, &prior, &data, &FitSettings::default()).unwrap();
        let lo = post.iter().map(|(t, _)| t[0]).fold(f64::INFINITY, f64::min);
        let hi = post.iter().map(|(t, _)| t[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - -0.7).abs() < 1e-12 && (hi - 1.3).abs() < 1e-12);
        assert!((post.mean(0) - 0.3).abs() < 1e-12);
        let interior: Vec<f64> = post.masses()[1..post.len() - 1].to_vec();
        assert!(interior.iter().all(|m| (m / interior[0] - 1.0).abs() < 1e-12));
        // Flat density 1/2 over a width-2 window, prior density 1/10.
        assert!((post.log_normalizer().unwrap() - (0.1f64 * 0.5 * 2.0).ln()).abs() < 1e-12);

        // A prior box that clips the likelihood support.
        let prior = PriorSpec::new([("theta", ComponentPrior::Uniform { lo: 0.0, hi: 5.0 })]);
        let post = fit_conditional_posterior(&fam, &prior, &data, &FitSettings::default()).unwrap();
        assert!((post.mean(0) - 0.65).abs() < 1e-12);
    }

    fn digamma_series(mut x: f64) -> f64 {
        let mut acc = 0.0;
        while x < 8.0 {
            acc -= 1.0 / x;
            x += 1.0;
        }
        let x2 = 1.0 / (x * x);
        acc + x.ln() - 0.5 / x - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 / 252.0))
    }

    #[test]
    fn gamma_mode_is_near_the_maximum_likelihood_fit() {
        let fam = FamilySpec::gamma();
        let truth = fam.params(&[3.0, 1.5]).unwrap();
        let data = fam.sample(&truth, 200, 11).unwrap();
        let y = data.values();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let s = mean.ln() - y.iter().map(|v| v.ln()).sum::<f64>() / n;
        let (mut a, mut b) = (1e-3f64, 1e3f64);
        for _ in 0..200 {
            let k = 0.5 * (a + b);
            if k.ln() - digamma_series(k) > s { a = k } else { b = k }
        }
        let shape = 0.5 * (a + b);
        let scale = mean / shape;

        let prior = PriorSpec::new([
            ("shape", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 2.0 }),
            ("scale", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 2.0 }),
        ]);
        let post = fit_conditional_posterior(&fam, &prior, &data, &FitSettings::default()).unwrap();
        let mode = post.mode();
        assert!((mode[0] / shape - 1.0).abs() < 0.1, "{mode:?} vs {shape}");
        assert!((mode[1] / scale - 1.0).abs() < 0.1);
        assert!((mode[0] / 3.0 - 1.0).abs() < 0.25 && (mode[1] / 1.5 - 1.0).abs() < 0.25);
    }

    #[test]
    fn likelihood_shift_does_not_change_the_posterior() {
        let fam = FamilySpec::normal();
        let prior = PriorSpec::new([
            ("mu", ComponentPrior::Normal { mean: 0.0, sd: 10.0 }),
            ("sigma", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 1.0 }),
        ]);
        let data = conjugate_data();
        let s = FitSettings::default();
        let a = BayesGrid.fit_with_offset(&fam, &prior, &data, &s, 0.0).unwrap();
        let b = BayesGrid.fit_with_offset(&fam, &prior, &data, &s, 1234.5).unwrap();
        // The offset costs a few bits of absolute precision in the mode
        // search, so the grids agree to rounding rather than bit for bit.
        for j in 0..2 {
            assert!((a.mean(j) / b.mean(j) - 1.0).abs() < 1e-9);
            assert!((a.variance(j) / b.variance(j) - 1.0).abs() < 1e-7);
        }
        let shift = b.log_normalizer().unwrap() - a.log_normalizer().unwrap();
        assert!((shift - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn point_mass_prior_gives_the_log_likelihood() {
        let fam = FamilySpec::normal();
        let data = conjugate_data();
        let prior = PriorSpec::new([
            ("mu", ComponentPrior::PointMass { value: 1.5 }),
            ("sigma", ComponentPrior::PointMass { value: 0.8 }),
        ]);
        let lml = log_marginal_likelihood(&fam, &prior, &data, &FitSettings::default()).unwrap();
        let ll = fam.log_likelihood(&fam.params(&[1.5, 0.8]).unwrap(), &data).unwrap();
        assert!((lml - ll).abs() < 1e-12 * ll.abs());
    }

    #[test]
    fn impossible_data_is_a_degenerate_fit() {
        let fam = FamilySpec::uniform_location(1.0).unwrap();
        let prior = PriorSpec::new([("theta", ComponentPrior::Uniform { lo: -1.0, hi: 1.0 })]);
        let data = Dataset::new(vec![5.0]).unwrap();
        let err = log_marginal_likelihood(&fam, &prior, &data, &FitSettings::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit { .. }));
        let data = Dataset::new(vec![-3.0, 3.0]).unwrap();
        let prior = PriorSpec::new([("theta", ComponentPrior::Normal { mean: 0.0, sd: 1.0 })]);
        assert!(matches!(
            fit_conditional_posterior(&fam, &prior, &data, &FitSettings::default()),
            Err(Error::DegenerateFit { .. })
        ));
        let fam = FamilySpec::gamma();
        let prior = PriorSpec::new([
            ("shape", ComponentPrior::Gamma { shape: 2.0, scale: 1.0 }),
            ("scale", ComponentPrior::Gamma { shape: 2.0, scale: 1.0 }),
        ]);
        let data = Dataset::new(vec![1.0, -1.0]).unwrap();
        assert!(matches!(
            fit_conditional_posterior(&fam, &prior, &data, &FitSettings::default()),
            Err(Error::DegenerateFit { .. })
        ));
    }

    #[test]
    fn sequential_and_parallel_fits_agree() {
        let data = conjugate_data();
        let fam = FamilySpec::normal();
        let prior = PriorSpec::new([
            ("mu", ComponentPrior::Normal { mean: 0.0, sd: 10.0 }),
            ("sigma", ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 1.0 }),
        ]);
        let s = FitSettings { execution: Execution::Sequential, ..FitSettings::default() };
        let p = FitSettings { execution: Execution::Parallel, ..FitSettings::default() };
        let a = fit_conditional_posterior(&fam, &prior, &data, &s).unwrap();
        let b = fit_conditional_posterior(&fam, &prior, &data, &p).unwrap();
        assert_eq!(a.masses(), b.masses());
        assert_eq!(a.log_normalizer(), b.log_normalizer());
    }

    #[test]
    fn transforms_round_trip() {
        for t in [Transform::Identity, Transform::Log] {
            for x in [0.1, 1.0, 7.5] {
                assert!((t.from_unbounded(t.to_unbounded(x)) - x).abs() < 1e-14);
            }
        }
    }
}
