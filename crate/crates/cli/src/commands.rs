//! Subcommand implementations. Each returns the report and any CSV tables;
//! writing them out is left to the caller.

use openpop_core::diagnostics::{
    sensitivity_compare, uniform_demo, weighted_pvalue, SensitivityOptions, TestStatistic, Verdict,
};
use openpop_core::inference::default_engine;
use openpop_core::modelspace::weights_from_ratios;
use openpop_core::simulate::{
    run_coverage_experiment, weight_concentration_experiment, CoverageConfig, TrueDistSpec, DEFAULT_ORACLE_DRAWS,
    DEFAULT_SCHEDULE,
};
use openpop_core::{
    analyze, Analysis, Dataset, FamilyKind, FamilySpec, ModelWeights, Parametrization, PopulationSpaceModel, Summary,
};
use serde_json::{json, Map, Value};

use crate::config::{prior_spec, ExperimentCfg, Loaded, TruthCfg};
use crate::error::CliError;
use crate::locate::JsonPath;
use crate::report::{fmt_f64, num, opt_num, to_value, SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WeightSource {
    /// Posterior predictive density at the observed data.
    Predictive,
    /// Ratios from the config's `elicitation` section.
    Elicited,
}

/// A CSV table to be written next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug)]
pub struct Output {
    pub report: Value,
    pub table: Option<Table>,
}

struct Run<'a> {
    cfg: &'a Loaded,
    command: &'static str,
    warnings: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a Loaded, command: &'static str) -> Self {
        Self { cfg, command, warnings: Vec::new() }
    }

    fn seed(&mut self) -> u64 {
        self.cfg.raw.seed.unwrap_or_else(|| {
            self.warnings.push("`seed` is not set; using 0".into());
            0
        })
    }

    fn core(&self, e: &openpop_core::Error) -> CliError {
        CliError::from_core(self.cfg.path.display(), e)
    }

    fn finish(self, seed: Option<u64>, body: Map<String, Value>) -> Value {
        let mut m = body;
        m.insert("schema".into(), json!(SCHEMA));
        m.insert("command".into(), json!(self.command));
        m.insert("config_fingerprint".into(), json!(self.cfg.fingerprint));
        m.insert("seed".into(), seed.map_or(Value::Null, |s| json!(s)));
        m.insert("tool".into(), json!({"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")}));
        m.insert("warnings".into(), json!(self.warnings));
        Value::Object(m)
    }

    /// Model, data and fits shared by every data-driven command.
    fn analyze(&mut self, source: WeightSource) -> Result<(PopulationSpaceModel, Dataset, Analysis, u64), CliError> {
        let seed = self.seed();
        let model = self.cfg.model()?;
        let data = self.cfg.data(seed)?;
        let settings = self.cfg.settings()?;
        let mut a = analyze(default_engine(), &model, &data, &settings).map_err(|e| self.core(&e))?;
        if source == WeightSource::Elicited {
            let el = self.cfg.elicitation(&model)?;
            let w = weights_from_ratios(&model, &el)
                .map_err(|e| self.cfg.core_err(&JsonPath::root().key("elicitation"), &e))?;
            a = a.with_weights(w);
        }
        Ok((model, data, a, seed))
    }
}

fn data_block(data: &Dataset) -> Value {
    json!({"n": data.len(), "fingerprint": data.fingerprint().to_hex()})
}

fn parametrization_key(p: Parametrization) -> &'static str {
    match p {
        Parametrization::Natural => "natural",
        Parametrization::MeanVariance => "mean_variance",
    }
}

fn family_json(model: &PopulationSpaceModel, i: usize) -> Map<String, Value> {
    let e = &model.entries()[i];
    let f = &e.family;
    let fixed: Map<String, Value> = f
        .param_names()
        .iter()
        .zip(f.fixed())
        .filter_map(|(n, v)| v.map(|v| ((*n).to_string(), num(v))))
        .collect();
    let prior: Map<String, Value> = e.prior.components().iter().map(|(k, p)| (k.clone(), to_value(p))).collect();
    let mut m = Map::new();
    m.insert("id".into(), json!(f.id()));
    m.insert("family".into(), json!(f.kind().key()));
    m.insert("name".into(), json!(f.name()));
    m.insert("region_label".into(), json!(f.region_label()));
    m.insert("parametrization".into(), json!(parametrization_key(f.parametrization())));
    m.insert("fixed".into(), Value::Object(fixed));
    m.insert("prior".into(), num(model.priors()[i]));
    m.insert("parameter_prior".into(), Value::Object(prior));
    m
}

fn families_block(model: &PopulationSpaceModel, analysis: Option<&Analysis>, posteriors: bool) -> Value {
    let rows = (0..model.len()).map(|i| {
        let mut m = family_json(model, i);
        let (lp, w, excluded, failure, post) = match analysis {
            None => (Value::Null, Value::Null, Value::Null, Value::Null, Value::Null),
            Some(a) => {
                let fit = &a.fits[i];
                let post = match (&fit.posterior, posteriors) {
                    (Some(p), true) => {
                        let params: Map<String, Value> = p
                            .param_names()
                            .iter()
                            .enumerate()
                            .map(|(k, n)| {
                                let v = json!({"mean": num(p.mean(k)), "sd": num(p.variance(k).sqrt()), "mode": num(p.mode()[k])});
                                ((*n).to_string(), v)
                            })
                            .collect();
                        json!({
                            "engine": p.engine(),
                            "nodes": p.len(),
                            "log_normalizer": opt_num(p.log_normalizer()),
                            "params": params,
                        })
                    }
                    _ => Value::Null,
                };
                (
                    num(fit.log_predictive),
                    num(a.weights.weights()[i]),
                    json!(a.weights.excluded()[i]),
                    fit.failure.as_ref().map_or(Value::Null, |e| json!(e.to_string())),
                    post,
                )
            }
        };
        m.insert("log_predictive".into(), lp);
        m.insert("weight".into(), w);
        m.insert("excluded".into(), excluded);
        m.insert("failure".into(), failure);
        if posteriors {
            m.insert("posterior".into(), post);
        }
        Value::Object(m)
    });
    Value::Array(rows.collect())
}

fn weights_block(w: &ModelWeights) -> Value {
    json!({"provenance": to_value(&w.provenance()), "notes": w.notes()})
}

fn summary_json(s: &Summary) -> Value {
    json!({
        "mean": num(s.mean),
        "sd": num(s.sd),
        "median": num(s.median),
        "level": num(s.level),
        "lower": num(s.lower),
        "upper": num(s.upper),
    })
}

fn analysis_body(model: &PopulationSpaceModel, data: &Dataset, a: &Analysis, posteriors: bool) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("data".into(), data_block(data));
    m.insert("families".into(), families_block(model, Some(a), posteriors));
    m.insert("weights".into(), weights_block(&a.weights));
    m
}

pub fn fit(cfg: &Loaded) -> Result<Output, CliError> {
    let mut run = Run::new(cfg, "fit");
    let (model, data, a, seed) = run.analyze(WeightSource::Predictive)?;
    let body = analysis_body(&model, &data, &a, true);
    Ok(Output { report: run.finish(Some(seed), body), table: None })
}

pub fn weights(cfg: &Loaded, source: WeightSource) -> Result<Output, CliError> {
    let mut run = Run::new(cfg, "weights");
    let (model, data, a, seed) = run.analyze(source)?;
    let body = analysis_body(&model, &data, &a, false);
    Ok(Output { report: run.finish(Some(seed), body), table: None })
}

pub fn quantity(cfg: &Loaded, q: Option<&str>, level: Option<f64>, source: WeightSource) -> Result<Output, CliError> {
    let mut run = Run::new(cfg, "quantity");
    let q = cfg.quantity(q, cfg.raw.quantity.as_deref(), &JsonPath::root().key("quantity"))?;
    let level = cfg.level(level)?;
    let (model, data, a, seed) = run.analyze(source)?;
    let mp = a.mixture(&model, q).map_err(|e| run.core(&e))?;
    let s = mp.summarize(level).map_err(|e| run.core(&e))?;
    let per_family = mp
        .per_family()
        .iter()
        .map(|f| {
            let summary = match &f.law {
                Some(law) => summary_json(&Summary::of_law(law, level).map_err(|e| run.core(&e))?),
                None => Value::Null,
            };
            Ok(json!({"id": f.family_id, "weight": num(f.weight), "summary": summary}))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut body = analysis_body(&model, &data, &a, false);
    body.insert(
        "quantity".into(),
        json!({"spec": q.to_string(), "level": num(level), "mixture": summary_json(&s), "per_family": per_family}),
    );
    let table = Table {
        header: vec!["q".into(), "density".into(), "cdf".into()],
        rows: s.density.iter().map(|r| vec![fmt_f64(r.q), fmt_f64(r.density), fmt_f64(r.cdf)]).collect(),
    };
    Ok(Output { report: run.finish(Some(seed), body), table: Some(table) })
}

pub fn pvalue(cfg: &Loaded, family: Option<&str>, statistic: Option<&str>) -> Result<Output, CliError> {
    let mut run = Run::new(cfg, "pvalue");
    let section = cfg.raw.pvalue.as_ref();
    let sp = JsonPath::root().key("pvalue");
    let (model, data, a, seed) = run.analyze(WeightSource::Predictive)?;

    let statistic = match (statistic, section.and_then(|s| s.statistic.as_deref())) {
        (Some(s), _) => s.parse::<TestStatistic>().map_err(|e| CliError::Config(format!("--statistic: {e}")))?,
        (None, Some(s)) => s.parse::<TestStatistic>().map_err(|e| cfg.core_err(&sp.key("statistic"), &e))?,
        (None, None) if data.len() == 1 => TestStatistic::ObsValue,
        (None, None) => TestStatistic::SampleMean,
    };
    let chosen: Vec<usize> = match family.or(section.and_then(|s| s.family.as_deref())) {
        Some(id) => vec![model.index_of(id).ok_or_else(|| CliError::Config(format!("unknown family id `{id}` in the model")))?],
        None => (0..model.len()).filter(|&i| a.fits[i].posterior.is_some()).collect(),
    };

    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for i in chosen {
        let fam = &model.entries()[i].family;
        let Some(post) = &a.fits[i].posterior else {
            return Err(CliError::Degenerate(format!("family `{}` has no posterior to weight P values with", fam.id())));
        };
        let r = weighted_pvalue(fam, post, &data, statistic).map_err(|e| run.core(&e))?;
        for (k, node) in r.nodes.iter().enumerate() {
            let mut row = vec![r.family.clone(), k.to_string()];
            row.extend((0..2).map(|j| node.theta.get(j).map_or(String::new(), |&t| fmt_f64(t))));
            row.extend([fmt_f64(node.alpha), fmt_f64(node.weight)]);
            rows.push(row);
        }
        reports.push(json!({
            "family": r.family,
            "statistic": r.statistic.key(),
            "lambda": num(r.lambda),
            "nodes": r.nodes.len(),
        }));
    }

    let mut diagnostics = Map::new();
    diagnostics.insert("pvalue".into(), Value::Array(reports));
    if let Some(d) = section.and_then(|s| s.uniform_demo) {
        let demo = uniform_demo(d.half_width, d.y, d.prior_null_prob)
            .map_err(|e| cfg.core_err(&sp.key("uniform_demo"), &e))?;
        diagnostics.insert("uniform_demo".into(), to_value(&demo));
    }
    let mut body = analysis_body(&model, &data, &a, false);
    body.insert("diagnostics".into(), Value::Object(diagnostics));
    let header = ["family", "node", "theta1", "theta2", "alpha", "weight"].map(String::from).to_vec();
    Ok(Output { report: run.finish(Some(seed), body), table: Some(Table { header, rows }) })
}

pub struct SensitivityFlags<'a> {
    pub family: Option<&'a str>,
    pub substitute: Option<&'a str>,
    pub quantity: Option<&'a str>,
    pub threshold: Option<f64>,
}

pub fn sensitivity(cfg: &Loaded, flags: &SensitivityFlags<'_>) -> Result<Output, CliError> {
    let mut run = Run::new(cfg, "sensitivity");
    let sp = JsonPath::root().key("sensitivity");
    let Some(section) = &cfg.raw.sensitivity else {
        return Err(CliError::Config(format!("{}: this command needs a `sensitivity` section", cfg.path.display())));
    };
    let q = cfg.quantity(flags.quantity, section.quantity.as_deref().or(cfg.raw.quantity.as_deref()), &sp.key("quantity"))?;
    let threshold = flags.threshold.or(section.threshold).unwrap_or(SensitivityOptions::default().threshold);
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(cfg.err(&sp.key("threshold"), format!("threshold must lie in (0, 1], got {threshold}")));
    }
    let (model, data, a, seed) = run.analyze(WeightSource::Predictive)?;
    let family = flags.family.unwrap_or(&section.family);

    let sub = &section.substitute;
    let sub_key = flags.substitute.unwrap_or(&sub.family);
    let sub_dof = if sub_key == sub.family { sub.dof } else { None };
    let kind = cfg.family_kind(sub_key, sub_dof, None, &sp.key("substitute"))?;
    let mut star = FamilySpec::new(kind).map_err(|e| cfg.core_err(&sp.key("substitute"), &e))?;
    if let Some(id) = sub.id.as_ref().filter(|_| sub_key == sub.family) {
        star = star.with_id(id.clone());
    }
    let prior = prior_spec(&section.prior);
    let defaults = SensitivityOptions::default();
    let options = SensitivityOptions {
        threshold,
        settings: cfg.settings()?,
        joint_grid: section.joint_grid.unwrap_or(defaults.joint_grid),
    };
    let r = sensitivity_compare(&model, family, &star, q, &data, &prior, &options).map_err(|e| cfg.core_err(&sp, &e))?;

    let mut report = to_value(&r);
    if r.verdict == Verdict::EnlargeModel {
        let w = model.index_of(family).map_or(0.0, |k| model.priors()[k]);
        let mut entry = Map::new();
        entry.insert("family".into(), json!(star.kind().key()));
        let id = if model.index_of(star.id()).is_some() { format!("{}_mean_variance", star.id()) } else { star.id().to_string() };
        entry.insert("id".into(), json!(id));
        if let FamilyKind::StudentT { dof } = star.kind() {
            entry.insert("dof".into(), num(dof));
        }
        entry.insert("parametrization".into(), json!("mean_variance"));
        entry.insert("prior".into(), serde_json::to_value(&section.prior).expect("priors serialize"));
        entry.insert("prior_weight".into(), num(0.5 * w));
        report["suggested_stanza"] = json!({
            "model_entry": entry,
            "note": format!(
                "add this entry to `model` and lower the prior weight of `{family}` by the same amount so the weights still sum to 1"
            ),
        });
    }
    let mut body = analysis_body(&model, &data, &a, false);
    body.insert("diagnostics".into(), json!({"sensitivity": report}));
    Ok(Output { report: run.finish(Some(seed), body), table: None })
}

fn truth(cfg: &Loaded, t: &TruthCfg, p: &JsonPath) -> Result<TrueDistSpec, CliError> {
    match t {
        TruthCfg::Family(d) => {
            let p = p.key("family");
            let (f, theta) = cfg.dist(d, &p)?;
            TrueDistSpec::family(f, theta).map_err(|e| cfg.core_err(&p, &e))
        }
        TruthCfg::NormalMixture { weights, means, sds } => {
            TrueDistSpec::normal_mixture(weights.clone(), means.clone(), sds.clone())
                .map_err(|e| cfg.core_err(&p.key("normal_mixture"), &e))
        }
        TruthCfg::Contaminated { base, fraction, contaminant } => {
            let p = p.key("contaminated");
            let b = cfg.dist(base, &p.key("base"))?;
            let c = cfg.dist(contaminant, &p.key("contaminant"))?;
            TrueDistSpec::contaminated((&b.0, &b.1), *fraction, (&c.0, &c.1)).map_err(|e| cfg.core_err(&p, &e))
        }
        TruthCfg::PointMass(v) => TrueDistSpec::point_mass(*v).map_err(|e| cfg.core_err(&p.key("point_mass"), &e)),
    }
}

pub fn simulate(cfg: &Loaded) -> Result<Output, CliError> {
    let run = Run::new(cfg, "simulate");
    let sp = JsonPath::root().key("simulate");
    let Some(seed) = cfg.raw.seed else {
        return Err(cfg.err(&JsonPath::root(), "`simulate` needs a top-level `seed`"));
    };
    let Some(sim) = &cfg.raw.simulate else {
        return Err(CliError::Config(format!("{}: this command needs a `simulate` section", cfg.path.display())));
    };
    let model = cfg.model()?;
    let settings = cfg.settings()?;
    let truth = truth(cfg, &sim.truth, &sp.key("truth"))?;
    if sim.reps == 0 {
        return Err(cfg.err(&sp.key("reps"), "reps must be at least 1"));
    }
    let ids = model.family_ids();

    let (result, table) = match sim.experiment {
        ExperimentCfg::Coverage => {
            let quantity = cfg.quantity(None, sim.quantity.as_deref().or(cfg.raw.quantity.as_deref()), &sp.key("quantity"))?;
            let level = sim.level.or(cfg.raw.level).unwrap_or(0.95);
            let n = sim.n.ok_or_else(|| cfg.err(&sp, "a coverage experiment needs `n`"))?;
            let cc = CoverageConfig {
                quantity,
                truth,
                n,
                reps: sim.reps,
                level,
                seed,
                settings,
                oracle_draws: sim.oracle_draws.unwrap_or(DEFAULT_ORACLE_DRAWS),
            };
            let t = run_coverage_experiment(default_engine(), &model, &cc).map_err(|e| cfg.core_err(&sp, &e))?;
            let mut header: Vec<String> =
                ["rep", "seed", "degenerate", "covered", "interval_lo", "interval_hi"].map(String::from).to_vec();
            header.extend(ids.iter().map(|id| format!("covered_{id}")));
            header.extend(ids.iter().map(|id| format!("weight_{id}")));
            let rows = t
                .records
                .iter()
                .map(|r| {
                    let mut row = vec![r.rep.to_string(), r.seed.to_string(), r.degenerate.is_some().to_string()];
                    match &r.mixture {
                        Some(iv) => row.extend([iv.covered.to_string(), fmt_f64(iv.lower), fmt_f64(iv.upper)]),
                        None => row.extend([String::new(), String::new(), String::new()]),
                    }
                    row.extend(r.per_family.iter().map(|iv| iv.as_ref().map_or(String::new(), |iv| iv.covered.to_string())));
                    match &r.weights {
                        Some(w) => row.extend(w.iter().map(|&x| fmt_f64(x))),
                        None => row.extend(ids.iter().map(|_| String::new())),
                    }
                    row
                })
                .collect();
            let mut v = to_value(&t);
            if let Value::Object(m) = &mut v {
                m.remove("records");
            }
            v["experiment"] = json!("coverage");
            (v, Table { header, rows })
        }
        ExperimentCfg::Concentration => {
            let schedule = sim.schedule.clone().unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
            let t = weight_concentration_experiment(default_engine(), &model, &truth, &schedule, sim.reps, seed, &settings)
                .map_err(|e| cfg.core_err(&sp, &e))?;
            let mut header: Vec<String> = ["n", "valid", "degenerate"].map(String::from).to_vec();
            header.extend(ids.iter().map(|id| format!("weight_{id}")));
            let rows = t
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.n.to_string(), r.valid.to_string(), r.degenerate.to_string()];
                    row.extend(r.mean_weights.iter().map(|&x| fmt_f64(x)));
                    row
                })
                .collect();
            let mut v = to_value(&t);
            v["experiment"] = json!("concentration");
            (v, Table { header, rows })
        }
    };
    let mut body = Map::new();
    body.insert("families".into(), families_block(&model, None, false));
    body.insert("simulate".into(), result);
    Ok(Output { report: run.finish(Some(seed), body), table: Some(table) })
}
