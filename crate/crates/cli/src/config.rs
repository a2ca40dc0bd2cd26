//! Configuration file schema and its translation into library values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use openpop_core::modelspace::{apply_prior_ratio_rule, RatioElicitation};
use openpop_core::{
    ComponentPrior, Dataset, Execution, FamilyKind, FamilySpec, FitSettings, ModelEntry, ParamVector,
    Parametrization, PopulationSpaceModel, PriorSpec, QuantitySpec,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::locate::{line_of, JsonPath};
use crate::report::canonical_fingerprint;

const FAMILY_KEYS: &str = "normal, lognormal, gamma, uniform_loc, student_t";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema: u64,
    pub seed: Option<u64>,
    pub data: Option<DataCfg>,
    pub model: Vec<EntryCfg>,
    pub elicitation: Option<ElicitationCfg>,
    #[serde(default)]
    pub settings: SettingsCfg,
    pub quantity: Option<String>,
    pub level: Option<f64>,
    pub pvalue: Option<PValueCfg>,
    pub sensitivity: Option<SensitivityCfg>,
    pub simulate: Option<SimulateCfg>,
}

/// An inline array of observations, or a source object.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DataCfg {
    Values(Vec<f64>),
    Source(DataSourceCfg),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSourceCfg {
    /// CSV file with one numeric column, relative to the config file.
    pub csv: Option<String>,
    pub synthetic: Option<SyntheticCfg>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCfg {
    pub distribution: DistCfg,
    pub n: usize,
}

/// One fully specified member of a shipped family.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistCfg {
    pub family: String,
    pub dof: Option<f64>,
    pub half_width: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametrizationCfg {
    Natural,
    MeanVariance,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryCfg {
    pub family: String,
    pub id: Option<String>,
    pub dof: Option<f64>,
    pub half_width: Option<f64>,
    pub parametrization: Option<ParametrizationCfg>,
    pub region_label: Option<String>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    pub prior_weight: f64,
    #[serde(default)]
    pub prior: BTreeMap<String, PriorCfg>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorCfg {
    Normal { mean: f64, sd: f64 },
    #[serde(alias = "lognormal")]
    LogNormal { meanlog: f64, sdlog: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    PointMass { value: f64 },
}

impl From<PriorCfg> for ComponentPrior {
    fn from(p: PriorCfg) -> Self {
        match p {
            PriorCfg::Normal { mean, sd } => ComponentPrior::Normal { mean, sd },
            PriorCfg::LogNormal { meanlog, sdlog } => ComponentPrior::LogNormal { meanlog, sdlog },
            PriorCfg::Gamma { shape, scale } => ComponentPrior::Gamma { shape, scale },
            PriorCfg::Uniform { lo, hi } => ComponentPrior::Uniform { lo, hi },
            PriorCfg::PointMass { value } => ComponentPrior::PointMass { value },
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCfg {
    PriorRatio,
}

/// Elicited post-data probability ratios against an anchor family, or the
/// rule that takes them from the prior weights.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElicitationCfg {
    pub anchor: String,
    pub ratios: Option<BTreeMap<String, f64>>,
    pub rule: Option<RuleCfg>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsCfg {
    pub nodes_per_dim: Option<usize>,
    pub span_sd: Option<f64>,
    pub max_extensions: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PValueCfg {
    pub family: Option<String>,
    pub statistic: Option<String>,
    pub uniform_demo: Option<UniformDemoCfg>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformDemoCfg {
    pub half_width: f64,
    pub y: f64,
    pub prior_null_prob: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityCfg {
    pub family: String,
    pub substitute: SubstituteCfg,
    /// Shared prior on `mean` and `variance`.
    pub prior: BTreeMap<String, PriorCfg>,
    pub quantity: Option<String>,
    pub threshold: Option<f64>,
    pub joint_grid: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstituteCfg {
    pub family: String,
    pub id: Option<String>,
    pub dof: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentCfg {
    Coverage,
    Concentration,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCfg {
    pub experiment: ExperimentCfg,
    pub truth: TruthCfg,
    pub reps: usize,
    pub n: Option<usize>,
    pub level: Option<f64>,
    pub quantity: Option<String>,
    pub oracle_draws: Option<usize>,
    pub schedule: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthCfg {
    Family(DistCfg),
    NormalMixture { weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64> },
    Contaminated { base: DistCfg, fraction: f64, contaminant: DistCfg },
    PointMass(f64),
}

/// A parsed configuration file together with its source text, used to
/// anchor error messages to lines.
#[derive(Debug)]
pub struct Loaded {
    pub path: PathBuf,
    pub text: String,
    pub raw: RawConfig,
    pub fingerprint: String,
}

impl Loaded {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(path, text)
    }

    pub fn parse(path: &Path, text: String) -> Result<Self, CliError> {
        let syntax = |e: serde_json::Error| {
            let msg = e.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
            CliError::Config(format!("{}:{}:{}: {msg}", path.display(), e.line(), e.column()))
        };
        let value: Value = serde_json::from_str(&text).map_err(syntax)?;
        let raw: RawConfig = serde_json::from_str(&text).map_err(syntax)?;
        let loaded = Self { path: path.to_path_buf(), fingerprint: canonical_fingerprint(&value), text, raw };
        if loaded.raw.schema != crate::report::SCHEMA {
            return Err(loaded.err(
                &JsonPath::root().key("schema"),
                format!("unsupported schema {}; this tool reads schema {}", loaded.raw.schema, crate::report::SCHEMA),
            ));
        }
        if loaded.raw.model.is_empty() {
            return Err(loaded.err(&JsonPath::root().key("model"), "the model needs at least one family"));
        }
        Ok(loaded)
    }

    /// `file:line: path` for a location in the config.
    pub fn at(&self, path: &JsonPath) -> String {
        let line = line_of(&self.text, path);
        if path.is_root() {
            format!("{}:{line}", self.path.display())
        } else {
            format!("{}:{line}: {path}", self.path.display())
        }
    }

    pub fn err(&self, path: &JsonPath, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{}: {msg}", self.at(path)))
    }

    pub fn core_err(&self, path: &JsonPath, e: &openpop_core::Error) -> CliError {
        CliError::from_core(self.at(path), e)
    }

    /// Directory that relative data paths are resolved against.
    fn base_dir(&self) -> &Path {
        self.path.parent().unwrap_or_else(|| Path::new("."))
    }

    pub fn settings(&self) -> Result<FitSettings, CliError> {
        let s = &self.raw.settings;
        let p = JsonPath::root().key("settings");
        let d = FitSettings::default();
        let out = FitSettings {
            nodes_per_dim: s.nodes_per_dim.unwrap_or(d.nodes_per_dim),
            span_sd: s.span_sd.unwrap_or(d.span_sd),
            max_extensions: s.max_extensions.unwrap_or(d.max_extensions),
            execution: Execution::Parallel,
        };
        if out.nodes_per_dim < 2 {
            return Err(self.err(&p.key("nodes_per_dim"), "needs at least 2 nodes per axis"));
        }
        if !(out.span_sd.is_finite() && out.span_sd > 0.0) {
            return Err(self.err(&p.key("span_sd"), "must be positive"));
        }
        Ok(out)
    }

    pub fn level(&self, flag: Option<f64>) -> Result<f64, CliError> {
        let level = flag.or(self.raw.level).unwrap_or(0.95);
        if !(level > 0.0 && level < 1.0) {
            return Err(self.err(&JsonPath::root().key("level"), format!("level must lie in (0, 1), got {level}")));
        }
        Ok(level)
    }

    /// Quantity from a command-line flag, else from `path` in the config.
    pub fn quantity(&self, flag: Option<&str>, configured: Option<&str>, path: &JsonPath) -> Result<QuantitySpec, CliError> {
        let (text, where_) = match (flag, configured) {
            (Some(f), _) => (f, None),
            (None, Some(c)) => (c, Some(path)),
            (None, None) => return Ok(QuantitySpec::Mean),
        };
        let parsed = text.parse::<QuantitySpec>().and_then(|q| q.validated());
        parsed.map_err(|e| match where_ {
            Some(p) => self.core_err(p, &e),
            None => CliError::Config(format!("--quantity: {e}")),
        })
    }

    pub fn model(&self) -> Result<PopulationSpaceModel, CliError> {
        let root = JsonPath::root().key("model");
        let mut entries = Vec::with_capacity(self.raw.model.len());
        for (i, e) in self.raw.model.iter().enumerate() {
            let p = root.index(i);
            let kind = self.family_kind(&e.family, e.dof, e.half_width, &p)?;
            let mut fam = FamilySpec::new(kind).map_err(|err| self.core_err(&p, &err))?;
            if let Some(id) = &e.id {
                fam = fam.with_id(id.clone());
            }
            if let Some(label) = &e.region_label {
                fam = fam.with_region_label(label.clone());
            }
            if let Some(ParametrizationCfg::MeanVariance) = e.parametrization {
                fam = fam
                    .with_parametrization(Parametrization::MeanVariance)
                    .map_err(|err| self.core_err(&p.key("parametrization"), &err))?;
            }
            for (name, &v) in &e.fixed {
                fam = fam.with_fixed(name, v).map_err(|err| self.core_err(&p.key("fixed").key(name), &err))?;
            }
            let prior = prior_spec(&e.prior);
            prior.resolve(&fam).map_err(|err| self.core_err(&p.key("prior"), &err))?;
            entries.push(ModelEntry::new(fam, e.prior_weight, prior));
        }
        PopulationSpaceModel::new(entries).map_err(|e| self.core_err(&root, &e))
    }

    pub fn elicitation(&self, model: &PopulationSpaceModel) -> Result<RatioElicitation, CliError> {
        let p = JsonPath::root().key("elicitation");
        let Some(e) = &self.raw.elicitation else {
            return Err(CliError::Config(format!(
                "{}: elicited weights need an `elicitation` section",
                self.path.display()
            )));
        };
        let out = match (&e.ratios, e.rule) {
            (Some(ratios), None) => RatioElicitation::new(e.anchor.clone(), ratios.iter().map(|(k, v)| (k.clone(), *v)))
                .map_err(|err| self.core_err(&p.key("ratios"), &err))?,
            (None, Some(RuleCfg::PriorRatio)) => {
                apply_prior_ratio_rule(model, &e.anchor).map_err(|err| self.core_err(&p.key("anchor"), &err))?
            }
            _ => return Err(self.err(&p, "give exactly one of `ratios` and `rule`")),
        };
        Ok(e.notes.iter().fold(out, |acc, n| acc.with_note(n.clone())))
    }

    pub fn data(&self, seed: u64) -> Result<Dataset, CliError> {
        let p = JsonPath::root().key("data");
        let Some(data) = &self.raw.data else {
            return Err(CliError::Config(format!("{}: this command needs a `data` section", self.path.display())));
        };
        match data {
            DataCfg::Values(v) => Dataset::new(v.clone()).map_err(|e| self.core_err(&p, &e)),
            DataCfg::Source(DataSourceCfg { csv: Some(file), synthetic: None }) => {
                let full = self.base_dir().join(file);
                read_csv_column(&full).and_then(|v| {
                    Dataset::new(v).map_err(|e| CliError::Config(format!("{}: {e}", full.display())))
                })
            }
            DataCfg::Source(DataSourceCfg { csv: None, synthetic: Some(s) }) => {
                let sp = p.key("synthetic");
                let (fam, theta) = self.dist(&s.distribution, &sp.key("distribution"))?;
                if s.n == 0 {
                    return Err(self.err(&sp.key("n"), "sample size must be at least 1"));
                }
                fam.sample(&theta, s.n, seed).map_err(|e| self.core_err(&sp, &e))
            }
            DataCfg::Source(_) => Err(self.err(&p, "give exactly one of `csv` and `synthetic`")),
        }
    }

    pub fn family_kind(&self, key: &str, dof: Option<f64>, half_width: Option<f64>, p: &JsonPath) -> Result<FamilyKind, CliError> {
        let kind = match key {
            "normal" => FamilyKind::Normal,
            "lognormal" => FamilyKind::LogNormal,
            "gamma" => FamilyKind::Gamma,
            "uniform_loc" => FamilyKind::UniformLocation {
                half_width: half_width.ok_or_else(|| self.err(p, "uniform_loc needs `half_width`"))?,
            },
            "student_t" => FamilyKind::StudentT { dof: dof.ok_or_else(|| self.err(p, "student_t needs `dof`"))? },
            other => return Err(self.err(&p.key("family"), format!("unknown family id `{other}` (expected one of {FAMILY_KEYS})"))),
        };
        if dof.is_some() && !matches!(kind, FamilyKind::StudentT { .. }) {
            return Err(self.err(&p.key("dof"), format!("`dof` does not apply to family `{key}`")));
        }
        if half_width.is_some() && !matches!(kind, FamilyKind::UniformLocation { .. }) {
            return Err(self.err(&p.key("half_width"), format!("`half_width` does not apply to family `{key}`")));
        }
        Ok(kind)
    }

    /// A family member with every natural parameter given by name.
    pub fn dist(&self, d: &DistCfg, p: &JsonPath) -> Result<(FamilySpec, ParamVector), CliError> {
        let fam = FamilySpec::new(self.family_kind(&d.family, d.dof, d.half_width, p)?).map_err(|e| self.core_err(p, &e))?;
        let pp = p.key("params");
        if let Some(extra) = d.params.keys().find(|k| !fam.param_names().contains(&k.as_str())) {
            return Err(self.err(&pp.key(extra), format!("family `{}` has no parameter `{extra}`", d.family)));
        }
        let values = fam
            .param_names()
            .iter()
            .map(|n| d.params.get(*n).copied().ok_or_else(|| self.err(&pp, format!("missing parameter `{n}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let theta = fam.params(&values).map_err(|e| self.core_err(&pp, &e))?;
        Ok((fam, theta))
    }
}

pub fn prior_spec(map: &BTreeMap<String, PriorCfg>) -> PriorSpec {
    PriorSpec::new(map.iter().map(|(k, v)| (k.clone(), ComponentPrior::from(*v))))
}

/// One numeric column; a non-numeric first row is taken as a header.
fn read_csv_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let fail = |line: u64, msg: String| CliError::Config(format!("{}:{line}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: cannot read data: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 1 {
            return Err(fail(line, format!("expected one column, found {}", rec.len())));
        }
        match rec[0].parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if k == 0 => {}
            Err(_) => return Err(fail(line, format!("`{}` is not a number", &rec[0]))),
        }
    }
    Ok(out)
}
