//! Experiment configuration: one JSON file, strict keys, defaults for
//! everything except the data paths.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use curre_core::{build_schedule, CurriculumOptions, CurriculumSchedule, ModelConfig, OptimConfig, SyntheticSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Environment variable naming the output directory when neither `--out`
/// nor `output_dir` is given.
pub const OUT_DIR_ENV: &str = "CURRE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "curre-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    #[default]
    Curriculum,
    ShuffledBaseline,
    AntiCurriculum,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Curriculum => "curriculum",
            Arm::ShuffledBaseline => "shuffled-baseline",
            Arm::AntiCurriculum => "anti-curriculum",
        }
    }
}

/// Where corpora come from. Relative paths resolve against the config
/// file's directory; absent paths fall back to the `gen-synth` outputs in
/// the output directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Used by `gen-synth`; its `seed` is replaced by the master seed.
    pub synthetic: SyntheticSpec,
}

/// [`ModelConfig`] minus the label count, which comes from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub gat_dim: usize,
    pub leaky_relu_slope: f64,
    pub dropout_rate: f64,
    pub vocab_hash_buckets: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            embed_dim: m.embed_dim,
            gat_dim: m.gat_dim,
            leaky_relu_slope: m.leaky_relu_slope,
            dropout_rate: m.dropout_rate,
            vocab_hash_buckets: m.vocab_hash_buckets,
        }
    }
}

impl ModelSection {
    pub fn with_labels(&self, num_labels: usize) -> ModelConfig {
        ModelConfig {
            embed_dim: self.embed_dim,
            gat_dim: self.gat_dim,
            leaky_relu_slope: self.leaky_relu_slope,
            dropout_rate: self.dropout_rate,
            vocab_hash_buckets: self.vocab_hash_buckets,
            num_labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub epochs_per_stage: usize,
    pub final_full_epochs: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { epochs_per_stage: 3, final_full_epochs: 6 }
    }
}

/// `optim.epochs` sets the cross-review sub-model budget. The final model's
/// budget is the schedule's total, shared by all arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub model: ModelSection,
    pub optim: OptimConfig,
    pub folds: usize,
    pub buckets: usize,
    pub schedule: ScheduleConfig,
    pub arm: Arm,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub curriculum: CurriculumOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            model: ModelSection::default(),
            optim: OptimConfig::default(),
            folds: 5,
            buckets: 3,
            schedule: ScheduleConfig::default(),
            arm: Arm::default(),
            seed: 0,
            output_dir: None,
            curriculum: CurriculumOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.model.with_labels(2).validate().map_err(|e| prefixed("model", e))?;
        self.optim.validate().map_err(|e| prefixed("optim", e))?;
        self.data.synthetic.validate().map_err(|e| prefixed("data.synthetic", e))?;
        if self.folds < 2 {
            bail!("invalid configuration `folds`: need at least 2 folds, got {}", self.folds);
        }
        self.schedule()?;
        Ok(())
    }

    /// The cumulative curriculum schedule over `buckets` buckets.
    pub fn schedule(&self) -> anyhow::Result<CurriculumSchedule> {
        build_schedule(self.buckets, self.schedule.epochs_per_stage, self.schedule.final_full_epochs)
            .map_err(anyhow::Error::from)
    }

    /// Hex SHA-256 of the config as serialized, ignoring where outputs go.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Makes data paths absolute relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.data.train, &mut self.data.test, &mut self.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

fn prefixed(section: &str, err: curre_core::Error) -> anyhow::Error {
    match err {
        curre_core::Error::Config { field, message } => {
            anyhow!("invalid configuration `{section}.{field}`: {message}")
        }
        other => anyhow!(other),
    }
}

/// Reads, validates and returns the config at `path`.
pub fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let mut config = parse_config(&bytes)?;
    config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(config)
}

/// Parses and validates config JSON. Paths are left as written.
pub fn parse_config(bytes: &[u8]) -> anyhow::Result<ExperimentConfig> {
    let value: Value = serde_json::from_slice(bytes).context("config is not valid JSON")?;
    if !value.is_object() {
        bail!("config must be a JSON object");
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(&value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        match unknown_field(&inner) {
            Some(key) => {
                let section = path.rsplit_once('.').map_or("", |(s, _)| s);
                let section = if path == "." || section == "." { "" } else { section };
                let full = if section.is_empty() { key.to_owned() } else { format!("{section}.{key}") };
                match suggest_key(section, key) {
                    Some(s) => anyhow!("unknown key `{full}`; did you mean `{s}`?"),
                    None => anyhow!("unknown key `{full}`"),
                }
            }
            None => anyhow!("invalid configuration `{path}`: {inner}"),
        }
    })?;
    config.validate()?;
    Ok(config)
}

fn unknown_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("unknown field `")?;
    rest.split_once('`').map(|(key, _)| key)
}

/// Every dotted key path a config accepts.
pub fn known_keys() -> Vec<String> {
    let value = serde_json::to_value(ExperimentConfig::default()).expect("config serializes");
    let mut out = Vec::new();
    flatten_keys("", &value, &mut out);
    out
}

fn flatten_keys(prefix: &str, value: &Value, out: &mut Vec<String>) {
    if let Value::Object(map) = value {
        for (k, v) in map {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            out.push(path.clone());
            flatten_keys(&path, v, out);
        }
    }
}

/// Closest known key to `key` found under `section`, searching the whole
/// config. Matches by leaf name, then by initials (`lr` for
/// `learning_rate`), then by a whole word of the leaf, then by edit
/// distance.
pub fn suggest_key(section: &str, key: &str) -> Option<String> {
    let known = known_keys();
    let leaf = |p: &str| p.rsplit('.').next().unwrap_or(p).to_owned();
    let initials = |p: &str| leaf(p).split('_').filter_map(|w| w.chars().next()).collect::<String>();
    let same_section = |p: &str| p.rsplit_once('.').map_or("", |(s, _)| s) == section;
    let pick = |hits: Vec<&String>| -> Option<String> {
        hits.iter().find(|p| same_section(p)).or_else(|| hits.first()).map(|p| p.to_string())
    };
    let key_lower = key.to_lowercase();
    if let Some(s) = pick(known.iter().filter(|p| leaf(p) == key_lower).collect()) {
        return Some(s);
    }
    if key_lower.len() >= 2 {
        if let Some(s) = pick(known.iter().filter(|p| initials(p) == key_lower).collect()) {
            return Some(s);
        }
    }
    if let Some(s) = pick(known.iter().filter(|p| leaf(p).split('_').any(|w| w == key_lower)).collect()) {
        return Some(s);
    }
    known
        .iter()
        .map(|p| (strsim::normalized_damerau_levenshtein(&leaf(p), &key_lower), same_section(p), p))
        .filter(|(score, _, _)| *score >= 0.6)
        .max_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, p)| p.clone())
}
