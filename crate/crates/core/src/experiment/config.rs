use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Method;
use crate::art::ArtConfig;
use crate::data::SplitFractions;
use crate::error::{Error, Result};
use crate::nn::TrainerConfig;
use crate::resample::NearMissVersion;

/// The twenty seeds of the reference protocol.
pub const DEFAULT_SEEDS: [u64; 20] = [
    1834, 8993, 412, 4523, 182, 41921, 53178, 4536, 89, 101172, 3812, 76459, 21734, 5601, 14923,
    32871, 982, 61435, 23490, 7711,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Report name; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    pub label: String,
}

/// Per-method hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodParams {
    /// Oversamplers grow every class to at least `oversample_ratio * n_max`
    /// rows; 1.0 balances to the majority.
    pub oversample_ratio: f64,
    /// Undersamplers shrink every class to at most `undersample_ratio * n_min`
    /// rows; 1.0 balances to the minority.
    pub undersample_ratio: f64,
    pub smote_k: usize,
    pub msmote_k: usize,
    pub nearmiss_version: u8,
    pub nearmiss_m: usize,
    pub focal_gamma: f64,
    /// Use inverse-frequency class weights inside the focal loss.
    pub focal_class_weights: bool,
    pub ohem_fraction: f64,
    pub ldam_max_margin: f64,
    /// Epoch at which deferred re-weighting starts; defaults to half the budget.
    pub drw_start_epoch: Option<usize>,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            oversample_ratio: 1.0,
            undersample_ratio: 1.0,
            smote_k: 5,
            msmote_k: 5,
            nearmiss_version: 1,
            nearmiss_m: 3,
            focal_gamma: 2.0,
            focal_class_weights: false,
            ohem_fraction: 0.7,
            ldam_max_margin: 0.5,
            drw_start_epoch: None,
        }
    }
}

impl MethodParams {
    pub fn nearmiss(&self) -> Result<NearMissVersion> {
        match NearMissVersion::try_from(self.nearmiss_version).map_err(Error::Config)? {
            NearMissVersion::V3 { .. } => Ok(NearMissVersion::V3 { m: self.nearmiss_m }),
            v => Ok(v),
        }
    }

    pub fn drw_start(&self, epochs: usize) -> usize {
        self.drw_start_epoch.unwrap_or((epochs / 2).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    BlendingConstant,
    BoostFrequency,
    ModelWidth,
    ImbalanceRatio,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            Self::BlendingConstant => "blending_constant",
            Self::BoostFrequency => "boost_frequency",
            Self::ModelWidth => "model_width",
            Self::ImbalanceRatio => "imbalance_ratio",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            Self::BlendingConstant => (0..=10).map(|i| i as f64 / 10.0).collect(),
            Self::BoostFrequency => (1..=10).map(f64::from).collect(),
            Self::ModelWidth => (4..=9).map(|p| f64::from(1u32 << p)).collect(),
            Self::ImbalanceRatio => vec![2.0, 5.0, 10.0, 20.0, 50.0],
        }
    }

    /// The second ART hyperparameter held at several levels during the
    /// `c` and `bf` sweeps.
    pub fn default_secondary(self) -> Vec<f64> {
        match self {
            Self::BlendingConstant => vec![1.0, 4.0, 8.0],
            Self::BoostFrequency => vec![0.25, 0.5, 0.75],
            Self::ModelWidth | Self::ImbalanceRatio => Vec::new(),
        }
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blending_constant" => Ok(Self::BlendingConstant),
            "boost_frequency" => Ok(Self::BoostFrequency),
            "model_width" => Ok(Self::ModelWidth),
            "imbalance_ratio" => Ok(Self::ImbalanceRatio),
            other => Err(Error::Config(format!(
                "unknown sweep variable `{other}` (expected blending_constant, boost_frequency, model_width or imbalance_ratio)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    pub variable: SweepVariable,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Levels of the other ART hyperparameter (bf for a `c` sweep, `c` for a
    /// `bf` sweep).
    #[serde(default)]
    pub secondary: Option<Vec<f64>>,
    /// Methods compared at each point; defaults to ART alone for the `c` and
    /// `bf` sweeps and to baseline and ART otherwise.
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
}

impl AblationConfig {
    pub fn new(variable: SweepVariable) -> Self {
        Self {
            variable,
            values: None,
            secondary: None,
            methods: None,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.values
            .clone()
            .unwrap_or_else(|| self.variable.default_values())
    }

    pub fn secondary(&self) -> Vec<f64> {
        self.secondary
            .clone()
            .unwrap_or_else(|| self.variable.default_secondary())
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| match self.variable {
            SweepVariable::BlendingConstant | SweepVariable::BoostFrequency => vec![Method::Art],
            _ => vec![Method::Baseline, Method::Art],
        })
    }
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub art: ArtConfig,
    #[serde(default)]
    pub params: MethodParams,
    /// Majority-to-minority ratio imposed on the full dataset before
    /// splitting; absent means the data is used as is.
    #[serde(default)]
    pub imbalance_ratio: Option<f64>,
    #[serde(default)]
    pub ablation: Option<AblationConfig>,
    /// Parallel worker threads; absent uses every core.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// A config with every default, reading `path` with label column `label`.
    pub fn for_dataset(path: impl Into<PathBuf>, label: &str) -> Self {
        Self {
            dataset: DatasetConfig {
                name: None,
                path: path.into(),
                label: label.to_string(),
            },
            split: SplitFractions::default(),
            seeds: default_seeds(),
            methods: default_methods(),
            trainer: TrainerConfig::default(),
            art: ArtConfig::default(),
            params: MethodParams::default(),
            imbalance_ratio: None,
            ablation: None,
            threads: None,
        }
    }

    /// Parses TOML text, applies `key=value` overrides (dotted keys, TOML
    /// values; bare words are taken as strings) and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a relative dataset path is resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text, overrides)?;
        if config.dataset.path.is_relative() {
            if let Some(dir) = path.parent() {
                config.dataset.path = dir.join(&config.dataset.path);
            }
        }
        Ok(config)
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.name.clone().unwrap_or_else(|| {
            self.dataset
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!("seed {s} listed twice")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        let mut seen = HashSet::new();
        if let Some(m) = self.methods.iter().find(|m| !seen.insert(**m)) {
            return Err(Error::Config(format!("method {} listed twice", m.name())));
        }
        self.trainer.validate()?;
        self.art.validate()?;
        self.params.nearmiss()?;
        if self.params.oversample_ratio <= 0.0 || self.params.undersample_ratio < 1.0 {
            return Err(Error::Config(
                "need oversample_ratio > 0 and undersample_ratio >= 1".into(),
            ));
        }
        if let Some(r) = self.imbalance_ratio {
            if !(r >= 1.0) {
                return Err(Error::Config(format!("imbalance_ratio {r} must be >= 1")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c=value` inside `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let (last, parents) = parts.split_last().expect("non-empty");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}
