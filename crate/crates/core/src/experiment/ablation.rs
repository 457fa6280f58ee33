use super::{run_experiment_on, ExperimentConfig, RunReport, SweepVariable};
use crate::data::{load_csv, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AblationPoint {
    pub value: f64,
    /// The level of the other ART hyperparameter, for `c` and `bf` sweeps.
    pub secondary: Option<f64>,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub variable: SweepVariable,
    pub points: Vec<AblationPoint>,
}

/// One sweep setting: primary value and optional secondary level.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Setting {
    value: f64,
    secondary: Option<f64>,
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!(
            "{what} must be a positive integer, got {v}"
        )))
    }
}

fn configure(
    base: &ExperimentConfig,
    variable: SweepVariable,
    s: Setting,
) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    c.ablation = None;
    match variable {
        SweepVariable::BlendingConstant => {
            c.art.blending_constant = s.value;
            if let Some(bf) = s.secondary {
                c.art.boost_frequency = as_count(bf, "boost_frequency")?;
            }
        }
        SweepVariable::BoostFrequency => {
            c.art.boost_frequency = as_count(s.value, "boost_frequency")?;
            if let Some(cst) = s.secondary {
                c.art.blending_constant = cst;
            }
        }
        SweepVariable::ModelWidth => {
            let w = as_count(s.value, "model_width")?;
            let depth = c.trainer.hidden_widths.len().max(1);
            c.trainer.hidden_widths = vec![w; depth];
        }
        SweepVariable::ImbalanceRatio => c.imbalance_ratio = Some(s.value),
    }
    c.validate()?;
    Ok(c)
}

/// Runs the configured sweep on an already loaded dataset: one full
/// (method x seed) grid per setting.
pub fn run_ablation_on(
    ds: &Dataset,
    name: &str,
    config: &ExperimentConfig,
) -> Result<AblationReport> {
    let ablation = config
        .ablation
        .as_ref()
        .ok_or_else(|| Error::Config("config has no [ablation] block".into()))?;
    let mut base = config.clone();
    base.methods = ablation.methods();
    let secondary = ablation.secondary();
    let levels: Vec<Option<f64>> = if secondary.is_empty() {
        vec![None]
    } else {
        secondary.into_iter().map(Some).collect()
    };
    let mut points = Vec::new();
    for sec in levels {
        for value in ablation.values() {
            let setting = Setting {
                value,
                secondary: sec,
            };
            let cfg = configure(&base, ablation.variable, setting)?;
            log::info!(
                "{name}: {} = {value}{}",
                ablation.variable.name(),
                sec.map(|s| format!(" (secondary {s})")).unwrap_or_default()
            );
            points.push(AblationPoint {
                value,
                secondary: sec,
                report: run_experiment_on(ds, name, &cfg)?,
            });
        }
    }
    Ok(AblationReport {
        variable: ablation.variable,
        points,
    })
}

/// Loads the configured dataset and runs its sweep.
pub fn run_ablation(config: &ExperimentConfig) -> Result<AblationReport> {
    let ds = load_csv(&config.dataset.path, &config.dataset.label)?;
    run_ablation_on(&ds, &config.dataset_name(), config)
}
