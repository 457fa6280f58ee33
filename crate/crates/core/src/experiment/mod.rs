//! Seeded (method x seed) experiment grids, aggregation, significance
//! against ART, ablation sweeps and report files.

mod ablation;
mod config;
mod report;
mod runner;

pub use ablation::{run_ablation, run_ablation_on, AblationPoint, AblationReport};
pub use config::{
    apply_override, AblationConfig, DatasetConfig, ExperimentConfig, MethodParams, SweepVariable,
    DEFAULT_SEEDS,
};
pub use report::{
    emit_ablation, emit_report, metrics_table_csv, metrics_table_markdown, read_per_seed_csv,
    significance_table_markdown, PerSeedRow,
};
pub use runner::{
    prepare_seed, run_cell, run_experiment, run_experiment_on, summarize, Aggregate, CellMetrics,
    CellResult, Metric, PreparedSeed, RunReport, SignificanceRow, Summary,
};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Every method the harness can train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Baseline,
    Ros,
    Rus,
    Smote,
    Msmote,
    Nearmiss,
    CostSensitive,
    Focal,
    Ohem,
    LdamDrw,
    Art,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Baseline,
        Method::Ros,
        Method::Rus,
        Method::Smote,
        Method::Msmote,
        Method::Nearmiss,
        Method::CostSensitive,
        Method::Focal,
        Method::Ohem,
        Method::LdamDrw,
        Method::Art,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Ros => "ros",
            Self::Rus => "rus",
            Self::Smote => "smote",
            Self::Msmote => "msmote",
            Self::Nearmiss => "nearmiss",
            Self::CostSensitive => "cost_sensitive",
            Self::Focal => "focal",
            Self::Ohem => "ohem",
            Self::LdamDrw => "ldam_drw",
            Self::Art => "art",
        }
    }

    /// Row label in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::Baseline => "Baseline",
            Self::Ros => "ROS",
            Self::Rus => "RUS",
            Self::Smote => "SMOTE",
            Self::Msmote => "MSMOTE",
            Self::Nearmiss => "NearMiss",
            Self::CostSensitive => "Cost-Sensitive",
            Self::Focal => "Focal Loss",
            Self::Ohem => "OHEM",
            Self::LdamDrw => "LDAM+DRW",
            Self::Art => "ART",
        }
    }

    /// Resamples the training split once before training.
    pub fn is_resampling(self) -> bool {
        matches!(
            self,
            Self::Ros | Self::Rus | Self::Smote | Self::Msmote | Self::Nearmiss
        )
    }

    /// Trains on the untouched split with a modified loss.
    pub fn is_loss_based(self) -> bool {
        matches!(
            self,
            Self::CostSensitive | Self::Focal | Self::Ohem | Self::LdamDrw
        )
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trips() {
        assert_eq!(Method::ALL.len(), 11);
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("mixup".parse::<Method>().is_err());
        let resampling = Method::ALL.iter().filter(|m| m.is_resampling()).count();
        let loss = Method::ALL.iter().filter(|m| m.is_loss_based()).count();
        assert_eq!((resampling, loss), (5, 4));
    }
}
