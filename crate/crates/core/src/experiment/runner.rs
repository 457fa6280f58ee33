use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Method};
use crate::art::{art_fit, BoostRecord};
use crate::data::{
    class_priors, load_csv, make_imbalanced, stratified_split, zscore_apply, zscore_fit, Dataset,
};
use crate::error::{Error, Result};
use crate::losses::{cost_sensitive_weights, LossSpec};
use crate::metrics::evaluate;
use crate::nn::{fit, EpochRecord, FitReport, Mlp, NoHook};
use crate::resample::{msmote, nearmiss, ros, rus, smote, ResamplePlan};
use crate::rng::{stream, SeedStreams};
use crate::stats::{average_ranks, paired_t_test, wilcoxon_signed_rank, SignificanceResult};

/// Normalized train / validation / test parts for one seed.
#[derive(Debug, Clone)]
pub struct PreparedSeed {
    pub seed: u64,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Applies the configured imbalance, splits with the seed's split stream and
/// z-scores every part with statistics fitted on the training part.
pub fn prepare_seed(ds: &Dataset, config: &ExperimentConfig, seed: u64) -> Result<PreparedSeed> {
    let streams = SeedStreams::new(seed);
    let imbalanced;
    let source = match config.imbalance_ratio {
        Some(ratio) => {
            let counts = ds.class_counts();
            let majority = (0..counts.len())
                .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                .ok_or(Error::EmptyDataset)?;
            imbalanced =
                make_imbalanced(ds, ratio, majority, &mut streams.stream(stream::IMBALANCE))?;
            &imbalanced
        }
        None => ds,
    };
    let split = stratified_split(source, &config.split, &mut streams.stream(stream::SPLIT))?;
    let z = zscore_fit(&split.train)?;
    Ok(PreparedSeed {
        seed,
        train: zscore_apply(&z, &split.train)?,
        validation: zscore_apply(&z, &split.validation)?,
        test: zscore_apply(&z, &split.test)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub accuracy: f64,
    pub epochs_trained: usize,
}

/// Outcome of one (method, seed) run. Exactly one of `metrics` and `error`
/// is set.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub method: Method,
    pub seed: u64,
    pub metrics: Option<CellMetrics>,
    pub error: Option<String>,
    pub history: Vec<EpochRecord>,
    pub boosts: Vec<BoostRecord>,
}

fn oversample_plan(counts: &[usize], ratio: f64) -> Result<ResamplePlan> {
    let max = counts.iter().copied().max().unwrap_or(0);
    let goal = (ratio * max as f64).round() as usize;
    ResamplePlan::new(
        counts
            .iter()
            .map(|&c| if c > 0 { c.max(goal) } else { 0 })
            .collect(),
    )
}

fn undersample_plan(counts: &[usize], ratio: f64) -> Result<ResamplePlan> {
    let min = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    let goal = (ratio * min as f64).round() as usize;
    ResamplePlan::new(counts.iter().map(|&c| c.min(goal)).collect())
}

fn train_method(
    prepared: &PreparedSeed,
    method: Method,
    config: &ExperimentConfig,
) -> Result<(Mlp, FitReport, Vec<BoostRecord>)> {
    let streams = SeedStreams::new(prepared.seed);
    let train = &prepared.train;
    let widths = config
        .trainer
        .layer_widths(train.dim(), train.num_classes());
    let mut model = Mlp::init(&widths, &mut streams.stream(stream::INIT))?;
    let mut shuffle = streams.stream(stream::SHUFFLE);
    let mut resample = streams.stream(stream::RESAMPLE);
    let p = &config.params;
    let counts = train.class_counts();

    if method == Method::Art {
        let r = art_fit(
            &mut model,
            train,
            &prepared.validation,
            &config.art,
            &config.trainer,
            &mut resample,
            &mut shuffle,
        )?;
        return Ok((model, r.fit, r.boosts));
    }

    let resampled = match method {
        Method::Ros => Some(ros(
            train,
            &oversample_plan(&counts, p.oversample_ratio)?,
            &mut resample,
        )?),
        Method::Smote => Some(smote(
            train,
            p.smote_k,
            &oversample_plan(&counts, p.oversample_ratio)?,
            &mut resample,
        )?),
        Method::Msmote => Some(msmote(
            train,
            p.msmote_k,
            &oversample_plan(&counts, p.oversample_ratio)?,
            &mut resample,
        )?),
        Method::Rus => Some(rus(
            train,
            &undersample_plan(&counts, p.undersample_ratio)?,
            &mut resample,
        )?),
        Method::Nearmiss => Some(nearmiss(
            train,
            p.nearmiss()?,
            &undersample_plan(&counts, p.undersample_ratio)?,
            &mut resample,
        )?),
        _ => None,
    };
    let loss = match method {
        Method::CostSensitive => LossSpec::cost_sensitive(&class_priors(train)?)?,
        Method::Focal => {
            let weights = if p.focal_class_weights {
                Some(cost_sensitive_weights(&class_priors(train)?)?)
            } else {
                None
            };
            LossSpec::focal(p.focal_gamma, weights)?
        }
        Method::Ohem => LossSpec::ohem(p.ohem_fraction)?,
        Method::LdamDrw => LossSpec::ldam_drw(
            &counts,
            p.ldam_max_margin,
            p.drw_start(config.trainer.epochs),
            &class_priors(train)?,
        )?,
        _ => LossSpec::CrossEntropy,
    };
    let report = fit(
        &mut model,
        resampled.as_ref().unwrap_or(train),
        &prepared.validation,
        &loss,
        &config.trainer,
        &mut shuffle,
        &mut NoHook,
    )?;
    Ok((model, report, Vec::new()))
}

/// Trains one method on one prepared seed and scores it on the test part.
/// Every random stream is derived from the seed alone, so the result does
/// not depend on which other cells run or in what order.
pub fn run_cell(prepared: &PreparedSeed, method: Method, config: &ExperimentConfig) -> CellResult {
    let outcome = train_method(prepared, method, config).and_then(|(model, report, boosts)| {
        let test = &prepared.test;
        let pred = model.predict(test.features().view())?;
        let m = evaluate(test.labels(), &pred, test.num_classes())?;
        let metrics = CellMetrics {
            macro_f1: m.macro_f1,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
            accuracy: m.accuracy,
            epochs_trained: report.epochs_trained(),
        };
        Ok((metrics, report.history, boosts))
    });
    match outcome {
        Ok((metrics, history, boosts)) => CellResult {
            method,
            seed: prepared.seed,
            metrics: Some(metrics),
            error: None,
            history,
            boosts,
        },
        Err(e) => failed(method, prepared.seed, e.to_string()),
    }
}

fn failed(method: Method, seed: u64, error: String) -> CellResult {
    log::warn!("{method} / seed {seed} failed: {error}");
    CellResult {
        method,
        seed,
        metrics: None,
        error: Some(error),
        history: Vec::new(),
        boosts: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MacroF1,
    Accuracy,
    MacroPrecision,
    MacroRecall,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::MacroF1,
        Metric::Accuracy,
        Metric::MacroPrecision,
        Metric::MacroRecall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MacroF1 => "macro_f1",
            Self::Accuracy => "accuracy",
            Self::MacroPrecision => "macro_precision",
            Self::MacroRecall => "macro_recall",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Self::MacroF1 => "Macro-F1",
            Self::Accuracy => "Accuracy",
            Self::MacroPrecision => "Macro precision",
            Self::MacroRecall => "Macro recall",
        }
    }

    pub fn of(self, m: &CellMetrics) -> f64 {
        match self {
            Self::MacroF1 => m.macro_f1,
            Self::Accuracy => m.accuracy,
            Self::MacroPrecision => m.macro_precision,
            Self::MacroRecall => m.macro_recall,
        }
    }
}

/// Mean and sample standard deviation (n - 1) of one metric over the
/// successful seeds of a method. The std of a single value is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std, n }
    }
}

/// ART compared with another method over the seeds both completed.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub method: Method,
    pub n: usize,
    pub t_test: Option<SignificanceResult>,
    pub wilcoxon: Option<SignificanceResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// `(method, metric) -> aggregate`, in method order then metric order.
    pub aggregates: Vec<(Method, Metric, Aggregate)>,
    pub failures: Vec<(Method, usize)>,
    pub significance: Vec<SignificanceRow>,
    /// Mean macro-F1 rank per method over seeds every method completed.
    pub ranks: Vec<(Method, f64)>,
    pub ranked_seeds: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dataset: String,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Method-major: all seeds of `methods[0]`, then `methods[1]`, ...
    pub cells: Vec<CellResult>,
    pub summary: Summary,
}

impl RunReport {
    pub fn cells_for(&self, method: Method) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(move |c| c.method == method)
    }

    /// `(seed, value)` for every successful seed of `method`.
    pub fn per_seed(&self, method: Method, metric: Metric) -> Vec<(u64, f64)> {
        self.cells_for(method)
            .filter_map(|c| c.metrics.as_ref().map(|m| (c.seed, metric.of(m))))
            .collect()
    }

    pub fn aggregate(&self, method: Method, metric: Metric) -> Option<Aggregate> {
        self.summary
            .aggregates
            .iter()
            .find(|(m, k, _)| *m == method && *k == metric)
            .map(|(_, _, a)| *a)
    }

    pub fn mean_macro_f1(&self, method: Method) -> Option<f64> {
        self.aggregate(method, Metric::MacroF1).map(|a| a.mean)
    }

    pub fn significance_for(&self, method: Method) -> Option<&SignificanceRow> {
        self.summary
            .significance
            .iter()
            .find(|r| r.method == method)
    }

    pub fn rank_of(&self, method: Method) -> Option<f64> {
        self.summary
            .ranks
            .iter()
            .find(|(m, _)| *m == method)
            .map(|(_, r)| *r)
    }

    /// Methods ordered by mean macro-F1, best first.
    pub fn leaderboard(&self) -> Vec<(Method, f64)> {
        let mut rows: Vec<(Method, f64)> = self
            .methods
            .iter()
            .filter_map(|&m| self.mean_macro_f1(m).map(|v| (m, v)))
            .filter(|(_, v)| v.is_finite())
            .collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1));
        rows
    }
}

fn paired_scores(cells: &[CellResult], a: Method, b: Method) -> (Vec<f64>, Vec<f64>) {
    let score = |m: Method, seed: u64| {
        cells
            .iter()
            .find(|c| c.method == m && c.seed == seed)
            .and_then(|c| c.metrics.map(|x| x.macro_f1))
    };
    let seeds: Vec<u64> = cells
        .iter()
        .filter(|c| c.method == a)
        .map(|c| c.seed)
        .collect();
    seeds
        .into_iter()
        .filter_map(|s| Some((score(a, s)?, score(b, s)?)))
        .unzip()
}

/// Aggregates, ART-vs-method significance and average ranks.
pub fn summarize(methods: &[Method], seeds: &[u64], cells: &[CellResult]) -> Summary {
    let mut aggregates = Vec::new();
    let mut failures = Vec::new();
    for &m in methods {
        let ok: Vec<&CellMetrics> = cells
            .iter()
            .filter(|c| c.method == m)
            .filter_map(|c| c.metrics.as_ref())
            .collect();
        failures.push((
            m,
            cells
                .iter()
                .filter(|c| c.method == m && c.error.is_some())
                .count(),
        ));
        for metric in Metric::ALL {
            let values: Vec<f64> = ok.iter().map(|x| metric.of(x)).collect();
            aggregates.push((m, metric, Aggregate::of(&values)));
        }
    }

    let mut significance = Vec::new();
    if methods.contains(&Method::Art) {
        for &m in methods.iter().filter(|&&m| m != Method::Art) {
            let (art, other) = paired_scores(cells, Method::Art, m);
            let t = paired_t_test(&art, &other);
            let w = wilcoxon_signed_rank(&art, &other);
            let error = match (&t, &w) {
                (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
                _ => None,
            };
            significance.push(SignificanceRow {
                method: m,
                n: art.len(),
                t_test: t.ok(),
                wilcoxon: w.ok(),
                error,
            });
        }
    }

    let complete: Vec<u64> = seeds
        .iter()
        .copied()
        .filter(|&s| {
            methods.iter().all(|&m| {
                cells
                    .iter()
                    .any(|c| c.method == m && c.seed == s && c.metrics.is_some())
            })
        })
        .collect();
    let scores: Vec<Vec<f64>> = methods
        .iter()
        .map(|&m| {
            complete
                .iter()
                .map(|&s| {
                    cells
                        .iter()
                        .find(|c| c.method == m && c.seed == s)
                        .and_then(|c| c.metrics.map(|x| x.macro_f1))
                        .expect("complete seed")
                })
                .collect()
        })
        .collect();
    let ranks = if complete.is_empty() {
        Vec::new()
    } else {
        average_ranks(&scores)
            .map(|r| methods.iter().copied().zip(r).collect())
            .unwrap_or_default()
    };
    Summary {
        aggregates,
        failures,
        significance,
        ranks,
        ranked_seeds: complete.len(),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Runs every (method, seed) cell of `config` on an already loaded dataset.
pub fn run_experiment_on(ds: &Dataset, name: &str, config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let methods = config.methods.clone();
    let seeds = config.seeds.clone();
    let cells = with_pool(config.threads, || {
        let prepared: Vec<std::result::Result<PreparedSeed, String>> = seeds
            .par_iter()
            .map(|&s| prepare_seed(ds, config, s).map_err(|e| e.to_string()))
            .collect();
        let grid: Vec<(Method, usize)> = methods
            .iter()
            .flat_map(|&m| (0..seeds.len()).map(move |i| (m, i)))
            .collect();
        grid.par_iter()
            .map(|&(m, i)| match &prepared[i] {
                Ok(p) => {
                    let cell = run_cell(p, m, config);
                    log::debug!("{name}: {m} / seed {} done", seeds[i]);
                    cell
                }
                Err(e) => failed(m, seeds[i], e.clone()),
            })
            .collect::<Vec<_>>()
    })?;
    let summary = summarize(&methods, &seeds, &cells);
    Ok(RunReport {
        dataset: name.to_string(),
        methods,
        seeds,
        cells,
        summary,
    })
}

/// Loads the configured dataset and runs the full grid.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let ds = load_csv(&config.dataset.path, &config.dataset.label)?;
    run_experiment_on(&ds, &config.dataset_name(), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_uses_sample_std() {
        let a = Aggregate::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.mean, 2.5);
        assert!((a.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Aggregate::of(&[0.7]).std, 0.0);
        assert!(Aggregate::of(&[]).mean.is_nan());
    }

    #[test]
    fn plans() {
        assert_eq!(
            oversample_plan(&[10, 4, 0], 1.0).unwrap().target_counts,
            vec![10, 10, 0]
        );
        assert_eq!(
            oversample_plan(&[10, 4], 0.5).unwrap().target_counts,
            vec![10, 5]
        );
        assert_eq!(
            undersample_plan(&[10, 4], 1.0).unwrap().target_counts,
            vec![4, 4]
        );
        assert_eq!(
            undersample_plan(&[10, 4, 3], 2.0).unwrap().target_counts,
            vec![6, 4, 3]
        );
    }
}
