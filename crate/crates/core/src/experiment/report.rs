use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AblationReport, Method, Metric, RunReport};
use crate::error::{Error, Result};
use crate::stats::SignificanceResult;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn methods_in(reports: &[&RunReport]) -> Vec<Method> {
    Method::ALL
        .into_iter()
        .filter(|m| reports.iter().any(|r| r.methods.contains(m)))
        .collect()
}

/// One row per method, one `mean ± std` column per dataset.
pub fn metrics_table_markdown(reports: &[&RunReport], metric: Metric) -> String {
    let mut s = String::new();
    let _ = write!(s, "| Method |");
    for r in reports {
        let _ = write!(s, " {} |", r.dataset);
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(reports.len()));
    s.push('\n');
    for m in methods_in(reports) {
        let _ = write!(s, "| {} |", m.display_name());
        for r in reports {
            match r.aggregate(m, metric) {
                Some(a) if a.n > 0 => {
                    let _ = write!(s, " {:.4} ± {:.4} |", a.mean, a.std);
                }
                _ => s.push_str(" n/a |"),
            }
        }
        s.push('\n');
    }
    s
}

/// Long format: `method,dataset,mean,std,n`.
pub fn metrics_table_csv(reports: &[&RunReport], metric: Metric) -> String {
    let header = ["method", "dataset", "mean", "std", "n"].map(String::from);
    let mut rows = Vec::new();
    for m in methods_in(reports) {
        for r in reports {
            if let Some(a) = r.aggregate(m, metric) {
                rows.push(vec![
                    m.name().into(),
                    r.dataset.clone(),
                    a.mean.to_string(),
                    a.std.to_string(),
                    a.n.to_string(),
                ]);
            }
        }
    }
    csv_string(&header, &rows)
}

fn p_cell(r: &Option<SignificanceResult>) -> String {
    match r {
        Some(x) if x.p_value < 1e-4 => format!("{:.2e}", x.p_value),
        Some(x) => format!("{:.4}", x.p_value),
        None => "n/a".into(),
    }
}

/// ART against every other method: both two-sided p-values.
pub fn significance_table_markdown(report: &RunReport) -> String {
    let mut s = format!(
        "ART vs. each method on {} (macro-F1, paired over seeds)\n\n| Method | Paired t-test | Wilcoxon test |\n|---|---|---|\n",
        report.dataset
    );
    for row in &report.summary.significance {
        let _ = writeln!(
            s,
            "| {} | {} | {} |",
            row.method.display_name(),
            p_cell(&row.t_test),
            p_cell(&row.wilcoxon)
        );
    }
    s
}

fn significance_csv(report: &RunReport) -> String {
    let header = [
        "method",
        "n",
        "t_statistic",
        "t_p_value",
        "wilcoxon_statistic",
        "wilcoxon_p_value",
        "wilcoxon_exact",
        "note",
    ]
    .map(String::from);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .summary
        .significance
        .iter()
        .map(|r| {
            let notes: Vec<String> = [
                r.t_test.as_ref().and_then(|t| t.note.clone()),
                r.wilcoxon.as_ref().and_then(|w| w.note.clone()),
                r.error.clone(),
            ]
            .into_iter()
            .flatten()
            .collect();
            vec![
                r.method.name().into(),
                r.n.to_string(),
                opt(r.t_test.as_ref().map(|t| t.statistic)),
                opt(r.t_test.as_ref().map(|t| t.p_value)),
                opt(r.wilcoxon.as_ref().map(|w| w.statistic)),
                opt(r.wilcoxon.as_ref().map(|w| w.p_value)),
                r.wilcoxon
                    .as_ref()
                    .map(|w| w.exact.to_string())
                    .unwrap_or_default(),
                notes.join("; "),
            ]
        })
        .collect();
    csv_string(&header, &rows)
}

fn ranks_markdown(report: &RunReport) -> String {
    let mut s = format!(
        "Average macro-F1 rank over {} seeds (1 = best)\n\n| Method | Rank |\n|---|---|\n",
        report.summary.ranked_seeds
    );
    for (m, r) in &report.summary.ranks {
        let _ = writeln!(s, "| {} | {:.2} |", m.display_name(), r);
    }
    s
}

/// One line of `per_seed.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSeedRow {
    pub dataset: String,
    pub method: Method,
    pub seed: u64,
    pub macro_f1: Option<f64>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub epochs_trained: Option<usize>,
    pub error: Option<String>,
}

fn per_seed_rows(report: &RunReport) -> Vec<PerSeedRow> {
    report
        .cells
        .iter()
        .map(|c| PerSeedRow {
            dataset: report.dataset.clone(),
            method: c.method,
            seed: c.seed,
            macro_f1: c.metrics.map(|m| m.macro_f1),
            macro_precision: c.metrics.map(|m| m.macro_precision),
            macro_recall: c.metrics.map(|m| m.macro_recall),
            accuracy: c.metrics.map(|m| m.accuracy),
            epochs_trained: c.metrics.map(|m| m.epochs_trained),
            error: c.error.clone(),
        })
        .collect()
}

pub fn read_per_seed_csv(path: impl AsRef<Path>) -> Result<Vec<PerSeedRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<PerSeedRow>, _>>()
        .map_err(csv_err(path))
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn epoch_history_csv(report: &RunReport) -> String {
    let header = ["method", "seed", "epoch", "lr", "train_loss", "val_loss"].map(String::from);
    let mut rows = Vec::new();
    for c in &report.cells {
        for e in &c.history {
            rows.push(vec![
                c.method.name().into(),
                c.seed.to_string(),
                e.epoch.to_string(),
                e.lr.to_string(),
                e.train_loss.to_string(),
                e.val_loss.to_string(),
            ]);
        }
    }
    csv_string(&header, &rows)
}

fn boost_history_csv(report: &RunReport) -> Option<String> {
    let first = report
        .cells_for(Method::Art)
        .find(|c| !c.boosts.is_empty())?;
    let k = first.boosts[0].target_counts.len();
    let mut header = vec!["seed".to_string(), "epoch".to_string()];
    for prefix in ["f", "s", "w", "p", "count"] {
        header.extend((0..k).map(|i| format!("{prefix}_{i}")));
    }
    let mut rows = Vec::new();
    for c in report.cells_for(Method::Art) {
        for b in &c.boosts {
            let mut row = vec![c.seed.to_string(), b.epoch.to_string()];
            let blank = || vec![String::new(); k];
            let fmt = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
            match &b.adaptive {
                Some(a) => {
                    row.extend(fmt(&a.f1_per_class));
                    row.extend(fmt(&a.difficulty));
                    row.extend(fmt(&a.weights));
                }
                None => {
                    row.extend(blank());
                    row.extend(blank());
                    row.extend(blank());
                }
            }
            row.extend(fmt(b.distribution.probs()));
            row.extend(b.target_counts.iter().map(|c| c.to_string()));
            rows.push(row);
        }
    }
    Some(csv_string(&header, &rows))
}

/// Writes every table for one run into `dir` (created if missing) and
/// returns the written paths.
pub fn emit_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
        Ok(())
    };
    for metric in Metric::ALL {
        put(
            &format!("{}.md", metric.name()),
            format!(
                "{} (mean ± std over seeds)\n\n{}",
                metric.title(),
                metrics_table_markdown(&[report], metric)
            ),
        )?;
        put(
            &format!("{}.csv", metric.name()),
            metrics_table_csv(&[report], metric),
        )?;
    }
    if !report.summary.significance.is_empty() {
        put("significance.md", significance_table_markdown(report))?;
        put("significance.csv", significance_csv(report))?;
    }
    put("ranks.md", ranks_markdown(report))?;
    put("epoch_history.csv", epoch_history_csv(report))?;
    if let Some(text) = boost_history_csv(report) {
        put("boost_history.csv", text)?;
    }
    let path = dir.join("per_seed.csv");
    write_csv_rows(&path, &per_seed_rows(report))?;
    written.push(path);
    Ok(written)
}

/// `ablation_<variable>.csv` and `.md`: one row per (setting, method).
pub fn emit_ablation(ablation: &AblationReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let var = ablation.variable.name();
    let header = [
        "variable",
        "value",
        "secondary",
        "method",
        "mean_macro_f1",
        "std_macro_f1",
        "n",
    ]
    .map(String::from);
    let mut rows = Vec::new();
    let mut md = format!(
        "Macro-F1 over `{var}`\n\n| {var} | secondary | Method | Macro-F1 |\n|---|---|---|---|\n"
    );
    for p in &ablation.points {
        for &m in &p.report.methods {
            let Some(a) = p.report.aggregate(m, Metric::MacroF1) else {
                continue;
            };
            let sec = p.secondary.map(|s| s.to_string()).unwrap_or_default();
            rows.push(vec![
                var.into(),
                p.value.to_string(),
                sec.clone(),
                m.name().into(),
                a.mean.to_string(),
                a.std.to_string(),
                a.n.to_string(),
            ]);
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.4} ± {:.4} |",
                p.value,
                if sec.is_empty() { "-" } else { &sec },
                m.display_name(),
                a.mean,
                a.std
            );
        }
    }
    let csv_path = dir.join(format!("ablation_{var}.csv"));
    write_text(&csv_path, &csv_string(&header, &rows))?;
    let md_path = dir.join(format!("ablation_{var}.md"));
    write_text(&md_path, &md)?;
    Ok(vec![csv_path, md_path])
}
