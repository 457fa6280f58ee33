//! All 11 methods on Pima, Yeast and Red Wine over the 20 default seeds,
//! printed as one macro-F1 table, with per-dataset reports under results/.
//!
//! cargo run --release --example reproduce_table

use std::path::PathBuf;

use artlab::experiment::{
    emit_report, metrics_table_markdown, run_experiment, ExperimentConfig, Metric,
};

fn main() -> artlab::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut reports = Vec::new();
    for file in ["pima.toml", "yeast.toml", "winequality.toml"] {
        let config = ExperimentConfig::load(root.join("configs").join(file), &[])?;
        let report = run_experiment(&config)?;
        emit_report(&report, root.join("results").join(&report.dataset))?;
        eprintln!("{} done", report.dataset);
        reports.push(report);
    }
    let refs: Vec<_> = reports.iter().collect();
    println!("{}", metrics_table_markdown(&refs, Metric::MacroF1));
    for r in &reports {
        let mut sorted = r.summary.ranks.clone();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
        let ranks: Vec<String> = sorted
            .iter()
            .take(3)
            .map(|(m, rank)| format!("{} {rank:.2}", m.display_name()))
            .collect();
        println!("{} best average ranks: {}", r.dataset, ranks.join(", "));
    }
    Ok(())
}
