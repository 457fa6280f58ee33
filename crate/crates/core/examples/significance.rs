//! Paired t-test and exact Wilcoxon test of ART against three baselines,
//! over the 20 default seeds on Pima.
//!
//! cargo run --release --example significance

use std::path::PathBuf;

use artlab::experiment::{
    run_experiment, significance_table_markdown, ExperimentConfig, Method, Metric,
};
use artlab::stats::{paired_t_test, wilcoxon_signed_rank};

fn main() -> artlab::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/pima.toml");
    let mut config = ExperimentConfig::load(path, &[])?;
    config.methods = vec![Method::Baseline, Method::Focal, Method::Smote, Method::Art];
    let report = run_experiment(&config)?;

    for m in &config.methods {
        let a = report.aggregate(*m, Metric::MacroF1).expect("aggregated");
        println!("{:<11} {:.4} ± {:.4}", m.display_name(), a.mean, a.std);
    }
    println!("\n{}", significance_table_markdown(&report));

    // the same numbers by hand from the per-seed scores
    let scores = |m| -> Vec<f64> {
        report
            .per_seed(m, Metric::MacroF1)
            .iter()
            .map(|s| s.1)
            .collect()
    };
    let (art, base) = (scores(Method::Art), scores(Method::Baseline));
    let t = paired_t_test(&art, &base)?;
    let w = wilcoxon_signed_rank(&art, &base)?;
    println!(
        "ART vs Baseline: t = {:.3} (p {:.4}), W = {} (p {:.4}, exact: {})",
        t.statistic, t.p_value, w.statistic, w.p_value, w.exact
    );
    Ok(())
}
