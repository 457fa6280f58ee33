//! Sweep one ART hyperparameter on Pima and write the table to disk.
//!
//! cargo run --release --example ablation -- [blending_constant|boost_frequency|model_width|imbalance_ratio] [seeds]

use std::path::PathBuf;

use artlab::experiment::{
    emit_ablation, run_ablation, AblationConfig, ExperimentConfig, Metric, SweepVariable,
};

fn main() -> artlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let variable: SweepVariable = args
        .next()
        .as_deref()
        .unwrap_or("blending_constant")
        .parse()?;
    let seeds: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);

    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut config = ExperimentConfig::load(root.join("configs/pima.toml"), &[])?;
    config.seeds.truncate(seeds);
    let mut ablation = AblationConfig::new(variable);
    if variable == SweepVariable::BlendingConstant {
        // one boost frequency keeps the example quick
        ablation.secondary = Some(vec![1.0]);
    }
    config.ablation = Some(ablation);

    let report = run_ablation(&config)?;
    for p in &report.points {
        for &m in &p.report.methods {
            let a = p.report.aggregate(m, Metric::MacroF1).expect("aggregated");
            println!(
                "{} = {:<5} {:<9} {:.4} ± {:.4}",
                variable.name(),
                p.value,
                m.display_name(),
                a.mean,
                a.std
            );
        }
    }
    for path in emit_ablation(&report, root.join("results/Pima"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
