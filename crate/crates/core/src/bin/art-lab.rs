use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use artlab::experiment::{
    emit_ablation, emit_report, run_ablation, run_experiment, AblationConfig, ExperimentConfig,
    Method, SweepVariable,
};

#[derive(Parser)]
#[command(
    name = "art-lab",
    version,
    about = "Seeded imbalanced-classification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (method x seed) grid, or an ablation sweep, from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Comma-separated method names; overrides the config.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        /// Comma-separated seeds; overrides the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Sweep variable: blending_constant, boost_frequency, model_width or imbalance_ratio.
        #[arg(long)]
        ablation: Option<SweepVariable>,
        /// Dotted `key=value` config overrides, e.g. `trainer.epochs=50`.
        overrides: Vec<String>,
    },
}

fn run(
    config: PathBuf,
    out_dir: PathBuf,
    methods: Option<Vec<Method>>,
    seeds: Option<Vec<u64>>,
    ablation: Option<SweepVariable>,
    overrides: Vec<String>,
) -> artlab::Result<()> {
    let mut cfg = ExperimentConfig::load(&config, &overrides)?;
    if let Some(m) = methods {
        cfg.methods = m;
    }
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(v) = ablation {
        if cfg.ablation.as_ref().map(|a| a.variable) != Some(v) {
            cfg.ablation = Some(AblationConfig::new(v));
        }
    }
    cfg.validate()?;
    let dir = out_dir.join(cfg.dataset_name());

    if ablation.is_some() {
        let report = run_ablation(&cfg)?;
        for path in emit_ablation(&report, &dir)? {
            println!("wrote {}", path.display());
        }
        return Ok(());
    }

    let report = run_experiment(&cfg)?;
    for path in emit_report(&report, &dir)? {
        println!("wrote {}", path.display());
    }
    println!();
    for (m, mean) in report.leaderboard() {
        let a = report
            .aggregate(m, artlab::experiment::Metric::MacroF1)
            .expect("aggregated");
        println!(
            "{:<15} macro-F1 {:.4} ± {:.4} (n={})",
            m.display_name(),
            mean,
            a.std,
            a.n
        );
    }
    for (m, failures) in &report.summary.failures {
        if *failures > 0 {
            println!(
                "{} failed on {failures} seed(s); see per_seed.csv",
                m.display_name()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let Command::Run {
        config,
        out_dir,
        methods,
        seeds,
        ablation,
        overrides,
    } = Cli::parse().command;
    match run(config, out_dir, methods, seeds, ablation, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
