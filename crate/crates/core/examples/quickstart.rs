//! Train one MLP with ART on Pima and watch the sampling distribution move.
//!
//! cargo run --release --example quickstart

use std::path::PathBuf;

use artlab::art::{art_fit, ArtConfig};
use artlab::data::{load_csv, stratified_split, zscore_apply, zscore_fit, SplitFractions};
use artlab::metrics::evaluate;
use artlab::nn::{Mlp, TrainerConfig};
use artlab::rng::{stream, SeedStreams};

fn main() -> artlab::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/pima.csv");
    let ds = load_csv(path, "outcome")?;
    let streams = SeedStreams::new(42);

    let split = stratified_split(
        &ds,
        &SplitFractions::default(),
        &mut streams.stream(stream::SPLIT),
    )?;
    let z = zscore_fit(&split.train)?;
    let (train, val, test) = (
        zscore_apply(&z, &split.train)?,
        zscore_apply(&z, &split.validation)?,
        zscore_apply(&z, &split.test)?,
    );
    println!(
        "train {:?}  validation {:?}  test {:?}",
        train.class_counts(),
        val.class_counts(),
        test.class_counts()
    );

    let trainer = TrainerConfig::default();
    let mut model = Mlp::init(
        &trainer.layer_widths(train.dim(), train.num_classes()),
        &mut streams.stream(stream::INIT),
    )?;
    let art = ArtConfig {
        blending_constant: 0.5,
        boost_frequency: 5,
    };
    let report = art_fit(
        &mut model,
        &train,
        &val,
        &art,
        &trainer,
        &mut streams.stream(stream::RESAMPLE),
        &mut streams.stream(stream::SHUFFLE),
    )?;

    println!("\nepoch  val F1 per class   sampling p      rows per class");
    for b in &report.boosts {
        let f1 = b
            .adaptive
            .as_ref()
            .map(|a| format!("{:.3?}", a.f1_per_class))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>5}  {f1:<17}  {:.3?}  {:?}",
            b.epoch,
            b.distribution.probs(),
            b.target_counts
        );
    }

    let pred = model.predict(test.features().view())?;
    let m = evaluate(test.labels(), &pred, test.num_classes())?;
    println!(
        "\nstopped after {} epochs (best {}), test macro-F1 {:.4}, accuracy {:.4}",
        report.fit.epochs_trained(),
        report.fit.best_epoch,
        m.macro_f1,
        m.accuracy
    );
    Ok(())
}
