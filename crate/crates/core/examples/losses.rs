//! The imbalance-aware losses, each training the same network on Red Wine.
//!
//! cargo run --release --example losses

use std::path::PathBuf;

use artlab::data::{
    class_priors, load_csv, stratified_split, zscore_apply, zscore_fit, SplitFractions,
};
use artlab::losses::{cost_sensitive_weights, ldam_margins, LossSpec};
use artlab::metrics::evaluate;
use artlab::nn::{fit, Mlp, NoHook, TrainerConfig};
use artlab::rng::SeedStreams;

fn main() -> artlab::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/winequality-red.csv");
    let ds = load_csv(path, "quality")?;
    let streams = SeedStreams::new(3);
    let split = stratified_split(
        &ds,
        &SplitFractions::default(),
        &mut streams.stream("split"),
    )?;
    let z = zscore_fit(&split.train)?;
    let train = zscore_apply(&z, &split.train)?;
    let val = zscore_apply(&z, &split.validation)?;
    let test = zscore_apply(&z, &split.test)?;

    let counts = train.class_counts();
    let priors = class_priors(&train)?;
    let trainer = TrainerConfig::default();
    println!("train counts      {counts:?}");
    println!("inverse-frequency {:.2?}", cost_sensitive_weights(&priors)?);
    println!("LDAM margins      {:.3?}\n", ldam_margins(&counts, 0.5)?);

    let losses = [
        LossSpec::CrossEntropy,
        LossSpec::cost_sensitive(&priors)?,
        LossSpec::focal(2.0, None)?,
        LossSpec::ohem(0.7)?,
        LossSpec::ldam_drw(&counts, 0.5, trainer.epochs / 2, &priors)?,
    ];
    for loss in &losses {
        // same initial weights and batch order for every loss
        let mut model = Mlp::init(
            &trainer.layer_widths(train.dim(), train.num_classes()),
            &mut streams.stream("init"),
        )?;
        let report = fit(
            &mut model,
            &train,
            &val,
            loss,
            &trainer,
            &mut streams.stream("shuffle"),
            &mut NoHook,
        )?;
        let pred = model.predict(test.features().view())?;
        let m = evaluate(test.labels(), &pred, test.num_classes())?;
        println!(
            "{:<15} epochs {:>3}  macro-F1 {:.4}  per-class F1 {:.2?}",
            loss.name(),
            report.epochs_trained(),
            m.macro_f1,
            m.f1
        );
    }
    Ok(())
}
