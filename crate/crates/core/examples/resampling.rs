//! Class counts produced by every resampler on the Yeast training split.
//!
//! cargo run --release --example resampling

use std::path::PathBuf;

use artlab::data::{load_csv, stratified_split, zscore_apply, zscore_fit, SplitFractions};
use artlab::resample::{
    msmote, msmote_categories, nearmiss, resample_to_distribution, ros, rus, smote, MsmoteCategory,
    NearMissVersion, ResamplePlan,
};
use artlab::rng::SeedStreams;

fn main() -> artlab::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/yeast.csv");
    let ds = load_csv(path, "localization")?;
    let streams = SeedStreams::new(7);
    let split = stratified_split(
        &ds,
        &SplitFractions::default(),
        &mut streams.stream("split"),
    )?;
    let train = zscore_apply(&zscore_fit(&split.train)?, &split.train)?;
    let counts = train.class_counts();
    println!("classes   {:?}", train.label_names());
    println!("original  {counts:?}");

    let up = ResamplePlan::balance_to_majority(&counts)?;
    let down = ResamplePlan::balance_to_minority(&counts)?;
    let mut rng = streams.stream("resample");
    println!("ROS       {:?}", ros(&train, &up, &mut rng)?.class_counts());
    println!(
        "RUS       {:?}",
        rus(&train, &down, &mut rng)?.class_counts()
    );
    println!(
        "SMOTE     {:?}",
        smote(&train, 5, &up, &mut rng)?.class_counts()
    );
    println!(
        "MSMOTE    {:?}",
        msmote(&train, 5, &up, &mut rng)?.class_counts()
    );
    for v in [
        NearMissVersion::V1,
        NearMissVersion::V2,
        NearMissVersion::V3 { m: 3 },
    ] {
        let out = nearmiss(&train, v, &down, &mut rng)?;
        println!("NearMiss{} {:?}", u8::from(v), out.class_counts());
    }

    // partial rebalancing: grow each class halfway towards the majority
    let max = *counts.iter().max().unwrap_or(&0);
    let half = ResamplePlan::new(counts.iter().map(|&c| (c + max) / 2).collect())?;
    println!(
        "SMOTE 1/2 {:?}",
        smote(&train, 5, &half, &mut rng)?.class_counts()
    );

    // the primitive ART uses: any distribution, any total
    let k = counts.len() as f64;
    let uniform = vec![1.0 / k; counts.len()];
    let out = resample_to_distribution(&train, &uniform, train.len(), &mut rng)?;
    println!("uniform   {:?} (total {})", out.class_counts(), out.len());

    let smallest = (0..counts.len()).min_by_key(|&c| counts[c]).unwrap_or(0);
    let cats = msmote_categories(&train, smallest, 5);
    let tally = |want: MsmoteCategory| cats.iter().filter(|(_, c)| *c == want).count();
    println!(
        "\nMSMOTE seeds of {}: {} security, {} border, {} noise",
        train.label_names()[smallest],
        tally(MsmoteCategory::Security),
        tally(MsmoteCategory::Border),
        tally(MsmoteCategory::Noise)
    );
    Ok(())
}
