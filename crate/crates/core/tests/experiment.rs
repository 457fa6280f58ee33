use std::path::PathBuf;

use artlab::data::{load_csv, Dataset};
use artlab::experiment::{
    emit_ablation, emit_report, prepare_seed, read_per_seed_csv, run_ablation, run_experiment,
    run_experiment_on, AblationConfig, ExperimentConfig, Method, Metric, SweepVariable,
};
use ndarray::Array2;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn quick(methods: &[Method], seeds: &[u64]) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_dataset(data("pima.csv"), "outcome");
    c.methods = methods.to_vec();
    c.seeds = seeds.to_vec();
    c.trainer.epochs = 6;
    c
}

#[test]
fn one_method_two_seeds() {
    let r = run_experiment(&quick(&[Method::Baseline], &[1, 2])).unwrap();
    assert_eq!(r.cells.len(), 2);
    let a = r.aggregate(Method::Baseline, Metric::MacroF1).unwrap();
    assert_eq!(a.n, 2);
    let v: Vec<f64> = r
        .per_seed(Method::Baseline, Metric::MacroF1)
        .iter()
        .map(|x| x.1)
        .collect();
    let mean = (v[0] + v[1]) / 2.0;
    let std = ((v[0] - mean).powi(2) + (v[1] - mean).powi(2)).sqrt();
    assert!((a.mean - mean).abs() < 1e-12);
    assert!((a.std - std).abs() < 1e-12);
    assert!(r.summary.significance.is_empty());
}

#[test]
fn every_method_runs_and_is_compared_with_art() {
    let r = run_experiment(&quick(&Method::ALL, &[7, 8, 9])).unwrap();
    assert_eq!(r.cells.len(), 33);
    assert!(
        r.cells.iter().all(|c| c.error.is_none()),
        "{:?}",
        r.cells.iter().find_map(|c| c.error.clone())
    );
    assert_eq!(r.summary.significance.len(), 10);
    for row in &r.summary.significance {
        assert_eq!(row.n, 3);
        assert!(
            row.t_test.is_some() && row.wilcoxon.is_some(),
            "{:?}",
            row.method
        );
    }
    assert_eq!(r.summary.ranks.len(), 11);
    let art = r.cells_for(Method::Art).next().unwrap();
    assert_eq!(art.boosts.len(), art.metrics.unwrap().epochs_trained + 1);
}

#[test]
fn reruns_are_bit_identical_and_order_free() {
    let a = run_experiment(&quick(
        &[Method::Art, Method::Smote, Method::Focal],
        &[3, 4],
    ))
    .unwrap();
    let b = run_experiment(&quick(
        &[Method::Focal, Method::Art, Method::Smote],
        &[3, 4],
    ))
    .unwrap();
    for m in [Method::Art, Method::Smote, Method::Focal] {
        for metric in Metric::ALL {
            let x: Vec<u64> = a
                .per_seed(m, metric)
                .iter()
                .map(|v| v.1.to_bits())
                .collect();
            let y: Vec<u64> = b
                .per_seed(m, metric)
                .iter()
                .map(|v| v.1.to_bits())
                .collect();
            assert_eq!(x, y, "{m} {metric:?}");
        }
    }
}

#[test]
fn reports_round_trip() {
    let r = run_experiment(&quick(&[Method::Baseline, Method::Art], &[5, 6])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&r, dir.path()).unwrap();
    for name in [
        "macro_f1.md",
        "macro_f1.csv",
        "accuracy.md",
        "macro_precision.md",
        "macro_recall.md",
        "significance.md",
        "significance.csv",
        "ranks.md",
        "epoch_history.csv",
        "boost_history.csv",
        "per_seed.csv",
    ] {
        assert!(written.contains(&dir.path().join(name)), "{name} missing");
    }
    let rows = read_per_seed_csv(dir.path().join("per_seed.csv")).unwrap();
    assert_eq!(rows.len(), r.cells.len());
    for (row, cell) in rows.iter().zip(&r.cells) {
        assert_eq!((row.method, row.seed), (cell.method, cell.seed));
        let m = cell.metrics.unwrap();
        assert_eq!(row.macro_f1, Some(m.macro_f1));
        assert_eq!(row.accuracy, Some(m.accuracy));
        assert_eq!(row.macro_precision, Some(m.macro_precision));
        assert_eq!(row.macro_recall, Some(m.macro_recall));
        assert_eq!(row.epochs_trained, Some(m.epochs_trained));
    }
    let md = std::fs::read_to_string(dir.path().join("macro_f1.md")).unwrap();
    assert!(md.contains("| Method | pima |"));
    assert!(md.contains("| ART | "));
    let sig = std::fs::read_to_string(dir.path().join("significance.md")).unwrap();
    assert!(sig.contains("| Method | Paired t-test | Wilcoxon test |"));
    // emitting twice gives identical files
    let again = tempfile::tempdir().unwrap();
    emit_report(&r, again.path()).unwrap();
    for p in &written {
        let name = p.file_name().unwrap();
        assert_eq!(
            std::fs::read(p).unwrap(),
            std::fs::read(again.path().join(name)).unwrap()
        );
    }
}

#[test]
fn unit_ratio_leaves_data_unchanged() {
    let ds = load_csv(data("pima.csv"), "outcome").unwrap();
    let plain = quick(&[Method::Baseline], &[1]);
    let mut ratio_one = plain.clone();
    ratio_one.imbalance_ratio = Some(1.0);
    let a = prepare_seed(&ds, &plain, 1).unwrap();
    let b = prepare_seed(&ds, &ratio_one, 1).unwrap();
    let sorted = |d: &Dataset| {
        let mut rows: Vec<Vec<u64>> = d
            .features()
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort();
        rows
    };
    assert_eq!(sorted(&a.train), sorted(&b.train));
    assert_eq!(a.train.class_counts(), b.train.class_counts());
}

#[test]
fn failing_cells_are_recorded_not_fatal() {
    // class 1 has two rows, so the validation part never sees it and ART cannot score it
    let mut labels = vec![0usize; 40];
    labels[0] = 1;
    labels[1] = 1;
    let x = Array2::from_shape_fn((40, 2), |(i, j)| (i * (j + 1)) as f64);
    let ds = Dataset::new(x, labels, 2).unwrap();
    let mut c = quick(&[Method::Baseline, Method::Art], &[1, 2]);
    c.trainer.epochs = 3;
    let r = run_experiment_on(&ds, "tiny", &c).unwrap();
    assert_eq!(r.cells.len(), 4);
    assert!(r.cells_for(Method::Baseline).all(|c| c.metrics.is_some()));
    assert!(r.cells_for(Method::Art).all(|c| c.error.is_some()));
    assert_eq!(
        r.summary.failures,
        vec![(Method::Baseline, 0), (Method::Art, 2)]
    );
    assert_eq!(r.significance_for(Method::Baseline).unwrap().n, 0);
}

#[test]
fn blending_sweep_covers_eleven_values_per_level() {
    let mut c = quick(&[Method::Art], &[1]);
    c.trainer.epochs = 2;
    let mut a = AblationConfig::new(SweepVariable::BlendingConstant);
    a.secondary = Some(vec![4.0]);
    c.ablation = Some(a);
    let r = run_ablation(&c).unwrap();
    assert_eq!(r.points.len(), 11);
    for (i, p) in r.points.iter().enumerate() {
        assert!((p.value - i as f64 / 10.0).abs() < 1e-12);
        assert_eq!(p.secondary, Some(4.0));
        assert_eq!(p.report.methods, vec![Method::Art]);
    }
    let dir = tempfile::tempdir().unwrap();
    let files = emit_ablation(&r, dir.path()).unwrap();
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn unknown_sweep_variable_is_rejected() {
    assert!("learning_rate".parse::<SweepVariable>().is_err());
    let text = format!(
        "[dataset]\npath = {:?}\nlabel = \"outcome\"\n[ablation]\nvariable = \"depth\"\n",
        data("pima.csv")
    );
    assert!(ExperimentConfig::from_toml_str(&text, &[]).is_err());
}

#[test]
fn shipped_configs_load() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (file, name, k) in [
        ("pima.toml", "Pima", 2),
        ("yeast.toml", "Yeast", 9),
        ("winequality.toml", "Red Wine", 6),
    ] {
        let c = ExperimentConfig::load(root.join(file), &[]).unwrap();
        c.validate().unwrap();
        assert_eq!(c.dataset_name(), name);
        assert_eq!(c.seeds.len(), 20);
        assert_eq!(c.methods.len(), 11);
        assert_eq!(c.trainer.epochs, 200);
        let ds = load_csv(&c.dataset.path, &c.dataset.label).unwrap();
        assert_eq!(ds.num_classes(), k, "{file}");
    }
    let c = ExperimentConfig::load(root.join("pima.toml"), &["trainer.epochs=7".into()]).unwrap();
    assert_eq!(c.trainer.epochs, 7);
}
