//! Tabular datasets: CSV ingestion, class priors, z-score normalization,
//! stratified splitting and synthetic imbalance.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::Rng;

/// Feature matrix plus integer class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    label_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let names = (0..num_classes).map(|c| c.to_string()).collect();
        Self::with_label_names(features, labels, num_classes, names)
    }

    pub fn with_label_names(
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if num_classes == 0 {
            return Err(invalid("num_classes must be at least 1"));
        }
        if label_names.len() != num_classes {
            return Err(Error::DimensionMismatch {
                expected: num_classes,
                actual: label_names.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            label_names,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Original label values, indexed by class id.
    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Row indices grouped by class (the per-class subsets of the data).
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            groups[y].push(i);
        }
        groups
    }

    /// New dataset made of the given rows, in the given order. Rows may repeat.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            num_classes: self.num_classes,
            label_names: self.label_names.clone(),
        }
    }

    /// Same labels and metadata, replaced feature matrix.
    pub(crate) fn with_features(&self, features: Array2<f64>) -> Dataset {
        debug_assert_eq!(features.nrows(), self.len());
        Dataset {
            features,
            labels: self.labels.clone(),
            num_classes: self.num_classes,
            label_names: self.label_names.clone(),
        }
    }

    pub(crate) fn from_parts_unchecked(
        features: Array2<f64>,
        labels: Vec<usize>,
        template: &Dataset,
    ) -> Dataset {
        Dataset {
            features,
            labels,
            num_classes: template.num_classes,
            label_names: template.label_names.clone(),
        }
    }
}

/// Reads a headed, comma-separated file. Every column except `label_column`
/// must be numeric.
///
/// Label values are mapped to class ids in ascending numeric order when every
/// label parses as an integer, otherwise in order of first appearance. The
/// mapping is kept in [`Dataset::label_names`].
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers().map_err(csv_err)?.clone();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let dim = header.len() - 1;

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: row + 1,
                column: header.get(col).unwrap_or("?").to_string(),
                value: cell.to_string(),
            })?;
            values.push(v);
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let names = label_order(&raw_labels);
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let labels = raw_labels.iter().map(|l| index[l.as_str()]).collect();
    let features = Array2::from_shape_vec((raw_labels.len(), dim), values)
        .map_err(|e| invalid(e.to_string()))?;
    let k = names.len();
    Dataset::with_label_names(features, labels, k, names)
}

fn label_order(raw: &[String]) -> Vec<String> {
    let mut seen = Vec::new();
    for l in raw {
        if !seen.contains(l) {
            seen.push(l.clone());
        }
    }
    let numeric: Option<Vec<i64>> = seen.iter().map(|s| s.parse().ok()).collect();
    if let Some(nums) = numeric {
        let mut paired: Vec<_> = nums.into_iter().zip(seen).collect();
        paired.sort_by_key(|(n, _)| *n);
        return paired.into_iter().map(|(_, s)| s).collect();
    }
    seen
}

/// Empirical class distribution: each entry is a class's relative frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior {
    pub probs: Vec<f64>,
}

pub fn class_priors(ds: &Dataset) -> Result<ClassPrior> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.len() as f64;
    let probs = ds.class_counts().iter().map(|&c| c as f64 / n).collect();
    Ok(ClassPrior { probs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreStats {
    pub means: Array1<f64>,
    /// Population standard deviations.
    pub stds: Array1<f64>,
}

pub fn zscore_fit(ds: &Dataset) -> Result<ZScoreStats> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x = ds.features();
    let means = x.mean_axis(Axis(0)).expect("non-empty");
    let stds = x.std_axis(Axis(0), 0.0);
    Ok(ZScoreStats { means, stds })
}

/// Standardizes every column; columns with zero spread become all zeros.
pub fn zscore_apply(stats: &ZScoreStats, ds: &Dataset) -> Result<Dataset> {
    if stats.means.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: stats.means.len(),
            actual: ds.dim(),
        });
    }
    let mut out = ds.features().clone();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let (m, s) = (stats.means[j], stats.stds[j]);
        if s > 0.0 {
            col.mapv_inplace(|v| (v - m) / s);
        } else {
            col.fill(0.0);
        }
    }
    Ok(ds.with_features(out))
}

/// Integer apportionment of `total` units proportional to `shares`.
///
/// Each entry first gets `floor(total * share)`; leftover units go to the
/// largest fractional parts, lower index first on ties. `shares` should sum
/// to one.
pub fn largest_remainder(total: usize, shares: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = shares.iter().map(|&s| total as f64 * s).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    distribute_leftover(&mut counts, &quotas, total.saturating_sub(assigned));
    counts
}

fn distribute_leftover(counts: &mut [usize], quotas: &[f64], leftover: usize) {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(leftover) {
        counts[i] += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.70,
            validation: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    fn validate(&self) -> Result<()> {
        let f = self.as_array();
        if f.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(invalid(format!("split fractions must lie in (0,1): {f:?}")));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("split fractions must sum to 1: {f:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SplitBundle {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Per-class allocation of `count` rows to (train, validation, test).
///
/// Classes with at least three rows get at least one row in every part; the
/// remaining rows follow largest-remainder rounding.
pub fn split_allocation(count: usize, fractions: &SplitFractions) -> [usize; 3] {
    let f = fractions.as_array();
    let quotas: Vec<f64> = f.iter().map(|&x| count as f64 * x).collect();
    let mut parts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    if count >= 3 {
        for p in parts.iter_mut() {
            *p = (*p).max(1);
        }
        while parts.iter().sum::<usize>() > count {
            let largest = (0..3)
                .max_by_key(|&i| (parts[i], std::cmp::Reverse(i)))
                .unwrap();
            parts[largest] -= 1;
        }
    }
    let assigned: usize = parts.iter().sum();
    distribute_leftover(&mut parts, &quotas, count - assigned);
    [parts[0], parts[1], parts[2]]
}

pub fn stratified_split(
    ds: &Dataset,
    fractions: &SplitFractions,
    rng: &mut Rng,
) -> Result<SplitBundle> {
    fractions.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for mut rows in ds.class_indices() {
        if rows.is_empty() {
            continue;
        }
        rows.shuffle(rng);
        let alloc = split_allocation(rows.len(), fractions);
        let mut start = 0;
        for (part, &n) in parts.iter_mut().zip(alloc.iter()) {
            part.extend_from_slice(&rows[start..start + n]);
            start += n;
        }
    }
    for part in parts.iter_mut() {
        part.sort_unstable();
    }
    Ok(SplitBundle {
        train: ds.select(&parts[0]),
        validation: ds.select(&parts[1]),
        test: ds.select(&parts[2]),
    })
}

/// Keeps `majority_class` in full and subsamples every other class, without
/// replacement, to `round(n_majority / ratio)` rows (capped at what the class
/// has). Output rows are shuffled.
pub fn make_imbalanced(
    ds: &Dataset,
    ratio: f64,
    majority_class: usize,
    rng: &mut Rng,
) -> Result<Dataset> {
    if !(ratio >= 1.0) {
        return Err(invalid(format!(
            "imbalance ratio must be >= 1, got {ratio}"
        )));
    }
    if majority_class >= ds.num_classes() {
        return Err(Error::LabelOutOfRange {
            label: majority_class,
            num_classes: ds.num_classes(),
        });
    }
    let groups = ds.class_indices();
    let n_major = groups[majority_class].len();
    let target = (n_major as f64 / ratio).round() as usize;
    if target == 0 {
        return Err(invalid(format!(
            "ratio {ratio} leaves no minority rows (majority has {n_major})"
        )));
    }
    let mut keep = Vec::new();
    for (c, mut rows) in groups.into_iter().enumerate() {
        if c == majority_class {
            keep.extend(rows);
        } else {
            rows.shuffle(rng);
            rows.truncate(target);
            keep.extend(rows);
        }
    }
    // original order, so a ratio that drops nothing is the identity
    keep.sort_unstable();
    Ok(ds.select(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStreams;
    use ndarray::array;
    use std::io::Write;

    fn labelled(labels: Vec<usize>, k: usize) -> Dataset {
        let n = labels.len();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        Dataset::new(x, labels, k).unwrap()
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_two_row_file() {
        let f = write_tmp("a,b,y\n0,1,neg\n2,3,pos\n");
        let ds = load_csv(f.path(), "y").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.label_names(), &["neg", "pos"]);
        assert_eq!(ds.features(), &array![[0.0, 1.0], [2.0, 3.0]]);
    }

    #[test]
    fn integer_labels_map_in_numeric_order() {
        let f = write_tmp("x,q\n1,7\n2,5\n3,6\n4,5\n");
        let ds = load_csv(f.path(), "q").unwrap();
        assert_eq!(ds.label_names(), &["5", "6", "7"]);
        assert_eq!(ds.labels(), &[2, 0, 1, 0]);
    }

    #[test]
    fn load_errors() {
        let f = write_tmp("a,b,y\n0,1,neg\n");
        match load_csv(f.path(), "label") {
            Err(Error::MissingLabelColumn(c)) => assert_eq!(c, "label"),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("a,b,y\n0,1,neg\n2,oops,pos\n");
        match load_csv(f.path(), "y") {
            Err(Error::NonNumeric { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("a,b,y\n");
        assert!(matches!(load_csv(f.path(), "y"), Err(Error::EmptyDataset)));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "y"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn priors_examples() {
        let p = class_priors(&labelled(vec![0, 0, 0, 1], 2)).unwrap();
        assert_eq!(p.probs, vec![0.75, 0.25]);
        let p = class_priors(&labelled(vec![0, 1, 2], 3)).unwrap();
        for v in p.probs {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let empty = Dataset::new(Array2::zeros((0, 2)), vec![], 2).unwrap();
        assert!(class_priors(&empty).is_err());
    }

    #[test]
    fn zscore_examples() {
        let ds = Dataset::new(array![[1.0, 5.0], [3.0, 5.0]], vec![0, 1], 2).unwrap();
        let stats = zscore_fit(&ds).unwrap();
        assert_eq!(stats.means, array![2.0, 5.0]);
        assert_eq!(stats.stds, array![1.0, 0.0]);
        let z = zscore_apply(&stats, &ds).unwrap();
        assert_eq!(z.features(), &array![[-1.0, 0.0], [1.0, 0.0]]);

        let other = Dataset::new(array![[1.0, 2.0, 3.0]], vec![0], 1).unwrap();
        assert!(matches!(
            zscore_apply(&stats, &other),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(largest_remainder(10, &[0.3, 0.7]), vec![3, 7]);
        let third = 1.0 / 3.0;
        assert_eq!(largest_remainder(7, &[third, third, third]), vec![3, 2, 2]);
    }

    #[test]
    fn split_allocation_by_hand() {
        let f = SplitFractions::default();
        // 20 * (0.7, 0.15, 0.15) = (14, 3, 3)
        assert_eq!(split_allocation(20, &f), [14, 3, 3]);
        // 10 * (0.7, 0.15, 0.15) = (7, 1.5, 1.5): one leftover, tie -> validation
        assert_eq!(split_allocation(10, &f), [7, 2, 1]);
        assert_eq!(split_allocation(3, &f), [1, 1, 1]);
        assert_eq!(split_allocation(4, &f), [2, 1, 1]);
        assert_eq!(split_allocation(1, &f), [1, 0, 0]);
    }

    #[test]
    fn split_twenty_and_ten() {
        let mut labels = vec![0; 20];
        labels.extend(vec![1; 10]);
        let ds = labelled(labels, 2);
        let mut rng = SeedStreams::new(7).stream("split");
        let b = stratified_split(&ds, &SplitFractions::default(), &mut rng).unwrap();
        assert_eq!(b.train.class_counts(), vec![14, 7]);
        assert_eq!(b.validation.class_counts(), vec![3, 2]);
        assert_eq!(b.test.class_counts(), vec![3, 1]);

        let mut rng = SeedStreams::new(7).stream("split");
        let again = stratified_split(&ds, &SplitFractions::default(), &mut rng).unwrap();
        assert_eq!(b.train, again.train);
        assert_eq!(b.test, again.test);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = labelled(vec![0, 1, 0, 1], 2);
        let mut rng = SeedStreams::new(1).stream("split");
        let bad = SplitFractions {
            train: 0.7,
            validation: 0.2,
            test: 0.2,
        };
        assert!(stratified_split(&ds, &bad, &mut rng).is_err());
        let bad = SplitFractions {
            train: 1.0,
            validation: 0.0,
            test: 0.0,
        };
        assert!(stratified_split(&ds, &bad, &mut rng).is_err());
    }

    #[test]
    fn imbalance_examples() {
        let mut labels = vec![0; 100];
        labels.extend(vec![1; 100]);
        let ds = labelled(labels, 2);
        let mut rng = SeedStreams::new(3).stream("imbalance");
        let out = make_imbalanced(&ds, 4.0, 0, &mut rng).unwrap();
        assert_eq!(out.class_counts(), vec![100, 25]);
        let out = make_imbalanced(&ds, 1.0, 0, &mut rng).unwrap();
        assert_eq!(out.class_counts(), vec![100, 100]);
        assert!(make_imbalanced(&ds, 0.5, 0, &mut rng).is_err());
        assert!(make_imbalanced(&ds, 500.0, 0, &mut rng).is_err());

        let mut labels = vec![0; 500];
        labels.extend(vec![1; 268]);
        let pima_like = labelled(labels, 2);
        let out = make_imbalanced(&pima_like, 50.0, 0, &mut rng).unwrap();
        assert_eq!(out.class_counts(), vec![500, 10]);
    }
}
