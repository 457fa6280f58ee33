use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{grow_rows, ResamplePlan};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::rng::Rng;

/// `a + lambda * (b - a)`.
pub fn interpolate(a: ArrayView1<f64>, b: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    &a + &((&b - &a) * lambda)
}

pub(crate) fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices from `pool` (excluding `row`) ordered by distance to `row`,
/// nearest first, ties by index; at most `k` of them.
pub(crate) fn nearest(x: &Array2<f64>, row: usize, pool: &[usize], k: usize) -> Vec<usize> {
    let me = x.row(row);
    let mut d: Vec<(f64, usize)> = pool
        .iter()
        .filter(|&&j| j != row)
        .map(|&j| (sq_dist(me, x.row(j)), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

/// How MSMOTE treats a minority row, judged by its nearest neighbours among
/// all classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsmoteCategory {
    /// More than half of the neighbours share its class.
    Security,
    /// Some but not most neighbours share its class.
    Border,
    /// No neighbour shares its class; never used as a seed.
    Noise,
}

/// Where a synthetic row's partner may come from.
enum Partner {
    AnyOf(Vec<usize>),
    Nearest(usize),
}

/// Shared driver: classes below their target get `target - count`
/// interpolated rows, built from the seeds `seeds_for` returns.
fn synthesize<F>(
    ds: &Dataset,
    plan: &ResamplePlan,
    rng: &mut Rng,
    mut seeds_for: F,
) -> Result<Dataset>
where
    F: FnMut(usize, &[usize]) -> Vec<(usize, Partner)>,
{
    plan.check_against(ds)?;
    let x = ds.features();
    let mut synthetic: Vec<Array1<f64>> = Vec::new();
    let mut synthetic_labels = Vec::new();
    let mut duplicates = Vec::new();

    for (class, (group, &target)) in ds
        .class_indices()
        .iter()
        .zip(&plan.target_counts)
        .enumerate()
    {
        if target <= group.len() {
            continue;
        }
        let needed = target - group.len();
        let seeds = if group.len() >= 2 {
            seeds_for(class, group)
        } else {
            Vec::new()
        };
        if seeds.is_empty() {
            log::warn!(
                "class {class} has no usable interpolation seeds ({} rows); duplicating instead",
                group.len()
            );
            duplicates.extend(grow_rows(group, target, rng).into_iter().skip(group.len()));
            continue;
        }
        for _ in 0..needed {
            let (seed, partner) = &seeds[rng.gen_range(0..seeds.len())];
            let other = match partner {
                Partner::AnyOf(list) => list[rng.gen_range(0..list.len())],
                Partner::Nearest(j) => *j,
            };
            let lambda: f64 = rng.gen();
            synthetic.push(interpolate(x.row(*seed), x.row(other), lambda));
            synthetic_labels.push(class);
        }
    }

    let mut rows: Vec<Array1<f64>> = x.axis_iter(Axis(0)).map(|r| r.to_owned()).collect();
    let mut labels = ds.labels().to_vec();
    for &d in &duplicates {
        rows.push(x.row(d).to_owned());
        labels.push(ds.labels()[d]);
    }
    rows.extend(synthetic);
    labels.extend(synthetic_labels);

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let mut features = Array2::zeros((rows.len(), ds.dim()));
    for (dst, &src) in order.iter().enumerate() {
        features.row_mut(dst).assign(&rows[src]);
    }
    let labels = order.iter().map(|&i| labels[i]).collect();
    Ok(Dataset::from_parts_unchecked(features, labels, ds))
}

/// SMOTE: each synthetic row lies on the segment between a random source row
/// of its class and one of that row's `k` nearest same-class neighbours.
/// `k` is capped at class size minus one; singleton classes are grown by
/// duplication with a warning. Classes at or above target pass through.
pub fn smote(ds: &Dataset, k: usize, plan: &ResamplePlan, rng: &mut Rng) -> Result<Dataset> {
    if k == 0 {
        return Err(invalid("smote needs k >= 1"));
    }
    let x = ds.features();
    synthesize(ds, plan, rng, |_, group| {
        let kk = k.min(group.len() - 1);
        group
            .iter()
            .map(|&i| (i, Partner::AnyOf(nearest(x, i, group, kk))))
            .collect()
    })
}

/// Categorises every row of `class` by its `k` nearest neighbours over the
/// whole dataset.
pub fn msmote_categories(ds: &Dataset, class: usize, k: usize) -> Vec<(usize, MsmoteCategory)> {
    let x = ds.features();
    let all: Vec<usize> = (0..ds.len()).collect();
    let k = k.min(ds.len().saturating_sub(1));
    ds.class_indices()[class]
        .iter()
        .map(|&i| {
            let same = nearest(x, i, &all, k)
                .into_iter()
                .filter(|&j| ds.labels()[j] == class)
                .count();
            let cat = if 2 * same > k {
                MsmoteCategory::Security
            } else if same == 0 {
                MsmoteCategory::Noise
            } else {
                MsmoteCategory::Border
            };
            (i, cat)
        })
        .collect()
}

/// MSMOTE, using the classical security / border / noise gating.
///
/// Security rows interpolate toward any of their `k` nearest same-class
/// neighbours, border rows only toward their single nearest same-class
/// neighbour, and noise rows are never seeds. A class with no usable seed is
/// grown by duplication with a warning.
pub fn msmote(ds: &Dataset, k: usize, plan: &ResamplePlan, rng: &mut Rng) -> Result<Dataset> {
    if k == 0 {
        return Err(invalid("msmote needs k >= 1"));
    }
    let x = ds.features();
    synthesize(ds, plan, rng, |class, group| {
        let kk = k.min(group.len() - 1);
        msmote_categories(ds, class, k)
            .into_iter()
            .filter_map(|(i, cat)| match cat {
                MsmoteCategory::Security => Some((i, Partner::AnyOf(nearest(x, i, group, kk)))),
                MsmoteCategory::Border => Some((i, Partner::Nearest(nearest(x, i, group, 1)[0]))),
                MsmoteCategory::Noise => None,
            })
            .collect()
    })
}
