use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::smote::sq_dist;
use super::ResamplePlan;
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::rng::Rng;

/// Neighbours used when scoring a row against the reference pool.
const NEIGHBOURS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearMissVersion {
    /// Keep rows closest on average to their nearest reference rows.
    V1,
    /// Keep rows closest on average to their farthest reference rows.
    V2,
    /// Keep, among rows near some reference row, those farthest on average
    /// from their nearest reference rows.
    V3 { m: usize },
}

impl TryFrom<u8> for NearMissVersion {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Self::V1),
            2 => Ok(Self::V2),
            3 => Ok(Self::V3 { m: 3 }),
            _ => Err(format!("nearmiss version must be 1, 2 or 3, got {v}")),
        }
    }
}

impl From<NearMissVersion> for u8 {
    fn from(v: NearMissVersion) -> u8 {
        match v {
            NearMissVersion::V1 => 1,
            NearMissVersion::V2 => 2,
            NearMissVersion::V3 { .. } => 3,
        }
    }
}

/// Sorted Euclidean distances from `row` to every row of `pool`.
fn distances(ds: &Dataset, row: usize, pool: &[usize]) -> Vec<f64> {
    let x = ds.features();
    let mut d: Vec<f64> = pool
        .iter()
        .map(|&j| sq_dist(x.row(row), x.row(j)).sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `rows` ordered by `score` (ascending unless `descending`), ties broken by
/// a shuffle so no index order leaks into the choice.
fn rank(
    rows: &[usize],
    score: impl Fn(usize) -> f64,
    descending: bool,
    rng: &mut Rng,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = rows.iter().map(|&r| (score(r), r)).collect();
    scored.shuffle(rng);
    scored.sort_by(|a, b| {
        let o = a.0.total_cmp(&b.0);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    scored.into_iter().map(|(_, r)| r).collect()
}

/// NearMiss undersampling. Each class whose target is below its count is
/// shrunk; its rows are scored against a reference pool made of the classes
/// that are not shrunk (all other classes when every class is). Classes at
/// or below target pass through. Output rows are a subset of the input.
pub fn nearmiss(
    ds: &Dataset,
    version: NearMissVersion,
    plan: &ResamplePlan,
    rng: &mut Rng,
) -> Result<Dataset> {
    let counts = plan.check_against(ds)?;
    if let NearMissVersion::V3 { m: 0 } = version {
        return Err(invalid("nearmiss-3 needs m >= 1"));
    }
    let groups = ds.class_indices();
    let shrunk: Vec<bool> = plan
        .target_counts
        .iter()
        .zip(&counts)
        .map(|(&t, &c)| t < c)
        .collect();
    let mut keep = Vec::new();
    for (class, group) in groups.iter().enumerate() {
        let target = plan.target_counts[class];
        if !shrunk[class] {
            keep.extend_from_slice(group);
            continue;
        }
        let mut pool: Vec<usize> = (0..groups.len())
            .filter(|&c| c != class && !shrunk[c])
            .flat_map(|c| groups[c].iter().copied())
            .collect();
        if pool.is_empty() {
            pool = (0..groups.len())
                .filter(|&c| c != class)
                .flat_map(|c| groups[c].iter().copied())
                .collect();
        }
        if pool.is_empty() {
            keep.extend(super::shrink_rows(group, target, rng));
            continue;
        }
        if pool.len() < NEIGHBOURS {
            log::warn!(
                "nearmiss: only {} reference rows for class {class}; using that many neighbours",
                pool.len()
            );
        }
        let n = NEIGHBOURS.min(pool.len());
        let near = |r: usize| mean(&distances(ds, r, &pool)[..n]);
        let far = |r: usize| {
            let d = distances(ds, r, &pool);
            mean(&d[d.len() - n..])
        };
        let chosen = match version {
            NearMissVersion::V1 => rank(group, near, false, rng),
            NearMissVersion::V2 => rank(group, far, false, rng),
            NearMissVersion::V3 { m } => {
                let x = ds.features();
                let mut candidates = HashSet::new();
                for &p in &pool {
                    let mut d: Vec<(f64, usize)> = group
                        .iter()
                        .map(|&r| (sq_dist(x.row(p), x.row(r)), r))
                        .collect();
                    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    candidates.extend(d.into_iter().take(m).map(|(_, r)| r));
                }
                let (cand, rest): (Vec<usize>, Vec<usize>) =
                    group.iter().partition(|r| candidates.contains(r));
                let mut order = rank(&cand, near, true, rng);
                order.extend(rank(&rest, near, true, rng));
                order
            }
        };
        keep.extend(chosen.into_iter().take(target));
    }
    keep.shuffle(rng);
    Ok(ds.select(&keep))
}
