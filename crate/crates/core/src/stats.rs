//! Paired significance tests and average ranks across seeds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n_effective: usize,
    /// Whether the Wilcoxon p-value came from exact enumeration.
    pub exact: bool,
    /// Set when the test was degenerate and the p-value is a convention.
    pub note: Option<String>,
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the continued fraction converges fast for x < (a + 1) / (a + b + 2)
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn student_t_upper_tail(t: f64, df: f64) -> f64 {
    let tail = 0.5 * regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// `P(Z > z)` for the standard normal.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

fn check_paired(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Two-sided paired t-test on `a - b`.
///
/// Zero-variance differences are reported as degenerate: p = 1 when the
/// mean difference is also zero, p = 0 otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    check_paired(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(invalid("paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        let (statistic, p_value, note) = if mean == 0.0 {
            (0.0, 1.0, "all differences zero")
        } else {
            (
                f64::INFINITY.copysign(mean),
                0.0,
                "differences have zero variance and nonzero mean",
            )
        };
        return Ok(SignificanceResult {
            statistic,
            p_value,
            n_effective: n,
            exact: false,
            note: Some(note.into()),
        });
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    let p = (2.0 * student_t_upper_tail(t.abs(), nf - 1.0)).min(1.0);
    Ok(SignificanceResult {
        statistic: t,
        p_value: p,
        n_effective: n,
        exact: false,
        note: None,
    })
}

/// Ascending ranks starting at 1; tied values share their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Largest sample size that uses exact enumeration of sign assignments.
pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// Two-sided Wilcoxon signed-rank test on `a - b`.
///
/// Zero differences are dropped. Up to [`WILCOXON_EXACT_MAX_N`] nonzero
/// differences the null distribution is enumerated exactly over all sign
/// assignments of the observed (mid)ranks; beyond that a normal approximation
/// with tie and continuity corrections is used. The statistic is
/// `min(W+, W-)`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    check_paired(a, b)?;
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|v| *v != 0.0)
        .collect();
    let n = d.len();
    if n == 0 {
        return Ok(SignificanceResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
            exact: false,
            note: Some("all differences zero".into()),
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = w_plus.min(total - w_plus);

    if n <= WILCOXON_EXACT_MAX_N {
        // midranks are multiples of 1/2, so doubled ranks are integers
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max_sum: usize = doubled.iter().sum();
        let mut counts = vec![0u64; max_sum + 1];
        counts[0] = 1;
        for &r in &doubled {
            for s in (r..=max_sum).rev() {
                counts[s] += counts[s - r];
            }
        }
        let limit = (2.0 * w).round() as usize;
        let at_most: u64 = counts[..=limit].iter().sum();
        let p = (2.0 * at_most as f64 / 2f64.powi(n as i32)).min(1.0);
        return Ok(SignificanceResult {
            statistic: w,
            p_value: p,
            n_effective: n,
            exact: true,
            note: None,
        });
    }

    let nf = n as f64;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(SignificanceResult {
        statistic: w,
        p_value: (2.0 * normal_upper_tail(z)).min(1.0),
        n_effective: n,
        exact: false,
        note: None,
    })
}

/// Mean rank of each method over seeds; rank 1 is the highest score and ties
/// share midranks. `scores[m][s]` is method `m`'s score on seed `s`.
pub fn average_ranks(scores: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = scores.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let seeds = scores[0].len();
    if let Some(bad) = scores.iter().find(|s| s.len() != seeds) {
        return Err(Error::DimensionMismatch {
            expected: seeds,
            actual: bad.len(),
        });
    }
    if seeds == 0 {
        return Err(invalid("average ranks need at least one seed"));
    }
    let mut sums = vec![0.0; m];
    for s in 0..seeds {
        let negated: Vec<f64> = scores.iter().map(|v| -v[s]).collect();
        for (acc, r) in sums.iter_mut().zip(midranks(&negated)) {
            *acc += r;
        }
    }
    Ok(sums.into_iter().map(|v| v / seeds as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a
        assert!((regularized_incomplete_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-14);
        assert!((regularized_incomplete_beta(0.6, 3.0, 1.0) - 0.216).abs() < 1e-14);
        let x = 0.37;
        let sym = regularized_incomplete_beta(x, 2.5, 4.0)
            + regularized_incomplete_beta(1.0 - x, 4.0, 2.5);
        assert!((sym - 1.0).abs() < 1e-14);
    }

    #[test]
    fn t_test_examples() {
        let r = paired_t_test(&[1.0, -1.0, 1.0, -1.0], &[0.0; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);

        let r = paired_t_test(&[0.3, 0.4], &[0.3, 0.4]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(r.note.is_some());

        let r = paired_t_test(&[1.0, 2.0, 3.0], &[0.5, 1.5, 2.5]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(r.note.is_some());

        assert!(paired_t_test(&[1.0], &[0.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn t_tail_against_table() {
        // df 19 one-sided critical values for 0.05, 0.025, 0.005
        for (t, p) in [(1.729, 0.05), (2.093, 0.025), (2.861, 0.005)] {
            assert!((student_t_upper_tail(t, 19.0) - p).abs() < 5e-4, "t={t}");
        }
    }

    #[test]
    fn wilcoxon_examples() {
        let r = wilcoxon_signed_rank(&[0.0; 5], &[1.0; 5]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.exact);
        assert_eq!(r.p_value, 2.0 / 32.0);

        let r = wilcoxon_signed_rank(&[0.5, 0.6], &[0.5, 0.6]).unwrap();
        assert_eq!((r.p_value, r.n_effective), (1.0, 0));
        assert!(r.note.is_some());
    }

    #[test]
    fn wilcoxon_large_sample_uses_normal() {
        let a: Vec<f64> = (0..30).map(|i| i as f64 * 0.1 + 0.05).collect();
        let b: Vec<f64> = (0..30)
            .map(|i| i as f64 * 0.1 + if i % 3 == 0 { 0.2 } else { -0.01 * i as f64 })
            .collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }

    #[test]
    fn ranks_examples() {
        let r = average_ranks(&[vec![0.9, 0.8], vec![0.1, 0.2]]).unwrap();
        assert_eq!(r, vec![1.0, 2.0]);
        let r = average_ranks(&[vec![0.5; 3], vec![0.5; 3], vec![0.5; 3]]).unwrap();
        assert_eq!(r, vec![2.0, 2.0, 2.0]);
        let r = average_ranks(&[vec![0.5, 0.3], vec![0.4, 0.4], vec![0.3, 0.5]]).unwrap();
        assert_eq!(r, vec![2.0, 2.0, 2.0]);
        assert!(average_ranks(&[vec![0.5], vec![0.4, 0.3]]).is_err());
    }

    #[test]
    fn midrank_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }
}
