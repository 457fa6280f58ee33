//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use artlab::losses::LossSpec;
use artlab::nn::Mlp;
use ndarray::Array2;

/// Two-sided exact Wilcoxon p-value by enumerating every sign pattern over
/// the midranks of the nonzero |differences|.
pub fn brute_force_wilcoxon(d: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let less = d.iter().filter(|x| x.abs() < d[i].abs()).count();
        let equal = d.iter().filter(|x| x.abs() == d[i].abs()).count();
        ranks[i] = less as f64 + (equal as f64 + 1.0) / 2.0;
    }
    let total: f64 = ranks.iter().sum();
    let w_plus: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let w = w_plus.min(total - w_plus);
    let mut at_most = 0u64;
    for mask in 0u32..(1 << n) {
        let s: f64 = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        if s <= w {
            at_most += 1;
        }
    }
    let p = (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0);
    (w, p)
}

/// Gamma at positive integers and half-integers from the closed forms.
pub fn gamma_half_integer(x: f64) -> f64 {
    if x.fract() == 0.0 {
        (1..x as u64).map(|k| k as f64).product()
    } else {
        // Gamma(n + 1/2) = (2n)! / (4^n n!) * sqrt(pi)
        let n = (x - 0.5) as u64;
        let mut g = std::f64::consts::PI.sqrt();
        for k in 0..n {
            g *= k as f64 + 0.5;
        }
        g
    }
}

/// `P(T > t)` for integer `df` by composite Simpson integration of the
/// density over [0, t].
pub fn t_upper_tail_quadrature(t: f64, df: u32) -> f64 {
    let v = df as f64;
    let c = gamma_half_integer((v + 1.0) / 2.0)
        / ((v * std::f64::consts::PI).sqrt() * gamma_half_integer(v / 2.0));
    let f = |x: f64| c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0);
    let steps = 20_000;
    let h = t.abs() / steps as f64;
    let mut acc = f(0.0) + f(t.abs());
    for i in 1..steps {
        let x = i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    let half = acc * h / 3.0;
    if t >= 0.0 {
        0.5 - half
    } else {
        0.5 + half
    }
}

/// Macro-F1 from a confusion matrix by counting TP/FP/FN sample by sample.
pub fn naive_macro_f1(cm: &[Vec<u64>]) -> f64 {
    let k = cm.len();
    let mut pairs = Vec::new();
    for (t, row) in cm.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            for _ in 0..n {
                pairs.push((t, p));
            }
        }
    }
    let mut total = 0.0;
    for c in 0..k {
        let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count() as f64;
        let fp = pairs.iter().filter(|&&(t, p)| t != c && p == c).count() as f64;
        let fn_ = pairs.iter().filter(|&&(t, p)| t == c && p != c).count() as f64;
        let f1 = if tp == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        };
        total += f1;
    }
    total / k as f64
}

/// Relative error between analytic and central-difference gradients of the
/// mean loss with respect to every parameter.
pub fn gradient_check(
    model: &Mlp,
    x: &Array2<f64>,
    y: &[usize],
    loss: &LossSpec,
    epoch: usize,
) -> f64 {
    let (_, grads) = model.backward(x.view(), y, loss, epoch).unwrap();
    let analytic = grads.flat();
    let base = model.parameters_flat();
    let mut probe = model.clone();
    let h = 1e-6;
    let mut num = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_parameters_flat(&p).unwrap();
        let up = loss
            .evaluate(probe.forward(x.view()).unwrap().view(), y, epoch)
            .unwrap()
            .mean;
        p[i] = base[i] - h;
        probe.set_parameters_flat(&p).unwrap();
        let down = loss
            .evaluate(probe.forward(x.view()).unwrap().view(), y, epoch)
            .unwrap()
            .mean;
        num.push((up - down) / (2.0 * h));
    }
    let diff: f64 = analytic
        .iter()
        .zip(&num)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt()
        + num.iter().map(|a| a * a).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Whether `p` lies on the segment between `a` and `b` within `tol`.
pub fn on_segment(p: &[f64], a: &[f64], b: &[f64], tol: f64) -> bool {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (p.iter()
            .zip(a)
            .zip(&ab)
            .map(|((pi, ai), d)| (pi - ai) * d)
            .sum::<f64>()
            / len2)
            .clamp(0.0, 1.0)
    };
    let dist2: f64 = p
        .iter()
        .zip(a)
        .zip(&ab)
        .map(|((pi, ai), d)| (pi - (ai + t * d)).powi(2))
        .sum();
    dist2.sqrt() <= tol
}
