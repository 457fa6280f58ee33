use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::losses::{LossOutput, LossSpec};
use crate::rng::{stream, Rng, SeedStreams};

/// Fully connected classifier: ReLU hidden layers, linear output (logits).
///
/// `weights[l]` has shape `(widths[l], widths[l + 1])` so a batch of rows
/// maps through `x.dot(w) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
}

/// Gradients shaped like the parameters of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

fn check_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 {
        return Err(invalid("an MLP needs at least input and output widths"));
    }
    if widths.contains(&0) {
        return Err(invalid(format!("layer widths must be >= 1: {widths:?}")));
    }
    Ok(())
}

impl Mlp {
    /// He-normal weights (variance 2 / fan_in), zero biases.
    pub fn init(widths: &[usize], rng: &mut Rng) -> Result<Self> {
        check_widths(widths)?;
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
            weights.push(Array2::from_shape_simple_fn((fan_in, fan_out), || {
                normal.sample(rng)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    /// Initializes from the `init` stream of `seed`.
    pub fn init_seeded(widths: &[usize], seed: u64) -> Result<Self> {
        Self::init(widths, &mut SeedStreams::new(seed).stream(stream::INIT))
    }

    pub fn zeros(widths: &[usize]) -> Result<Self> {
        check_widths(widths)?;
        Ok(Self {
            widths: widths.to_vec(),
            weights: widths
                .windows(2)
                .map(|p| Array2::zeros((p[0], p[1])))
                .collect(),
            biases: widths.windows(2).map(|p| Array1::zeros(p[1])).collect(),
        })
    }

    pub fn from_parameters(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(invalid("need one bias vector per weight matrix"));
        }
        let mut widths = vec![weights[0].nrows()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.nrows() != *widths.last().unwrap() {
                return Err(invalid(format!("layer {l} input width does not compose")));
            }
            if b.len() != w.ncols() {
                return Err(invalid(format!("layer {l} bias length mismatch")));
            }
            widths.push(w.ncols());
        }
        check_widths(&widths)?;
        Ok(Self {
            widths,
            weights,
            biases,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    /// All parameters flattened, layer by layer (weights row-major, then bias).
    pub fn parameters_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_parameters_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                actual: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().unwrap());
            b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.widths[0] {
            return Err(Error::DimensionMismatch {
                expected: self.widths[0],
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    /// Logits, one row per input row.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let last = self.num_layers() - 1;
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = a.dot(w) + b;
            if l < last {
                a.mapv_inplace(relu);
            }
        }
        Ok(a)
    }

    /// Arg-max class per row (lowest index on ties).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.forward(x)?))
    }

    /// Loss and parameter gradients for one batch.
    pub fn backward(
        &self,
        x: ArrayView2<f64>,
        labels: &[usize],
        loss: &LossSpec,
        epoch: usize,
    ) -> Result<(LossOutput, Gradients)> {
        self.check_input(&x)?;
        let k = *self.widths.last().unwrap();
        if let Some(&label) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: k,
            });
        }
        let last = self.num_layers() - 1;
        // activations[l] is the input of layer l
        let mut activations = Vec::with_capacity(self.num_layers());
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = a.dot(w) + b;
            activations.push(a);
            a = if l < last { z.mapv(relu) } else { z };
        }
        let out = loss.evaluate(a.view(), labels, epoch)?;

        let mut grad_w = vec![Array2::zeros((0, 0)); self.num_layers()];
        let mut grad_b = vec![Array1::zeros(0); self.num_layers()];
        let mut delta = out.grad.clone();
        for l in (0..self.num_layers()).rev() {
            grad_w[l] = activations[l].t().dot(&delta);
            grad_b[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                // ReLU derivative read from the stored (post-activation) input
                back.zip_mut_with(&activations[l], |d, &act| {
                    if act <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        Ok((
            out,
            Gradients {
                weights: grad_w,
                biases: grad_b,
            },
        ))
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::softmax_rows;
    use ndarray::array;

    #[test]
    fn zero_bias_and_determinism() {
        let m = Mlp::init_seeded(&[2, 1], 11).unwrap();
        assert_eq!(m.biases()[0], array![0.0]);
        let a = Mlp::init_seeded(&[8, 64, 2], 11).unwrap();
        let b = Mlp::init_seeded(&[8, 64, 2], 11).unwrap();
        let bits = |m: &Mlp| {
            m.parameters_flat()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&Mlp::init_seeded(&[8, 64, 2], 12).unwrap()));
    }

    #[test]
    fn parameter_count_formula() {
        let m = Mlp::init_seeded(&[8, 64, 2], 1).unwrap();
        assert_eq!(m.parameter_count(), 8 * 64 + 64 + 64 * 2 + 2);
        assert_eq!(m.parameter_count(), 706);
        assert_eq!(m.parameters_flat().len(), 706);
    }

    #[test]
    fn invalid_widths() {
        assert!(Mlp::init_seeded(&[4, 0, 2], 1).is_err());
        assert!(Mlp::init_seeded(&[4], 1).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = Mlp::zeros(&[3, 5, 4]).unwrap();
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]];
        let z = m.forward(x.view()).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        let p = softmax_rows(z.view());
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn identity_linear_layer() {
        let m = Mlp::from_parameters(vec![Array2::eye(3)], vec![Array1::zeros(3)]).unwrap();
        let x = array![[1.0, -2.0, 3.0]];
        assert_eq!(m.forward(x.view()).unwrap(), x);
    }

    #[test]
    fn shape_mismatch() {
        let m = Mlp::zeros(&[3, 2]).unwrap();
        let x = Array2::zeros((2, 4));
        assert!(matches!(
            m.forward(x.view()),
            Err(Error::DimensionMismatch { .. })
        ));
        let x = Array2::zeros((1, 3));
        assert!(m
            .backward(x.view(), &[5], &LossSpec::CrossEntropy, 1)
            .is_err());
    }
}
