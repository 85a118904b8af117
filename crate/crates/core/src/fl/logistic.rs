//! L2-regularized multinomial logistic regression.
//!
//! The default learner for the simulator: convex, with a smoothness constant
//! that can be computed from the data, so the convergence bound can be
//! checked rather than assumed.

use super::{ModelVector, Objective};
use crate::data::LabeledDataset;
use crate::linalg::{symmetric_eigenvalues, SquareMatrix};

/// Multinomial logistic regression with an L2 penalty on all parameters.
///
/// The parameter vector is laid out class-major: for class `c`, `feature_dim`
/// weights followed by one bias, i.e. dimension `num_classes * (feature_dim + 1)`.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub feature_dim: usize,
    pub num_classes: usize,
    pub l2_penalty: f64,
}

impl LogisticRegression {
    pub fn new(feature_dim: usize, num_classes: usize, l2_penalty: f64) -> Self {
        Self {
            feature_dim,
            num_classes,
            l2_penalty,
        }
    }

    fn block(&self) -> usize {
        self.feature_dim + 1
    }

    /// Class logits for one sample.
    fn logits(&self, model: &ModelVector, x: &[f64]) -> Vec<f64> {
        let block = self.block();
        (0..self.num_classes)
            .map(|c| {
                let row = &model.weights[c * block..(c + 1) * block];
                row[..self.feature_dim]
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + row[self.feature_dim]
            })
            .collect()
    }

    fn softmax(logits: &mut [f64]) {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for z in logits.iter_mut() {
            *z = (*z - max).exp();
            sum += *z;
        }
        for z in logits.iter_mut() {
            *z /= sum;
        }
    }

    /// Fraction of samples whose argmax class matches the label.
    pub fn accuracy(&self, model: &ModelVector, data: &LabeledDataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let mut correct = 0usize;
        for i in 0..data.len() {
            let logits = self.logits(model, data.feature_row(i));
            let best = logits
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(c, _)| c)
                .unwrap();
            if best == data.labels[i] {
                correct += 1;
            }
        }
        correct as f64 / data.len() as f64
    }

    /// A smoothness constant for the regularized loss, valid for any
    /// dataset drawn from `data`'s rows:
    ///
    /// `L = λ_max(M)/2 + l2_penalty`, where `M` is the second-moment matrix
    /// of the bias-augmented features. The softmax cross-entropy Hessian with
    /// respect to the logits is bounded by I/2, which makes this an upper
    /// bound on the full-parameter Hessian norm.
    pub fn smoothness_bound(&self, data: &LabeledDataset) -> f64 {
        let d = self.feature_dim + 1;
        let mut m = SquareMatrix::zeros(d);
        let n = data.len().max(1) as f64;
        for idx in 0..data.len() {
            let x = data.feature_row(idx);
            let augmented = |k: usize| if k < self.feature_dim { x[k] } else { 1.0 };
            for i in 0..d {
                for j in i..d {
                    let v = m.get(i, j) + augmented(i) * augmented(j) / n;
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
        }
        let eig = symmetric_eigenvalues(&m).expect("second-moment matrix is symmetric");
        let lambda_max = eig.last().copied().unwrap_or(0.0).max(0.0);
        lambda_max / 2.0 + self.l2_penalty
    }
}

impl Objective for LogisticRegression {
    fn dim(&self) -> usize {
        self.num_classes * self.block()
    }

    fn loss(&self, model: &ModelVector, data: &LabeledDataset, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for &i in idx {
            let mut probs = self.logits(model, data.feature_row(i));
            Self::softmax(&mut probs);
            total -= probs[data.labels[i]].max(1e-300).ln();
        }
        let penalty: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() * self.l2_penalty / 2.0;
        total / idx.len() as f64 + penalty
    }

    fn gradient(&self, model: &ModelVector, data: &LabeledDataset, idx: &[usize]) -> Vec<f64> {
        let block = self.block();
        let mut grad = vec![0.0; self.dim()];
        if !idx.is_empty() {
            let scale = 1.0 / idx.len() as f64;
            for &i in idx {
                let x = data.feature_row(i);
                let mut probs = self.logits(model, x);
                Self::softmax(&mut probs);
                probs[data.labels[i]] -= 1.0;
                for (c, residual) in probs.iter().enumerate() {
                    let row = &mut grad[c * block..(c + 1) * block];
                    for (g, v) in row[..self.feature_dim].iter_mut().zip(x) {
                        *g += scale * residual * v;
                    }
                    row[self.feature_dim] += scale * residual;
                }
            }
        }
        for (g, w) in grad.iter_mut().zip(&model.weights) {
            *g += self.l2_penalty * w;
        }
        grad
    }
}
