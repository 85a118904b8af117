//! Desk-scale federated training: local mini-batch SGD, weighted global
//! aggregation, the blockchain-ledger stub, and the convergence-bound
//! calculator.

mod bound;
mod ledger;
mod logistic;

pub use bound::{lemma1_bound, BoundError, BoundInputs};
pub use ledger::{mine_and_append, model_digest, Ledger, LedgerBlock, RoundRecord};
pub use logistic::LogisticRegression;

use crate::data::LabeledDataset;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlError {
    #[error("training diverged at local step {step} (gradient norm {grad_norm:.3e})")]
    Diverged { step: usize, grad_norm: f64 },
    #[error("learning rate must be finite and non-negative, got {0}")]
    BadLearningRate(f64),
    #[error("local iteration count must be at least 1")]
    ZeroIterations,
    #[error("cannot aggregate an empty model set")]
    EmptyAggregation,
    #[error("model dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error(
        "block for round {round} rejected: digest {claimed} does not match recomputed {recomputed}"
    )]
    BlockRejected {
        round: usize,
        claimed: String,
        recomputed: String,
    },
    #[error("mining needs a positive total frequency")]
    NoMiningPower,
}

/// Flat parameter vector of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVector {
    pub weights: Vec<f64>,
}

impl ModelVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

/// A differentiable training objective over a labeled dataset.
///
/// `idx` selects the mini-batch; loss and gradient are averages over the
/// batch plus any regularization term.
pub trait Objective {
    fn dim(&self) -> usize;
    fn loss(&self, model: &ModelVector, data: &LabeledDataset, idx: &[usize]) -> f64;
    fn gradient(&self, model: &ModelVector, data: &LabeledDataset, idx: &[usize]) -> Vec<f64>;
}

/// Result of one client's local pass: the updated model and the gradient norm
/// of every local step (these feed the empirical gradient bound).
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelVector,
    pub grad_norms: Vec<f64>,
}

/// Runs `local_iters` mini-batch SGD steps from `model` on `data`.
///
/// Batches of `batch_size` distinct samples are drawn fresh each step; a
/// batch size of zero or one at least the dataset size means full-batch
/// descent.
pub fn local_train<O: Objective, R: Rng + ?Sized>(
    objective: &O,
    model: &ModelVector,
    data: &LabeledDataset,
    eta: f64,
    local_iters: u32,
    batch_size: usize,
    rng: &mut R,
) -> Result<TrainOutcome, FlError> {
    if local_iters == 0 {
        return Err(FlError::ZeroIterations);
    }
    if !eta.is_finite() || eta < 0.0 {
        return Err(FlError::BadLearningRate(eta));
    }
    let n = data.len();
    let full_batch: Vec<usize> = (0..n).collect();
    let mut w = model.clone();
    let mut grad_norms = Vec::with_capacity(local_iters as usize);
    for step in 0..local_iters {
        let batch: Vec<usize> = if batch_size == 0 || batch_size >= n {
            full_batch.clone()
        } else {
            rand::seq::index::sample(rng, n, batch_size).into_vec()
        };
        let grad = objective.gradient(&w, data, &batch);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(FlError::Diverged {
                step: step as usize,
                grad_norm: norm,
            });
        }
        for (wk, gk) in w.weights.iter_mut().zip(&grad) {
            *wk -= eta * gk;
        }
        grad_norms.push(norm);
    }
    if !w.is_finite() {
        return Err(FlError::Diverged {
            step: local_iters as usize,
            grad_norm: f64::NAN,
        });
    }
    Ok(TrainOutcome {
        model: w,
        grad_norms,
    })
}

/// Dataset-size-weighted average of the participating clients' models:
/// `W = Σ |D_i|·w_i / Σ |D_i|`.
pub fn aggregate(contributions: &[(&ModelVector, usize)]) -> Result<ModelVector, FlError> {
    let Some(((first, _), rest)) = contributions.split_first() else {
        return Err(FlError::EmptyAggregation);
    };
    let dim = first.dim();
    for (model, _) in rest {
        if model.dim() != dim {
            return Err(FlError::DimensionMismatch {
                left: dim,
                right: model.dim(),
            });
        }
    }
    let total: f64 = contributions.iter().map(|&(_, size)| size as f64).sum();
    let mut weights = vec![0.0; dim];
    for (model, size) in contributions {
        let share = *size as f64 / total;
        for (acc, w) in weights.iter_mut().zip(&model.weights) {
            *acc += share * w;
        }
    }
    Ok(ModelVector { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Test-only 1-D objective f(w) = (w - target)² / 2, ignoring the data.
    struct Quadratic {
        target: f64,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn loss(&self, model: &ModelVector, _: &LabeledDataset, _: &[usize]) -> f64 {
            (model.weights[0] - self.target).powi(2) / 2.0
        }
        fn gradient(&self, model: &ModelVector, _: &LabeledDataset, _: &[usize]) -> Vec<f64> {
            vec![model.weights[0] - self.target]
        }
    }

    fn dummy_data() -> LabeledDataset {
        LabeledDataset {
            features: vec![0.0; 4],
            labels: vec![0, 0, 0, 0],
            feature_dim: 1,
            num_classes: 1,
            owner: None,
        }
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let start = ModelVector { weights: vec![0.7] };
        let out = local_train(
            &Quadratic { target: 3.0 },
            &start,
            &dummy_data(),
            0.0,
            5,
            0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.model, start);
        assert_eq!(out.grad_norms.len(), 5);
    }

    #[test]
    fn single_full_batch_step_on_least_squares() {
        // f(w) = (w-3)²/2 from w=0 with η=0.5 lands on 1.5.
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let out = local_train(
            &Quadratic { target: 3.0 },
            &ModelVector::zeros(1),
            &dummy_data(),
            0.5,
            1,
            0,
            &mut rng,
        )
        .unwrap();
        assert!((out.model.weights[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_contracts_geometrically() {
        // |w^H - w*| = (1-η)^H |w^0 - w*| on f = (w-w*)²/2 with full batches.
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let target = 2.0;
        let eta = 0.3;
        for h in [1u32, 4, 13] {
            let out = local_train(
                &Quadratic { target },
                &ModelVector::zeros(1),
                &dummy_data(),
                eta,
                h,
                0,
                &mut rng,
            )
            .unwrap();
            let expect = target - (1.0 - eta).powi(h as i32) * target;
            assert!((out.model.weights[0] - expect).abs() < 1e-12, "H={h}");
        }
    }

    #[test]
    fn divergence_is_reported() {
        struct Explode;
        impl Objective for Explode {
            fn dim(&self) -> usize {
                1
            }
            fn loss(&self, _: &ModelVector, _: &LabeledDataset, _: &[usize]) -> f64 {
                f64::INFINITY
            }
            fn gradient(&self, _: &ModelVector, _: &LabeledDataset, _: &[usize]) -> Vec<f64> {
                vec![f64::NAN]
            }
        }
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let err = local_train(
            &Explode,
            &ModelVector::zeros(1),
            &dummy_data(),
            0.1,
            3,
            0,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, FlError::Diverged { step: 0, .. }));
    }

    #[test]
    fn aggregate_examples() {
        let a = ModelVector { weights: vec![0.0] };
        let b = ModelVector { weights: vec![4.0] };
        let w = aggregate(&[(&a, 1), (&b, 3)]).unwrap();
        assert_eq!(w.weights, vec![3.0]);

        // A single client aggregates to itself.
        let solo = aggregate(&[(&b, 7)]).unwrap();
        assert_eq!(solo.weights, b.weights);

        // Equal sizes: plain average, order-independent.
        let x = ModelVector {
            weights: vec![1.0, 2.0],
        };
        let y = ModelVector {
            weights: vec![3.0, 6.0],
        };
        let m1 = aggregate(&[(&x, 5), (&y, 5)]).unwrap();
        let m2 = aggregate(&[(&y, 5), (&x, 5)]).unwrap();
        assert_eq!(m1.weights, vec![2.0, 4.0]);
        assert_eq!(m1, m2);

        assert!(matches!(aggregate(&[]), Err(FlError::EmptyAggregation)));
        let short = ModelVector::zeros(1);
        assert!(matches!(
            aggregate(&[(&x, 1), (&short, 1)]),
            Err(FlError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn aggregating_identical_models_is_identity() {
        let m = ModelVector {
            weights: vec![0.25, -1.5, 3.0e-7],
        };
        let out = aggregate(&[(&m, 10), (&m, 20), (&m, 3)]).unwrap();
        for (a, b) in out.weights.iter().zip(&m.weights) {
            assert!((a - b).abs() <= b.abs() * f64::EPSILON);
        }
    }
}
