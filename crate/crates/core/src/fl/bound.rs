//! Convergence-bound calculator.
//!
//! Bounds the running average of the squared global gradient norm,
//! `(1/T) Σ_t ||∇F(w(t+1))||²`, for the scheduled training loop in terms of
//! the smoothness constant, the gradient bound, the initial optimality gap,
//! and each client's participation rate and data share.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("{param} must be positive, got {value}")]
    NonPositive { param: &'static str, value: f64 },
    #[error("betas and dataset_sizes must both have num_clients entries")]
    LengthMismatch,
    #[error("participation rate {0} outside (0, 1]")]
    BadBeta(f64),
}

/// Inputs to the bound.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    /// Learning rate η.
    pub eta: f64,
    /// Local iterations per round H.
    pub local_iters: u32,
    /// Communication rounds T.
    pub rounds: usize,
    /// Number of clients U.
    pub num_clients: usize,
    /// Smoothness constant L of the global loss.
    pub smoothness: f64,
    /// Gradient-norm bound G.
    pub grad_bound: f64,
    /// Initial optimality gap F(w(1)) - F(w*).
    pub initial_gap: f64,
    /// Per-client participation rates β_i.
    pub betas: Vec<f64>,
    /// Per-client dataset sizes |D_i|.
    pub dataset_sizes: Vec<usize>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<(), BoundError> {
        for (param, value) in [
            ("eta", self.eta),
            ("smoothness", self.smoothness),
            ("grad_bound", self.grad_bound),
            ("initial_gap", self.initial_gap),
            ("rounds", self.rounds as f64),
            ("local_iters", f64::from(self.local_iters)),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(BoundError::NonPositive { param, value });
            }
        }
        if self.betas.len() != self.num_clients || self.dataset_sizes.len() != self.num_clients {
            return Err(BoundError::LengthMismatch);
        }
        for &beta in &self.betas {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(BoundError::BadBeta(beta));
            }
        }
        Ok(())
    }
}

/// Evaluates the four-term convergence bound:
///
/// ```text
///   2·ΔF/(η·H·T)
/// + 2·η·L·H·G² · (Σ β_i·|D_i|/|D|) · (Σ (1-β_i)·|D_i|/|D|)
/// + η·U·L·H·G²·(η·H + 1) · Σ β_i²·|D_i|²/|D|²
/// + U·G² · Σ (1-β_i)²·|D_i|²/|D|²
/// ```
pub fn lemma1_bound(b: &BoundInputs) -> Result<f64, BoundError> {
    b.validate()?;
    let total: f64 = b.dataset_sizes.iter().map(|&s| s as f64).sum();
    let shares: Vec<f64> = b.dataset_sizes.iter().map(|&s| s as f64 / total).collect();

    let weighted_beta: f64 = b.betas.iter().zip(&shares).map(|(beta, p)| beta * p).sum();
    let weighted_miss: f64 = b
        .betas
        .iter()
        .zip(&shares)
        .map(|(beta, p)| (1.0 - beta) * p)
        .sum();
    let beta_sq: f64 = b
        .betas
        .iter()
        .zip(&shares)
        .map(|(beta, p)| beta * beta * p * p)
        .sum();
    let miss_sq: f64 = b
        .betas
        .iter()
        .zip(&shares)
        .map(|(beta, p)| (1.0 - beta).powi(2) * p * p)
        .sum();

    let eta = b.eta;
    let h = f64::from(b.local_iters);
    let t = b.rounds as f64;
    let u = b.num_clients as f64;
    let l = b.smoothness;
    let g2 = b.grad_bound * b.grad_bound;

    let term1 = 2.0 * b.initial_gap / (eta * h * t);
    let term2 = 2.0 * eta * l * h * g2 * weighted_beta * weighted_miss;
    let term3 = eta * u * l * h * g2 * (eta * h + 1.0) * beta_sq;
    let term4 = u * g2 * miss_sq;
    Ok(term1 + term2 + term3 + term4)
}
