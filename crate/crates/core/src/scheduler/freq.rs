//! Closed-form per-client frequency solvers.
//!
//! Both solvers push the client's round energy to its budget, because the
//! drift-plus-penalty objective is strictly decreasing in either frequency
//! while the energy is strictly increasing, so the energy constraint is tight
//! at the optimum.
//!
//! - CPU frequency: the tight-energy condition is quadratic in `f`, giving a
//!   square root.
//! - Mining frequency: the mining delay couples all clients through
//!   `d_bloc = A / (f + N)` with `N` the other clients' total mining
//!   frequency, so the tight-energy condition becomes the depressed cubic
//!   `f³ - M·f - M·N = 0`, solved by Cardano's formula (trigonometric branch
//!   for three real roots).

use super::ScheduleError;
use crate::phys::{ClientProfile, MiningParams};

/// Frequency clamp bounds in Hz, applied to both CPU and mining frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqBounds {
    pub min: f64,
    pub max: f64,
}

impl FreqBounds {
    pub fn clamp(&self, f: f64) -> f64 {
        f.clamp(self.min, self.max)
    }
}

/// Optimal CPU frequency for one client, given the current mining plan:
///
/// `f_i = sqrt( 2·(E_max - E_up - E_bloc) / (χ_i·H·|D_i|·φ_i) )`,
///
/// clamped to `bounds`. `E_up = P_i·m_i/R_i` and
/// `E_bloc = χ_i·d_bloc·f_bloc³/2` are the energies already committed to
/// uploading and mining.
pub fn solve_cpu_freq(
    p: &ClientProfile,
    uplink_rate: f64,
    f_bloc: f64,
    d_bloc: f64,
    local_iters: u32,
    bounds: FreqBounds,
) -> Result<f64, ScheduleError> {
    if uplink_rate <= 0.0 || uplink_rate.is_nan() {
        return Err(ScheduleError::UnusableChannel { client: p.id });
    }
    let e_up = p.tx_power * p.model_bits / uplink_rate;
    let e_bloc = p.switched_capacitance * d_bloc * f_bloc.powi(3) / 2.0;
    let residual = p.energy_budget - e_up - e_bloc;
    if residual <= 0.0 || residual.is_nan() {
        return Err(ScheduleError::InfeasibleClient {
            client: p.id,
            residual,
        });
    }
    let denom = p.switched_capacitance
        * f64::from(local_iters)
        * p.dataset_size as f64
        * p.cycles_per_sample;
    Ok(bounds.clamp((2.0 * residual / denom).sqrt()))
}

/// Optimal mining frequency for one client, given its CPU plan and the other
/// clients' total mining frequency `others_sum`.
///
/// Solves `f³ - M·f - M·N = 0` with
/// `M = -2·(E_max - E_up - E_cp) / (χ_i·α·ln(1-p0))` (positive, since
/// `ln(1-p0) < 0`) and `N = others_sum`, then clamps to `bounds`.
pub fn solve_mining_freq(
    p: &ClientProfile,
    uplink_rate: f64,
    f_cpu: f64,
    others_sum: f64,
    mp: &MiningParams,
    local_iters: u32,
    bounds: FreqBounds,
) -> Result<f64, ScheduleError> {
    if uplink_rate <= 0.0 || uplink_rate.is_nan() {
        return Err(ScheduleError::UnusableChannel { client: p.id });
    }
    let e_up = p.tx_power * p.model_bits / uplink_rate;
    let e_cp = p.switched_capacitance
        * p.cycles_per_sample
        * f64::from(local_iters)
        * p.dataset_size as f64
        * f_cpu
        * f_cpu
        / 2.0;
    let residual = p.energy_budget - e_up - e_cp;
    if residual <= 0.0 || residual.is_nan() {
        return Err(ScheduleError::InfeasibleClient {
            client: p.id,
            residual,
        });
    }
    // A = -α·ln(1 - p0) > 0, so M = 2·residual / (χ·A) > 0.
    let a = -mp.difficulty * (-mp.quantile_prob).ln_1p();
    let m = 2.0 * residual / (p.switched_capacitance * a);
    let root = positive_cubic_root(m, others_sum)
        .ok_or(ScheduleError::NoPositiveRoot { m, n: others_sum })?;
    debug_assert!(
        (root.powi(3) - m * root - m * others_sum).abs()
            <= 1e-6 * (m * others_sum).max(1.0).max(root.powi(3).abs() * 1e-9),
        "cubic residual too large"
    );
    Ok(bounds.clamp(root))
}

/// Unique positive real root of `f³ - M·f - M·N = 0` for `M > 0`, `N ≥ 0`.
///
/// `N = 0` degenerates to `f³ = M·f`, whose positive root is `sqrt(M)`
/// exactly. Otherwise Cardano's discriminant `(M·N/2)² - (M/3)³` picks the
/// branch: one real root through cube roots when positive, the trigonometric
/// three-real-root form when negative, taking the largest (the only positive)
/// root.
pub fn positive_cubic_root(m: f64, n: f64) -> Option<f64> {
    if !m.is_finite() || !n.is_finite() || m <= 0.0 || n < 0.0 {
        return None;
    }
    if n == 0.0 {
        return Some(m.sqrt());
    }
    let half_q = m * n / 2.0;
    let p_cubed = (m / 3.0).powi(3);
    let disc = half_q * half_q - p_cubed;
    let root = if disc >= 0.0 {
        // One real root: u + (M/3)/u with u = cbrt(MN/2 + sqrt(disc)).
        // Writing the second cube root as (M/3)/u avoids cancellation when
        // the two Cardano terms are nearly opposite.
        let u = (half_q + disc.sqrt()).cbrt();
        u + (m / 3.0) / u
    } else {
        // Three real roots; the largest is the positive one.
        let ratio = (half_q / p_cubed.sqrt()).clamp(-1.0, 1.0);
        2.0 * (m / 3.0).sqrt() * (ratio.acos() / 3.0).cos()
    };
    (root > 0.0).then_some(root)
}
