//! Joint resource-allocation and client-scheduling.
//!
//! The long-term participation constraint is handled through one virtual
//! queue per client: the backlog grows by β_i every round and drains by one
//! when the client trains, so keeping the queues stable forces each client to
//! train in at least a β_i fraction of rounds. Each round then minimizes the
//! drift-plus-penalty objective
//!
//! `Δ_V = Σ_i Z_i·(β_i - Γ_i) + V·d(t)`
//!
//! over the training set and the per-client CPU and mining frequencies, by
//! alternating two closed-form frequency solvers with a delay-sorted
//! selection step until the selection stabilizes.

mod baseline;
mod freq;
mod select;

pub use baseline::{baseline_channel_best, baseline_random, baseline_round_robin};
pub use freq::{positive_cubic_root, solve_cpu_freq, solve_mining_freq, FreqBounds};
pub use select::{select_clients, selection_objective, Candidate};

use crate::phys::{self, ChannelRealization, ClientProfile, MiningParams, PhysError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error(
        "client {client} cannot meet its energy budget this round (residual {residual:.3e} J)"
    )]
    InfeasibleClient { client: usize, residual: f64 },
    #[error("client {client} has no usable uplink this round")]
    UnusableChannel { client: usize },
    #[error("only {feasible} feasible clients, need at least {min}")]
    RoundInfeasible { feasible: usize, min: usize },
    #[error("client {client} reported a non-finite delay")]
    NonFiniteDelay { client: usize },
    #[error("mining-frequency cubic has no positive root (M={m:.3e}, N={n:.3e})")]
    NoPositiveRoot { m: f64, n: f64 },
    #[error("selection count {k} invalid for {num_clients} clients")]
    BadSelectionCount { k: usize, num_clients: usize },
    #[error("client {client} ends the round at {energy:.6} J, over its {budget:.6} J budget")]
    EnergyViolated {
        client: usize,
        energy: f64,
        budget: f64,
    },
    #[error("scheduler config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Phys(#[from] PhysError),
}

/// Per-client virtual queue backlogs Z_i(t). Non-negative by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    backlog: Vec<f64>,
}

impl QueueState {
    /// All queues start empty.
    pub fn new(num_clients: usize) -> Self {
        Self {
            backlog: vec![0.0; num_clients],
        }
    }

    pub fn backlog(&self) -> &[f64] {
        &self.backlog
    }

    pub fn set_backlog(&mut self, client: usize, value: f64) {
        assert!(value >= 0.0, "backlog must be non-negative");
        self.backlog[client] = value;
    }

    pub fn len(&self) -> usize {
        self.backlog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backlog.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.backlog.is_empty() {
            0.0
        } else {
            self.backlog.iter().sum::<f64>() / self.backlog.len() as f64
        }
    }

    pub fn max(&self) -> f64 {
        self.backlog.iter().copied().fold(0.0, f64::max)
    }
}

/// Virtual-queue recursion: `Z_i(t+1) = max{Z_i(t) + β_i - Γ_i(t), 0}` with
/// `Γ_i = 1` exactly when client i trained this round.
pub fn queue_update(q: &QueueState, betas: &[f64], selected: &[usize]) -> QueueState {
    let backlog = q
        .backlog
        .iter()
        .zip(betas)
        .enumerate()
        .map(|(i, (z, beta))| {
            let gamma = if selected.contains(&i) { 1.0 } else { 0.0 };
            (z + beta - gamma).max(0.0)
        })
        .collect();
    QueueState { backlog }
}

/// Queue half of the objective: `Σ_i Z_i·(β_i - Γ_i)`.
pub(crate) fn drift_plus_penalty_terms(q: &QueueState, betas: &[f64], selected: &[usize]) -> f64 {
    q.backlog
        .iter()
        .zip(betas)
        .enumerate()
        .map(|(i, (z, beta))| {
            let gamma = if selected.contains(&i) { 1.0 } else { 0.0 };
            z * (beta - gamma)
        })
        .sum()
}

/// Full drift-plus-penalty value `Σ_i Z_i·(β_i - Γ_i) + V·d(t)` where `d(t)`
/// is the composite round delay (slowest selected client plus mining).
pub fn drift_plus_penalty(
    q: &QueueState,
    betas: &[f64],
    selected: &[usize],
    round_delay: f64,
    v: f64,
) -> f64 {
    drift_plus_penalty_terms(q, betas, selected) + v * round_delay
}

/// Scheduler knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Delay weight V ≥ 0 in the drift-plus-penalty objective.
    pub tradeoff_v: f64,
    /// Minimum training-set size m per round.
    pub min_clients: usize,
    /// Frequency clamp in Hz, applied to CPU and mining frequencies alike.
    pub freq_min: f64,
    /// Frequency clamp in Hz.
    pub freq_max: f64,
    /// Inner-loop iteration cap.
    pub inner_max_iters: usize,
    /// Relative frequency change treated as converged when the selection
    /// oscillates between objective-equal sets.
    pub inner_tolerance: f64,
}

impl SchedulerConfig {
    pub fn validate(&self, num_clients: usize) -> Result<(), ScheduleError> {
        if self.min_clients == 0 || self.min_clients > num_clients {
            return Err(ScheduleError::BadConfig(format!(
                "min_clients {} outside 1..={num_clients}",
                self.min_clients
            )));
        }
        if !(self.freq_min > 0.0 && self.freq_max >= self.freq_min) {
            return Err(ScheduleError::BadConfig(format!(
                "frequency bounds [{}, {}] invalid",
                self.freq_min, self.freq_max
            )));
        }
        if self.tradeoff_v < 0.0 || !self.tradeoff_v.is_finite() {
            return Err(ScheduleError::BadConfig(format!(
                "tradeoff_v {} must be non-negative",
                self.tradeoff_v
            )));
        }
        if self.inner_max_iters == 0 {
            return Err(ScheduleError::BadConfig(
                "inner_max_iters must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn bounds(&self) -> FreqBounds {
        FreqBounds {
            min: self.freq_min,
            max: self.freq_max,
        }
    }
}

/// Everything a scheduling round needs to see.
#[derive(Debug, Clone, Copy)]
pub struct RoundInputs<'a> {
    pub profiles: &'a [ClientProfile],
    pub channel: &'a ChannelRealization,
    pub mining: &'a MiningParams,
    pub local_iters: u32,
}

/// CPU and mining frequencies carried across rounds (warm start).
#[derive(Debug, Clone, PartialEq)]
pub struct FreqState {
    pub cpu: Vec<f64>,
    pub mining: Vec<f64>,
}

impl FreqState {
    pub fn uniform(num_clients: usize, f_init: f64, f_bloc_init: f64) -> Self {
        Self {
            cpu: vec![f_init; num_clients],
            mining: vec![f_bloc_init; num_clients],
        }
    }
}

/// The scheduler's output for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundDecision {
    /// Training set S(t), ascending client ids.
    pub selected: Vec<usize>,
    /// Per-client CPU frequencies f_i(t); meaningful for selected clients.
    pub cpu_freq: Vec<f64>,
    /// Per-client mining frequencies f_i^bloc(t); every client mines.
    pub mining_freq: Vec<f64>,
    /// Drift-plus-penalty value of the decision.
    pub objective_value: f64,
    /// Inner alternating iterations used.
    pub inner_iterations: usize,
    /// False when the loop hit the iteration cap before the selection
    /// stabilized; the last iterate is returned anyway.
    pub converged: bool,
}

/// One round of the joint optimizer.
///
/// Starting from the carried frequencies and the all-clients set, it
/// alternates the CPU closed form, the mining closed form (Gauss–Seidel over
/// clients, freshest values in the coupling sum), and the prefix selection,
/// until the selection repeats or frequencies stop moving. Clients whose
/// residual energy goes non-positive (or whose clamped frequencies would
/// break the budget) drop out of candidacy for this round but keep mining at
/// their carried frequency.
///
/// On success the queues are advanced and the frequencies carried forward.
pub fn drc_bdfl_round(
    inputs: &RoundInputs<'_>,
    cfg: &SchedulerConfig,
    queues: &mut QueueState,
    freqs: &mut FreqState,
) -> Result<RoundDecision, ScheduleError> {
    let u = inputs.profiles.len();
    cfg.validate(u)?;
    let bounds = cfg.bounds();
    let betas: Vec<f64> = inputs
        .profiles
        .iter()
        .map(|p| p.participation_rate)
        .collect();
    let rates = &inputs.channel.uplink_rate;

    let mut feasible: Vec<bool> = rates.iter().map(|&r| r > 0.0).collect();
    let mut f: Vec<f64> = freqs.cpu.iter().map(|&x| bounds.clamp(x)).collect();
    let mut fb: Vec<f64> = freqs.mining.iter().map(|&x| bounds.clamp(x)).collect();

    // Algorithm start: everyone participates.
    let mut prev_selection: Vec<usize> = (0..u).collect();
    let mut outcome: Option<(Vec<usize>, f64)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for n in 1..=cfg.inner_max_iters {
        iterations = n;
        let prev_f = f.clone();
        let prev_fb = fb.clone();

        // CPU frequencies against the current mining plan.
        let d_bloc = phys::mining_delay(inputs.mining, &fb)?;
        for i in 0..u {
            if !feasible[i] {
                continue;
            }
            match solve_cpu_freq(
                &inputs.profiles[i],
                rates[i],
                fb[i],
                d_bloc,
                inputs.local_iters,
                bounds,
            ) {
                Ok(freq) => f[i] = freq,
                Err(ScheduleError::InfeasibleClient { .. })
                | Err(ScheduleError::UnusableChannel { .. }) => feasible[i] = false,
                Err(other) => return Err(other),
            }
        }

        // Mining frequencies against the new CPU plan. All clients update
        // from the same snapshot, so identical clients stay identical and the
        // result does not depend on client order.
        let fb_snapshot = fb.clone();
        let fb_total: f64 = fb_snapshot.iter().sum();
        for i in 0..u {
            if !feasible[i] {
                continue;
            }
            let others: f64 = fb_total - fb_snapshot[i];
            match solve_mining_freq(
                &inputs.profiles[i],
                rates[i],
                f[i],
                others,
                inputs.mining,
                inputs.local_iters,
                bounds,
            ) {
                Ok(freq) => fb[i] = freq,
                Err(ScheduleError::InfeasibleClient { .. })
                | Err(ScheduleError::UnusableChannel { .. }) => feasible[i] = false,
                Err(other) => return Err(other),
            }
        }

        // Clamping can undo tightness; screen the actual energies.
        let d_bloc = phys::mining_delay(inputs.mining, &fb)?;
        for i in 0..u {
            if !feasible[i] {
                continue;
            }
            let p = &inputs.profiles[i];
            let energy = phys::upload_energy(p, rates[i])?
                + phys::compute_energy(p, inputs.local_iters, f[i])?
                + phys::mining_energy(p, d_bloc, fb[i]);
            if energy > p.energy_budget * (1.0 + 1e-9) {
                feasible[i] = false;
            }
        }

        // Selection over the surviving candidates.
        let mut candidates = Vec::with_capacity(u);
        for i in 0..u {
            if !feasible[i] {
                continue;
            }
            let p = &inputs.profiles[i];
            let total_delay = phys::upload_delay(p, rates[i])?
                + phys::compute_delay(p, inputs.local_iters, f[i])?;
            candidates.push(Candidate {
                client: i,
                total_delay,
            });
        }
        let selection = select_clients(
            &candidates,
            queues,
            &betas,
            cfg.tradeoff_v,
            d_bloc,
            cfg.min_clients,
        )?;

        let max_delay = candidates
            .iter()
            .filter(|c| selection.contains(&c.client))
            .map(|c| c.total_delay)
            .fold(f64::NEG_INFINITY, f64::max);
        let objective = selection_objective(
            queues,
            &betas,
            &selection,
            max_delay + d_bloc,
            cfg.tradeoff_v,
        );

        let same_set = selection == prev_selection;
        let freq_shift = f
            .iter()
            .zip(&prev_f)
            .chain(fb.iter().zip(&prev_fb))
            .map(|(now, before)| (now - before).abs() / before.abs().max(1.0))
            .fold(0.0_f64, f64::max);
        outcome = Some((selection.clone(), objective));
        prev_selection = selection;
        if same_set || (n > 1 && freq_shift < cfg.inner_tolerance) {
            converged = true;
            break;
        }
    }

    let (selected, objective_value) = outcome.expect("inner_max_iters >= 1");

    // Final constraint audit over every client: selected ones pay all three
    // energy terms, the rest only mine.
    let d_bloc = phys::mining_delay(inputs.mining, &fb)?;
    for (i, p) in inputs.profiles.iter().enumerate() {
        let e_bloc = phys::mining_energy(p, d_bloc, fb[i]);
        let energy = if selected.contains(&i) {
            phys::upload_energy(p, rates[i])?
                + phys::compute_energy(p, inputs.local_iters, f[i])?
                + e_bloc
        } else {
            e_bloc
        };
        if energy > p.energy_budget + 1e-9 {
            return Err(ScheduleError::EnergyViolated {
                client: i,
                energy,
                budget: p.energy_budget,
            });
        }
    }

    *queues = queue_update(queues, &betas, &selected);
    freqs.cpu = f.clone();
    freqs.mining = fb.clone();

    Ok(RoundDecision {
        selected,
        cpu_freq: f,
        mining_freq: fb,
        objective_value,
        inner_iterations: iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::FadingModel;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn queue_update_examples() {
        let mut q = QueueState::new(1);
        q.set_backlog(0, 2.0);
        let next = queue_update(&q, &[0.3], &[0]);
        assert!((next.backlog()[0] - 1.3).abs() < 1e-15);

        let mut q = QueueState::new(1);
        q.set_backlog(0, 0.0);
        let next = queue_update(&q, &[0.3], &[0]);
        assert_eq!(next.backlog()[0], 0.0);

        let mut q = QueueState::new(1);
        q.set_backlog(0, 0.5);
        let next = queue_update(&q, &[0.4], &[]);
        assert!((next.backlog()[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn drift_plus_penalty_examples() {
        let mut q = QueueState::new(2);
        q.set_backlog(0, 1.0);
        q.set_backlog(1, 2.0);
        let val = drift_plus_penalty(&q, &[0.5, 0.5], &[0], 0.3, 10.0);
        assert!((val - 3.5).abs() < 1e-12, "got {val}");

        // V = 0 leaves the pure queue term.
        let val = drift_plus_penalty(&q, &[0.5, 0.5], &[0], 0.3, 0.0);
        assert!((val - 0.5).abs() < 1e-12);

        // Zero queues and V = 1: the objective is the round delay itself.
        let zero = QueueState::new(2);
        let val = drift_plus_penalty(&zero, &[0.5, 0.5], &[0, 1], 0.42, 1.0);
        assert!((val - 0.42).abs() < 1e-15);
    }

    fn table_profiles(u: usize) -> Vec<ClientProfile> {
        (0..u)
            .map(|id| ClientProfile {
                id,
                dataset_size: 3_000,
                cycles_per_sample: 5e3,
                switched_capacitance: 1e-28,
                model_bits: 1e6,
                distance: 200.0,
                tx_power: 0.1,
                energy_budget: 0.4,
                participation_rate: 0.5,
            })
            .collect()
    }

    fn channel_for(
        profiles: &[ClientProfile],
        seed: u64,
        fading: FadingModel,
    ) -> ChannelRealization {
        let params = crate::phys::ChannelParams {
            bandwidth: 180e3,
            noise_psd: 1e-16,
            path_loss_const: 1e-3,
            ref_distance: 1.0,
            path_loss_exponent: 2.0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        crate::phys::draw_channel(&params, profiles, fading, &mut rng)
    }

    fn cfg(v: f64, m: usize) -> SchedulerConfig {
        SchedulerConfig {
            tradeoff_v: v,
            min_clients: m,
            freq_min: 1e8,
            freq_max: 5e9,
            inner_max_iters: 50,
            inner_tolerance: 1e-6,
        }
    }

    fn mining() -> MiningParams {
        MiningParams {
            difficulty: 3e7,
            quantile_prob: 1e-10,
        }
    }

    #[test]
    fn symmetric_clients_get_symmetric_treatment() {
        let profiles = table_profiles(4);
        let channel = channel_for(&profiles, 0, FadingModel::Disabled);
        let mp = mining();
        let inputs = RoundInputs {
            profiles: &profiles,
            channel: &channel,
            mining: &mp,
            local_iters: 20,
        };
        let mut queues = QueueState::new(4);
        let mut freqs = FreqState::uniform(4, 1e9, 1.5e9);
        let decision = drc_bdfl_round(&inputs, &cfg(10.0, 2), &mut queues, &mut freqs).unwrap();
        assert!(decision.converged);
        // Identical clients, identical channels: every member shares one
        // frequency pair.
        let f0 = decision.cpu_freq[decision.selected[0]];
        let b0 = decision.mining_freq[decision.selected[0]];
        for &i in &decision.selected {
            assert!((decision.cpu_freq[i] - f0).abs() < 1e-6 * f0);
            assert!((decision.mining_freq[i] - b0).abs() < 1e-6 * b0);
        }
    }

    #[test]
    fn zero_v_drains_queues_by_selecting_everyone() {
        let profiles = table_profiles(5);
        let channel = channel_for(&profiles, 3, FadingModel::Rayleigh);
        let mp = mining();
        let inputs = RoundInputs {
            profiles: &profiles,
            channel: &channel,
            mining: &mp,
            local_iters: 20,
        };
        let mut queues = QueueState::new(5);
        for i in 0..5 {
            queues.set_backlog(i, 0.5 + i as f64 * 0.1);
        }
        let before = queues.clone();
        let mut freqs = FreqState::uniform(5, 1e9, 1.5e9);
        let decision = drc_bdfl_round(&inputs, &cfg(0.0, 1), &mut queues, &mut freqs).unwrap();
        assert_eq!(decision.selected, vec![0, 1, 2, 3, 4]);

        // Exhaustive check: no subset of any size beats selecting everyone.
        let d_bloc = phys::mining_delay(&mp, &decision.mining_freq).unwrap();
        let betas = vec![0.5; 5];
        let delays: Vec<f64> = (0..5)
            .map(|i| {
                phys::upload_delay(&profiles[i], channel.uplink_rate[i]).unwrap()
                    + phys::compute_delay(&profiles[i], 20, decision.cpu_freq[i]).unwrap()
            })
            .collect();
        let mut best = f64::INFINITY;
        let mut best_set = Vec::new();
        for mask in 1u32..(1 << 5) {
            let subset: Vec<usize> = (0..5).filter(|i| mask & (1 << i) != 0).collect();
            let max_d = subset
                .iter()
                .map(|&i| delays[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let obj = selection_objective(&before, &betas, &subset, max_d + d_bloc, 0.0);
            if obj < best {
                best = obj;
                best_set = subset;
            }
        }
        assert_eq!(best_set, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn returned_plan_is_a_fixed_point() {
        let profiles = table_profiles(6);
        let channel = channel_for(&profiles, 11, FadingModel::Rayleigh);
        let mp = mining();
        let inputs = RoundInputs {
            profiles: &profiles,
            channel: &channel,
            mining: &mp,
            local_iters: 20,
        };
        let mut queues = QueueState::new(6);
        for i in 0..6 {
            queues.set_backlog(i, 0.3 * i as f64);
        }
        let queues_before = queues.clone();
        let mut freqs = FreqState::uniform(6, 1e9, 1.5e9);
        let first = drc_bdfl_round(&inputs, &cfg(10.0, 3), &mut queues, &mut freqs).unwrap();
        assert!(first.converged);

        // Re-running from the returned frequencies and the same queues must
        // reproduce the same selection and frequencies.
        let mut queues2 = queues_before;
        let mut freqs2 = FreqState {
            cpu: first.cpu_freq.clone(),
            mining: first.mining_freq.clone(),
        };
        let second = drc_bdfl_round(&inputs, &cfg(10.0, 3), &mut queues2, &mut freqs2).unwrap();
        assert_eq!(second.selected, first.selected);
        for (a, b) in second.cpu_freq.iter().zip(&first.cpu_freq) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn selected_clients_hit_energy_budget_tightly() {
        let profiles = table_profiles(8);
        let channel = channel_for(&profiles, 5, FadingModel::Rayleigh);
        let mp = mining();
        let inputs = RoundInputs {
            profiles: &profiles,
            channel: &channel,
            mining: &mp,
            local_iters: 20,
        };
        let mut queues = QueueState::new(8);
        let mut freqs = FreqState::uniform(8, 1e9, 1.5e9);
        let decision = drc_bdfl_round(&inputs, &cfg(50.0, 3), &mut queues, &mut freqs).unwrap();
        let d_bloc = phys::mining_delay(&mp, &decision.mining_freq).unwrap();
        for &i in &decision.selected {
            let p = &profiles[i];
            let energy = phys::upload_energy(p, channel.uplink_rate[i]).unwrap()
                + phys::compute_energy(p, 20, decision.cpu_freq[i]).unwrap()
                + phys::mining_energy(p, d_bloc, decision.mining_freq[i]);
            assert!(energy <= p.energy_budget + 1e-9);
            // Interior solutions are tight; clamped ones sit below.
            let interior = decision.cpu_freq[i] < 5e9 - 1.0 && decision.cpu_freq[i] > 1e8 + 1.0;
            if interior {
                assert!(
                    (energy - p.energy_budget).abs() <= 1e-6 * p.energy_budget,
                    "client {i}: energy {energy}"
                );
            }
        }
    }

    #[test]
    fn inner_loop_respects_iteration_cap() {
        let profiles = table_profiles(8);
        let channel = channel_for(&profiles, 9, FadingModel::Rayleigh);
        let mp = mining();
        let inputs = RoundInputs {
            profiles: &profiles,
            channel: &channel,
            mining: &mp,
            local_iters: 20,
        };
        let mut queues = QueueState::new(8);
        let mut freqs = FreqState::uniform(8, 1e9, 1.5e9);
        let mut config = cfg(10.0, 3);
        config.inner_max_iters = 1;
        let decision = drc_bdfl_round(&inputs, &config, &mut queues, &mut freqs).unwrap();
        assert_eq!(decision.inner_iterations, 1);
    }

    #[test]
    fn nonconvergence_over_seeded_rounds_is_rare() {
        let profiles = table_profiles(8);
        let mp = mining();
        let mut queues = QueueState::new(8);
        let mut freqs = FreqState::uniform(8, 1e9, 1.5e9);
        let config = cfg(10.0, 3);
        let mut nonconverged = 0usize;
        for seed in 0..1_000u64 {
            let channel = channel_for(&profiles, seed, FadingModel::Rayleigh);
            let inputs = RoundInputs {
                profiles: &profiles,
                channel: &channel,
                mining: &mp,
                local_iters: 20,
            };
            let decision = drc_bdfl_round(&inputs, &config, &mut queues, &mut freqs).unwrap();
            assert!(decision.inner_iterations <= config.inner_max_iters);
            if !decision.converged {
                nonconverged += 1;
            }
        }
        assert!(
            nonconverged < 10,
            "{nonconverged} of 1000 rounds failed to converge"
        );
    }
}
