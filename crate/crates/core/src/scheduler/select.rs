//! Delay-sorted prefix-group client selection.
//!
//! Clients are sorted by their per-client round delay; only the sorted
//! prefixes of sizes m, m+1, …, U are evaluated (a heuristic, not an
//! exhaustive subset search), and the prefix with the smallest
//! drift-plus-penalty value wins.

use super::{drift_plus_penalty_terms, QueueState, ScheduleError};

/// One schedulable client and its total delay `d_up + d_cp` this round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub client: usize,
    pub total_delay: f64,
}

/// Picks the training set for this round.
///
/// Sorting is by delay ascending; ties prefer the larger queue backlog, then
/// the lower client id. Equal objective values prefer the smaller group.
/// Returns the chosen client ids, sorted ascending.
pub fn select_clients(
    candidates: &[Candidate],
    queues: &QueueState,
    betas: &[f64],
    v: f64,
    d_bloc: f64,
    min_clients: usize,
) -> Result<Vec<usize>, ScheduleError> {
    if candidates.len() < min_clients || candidates.is_empty() {
        return Err(ScheduleError::RoundInfeasible {
            feasible: candidates.len(),
            min: min_clients.max(1),
        });
    }
    for c in candidates {
        if !c.total_delay.is_finite() {
            return Err(ScheduleError::NonFiniteDelay { client: c.client });
        }
    }

    let mut order: Vec<Candidate> = candidates.to_vec();
    order.sort_by(|a, b| {
        a.total_delay
            .total_cmp(&b.total_delay)
            .then_with(|| queues.backlog()[b.client].total_cmp(&queues.backlog()[a.client]))
            .then_with(|| a.client.cmp(&b.client))
    });

    // Constant part of the queue term: Σ_i Z_i·β_i over every client in the
    // system; membership only subtracts Σ_{i∈S} Z_i.
    let base_drift: f64 = queues
        .backlog()
        .iter()
        .zip(betas)
        .map(|(z, beta)| z * beta)
        .sum();

    let mut best: Option<(f64, usize)> = None;
    let mut drained = 0.0;
    for (len, candidate) in order.iter().enumerate().map(|(k, c)| (k + 1, c)) {
        drained += queues.backlog()[candidate.client];
        if len < min_clients.max(1) {
            continue;
        }
        // Sorted ascending, so the prefix maximum delay is the last member's.
        let objective = base_drift - drained + v * (candidate.total_delay + d_bloc);
        if best.is_none_or(|(current, _)| objective < current) {
            best = Some((objective, len));
        }
    }

    let (_, len) = best.expect("at least one prefix evaluated");
    let mut chosen: Vec<usize> = order[..len].iter().map(|c| c.client).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// The drift-plus-penalty value of an explicit selection, used to report the
/// decision's objective and by the brute-force test oracles.
pub fn selection_objective(
    queues: &QueueState,
    betas: &[f64],
    selected: &[usize],
    round_delay: f64,
    v: f64,
) -> f64 {
    drift_plus_penalty_terms(queues, betas, selected) + v * round_delay
}
