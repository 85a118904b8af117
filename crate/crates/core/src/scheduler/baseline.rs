//! Baseline schedulers: uniform random, round robin, and channel-best.
//!
//! All three pick a fixed number of clients per round and leave the CPU and
//! mining frequencies at their configured initial values.

use super::ScheduleError;
use crate::phys::ChannelRealization;
use rand::Rng;

fn check_count(k: usize, num_clients: usize) -> Result<(), ScheduleError> {
    if k == 0 || k > num_clients {
        Err(ScheduleError::BadSelectionCount { k, num_clients })
    } else {
        Ok(())
    }
}

/// Uniformly random k-subset of the clients.
pub fn baseline_random<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    num_clients: usize,
) -> Result<Vec<usize>, ScheduleError> {
    check_count(k, num_clients)?;
    let mut chosen = rand::seq::index::sample(rng, num_clients, k).into_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Cyclic selection by client index: round t takes clients
/// `(t·k + j) mod U` for `j = 0..k`.
pub fn baseline_round_robin(
    round_index: usize,
    k: usize,
    num_clients: usize,
) -> Result<Vec<usize>, ScheduleError> {
    check_count(k, num_clients)?;
    let mut chosen: Vec<usize> = (0..k)
        .map(|j| (round_index * k + j) % num_clients)
        .collect();
    chosen.sort_unstable();
    chosen.dedup();
    Ok(chosen)
}

/// The k clients with the best channel gains this round (ties to lower id).
pub fn baseline_channel_best(
    channel: &ChannelRealization,
    k: usize,
) -> Result<Vec<usize>, ScheduleError> {
    let num_clients = channel.channel_gain.len();
    check_count(k, num_clients)?;
    let mut order: Vec<usize> = (0..num_clients).collect();
    order.sort_by(|&a, &b| {
        channel.channel_gain[b]
            .total_cmp(&channel.channel_gain[a])
            .then_with(|| a.cmp(&b))
    });
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}
