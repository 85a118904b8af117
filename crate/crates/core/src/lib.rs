//! Desk-scale simulator for blockchain-aided decentralized federated learning
//! (BDFL) over a wireless network.
//!
//! Clients train a shared model on local non-IID data, upload it over a fading
//! uplink, aggregate the received models, and race to mine the block that
//! records the new global model. Every phase costs time and energy, and each
//! client has a per-round energy budget. The scheduler decides, round by
//! round, which clients train and at which CPU and mining frequencies, trading
//! off round delay against long-term participation-rate targets enforced
//! through virtual queues.
//!
//! Module map:
//!
//! - [`topology`] — per-round P2P graph and its algebraic connectivity.
//! - [`phys`] — closed-form delay/energy models for computation, uplink
//!   transmission, and proof-of-work mining.
//! - [`data`] — synthetic Gaussian-mixture data, Dirichlet partitioning, and
//!   participation rates derived from label-distribution divergence.
//! - [`fl`] — local SGD, weighted aggregation, the ledger stub, and the
//!   convergence-bound calculator.
//! - [`scheduler`] — virtual queues, drift-plus-penalty objective, closed-form
//!   frequency solvers, delay-sorted client selection, and the three baseline
//!   schedulers.
//! - [`sim`] — end-to-end runs, V-sweeps, baseline comparisons, configuration,
//!   and CSV metrics.

pub mod data;
pub mod fl;
pub mod linalg;
pub mod phys;
pub mod rng;
pub mod scheduler;
pub mod sim;
pub mod topology;

pub use sim::{compare_baselines, run_simulation, sweep_v, SimConfig, SimError};
