//! End-to-end simulation runs, V-sweeps, and baseline comparisons.
//!
//! A run is fully determined by its configuration and master seed: the seed
//! is split into independent streams for channel fading, data partitioning,
//! baseline selection, mining, and training, so identical `(config, seed)`
//! pairs produce byte-identical outputs.

mod config;
mod metrics;

pub use config::{MiningMode, SchedulerKind, SimConfig};
pub use metrics::{
    csv_header, emit_metrics, metrics_csv_string, parse_metrics_csv, ClientRound, CsvRow,
    RoundMetrics, RunLabel,
};

use crate::data::{
    derive_participation_rates, generate_mixture, partition_dirichlet, DataError, LabeledDataset,
    MixtureSpec, PartitionSpec,
};
use crate::fl::{
    aggregate, lemma1_bound, local_train, mine_and_append, model_digest, BoundError, BoundInputs,
    FlError, Ledger, LogisticRegression, ModelVector, Objective, RoundRecord,
};
use crate::phys::{
    self, ChannelParams, ChannelRealization, ClientProfile, MiningParams, PhysError,
};
use crate::rng::SeedStreams;
use crate::scheduler::{
    baseline_channel_best, baseline_random, baseline_round_robin, drc_bdfl_round, queue_update,
    selection_objective, FreqState, QueueState, RoundDecision, RoundInputs, ScheduleError,
    SchedulerConfig,
};
use crate::topology::{algebraic_connectivity, induced_topology, TopologyError, CONNECTIVITY_TOL};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("config parse: {0}")]
    ConfigParse(String),
    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: ScheduleError,
    },
    #[error("round {round}: topology violates connectivity (λ2 = {lambda2:.3e})")]
    Connectivity { round: usize, lambda2: f64 },
    #[error("round {round}: client {client} training failed: {source}")]
    Training {
        round: usize,
        client: usize,
        #[source]
        source: FlError,
    },
    #[error("round {round}: ledger rejected the block: {source}")]
    Ledger {
        round: usize,
        #[source]
        source: FlError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Phys(#[from] PhysError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("sweep needs at least one V value")]
    EmptySweep,
    #[error("comparison needs at least one seed")]
    NoSeeds,
}

impl SimError {
    /// Configuration problems exit with a different code than runtime
    /// infeasibility.
    pub fn is_config_error(&self) -> bool {
        matches!(self, SimError::Config(_) | SimError::ConfigParse(_))
    }
}

/// Quantities collected for the convergence-bound check.
#[derive(Debug, Clone)]
pub struct BoundStats {
    /// Global loss of the initial model F(w(1)).
    pub initial_loss: f64,
    /// Smallest global loss observed over the run.
    pub min_loss: f64,
    /// Largest local mini-batch gradient norm observed across all clients
    /// and local steps.
    pub max_local_grad_norm: f64,
    /// ||∇F(w(t+1))||² per round, over the aggregated training data.
    pub grad_sq_per_round: Vec<f64>,
    /// Analytic smoothness constant of the global loss.
    pub smoothness: f64,
}

impl BoundStats {
    /// `(1/T) Σ_t ||∇F(w(t+1))||²`.
    pub fn mean_grad_sq(&self) -> f64 {
        if self.grad_sq_per_round.is_empty() {
            0.0
        } else {
            self.grad_sq_per_round.iter().sum::<f64>() / self.grad_sq_per_round.len() as f64
        }
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub metrics: Vec<RoundMetrics>,
    pub ledger: Ledger,
    /// Participation-rate targets derived from the data partition.
    pub betas: Vec<f64>,
    pub bound_stats: BoundStats,
    /// Rebalance warnings from the partitioner, if any.
    pub partition_warnings: Vec<String>,
}

impl SimOutput {
    /// Assembles the convergence-bound inputs: analytic smoothness, the
    /// empirical gradient bound with 10% headroom, and the observed loss gap.
    pub fn bound_inputs(&self, cfg: &SimConfig) -> BoundInputs {
        BoundInputs {
            eta: cfg.learning_rate,
            local_iters: cfg.local_iters,
            rounds: cfg.rounds.max(1),
            num_clients: cfg.clients,
            smoothness: self.bound_stats.smoothness,
            grad_bound: (self.bound_stats.max_local_grad_norm * 1.1).max(1e-12),
            initial_gap: (self.bound_stats.initial_loss - self.bound_stats.min_loss).max(1e-12),
            betas: self.betas.clone(),
            dataset_sizes: vec![cfg.dataset_size; cfg.clients],
        }
    }

    /// Evaluates the convergence bound for this run.
    pub fn lemma1_bound(&self, cfg: &SimConfig) -> Result<f64, SimError> {
        Ok(lemma1_bound(&self.bound_inputs(cfg))?)
    }

    pub fn run_label(&self, cfg: &SimConfig) -> RunLabel {
        RunLabel {
            scheduler: cfg.scheduler.name().into(),
            seed: cfg.seed,
            v: cfg.tradeoff_v,
        }
    }
}

/// Runs one full simulation under the configured scheduler.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimOutput, SimError> {
    run_with_counts(cfg, None)
}

/// Like [`run_simulation`], but forces the baseline schedulers to select
/// `counts[t]` clients in round `t` (used to replay the reference run's
/// per-round set sizes in comparisons).
fn run_with_counts(cfg: &SimConfig, counts: Option<&[usize]>) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let streams = SeedStreams::new(cfg.seed);
    let u = cfg.clients;

    // Data: mixture, partition, participation targets.
    let mut partition_rng = streams.stream("partition");
    let total_train = u * cfg.dataset_size;
    let train_per_class = total_train.div_ceil(cfg.num_classes);
    let test_per_class = ((train_per_class as f64) * cfg.test_fraction / (1.0 - cfg.test_fraction))
        .round()
        .max(1.0) as usize;
    let mixture = MixtureSpec {
        num_classes: cfg.num_classes,
        feature_dim: cfg.feature_dim,
        mean_scale: cfg.mixture_mean_scale,
        noise_std: cfg.mixture_noise_std,
        train_per_class,
        test_per_class,
    };
    let (train, test) = generate_mixture(&mixture, &mut partition_rng);
    let partition = partition_dirichlet(
        &train,
        &PartitionSpec {
            num_classes: cfg.num_classes,
            dirichlet_alpha: cfg.dirichlet_alpha,
            samples_per_client: vec![cfg.dataset_size; u],
        },
        &mut partition_rng,
    )?;
    let betas = derive_participation_rates(
        &partition.clients,
        &train.label_counts(),
        cfg.beta_min,
        cfg.beta_max,
        cfg.beta_inverted,
    )?;

    let profiles: Vec<ClientProfile> = (0..u)
        .map(|id| ClientProfile {
            id,
            dataset_size: partition.clients[id].len(),
            cycles_per_sample: cfg.cycles_per_sample,
            switched_capacitance: cfg.switched_capacitance,
            model_bits: cfg.model_bits,
            distance: cfg.distance,
            tx_power: cfg.tx_power,
            energy_budget: cfg.energy_budget,
            participation_rate: betas[id],
        })
        .collect();
    for p in &profiles {
        p.validate()?;
    }
    let channel_params = ChannelParams {
        bandwidth: cfg.bandwidth,
        noise_psd: cfg.noise_psd,
        path_loss_const: cfg.path_loss_const,
        ref_distance: cfg.ref_distance,
        path_loss_exponent: cfg.path_loss_exponent,
    };
    channel_params.validate()?;
    let mining = MiningParams {
        difficulty: cfg.mining_difficulty,
        quantile_prob: cfg.mining_quantile_prob,
    };
    mining.validate()?;

    // Training state. The "union" view concatenates the client shares; the
    // global loss is the size-weighted average of the client losses, which is
    // exactly the plain average over this concatenation.
    let objective = LogisticRegression::new(cfg.feature_dim, cfg.num_classes, cfg.l2_penalty);
    let union = concat_datasets(&partition.clients, cfg.feature_dim, cfg.num_classes);
    let union_idx: Vec<usize> = (0..union.len()).collect();
    let mut model = ModelVector::zeros(objective.dim());

    let scheduler_cfg = SchedulerConfig {
        tradeoff_v: cfg.tradeoff_v,
        min_clients: cfg.min_clients,
        freq_min: cfg.freq_min,
        freq_max: cfg.freq_max,
        inner_max_iters: cfg.inner_max_iters,
        inner_tolerance: cfg.inner_tolerance,
    };
    let mut queues = QueueState::new(u);
    let mut freqs = FreqState::uniform(u, cfg.f_init, cfg.f_bloc_init);
    let mut ledger = Ledger::new();

    let mut channel_rng = streams.stream("channel");
    let mut scheduler_rng = streams.stream("scheduler");
    let mut mining_rng = streams.stream("mining");
    let mut training_rng = streams.stream("training");

    let initial_loss = objective.loss(&model, &union, &union_idx);
    let mut min_loss = initial_loss;
    let mut max_local_grad_norm: f64 = 0.0;
    let mut grad_sq_per_round = Vec::with_capacity(cfg.rounds);

    let mut metrics: Vec<RoundMetrics> = Vec::with_capacity(cfg.rounds);
    let mut delay_sum = 0.0;
    let mut active_energy = vec![0.0_f64; u];
    let mut active_rounds = vec![0usize; u];

    for t in 0..cfg.rounds {
        let channel = phys::draw_channel(&channel_params, &profiles, cfg.fading, &mut channel_rng);

        let decision = match cfg.scheduler {
            SchedulerKind::DrcBdfl => {
                let inputs = RoundInputs {
                    profiles: &profiles,
                    channel: &channel,
                    mining: &mining,
                    local_iters: cfg.local_iters,
                };
                drc_bdfl_round(&inputs, &scheduler_cfg, &mut queues, &mut freqs)
                    .map_err(|source| SimError::Round { round: t, source })?
            }
            kind => {
                let k = counts.map_or(cfg.min_clients, |c| c[t]);
                baseline_decision(
                    kind,
                    t,
                    k,
                    cfg,
                    &profiles,
                    &betas,
                    &channel,
                    &mining,
                    &mut queues,
                    &mut scheduler_rng,
                )
                .map_err(|source| SimError::Round { round: t, source })?
            }
        };

        // C1: the round topology must be connected.
        let graph = induced_topology(&decision.selected, u)?;
        let lambda2 = algebraic_connectivity(&graph)?;
        if u >= 2 && lambda2 <= CONNECTIVITY_TOL {
            return Err(SimError::Connectivity { round: t, lambda2 });
        }

        let d_bloc = match cfg.mining_mode {
            MiningMode::Deterministic => phys::mining_delay(&mining, &decision.mining_freq)?,
            MiningMode::Stochastic => {
                phys::sample_mining_delay(&mining, &decision.mining_freq, &mut mining_rng)?
            }
        };

        // Local training on the selected clients, then aggregation.
        let mut local_models: Vec<(ModelVector, usize)> =
            Vec::with_capacity(decision.selected.len());
        for &i in &decision.selected {
            let outcome = local_train(
                &objective,
                &model,
                &partition.clients[i],
                cfg.learning_rate,
                cfg.local_iters,
                cfg.batch_size,
                &mut training_rng,
            )
            .map_err(|source| SimError::Training {
                round: t,
                client: i,
                source,
            })?;
            for &g in &outcome.grad_norms {
                max_local_grad_norm = max_local_grad_norm.max(g);
            }
            local_models.push((outcome.model, partition.clients[i].len()));
        }
        let contributions: Vec<(&ModelVector, usize)> =
            local_models.iter().map(|(m, s)| (m, *s)).collect();
        model = aggregate(&contributions).map_err(|source| SimError::Training {
            round: t,
            client: usize::MAX,
            source,
        })?;

        // Mine the block that records the new global model.
        let mut selected_delays = Vec::with_capacity(decision.selected.len());
        for &i in &decision.selected {
            let p = &profiles[i];
            let d_up = phys::upload_delay(p, channel.uplink_rate[i]).map_err(|source| {
                SimError::Round {
                    round: t,
                    source: source.into(),
                }
            })?;
            let d_cp = phys::compute_delay(p, cfg.local_iters, decision.cpu_freq[i]).map_err(
                |source| SimError::Round {
                    round: t,
                    source: source.into(),
                },
            )?;
            selected_delays.push((d_up, d_cp));
        }
        let max_train_upload = selected_delays
            .iter()
            .map(|&(a, b)| a + b)
            .fold(f64::NEG_INFINITY, f64::max);
        let digest = model_digest(&model);
        mine_and_append(
            &mut ledger,
            RoundRecord {
                round: t,
                model: &model,
                claimed_digest: digest,
                selected: decision.selected.clone(),
                max_train_upload_delay: max_train_upload,
                mining_delay: d_bloc,
            },
            &decision.mining_freq,
            &mut mining_rng,
        )
        .map_err(|source| SimError::Ledger { round: t, source })?;

        // Evaluate the aggregated model.
        let loss = objective.loss(&model, &union, &union_idx);
        min_loss = min_loss.min(loss);
        let grad = objective.gradient(&model, &union, &union_idx);
        grad_sq_per_round.push(grad.iter().map(|g| g * g).sum::<f64>());
        let accuracy = objective.accuracy(&model, &test);

        // Assemble the round's metrics row.
        let round_delay = phys::round_delay(&selected_delays, d_bloc)?;
        delay_sum += round_delay;
        let mut clients_metrics = Vec::with_capacity(u);
        for i in 0..u {
            let p = &profiles[i];
            let e_bloc = phys::mining_energy(p, d_bloc, decision.mining_freq[i]);
            let (d_up, d_cp, e_up, e_cp) = if decision.selected.contains(&i) {
                (
                    phys::upload_delay(p, channel.uplink_rate[i])?,
                    phys::compute_delay(p, cfg.local_iters, decision.cpu_freq[i])?,
                    phys::upload_energy(p, channel.uplink_rate[i])?,
                    phys::compute_energy(p, cfg.local_iters, decision.cpu_freq[i])?,
                )
            } else {
                (0.0, 0.0, 0.0, 0.0)
            };
            if decision.selected.contains(&i) {
                active_energy[i] += e_up + e_cp + e_bloc;
                active_rounds[i] += 1;
            }
            clients_metrics.push(ClientRound {
                d_cp,
                d_up,
                e_cp,
                e_up,
                e_bloc,
                backlog: queues.backlog()[i],
                cpu_freq: decision.cpu_freq[i],
                mining_freq: decision.mining_freq[i],
            });
        }
        metrics.push(RoundMetrics {
            round: t,
            selected: decision.selected.clone(),
            clients: clients_metrics,
            d_bloc,
            round_delay,
            cum_avg_delay: delay_sum / (t + 1) as f64,
            cum_avg_active_energy: (0..u)
                .map(|i| {
                    if active_rounds[i] == 0 {
                        0.0
                    } else {
                        active_energy[i] / active_rounds[i] as f64
                    }
                })
                .collect(),
            loss,
            accuracy,
            inner_iters: decision.inner_iterations,
        });
    }

    Ok(SimOutput {
        metrics,
        ledger,
        betas,
        bound_stats: BoundStats {
            initial_loss,
            min_loss,
            max_local_grad_norm,
            grad_sq_per_round,
            smoothness: objective.smoothness_bound(&union),
        },
        partition_warnings: partition.warnings,
    })
}

/// One baseline round: pick by the rule, drop infeasible members, keep the
/// configured initial frequencies, and advance the queues.
#[allow(clippy::too_many_arguments)]
fn baseline_decision<R: Rng + ?Sized>(
    kind: SchedulerKind,
    round: usize,
    k: usize,
    cfg: &SimConfig,
    profiles: &[ClientProfile],
    betas: &[f64],
    channel: &ChannelRealization,
    mining: &MiningParams,
    queues: &mut QueueState,
    rng: &mut R,
) -> Result<RoundDecision, ScheduleError> {
    let u = profiles.len();
    let k = k.clamp(1, u);
    let picked = match kind {
        SchedulerKind::Random => baseline_random(rng, k, u)?,
        SchedulerKind::RoundRobin => baseline_round_robin(round, k, u)?,
        SchedulerKind::ChannelBest => baseline_channel_best(channel, k)?,
        SchedulerKind::DrcBdfl => unreachable!("handled by the optimizer path"),
    };

    let cpu_freq = vec![cfg.f_init; u];
    let mining_freq = vec![cfg.f_bloc_init; u];
    let d_bloc = phys::mining_delay(mining, &mining_freq)?;

    let selected: Vec<usize> = picked
        .into_iter()
        .filter(|&i| {
            let p = &profiles[i];
            channel.uplink_rate[i] > 0.0
                && phys::upload_energy(p, channel.uplink_rate[i]).is_ok_and(|e_up| {
                    let e_cp = phys::compute_energy(p, cfg.local_iters, cfg.f_init)
                        .unwrap_or(f64::INFINITY);
                    let e_bloc = phys::mining_energy(p, d_bloc, cfg.f_bloc_init);
                    e_up + e_cp + e_bloc <= p.energy_budget * (1.0 + 1e-9)
                })
        })
        .collect();
    if selected.is_empty() {
        return Err(ScheduleError::RoundInfeasible {
            feasible: 0,
            min: 1,
        });
    }

    let max_delay = selected
        .iter()
        .map(|&i| {
            let p = &profiles[i];
            phys::upload_delay(p, channel.uplink_rate[i]).unwrap_or(f64::INFINITY)
                + phys::compute_delay(p, cfg.local_iters, cfg.f_init).unwrap_or(f64::INFINITY)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let objective_value =
        selection_objective(queues, betas, &selected, max_delay + d_bloc, cfg.tradeoff_v);
    *queues = queue_update(queues, betas, &selected);

    Ok(RoundDecision {
        selected,
        cpu_freq,
        mining_freq,
        objective_value,
        inner_iterations: 0,
        converged: true,
    })
}

fn concat_datasets(
    clients: &[LabeledDataset],
    feature_dim: usize,
    num_classes: usize,
) -> LabeledDataset {
    let total: usize = clients.iter().map(|c| c.len()).sum();
    let mut features = Vec::with_capacity(total * feature_dim);
    let mut labels = Vec::with_capacity(total);
    for c in clients {
        features.extend_from_slice(&c.features);
        labels.extend_from_slice(&c.labels);
    }
    LabeledDataset {
        features,
        labels,
        feature_dim,
        num_classes,
        owner: None,
    }
}

/// One entry of a V-sweep.
#[derive(Debug, Clone)]
pub struct VSweepEntry {
    pub v: f64,
    /// Mean-over-clients queue backlog after each round.
    pub mean_backlog_per_round: Vec<f64>,
    pub output: SimOutput,
}

/// Runs the same seed once per V value and reports the backlog trajectories.
pub fn sweep_v(cfg: &SimConfig, v_values: &[f64]) -> Result<Vec<VSweepEntry>, SimError> {
    if v_values.is_empty() {
        return Err(SimError::EmptySweep);
    }
    let mut entries = Vec::with_capacity(v_values.len());
    for &v in v_values {
        let mut run_cfg = cfg.clone();
        run_cfg.tradeoff_v = v;
        let output = run_simulation(&run_cfg)?;
        let mean_backlog_per_round = output
            .metrics
            .iter()
            .map(|m| {
                m.clients.iter().map(|c| c.backlog).sum::<f64>() / m.clients.len().max(1) as f64
            })
            .collect();
        entries.push(VSweepEntry {
            v,
            mean_backlog_per_round,
            output,
        });
    }
    Ok(entries)
}

/// Per-seed results of one scheduler.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    /// Total delay accumulated over the run, Σ_t d(t).
    pub cum_delay: f64,
    pub final_loss: f64,
    pub final_accuracy: f64,
    /// Mean over clients of total energy spent across the run.
    pub mean_client_energy: f64,
}

/// Mean ± standard deviation summary of one scheduler across seeds.
#[derive(Debug, Clone)]
pub struct SchedulerSummary {
    pub scheduler: SchedulerKind,
    pub per_seed: Vec<SeedResult>,
    pub mean_cum_delay: f64,
    pub std_cum_delay: f64,
    pub mean_final_loss: f64,
    pub std_final_loss: f64,
    pub mean_final_accuracy: f64,
    pub std_final_accuracy: f64,
    pub mean_client_energy: f64,
    pub std_client_energy: f64,
}

/// Output of [`compare_baselines`].
#[derive(Debug, Clone)]
pub struct Comparison {
    pub reference: SchedulerSummary,
    pub baselines: Vec<SchedulerSummary>,
    /// The baseline with the smallest mean cumulative delay.
    pub best_baseline: SchedulerKind,
    /// Delay reduction of the reference over the best baseline, in percent.
    pub delay_reduction_pct: f64,
}

impl Comparison {
    /// Fixed-schema CSV of the summary table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scheduler,mean_cum_delay_s,std_cum_delay_s,mean_final_loss,std_final_loss,\
             mean_final_accuracy,std_final_accuracy,mean_client_energy_j,std_client_energy_j\n",
        );
        for s in std::iter::once(&self.reference).chain(&self.baselines) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.scheduler.name(),
                s.mean_cum_delay,
                s.std_cum_delay,
                s.mean_final_loss,
                s.std_final_loss,
                s.mean_final_accuracy,
                s.std_final_accuracy,
                s.mean_client_energy,
                s.std_client_energy,
            ));
        }
        out
    }
}

fn seed_result(seed: u64, output: &SimOutput) -> SeedResult {
    let cum_delay: f64 = output.metrics.iter().map(|m| m.round_delay).sum();
    let last = output.metrics.last();
    let u = output.betas.len().max(1) as f64;
    let total_energy: f64 = output
        .metrics
        .iter()
        .flat_map(|m| m.clients.iter().map(|c| c.total_energy()))
        .sum();
    SeedResult {
        seed,
        cum_delay,
        final_loss: last.map_or(0.0, |m| m.loss),
        final_accuracy: last.map_or(0.0, |m| m.accuracy),
        mean_client_energy: total_energy / u,
    }
}

fn summarize(scheduler: SchedulerKind, per_seed: Vec<SeedResult>) -> SchedulerSummary {
    fn mean_std(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return (mean, 0.0);
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }
    let (mean_cum_delay, std_cum_delay) =
        mean_std(&per_seed.iter().map(|r| r.cum_delay).collect::<Vec<_>>());
    let (mean_final_loss, std_final_loss) =
        mean_std(&per_seed.iter().map(|r| r.final_loss).collect::<Vec<_>>());
    let (mean_final_accuracy, std_final_accuracy) = mean_std(
        &per_seed
            .iter()
            .map(|r| r.final_accuracy)
            .collect::<Vec<_>>(),
    );
    let (mean_client_energy, std_client_energy) = mean_std(
        &per_seed
            .iter()
            .map(|r| r.mean_client_energy)
            .collect::<Vec<_>>(),
    );
    SchedulerSummary {
        scheduler,
        per_seed,
        mean_cum_delay,
        std_cum_delay,
        mean_final_loss,
        std_final_loss,
        mean_final_accuracy,
        std_final_accuracy,
        mean_client_energy,
        std_client_energy,
    }
}

/// Runs the optimizing scheduler on every seed, then replays each baseline
/// with the optimizer's per-round selection sizes, and summarizes delay,
/// loss, accuracy, and energy across seeds.
pub fn compare_baselines(cfg: &SimConfig, seeds: &[u64]) -> Result<Comparison, SimError> {
    if seeds.is_empty() {
        return Err(SimError::NoSeeds);
    }
    let baselines = [
        SchedulerKind::Random,
        SchedulerKind::RoundRobin,
        SchedulerKind::ChannelBest,
    ];

    let mut reference_results = Vec::with_capacity(seeds.len());
    let mut baseline_results: Vec<Vec<SeedResult>> = vec![Vec::new(); baselines.len()];
    for &seed in seeds {
        let mut ref_cfg = cfg.clone();
        ref_cfg.seed = seed;
        ref_cfg.scheduler = SchedulerKind::DrcBdfl;
        let reference = run_simulation(&ref_cfg)?;
        let counts: Vec<usize> = reference.metrics.iter().map(|m| m.selected.len()).collect();
        reference_results.push(seed_result(seed, &reference));

        for (slot, &kind) in baselines.iter().enumerate() {
            let mut base_cfg = cfg.clone();
            base_cfg.seed = seed;
            base_cfg.scheduler = kind;
            let output = run_with_counts(&base_cfg, Some(&counts))?;
            baseline_results[slot].push(seed_result(seed, &output));
        }
    }

    let reference = summarize(SchedulerKind::DrcBdfl, reference_results);
    let baselines: Vec<SchedulerSummary> = baselines
        .into_iter()
        .zip(baseline_results)
        .map(|(kind, results)| summarize(kind, results))
        .collect();
    let best = baselines
        .iter()
        .min_by(|a, b| a.mean_cum_delay.total_cmp(&b.mean_cum_delay))
        .expect("three baselines");
    let delay_reduction_pct =
        100.0 * (best.mean_cum_delay - reference.mean_cum_delay) / best.mean_cum_delay;
    Ok(Comparison {
        best_baseline: best.scheduler,
        delay_reduction_pct,
        reference,
        baselines,
    })
}
