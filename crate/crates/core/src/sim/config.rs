//! Simulation configuration.
//!
//! One flat document of explicit keys; every field has a compiled-in default
//! so an empty config runs the reference setup. Unknown keys are a hard
//! error.

use crate::phys::FadingModel;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which scheduler drives client selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    DrcBdfl,
    Random,
    RoundRobin,
    ChannelBest,
}

impl SchedulerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::DrcBdfl => "drc_bdfl",
            SchedulerKind::Random => "random",
            SchedulerKind::RoundRobin => "round_robin",
            SchedulerKind::ChannelBest => "channel_best",
        }
    }
}

/// Whether mining time is the deterministic quantile or an exponential draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningMode {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Number of clients U.
    pub clients: usize,
    /// Communication rounds T.
    pub rounds: usize,
    /// Minimum training-set size m.
    pub min_clients: usize,
    /// Drift-plus-penalty delay weight V.
    pub tradeoff_v: f64,
    /// Per-round energy budget E^max in joules.
    pub energy_budget: f64,
    /// Uplink bandwidth B in Hz.
    pub bandwidth: f64,
    /// Noise power spectral density N0 in W/Hz.
    pub noise_psd: f64,
    /// Path loss constant h0.
    pub path_loss_const: f64,
    /// Path loss reference distance d0 in meters.
    pub ref_distance: f64,
    /// Client distance to the access point in meters.
    pub distance: f64,
    /// Path loss exponent.
    pub path_loss_exponent: f64,
    /// Uplink transmit power in watts.
    pub tx_power: f64,
    /// CPU cycles per sample φ.
    pub cycles_per_sample: f64,
    /// Effective switched capacitance χ.
    pub switched_capacitance: f64,
    /// Model size in bits.
    pub model_bits: f64,
    /// Local samples per client |D_i|.
    pub dataset_size: usize,
    /// Local SGD iterations per round H.
    pub local_iters: u32,
    /// Learning rate η.
    pub learning_rate: f64,
    /// Mini-batch size; 0 means full batch.
    pub batch_size: usize,
    /// Mining difficulty α in cycles.
    pub mining_difficulty: f64,
    /// Mining quantile probability p0.
    pub mining_quantile_prob: f64,
    /// Initial CPU frequency in Hz.
    pub f_init: f64,
    /// Initial mining frequency in Hz.
    pub f_bloc_init: f64,
    /// Frequency clamp lower bound in Hz.
    pub freq_min: f64,
    /// Frequency clamp upper bound in Hz.
    pub freq_max: f64,
    /// Dirichlet concentration for the non-IID partition.
    pub dirichlet_alpha: f64,
    /// Participation-rate floor β_min.
    pub beta_min: f64,
    /// Participation-rate cap β_max.
    pub beta_max: f64,
    /// Map larger label divergence to higher (instead of lower) β.
    pub beta_inverted: bool,
    /// Mixture classes C.
    pub num_classes: usize,
    /// Feature dimension d.
    pub feature_dim: usize,
    /// Expected norm of each class mean.
    pub mixture_mean_scale: f64,
    /// Noise standard deviation around class means.
    pub mixture_noise_std: f64,
    /// L2 penalty of the logistic learner.
    pub l2_penalty: f64,
    /// Held-out fraction for the test split.
    pub test_fraction: f64,
    /// Inner alternating-loop iteration cap.
    pub inner_max_iters: usize,
    /// Inner-loop relative frequency tolerance.
    pub inner_tolerance: f64,
    pub scheduler: SchedulerKind,
    pub mining_mode: MiningMode,
    pub fading: FadingModel,
    /// Master seed; split into independent named streams.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            clients: 8,
            rounds: 100,
            min_clients: 3,
            tradeoff_v: 10.0,
            energy_budget: 0.4,
            bandwidth: 180e3,
            noise_psd: 1e-16,
            path_loss_const: 1e-3,
            ref_distance: 1.0,
            distance: 200.0,
            path_loss_exponent: 2.0,
            tx_power: 0.1,
            cycles_per_sample: 5e3,
            switched_capacitance: 1e-28,
            model_bits: 1e6,
            dataset_size: 3_000,
            local_iters: 20,
            learning_rate: 0.01,
            batch_size: 64,
            mining_difficulty: 3e7,
            mining_quantile_prob: 1e-10,
            f_init: 1e9,
            f_bloc_init: 1.5e9,
            freq_min: 1e8,
            freq_max: 5e9,
            dirichlet_alpha: 0.5,
            beta_min: 0.3,
            beta_max: 0.9,
            beta_inverted: false,
            num_classes: 4,
            feature_dim: 16,
            mixture_mean_scale: 3.0,
            mixture_noise_std: 1.0,
            l2_penalty: 1e-3,
            test_fraction: 0.2,
            inner_max_iters: 50,
            inner_tolerance: 1e-6,
            scheduler: SchedulerKind::DrcBdfl,
            mining_mode: MiningMode::Deterministic,
            fading: FadingModel::Rayleigh,
            seed: 1,
        }
    }
}

impl SimConfig {
    /// Parses a TOML document. Unknown keys fail loudly to catch typos.
    pub fn from_toml_str(text: &str) -> Result<Self, super::SimError> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| super::SimError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, super::SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| super::SimError::ConfigParse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), super::SimError> {
        let bad = |msg: String| Err(super::SimError::Config(msg));
        if self.clients == 0 {
            return bad("clients must be at least 1".into());
        }
        if self.min_clients == 0 || self.min_clients > self.clients {
            return bad(format!(
                "min_clients {} outside 1..={}",
                self.min_clients, self.clients
            ));
        }
        if self.local_iters == 0 {
            return bad("local_iters must be at least 1".into());
        }
        if self.dataset_size == 0 {
            return bad("dataset_size must be at least 1".into());
        }
        if self.num_classes == 0 || self.feature_dim == 0 {
            return bad("num_classes and feature_dim must be at least 1".into());
        }
        for (name, v) in [
            ("tradeoff_v", self.tradeoff_v),
            ("learning_rate", self.learning_rate),
            ("test_fraction", self.test_fraction),
        ] {
            if v < 0.0 || !v.is_finite() {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.test_fraction >= 1.0 {
            return bad(format!(
                "test_fraction {} must be below 1",
                self.test_fraction
            ));
        }
        for (name, v) in [
            ("energy_budget", self.energy_budget),
            ("bandwidth", self.bandwidth),
            ("noise_psd", self.noise_psd),
            ("path_loss_const", self.path_loss_const),
            ("ref_distance", self.ref_distance),
            ("distance", self.distance),
            ("path_loss_exponent", self.path_loss_exponent),
            ("tx_power", self.tx_power),
            ("cycles_per_sample", self.cycles_per_sample),
            ("switched_capacitance", self.switched_capacitance),
            ("model_bits", self.model_bits),
            ("mining_difficulty", self.mining_difficulty),
            ("f_init", self.f_init),
            ("f_bloc_init", self.f_bloc_init),
            ("freq_min", self.freq_min),
            ("dirichlet_alpha", self.dirichlet_alpha),
            ("mixture_mean_scale", self.mixture_mean_scale),
            ("mixture_noise_std", self.mixture_noise_std),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.freq_max < self.freq_min {
            return bad(format!(
                "freq_max {} below freq_min {}",
                self.freq_max, self.freq_min
            ));
        }
        if !(self.mining_quantile_prob > 0.0 && self.mining_quantile_prob < 1.0) {
            return bad(format!(
                "mining_quantile_prob {} outside (0, 1)",
                self.mining_quantile_prob
            ));
        }
        if !(self.beta_min > 0.0 && self.beta_min <= self.beta_max && self.beta_max <= 1.0) {
            return bad(format!(
                "participation bounds ({}, {}) must satisfy 0 < min <= max <= 1",
                self.beta_min, self.beta_max
            ));
        }
        if self.l2_penalty < 0.0 {
            return bad(format!(
                "l2_penalty {} must be non-negative",
                self.l2_penalty
            ));
        }
        if self.inner_max_iters == 0 {
            return bad("inner_max_iters must be at least 1".into());
        }
        Ok(())
    }
}
