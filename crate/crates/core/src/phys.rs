//! Closed-form delay and energy models for the three per-round activities:
//! local computation, uplink transmission, and proof-of-work mining.
//!
//! All quantities are SI: seconds, joules, hertz, watts, bits.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhysError {
    #[error("{param} must be positive, got {value}")]
    NonPositive { param: &'static str, value: f64 },
    #[error("local iteration count must be at least 1")]
    ZeroIterations,
    #[error("client {client} has no usable uplink this round (rate {rate} bit/s)")]
    Unschedulable { client: usize, rate: f64 },
    #[error("total mining frequency must be positive")]
    NoMiningPower,
    #[error("round delay needs a non-empty selection")]
    EmptySelection,
}

/// Static per-client parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientProfile {
    pub id: usize,
    /// Number of local samples |D_i|.
    pub dataset_size: usize,
    /// CPU cycles per sample for one forward-backward pass (φ_i).
    pub cycles_per_sample: f64,
    /// Effective switched capacitance coefficient (χ_i), J·s²/cycle³.
    pub switched_capacitance: f64,
    /// Model size in bits (m_i).
    pub model_bits: f64,
    /// Distance to the access point in meters (d_i).
    pub distance: f64,
    /// Transmit power in watts (P_i).
    pub tx_power: f64,
    /// Per-round energy budget in joules (E_i^max).
    pub energy_budget: f64,
    /// Target long-term participation rate β_i in (0, 1].
    pub participation_rate: f64,
}

impl ClientProfile {
    pub fn validate(&self) -> Result<(), PhysError> {
        if self.dataset_size == 0 {
            return Err(PhysError::NonPositive {
                param: "dataset_size",
                value: 0.0,
            });
        }
        for (param, value) in [
            ("cycles_per_sample", self.cycles_per_sample),
            ("switched_capacitance", self.switched_capacitance),
            ("model_bits", self.model_bits),
            ("distance", self.distance),
            ("tx_power", self.tx_power),
            ("energy_budget", self.energy_budget),
            ("participation_rate", self.participation_rate),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(PhysError::NonPositive { param, value });
            }
        }
        if self.participation_rate > 1.0 {
            return Err(PhysError::NonPositive {
                param: "participation_rate (must be <= 1)",
                value: self.participation_rate,
            });
        }
        Ok(())
    }
}

/// Uplink channel parameters shared by all clients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelParams {
    /// System bandwidth B in Hz.
    pub bandwidth: f64,
    /// Noise power spectral density N0 in W/Hz.
    pub noise_psd: f64,
    /// Path loss constant h0 at the reference distance.
    pub path_loss_const: f64,
    /// Reference distance d0 in meters.
    pub ref_distance: f64,
    /// Path loss exponent v.
    pub path_loss_exponent: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), PhysError> {
        for (param, value) in [
            ("bandwidth", self.bandwidth),
            ("noise_psd", self.noise_psd),
            ("path_loss_const", self.path_loss_const),
            ("ref_distance", self.ref_distance),
            ("path_loss_exponent", self.path_loss_exponent),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(PhysError::NonPositive { param, value });
            }
        }
        Ok(())
    }
}

/// Small-scale fading model for the per-round channel draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingModel {
    /// Unit-mean exponential power gain (Rayleigh amplitude fading).
    Rayleigh,
    /// ρ_i = 1 for everyone; useful for deterministic checks.
    Disabled,
}

/// One round's stochastic channel state and the uplink rates it implies.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Small-scale power gains ρ_i ≥ 0.
    pub small_scale_gain: Vec<f64>,
    /// Channel power gains h_i = h0 · ρ_i · (d0/d_i)^v.
    pub channel_gain: Vec<f64>,
    /// Uplink rates R_i = B·log2(1 + P_i·h_i / (B·N0)) in bit/s.
    pub uplink_rate: Vec<f64>,
}

/// Draws per-client fading and derives channel gains and uplink rates.
pub fn draw_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    profiles: &[ClientProfile],
    fading: FadingModel,
    rng: &mut R,
) -> ChannelRealization {
    let exp = Exp::new(1.0).expect("unit-rate exponential");
    let mut small_scale_gain = Vec::with_capacity(profiles.len());
    let mut channel_gain = Vec::with_capacity(profiles.len());
    let mut uplink_rate = Vec::with_capacity(profiles.len());
    for p in profiles {
        let rho = match fading {
            FadingModel::Rayleigh => exp.sample(rng),
            FadingModel::Disabled => 1.0,
        };
        let h = params.path_loss_const
            * rho
            * (params.ref_distance / p.distance).powf(params.path_loss_exponent);
        let snr = p.tx_power * h / (params.bandwidth * params.noise_psd);
        let rate = params.bandwidth * (1.0 + snr).log2();
        small_scale_gain.push(rho);
        channel_gain.push(h);
        uplink_rate.push(rate);
    }
    ChannelRealization {
        small_scale_gain,
        channel_gain,
        uplink_rate,
    }
}

/// Local training latency: φ_i · H · |D_i| / f_i.
pub fn compute_delay(p: &ClientProfile, local_iters: u32, cpu_freq: f64) -> Result<f64, PhysError> {
    if local_iters == 0 {
        return Err(PhysError::ZeroIterations);
    }
    if cpu_freq <= 0.0 || cpu_freq.is_nan() {
        return Err(PhysError::NonPositive {
            param: "cpu_freq",
            value: cpu_freq,
        });
    }
    Ok(p.cycles_per_sample * f64::from(local_iters) * p.dataset_size as f64 / cpu_freq)
}

/// Local training energy: χ_i · φ_i · H · |D_i| · f_i² / 2.
pub fn compute_energy(
    p: &ClientProfile,
    local_iters: u32,
    cpu_freq: f64,
) -> Result<f64, PhysError> {
    if cpu_freq <= 0.0 || cpu_freq.is_nan() {
        return Err(PhysError::NonPositive {
            param: "cpu_freq",
            value: cpu_freq,
        });
    }
    Ok(p.switched_capacitance
        * p.cycles_per_sample
        * f64::from(local_iters)
        * p.dataset_size as f64
        * cpu_freq
        * cpu_freq
        / 2.0)
}

/// Uplink transmission delay: m_i / R_i.
///
/// A non-positive rate means the client cannot be scheduled this round; the
/// caller must exclude it.
pub fn upload_delay(p: &ClientProfile, rate: f64) -> Result<f64, PhysError> {
    if rate <= 0.0 || rate.is_nan() {
        return Err(PhysError::Unschedulable { client: p.id, rate });
    }
    Ok(p.model_bits / rate)
}

/// Uplink transmission energy: P_i · (m_i / R_i).
pub fn upload_energy(p: &ClientProfile, rate: f64) -> Result<f64, PhysError> {
    Ok(p.tx_power * upload_delay(p, rate)?)
}

/// Proof-of-work parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiningParams {
    /// Block generation difficulty α in cycles.
    pub difficulty: f64,
    /// Quantile probability p0 in (0, 1) pinning the deterministic delay.
    pub quantile_prob: f64,
}

impl MiningParams {
    pub fn validate(&self) -> Result<(), PhysError> {
        if !self.difficulty.is_finite() || self.difficulty <= 0.0 {
            return Err(PhysError::NonPositive {
                param: "difficulty",
                value: self.difficulty,
            });
        }
        if !(self.quantile_prob > 0.0 && self.quantile_prob < 1.0) {
            return Err(PhysError::NonPositive {
                param: "quantile_prob (must be in (0,1))",
                value: self.quantile_prob,
            });
        }
        Ok(())
    }

    /// Mean mining time θ = α / Σ f_i^bloc.
    pub fn expected_delay(&self, total_mining_freq: f64) -> f64 {
        self.difficulty / total_mining_freq
    }
}

/// Deterministic (quantile) mining delay: -α·ln(1 - p0) / Σ f_i^bloc.
///
/// The sum ranges over every client in the system: all clients mine.
pub fn mining_delay(mp: &MiningParams, mining_freqs: &[f64]) -> Result<f64, PhysError> {
    let total: f64 = mining_freqs.iter().sum();
    if total <= 0.0 || total.is_nan() {
        return Err(PhysError::NoMiningPower);
    }
    // ln_1p keeps full precision for the tiny p0 values in use.
    Ok(-mp.difficulty * (-mp.quantile_prob).ln_1p() / total)
}

/// Stochastic mining delay: one draw from Exponential(mean α / Σ f_i^bloc).
pub fn sample_mining_delay<R: Rng + ?Sized>(
    mp: &MiningParams,
    mining_freqs: &[f64],
    rng: &mut R,
) -> Result<f64, PhysError> {
    let total: f64 = mining_freqs.iter().sum();
    if total <= 0.0 || total.is_nan() {
        return Err(PhysError::NoMiningPower);
    }
    let theta = mp.expected_delay(total);
    let exp = Exp::new(1.0 / theta).expect("positive rate");
    Ok(exp.sample(rng))
}

/// Mining energy for one client: χ_i · d_bloc · (f_i^bloc)³ / 2.
pub fn mining_energy(p: &ClientProfile, d_bloc: f64, f_bloc: f64) -> f64 {
    p.switched_capacitance * d_bloc * f_bloc.powi(3) / 2.0
}

/// Round delay: max over selected clients of (upload + compute delay), plus
/// the mining delay.
pub fn round_delay(selected_delays: &[(f64, f64)], d_bloc: f64) -> Result<f64, PhysError> {
    if selected_delays.is_empty() {
        return Err(PhysError::EmptySelection);
    }
    let slowest = selected_delays
        .iter()
        .map(|&(d_up, d_cp)| d_up + d_cp)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(slowest + d_bloc)
}

/// Per-client round energy: upload + compute + mining.
///
/// Unselected clients contribute zero upload and compute energy but still pay
/// the mining term, since every client mines.
pub fn round_energy(e_up: f64, e_cp: f64, e_bloc: f64) -> f64 {
    e_up + e_cp + e_bloc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn table_profile() -> ClientProfile {
        ClientProfile {
            id: 0,
            dataset_size: 3_000,
            cycles_per_sample: 5e3,
            switched_capacitance: 1e-28,
            model_bits: 1e6,
            distance: 200.0,
            tx_power: 0.1,
            energy_budget: 0.4,
            participation_rate: 0.5,
        }
    }

    fn table_channel() -> ChannelParams {
        ChannelParams {
            bandwidth: 180e3,
            noise_psd: 1e-16,
            path_loss_const: 1e-3,
            ref_distance: 1.0,
            path_loss_exponent: 2.0,
        }
    }

    #[test]
    fn compute_delay_matches_hand_value() {
        let p = table_profile();
        let d = compute_delay(&p, 20, 1e9).unwrap();
        assert!((d - 0.3).abs() < 1e-12, "got {d}");
        // Doubling the frequency halves the delay.
        assert!((compute_delay(&p, 20, 2e9).unwrap() - 0.15).abs() < 1e-12);
        assert!(matches!(
            compute_delay(&p, 0, 1e9),
            Err(PhysError::ZeroIterations)
        ));
        assert!(matches!(
            compute_delay(&p, 20, 0.0),
            Err(PhysError::NonPositive { .. })
        ));
    }

    #[test]
    fn compute_delay_times_freq_recovers_cycle_count() {
        let p = table_profile();
        for f in [3.7e8, 1e9, 4.63e9] {
            let d = compute_delay(&p, 20, f).unwrap();
            let cycles = p.cycles_per_sample * 20.0 * p.dataset_size as f64;
            assert!((d * f - cycles).abs() <= cycles * f64::EPSILON);
        }
    }

    #[test]
    fn compute_energy_matches_hand_value() {
        let p = table_profile();
        let e = compute_energy(&p, 20, 1e9).unwrap();
        assert!((e - 0.015).abs() < 1e-15, "got {e}");
        // Quadratic in frequency.
        let e2 = compute_energy(&p, 20, 2e9).unwrap();
        assert!((e2 / e - 4.0).abs() < 1e-12);
        assert!(compute_energy(&p, 20, 0.0).is_err());
    }

    #[test]
    fn channel_without_fading_matches_hand_value() {
        let params = table_channel();
        let profiles = vec![table_profile()];
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let ch = draw_channel(&params, &profiles, FadingModel::Disabled, &mut rng);
        assert!((ch.channel_gain[0] - 2.5e-8).abs() < 1e-20);
        let snr: f64 = 0.1 * 2.5e-8 / (180e3 * 1e-16);
        assert!((snr - 138.888).abs() < 1e-2);
        assert!(
            (ch.uplink_rate[0] - 1.283e6).abs() / 1.283e6 < 1e-3,
            "R = {}",
            ch.uplink_rate[0]
        );
    }

    #[test]
    fn zero_fading_means_zero_rate() {
        let p = table_profile();
        let params = table_channel();
        let h = 0.0;
        let rate = params.bandwidth
            * (1.0 + p.tx_power * h / (params.bandwidth * params.noise_psd)).log2();
        assert_eq!(rate, 0.0);
        assert!(matches!(
            upload_delay(&p, rate),
            Err(PhysError::Unschedulable { .. })
        ));
    }

    #[test]
    fn fading_has_unit_mean() {
        let params = table_channel();
        let profiles = vec![table_profile()];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let ch = draw_channel(&params, &profiles, FadingModel::Rayleigh, &mut rng);
            sum += ch.small_scale_gain[0];
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean fading gain {mean}");
    }

    #[test]
    fn upload_delay_and_energy_examples() {
        let p = table_profile();
        let d = upload_delay(&p, 1.283e6).unwrap();
        assert!((d - 0.7794).abs() < 1e-3, "got {d}");
        let e = upload_energy(&p, 1.283e6).unwrap();
        assert!((e - 0.07794).abs() < 1e-4, "got {e}");

        let mut zero_bits = table_profile();
        zero_bits.model_bits = 0.0;
        assert_eq!(upload_delay(&zero_bits, 1e6).unwrap(), 0.0);
        assert_eq!(upload_energy(&zero_bits, 1e6).unwrap(), 0.0);

        // Delay vanishes as the rate grows.
        assert!(upload_delay(&p, 1e18).unwrap() < 1e-11);
        assert!(upload_delay(&p, 0.0).is_err());
        assert!(upload_energy(&p, -1.0).is_err());
    }

    #[test]
    fn mining_delay_quantile_matches_hand_value() {
        let mp = MiningParams {
            difficulty: 3e7,
            quantile_prob: 1e-10,
        };
        let freqs = vec![1.5e9; 8];
        let d = mining_delay(&mp, &freqs).unwrap();
        assert!((d - 2.5e-13).abs() / 2.5e-13 < 1e-6, "got {d}");
        // Doubling total mining frequency halves the delay.
        let d2 = mining_delay(&mp, &[3.0e9; 8]).unwrap();
        assert!((d / d2 - 2.0).abs() < 1e-12);
        assert!(matches!(
            mining_delay(&mp, &[0.0, 0.0]),
            Err(PhysError::NoMiningPower)
        ));
    }

    #[test]
    fn stochastic_mining_mean_matches_theta() {
        let mp = MiningParams {
            difficulty: 3e7,
            quantile_prob: 1e-10,
        };
        let freqs = vec![1.5e9; 8];
        let theta = mp.expected_delay(freqs.iter().sum());
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_mining_delay(&mp, &freqs, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(
            (mean - theta).abs() / theta < 0.02,
            "mean {mean} vs θ {theta}"
        );
    }

    /// Empirical CDF of sampled mining delays against 1 - exp(-d/θ).
    #[test]
    fn stochastic_mining_kolmogorov_smirnov() {
        let mp = MiningParams {
            difficulty: 3e7,
            quantile_prob: 1e-10,
        };
        let freqs = vec![1.5e9; 8];
        let theta = mp.expected_delay(freqs.iter().sum());
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let n = 100_000;
        let mut samples: Vec<f64> = (0..n)
            .map(|_| sample_mining_delay(&mp, &freqs, &mut rng).unwrap())
            .collect();
        samples.sort_by(f64::total_cmp);
        let mut ks = 0.0_f64;
        for (k, d) in samples.iter().enumerate() {
            let model = 1.0 - (-d / theta).exp();
            let lo = k as f64 / n as f64;
            let hi = (k + 1) as f64 / n as f64;
            ks = ks.max((model - lo).abs()).max((model - hi).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn mining_energy_examples() {
        let p = table_profile();
        assert_eq!(mining_energy(&p, 2.5e-13, 0.0), 0.0);
        let e = mining_energy(&p, 2.5e-13, 1.5e9);
        assert!((e - 4.22e-14).abs() / 4.22e-14 < 1e-2, "got {e}");
        // Cubic in mining frequency.
        let e2 = mining_energy(&p, 2.5e-13, 3.0e9);
        assert!((e2 / e - 8.0).abs() < 1e-12);
    }

    #[test]
    fn round_delay_and_energy_examples() {
        let d = round_delay(&[(0.4, 0.6), (1.5, 0.5)], 0.1).unwrap();
        assert!((d - 2.1).abs() < 1e-12);
        let single = round_delay(&[(0.4, 0.6)], 0.1).unwrap();
        assert!((single - 1.1).abs() < 1e-12);
        assert!(matches!(
            round_delay(&[], 0.1),
            Err(PhysError::EmptySelection)
        ));

        let e = round_energy(0.078, 0.015, 4e-14);
        assert!((e - 0.093).abs() < 1e-9);
        assert_eq!(round_energy(0.0, 0.0, 0.0), 0.0);
    }

    proptest! {
        #[test]
        fn round_delay_is_permutation_invariant_and_monotone(
            mut delays in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..10),
            d_bloc in 0.0f64..5.0,
            bump in 0.0f64..3.0,
        ) {
            let base = round_delay(&delays, d_bloc).unwrap();
            let mut reversed = delays.clone();
            reversed.reverse();
            prop_assert_eq!(base, round_delay(&reversed, d_bloc).unwrap());
            // Monotone in every component and in d_bloc.
            delays[0].0 += bump;
            prop_assert!(round_delay(&delays, d_bloc).unwrap() >= base);
            prop_assert!(round_delay(&delays, d_bloc + bump).unwrap() >= base);
        }

        #[test]
        fn delays_and_energies_are_nonneg_finite(
            f in 1e6f64..1e11,
            rate in 1.0f64..1e9,
            h in 1u32..50,
        ) {
            let p = table_profile();
            let d_cp = compute_delay(&p, h, f).unwrap();
            let e_cp = compute_energy(&p, h, f).unwrap();
            let d_up = upload_delay(&p, rate).unwrap();
            let e_up = upload_energy(&p, rate).unwrap();
            for v in [d_cp, e_cp, d_up, e_up] {
                prop_assert!(v.is_finite() && v >= 0.0);
            }
        }
    }
}
