//! Synthetic non-IID client data.
//!
//! The global dataset is a C-class Gaussian mixture. Clients receive
//! fixed-size shares whose class proportions are drawn from a symmetric
//! Dirichlet; small concentration values give strongly skewed (non-IID) local
//! label distributions. Each client's long-term participation-rate target β_i
//! is then derived from how far its label distribution sits from the global
//! one.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dirichlet concentration must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("partition requests {requested} samples but the dataset has {available}")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error("class count mismatch: dataset has {dataset}, spec says {spec}")]
    ClassMismatch { dataset: usize, spec: usize },
    #[error("participation bounds must satisfy 0 < floor <= cap <= 1, got ({floor}, {cap})")]
    BadParticipationBounds { floor: f64, cap: f64 },
    #[error("at least one client dataset is required")]
    NoClients,
    #[error("client {client} has an empty dataset")]
    EmptyClient { client: usize },
}

/// A labeled feature matrix. Features are row-major, `len() × feature_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub feature_dim: usize,
    pub num_classes: usize,
    /// Owning client index; `None` for the global pool and test split.
    pub owner: Option<usize>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_row(&self, idx: usize) -> &[f64] {
        &self.features[idx * self.feature_dim..(idx + 1) * self.feature_dim]
    }

    /// Per-class sample counts, length `num_classes`.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// How the client shares are carved out of the global dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub num_classes: usize,
    /// Symmetric Dirichlet concentration; smaller means more skew.
    pub dirichlet_alpha: f64,
    pub samples_per_client: Vec<usize>,
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if !self.dirichlet_alpha.is_finite() || self.dirichlet_alpha <= 0.0 {
            return Err(DataError::BadAlpha(self.dirichlet_alpha));
        }
        Ok(())
    }
}

/// Result of a partition: one dataset per client plus any rebalance warnings.
///
/// When a warning fired, some samples were drawn with replacement and the
/// client shares are no longer disjoint.
#[derive(Debug, Clone)]
pub struct Partition {
    pub clients: Vec<LabeledDataset>,
    pub warnings: Vec<String>,
}

/// Parameters of the synthetic Gaussian mixture.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Expected norm of each class mean.
    pub mean_scale: f64,
    /// Isotropic noise standard deviation around the class mean.
    pub noise_std: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
}

/// Generates a train/test pair from the same mixture. Both splits have equal
/// per-class counts; the train split is ordered class-by-class, which the
/// partitioner reshuffles anyway.
pub fn generate_mixture<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    rng: &mut R,
) -> (LabeledDataset, LabeledDataset) {
    let c = spec.num_classes;
    let d = spec.feature_dim;
    let coord_std = spec.mean_scale / (d as f64).sqrt();
    let means: Vec<f64> = (0..c * d).map(|_| coord_std * sample_normal(rng)).collect();

    let mut make_split = |per_class: usize| {
        let mut features = Vec::with_capacity(per_class * c * d);
        let mut labels = Vec::with_capacity(per_class * c);
        for class in 0..c {
            for _ in 0..per_class {
                for k in 0..d {
                    features.push(means[class * d + k] + spec.noise_std * sample_normal(rng));
                }
                labels.push(class);
            }
        }
        LabeledDataset {
            features,
            labels,
            feature_dim: d,
            num_classes: c,
            owner: None,
        }
    };

    let train = make_split(spec.train_per_class);
    let test = make_split(spec.test_per_class);
    (train, test)
}

fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Splits the global dataset into per-client shares with Dirichlet-drawn
/// class proportions.
///
/// Each client's class mix is an independent draw from
/// `Dirichlet(alpha·1_C)`, turned into integer counts by largest-remainder
/// rounding. Samples are taken without replacement from per-class pools; if a
/// pool runs dry the shortfall is filled by sampling that class with
/// replacement and a warning is recorded.
pub fn partition_dirichlet<R: Rng + ?Sized>(
    global: &LabeledDataset,
    spec: &PartitionSpec,
    rng: &mut R,
) -> Result<Partition, DataError> {
    spec.validate()?;
    if spec.num_classes != global.num_classes {
        return Err(DataError::ClassMismatch {
            dataset: global.num_classes,
            spec: spec.num_classes,
        });
    }
    let requested: usize = spec.samples_per_client.iter().sum();
    if requested > global.len() {
        return Err(DataError::NotEnoughSamples {
            requested,
            available: global.len(),
        });
    }

    let c = spec.num_classes;
    // Per-class index pools, shuffled once so take-in-order is a uniform draw
    // without replacement.
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (idx, &y) in global.labels.iter().enumerate() {
        pools[y].push(idx);
    }
    let full_pools = pools.clone();
    for pool in &mut pools {
        pool.shuffle(rng);
    }

    // A one-class "mixture" is deterministic; the Dirichlet needs >= 2 parts.
    let dirichlet = if c >= 2 {
        Some(
            Dirichlet::new_with_size(spec.dirichlet_alpha, c)
                .map_err(|_| DataError::BadAlpha(spec.dirichlet_alpha))?,
        )
    } else {
        None
    };

    let mut warnings = Vec::new();
    let mut clients = Vec::with_capacity(spec.samples_per_client.len());
    for (client, &n_client) in spec.samples_per_client.iter().enumerate() {
        let proportions = dirichlet
            .as_ref()
            .map_or_else(|| vec![1.0], |d| d.sample(rng));
        let targets = largest_remainder_counts(&proportions, n_client);

        let mut indices = Vec::with_capacity(n_client);
        for (class, &want) in targets.iter().enumerate() {
            let available = pools[class].len().min(want);
            for _ in 0..available {
                indices.push(pools[class].pop().expect("available <= pool len"));
            }
            let short = want - available;
            if short > 0 {
                if full_pools[class].is_empty() {
                    // No sample of this class exists anywhere; shift the
                    // demand to whichever class still has stock.
                    warnings.push(format!(
                        "client {client}: class {class} absent from the global dataset; \
                         reassigned {short} samples"
                    ));
                    for _ in 0..short {
                        if let Some(donor) = pools.iter_mut().find(|p| !p.is_empty()) {
                            indices.push(donor.pop().unwrap());
                        }
                    }
                } else {
                    warnings.push(format!(
                        "client {client}: class {class} pool exhausted, drew {short} \
                         samples with replacement"
                    ));
                    for _ in 0..short {
                        let pick = full_pools[class][rng.gen_range(0..full_pools[class].len())];
                        indices.push(pick);
                    }
                }
            }
        }

        let mut features = Vec::with_capacity(indices.len() * global.feature_dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &idx in &indices {
            features.extend_from_slice(global.feature_row(idx));
            labels.push(global.labels[idx]);
        }
        clients.push(LabeledDataset {
            features,
            labels,
            feature_dim: global.feature_dim,
            num_classes: c,
            owner: Some(client),
        });
    }

    Ok(Partition { clients, warnings })
}

/// Integer counts summing to `total` that best match `proportions`.
fn largest_remainder_counts(proportions: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = Vec::with_capacity(proportions.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(proportions.len());
    let mut assigned = 0usize;
    for (class, &p) in proportions.iter().enumerate() {
        let exact = p * total as f64;
        let base = exact.floor() as usize;
        counts.push(base);
        assigned += base;
        remainders.push((class, exact - base as f64));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for k in 0..total.saturating_sub(assigned) {
        counts[remainders[k % remainders.len()].0] += 1;
    }
    counts
}

/// Derives per-client participation targets from label-distribution
/// divergence.
///
/// Each client's score is the accumulated absolute difference between its
/// label proportions and the global ones. Scores are min-max normalized into
/// `[floor, cap]`; by default a larger divergence maps to a lower rate, and
/// `inverted` flips the direction. When every score is identical there is
/// nothing to discriminate and all clients get `cap`.
pub fn derive_participation_rates(
    clients: &[LabeledDataset],
    global_label_counts: &[usize],
    floor: f64,
    cap: f64,
    inverted: bool,
) -> Result<Vec<f64>, DataError> {
    if clients.is_empty() {
        return Err(DataError::NoClients);
    }
    if !(floor > 0.0 && floor <= cap && cap <= 1.0) {
        return Err(DataError::BadParticipationBounds { floor, cap });
    }
    let global_total: usize = global_label_counts.iter().sum();
    if global_total == 0 {
        return Err(DataError::NotEnoughSamples {
            requested: 1,
            available: 0,
        });
    }

    let mut scores = Vec::with_capacity(clients.len());
    for (i, client) in clients.iter().enumerate() {
        if client.is_empty() {
            return Err(DataError::EmptyClient { client: i });
        }
        if client.num_classes != global_label_counts.len() {
            return Err(DataError::ClassMismatch {
                dataset: client.num_classes,
                spec: global_label_counts.len(),
            });
        }
        let counts = client.label_counts();
        let n = client.len() as f64;
        let score: f64 = counts
            .iter()
            .zip(global_label_counts)
            .map(|(&local, &global)| (local as f64 / n - global as f64 / global_total as f64).abs())
            .sum();
        scores.push(score);
    }

    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min < 1e-12 {
        return Ok(vec![cap; clients.len()]);
    }
    Ok(scores
        .iter()
        .map(|&s| {
            let beta = if inverted {
                floor + (cap - floor) * (s / max)
            } else {
                cap - (cap - floor) * (s / max)
            };
            beta.clamp(floor, cap)
        })
        .collect())
}

/// Renders the partition as CSV rows `client_id,sample_index,label` for
/// offline inspection. `sample_index` is the position within the client's
/// share.
pub fn partition_csv_string(clients: &[LabeledDataset]) -> String {
    let mut out = String::from("client_id,sample_index,label\n");
    for (client, data) in clients.iter().enumerate() {
        for (idx, &label) in data.labels.iter().enumerate() {
            let _ = writeln!(out, "{client},{idx},{label}");
        }
    }
    out
}

pub fn write_partition_csv(clients: &[LabeledDataset], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, partition_csv_string(clients))
}
