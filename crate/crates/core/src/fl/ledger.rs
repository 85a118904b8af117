//! Blockchain ledger stub.
//!
//! No hash puzzles are solved here: the mining race is resolved analytically
//! (the winner is drawn with probability proportional to mining frequency,
//! the race among exponential clocks) and the "proof" recorded per round is a
//! content digest of the aggregated model, chained block to block. Block
//! verification recomputes the digest from the model and rejects mismatches.

use super::{FlError, ModelVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One mined block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerBlock {
    pub round: usize,
    /// Client that won the mining race.
    pub miner: usize,
    /// Content digest of the aggregated global model.
    pub global_model_digest: String,
    /// Digest of the previous block; the genesis digest for the first block.
    pub prev_digest: String,
    /// Digest of this block's own content (chaining value for the next one).
    pub digest: String,
    pub selected: Vec<usize>,
    /// Slowest selected client's upload + compute delay.
    pub max_train_upload_delay: f64,
    pub mining_delay: f64,
}

/// What the round hands to the miner: the aggregated model, its claimed
/// digest, and the round's delay breakdown.
#[derive(Debug, Clone)]
pub struct RoundRecord<'a> {
    pub round: usize,
    pub model: &'a ModelVector,
    pub claimed_digest: String,
    pub selected: Vec<usize>,
    pub max_train_upload_delay: f64,
    pub mining_delay: f64,
}

/// Append-only chain of blocks starting from a fixed genesis digest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Ledger {
    blocks: Vec<LedgerBlock>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> &[LedgerBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn genesis_digest() -> String {
        fnv_hex(b"genesis")
    }

    fn tip_digest(&self) -> String {
        self.blocks
            .last()
            .map_or_else(Self::genesis_digest, |b| b.digest.clone())
    }

    /// Recomputes every chaining digest from genesis and checks it against
    /// the stored chain.
    pub fn verify_chain(&self) -> bool {
        let mut prev = Self::genesis_digest();
        for block in &self.blocks {
            if block.prev_digest != prev || block.digest != block_digest(block) {
                return false;
            }
            prev = block.digest.clone();
        }
        true
    }

    /// One JSON object per line, in chain order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            out.push_str(&serde_json::to_string(block).expect("block serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut blocks = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            blocks.push(serde_json::from_str(line)?);
        }
        Ok(Self { blocks })
    }
}

/// Content digest of a model: FNV-1a over the weights rendered at 12
/// significant digits, so the digest is stable across runs and tolerant of
/// trailing floating-point noise.
pub fn model_digest(model: &ModelVector) -> String {
    let mut rendered = String::with_capacity(model.dim() * 20);
    for w in &model.weights {
        rendered.push_str(&format!("{w:.11e};"));
    }
    fnv_hex(rendered.as_bytes())
}

fn block_digest(block: &LedgerBlock) -> String {
    let mut content = format!(
        "{}|{}|{}|{}|{:.12e}|{:.12e}|",
        block.round,
        block.miner,
        block.global_model_digest,
        block.prev_digest,
        block.max_train_upload_delay,
        block.mining_delay,
    );
    for s in &block.selected {
        content.push_str(&format!("{s},"));
    }
    fnv_hex(content.as_bytes())
}

fn fnv_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Resolves the mining race and appends the winning block.
///
/// The winner is drawn with probability `f_i^bloc / Σ_j f_j^bloc`, the win
/// probability of competing exponential clocks with rates proportional to
/// mining frequency. Before appending, the block is verified: the digest
/// recomputed from the aggregated model must equal the claimed digest.
pub fn mine_and_append<'l, R: Rng + ?Sized>(
    ledger: &'l mut Ledger,
    record: RoundRecord<'_>,
    mining_freqs: &[f64],
    rng: &mut R,
) -> Result<&'l LedgerBlock, FlError> {
    let total: f64 = mining_freqs.iter().sum();
    if total <= 0.0 || total.is_nan() {
        return Err(FlError::NoMiningPower);
    }
    let recomputed = model_digest(record.model);
    if recomputed != record.claimed_digest {
        return Err(FlError::BlockRejected {
            round: record.round,
            claimed: record.claimed_digest,
            recomputed,
        });
    }

    let mut pick = rng.gen_range(0.0..total);
    let mut miner = mining_freqs.len() - 1;
    for (i, &f) in mining_freqs.iter().enumerate() {
        if pick < f {
            miner = i;
            break;
        }
        pick -= f;
    }

    let mut block = LedgerBlock {
        round: record.round,
        miner,
        global_model_digest: recomputed,
        prev_digest: ledger.tip_digest(),
        digest: String::new(),
        selected: record.selected,
        max_train_upload_delay: record.max_train_upload_delay,
        mining_delay: record.mining_delay,
    };
    block.digest = block_digest(&block);
    ledger.blocks.push(block);
    Ok(ledger.blocks.last().expect("just pushed"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn record(round: usize, model: &ModelVector) -> RoundRecord<'_> {
        RoundRecord {
            round,
            model,
            claimed_digest: model_digest(model),
            selected: vec![0, 1],
            max_train_upload_delay: 1.0,
            mining_delay: 2.5e-13,
        }
    }

    #[test]
    fn single_client_always_wins() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mut ledger = Ledger::new();
        let model = ModelVector {
            weights: vec![1.0, 2.0],
        };
        for round in 0..20 {
            let block =
                mine_and_append(&mut ledger, record(round, &model), &[3.0e9], &mut rng).unwrap();
            assert_eq!(block.miner, 0);
        }
    }

    #[test]
    fn win_frequencies_follow_mining_power() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let model = ModelVector { weights: vec![0.5] };
        let mut wins = [0usize; 2];
        let rounds = 10_000;
        for round in 0..rounds {
            let mut ledger = Ledger::new();
            let block =
                mine_and_append(&mut ledger, record(round, &model), &[3.0, 1.0], &mut rng).unwrap();
            wins[block.miner] += 1;
        }
        let share = wins[0] as f64 / rounds as f64;
        assert!((share - 0.75).abs() < 0.02, "client 0 won {share}");
    }

    #[test]
    fn tampered_digest_is_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut ledger = Ledger::new();
        let model = ModelVector { weights: vec![1.0] };
        let mut rec = record(0, &model);
        rec.claimed_digest = "deadbeefdeadbeef".into();
        let err = mine_and_append(&mut ledger, rec, &[1.0], &mut rng).unwrap_err();
        assert!(matches!(err, FlError::BlockRejected { round: 0, .. }));
        assert!(ledger.is_empty());
    }

    #[test]
    fn chain_replays_from_genesis() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut ledger = Ledger::new();
        for round in 0..10 {
            let model = ModelVector {
                weights: vec![round as f64, -1.0],
            };
            mine_and_append(
                &mut ledger,
                record(round, &model),
                &[1.0, 2.0, 0.5],
                &mut rng,
            )
            .unwrap();
        }
        assert!(ledger.verify_chain());
        assert_eq!(ledger.blocks()[0].prev_digest, Ledger::genesis_digest());
        for pair in ledger.blocks().windows(2) {
            assert_eq!(pair[1].prev_digest, pair[0].digest);
        }

        // Round-trip through the line format.
        let text = ledger.to_jsonl();
        let back = Ledger::from_jsonl(&text).unwrap();
        assert_eq!(back.blocks(), ledger.blocks());
        assert!(back.verify_chain());

        // Any tampering breaks replay.
        let mut tampered = ledger.clone();
        tampered.blocks[4].miner = 99;
        assert!(!tampered.verify_chain());
    }

    #[test]
    fn digest_ignores_sub_12_digit_noise_but_sees_real_changes() {
        let a = ModelVector {
            weights: vec![0.1 + 1e-15, 1.0],
        };
        let b = ModelVector {
            weights: vec![0.1, 1.0],
        };
        assert_eq!(model_digest(&a), model_digest(&b));
        let c = ModelVector {
            weights: vec![0.1001, 1.0],
        };
        assert_ne!(model_digest(&a), model_digest(&c));
    }
}
