use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HitModel, RecognizerConfig};
use crate::sim::{frame_content, CameraFrame};

#[derive(Debug, Clone, Copy)]
pub struct RecognitionRequest<'a> {
    pub token: &'a str,
    pub frame: &'a CameraFrame,
    pub activity_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecognizerOutcome {
    /// Raw keyword phrase, before canonicalization.
    Hit(String),
    NoHit,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizerReply {
    pub latency_ms: u64,
    pub outcome: RecognizerOutcome,
}

/// Pluggable image recognizer. Implementations must be deterministic in
/// their inputs if runs are to be reproducible.
pub trait Recognizer: Send + Sync {
    fn recognize(&self, request: &RecognitionRequest<'_>) -> RecognizerReply;
}

// splitmix64 finalizer, used to derive independent per-draw seeds
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_str(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Stochastic stand-in for the external image search.
///
/// Latency is uniform in the configured range. A frame showing an item is a
/// hit with probability `p_hit`; under [`HitModel::PerPresentation`] all
/// frames of the same item in the same activity share one draw. A hit
/// names a different item with probability `confusion_prob`.
#[derive(Debug, Clone)]
pub struct SimulatedRecognizer {
    latency_ms: (u64, u64),
    p_hit: f64,
    confusion_prob: f64,
    hit_model: HitModel,
    seed: u64,
    raw_phrases: HashMap<String, String>,
    item_pool: Vec<String>,
}

impl SimulatedRecognizer {
    pub fn new(config: &RecognizerConfig, raw_phrases: HashMap<String, String>) -> Self {
        let mut item_pool: Vec<String> = raw_phrases.keys().cloned().collect();
        item_pool.sort();
        Self {
            latency_ms: (config.latency_ms_min, config.latency_ms_max),
            p_hit: config.p_hit,
            confusion_prob: config.confusion_prob,
            hit_model: config.hit_model,
            seed: config.seed,
            raw_phrases,
            item_pool,
        }
    }

    fn phrase(&self, name: &str) -> String {
        self.raw_phrases
            .get(name)
            .cloned()
            .unwrap_or_else(|| name.to_string())
    }
}

impl Recognizer for SimulatedRecognizer {
    fn recognize(&self, request: &RecognitionRequest<'_>) -> RecognizerReply {
        let frame = request.frame;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed ^ mix(frame.frame_id)));
        let latency_ms = rng.gen_range(self.latency_ms.0..=self.latency_ms.1);
        let Some(label) = frame_content(frame) else {
            return RecognizerReply {
                latency_ms,
                outcome: RecognizerOutcome::NoHit,
            };
        };
        let hit_draw: f64 = match self.hit_model {
            HitModel::PerFrame => rng.gen(),
            HitModel::PerPresentation => {
                let key = mix(self.seed ^ mix(request.activity_id ^ mix(hash_str(label))));
                ChaCha8Rng::seed_from_u64(key).gen()
            }
        };
        let outcome = if hit_draw < self.p_hit {
            let others: Vec<&String> = self.item_pool.iter().filter(|n| *n != label).collect();
            if !others.is_empty() && rng.gen::<f64>() < self.confusion_prob {
                RecognizerOutcome::Hit(self.phrase(others[rng.gen_range(0..others.len())]))
            } else {
                RecognizerOutcome::Hit(self.phrase(label))
            }
        } else {
            RecognizerOutcome::NoHit
        };
        RecognizerReply { latency_ms, outcome }
    }
}
