//! Object recognition back end: a leased worker pool, a token frame cache,
//! a pluggable recognizer and regexp canonicalization of raw phrases.

mod cache;
mod canonical;
mod pipeline;
mod pool;
mod recognizer;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CachedFrame, FetchError, FrameCache};
pub use canonical::{canonicalize, parse_rules, Canonical, CanonicalRule, RuleError};
pub use pipeline::{PipelineError, RecognitionPipeline, RecognitionResult};
pub use pool::{Lease, LeasePool, PoolStats};
pub use recognizer::{
    RecognitionRequest, Recognizer, RecognizerOutcome, RecognizerReply, SimulatedRecognizer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitModel {
    PerFrame,
    PerPresentation,
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid recognizer config: {0}")]
pub struct RecognizerConfigError(String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizerConfig {
    pub pool_size: usize,
    pub latency_ms_min: u64,
    pub latency_ms_max: u64,
    pub p_hit: f64,
    pub confusion_prob: f64,
    pub strict_canonical: bool,
    pub hit_model: HitModel,
    pub cache_capacity: usize,
    pub cache_ttl_ms: u64,
    pub seed: u64,
}

impl RecognizerConfig {
    pub fn validate(&self) -> Result<(), RecognizerConfigError> {
        let bad = |m: &str| Err(RecognizerConfigError(m.to_string()));
        if self.pool_size == 0 {
            return bad("pool_size must be >= 1");
        }
        if self.latency_ms_min == 0 || self.latency_ms_min > self.latency_ms_max {
            return bad("latency bounds must be positive and ordered");
        }
        if !(0.0..=1.0).contains(&self.p_hit) || !(0.0..=1.0).contains(&self.confusion_prob) {
            return bad("p_hit and confusion_prob must lie in [0, 1]");
        }
        if self.cache_capacity == 0 {
            return bad("cache_capacity must be >= 1");
        }
        Ok(())
    }
}

impl RecognitionPipeline {
    /// Pipeline backed by the simulated recognizer.
    pub fn simulated(
        config: &RecognizerConfig,
        raw_phrases: HashMap<String, String>,
        rules: Vec<CanonicalRule>,
    ) -> Self {
        Self::new(
            config.pool_size,
            FrameCache::new(config.cache_capacity, config.cache_ttl_ms),
            Arc::new(SimulatedRecognizer::new(config, raw_phrases)),
            rules,
            config.strict_canonical,
        )
    }
}
