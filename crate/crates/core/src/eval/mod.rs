//! Scripted experiments against the simulated fridge, scored the way a
//! human experimenter would: every door activity is one step, compared to
//! the script's ground truth and timed against an uninstrumented baseline.

mod baselines;
mod bootstrap;
mod report;
mod robustness;
mod runner;
mod script;
pub mod stats;
mod truth;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baselines::{barcode_baseline, random_baseline};
pub use bootstrap::{bootstrap, overhead_curve, CurvePoint, SubsampleResult};
pub use report::{summarize, RunReport, Summary};
pub use robustness::{occlusion_trials, OcclusionTrial};
pub use runner::{run_experiment, ExperimentRun, RunOptions};
pub use script::generate_script;
pub use truth::{classify, metrics, ConfusionCounts, Metrics, TruthClass};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no steps to score")]
    NoSteps,
    #[error("need at least {needed} steps, have {have}")]
    TooFewSteps { needed: usize, have: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation failed at step {step}: {message}")]
    Sim { step: usize, message: String },
}

/// One scripted or predicted action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Add {
        item: String,
        position: usize,
    },
    /// `item` is what was (or is believed to be) at the position, if known.
    Remove {
        position: usize,
        item: Option<String>,
    },
    None,
}

impl Action {
    pub fn is_positive(&self) -> bool {
        !matches!(self, Action::None)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Action::Add { .. } => "add",
            Action::Remove { .. } => "remove",
            Action::None => "none",
        }
    }

    pub fn position(&self) -> Option<usize> {
        match self {
            Action::Add { position, .. } | Action::Remove { position, .. } => Some(*position),
            Action::None => None,
        }
    }

    pub fn item(&self) -> Option<&str> {
        match self {
            Action::Add { item, .. } => Some(item),
            Action::Remove { item, .. } => item.as_deref(),
            Action::None => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Add { item, position } if item.is_empty() => write!(f, "add(?,{position})"),
            Action::Add { item, position } => write!(f, "add({item},{position})"),
            Action::Remove {
                position,
                item: Some(item),
            } => write!(f, "remove({item},{position})"),
            Action::Remove { position, item: None } => write!(f, "remove(?,{position})"),
            Action::None => write!(f, "none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthStep {
    pub step_index: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStep {
    pub ground_truth: GroundTruthStep,
    pub predicted: Action,
    /// Positional decisions beyond the first in the same activity.
    pub extra_events: usize,
    pub truth: TruthClass,
    pub door_open_duration_s: f64,
    pub baseline_duration_s: f64,
}

impl ExperimentStep {
    pub fn overhead_s(&self) -> f64 {
        self.door_open_duration_s - self.baseline_duration_s
    }
}

/// Timing model of the person running the script. All ranges are uniform
/// and inclusive, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanConfig {
    /// Door open to hand at the shelf.
    pub reach_ms: [u64; 2],
    /// Item set down to door closed.
    pub add_finish_ms: [u64; 2],
    /// Item lifted to door closed.
    pub remove_finish_ms: [u64; 2],
    /// Whole open-close for a none step.
    pub none_ms: [u64; 2],
    /// Longest wait for recognition feedback before moving on.
    pub ack_give_up_ms: u64,
    /// Door closed between steps.
    pub inter_step_gap_ms: u64,
}

impl HumanConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, [lo, hi]) in [
            ("reach_ms", self.reach_ms),
            ("add_finish_ms", self.add_finish_ms),
            ("remove_finish_ms", self.remove_finish_ms),
            ("none_ms", self.none_ms),
        ] {
            if lo > hi {
                return Err(EvalError::Config(format!("{name}: {lo} > {hi}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn draw<R: Rng>(rng: &mut R, [lo, hi]: [u64; 2]) -> u64 {
    rng.gen_range(lo..=hi)
}

pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
