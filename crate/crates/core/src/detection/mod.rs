//! Position and action detection.
//!
//! Raw proximity readings are smoothed by a per-position moving average,
//! summarised per activity period (door open to door close) as minimum,
//! maximum and last window mean, and turned into add/remove decisions when
//! the door closes. Decisions are then correlated with asynchronous
//! recognition results into [`ItemRecord`]s.

mod engine;
mod led;
mod store;
pub mod trace;
mod window;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{DetectionEngine, EngineConfig, EngineInput, EngineSnapshot};
pub use led::{LedBank, LedColor};
pub use store::{Correlation, ItemStore};
pub use window::{decide, Decision, PositionStats, ThresholdConfig};

/// Milliseconds on whatever clock drives the fridge (virtual in simulation).
pub type Timestamp = u64;

/// One analog proximity sample for one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub position: usize,
    pub value: f64,
    pub timestamp: Timestamp,
}

/// An interval framed by opening and closing the door.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityPeriod {
    pub activity_id: u64,
    pub opened_at: Timestamp,
    pub closed_at: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemState {
    /// Recognized, waiting for a position.
    Pending,
    /// Position detected, waiting for an identity.
    Placeholder,
    Complete,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    TakenOut,
    /// Superseded by a new add at the same position.
    Displaced,
    /// A pending record nobody claimed.
    Expired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: u64,
    pub name: Option<String>,
    pub position: Option<usize>,
    pub state: ItemState,
    pub added_at: Option<Timestamp>,
    pub removed_at: Option<Timestamp>,
    pub activity_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removal_reason: Option<RemovalReason>,
}

impl ItemRecord {
    pub fn is_live(&self) -> bool {
        self.state != ItemState::Removed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Add,
    Remove,
    DoorOpen,
    DoorClose,
    ItemComplete,
    Alert,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Add => "add",
            EventKind::Remove => "remove",
            EventKind::DoorOpen => "door_open",
            EventKind::DoorClose => "door_close",
            EventKind::ItemComplete => "item_complete",
            EventKind::Alert => "alert",
        }
    }
}

/// Something the engine (or an application) reports about a fridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    #[serde(default)]
    pub seq: u64,
    pub kind: EventKind,
    #[serde(default)]
    pub position: Option<usize>,
    #[serde(default)]
    pub item: Option<ItemRecord>,
    #[serde(default)]
    pub activity_id: Option<u64>,
    #[serde(default)]
    pub timestamp: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl DetectionEvent {
    pub fn new(kind: EventKind, timestamp: Timestamp) -> Self {
        Self {
            seq: 0,
            kind,
            position: None,
            item: None,
            activity_id: None,
            timestamp,
            message: None,
        }
    }

    pub fn at_position(mut self, position: usize) -> Self {
        self.position = Some(position);
        self
    }

    pub fn with_item(mut self, item: ItemRecord) -> Self {
        self.item = Some(item);
        self
    }

    pub fn in_activity(mut self, activity_id: u64) -> Self {
        self.activity_id = Some(activity_id);
        self
    }

    pub fn with_message(mut self, message: impl Into<String>) -> Self {
        self.message = Some(message.into());
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error("position {position} out of range (fridge has {count} positions)")]
    PositionOutOfRange { position: usize, count: usize },
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("door is already open (activity {0})")]
    AlreadyOpen(u64),
    #[error("door is not open")]
    NotOpen,
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
}
