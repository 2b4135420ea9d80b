use serde::{Deserialize, Serialize};

use super::store::{Correlation, ItemStore};
use super::window::{decide, Decision, PositionStats, ThresholdConfig};
use super::{
    ActivityPeriod, DetectionError, DetectionEvent, EventKind, ItemRecord, LedBank, LedColor,
    SensorReading, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub positions: usize,
    pub window: usize,
    pub thresholds: ThresholdConfig,
    pub dedup_timeout_ms: u64,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), DetectionError> {
        if self.positions == 0 {
            return Err(DetectionError::InvalidConfig("no positions".into()));
        }
        if self.window == 0 {
            return Err(DetectionError::InvalidConfig("window must be >= 1".into()));
        }
        self.thresholds.validate()
    }
}

/// Everything a fridge's engine consumes, in the order it arrives.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineInput {
    Reading(SensorReading),
    DoorOpen {
        at: Timestamp,
    },
    DoorClose {
        at: Timestamp,
    },
    /// A canonical item name. Without an activity id the most recent
    /// activity is assumed.
    Recognized {
        name: String,
        activity_id: Option<u64>,
        at: Timestamp,
    },
}

/// Immutable copy of engine state, safe to hand to other threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub occupied: Vec<bool>,
    pub leds: Vec<LedColor>,
    pub records: Vec<ItemRecord>,
    pub activity: Option<ActivityPeriod>,
}

/// Single-threaded detection engine for one fridge.
#[derive(Debug, Clone)]
pub struct DetectionEngine {
    config: EngineConfig,
    stats: Vec<PositionStats>,
    occupied: Vec<bool>,
    leds: LedBank,
    store: ItemStore,
    current: Option<ActivityPeriod>,
    last_activity_id: u64,
    next_seq: u64,
}

impl DetectionEngine {
    pub fn new(config: EngineConfig) -> Result<Self, DetectionError> {
        config.validate()?;
        Ok(Self {
            stats: (0..config.positions)
                .map(|_| PositionStats::new(config.window))
                .collect(),
            occupied: vec![false; config.positions],
            leds: LedBank::new(config.positions),
            store: ItemStore::new(config.dedup_timeout_ms),
            current: None,
            last_activity_id: 0,
            next_seq: 1,
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn handle(&mut self, input: EngineInput) -> Result<Vec<DetectionEvent>, DetectionError> {
        match input {
            EngineInput::Reading(reading) => {
                self.ingest_reading(reading)?;
                Ok(Vec::new())
            }
            EngineInput::DoorOpen { at } => self.open_activity(at),
            EngineInput::DoorClose { at } => self.close_activity(at),
            EngineInput::Recognized {
                name,
                activity_id,
                at,
            } => Ok(self.recognized(&name, activity_id, at)),
        }
    }

    /// Advance the window of one position. Returns the window mean if one
    /// was emitted for the open activity.
    pub fn ingest_reading(&mut self, reading: SensorReading) -> Result<Option<f64>, DetectionError> {
        let count = self.stats.len();
        let stats = self
            .stats
            .get_mut(reading.position)
            .ok_or(DetectionError::PositionOutOfRange {
                position: reading.position,
                count,
            })?;
        Ok(stats.push(reading.value.max(0.0)))
    }

    pub fn open_activity(&mut self, at: Timestamp) -> Result<Vec<DetectionEvent>, DetectionError> {
        if let Some(open) = self.current {
            return Err(DetectionError::AlreadyOpen(open.activity_id));
        }
        self.last_activity_id += 1;
        let activity_id = self.last_activity_id;
        self.current = Some(ActivityPeriod {
            activity_id,
            opened_at: at,
            closed_at: None,
        });
        for stats in &mut self.stats {
            stats.begin_activity();
        }
        Ok(vec![self.event(EventKind::DoorOpen, at).in_activity(activity_id)])
    }

    /// Run the action decision for every position and correlate the results.
    pub fn close_activity(&mut self, at: Timestamp) -> Result<Vec<DetectionEvent>, DetectionError> {
        let period = self.current.take().ok_or(DetectionError::NotOpen)?;
        let activity_id = period.activity_id;
        let mut events = vec![self.event(EventKind::DoorClose, at).in_activity(activity_id)];

        for position in 0..self.config.positions {
            let decision = decide(
                &self.stats[position],
                &self.config.thresholds,
                self.occupied[position],
            );
            match decision {
                Decision::Add => {
                    self.occupied[position] = true;
                    let (correlation, displaced) =
                        self.store.position_added(position, activity_id, at);
                    if let Some(old) = displaced {
                        let ev = self
                            .event(EventKind::Remove, at)
                            .at_position(position)
                            .in_activity(activity_id)
                            .with_item(old)
                            .with_message("displaced");
                        events.push(ev);
                    }
                    let record = correlation
                        .record()
                        .cloned()
                        .expect("position add always yields a record");
                    let ev = self
                        .event(EventKind::Add, at)
                        .at_position(position)
                        .in_activity(activity_id)
                        .with_item(record.clone());
                    events.push(ev);
                    if let Correlation::Completed(_) = correlation {
                        let ev = self
                            .event(EventKind::ItemComplete, at)
                            .at_position(position)
                            .in_activity(activity_id)
                            .with_item(record);
                        events.push(ev);
                    }
                }
                Decision::Remove => {
                    self.occupied[position] = false;
                    let record = self.store.position_removed(position, at);
                    let mut ev = self
                        .event(EventKind::Remove, at)
                        .at_position(position)
                        .in_activity(activity_id);
                    ev.item = record;
                    events.push(ev);
                }
                Decision::None => {}
            }
        }

        self.store.expire(activity_id, at);
        for stats in &mut self.stats {
            stats.end_activity();
        }
        Ok(events)
    }

    pub fn recognized(
        &mut self,
        name: &str,
        activity_id: Option<u64>,
        at: Timestamp,
    ) -> Vec<DetectionEvent> {
        let activity_id = activity_id.unwrap_or(self.last_activity_id);
        match self.store.recognized(name, activity_id, at) {
            Correlation::Completed(record) => {
                let mut ev = self
                    .event(EventKind::ItemComplete, at)
                    .in_activity(activity_id)
                    .with_item(record.clone());
                ev.position = record.position;
                vec![ev]
            }
            _ => Vec::new(),
        }
    }

    pub fn set_led(&mut self, position: usize, color: LedColor) -> Result<LedColor, DetectionError> {
        self.leds.set(position, color)
    }

    pub fn leds(&self) -> &LedBank {
        &self.leds
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    pub fn store(&self) -> &ItemStore {
        &self.store
    }

    pub fn stats(&self, position: usize) -> Option<&PositionStats> {
        self.stats.get(position)
    }

    pub fn current_activity(&self) -> Option<ActivityPeriod> {
        self.current
    }

    pub fn last_activity_id(&self) -> u64 {
        self.last_activity_id
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            occupied: self.occupied.clone(),
            leds: self.leds.colors().to_vec(),
            records: self.store.records().to_vec(),
            activity: self.current,
        }
    }

    fn event(&mut self, kind: EventKind, at: Timestamp) -> DetectionEvent {
        let mut ev = DetectionEvent::new(kind, at);
        ev.seq = self.next_seq;
        self.next_seq += 1;
        ev
    }
}
