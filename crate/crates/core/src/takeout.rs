//! Take-out assistant: learns how long items stay in the fridge and when
//! they are usually taken out, then lights LEDs for overdue items (red) and
//! for items you normally take at this hour or that match a search (green).
//!
//! Everything here is a pure function of the remove history, the current
//! contents and the clock, so replaying the same history gives the same
//! answers.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{ItemRecord, LedColor, Timestamp};

const HOUR_MS: u64 = 3_600_000;

#[derive(Debug, Error, PartialEq)]
pub enum TakeoutError {
    #[error("invalid takeout config: {0}")]
    InvalidConfig(String),
    #[error("record {0} has no add time")]
    MissingAddTime(u64),
    #[error("record {0} has no name")]
    Unnamed(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeoutConfig {
    /// Flag an item once it has stayed `margin` times its mean dwell.
    pub margin: f64,
    /// Removals needed before an item is alerted or recommended.
    pub min_history: usize,
    /// Share of removals an hour bucket needs for a recommendation.
    pub min_share: f64,
}

impl Default for TakeoutConfig {
    fn default() -> Self {
        Self {
            margin: 1.5,
            min_history: 3,
            min_share: 0.5,
        }
    }
}

impl TakeoutConfig {
    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), TakeoutError> {
        if !(self.margin > 1.0) {
            return Err(TakeoutError::InvalidConfig("margin must be > 1".into()));
        }
        if !(self.min_share > 0.0 && self.min_share <= 1.0) {
            return Err(TakeoutError::InvalidConfig("min_share must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DwellStats {
    pub name: String,
    /// Add-to-remove durations in seconds, oldest first.
    pub dwells_s: Vec<f64>,
}

impl DwellStats {
    pub fn mean(&self) -> Option<f64> {
        if self.dwells_s.is_empty() {
            None
        } else {
            Some(self.dwells_s.iter().sum::<f64>() / self.dwells_s.len() as f64)
        }
    }
}

/// Removal counts per UTC hour of day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeOfDayProfile {
    pub name: String,
    pub buckets: [u32; 24],
}

impl TimeOfDayProfile {
    pub fn total(&self) -> u32 {
        self.buckets.iter().sum()
    }

    pub fn share(&self, hour: usize) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.buckets[hour % 24] as f64 / n as f64,
        }
    }
}

pub fn hour_of_day(t: Timestamp) -> usize {
    ((t / HOUR_MS) % 24) as usize
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemTags {
    pub name: String,
    pub tags: BTreeSet<String>,
}

impl ItemTags {
    pub fn new<I, S>(name: &str, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            name: name.to_string(),
            tags: tags
                .into_iter()
                .map(|t| t.as_ref().trim().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub position: usize,
    pub item: String,
    pub item_id: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Recommender {
    config: TakeoutConfig,
    dwell: BTreeMap<String, DwellStats>,
    profiles: BTreeMap<String, TimeOfDayProfile>,
    tags: BTreeMap<String, ItemTags>,
}

fn stocked(live: &[ItemRecord]) -> impl Iterator<Item = (usize, &str, &ItemRecord)> {
    live.iter().filter(|r| r.is_live()).filter_map(|r| {
        Some((r.position?, r.name.as_deref()?, r))
    })
}

impl Recommender {
    pub fn new(config: TakeoutConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    pub fn config(&self) -> &TakeoutConfig {
        &self.config
    }

    pub fn dwell(&self, name: &str) -> Option<&DwellStats> {
        self.dwell.get(name)
    }

    pub fn profile(&self, name: &str) -> Option<&TimeOfDayProfile> {
        self.profiles.get(name)
    }

    pub fn tags(&self, name: &str) -> Option<&ItemTags> {
        self.tags.get(name)
    }

    pub fn set_tags(&mut self, tags: ItemTags) -> &ItemTags {
        let name = tags.name.clone();
        self.tags.insert(name.clone(), tags);
        &self.tags[&name]
    }

    /// Learn from one removed record.
    pub fn on_remove(&mut self, record: &ItemRecord) -> Result<(), TakeoutError> {
        let name = record
            .name
            .clone()
            .ok_or(TakeoutError::Unnamed(record.item_id))?;
        let added = record
            .added_at
            .ok_or(TakeoutError::MissingAddTime(record.item_id))?;
        let removed = record.removed_at.unwrap_or(added);
        let dwell_s = removed.saturating_sub(added) as f64 / 1000.0;
        self.dwell
            .entry(name.clone())
            .or_insert_with(|| DwellStats {
                name: name.clone(),
                ..Default::default()
            })
            .dwells_s
            .push(dwell_s);
        self.profiles
            .entry(name.clone())
            .or_insert_with(|| TimeOfDayProfile {
                name,
                ..Default::default()
            })
            .buckets[hour_of_day(removed)] += 1;
        Ok(())
    }

    /// Feed a sequence of removed records, skipping unusable ones.
    pub fn learn<'a>(&mut self, removed: impl IntoIterator<Item = &'a ItemRecord>) {
        for record in removed {
            if let Err(e) = self.on_remove(record) {
                warn!("takeout: skipping removal: {e}");
            }
        }
    }

    pub fn expiry_threshold_s(&self, name: &str) -> Option<f64> {
        let stats = self.dwell.get(name)?;
        if stats.dwells_s.len() < self.config.min_history {
            return None;
        }
        stats.mean().map(|m| m * self.config.margin)
    }

    /// Items in stock that have overstayed `margin` times their mean dwell.
    pub fn expiry_alerts(&self, live: &[ItemRecord], now: Timestamp) -> Vec<Suggestion> {
        stocked(live)
            .filter_map(|(position, name, r)| {
                let threshold = self.expiry_threshold_s(name)?;
                let current = now.saturating_sub(r.added_at?) as f64 / 1000.0;
                (current > threshold).then(|| Suggestion {
                    position,
                    item: name.to_string(),
                    item_id: r.item_id,
                    reason: format!("in fridge {current:.0} s, usually {:.0} s", threshold / self.config.margin),
                })
            })
            .collect()
    }

    /// Items in stock usually taken out during the current hour.
    pub fn door_open_recommendations(&self, live: &[ItemRecord], now: Timestamp) -> Vec<Suggestion> {
        let hour = hour_of_day(now);
        stocked(live)
            .filter_map(|(position, name, r)| {
                let profile = self.profiles.get(name)?;
                if (profile.total() as usize) < self.config.min_history {
                    return None;
                }
                let share = profile.share(hour);
                (share >= self.config.min_share).then(|| Suggestion {
                    position,
                    item: name.to_string(),
                    item_id: r.item_id,
                    reason: format!("{:.0}% of take-outs happen around {hour:02}:00", share * 100.0),
                })
            })
            .collect()
    }

    /// Case-insensitive substring search over names and tags.
    pub fn search(&self, query: &str, live: &[ItemRecord]) -> Vec<Suggestion> {
        let q = query.trim().to_lowercase();
        if q.is_empty() {
            return Vec::new();
        }
        stocked(live)
            .filter_map(|(position, name, r)| {
                let reason = if name.to_lowercase().contains(&q) {
                    "name".to_string()
                } else {
                    let tag = self.tags.get(name)?.tags.iter().find(|t| t.contains(&q))?;
                    format!("tag {tag}")
                };
                Some(Suggestion {
                    position,
                    item: name.to_string(),
                    item_id: r.item_id,
                    reason,
                })
            })
            .collect()
    }
}

/// LED colors for `positions`; red wins over green on the same position.
pub fn led_plan(positions: usize, red: &[Suggestion], green: &[Suggestion]) -> Vec<LedColor> {
    let mut leds = vec![LedColor::Off; positions];
    for s in green {
        if let Some(l) = leds.get_mut(s.position) {
            *l = LedColor::Green;
        }
    }
    for s in red {
        if let Some(l) = leds.get_mut(s.position) {
            *l = LedColor::Red;
        }
    }
    leds
}
