//! Wire types and the pure reducer that turns an event log into fridge
//! state.

use std::collections::BTreeMap;

use coldbench_core::detection::{
    DetectionEvent, EventKind, ItemRecord, ItemState, RemovalReason, Timestamp,
};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// One published event, as stored and as delivered to pollers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub fridge_id: String,
    pub seq: u64,
    pub kind: EventKind,
    #[serde(default)]
    pub position: Option<usize>,
    #[serde(default)]
    pub item: Option<ItemRecord>,
    #[serde(default)]
    pub activity_id: Option<u64>,
    /// When the event happened on the fridge's own clock.
    pub timestamp: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// When the service accepted it.
    pub emitted_at: Timestamp,
}

impl EventEnvelope {
    pub fn event(&self) -> DetectionEvent {
        DetectionEvent {
            seq: self.seq,
            kind: self.kind,
            position: self.position,
            item: self.item.clone(),
            activity_id: self.activity_id,
            timestamp: self.timestamp,
            message: self.message.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryAction {
    Add,
    Remove,
    /// A placeholder got its name.
    Complete,
}

/// An item-level entry of the history: the record as it was right after
/// the action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: u64,
    pub action: HistoryAction,
    pub timestamp: Timestamp,
    pub activity_id: Option<u64>,
    pub position: Option<usize>,
    pub item: ItemRecord,
}

impl HistoryEntry {
    pub fn from_envelope(env: &EventEnvelope) -> Option<Self> {
        let action = match env.kind {
            EventKind::Add => HistoryAction::Add,
            EventKind::Remove => HistoryAction::Remove,
            EventKind::ItemComplete => HistoryAction::Complete,
            _ => return None,
        };
        Some(Self {
            seq: env.seq,
            action,
            timestamp: env.timestamp,
            activity_id: env.activity_id,
            position: env.position,
            item: env.item.clone()?,
        })
    }
}

/// Item part of a client-posted event. Everything but the name may be left
/// out and is filled in from the fridge state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IncomingItem {
    #[serde(default)]
    pub item_id: Option<u64>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub state: Option<ItemState>,
    #[serde(default)]
    pub added_at: Option<Timestamp>,
    #[serde(default)]
    pub removed_at: Option<Timestamp>,
    #[serde(default)]
    pub activity_id: Option<u64>,
    #[serde(default)]
    pub removal_reason: Option<RemovalReason>,
}

impl From<ItemRecord> for IncomingItem {
    fn from(r: ItemRecord) -> Self {
        Self {
            item_id: Some(r.item_id),
            name: r.name,
            state: Some(r.state),
            added_at: r.added_at,
            removed_at: r.removed_at,
            activity_id: Some(r.activity_id),
            removal_reason: r.removal_reason,
        }
    }
}

/// Body of `POST /fridges/{id}/events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomingEvent {
    pub kind: EventKind,
    #[serde(default)]
    pub position: Option<usize>,
    #[serde(default)]
    pub item: Option<IncomingItem>,
    #[serde(default)]
    pub activity_id: Option<u64>,
    /// Defaults to the service clock.
    #[serde(default)]
    pub timestamp: Option<Timestamp>,
    #[serde(default)]
    pub message: Option<String>,
}

impl From<DetectionEvent> for IncomingEvent {
    fn from(e: DetectionEvent) -> Self {
        Self {
            kind: e.kind,
            position: e.position,
            item: e.item.map(IncomingItem::from),
            activity_id: e.activity_id,
            timestamp: Some(e.timestamp),
            message: e.message,
        }
    }
}

/// Current content of one fridge. Always equal to folding its event log
/// through [`FridgeState::apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct FridgeState {
    pub head_seq: u64,
    pub door_open: bool,
    positions: Vec<Option<u64>>,
    records: BTreeMap<u64, ItemRecord>,
}

/// JSON shape of `GET /fridges/{id}/state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub fridge_id: String,
    pub head_seq: u64,
    pub door_open: bool,
    /// One slot per position, `null` when empty.
    pub positions: Vec<Option<ItemRecord>>,
    /// Every record ever seen, by item id.
    pub items: Vec<ItemRecord>,
}

impl FridgeState {
    pub fn new(positions: usize) -> Self {
        Self {
            head_seq: 0,
            door_open: false,
            positions: vec![None; positions],
            records: BTreeMap::new(),
        }
    }

    pub fn position_count(&self) -> usize {
        self.positions.len()
    }

    pub fn at(&self, position: usize) -> Option<&ItemRecord> {
        let id = (*self.positions.get(position)?)?;
        self.records.get(&id)
    }

    pub fn record(&self, item_id: u64) -> Option<&ItemRecord> {
        self.records.get(&item_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &ItemRecord> {
        self.records.values()
    }

    /// Records currently sitting at a position.
    pub fn stocked(&self) -> Vec<ItemRecord> {
        (0..self.positions.len())
            .filter_map(|p| self.at(p).cloned())
            .collect()
    }

    pub fn view(&self, fridge_id: &str) -> StateView {
        StateView {
            fridge_id: fridge_id.to_string(),
            head_seq: self.head_seq,
            door_open: self.door_open,
            positions: (0..self.positions.len()).map(|p| self.at(p).cloned()).collect(),
            items: self.records.values().cloned().collect(),
        }
    }

    fn check_position(&self, position: Option<usize>) -> Result<usize, ServiceError> {
        let position =
            position.ok_or_else(|| ServiceError::InvalidEvent("position is required".into()))?;
        if position >= self.positions.len() {
            return Err(ServiceError::PositionOutOfRange {
                position,
                count: self.positions.len(),
            });
        }
        Ok(position)
    }

    fn next_item_id(&self) -> u64 {
        self.records.keys().next_back().map_or(1, |id| id + 1)
    }

    /// Validate a client event against the current state and fill in what
    /// it left out. The result is what gets logged.
    pub fn normalize(&self, incoming: IncomingEvent, now: Timestamp) -> Result<DetectionEvent, ServiceError> {
        let timestamp = incoming.timestamp.unwrap_or(now);
        let mut event = DetectionEvent::new(incoming.kind, timestamp);
        event.activity_id = incoming.activity_id;
        event.message = incoming.message;
        match incoming.kind {
            EventKind::Add => {
                let position = self.check_position(incoming.position)?;
                let given = incoming.item.unwrap_or_default();
                let state = given.state.unwrap_or(if given.name.is_some() {
                    ItemState::Complete
                } else {
                    ItemState::Placeholder
                });
                if matches!(state, ItemState::Removed | ItemState::Pending) {
                    return Err(ServiceError::InvalidEvent(format!(
                        "an added item cannot be {state:?}"
                    )));
                }
                event.position = Some(position);
                event.item = Some(ItemRecord {
                    item_id: given.item_id.unwrap_or_else(|| self.next_item_id()),
                    name: given.name,
                    position: Some(position),
                    state,
                    added_at: Some(given.added_at.unwrap_or(timestamp)),
                    removed_at: None,
                    activity_id: given.activity_id.or(event.activity_id).unwrap_or(0),
                    removal_reason: None,
                });
            }
            EventKind::Remove => {
                let position = self.check_position(incoming.position)?;
                let base = match incoming.item {
                    Some(given) => {
                        let known = given.item_id.and_then(|id| self.records.get(&id));
                        match known.or_else(|| self.at(position)) {
                            Some(r) => merge(r.clone(), given),
                            None => ItemRecord {
                                item_id: given.item_id.unwrap_or_else(|| self.next_item_id()),
                                name: given.name,
                                position: Some(position),
                                state: ItemState::Removed,
                                added_at: given.added_at,
                                removed_at: given.removed_at,
                                activity_id: given.activity_id.unwrap_or(0),
                                removal_reason: given.removal_reason,
                            },
                        }
                    }
                    None => self
                        .at(position)
                        .cloned()
                        .ok_or(ServiceError::PositionEmpty(position))?,
                };
                event.position = Some(position);
                event.item = Some(ItemRecord {
                    position: Some(position),
                    state: ItemState::Removed,
                    removed_at: Some(base.removed_at.unwrap_or(timestamp)),
                    removal_reason: Some(base.removal_reason.unwrap_or(RemovalReason::TakenOut)),
                    ..base
                });
            }
            EventKind::ItemComplete => {
                let given = incoming
                    .item
                    .ok_or_else(|| ServiceError::InvalidEvent("item is required".into()))?;
                let id = given
                    .item_id
                    .ok_or_else(|| ServiceError::InvalidEvent("item.item_id is required".into()))?;
                if given.name.is_none() {
                    return Err(ServiceError::InvalidEvent("item.name is required".into()));
                }
                let record = match self.records.get(&id) {
                    Some(r) => merge(r.clone(), given),
                    None => {
                        let position = self.check_position(incoming.position)?;
                        ItemRecord {
                            item_id: id,
                            name: given.name,
                            position: Some(position),
                            state: ItemState::Complete,
                            added_at: Some(given.added_at.unwrap_or(timestamp)),
                            removed_at: None,
                            activity_id: given.activity_id.unwrap_or(0),
                            removal_reason: None,
                        }
                    }
                };
                if let Some(p) = record.position {
                    self.check_position(Some(p))?;
                }
                event.position = record.position;
                event.item = Some(ItemRecord {
                    state: if record.is_live() { ItemState::Complete } else { record.state },
                    ..record
                });
            }
            EventKind::DoorOpen | EventKind::DoorClose | EventKind::Alert => {
                if let Some(p) = incoming.position {
                    self.check_position(Some(p))?;
                }
                event.position = incoming.position;
            }
        }
        Ok(event)
    }

    /// Apply one logged envelope. Returns the record if this envelope took
    /// an item out of the fridge.
    pub fn apply(&mut self, env: &EventEnvelope) -> Option<ItemRecord> {
        self.head_seq = env.seq;
        let mut taken_out = None;
        match env.kind {
            EventKind::DoorOpen => self.door_open = true,
            EventKind::DoorClose => self.door_open = false,
            EventKind::Add => {
                if let (Some(p), Some(item)) = (env.position, &env.item) {
                    if let Some(old) = self.positions[p].filter(|&old| old != item.item_id) {
                        if let Some(r) = self.records.get_mut(&old).filter(|r| r.is_live()) {
                            r.state = ItemState::Removed;
                            r.removed_at = Some(env.timestamp);
                            r.removal_reason = Some(RemovalReason::Displaced);
                        }
                    }
                    self.records.insert(item.item_id, item.clone());
                    self.positions[p] = Some(item.item_id);
                }
            }
            EventKind::Remove => {
                if let Some(item) = &env.item {
                    self.records.insert(item.item_id, item.clone());
                    if let Some(p) = env.position {
                        if self.positions[p] == Some(item.item_id) {
                            self.positions[p] = None;
                        }
                    }
                    if matches!(item.removal_reason, None | Some(RemovalReason::TakenOut)) {
                        taken_out = Some(item.clone());
                    }
                }
            }
            EventKind::ItemComplete => {
                if let Some(item) = &env.item {
                    self.records.insert(item.item_id, item.clone());
                    if let (true, Some(p)) = (item.is_live(), item.position) {
                        self.positions[p] = Some(item.item_id);
                    }
                }
            }
            EventKind::Alert => {}
        }
        taken_out
    }
}

fn merge(mut base: ItemRecord, given: IncomingItem) -> ItemRecord {
    if given.name.is_some() {
        base.name = given.name;
    }
    if let Some(s) = given.state {
        base.state = s;
    }
    if given.added_at.is_some() {
        base.added_at = given.added_at;
    }
    if given.removed_at.is_some() {
        base.removed_at = given.removed_at;
    }
    if given.removal_reason.is_some() {
        base.removal_reason = given.removal_reason;
    }
    base
}
