use std::collections::{HashMap, HashSet};

use super::{ItemRecord, ItemState, RemovalReason, Timestamp};

/// Result of feeding one recognition or position decision into the store.
#[derive(Debug, Clone, PartialEq)]
pub enum Correlation {
    /// Duplicate recognition folded into an earlier one.
    Collapsed { item_id: u64 },
    /// Recognition with no position yet.
    Pending(ItemRecord),
    /// Position with no identity yet.
    Placeholder(ItemRecord),
    /// Identity and position joined.
    Completed(ItemRecord),
}

impl Correlation {
    pub fn record(&self) -> Option<&ItemRecord> {
        match self {
            Correlation::Collapsed { .. } => None,
            Correlation::Pending(r) | Correlation::Placeholder(r) | Correlation::Completed(r) => {
                Some(r)
            }
        }
    }
}

/// Item records for one fridge, joining asynchronous recognitions with
/// detected positions.
#[derive(Debug, Clone)]
pub struct ItemStore {
    records: Vec<ItemRecord>,
    // placeholders that outlived their matching window; they stay in place
    // but no longer take a name
    sealed: HashSet<u64>,
    last_success: HashMap<(u64, String), Timestamp>,
    dedup_timeout_ms: u64,
}

impl ItemStore {
    pub fn new(dedup_timeout_ms: u64) -> Self {
        Self {
            records: Vec::new(),
            sealed: HashSet::new(),
            last_success: HashMap::new(),
            dedup_timeout_ms,
        }
    }

    pub fn records(&self) -> &[ItemRecord] {
        &self.records
    }

    pub fn get(&self, item_id: u64) -> Option<&ItemRecord> {
        // ids are 1-based indices
        item_id
            .checked_sub(1)
            .and_then(|i| self.records.get(i as usize))
    }

    fn get_mut(&mut self, item_id: u64) -> Option<&mut ItemRecord> {
        item_id
            .checked_sub(1)
            .and_then(|i| self.records.get_mut(i as usize))
    }

    pub fn at_position(&self, position: usize) -> Option<&ItemRecord> {
        self.records
            .iter()
            .find(|r| r.is_live() && r.position == Some(position))
    }

    pub fn live(&self) -> impl Iterator<Item = &ItemRecord> {
        self.records.iter().filter(|r| r.is_live())
    }

    fn insert(&mut self, mut record: ItemRecord) -> ItemRecord {
        record.item_id = self.records.len() as u64 + 1;
        self.records.push(record.clone());
        record
    }

    /// A successful, canonicalized recognition for `activity_id`.
    pub fn recognized(&mut self, name: &str, activity_id: u64, at: Timestamp) -> Correlation {
        let key = (activity_id, name.to_string());
        if let Some(prev) = self.last_success.get(&key).copied() {
            if at.abs_diff(prev) <= self.dedup_timeout_ms {
                self.last_success.insert(key, at.max(prev));
                let item_id = self
                    .records
                    .iter()
                    .rev()
                    .find(|r| r.activity_id == activity_id && r.name.as_deref() == Some(name))
                    .map(|r| r.item_id)
                    .unwrap_or(0);
                return Correlation::Collapsed { item_id };
            }
        }
        self.last_success.insert(key, at);

        // position-first: fill an open placeholder from the same activity.
        // Older placeholders are left alone, otherwise a recognition that
        // arrives before its own door closes would take the name of an item
        // the previous activity failed to recognize.
        let placeholder = self
            .records
            .iter()
            .filter(|r| {
                r.state == ItemState::Placeholder
                    && r.activity_id == activity_id
                    && !self.sealed.contains(&r.item_id)
            })
            .min_by_key(|r| r.position)
            .map(|r| r.item_id);
        if let Some(item_id) = placeholder {
            let record = self.get_mut(item_id).expect("placeholder id is valid");
            record.name = Some(name.to_string());
            record.state = ItemState::Complete;
            return Correlation::Completed(record.clone());
        }

        Correlation::Pending(self.insert(ItemRecord {
            item_id: 0,
            name: Some(name.to_string()),
            position: None,
            state: ItemState::Pending,
            added_at: Some(at),
            removed_at: None,
            activity_id,
            removal_reason: None,
        }))
    }

    /// A detected add at `position`. Returns the correlation and, when the
    /// position was already taken, the record it displaced.
    pub fn position_added(
        &mut self,
        position: usize,
        activity_id: u64,
        at: Timestamp,
    ) -> (Correlation, Option<ItemRecord>) {
        let displaced = self.at_position(position).map(|r| r.item_id).map(|id| {
            let record = self.get_mut(id).expect("live record id is valid");
            record.state = ItemState::Removed;
            record.removed_at = Some(at);
            record.removal_reason = Some(RemovalReason::Displaced);
            record.clone()
        });

        // recognition-first: attach the most recent pending item
        let pending = self
            .records
            .iter()
            .filter(|r| r.state == ItemState::Pending && r.activity_id <= activity_id)
            .map(|r| r.item_id)
            .max();
        let correlation = match pending {
            Some(item_id) => {
                let record = self.get_mut(item_id).expect("pending id is valid");
                record.position = Some(position);
                record.state = ItemState::Complete;
                record.activity_id = activity_id;
                record.added_at = Some(at);
                Correlation::Completed(record.clone())
            }
            None => Correlation::Placeholder(self.insert(ItemRecord {
                item_id: 0,
                name: None,
                position: Some(position),
                state: ItemState::Placeholder,
                added_at: Some(at),
                removed_at: None,
                activity_id,
                removal_reason: None,
            })),
        };
        (correlation, displaced)
    }

    /// A detected removal at `position`.
    pub fn position_removed(&mut self, position: usize, at: Timestamp) -> Option<ItemRecord> {
        let item_id = self.at_position(position)?.item_id;
        let record = self.get_mut(item_id)?;
        record.state = ItemState::Removed;
        record.removed_at = Some(at);
        record.removal_reason = Some(RemovalReason::TakenOut);
        Some(record.clone())
    }

    /// Called when activity `closing` ends: pending records from earlier
    /// activities expire and placeholders from earlier activities stop
    /// accepting names. Returns the expired records.
    pub fn expire(&mut self, closing: u64, at: Timestamp) -> Vec<ItemRecord> {
        let mut expired = Vec::new();
        for record in &mut self.records {
            if record.activity_id >= closing {
                continue;
            }
            match record.state {
                ItemState::Pending => {
                    record.state = ItemState::Removed;
                    record.removed_at = Some(at);
                    record.removal_reason = Some(RemovalReason::Expired);
                    expired.push(record.clone());
                }
                ItemState::Placeholder => {
                    self.sealed.insert(record.item_id);
                }
                _ => {}
            }
        }
        self.last_success.retain(|(activity, _), _| *activity >= closing);
        expired
    }
}
