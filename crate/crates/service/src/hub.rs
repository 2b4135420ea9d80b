//! Registry of fridges. Each fridge is an independent unit: its own log,
//! its own state snapshot and its own notification channel; nothing is
//! shared between fridges except the map that finds them.

use std::collections::HashMap;
use std::fs::File;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use coldbench_core::detection::{EventKind, LedColor, Timestamp};
use coldbench_core::rig::Rig;
use coldbench_core::sim::parse_script;
use coldbench_core::takeout::{led_plan, ItemTags, Recommender, Suggestion, TakeoutConfig};
use coldbench_core::TestbedConfig;
use log::{info, warn};
use tokio::sync::watch;

use crate::clock::Clock;
use crate::error::ServiceError;
use crate::model::{EventEnvelope, FridgeState, HistoryEntry, IncomingEvent};
use crate::persist::{append_line, LogStore};

pub const DEFAULT_POLL_TIMEOUT_MS: u64 = 30_000;
pub const MAX_POLL_TIMEOUT_MS: u64 = 120_000;

#[derive(Debug, Clone)]
pub struct HubConfig {
    pub positions: usize,
    pub takeout: TakeoutConfig,
    /// Where event logs live; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    /// Testbed configuration for simulated fridges; `None` disables the
    /// sim command endpoint.
    pub sim: Option<TestbedConfig>,
}

impl Default for HubConfig {
    fn default() -> Self {
        Self {
            positions: 4,
            takeout: TakeoutConfig::default(),
            data_dir: None,
            sim: None,
        }
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

#[derive(Debug)]
struct FridgeInner {
    log: Vec<Arc<EventEnvelope>>,
    state: Arc<FridgeState>,
    recommender: Recommender,
    /// Search matches lit until the door next closes.
    highlight: Vec<Suggestion>,
    file: Option<File>,
}

pub struct Fridge {
    id: String,
    clock: Arc<dyn Clock>,
    store: Option<LogStore>,
    inner: Mutex<FridgeInner>,
    head: watch::Sender<u64>,
    sim: Mutex<Option<Rig>>,
}

impl std::fmt::Debug for Fridge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fridge")
            .field("id", &self.id)
            .field("head", &*self.head.borrow())
            .finish_non_exhaustive()
    }
}

/// Result of a batch of sim commands.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub applied: usize,
    pub events: Vec<Arc<EventEnvelope>>,
    pub now: Timestamp,
    /// Set if a command failed; commands before it stay applied.
    pub error: Option<String>,
}

impl Fridge {
    fn new(
        id: String,
        positions: usize,
        takeout: &TakeoutConfig,
        clock: Arc<dyn Clock>,
        store: Option<LogStore>,
        file: Option<File>,
    ) -> Self {
        let (head, _) = watch::channel(0);
        Self {
            id,
            clock,
            store,
            inner: Mutex::new(FridgeInner {
                log: Vec::new(),
                state: Arc::new(FridgeState::new(positions)),
                recommender: Recommender::new(takeout.clone()),
                highlight: Vec::new(),
                file,
            }),
            head,
            sim: Mutex::new(None),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn head_seq(&self) -> u64 {
        *self.head.borrow()
    }

    /// Append without writing to disk; used when rebuilding from the log.
    fn replay(&self, env: EventEnvelope) {
        let mut inner = lock(&self.inner);
        Self::fold_in(&mut inner, &env);
        inner.log.push(Arc::new(env));
        self.head.send_replace(inner.log.len() as u64);
    }

    fn fold_in(inner: &mut FridgeInner, env: &EventEnvelope) {
        let state = Arc::make_mut(&mut inner.state);
        if let Some(record) = state.apply(env) {
            inner.recommender.learn([&record]);
        }
        if env.kind == EventKind::DoorClose {
            inner.highlight.clear();
        }
    }

    /// Validate, log, fold and announce one event. Writes to one fridge
    /// are serialized here; pollers are woken after the lock is gone.
    pub fn publish(&self, incoming: IncomingEvent) -> Result<Arc<EventEnvelope>, ServiceError> {
        let emitted_at = self.clock.now_ms();
        let mut inner = lock(&self.inner);
        let event = inner.state.normalize(incoming, emitted_at)?;
        let env = EventEnvelope {
            fridge_id: self.id.clone(),
            seq: inner.log.len() as u64 + 1,
            kind: event.kind,
            position: event.position,
            item: event.item,
            activity_id: event.activity_id,
            timestamp: event.timestamp,
            message: event.message,
            emitted_at,
        };
        if let Some(file) = inner.file.as_mut() {
            append_line(file, &env)?;
        }
        Self::fold_in(&mut inner, &env);
        let env = Arc::new(env);
        inner.log.push(env.clone());
        let seq = env.seq;
        drop(inner);
        // concurrent publishers may get here out of order
        self.head.send_modify(|head| *head = (*head).max(seq));
        Ok(env)
    }

    /// Immutable snapshot of the current state.
    pub fn state(&self) -> Arc<FridgeState> {
        lock(&self.inner).state.clone()
    }

    /// Envelopes with seq greater than `cursor`.
    pub fn since(&self, cursor: u64) -> Vec<Arc<EventEnvelope>> {
        let inner = lock(&self.inner);
        let from = (cursor as usize).min(inner.log.len());
        inner.log[from..].to_vec()
    }

    pub fn history(&self, since: Option<Timestamp>, item: Option<&str>) -> Vec<HistoryEntry> {
        let (log, state) = {
            let inner = lock(&self.inner);
            (inner.log.clone(), inner.state.clone())
        };
        log.iter()
            .filter_map(|env| HistoryEntry::from_envelope(env))
            .filter(|h| since.is_none_or(|t| h.timestamp >= t))
            .filter(|h| {
                item.is_none_or(|name| {
                    // a placeholder add counts once the item got its name
                    h.item.name.as_deref() == Some(name)
                        || state
                            .record(h.item.item_id)
                            .and_then(|r| r.name.as_deref())
                            == Some(name)
                })
            })
            .collect()
    }

    /// Wait until something newer than `cursor` exists or `timeout`
    /// passes. Holds no lock while waiting.
    pub async fn poll(&self, cursor: u64, timeout: Duration) -> Vec<Arc<EventEnvelope>> {
        let mut rx = self.head.subscribe();
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            if *rx.borrow_and_update() > cursor {
                return self.since(cursor);
            }
            match tokio::time::timeout_at(deadline, rx.changed()).await {
                Ok(Ok(())) => continue,
                _ => return Vec::new(),
            }
        }
    }

    /// "Now" for alerts: the sim's virtual clock when simulated, otherwise
    /// the service clock.
    pub fn now(&self) -> Timestamp {
        match lock(&self.sim).as_ref() {
            Some(rig) => rig.now(),
            None => self.clock.now_ms(),
        }
    }

    pub fn alerts(&self, now: Timestamp) -> Vec<Suggestion> {
        let inner = lock(&self.inner);
        inner.recommender.expiry_alerts(&inner.state.stocked(), now)
    }

    /// Take-out suggestions; only while the door is open.
    pub fn recommendations(&self, now: Timestamp) -> Vec<Suggestion> {
        let inner = lock(&self.inner);
        if !inner.state.door_open {
            return Vec::new();
        }
        inner.recommender.door_open_recommendations(&inner.state.stocked(), now)
    }

    /// Search names and tags and light the matches.
    pub fn search(&self, query: &str) -> Vec<Suggestion> {
        let mut inner = lock(&self.inner);
        let matches = inner.recommender.search(query, &inner.state.stocked());
        inner.highlight = matches.clone();
        matches
    }

    pub fn set_tags(&self, name: &str, tags: Vec<String>) -> Result<ItemTags, ServiceError> {
        let tags = ItemTags::new(name, tags);
        let mut inner = lock(&self.inner);
        if let Some(store) = &self.store {
            store.append_tags(&self.id, &tags)?;
        }
        Ok(inner.recommender.set_tags(tags).clone())
    }

    pub fn tags(&self, name: &str) -> Option<ItemTags> {
        lock(&self.inner).recommender.tags(name).cloned()
    }

    /// Red for overdue items, green for suggestions and search hits.
    pub fn leds(&self, now: Timestamp) -> Vec<LedColor> {
        let red = self.alerts(now);
        let mut green = self.recommendations(now);
        let inner = lock(&self.inner);
        green.extend(inner.highlight.iter().cloned());
        led_plan(inner.state.position_count(), &red, &green)
    }

    /// Run script commands against this fridge's simulator, publishing
    /// every detection event they produce.
    pub fn sim_commands(&self, config: &TestbedConfig, script: &str) -> Result<SimOutcome, ServiceError> {
        let commands = parse_script(script).map_err(|e| ServiceError::SimCommand(e.to_string()))?;
        let mut sim = lock(&self.sim);
        if sim.is_none() {
            *sim = Some(Rig::from_config(config).map_err(|e| ServiceError::Config(e.to_string()))?);
        }
        let rig = sim.as_mut().expect("just created");
        let mut outcome = SimOutcome {
            applied: 0,
            events: Vec::new(),
            now: rig.now(),
            error: None,
        };
        for (i, command) in commands.iter().enumerate() {
            let result = rig.apply(command);
            // publish whatever happened before a failure too
            let events = match result {
                Ok(events) => events,
                Err(e) => {
                    outcome.error = Some(format!("step {} ({command}): {e}", i + 1));
                    break;
                }
            };
            for event in events {
                outcome.events.push(self.publish(event.into())?);
            }
            outcome.applied += 1;
        }
        outcome.now = rig.now();
        Ok(outcome)
    }

    /// Let simulated time catch up with wall time.
    pub fn sim_tick(&self, ms: u64) -> Result<Vec<Arc<EventEnvelope>>, ServiceError> {
        let mut sim = lock(&self.sim);
        let Some(rig) = sim.as_mut() else {
            return Ok(Vec::new());
        };
        let events = rig.advance_by(ms).map_err(|e| ServiceError::SimCommand(e.to_string()))?;
        events.into_iter().map(|e| self.publish(e.into())).collect()
    }
}

pub struct Hub {
    config: HubConfig,
    clock: Arc<dyn Clock>,
    store: Option<LogStore>,
    fridges: RwLock<HashMap<String, Arc<Fridge>>>,
}

impl std::fmt::Debug for Hub {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hub")
            .field("config", &self.config)
            .field("fridges", &self.fridge_ids().len())
            .finish_non_exhaustive()
    }
}

impl Hub {
    /// Build the hub, rebuilding every fridge found in the data directory
    /// by folding its log.
    pub fn new(config: HubConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        if config.positions == 0 {
            return Err(ServiceError::Config("positions must be >= 1".into()));
        }
        config
            .takeout
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        if let Some(sim) = &config.sim {
            if sim.sim.position_count != config.positions {
                return Err(ServiceError::Config(format!(
                    "simulated fridges have {} positions, service expects {}",
                    sim.sim.position_count, config.positions
                )));
            }
        }
        let store = config.data_dir.as_ref().map(LogStore::open).transpose()?;
        let hub = Self {
            config,
            clock,
            store,
            fridges: RwLock::new(HashMap::new()),
        };
        if let Some(store) = &hub.store {
            for stored in store.load_all()? {
                let file = store.open_events(&stored.fridge_id)?;
                let fridge = hub.make_fridge(stored.fridge_id.clone(), Some(file));
                for env in stored.events {
                    let item_position = env.item.as_ref().and_then(|i| i.position);
                    for p in env.position.into_iter().chain(item_position) {
                        if p >= hub.config.positions {
                            return Err(ServiceError::CorruptLog {
                                path: store.events_path(&stored.fridge_id),
                                message: format!("seq {} uses position {p}", env.seq),
                            });
                        }
                    }
                    fridge.replay(env);
                }
                for tags in stored.tags {
                    lock(&fridge.inner).recommender.set_tags(tags);
                }
                info!("restored fridge {} at seq {}", fridge.id, fridge.head_seq());
                hub.fridges
                    .write()
                    .unwrap_or_else(|p| p.into_inner())
                    .insert(stored.fridge_id, Arc::new(fridge));
            }
        }
        Ok(hub)
    }

    pub fn config(&self) -> &HubConfig {
        &self.config
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    fn make_fridge(&self, id: String, file: Option<File>) -> Fridge {
        Fridge::new(
            id,
            self.config.positions,
            &self.config.takeout,
            self.clock.clone(),
            self.store.clone(),
            file,
        )
    }

    pub fn register(&self) -> Result<String, ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let file = self.store.as_ref().map(|s| s.create(&id)).transpose()?;
        let fridge = Arc::new(self.make_fridge(id.clone(), file));
        self.fridges
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id.clone(), fridge);
        Ok(id)
    }

    pub fn fridge(&self, id: &str) -> Result<Arc<Fridge>, ServiceError> {
        self.fridges
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownFridge(id.to_string()))
    }

    pub fn fridge_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .fridges
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub fn publish(&self, id: &str, event: IncomingEvent) -> Result<Arc<EventEnvelope>, ServiceError> {
        self.fridge(id)?.publish(event)
    }

    /// Clamp a requested poll timeout to the allowed range.
    pub fn poll_timeout(requested_ms: Option<u64>) -> Duration {
        Duration::from_millis(requested_ms.unwrap_or(DEFAULT_POLL_TIMEOUT_MS).min(MAX_POLL_TIMEOUT_MS))
    }

    pub fn sim_commands(&self, id: &str, script: &str) -> Result<SimOutcome, ServiceError> {
        let config = self.config.sim.as_ref().ok_or(ServiceError::SimDisabled)?;
        self.fridge(id)?.sim_commands(config, script)
    }

    /// Advance every simulated fridge by `ms` of virtual time.
    pub fn tick_sims(&self, ms: u64) {
        let fridges: Vec<Arc<Fridge>> = self
            .fridges
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .values()
            .cloned()
            .collect();
        for fridge in fridges {
            if let Err(e) = fridge.sim_tick(ms) {
                warn!("fridge {}: sim tick failed: {e}", fridge.id);
            }
        }
    }
}
