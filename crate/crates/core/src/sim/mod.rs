//! Deterministic simulation of the fridge's physical layer.
//!
//! A [`FridgeSim`] owns a virtual clock, a door, one IR proximity signal
//! per position and a camera that produces frames while the door is open.
//! Level changes ramp linearly over `settle_time_ms`; every reading gets
//! bounded uniform noise from a seeded generator, so identical
//! (config, commands, seed) always give identical output.

mod clock;
mod script;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::SensorReading;

pub use clock::VirtualClock;
pub use script::{parse_script, run_script, ActivityTiming, ScriptError, ScriptRun, SimCommand};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub position_count: usize,
    pub empty_level: f64,
    pub reflective_level: f64,
    pub nonreflective_level: f64,
    pub noise_amplitude: f64,
    pub reading_rate_hz: f64,
    pub frame_rate_hz: f64,
    pub settle_time_ms: u64,
    pub occlusion_level: f64,
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.position_count == 0 {
            return bad("position_count must be >= 1".into());
        }
        if !(self.reading_rate_hz > 0.0 && self.frame_rate_hz > 0.0) {
            return bad("reading and frame rates must be positive".into());
        }
        if self.noise_amplitude < 0.0 {
            return bad("noise amplitude must be >= 0".into());
        }
        if self.reflective_level >= self.empty_level || self.nonreflective_level <= self.empty_level
        {
            return bad("reflective level must be below and non-reflective above the empty level".into());
        }
        let gap = (self.empty_level - self.reflective_level)
            .min(self.nonreflective_level - self.empty_level);
        if self.noise_amplitude >= gap / 2.0 {
            return bad(format!(
                "noise amplitude {} must stay below half the level gap {gap}",
                self.noise_amplitude
            ));
        }
        Ok(())
    }

    pub fn reading_period_ms(&self) -> f64 {
        1000.0 / self.reading_rate_hz
    }

    pub fn frame_period_ms(&self) -> f64 {
        1000.0 / self.frame_rate_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemProfile {
    pub name: String,
    pub reflective: bool,
    pub steady_level: f64,
    #[serde(default)]
    pub barcode: Option<String>,
}

impl ItemProfile {
    /// Profile with the default steady level for its reflectivity.
    pub fn with_default_level(name: impl Into<String>, reflective: bool, config: &SimConfig) -> Self {
        Self {
            name: name.into(),
            reflective,
            steady_level: if reflective {
                config.reflective_level
            } else {
                config.nonreflective_level
            },
            barcode: None,
        }
    }

    pub fn validate(&self, empty_level: f64) -> Result<(), SimError> {
        let ok = if self.reflective {
            self.steady_level < empty_level
        } else {
            self.steady_level > empty_level
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(format!(
                "item {}: steady level {} on the wrong side of the empty level {empty_level}",
                self.name, self.steady_level
            )))
        }
    }
}

/// Named item profiles the simulator can place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ItemCatalog {
    items: Vec<ItemProfile>,
}

impl ItemCatalog {
    pub fn new(items: Vec<ItemProfile>) -> Self {
        Self { items }
    }

    pub fn get(&self, name: &str) -> Option<&ItemProfile> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn items(&self) -> &[ItemProfile] {
        &self.items
    }

    pub fn names(&self) -> Vec<String> {
        self.items.iter().map(|i| i.name.clone()).collect()
    }

    /// Catalog restricted to `names`, in that order.
    pub fn subset(&self, names: &[String]) -> Result<Self, SimError> {
        names
            .iter()
            .map(|n| {
                self.get(n)
                    .cloned()
                    .ok_or_else(|| SimError::UnknownItem(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }
}

/// Opaque camera frame. `label` is the ground truth of what is in view and
/// is only meant for the simulated recognizer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub frame_id: u64,
    pub captured_at: u64,
    pub activity: u64,
    pub label: Option<String>,
}

/// Ground-truth content of a frame.
pub fn frame_content(frame: &CameraFrame) -> Option<&str> {
    frame.label.as_deref()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimOutput {
    Reading(SensorReading),
    DoorOpened { at: u64, activity: u64 },
    DoorClosed { at: u64, activity: u64, open_ms: u64 },
    Frame(CameraFrame),
}

impl SimOutput {
    pub fn timestamp(&self) -> u64 {
        match self {
            SimOutput::Reading(r) => r.timestamp,
            SimOutput::DoorOpened { at, .. } | SimOutput::DoorClosed { at, .. } => *at,
            SimOutput::Frame(f) => f.captured_at,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("position {position} out of range ({count} positions)")]
    PositionOutOfRange { position: usize, count: usize },
    #[error("position {0} is already occupied")]
    Occupied(usize),
    #[error("position {0} is empty")]
    Empty(usize),
    #[error("door is already open")]
    DoorAlreadyOpen,
    #[error("door is closed")]
    DoorClosed,
    #[error("unknown item {0:?}")]
    UnknownItem(String),
}

#[derive(Debug, Clone)]
struct PositionSignal {
    occupant: Option<ItemProfile>,
    from: f64,
    to: f64,
    ramp_start: u64,
}

#[derive(Debug, Clone)]
struct Occlusion {
    position: usize,
    from: u64,
    until: u64,
    level: f64,
}

#[derive(Debug, Clone)]
struct DoorState {
    opened_at: u64,
    activity: u64,
    next_frame: u64,
    label: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FridgeSim {
    config: SimConfig,
    clock: VirtualClock,
    rng: ChaCha8Rng,
    signals: Vec<PositionSignal>,
    occlusions: Vec<Occlusion>,
    next_reading: Vec<u64>,
    door: Option<DoorState>,
    activities: u64,
    next_frame_id: u64,
}

impl FridgeSim {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let signals = (0..config.position_count)
            .map(|_| PositionSignal {
                occupant: None,
                from: config.empty_level,
                to: config.empty_level,
                ramp_start: 0,
            })
            .collect();
        let mut sim = Self {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            clock: VirtualClock::new(),
            signals,
            occlusions: Vec::new(),
            next_reading: vec![0; config.position_count],
            door: None,
            activities: 0,
            next_frame_id: 1,
            config,
        };
        for p in 0..sim.config.position_count {
            while sim.reading_time(p, sim.next_reading[p]) == 0 {
                sim.next_reading[p] += 1;
            }
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    pub fn door_open(&self) -> bool {
        self.door.is_some()
    }

    pub fn occupant(&self, position: usize) -> Option<&ItemProfile> {
        self.signals.get(position).and_then(|s| s.occupant.as_ref())
    }

    pub fn occupancy(&self) -> Vec<Option<String>> {
        self.signals
            .iter()
            .map(|s| s.occupant.as_ref().map(|i| i.name.clone()))
            .collect()
    }

    fn check_position(&self, position: usize) -> Result<(), SimError> {
        if position < self.signals.len() {
            Ok(())
        } else {
            Err(SimError::PositionOutOfRange {
                position,
                count: self.signals.len(),
            })
        }
    }

    // Staggered per-position phase so positions are not sampled in lockstep.
    fn reading_time(&self, position: usize, k: u64) -> u64 {
        let period = self.config.reading_period_ms();
        let phase = period * position as f64 / self.config.position_count as f64;
        (phase + k as f64 * period).round() as u64
    }

    fn frame_time(&self, door: &DoorState) -> u64 {
        door.opened_at + (door.next_frame as f64 * self.config.frame_period_ms()).round() as u64
    }

    /// Noise-free signal level at `t`.
    pub fn level_at(&self, position: usize, t: u64) -> f64 {
        if let Some(o) = self
            .occlusions
            .iter()
            .rev()
            .find(|o| o.position == position && o.from <= t && t < o.until)
        {
            return o.level;
        }
        let s = &self.signals[position];
        let settle = self.config.settle_time_ms;
        if settle == 0 || t >= s.ramp_start + settle {
            s.to
        } else {
            let frac = t.saturating_sub(s.ramp_start) as f64 / settle as f64;
            s.from + (s.to - s.from) * frac
        }
    }

    fn retarget(&mut self, position: usize, to: f64) {
        let now = self.now();
        let from = self.level_at(position, now);
        let s = &mut self.signals[position];
        s.from = from;
        s.to = to;
        s.ramp_start = now;
    }

    pub fn open_door(&mut self) -> Result<SimOutput, SimError> {
        if self.door.is_some() {
            return Err(SimError::DoorAlreadyOpen);
        }
        self.activities += 1;
        let at = self.now();
        self.door = Some(DoorState {
            opened_at: at,
            activity: self.activities,
            next_frame: 1,
            label: None,
        });
        Ok(SimOutput::DoorOpened {
            at,
            activity: self.activities,
        })
    }

    pub fn close_door(&mut self) -> Result<SimOutput, SimError> {
        let door = self.door.take().ok_or(SimError::DoorClosed)?;
        let at = self.now();
        Ok(SimOutput::DoorClosed {
            at,
            activity: door.activity,
            open_ms: at - door.opened_at,
        })
    }

    pub fn place(&mut self, item: ItemProfile, position: usize) -> Result<(), SimError> {
        self.check_position(position)?;
        item.validate(self.config.empty_level)?;
        if self.signals[position].occupant.is_some() {
            return Err(SimError::Occupied(position));
        }
        let door = self.door.as_mut().ok_or(SimError::DoorClosed)?;
        door.label = Some(item.name.clone());
        let level = item.steady_level;
        self.signals[position].occupant = Some(item);
        self.retarget(position, level);
        Ok(())
    }

    pub fn remove(&mut self, position: usize) -> Result<ItemProfile, SimError> {
        self.check_position(position)?;
        if self.door.is_none() {
            return Err(SimError::DoorClosed);
        }
        let item = self.signals[position]
            .occupant
            .take()
            .ok_or(SimError::Empty(position))?;
        self.retarget(position, self.config.empty_level);
        Ok(item)
    }

    /// Hold something in front of a sensor for `ms`, overriding its level.
    pub fn occlude(&mut self, position: usize, ms: u64) -> Result<(), SimError> {
        self.occlude_at_level(position, ms, self.config.occlusion_level)
    }

    pub fn occlude_at_level(&mut self, position: usize, ms: u64, level: f64) -> Result<(), SimError> {
        self.check_position(position)?;
        let now = self.now();
        // an occlusion starting now covers readings strictly after now
        self.occlusions.push(Occlusion {
            position,
            from: now + 1,
            until: now + 1 + ms,
            level,
        });
        Ok(())
    }

    /// Lift every active occlusion of `position` from the next reading on.
    pub fn end_occlusions(&mut self, position: usize) {
        let now = self.now();
        for o in self.occlusions.iter_mut().filter(|o| o.position == position) {
            o.until = o.until.min(now + 1);
        }
    }

    /// Time of the next reading or frame strictly after now.
    pub fn next_event_time(&self) -> u64 {
        let reading = (0..self.signals.len())
            .map(|p| self.reading_time(p, self.next_reading[p]))
            .min()
            .unwrap_or(u64::MAX);
        let frame = self
            .door
            .as_ref()
            .map(|d| self.frame_time(d))
            .unwrap_or(u64::MAX);
        reading.min(frame)
    }

    /// Advance by `dt` ms and return everything emitted in `(now, now + dt]`.
    pub fn step(&mut self, dt: u64) -> Vec<SimOutput> {
        let target = self.now() + dt;
        self.advance_to(target)
    }

    pub fn advance_to(&mut self, target: u64) -> Vec<SimOutput> {
        let mut out = Vec::new();
        loop {
            let t = self.next_event_time();
            if t > target {
                break;
            }
            self.clock.advance_to(t);
            for p in 0..self.signals.len() {
                if self.reading_time(p, self.next_reading[p]) == t {
                    self.next_reading[p] += 1;
                    let value = self.sample(p, t);
                    out.push(SimOutput::Reading(SensorReading {
                        position: p,
                        value,
                        timestamp: t,
                    }));
                }
            }
            let frame_due = self.door.as_ref().is_some_and(|d| self.frame_time(d) == t);
            if frame_due {
                let frame_id = self.next_frame_id;
                self.next_frame_id += 1;
                let door = self.door.as_mut().expect("door is open");
                door.next_frame += 1;
                out.push(SimOutput::Frame(CameraFrame {
                    frame_id,
                    captured_at: t,
                    activity: door.activity,
                    label: door.label.clone(),
                }));
            }
        }
        self.clock.advance_to(target);
        let now = self.now();
        self.occlusions.retain(|o| o.until > now);
        out
    }

    fn sample(&mut self, position: usize, t: u64) -> f64 {
        let level = self.level_at(position, t);
        let a = self.config.noise_amplitude;
        let noise = if a > 0.0 { self.rng.gen_range(-a..=a) } else { 0.0 };
        (level + noise).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(noise: f64) -> SimConfig {
        SimConfig {
            position_count: 4,
            empty_level: 400.0,
            reflective_level: 150.0,
            nonreflective_level: 650.0,
            noise_amplitude: noise,
            reading_rate_hz: 1.0,
            frame_rate_hz: 5.0,
            settle_time_ms: 2000,
            occlusion_level: 240.0,
            rng_seed: 7,
        }
    }

    fn coke(c: &SimConfig) -> ItemProfile {
        ItemProfile::with_default_level("coke", true, c)
    }

    fn count<F: Fn(&SimOutput) -> bool>(out: &[SimOutput], f: F) -> usize {
        out.iter().filter(|o| f(o)).count()
    }

    #[test]
    fn closed_door_ten_seconds() {
        let mut sim = FridgeSim::new(config(20.0)).unwrap();
        let out = sim.step(10_000);
        for p in 0..4 {
            let n = count(&out, |o| matches!(o, SimOutput::Reading(r) if r.position == p));
            assert_eq!(n, 10, "position {p}");
        }
        assert_eq!(count(&out, |o| matches!(o, SimOutput::Frame(_))), 0);
    }

    #[test]
    fn open_door_two_seconds_gives_ten_frames() {
        let mut sim = FridgeSim::new(config(20.0)).unwrap();
        sim.step(500);
        sim.open_door().unwrap();
        let out = sim.step(2000);
        assert_eq!(count(&out, |o| matches!(o, SimOutput::Frame(_))), 10);
    }

    #[test]
    fn settled_reflective_item_reads_exactly_its_level() {
        let c = config(0.0);
        let mut sim = FridgeSim::new(c.clone()).unwrap();
        sim.open_door().unwrap();
        sim.place(coke(&c), 0).unwrap();
        sim.step(2000);
        let out = sim.step(5000);
        for o in out {
            if let SimOutput::Reading(r) = o {
                let expected = if r.position == 0 { 150.0 } else { 400.0 };
                assert_eq!(r.value, expected);
            }
        }
    }

    #[test]
    fn ramp_is_linear() {
        let c = config(0.0);
        let mut sim = FridgeSim::new(c.clone()).unwrap();
        sim.open_door().unwrap();
        sim.place(coke(&c), 0).unwrap();
        assert_eq!(sim.level_at(0, 0), 400.0);
        assert_eq!(sim.level_at(0, 500), 337.5);
        assert_eq!(sim.level_at(0, 1000), 275.0);
        assert_eq!(sim.level_at(0, 2000), 150.0);
    }

    #[test]
    fn frames_carry_label_only_after_place() {
        let c = config(0.0);
        let mut sim = FridgeSim::new(c.clone()).unwrap();
        sim.open_door().unwrap();
        let before = sim.step(1000);
        sim.place(coke(&c), 1).unwrap();
        let after = sim.step(2000);
        sim.close_door().unwrap();
        let closed = sim.step(2000);
        let frames = |o: &[SimOutput]| -> Vec<Option<String>> {
            o.iter()
                .filter_map(|o| match o {
                    SimOutput::Frame(f) => Some(frame_content(f).map(str::to_string)),
                    _ => None,
                })
                .collect()
        };
        assert!(frames(&before).iter().all(Option::is_none));
        let labelled = frames(&after);
        assert_eq!(labelled.len(), 10);
        assert!(labelled.iter().all(|l| l.as_deref() == Some("coke")));
        assert!(frames(&closed).is_empty());
    }

    #[test]
    fn occupancy_rules() {
        let c = config(0.0);
        let mut sim = FridgeSim::new(c.clone()).unwrap();
        assert_eq!(sim.place(coke(&c), 0), Err(SimError::DoorClosed));
        sim.open_door().unwrap();
        sim.place(coke(&c), 0).unwrap();
        assert_eq!(sim.place(coke(&c), 0), Err(SimError::Occupied(0)));
        assert_eq!(sim.remove(1), Err(SimError::Empty(1)));
        assert!(matches!(sim.remove(7), Err(SimError::PositionOutOfRange { .. })));
        assert_eq!(sim.open_door(), Err(SimError::DoorAlreadyOpen));
    }

    #[test]
    fn occlusion_overrides_then_expires() {
        let c = config(0.0);
        let mut sim = FridgeSim::new(c).unwrap();
        sim.step(100);
        sim.occlude(2, 3000).unwrap();
        let out = sim.step(6000);
        let p2: Vec<f64> = out
            .iter()
            .filter_map(|o| match o {
                SimOutput::Reading(r) if r.position == 2 => Some(r.value),
                _ => None,
            })
            .collect();
        // readings at 500, 1500, 2500 occluded; later ones clean
        assert_eq!(&p2[..3], &[240.0, 240.0, 240.0]);
        assert!(p2[3..].iter().all(|v| *v == 400.0));
    }

    #[test]
    fn config_validation() {
        let mut c = config(130.0);
        assert!(c.validate().is_err());
        c.noise_amplitude = 20.0;
        c.frame_rate_hz = 0.0;
        assert!(c.validate().is_err());
        let bad = ItemProfile {
            name: "x".into(),
            reflective: true,
            steady_level: 500.0,
            barcode: None,
        };
        assert!(bad.validate(400.0).is_err());
    }
}
