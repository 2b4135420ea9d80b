//! A simulated fridge wired end to end: simulator readings and door events
//! feed the detection engine, camera frames go through the recognition
//! pipeline, and recognized names flow back into the engine, all on the
//! simulator's virtual clock.

use std::collections::HashSet;

use thiserror::Error;

use crate::config::{TestbedConfig, DEFAULT_RULES};
use crate::detection::{DetectionEngine, DetectionError, DetectionEvent};
use crate::recognition::{parse_rules, PipelineError, RecognitionPipeline, RecognitionResult, RecognizerConfig};
use crate::sim::{FridgeSim, ItemCatalog, SimCommand, SimConfig, SimError, SimOutput};

#[derive(Debug, Error)]
pub enum RigError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("bad canonical rules: {0}")]
    Rules(String),
}

pub struct Rig {
    sim: FridgeSim,
    engine: DetectionEngine,
    pipeline: RecognitionPipeline,
    catalog: ItemCatalog,
    labeled_frames: HashSet<u64>,
    responses: Vec<RecognitionResult>,
}

impl std::fmt::Debug for Rig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rig")
            .field("now", &self.sim.now())
            .field("pipeline", &self.pipeline)
            .finish_non_exhaustive()
    }
}

impl Rig {
    pub fn new(
        config: &TestbedConfig,
        sim: SimConfig,
        recognizer: &RecognizerConfig,
        catalog: ItemCatalog,
    ) -> Result<Self, RigError> {
        let rules = parse_rules(DEFAULT_RULES).map_err(|e| RigError::Rules(e.to_string()))?;
        Ok(Self {
            sim: FridgeSim::new(sim)?,
            engine: DetectionEngine::new(config.engine_config())?,
            pipeline: RecognitionPipeline::simulated(recognizer, config.raw_phrases(), rules),
            catalog,
            labeled_frames: HashSet::new(),
            responses: Vec::new(),
        })
    }

    pub fn from_config(config: &TestbedConfig) -> Result<Self, RigError> {
        Self::new(config, config.sim.clone(), &config.recognizer, config.catalog())
    }

    pub fn now(&self) -> u64 {
        self.sim.now()
    }

    pub fn sim(&self) -> &FridgeSim {
        &self.sim
    }

    pub fn engine(&self) -> &DetectionEngine {
        &self.engine
    }

    pub fn pipeline(&self) -> &RecognitionPipeline {
        &self.pipeline
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }

    /// Every recognition result so far, in completion order.
    pub fn responses(&self) -> &[RecognitionResult] {
        &self.responses
    }

    /// Whether the frame showed an item.
    pub fn frame_was_labeled(&self, frame_id: u64) -> bool {
        self.labeled_frames.contains(&frame_id)
    }

    /// Run the clock to `target` and return the detection events produced.
    pub fn advance_to(&mut self, target: u64) -> Result<Vec<DetectionEvent>, RigError> {
        let mut events = Vec::new();
        self.run(target, &mut events, &mut |_, _| false)?;
        Ok(events)
    }

    pub fn advance_by(&mut self, ms: u64) -> Result<Vec<DetectionEvent>, RigError> {
        self.advance_to(self.now() + ms)
    }

    /// Run towards `limit`, stopping right after the first recognition
    /// result for which `stop(result, frame_was_labeled)` holds. Returns
    /// that result's completion time, or `None` if `limit` was reached.
    pub fn advance_until(
        &mut self,
        limit: u64,
        events: &mut Vec<DetectionEvent>,
        stop: &mut dyn FnMut(&RecognitionResult, bool) -> bool,
    ) -> Result<Option<u64>, RigError> {
        self.run(limit, events, stop)
    }

    fn run(
        &mut self,
        target: u64,
        events: &mut Vec<DetectionEvent>,
        stop: &mut dyn FnMut(&RecognitionResult, bool) -> bool,
    ) -> Result<Option<u64>, RigError> {
        loop {
            let t_sim = self.sim.next_event_time();
            let t_rec = self.pipeline.next_completion_time().unwrap_or(u64::MAX);
            let t = t_sim.min(t_rec);
            if t > target {
                break;
            }
            if t_rec <= t_sim {
                let mut stopped = false;
                for result in self.pipeline.advance_to(t) {
                    if let Some(name) = &result.name {
                        events.extend(self.engine.recognized(
                            name,
                            Some(result.activity_id),
                            result.completed_at,
                        ));
                    }
                    let labeled = self.labeled_frames.contains(&result.frame_id);
                    stopped |= stop(&result, labeled);
                    self.responses.push(result);
                }
                if stopped {
                    // bring the clock (and any readings due at t) up to date
                    self.drain_sim(t)?;
                    return Ok(Some(t));
                }
            } else {
                self.drain_sim(t)?;
            }
        }
        self.sim.advance_to(target);
        Ok(None)
    }

    fn drain_sim(&mut self, t: u64) -> Result<(), RigError> {
        for out in self.sim.advance_to(t) {
            match out {
                SimOutput::Reading(r) => {
                    self.engine.ingest_reading(r)?;
                }
                SimOutput::Frame(frame) => {
                    let activity = self
                        .engine
                        .current_activity()
                        .map(|a| a.activity_id)
                        .unwrap_or(self.engine.last_activity_id());
                    if frame.label.is_some() {
                        self.labeled_frames.insert(frame.frame_id);
                    }
                    self.pipeline.submit_frame(frame, activity, t)?;
                }
                SimOutput::DoorOpened { .. } | SimOutput::DoorClosed { .. } => {}
            }
        }
        Ok(())
    }

    pub fn open(&mut self) -> Result<Vec<DetectionEvent>, RigError> {
        self.sim.open_door()?;
        Ok(self.engine.open_activity(self.now())?)
    }

    pub fn close(&mut self) -> Result<Vec<DetectionEvent>, RigError> {
        self.sim.close_door()?;
        Ok(self.engine.close_activity(self.now())?)
    }

    pub fn place(&mut self, item: &str, position: usize) -> Result<(), RigError> {
        let profile = self
            .catalog
            .get(item)
            .cloned()
            .ok_or_else(|| RigError::UnknownItem(item.to_string()))?;
        Ok(self.sim.place(profile, position)?)
    }

    pub fn remove(&mut self, position: usize) -> Result<(), RigError> {
        self.sim.remove(position)?;
        Ok(())
    }

    /// Hold `level` in front of `position` until [`end_occlusions`](Self::end_occlusions)
    /// or `ms` elapse.
    pub fn occlude_at_level(&mut self, position: usize, ms: u64, level: f64) -> Result<(), RigError> {
        Ok(self.sim.occlude_at_level(position, ms, level)?)
    }

    pub fn end_occlusions(&mut self, position: usize) {
        self.sim.end_occlusions(position);
    }

    /// Apply one script command; `wait` advances the clock.
    pub fn apply(&mut self, command: &SimCommand) -> Result<Vec<DetectionEvent>, RigError> {
        match command {
            SimCommand::Open => self.open(),
            SimCommand::Close => self.close(),
            SimCommand::Place { item, position } => self.place(item, *position).map(|_| Vec::new()),
            SimCommand::Remove { position } => self.remove(*position).map(|_| Vec::new()),
            SimCommand::Wait { ms } => self.advance_by(*ms),
            SimCommand::Occlude { position, ms } => {
                self.sim.occlude(*position, *ms)?;
                Ok(Vec::new())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::EventKind;
    use crate::sim::parse_script;

    fn perfect() -> TestbedConfig {
        TestbedConfig::from_toml_str("[sim]\nnoise_amplitude = 0.0\n[recognizer]\np_hit = 1.0\n").unwrap()
    }

    #[test]
    fn placement_is_detected_and_named() {
        let mut rig = Rig::from_config(&perfect()).unwrap();
        let script = parse_script("wait 6000\nopen\nplace coke 2\nwait 8000\nclose\nwait 10000\n").unwrap();
        let mut events = Vec::new();
        for cmd in &script {
            events.extend(rig.apply(cmd).unwrap());
        }
        let add = events.iter().find(|e| e.kind == EventKind::Add).expect("add event");
        assert_eq!(add.position, Some(2));
        let record = rig.engine().store().at_position(2).unwrap();
        assert_eq!(record.name.as_deref(), Some("coke"));
        assert!(rig.pipeline().is_idle());
    }

    #[test]
    fn stop_on_first_labeled_response() {
        let mut rig = Rig::from_config(&perfect()).unwrap();
        rig.advance_to(6000).unwrap();
        rig.open().unwrap();
        rig.place("milk", 0).unwrap();
        let mut events = Vec::new();
        let hit = rig
            .advance_until(30_000, &mut events, &mut |_, labeled| labeled)
            .unwrap()
            .expect("a response arrives");
        assert!((6000 + 2200..=6000 + 5200).contains(&hit), "{hit}");
        assert_eq!(rig.now(), hit);
    }
}
