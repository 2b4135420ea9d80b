use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{classify, draw, mix_seed, Action, EvalError, ExperimentStep, GroundTruthStep, TruthClass};
use crate::config::TestbedConfig;
use crate::detection::{DetectionEvent, EventKind, RemovalReason};
use crate::rig::{Rig, RigError};

/// Sensors settle for this long before the first step.
const WARM_UP_MS: u64 = 6000;
/// An occlusion that lasts until explicitly ended.
const UNTIL_CLOSE_MS: u64 = u64::MAX / 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub flavor: String,
    pub seed: u64,
    pub steps: Vec<ExperimentStep>,
    pub events: Vec<DetectionEvent>,
    /// Virtual time the run ended at, in ms.
    pub finished_at: u64,
}

/// Knobs for [`run_experiment`] beyond the flavor's own settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    /// Replace the flavor's position error rate.
    pub position_error_rate: Option<f64>,
}

fn sim_err(step: usize) -> impl Fn(RigError) -> EvalError {
    move |e| EvalError::Sim {
        step,
        message: e.to_string(),
    }
}

/// Play `script` against a simulated fridge with the given flavor and seed.
///
/// Each step is one door activity performed by a simulated person. For adds
/// the person holds the item in view until the first recognition response
/// (or a give-up timeout) but at least their normal reach time. The
/// baseline duration of each step is an independent draw of the same
/// person without the recognition wait.
pub fn run_experiment(
    config: &TestbedConfig,
    flavor_name: &str,
    script: &[GroundTruthStep],
    seed: u64,
    options: &RunOptions,
) -> Result<ExperimentRun, EvalError> {
    let flavor = config
        .flavor(flavor_name)
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let mut sim = config.sim.clone();
    sim.rng_seed = mix_seed(seed, 1);
    let mut recognizer = config.recognizer.clone();
    recognizer.p_hit = flavor.p_hit;
    recognizer.seed = mix_seed(seed, 2);
    let catalog = config
        .catalog()
        .subset(&flavor.items)
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let error_rate = options
        .position_error_rate
        .unwrap_or(flavor.position_error_rate);

    let mut rig = Rig::new(config, sim, &recognizer, catalog).map_err(sim_err(0))?;
    let human = &config.human;
    let mut person = ChaCha8Rng::seed_from_u64(mix_seed(seed, 3));
    let mut baseline_person = ChaCha8Rng::seed_from_u64(mix_seed(seed, 4));
    let mut slips = ChaCha8Rng::seed_from_u64(mix_seed(seed, 5));

    let mut events = rig.advance_to(WARM_UP_MS).map_err(sim_err(0))?;
    let mut timings = Vec::with_capacity(script.len());
    let mut activity_ids = Vec::with_capacity(script.len());

    for step in script {
        let err = sim_err(step.step_index);
        let opened_at = rig.now();
        events.extend(rig.open().map_err(&err)?);
        let activity = rig.engine().last_activity_id();
        activity_ids.push(activity);
        let baseline_ms = match &step.action {
            Action::Add { item, position } => {
                rig.place(item, *position).map_err(&err)?;
                let reflective = rig.catalog().get(item).map(|p| p.reflective).unwrap_or(true);
                let mut skewed = None;
                if !reflective && slips.gen::<f64>() < error_rate {
                    let neighbours: Vec<usize> = [position.checked_sub(1), Some(position + 1)]
                        .into_iter()
                        .flatten()
                        .filter(|&p| p < config.sim.position_count && rig.sim().occupant(p).is_none())
                        .collect();
                    if !neighbours.is_empty() {
                        let nb = neighbours[slips.gen_range(0..neighbours.len())];
                        rig.occlude_at_level(nb, UNTIL_CLOSE_MS, config.sim.nonreflective_level)
                            .map_err(&err)?;
                        skewed = Some(nb);
                    }
                }
                let reach = draw(&mut person, human.reach_ms);
                let give_up = opened_at + human.ack_give_up_ms;
                let acked = rig
                    .advance_until(give_up, &mut events, &mut |r, labeled| {
                        labeled && r.activity_id == activity
                    })
                    .map_err(&err)?
                    .unwrap_or(give_up);
                let hold_until = acked.max(opened_at + reach);
                events.extend(rig.advance_to(hold_until).map_err(&err)?);
                events.extend(rig.advance_by(draw(&mut person, human.add_finish_ms)).map_err(&err)?);
                if let Some(nb) = skewed {
                    rig.end_occlusions(nb);
                }
                draw(&mut baseline_person, human.reach_ms) + draw(&mut baseline_person, human.add_finish_ms)
            }
            Action::Remove { position, .. } => {
                events.extend(rig.advance_by(draw(&mut person, human.reach_ms)).map_err(&err)?);
                rig.remove(*position).map_err(&err)?;
                events.extend(rig.advance_by(draw(&mut person, human.remove_finish_ms)).map_err(&err)?);
                draw(&mut baseline_person, human.reach_ms) + draw(&mut baseline_person, human.remove_finish_ms)
            }
            Action::None => {
                events.extend(rig.advance_by(draw(&mut person, human.none_ms)).map_err(&err)?);
                draw(&mut baseline_person, human.none_ms)
            }
        };
        events.extend(rig.close().map_err(&err)?);
        timings.push((rig.now() - opened_at, baseline_ms));
        events.extend(rig.advance_by(human.inter_step_gap_ms).map_err(&err)?);
    }
    // let stragglers finish
    while let Some(t) = rig.pipeline().next_completion_time() {
        events.extend(rig.advance_to(t).map_err(sim_err(script.len()))?);
    }

    let steps = script
        .iter()
        .zip(activity_ids)
        .zip(timings)
        .map(|((gt, activity), (open_ms, baseline_ms))| {
            let candidates = predictions(&rig, &events, activity);
            let extra_events = candidates.len().saturating_sub(1);
            let predicted = candidates
                .iter()
                .find(|p| classify(&gt.action, p) == TruthClass::TP)
                .or(candidates.first())
                .cloned()
                .unwrap_or(Action::None);
            let truth = if extra_events > 0 {
                TruthClass::FP
            } else {
                classify(&gt.action, &predicted)
            };
            ExperimentStep {
                ground_truth: gt.clone(),
                predicted,
                extra_events,
                truth,
                door_open_duration_s: open_ms as f64 / 1000.0,
                baseline_duration_s: baseline_ms as f64 / 1000.0,
            }
        })
        .collect();

    Ok(ExperimentRun {
        flavor: flavor_name.to_string(),
        seed,
        steps,
        events,
        finished_at: rig.now(),
    })
}

/// Positional decisions of one activity, named as the system knows them at
/// the end of the run.
fn predictions(rig: &Rig, events: &[DetectionEvent], activity: u64) -> Vec<Action> {
    events
        .iter()
        .filter(|e| e.activity_id == Some(activity))
        .filter_map(|e| match e.kind {
            EventKind::Add => {
                let position = e.position?;
                let name = e
                    .item
                    .as_ref()
                    .and_then(|r| rig.engine().store().get(r.item_id))
                    .and_then(|r| r.name.clone());
                Some(Action::Add {
                    item: name.unwrap_or_default(),
                    position,
                })
            }
            EventKind::Remove => {
                let displaced = e
                    .item
                    .as_ref()
                    .is_some_and(|r| r.removal_reason == Some(RemovalReason::Displaced));
                (!displaced).then(|| Action::Remove {
                    position: e.position.unwrap_or_default(),
                    item: e.item.as_ref().and_then(|r| r.name.clone()),
                })
            }
            _ => None,
        })
        .collect()
}
