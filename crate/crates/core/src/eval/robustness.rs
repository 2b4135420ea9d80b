use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, EvalError};
use crate::config::TestbedConfig;
use crate::detection::{DetectionEvent, EventKind};
use crate::rig::Rig;
use crate::sim::SimCommand;

/// One door activity in which a hand briefly blocks a sensor and nothing
/// else happens.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionTrial {
    pub seed: u64,
    pub position: usize,
    pub occupied: bool,
    pub duration_ms: u64,
    /// Readings of `position` taken while it was blocked.
    pub readings_covered: usize,
    /// Add and remove decisions of the occluded activity; should be empty.
    pub events: Vec<DetectionEvent>,
}

/// Run `trials` seeded occlusion trials. Each starts from a random set of
/// stocked positions, opens the door, occludes one position for fewer
/// readings than the smoothing window spans, waits for the readings to
/// settle and closes.
pub fn occlusion_trials(
    config: &TestbedConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<OcclusionTrial>, EvalError> {
    let window = config.detection.window as u64;
    let period = config.sim.reading_period_ms().round() as u64;
    let positions = config.sim.position_count;
    let names = config.catalog().names();
    (0..trials as u64)
        .map(|i| {
            let trial_seed = mix_seed(seed.wrapping_add(i), 10);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let mut sim = config.sim.clone();
            sim.rng_seed = trial_seed;
            let mut rig = Rig::new(config, sim, &config.recognizer, config.catalog())
                .map_err(|e| EvalError::Config(e.to_string()))?;
            let fail = |e: crate::rig::RigError| EvalError::Sim {
                step: i as usize,
                message: e.to_string(),
            };

            rig.advance_by(6_000).map_err(fail)?;
            rig.open().map_err(fail)?;
            let mut stocked = vec![false; positions];
            for (p, slot) in stocked.iter_mut().enumerate() {
                if rng.gen_bool(0.5) {
                    let item = &names[rng.gen_range(0..names.len())];
                    rig.place(item, p).map_err(fail)?;
                    *slot = true;
                }
            }
            rig.advance_by(8_000).map_err(fail)?;
            rig.close().map_err(fail)?;
            rig.advance_by(20_000).map_err(fail)?;

            let mut events = rig.open().map_err(fail)?;
            events.extend(rig.advance_by(rng.gen_range(0..3_000)).map_err(fail)?);
            let position = rng.gen_range(0..positions);
            // covers between one reading and one fewer than the window holds
            let duration_ms = rng.gen_range(period..(window - 1) * period);
            let start = rig.now();
            events.extend(rig.apply(&SimCommand::Occlude { position, ms: duration_ms }).map_err(fail)?);
            events.extend(rig.advance_by(duration_ms + window * period + 1_000).map_err(fail)?);
            events.extend(rig.close().map_err(fail)?);
            events.retain(|e| matches!(e.kind, EventKind::Add | EventKind::Remove));

            let covered = (start + 1..start + 1 + duration_ms)
                .filter(|&t| reading_due(config, position, t))
                .count();
            Ok(OcclusionTrial {
                seed: trial_seed,
                position,
                occupied: stocked[position],
                duration_ms,
                readings_covered: covered,
                events,
            })
        })
        .collect()
}

// whether the simulator takes a reading of `position` at `t`
fn reading_due(config: &TestbedConfig, position: usize, t: u64) -> bool {
    let period = config.sim.reading_period_ms();
    let phase = position as f64 * period / config.sim.position_count as f64;
    let k = ((t as f64 - phase) / period).round();
    k >= 0.0 && (phase + k * period).round() as u64 == t
}
