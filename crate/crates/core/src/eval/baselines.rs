use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{classify, Action, ExperimentStep, GroundTruthStep};

/// A predictor that ignores the fridge: each step it picks uniformly among
/// the action kinds valid for its own idea of the contents, then a
/// position and an item uniformly. Durations are left at zero.
pub fn random_baseline(
    script: &[GroundTruthStep],
    items: &[String],
    position_count: usize,
    seed: u64,
) -> Vec<ExperimentStep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<Option<String>> = vec![None; position_count];
    script
        .iter()
        .map(|gt| {
            let free: Vec<usize> = (0..position_count).filter(|&p| slots[p].is_none()).collect();
            let taken: Vec<usize> = (0..position_count).filter(|&p| slots[p].is_some()).collect();
            let mut kinds = vec![0u8];
            if !free.is_empty() && !items.is_empty() {
                kinds.push(1);
            }
            if !taken.is_empty() {
                kinds.push(2);
            }
            let predicted = match kinds.choose(&mut rng).copied().unwrap_or(0) {
                1 => {
                    let position = free[rng.gen_range(0..free.len())];
                    let item = items[rng.gen_range(0..items.len())].clone();
                    slots[position] = Some(item.clone());
                    Action::Add { item, position }
                }
                2 => {
                    let position = taken[rng.gen_range(0..taken.len())];
                    Action::Remove {
                        position,
                        item: slots[position].take(),
                    }
                }
                _ => Action::None,
            };
            ExperimentStep {
                truth: classify(&gt.action, &predicted),
                ground_truth: gt.clone(),
                predicted,
                extra_events: 0,
                door_open_duration_s: 0.0,
                baseline_duration_s: 0.0,
            }
        })
        .collect()
}

/// Barcode scanning at insertion: every prediction is right, and every add
/// takes `overhead_s` longer than its baseline. Baselines are taken from
/// `steps`, a run of the same script.
pub fn barcode_baseline(steps: &[ExperimentStep], overhead_s: f64) -> Vec<ExperimentStep> {
    steps
        .iter()
        .map(|s| {
            let extra = match s.ground_truth.action {
                Action::Add { .. } => overhead_s,
                _ => 0.0,
            };
            ExperimentStep {
                ground_truth: s.ground_truth.clone(),
                predicted: s.ground_truth.action.clone(),
                extra_events: 0,
                truth: classify(&s.ground_truth.action, &s.ground_truth.action),
                door_open_duration_s: s.baseline_duration_s + extra,
                baseline_duration_s: s.baseline_duration_s,
            }
        })
        .collect()
}
