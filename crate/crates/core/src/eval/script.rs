use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, EvalError, GroundTruthStep};

/// Random state-aware script: each step is uniform over the action kinds
/// valid right now (add needs a free position, remove an occupied one,
/// none is always valid), then uniform over positions and items.
pub fn generate_script(
    steps: usize,
    items: &[String],
    position_count: usize,
    seed: u64,
) -> Result<Vec<GroundTruthStep>, EvalError> {
    if steps == 0 {
        return Err(EvalError::Config("script needs at least one step".into()));
    }
    if position_count == 0 {
        return Err(EvalError::Config("script needs at least one position".into()));
    }
    if items.is_empty() {
        return Err(EvalError::Config("empty item pool".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<Option<String>> = vec![None; position_count];
    let mut script = Vec::with_capacity(steps);
    for step_index in 0..steps {
        let free: Vec<usize> = (0..position_count).filter(|&p| slots[p].is_none()).collect();
        let taken: Vec<usize> = (0..position_count).filter(|&p| slots[p].is_some()).collect();
        let mut kinds = vec!["none"];
        if !free.is_empty() {
            kinds.push("add");
        }
        if !taken.is_empty() {
            kinds.push("remove");
        }
        let action = match *kinds.choose(&mut rng).expect("none is always valid") {
            "add" => {
                let position = free[rng.gen_range(0..free.len())];
                let item = items[rng.gen_range(0..items.len())].clone();
                slots[position] = Some(item.clone());
                Action::Add { item, position }
            }
            "remove" => {
                let position = taken[rng.gen_range(0..taken.len())];
                Action::Remove {
                    position,
                    item: slots[position].take(),
                }
            }
            _ => Action::None,
        };
        script.push(GroundTruthStep { step_index, action });
    }
    Ok(script)
}
