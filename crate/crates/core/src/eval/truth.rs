use serde::{Deserialize, Serialize};

use super::{Action, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TruthClass {
    TP,
    FP,
    TN,
    FN,
}

impl TruthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TruthClass::TP => "TP",
            TruthClass::FP => "FP",
            TruthClass::TN => "TN",
            TruthClass::FN => "FN",
        }
    }
}

/// Score one step.
///
/// A positive prediction on a positive step is only a TP when kind,
/// position and item all match; any mismatch counts as FP. For removes the
/// item is compared when the ground truth knows it.
pub fn classify(gt: &Action, pred: &Action) -> TruthClass {
    match (gt, pred) {
        (Action::None, Action::None) => TruthClass::TN,
        (Action::None, _) => TruthClass::FP,
        (_, Action::None) => TruthClass::FN,
        (
            Action::Add { item, position },
            Action::Add {
                item: p_item,
                position: p_pos,
            },
        ) if item == p_item && position == p_pos => TruthClass::TP,
        (
            Action::Remove { position, item },
            Action::Remove {
                position: p_pos,
                item: p_item,
            },
        ) if position == p_pos && (item.is_none() || item == p_item) => TruthClass::TP,
        _ => TruthClass::FP,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, class: TruthClass) {
        match class {
            TruthClass::TP => self.tp += 1,
            TruthClass::FP => self.fp += 1,
            TruthClass::TN => self.tn += 1,
            TruthClass::FN => self.fn_ += 1,
        }
    }
}

impl FromIterator<TruthClass> for ConfusionCounts {
    fn from_iter<I: IntoIterator<Item = TruthClass>>(iter: I) -> Self {
        let mut c = Self::default();
        for class in iter {
            c.add(class);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Absent when nothing was predicted positive.
    pub precision: Option<f64>,
    pub accuracy: f64,
    pub precision_error: Option<f64>,
    pub accuracy_error: f64,
}

pub fn metrics(counts: &ConfusionCounts) -> Result<Metrics, EvalError> {
    let total = counts.total();
    if total == 0 {
        return Err(EvalError::NoSteps);
    }
    let predicted_positive = counts.tp + counts.fp;
    let precision = (predicted_positive > 0).then(|| counts.tp as f64 / predicted_positive as f64);
    let accuracy = (counts.tp + counts.tn) as f64 / total as f64;
    Ok(Metrics {
        precision,
        accuracy,
        precision_error: precision.map(|p| 1.0 - p),
        accuracy_error: 1.0 - accuracy,
    })
}
