use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{mean, std_error};
use super::truth::{metrics, ConfusionCounts};
use super::{EvalError, ExperimentStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleResult {
    pub indices: Vec<usize>,
    pub precision: Option<f64>,
    pub accuracy: f64,
    pub mean_overhead_s: f64,
}

/// `n_subsamples` draws of `subsample_size` distinct steps each, scored
/// independently.
pub fn bootstrap(
    steps: &[ExperimentStep],
    n_subsamples: usize,
    subsample_size: usize,
    seed: u64,
) -> Result<Vec<SubsampleResult>, EvalError> {
    if subsample_size == 0 || steps.len() < subsample_size {
        return Err(EvalError::TooFewSteps {
            needed: subsample_size.max(1),
            have: steps.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_subsamples)
        .map(|_| {
            let mut indices = index::sample(&mut rng, steps.len(), subsample_size).into_vec();
            indices.sort_unstable();
            let counts: ConfusionCounts = indices.iter().map(|&i| steps[i].truth).collect();
            let m = metrics(&counts)?;
            let overheads: Vec<f64> = indices.iter().map(|&i| steps[i].overhead_s()).collect();
            Ok(SubsampleResult {
                precision: m.precision,
                accuracy: m.accuracy,
                mean_overhead_s: mean(&overheads).unwrap_or(0.0),
                indices,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x_s: f64,
    /// Subsamples with mean overhead below `x_s`.
    pub n: usize,
    pub mean_pe: Option<f64>,
    pub stderr_pe: Option<f64>,
    pub mean_ae: f64,
    pub stderr_ae: f64,
}

/// Precision and accuracy error over the subsamples whose mean overhead is
/// below each x. Points without any qualifying subsample are left out.
pub fn overhead_curve(results: &[SubsampleResult], xs: impl IntoIterator<Item = f64>) -> Vec<CurvePoint> {
    xs.into_iter()
        .filter_map(|x| {
            let within: Vec<&SubsampleResult> =
                results.iter().filter(|r| r.mean_overhead_s < x).collect();
            if within.is_empty() {
                return None;
            }
            let pe: Vec<f64> = within.iter().filter_map(|r| r.precision.map(|p| 1.0 - p)).collect();
            let ae: Vec<f64> = within.iter().map(|r| 1.0 - r.accuracy).collect();
            Some(CurvePoint {
                x_s: x,
                n: within.len(),
                mean_pe: mean(&pe),
                stderr_pe: std_error(&pe),
                mean_ae: mean(&ae).expect("nonempty"),
                stderr_ae: std_error(&ae).expect("nonempty"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{classify, Action, GroundTruthStep};

    fn step(i: usize, correct: bool, overhead: f64) -> ExperimentStep {
        let gt = Action::Add {
            item: "coke".into(),
            position: i % 4,
        };
        let predicted = if correct { gt.clone() } else { Action::None };
        ExperimentStep {
            truth: classify(&gt, &predicted),
            ground_truth: GroundTruthStep {
                step_index: i,
                action: gt,
            },
            predicted,
            extra_events: 0,
            door_open_duration_s: 5.0 + overhead,
            baseline_duration_s: 5.0,
        }
    }

    #[test]
    fn hundred_subsamples_of_ten_distinct() {
        let steps: Vec<_> = (0..50).map(|i| step(i, true, 1.0)).collect();
        let results = bootstrap(&steps, 100, 10, 4).unwrap();
        assert_eq!(results.len(), 100);
        for r in &results {
            let mut idx = r.indices.clone();
            idx.dedup();
            assert_eq!(idx.len(), 10);
            assert_eq!(r.precision, Some(1.0));
            assert_eq!(r.accuracy, 1.0);
        }
        assert_eq!(results, bootstrap(&steps, 100, 10, 4).unwrap());
        assert!(bootstrap(&steps[..5], 100, 10, 4).is_err());
    }

    #[test]
    fn curve_filters_by_overhead() {
        let steps: Vec<_> = (0..50).map(|i| step(i, i % 3 != 0, (i % 5) as f64)).collect();
        let results = bootstrap(&steps, 100, 10, 1).unwrap();
        let curve = overhead_curve(&results, (2..=10).map(f64::from));
        let last = curve.last().unwrap();
        assert_eq!(last.x_s, 10.0);
        assert_eq!(last.n, 100);

        let high: Vec<_> = results
            .iter()
            .cloned()
            .map(|mut r| {
                r.mean_overhead_s += 2.0;
                r
            })
            .collect();
        assert!(overhead_curve(&high, [2.0]).is_empty());

        let one = overhead_curve(&results[..1], [100.0]);
        assert_eq!(one[0].n, 1);
        assert_eq!(one[0].stderr_ae, 0.0);
    }
}
