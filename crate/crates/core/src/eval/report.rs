use serde::{Deserialize, Serialize};

use super::stats::{mean, welch_t_test};
use super::{
    barcode_baseline, bootstrap, generate_script, metrics, mix_seed, overhead_curve,
    random_baseline, run_experiment, Action, ConfusionCounts, CurvePoint, EvalError,
    ExperimentStep, RunOptions, SubsampleResult,
};
use crate::config::TestbedConfig;

/// Table-style summary of one run. Field names serialize to the row labels
/// used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(rename = "Mean precision")]
    pub mean_precision: Option<f64>,
    #[serde(rename = "Mean accuracy")]
    pub mean_accuracy: f64,
    #[serde(rename = "Correct item ratio for add action")]
    pub correct_item_ratio_add: Option<f64>,
    #[serde(rename = "P-value of NH_p")]
    pub p_value_precision: Option<f64>,
    #[serde(rename = "P-value of NH_a")]
    pub p_value_accuracy: Option<f64>,
    #[serde(rename = "Overhead compared to baseline")]
    pub overhead_vs_baseline: Option<f64>,
    #[serde(rename = "Add action overhead")]
    pub add_overhead_s: Option<f64>,
    #[serde(rename = "Remove and Dummy action overhead")]
    pub remove_none_overhead_s: Option<f64>,
    #[serde(rename = "P-value of NH_b")]
    pub p_value_barcode: Option<f64>,
    #[serde(rename = "Overhead compared to barcode scanning")]
    pub overhead_vs_barcode: Option<f64>,
    #[serde(rename = "Random baseline mean precision")]
    pub random_mean_precision: Option<f64>,
    #[serde(rename = "Random baseline mean accuracy")]
    pub random_mean_accuracy: Option<f64>,
    #[serde(rename = "Steps")]
    pub steps: usize,
    #[serde(rename = "Confusion counts")]
    pub counts: ConfusionCounts,
}

fn subsample_precisions(results: &[SubsampleResult]) -> Vec<f64> {
    results.iter().filter_map(|r| r.precision).collect()
}

fn subsample_accuracies(results: &[SubsampleResult]) -> Vec<f64> {
    results.iter().map(|r| r.accuracy).collect()
}

fn add_durations(steps: &[ExperimentStep]) -> Vec<f64> {
    steps
        .iter()
        .filter(|s| matches!(s.ground_truth.action, Action::Add { .. }))
        .map(|s| s.door_open_duration_s)
        .collect()
}

/// Fold a run and its baselines into a [`Summary`].
pub fn summarize(
    steps: &[ExperimentStep],
    subsamples: &[SubsampleResult],
    random: Option<&[SubsampleResult]>,
    barcode: Option<&[ExperimentStep]>,
) -> Result<Summary, EvalError> {
    let counts: ConfusionCounts = steps.iter().map(|s| s.truth).collect();
    metrics(&counts)?;

    let precisions = subsample_precisions(subsamples);
    let accuracies = subsample_accuracies(subsamples);

    let adds: Vec<&ExperimentStep> = steps
        .iter()
        .filter(|s| matches!(s.ground_truth.action, Action::Add { .. }))
        .collect();
    let correct_items = adds
        .iter()
        .filter(|s| s.predicted.kind() == "add" && s.predicted.item() == s.ground_truth.action.item())
        .count();
    let add_overheads: Vec<f64> = adds.iter().map(|s| s.overhead_s()).collect();
    let other_overheads: Vec<f64> = steps
        .iter()
        .filter(|s| !matches!(s.ground_truth.action, Action::Add { .. }))
        .map(|s| s.overhead_s())
        .collect();
    let all_overheads: Vec<f64> = steps.iter().map(|s| s.overhead_s()).collect();
    let baselines: Vec<f64> = steps.iter().map(|s| s.baseline_duration_s).collect();

    let (p_value_precision, p_value_accuracy, random_mean_precision, random_mean_accuracy) =
        match random {
            Some(r) => {
                let rp = subsample_precisions(r);
                let ra = subsample_accuracies(r);
                (
                    welch_t_test(&precisions, &rp).ok().map(|t| t.p_value),
                    welch_t_test(&accuracies, &ra).ok().map(|t| t.p_value),
                    mean(&rp),
                    mean(&ra),
                )
            }
            None => (None, None, None, None),
        };

    let (p_value_barcode, overhead_vs_barcode) = match barcode {
        Some(b) => {
            let image = add_durations(steps);
            let scan = add_durations(b);
            let delta = match (mean(&image), mean(&scan)) {
                (Some(i), Some(s)) if i > 0.0 => Some((i - s) / i),
                _ => None,
            };
            (welch_t_test(&image, &scan).ok().map(|t| t.p_value), delta)
        }
        None => (None, None),
    };

    Ok(Summary {
        mean_precision: mean(&precisions),
        mean_accuracy: mean(&accuracies).ok_or(EvalError::NoSteps)?,
        correct_item_ratio_add: (!adds.is_empty()).then(|| correct_items as f64 / adds.len() as f64),
        p_value_precision,
        p_value_accuracy,
        overhead_vs_baseline: match (mean(&all_overheads), mean(&baselines)) {
            (Some(o), Some(b)) if b > 0.0 => Some(o / b),
            _ => None,
        },
        add_overhead_s: mean(&add_overheads),
        remove_none_overhead_s: mean(&other_overheads),
        p_value_barcode,
        overhead_vs_barcode,
        random_mean_precision,
        random_mean_accuracy,
        steps: steps.len(),
        counts,
    })
}

/// Everything one evaluation produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub flavor: String,
    pub seed: u64,
    pub steps: Vec<ExperimentStep>,
    pub subsamples: Vec<SubsampleResult>,
    pub random_steps: Vec<ExperimentStep>,
    pub random_subsamples: Vec<SubsampleResult>,
    pub barcode_steps: Vec<ExperimentStep>,
    pub curve: Vec<CurvePoint>,
    pub summary: Summary,
}

impl RunReport {
    /// Generate a script, run it, score it against both baselines.
    pub fn evaluate(
        config: &TestbedConfig,
        flavor: &str,
        steps: usize,
        seed: u64,
        options: &RunOptions,
    ) -> Result<Self, EvalError> {
        let items = config
            .flavor(flavor)
            .map_err(|e| EvalError::Config(e.to_string()))?
            .items
            .clone();
        let positions = config.sim.position_count;
        let script = generate_script(steps, &items, positions, seed)?;
        let run = run_experiment(config, flavor, &script, seed, options)?;
        let n = config.eval.subsamples;
        let size = config.eval.subsample_size;
        let subsamples = bootstrap(&run.steps, n, size, mix_seed(seed, 7))?;

        // the random predictor may guess any known item
        let all_items: Vec<String> = config.items.iter().map(|i| i.name.clone()).collect();
        let random_script = generate_script(steps, &items, positions, mix_seed(seed, 6))?;
        let random_steps = random_baseline(&random_script, &all_items, positions, mix_seed(seed, 8));
        let random_subsamples = bootstrap(&random_steps, n, size, mix_seed(seed, 9))?;
        let barcode_steps = barcode_baseline(&run.steps, config.eval.barcode_overhead_s);

        let xs = (config.eval.curve_x_min..=config.eval.curve_x_max).map(f64::from);
        let curve = overhead_curve(&subsamples, xs);
        let summary = summarize(
            &run.steps,
            &subsamples,
            Some(&random_subsamples),
            Some(&barcode_steps),
        )?;
        Ok(Self {
            flavor: flavor.to_string(),
            seed,
            steps: run.steps,
            subsamples,
            random_steps,
            random_subsamples,
            barcode_steps,
            curve,
            summary,
        })
    }
}
