//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails. Tolerances are pinned below.

use std::collections::{BTreeMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use coldbench_core::detection::{
    DetectionEngine, EventKind, ItemRecord, ItemState, PositionStats, RemovalReason, SensorReading,
};
use coldbench_core::eval::stats::{mean, welch_t_test};
use coldbench_core::eval::{
    bootstrap, generate_script, metrics, occlusion_trials, random_baseline, ConfusionCounts,
    RunOptions, RunReport, TruthClass,
};
use coldbench_core::recognition::{parse_rules, LeasePool, RecognitionPipeline};
use coldbench_core::sim::CameraFrame;
use coldbench_core::TestbedConfig;
use coldbench_service::{
    HistoryAction, HistoryEntry, Hub, HubConfig, IncomingEvent, IncomingItem, ManualClock,
    ServiceError, StateView,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 30;
const STEPS: usize = 50;
const RANDOM_STEPS: usize = 500;

const PERFECT_WALL_S: f64 = 10.0;
const CALIBRATED_WALL_S: f64 = 120.0;
const SODA_PRECISION: (f64, f64) = (0.76, 0.08);
const SODA_ACCURACY: (f64, f64) = (0.88, 0.08);
const MIX_PRECISION: (f64, f64) = (0.73, 0.08);
const MIX_ACCURACY: (f64, f64) = (0.83, 0.08);
const ADD_OVERHEAD_S: (f64, f64) = (1.9, 2.6);
const BARCODE_DELTA: (f64, f64) = (-0.27, 0.05);
const RANDOM_PRECISION_MAX: f64 = 0.02;
const WELCH_P_MAX: f64 = 0.001;
const OCCLUSION_TRIALS: usize = 100;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(x: f64, (centre, tol): (f64, f64)) -> bool {
    (x - centre).abs() <= tol + 1e-12
}

struct Calibrated {
    soda: Vec<RunReport>,
    mix: Vec<RunReport>,
    soda_wall_s: f64,
    mix_wall_s: f64,
}

fn run_seeds(config: &TestbedConfig, flavor: &str) -> Result<(Vec<RunReport>, f64), String> {
    let start = Instant::now();
    let reports = (0..SEEDS)
        .map(|seed| RunReport::evaluate(config, flavor, STEPS, seed, &RunOptions::default()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("{flavor}: {e}"))?;
    Ok((reports, start.elapsed().as_secs_f64()))
}

fn averages(reports: &[RunReport]) -> (f64, f64) {
    let p: Vec<f64> = reports.iter().filter_map(|r| r.summary.mean_precision).collect();
    let a: Vec<f64> = reports.iter().map(|r| r.summary.mean_accuracy).collect();
    (mean(&p).unwrap_or(f64::NAN), mean(&a).unwrap_or(f64::NAN))
}

fn perfect_run() -> Check {
    let config = TestbedConfig::from_toml_str("[sim]\nnoise_amplitude = 0.0\n[flavors.soda]\np_hit = 1.0\n")
        .map_err(|e| e.to_string())?;
    let flavor = config.flavor("soda").map_err(|e| e.to_string())?;
    for item in &flavor.items {
        let spec = config.items.iter().find(|i| &i.name == item);
        ensure(spec.is_some_and(|s| s.reflective), || format!("{item} is not reflective"))?;
    }
    let mut slowest = 0.0f64;
    for seed in 0..5 {
        let start = Instant::now();
        let report = RunReport::evaluate(&config, "soda", STEPS, seed, &RunOptions::default())
            .map_err(|e| e.to_string())?;
        let wall = start.elapsed().as_secs_f64();
        slowest = slowest.max(wall);
        let counts: ConfusionCounts = report.steps.iter().map(|s| s.truth).collect();
        let m = metrics(&counts).map_err(|e| e.to_string())?;
        ensure(m.precision == Some(1.0) && m.accuracy == 1.0, || {
            format!("seed {seed}: counts {counts:?}")
        })?;
        ensure(report.summary.mean_precision == Some(1.0), || {
            format!("seed {seed}: bootstrap precision {:?}", report.summary.mean_precision)
        })?;
        ensure(wall < PERFECT_WALL_S, || format!("seed {seed} took {wall:.2} s"))?;
    }
    Ok(format!("P = A = 1.0 on 5 seeds x {STEPS} steps, slowest {slowest:.2} s (< {PERFECT_WALL_S} s)"))
}

fn soda(config: &TestbedConfig, cal: &Calibrated) -> Check {
    let flavor = config.flavor("soda").map_err(|e| e.to_string())?;
    ensure(flavor.p_hit == 0.77, || format!("soda p_hit {}", flavor.p_hit))?;
    ensure(
        flavor
            .items
            .iter()
            .all(|n| config.items.iter().any(|i| &i.name == n && i.reflective)),
        || "soda flavor has non-reflective items".into(),
    )?;
    ensure(config.eval.subsamples == 100 && config.eval.subsample_size == 10, || {
        "bootstrap is not 100x10".into()
    })?;
    let (p, a) = averages(&cal.soda);
    let detail = format!(
        "P {p:.3} (0.76+-0.08), A {a:.3} (0.88+-0.08) over {SEEDS} seeds in {:.1} s",
        cal.soda_wall_s
    );
    ensure(within(p, SODA_PRECISION) && within(a, SODA_ACCURACY), || detail.clone())?;
    ensure(cal.soda_wall_s < CALIBRATED_WALL_S, || detail.clone())?;
    Ok(detail)
}

fn mix(config: &TestbedConfig, cal: &Calibrated) -> Check {
    let flavor = config.flavor("mix").map_err(|e| e.to_string())?;
    ensure(flavor.p_hit == 0.82, || format!("mix p_hit {}", flavor.p_hit))?;
    ensure(flavor.position_error_rate > 0.0, || "no position error rate in config".into())?;
    let (p, a) = averages(&cal.mix);
    let detail = format!(
        "P {p:.3} (0.73+-0.08), A {a:.3} (0.83+-0.08) over {SEEDS} seeds, position_error_rate {} from config, {:.1} s",
        flavor.position_error_rate, cal.mix_wall_s
    );
    ensure(within(p, MIX_PRECISION) && within(a, MIX_ACCURACY), || detail.clone())?;
    Ok(detail)
}

fn overhead(config: &TestbedConfig, cal: &Calibrated) -> Check {
    ensure(
        config.recognizer.latency_ms_min == 2000 && config.recognizer.latency_ms_max == 5000,
        || "recognition latency is not [2, 5] s".into(),
    )?;
    ensure(config.eval.barcode_overhead_s == 4.1, || "barcode constant is not 4.1 s".into())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, reports) in [("soda", &cal.soda), ("mix", &cal.mix)] {
        let adds: Vec<f64> = reports.iter().filter_map(|r| r.summary.add_overhead_s).collect();
        let deltas: Vec<f64> = reports.iter().filter_map(|r| r.summary.overhead_vs_barcode).collect();
        let add = mean(&adds).unwrap_or(f64::NAN);
        let delta = mean(&deltas).unwrap_or(f64::NAN);
        ok &= (ADD_OVERHEAD_S.0..=ADD_OVERHEAD_S.1).contains(&add) && within(delta, BARCODE_DELTA);
        parts.push(format!("{name}: add {add:.2} s, vs barcode {:+.1}%", delta * 100.0));
    }
    let detail = format!("{} (add in [1.9, 2.6] s, delta -27+-5 points)", parts.join("; "));
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn random(config: &TestbedConfig, cal: &Calibrated) -> Check {
    let items = &config.flavor("soda").map_err(|e| e.to_string())?.items;
    let all_items: Vec<String> = config.items.iter().map(|i| i.name.clone()).collect();
    let positions = config.sim.position_count;
    let mut precisions = Vec::new();
    let mut first_steps = None;
    for seed in 0..SEEDS {
        let script = generate_script(RANDOM_STEPS, items, positions, 10_000 + seed).map_err(|e| e.to_string())?;
        let steps = random_baseline(&script, &all_items, positions, 20_000 + seed);
        let counts: ConfusionCounts = steps.iter().map(|s| s.truth).collect();
        let m = metrics(&counts).map_err(|e| e.to_string())?;
        precisions.push(m.precision.unwrap_or(0.0));
        first_steps.get_or_insert(steps);
    }
    let mean_p = mean(&precisions).unwrap_or(f64::NAN);
    let worst = precisions.iter().cloned().fold(0.0, f64::max);

    // main run vs a 500-step random run, both resampled 100x10
    let random_sub = bootstrap(first_steps.as_ref().unwrap(), 100, 10, 30_000).map_err(|e| e.to_string())?;
    let main: Vec<f64> = cal.soda[0].subsamples.iter().filter_map(|r| r.precision).collect();
    let rand_p: Vec<f64> = random_sub.iter().map(|r| r.precision.unwrap_or(0.0)).collect();
    let test = welch_t_test(&main, &rand_p).map_err(|e| e.to_string())?;
    let per_seed_max = cal
        .soda
        .iter()
        .filter_map(|r| r.summary.p_value_precision)
        .fold(0.0, f64::max);
    let detail = format!(
        "mean P {mean_p:.4} (max {worst:.4}) over {SEEDS} x {RANDOM_STEPS} steps; Welch p {:.1e}, worst per-seed p {per_seed_max:.1e}",
        test.p_value
    );
    ensure(mean_p < RANDOM_PRECISION_MAX, || detail.clone())?;
    ensure(test.p_value < WELCH_P_MAX && per_seed_max < WELCH_P_MAX, || detail.clone())?;
    Ok(detail)
}

// --- property suites ---------------------------------------------------

fn window_equivalence(config: &TestbedConfig) -> Result<(), String> {
    let w = config.detection.window;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() < 1e-9,
        _ => false,
    };
    for trace in 0..1000 {
        let mut stats = PositionStats::new(w);
        let mut all = Vec::new();
        let mut means = Vec::new();
        let mut since_begin = None::<usize>;
        for _ in 0..rng.gen_range(0..200) {
            match rng.gen_range(0..10) {
                0 => {
                    stats.begin_activity();
                    since_begin = Some(0);
                    means.clear();
                }
                1 => {
                    stats.end_activity();
                    since_begin = None;
                    means.clear();
                }
                _ => {
                    let v: f64 = rng.gen_range(0.0..1000.0);
                    all.push(v);
                    let got = stats.push(v);
                    let want = since_begin.as_mut().and_then(|n| {
                        *n += 1;
                        (*n >= w).then(|| all[all.len() - w..].iter().sum::<f64>() / w as f64)
                    });
                    ensure(close(got, want), || format!("trace {trace}: mean {got:?} vs {want:?}"))?;
                    means.extend(want);
                }
            }
            let lo = means.iter().cloned().reduce(f64::min);
            let hi = means.iter().cloned().reduce(f64::max);
            ensure(
                close(stats.minval(), lo) && close(stats.maxval(), hi) && close(stats.lastval(), means.last().copied()),
                || format!("trace {trace}: summary mismatch"),
            )?;
        }
    }
    Ok(())
}

fn occupancy_gates(config: &TestbedConfig) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let positions = config.sim.position_count;
    let levels = [150.0, 400.0, 650.0];
    for seq in 0..10_000 {
        let mut engine = DetectionEngine::new(config.engine_config()).map_err(|e| e.to_string())?;
        let mut occupied = vec![false; positions];
        let mut t = 0u64;
        for _ in 0..rng.gen_range(1..12) {
            engine.open_activity(t).map_err(|e| e.to_string())?;
            for _ in 0..rng.gen_range(0..6) {
                let position = rng.gen_range(0..positions);
                let value = if rng.gen_bool(0.75) {
                    levels[rng.gen_range(0..3)]
                } else {
                    rng.gen_range(0.0..1000.0)
                };
                for _ in 0..rng.gen_range(0..9) {
                    t += 250;
                    engine
                        .ingest_reading(SensorReading { position, value, timestamp: t })
                        .map_err(|e| e.to_string())?;
                }
            }
            t += 250;
            for ev in engine.close_activity(t).map_err(|e| e.to_string())? {
                let Some(p) = ev.position else { continue };
                match ev.kind {
                    EventKind::Add => {
                        ensure(!occupied[p], || format!("sequence {seq}: double add at {p}"))?;
                        occupied[p] = true;
                    }
                    EventKind::Remove => {
                        ensure(occupied[p], || format!("sequence {seq}: remove of empty {p}"))?;
                        occupied[p] = false;
                    }
                    _ => {}
                }
            }
            ensure(occupied == engine.occupied(), || format!("sequence {seq}: occupancy drift"))?;
        }
    }
    Ok(())
}

fn lease_pool() -> Result<(), String> {
    let pool = LeasePool::new(4);
    let live = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let handles: Vec<_> = (0..8u64)
        .map(|t| {
            let (pool, live, peak) = (pool.clone(), live.clone(), peak.clone());
            thread::spawn(move || {
                for i in 0..125 {
                    let lease = pool.acquire(t * 1000 + i);
                    peak.fetch_max(live.fetch_add(1, Ordering::SeqCst) + 1, Ordering::SeqCst);
                    thread::yield_now();
                    live.fetch_sub(1, Ordering::SeqCst);
                    drop(lease);
                }
            })
        })
        .collect();
    for h in handles {
        h.join().map_err(|_| "lease thread panicked".to_string())?;
    }
    let stats = pool.stats();
    ensure(peak.load(Ordering::SeqCst) <= 4 && stats.high_water <= 4, || "pool bound exceeded".into())?;
    ensure(stats.granted == 1000 && stats.released == 1000 && stats.outstanding == 0, || {
        format!("lease leak: {stats:?}")
    })?;

    // the same bound through the recognition pipeline
    let mut config = TestbedConfig::default();
    config.recognizer.pool_size = 4;
    let rules = parse_rules(coldbench_core::config::DEFAULT_RULES).map_err(|e| e.to_string())?;
    let pipeline = Arc::new(RecognitionPipeline::simulated(&config.recognizer, config.raw_phrases(), rules));
    let handles: Vec<_> = (0..8u64)
        .map(|t| {
            let p = pipeline.clone();
            thread::spawn(move || {
                for i in 0..125u64 {
                    let id = t * 125 + i;
                    let frame = CameraFrame {
                        frame_id: id,
                        captured_at: 0,
                        activity: id % 7,
                        label: Some("coke".into()),
                    };
                    p.submit_frame(frame, id % 7, 0).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().map_err(|_| "submit thread panicked".to_string())?;
    }
    let mut seen = HashSet::new();
    while let Some(t) = pipeline.next_completion_time() {
        for r in pipeline.advance_to(t) {
            ensure(seen.insert(r.frame_id), || format!("frame {} finished twice", r.frame_id))?;
        }
        ensure(pipeline.in_flight() <= 4, || "pipeline exceeded its pool".into())?;
    }
    let stats = pipeline.pool_stats();
    ensure(seen.len() == 1000 && stats.outstanding == 0 && stats.released == 1000, || {
        format!("{} of 1000 finished, {stats:?}", seen.len())
    })?;
    Ok(())
}

fn incoming(kind: EventKind, position: Option<usize>, name: Option<&str>) -> IncomingEvent {
    IncomingEvent {
        kind,
        position,
        item: name.map(|n| IncomingItem {
            name: Some(n.into()),
            ..Default::default()
        }),
        activity_id: None,
        timestamp: None,
        message: None,
    }
}

// Independent reducer: the latest snapshot of a record wins; a position
// holds the last live record placed there.
fn fold(entries: &[HistoryEntry], positions: usize) -> (Vec<Option<u64>>, BTreeMap<u64, ItemRecord>) {
    let mut records: BTreeMap<u64, ItemRecord> = BTreeMap::new();
    let mut slots = vec![None; positions];
    for e in entries {
        let id = e.item.item_id;
        match (e.action, e.position) {
            (HistoryAction::Add, Some(p)) => {
                if let Some(old) = slots[p].filter(|&old| old != id) {
                    if let Some(r) = records.get_mut(&old).filter(|r| r.state != ItemState::Removed) {
                        r.state = ItemState::Removed;
                        r.removed_at = Some(e.timestamp);
                        r.removal_reason = Some(RemovalReason::Displaced);
                    }
                }
                slots[p] = Some(id);
            }
            (HistoryAction::Remove, Some(p)) if slots[p] == Some(id) => slots[p] = None,
            (HistoryAction::Complete, _) if e.item.state != ItemState::Removed => {
                if let Some(p) = e.item.position {
                    slots[p] = Some(id);
                }
            }
            _ => {}
        }
        records.insert(id, e.item.clone());
    }
    (slots, records)
}

fn fold_matches(view: &StateView, history: &[HistoryEntry]) -> bool {
    let prefix: Vec<HistoryEntry> = history.iter().filter(|h| h.seq <= view.head_seq).cloned().collect();
    let (slots, records) = fold(&prefix, view.positions.len());
    let got: Vec<Option<u64>> = view.positions.iter().map(|p| p.as_ref().map(|r| r.item_id)).collect();
    let got_records: BTreeMap<u64, ItemRecord> = view.items.iter().map(|r| (r.item_id, r.clone())).collect();
    got == slots && got_records == records
}

fn service_fold_and_isolation() -> Result<(), String> {
    let hub = Arc::new(Hub::new(HubConfig::default(), Arc::new(ManualClock::new(1_000))).map_err(|e| e.to_string())?);
    let ids: Vec<String> = (0..3).map(|_| hub.register().unwrap()).collect();
    let names = ["coke", "milk", "juice", "cream"];
    let mut writers = Vec::new();
    for (k, id) in ids.iter().enumerate() {
        for t in 0..4usize {
            let (hub, id) = (hub.clone(), id.clone());
            writers.push(thread::spawn(move || -> Result<usize, ServiceError> {
                let mut published = 0;
                for i in 0..50usize {
                    let p = (t + i + k) % 4;
                    let event = match (t + i * 7) % 5 {
                        0 | 1 => incoming(EventKind::Add, Some(p), Some(names[(t + i) % 4])),
                        2 | 3 => incoming(EventKind::Remove, Some(p), None),
                        _ if i % 2 == 0 => incoming(EventKind::DoorOpen, None, None),
                        _ => incoming(EventKind::DoorClose, None, None),
                    };
                    match hub.publish(&id, event) {
                        Ok(_) => published += 1,
                        Err(ServiceError::PositionEmpty(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(published)
            }));
        }
    }
    let reader = {
        let (hub, id) = (hub.clone(), ids[0].clone());
        thread::spawn(move || {
            let f = hub.fridge(&id).unwrap();
            (0..200).all(|_| fold_matches(&f.state().view(&id), &f.history(None, None)))
        })
    };
    let mut published = vec![0usize; ids.len()];
    for (n, w) in writers.into_iter().enumerate() {
        let count = w.join().map_err(|_| "writer panicked".to_string())?.map_err(|e| e.to_string())?;
        published[n / 4] += count;
    }
    ensure(reader.join().unwrap_or(false), || "concurrent read broke state = fold(history)".into())?;
    for (k, id) in ids.iter().enumerate() {
        let f = hub.fridge(id).map_err(|e| e.to_string())?;
        let all = f.since(0);
        ensure(all.len() == published[k], || format!("fridge {k}: {} events, {} published", all.len(), published[k]))?;
        ensure(
            all.iter().enumerate().all(|(i, e)| e.seq == i as u64 + 1 && &e.fridge_id == id),
            || format!("fridge {k}: foreign or gapped events"),
        )?;
        ensure(fold_matches(&f.state().view(id), &f.history(None, None)), || {
            format!("fridge {k}: state != fold(history)")
        })?;
    }
    Ok(())
}

fn determinism(config: &TestbedConfig) -> Result<(), String> {
    let a = RunReport::evaluate(config, "mix", 30, 99, &RunOptions::default()).map_err(|e| e.to_string())?;
    let b = RunReport::evaluate(config, "mix", 30, 99, &RunOptions::default()).map_err(|e| e.to_string())?;
    ensure(a == b, || "same seed gave different reports".into())?;
    let c = RunReport::evaluate(config, "mix", 30, 100, &RunOptions::default()).map_err(|e| e.to_string())?;
    ensure(a.steps != c.steps, || "different seeds gave identical steps".into())?;
    let x = bootstrap(&a.steps, 100, 10, 5).map_err(|e| e.to_string())?;
    ensure(x == bootstrap(&a.steps, 100, 10, 5).map_err(|e| e.to_string())?, || {
        "bootstrap not reproducible".into()
    })?;
    // metrics against the textbook formulas
    let count = |c: TruthClass| a.steps.iter().filter(|s| s.truth == c).count() as f64;
    let (tp, fp, tn, fneg) = (count(TruthClass::TP), count(TruthClass::FP), count(TruthClass::TN), count(TruthClass::FN));
    let counts: ConfusionCounts = a.steps.iter().map(|s| s.truth).collect();
    let m = metrics(&counts).map_err(|e| e.to_string())?;
    let want_p = (tp + fp > 0.0).then(|| tp / (tp + fp));
    let want_a = (tp + tn) / (tp + fp + tn + fneg);
    ensure(m.precision == want_p && (m.accuracy - want_a).abs() < 1e-12, || "metrics disagree".into())?;
    Ok(())
}

type Suite<'a> = (&'static str, &'a dyn Fn() -> Result<(), String>);

fn property_suites(config: &TestbedConfig) -> Check {
    let suites: [Suite; 5] = [
        ("window mean x1000", &|| window_equivalence(config)),
        ("occupancy gates x10000", &|| occupancy_gates(config)),
        ("lease pool x1000", &lease_pool),
        ("fold oracle + isolation", &service_fold_and_isolation),
        ("determinism", &|| determinism(config)),
    ];
    let mut passed = Vec::new();
    for (name, suite) in suites {
        suite().map_err(|e| format!("{name}: {e}"))?;
        passed.push(name);
    }
    Ok(passed.join(", "))
}

fn occlusion(config: &TestbedConfig) -> Check {
    let trials = occlusion_trials(config, OCCLUSION_TRIALS, 2024).map_err(|e| e.to_string())?;
    let window = config.detection.window;
    ensure(trials.len() == OCCLUSION_TRIALS, || format!("{} trials", trials.len()))?;
    for t in &trials {
        ensure((1..window).contains(&t.readings_covered), || {
            format!("trial {} covered {} readings", t.seed, t.readings_covered)
        })?;
        ensure(t.events.is_empty(), || {
            format!("trial {} ({} ms at {}) fired {:?}", t.seed, t.duration_ms, t.position, t.events)
        })?;
    }
    let occupied = trials.iter().filter(|t| t.occupied).count();
    Ok(format!(
        "{OCCLUSION_TRIALS} trials ({occupied} over an item), 0 events, each covering 1..{} readings",
        window - 1
    ))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let started = Instant::now();
    let config = TestbedConfig::default();
    let calibrated = run_seeds(&config, "soda").and_then(|(soda, soda_wall_s)| {
        let (mix, mix_wall_s) = run_seeds(&config, "mix")?;
        Ok(Calibrated {
            soda,
            mix,
            soda_wall_s,
            mix_wall_s,
        })
    });
    let with_cal = |f: &dyn Fn(&Calibrated) -> Check| match &calibrated {
        Ok(cal) => guarded(|| f(cal)),
        Err(e) => Err(e.clone()),
    };

    let results: Vec<(&str, Check)> = vec![
        ("perfect-conditions run", guarded(perfect_run)),
        ("calibrated soda run", with_cal(&|c| soda(&config, c))),
        ("calibrated mix run", with_cal(&|c| mix(&config, c))),
        ("overhead vs barcode", with_cal(&|c| overhead(&config, c))),
        ("random baseline", with_cal(&|c| random(&config, c))),
        ("property suites", guarded(|| property_suites(&config))),
        ("occlusion robustness", guarded(|| occlusion(&config))),
    ];

    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
