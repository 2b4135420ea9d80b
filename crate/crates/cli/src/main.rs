use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use coldbench_core::detection::trace;
use coldbench_core::detection::DetectionEngine;
use coldbench_core::eval::{summarize, CurvePoint, ExperimentStep, RunOptions, RunReport, SubsampleResult};
use coldbench_core::sim::{parse_script, run_script, FridgeSim};
use coldbench_core::TestbedConfig;
use coldbench_service::{router, Hub, HubConfig, SystemClock};
use log::info;

#[derive(Debug, Parser)]
#[command(name = "coldbench", version, about = "Smart-fridge testbed")]
struct Cli {
    /// TOML overrides on top of the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Random,
    Barcode,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scripted experiment and write its reports.
    Eval {
        #[arg(long, default_value = "soda")]
        flavor: String,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Only compare against this baseline (default: both).
        #[arg(long)]
        baseline: Option<Baseline>,
        #[arg(long)]
        subsamples: Option<usize>,
        #[arg(long)]
        subsample_size: Option<usize>,
        /// Override the flavor's position error rate.
        #[arg(long)]
        position_error_rate: Option<f64>,
    },
    /// Serve the HTTP API and, optionally, the console assets.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Persist event logs here; in-memory when omitted.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        console_dir: Option<PathBuf>,
        /// Give every fridge a simulated twin driven through sim/commands.
        #[arg(long)]
        sim: bool,
        /// Advance simulated fridges with the wall clock, in ms per tick.
        #[arg(long)]
        tick_ms: Option<u64>,
    },
    /// Run a simulator script and print the resulting trace.
    Sim {
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Feed a recorded trace through the detection engine and print events
    /// as JSON lines.
    Replay { trace: PathBuf },
}

fn load_config(path: Option<&Path>) -> Result<TestbedConfig> {
    match path {
        Some(p) => TestbedConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(TestbedConfig::default()),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn write_steps(path: &Path, steps: &[ExperimentStep]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "step",
        "gt",
        "pred",
        "extra_events",
        "truth",
        "door_open_s",
        "baseline_s",
        "overhead_s",
    ])?;
    for s in steps {
        w.write_record([
            s.ground_truth.step_index.to_string(),
            s.ground_truth.action.to_string(),
            s.predicted.to_string(),
            s.extra_events.to_string(),
            s.truth.as_str().to_string(),
            format!("{:.3}", s.door_open_duration_s),
            format!("{:.3}", s.baseline_duration_s),
            format!("{:.3}", s.overhead_s()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_subsamples(path: &Path, results: &[SubsampleResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subsample", "indices", "precision", "accuracy", "mean_overhead_s"])?;
    for (i, r) in results.iter().enumerate() {
        let indices: Vec<String> = r.indices.iter().map(usize::to_string).collect();
        w.write_record([
            i.to_string(),
            indices.join(" "),
            fmt_opt(r.precision),
            format!("{:.6}", r.accuracy),
            format!("{:.6}", r.mean_overhead_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_curve(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x_s", "n", "mean_pe", "stderr_pe", "mean_ae", "stderr_ae"])?;
    for p in curve {
        w.write_record([
            format!("{}", p.x_s),
            p.n.to_string(),
            fmt_opt(p.mean_pe),
            fmt_opt(p.stderr_pe),
            format!("{:.6}", p.mean_ae),
            format!("{:.6}", p.stderr_ae),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    mut config: TestbedConfig,
    flavor: &str,
    steps: Option<usize>,
    seed: u64,
    out: &Path,
    baseline: Option<Baseline>,
    subsamples: Option<usize>,
    subsample_size: Option<usize>,
    position_error_rate: Option<f64>,
) -> Result<()> {
    if let Some(n) = subsamples {
        config.eval.subsamples = n;
    }
    if let Some(n) = subsample_size {
        config.eval.subsample_size = n;
    }
    let steps = steps.unwrap_or(config.eval.steps);
    let options = RunOptions { position_error_rate };
    let report = RunReport::evaluate(&config, flavor, steps, seed, &options)?;

    let random = baseline != Some(Baseline::Barcode);
    let barcode = baseline != Some(Baseline::Random);
    let summary = summarize(
        &report.steps,
        &report.subsamples,
        random.then_some(report.random_subsamples.as_slice()),
        barcode.then_some(report.barcode_steps.as_slice()),
    )?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_steps(&out.join("steps.csv"), &report.steps)?;
    write_subsamples(&out.join("subsamples.csv"), &report.subsamples)?;
    write_curve(&out.join("curve.csv"), &report.curve)?;
    if random {
        write_steps(&out.join("random_steps.csv"), &report.random_steps)?;
        write_subsamples(&out.join("random_subsamples.csv"), &report.random_subsamples)?;
    }
    if barcode {
        write_steps(&out.join("barcode_steps.csv"), &report.barcode_steps)?;
    }
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(out.join("summary.json"), format!("{json}\n"))?;
    println!("{json}");
    info!("wrote reports for {flavor} seed {seed} to {}", out.display());
    Ok(())
}

async fn serve(
    config: TestbedConfig,
    addr: SocketAddr,
    data_dir: Option<PathBuf>,
    console_dir: Option<PathBuf>,
    sim: bool,
    tick_ms: Option<u64>,
) -> Result<()> {
    if tick_ms.is_some() && !sim {
        bail!("--tick-ms needs --sim");
    }
    let hub_config = HubConfig {
        positions: config.sim.position_count,
        takeout: config.takeout.clone(),
        data_dir,
        sim: sim.then_some(config),
    };
    let hub = Arc::new(Hub::new(hub_config, Arc::new(SystemClock))?);
    if let Some(ms) = tick_ms.filter(|&ms| ms > 0) {
        let ticker = hub.clone();
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(Duration::from_millis(ms));
            loop {
                interval.tick().await;
                let hub = ticker.clone();
                let _ = tokio::task::spawn_blocking(move || hub.tick_sims(ms)).await;
            }
        });
    }
    let app = router(hub, console_dir);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}

fn sim(config: TestbedConfig, script: &Path, seed: u64) -> Result<()> {
    let text = fs::read_to_string(script).with_context(|| format!("reading {}", script.display()))?;
    let commands = parse_script(&text)?;
    let mut sim_config = config.sim.clone();
    sim_config.rng_seed = seed;
    let mut fridge = FridgeSim::new(sim_config)?;
    let run = run_script(&mut fridge, &config.catalog(), &commands)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(run.trace_text().as_bytes())?;
    Ok(())
}

fn replay(config: TestbedConfig, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = trace::parse(&text)?;
    let mut engine = DetectionEngine::new(config.engine_config())?;
    let events = trace::replay(&mut engine, &records)?;
    let mut stdout = std::io::stdout().lock();
    for event in events {
        writeln!(stdout, "{}", serde_json::to_string(&event)?)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Eval {
            flavor,
            steps,
            seed,
            out,
            baseline,
            subsamples,
            subsample_size,
            position_error_rate,
        } => eval(
            config,
            &flavor,
            steps,
            seed,
            &out,
            baseline,
            subsamples,
            subsample_size,
            position_error_rate,
        ),
        Command::Serve {
            addr,
            data_dir,
            console_dir,
            sim,
            tick_ms,
        } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(config, addr, data_dir, console_dir, sim, tick_ms))
        }
        Command::Sim { script, seed } => sim(config, &script, seed),
        Command::Replay { trace } => replay(config, &trace),
    }
}
