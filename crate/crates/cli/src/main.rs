//! `snn`: benchmark, verification and simulation front-end.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2 usage error.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use snn_core::models::constants::ModelConstants;
use snn_core::models::{BrunelModel, CountingModel, Model, ModelKind, VogelsModel};
use snn_core::plasticity::DEFAULT_WINDOW;
use snn_core::verify::{self, Suite};
use snn_core::{
    DeliveryStrategy, HistoryBits, PlasticityStrategy, RasterSink, RasterWriter, SimClock, Simulation,
    StrategyConfig,
};

#[derive(Parser)]
#[command(name = "snn", version, about = "Spiking network benchmark and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (size x plasticity x delivery) matrix and emit one CSV row per run.
    Bench(BenchArgs),
    /// Build networks of increasing size and report setup time only.
    SetupBench(SetupArgs),
    /// Run the oracle and cross-strategy equivalence suites.
    Verify(VerifyArgs),
    /// Run a single simulation, optionally recording its spike raster.
    Run(RunArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// vogels, brunel, brunel+ or counting.
    #[arg(long, default_value = "brunel")]
    model: ModelKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Integration step in milliseconds (overrides the model constant).
    #[arg(long)]
    dt: Option<f64>,
    /// File of `key = value` model-constant overrides.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long = "slice-width", default_value_t = 1024)]
    slice_width: usize,
    /// Firing-history width in bits (32 or 64).
    #[arg(long, default_value_t = 64)]
    history: u32,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Target synapse counts, e.g. `1e5,1e6`.
    #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "1e6")]
    synapses: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "event")]
    plasticity: Vec<PlasticityStrategy>,
    #[arg(long, value_delimiter = ',', default_value = "sliced")]
    delivery: Vec<DeliveryStrategy>,
    /// Biological seconds per run.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SetupArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "1e6")]
    synapses: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// pivots, history, plasticity, delivery, models or all.
    #[arg(long, default_value = "all")]
    module: Suite,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Mutation fixture: run the suites against a deliberately broken window.
    #[arg(long, value_parser = ["off-by-one-window"])]
    inject_fault: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    synapses: f64,
    #[arg(long, default_value = "event")]
    plasticity: PlasticityStrategy,
    #[arg(long, default_value = "sliced")]
    delivery: DeliveryStrategy,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Raster destination (`step<TAB>neuron` per spike).
    #[arg(long = "record-spikes")]
    record_spikes: Option<PathBuf>,
}

/// One benchmark run. The header order is the field order below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub model: String,
    pub neurons: usize,
    pub synapses: usize,
    pub plasticity: String,
    pub delivery: String,
    pub chunk_size: usize,
    pub history_bits: u32,
    pub dt_ms: f64,
    pub bio_seconds: f64,
    pub wall_ms: f64,
    pub setup_ms: f64,
    pub total_spikes: u64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetupRecord {
    pub model: String,
    pub neurons: usize,
    pub synapses: usize,
    pub setup_ms: f64,
    pub graph_hash: String,
    pub seed: u64,
    pub workers: usize,
}

enum Failure {
    Usage(String),
    Verification,
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Accepts plain integers and scientific notation such as `1e6`.
fn parse_count(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(v.is_finite() && v >= 1.0) {
        return Err(format!("`{s}` must be at least 1"));
    }
    Ok(v)
}

fn constants(args: &ModelArgs) -> Result<ModelConstants, Failure> {
    let mut c = ModelConstants::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        c.apply_config(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(dt) = args.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(usage("--dt must be positive"));
        }
        c.vogels.dt_ms = dt;
        c.brunel.dt_ms = dt;
    }
    Ok(c)
}

fn strategy(engine: &EngineArgs, plasticity: PlasticityStrategy, delivery: DeliveryStrategy) -> Result<StrategyConfig, Failure> {
    let history = HistoryBits::from_bits(engine.history).ok_or_else(|| usage("--history must be 32 or 64"))?;
    let cfg = StrategyConfig {
        plasticity,
        delivery,
        chunk_size: engine.slice_width,
        history,
        workers: engine.threads,
        ..Default::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Runs `$body` with `$m` bound to the concrete model selected by `$kind`.
macro_rules! with_model {
    ($kind:expr, $synapses:expr, $seed:expr, $c:expr, |$m:ident| $body:expr) => {{
        let c = $c;
        match $kind {
            ModelKind::Vogels => {
                let $m = VogelsModel::with_synapses($synapses, $seed, &c.vogels).map_err(|e| usage(e.to_string()))?;
                $body
            }
            ModelKind::Brunel | ModelKind::BrunelPlus => {
                let plastic = $kind == ModelKind::BrunelPlus;
                let $m = BrunelModel::with_synapses($synapses, plastic, $seed, &c.brunel, &c.stdp)
                    .map_err(|e| usage(e.to_string()))?;
                $body
            }
            ModelKind::Counting => {
                let n = ($synapses / 0.1).sqrt().round() as usize;
                let $m = CountingModel::new(n, 0.1, 3, 0.02, CountingModel::max_gap_for(64, 3), $seed)
                    .map_err(|e| usage(e.to_string()))?;
                $body
            }
        }
    }};
}

fn check_duration(d: f64) -> Result<(), Failure> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(usage("--duration must be a non-negative number of seconds"));
    }
    Ok(())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench_one<M: Model>(model: M, cfg: StrategyConfig, args: &BenchArgs) -> Result<BenchRecord, Failure> {
    let mut sim = Simulation::new(model, cfg.clone()).context("setting up network")?;
    let steps = SimClock::steps_for(args.duration, sim.model().dt_ms());
    let m = sim.run_steps(steps, None).context("running simulation")?;
    Ok(BenchRecord {
        model: sim.model().name().to_string(),
        neurons: sim.adjacency().num_neurons(),
        synapses: sim.adjacency().num_synapses(),
        plasticity: cfg.plasticity.to_string(),
        delivery: cfg.delivery.to_string(),
        chunk_size: cfg.chunk_size,
        history_bits: cfg.history.bits(),
        dt_ms: sim.model().dt_ms(),
        bio_seconds: sim.clock().biological_seconds(),
        wall_ms: m.wall_time.as_secs_f64() * 1e3,
        setup_ms: m.setup_time.as_secs_f64() * 1e3,
        total_spikes: m.total_spikes,
        seed: args.model.seed,
        workers: cfg.effective_workers(),
    })
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    check_duration(args.duration)?;
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let c = constants(&args.model)?;
    let mut out = csv::Writer::from_writer(output(&args.out)?);
    // Points run one after another so their timings never overlap.
    for &synapses in &args.synapses {
        for &p in &args.plasticity {
            for &d in &args.delivery {
                let cfg = strategy(&args.engine, p, d)?;
                for _ in 0..args.repeats {
                    let rec = with_model!(args.model.model, synapses, args.model.seed, &c, |m| bench_one(
                        m,
                        cfg.clone(),
                        &args
                    )?);
                    out.serialize(&rec).context("writing CSV")?;
                    out.flush().context("writing CSV")?;
                }
            }
        }
    }
    Ok(())
}

fn setup_one<M: Model>(model: M, cfg: StrategyConfig, seed: u64) -> Result<SetupRecord, Failure> {
    let sim = Simulation::new(model, cfg.clone()).context("setting up network")?;
    Ok(SetupRecord {
        model: sim.model().name().to_string(),
        neurons: sim.adjacency().num_neurons(),
        synapses: sim.adjacency().num_synapses(),
        setup_ms: sim.metrics().setup_time.as_secs_f64() * 1e3,
        graph_hash: sim.adjacency().content_hash(),
        seed,
        workers: cfg.effective_workers(),
    })
}

fn cmd_setup_bench(args: SetupArgs) -> Result<(), Failure> {
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let c = constants(&args.model)?;
    let cfg = strategy(&args.engine, PlasticityStrategy::EventDriven, DeliveryStrategy::Sliced)?;
    let mut out = csv::Writer::from_writer(output(&args.out)?);
    for &synapses in &args.synapses {
        for _ in 0..args.repeats {
            let seed = args.model.seed;
            let rec = with_model!(args.model.model, synapses, seed, &c, |m| setup_one(m, cfg.clone(), seed)?);
            out.serialize(&rec).context("writing CSV")?;
            out.flush().context("writing CSV")?;
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let window = match args.inject_fault.as_deref() {
        Some(_) => verify::off_by_one_window,
        None => DEFAULT_WINDOW,
    };
    let results = verify::run_suite(args.module, args.seed, window);
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        println!("{r}");
    }
    println!("{} checks, {failed} failed", results.len());
    if failed > 0 {
        return Err(Failure::Verification);
    }
    Ok(())
}

fn run_one<M: Model>(model: M, cfg: StrategyConfig, args: &RunArgs) -> Result<(), Failure> {
    // Open the raster first so a bad path fails before any work is done.
    let mut writer = match &args.record_spikes {
        Some(p) => Some(RasterWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let mut sim = Simulation::new(model, cfg).context("setting up network")?;
    let steps = SimClock::steps_for(args.duration, sim.model().dt_ms());
    let m = sim
        .run_steps(steps, writer.as_mut().map(|w| w as &mut dyn RasterSink))
        .context("running simulation")?;
    if let Some(w) = writer.as_mut() {
        w.flush().context("writing raster")?;
    }
    let clock = sim.clock();
    println!("model={}", sim.model().name());
    println!("neurons={}", sim.adjacency().num_neurons());
    println!("synapses={}", sim.adjacency().num_synapses());
    println!("steps={}", m.steps);
    println!("bio_seconds={}", clock.biological_seconds());
    println!("total_spikes={}", m.total_spikes);
    println!("setup_ms={:.3}", m.setup_time.as_secs_f64() * 1e3);
    println!("wall_ms={:.3}", m.wall_time.as_secs_f64() * 1e3);
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    check_duration(args.duration)?;
    if let Some(p) = &args.record_spikes {
        check_writable(p)?;
    }
    let c = constants(&args.model)?;
    let cfg = strategy(&args.engine, args.plasticity, args.delivery)?;
    with_model!(args.model.model, args.synapses, args.model.seed, &c, |m| run_one(m, cfg, &args))
}

fn check_writable(p: &Path) -> Result<(), Failure> {
    if p.is_dir() {
        return Err(Failure::Runtime(anyhow::anyhow!("{} is a directory", p.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Bench(a) => cmd_bench(a),
        Command::SetupBench(a) => cmd_setup_bench(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Run(a) => cmd_run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
