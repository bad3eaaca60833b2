//! `nmsim`: compile, run, check and size neuron machine networks.
//!
//! Exit codes: 0 success, 1 divergence or validation failure, 2 usage error,
//! 3 numerical instability.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use neuron_machine::diff::diff_runs;
use neuron_machine::fsutil::write_atomic;
use neuron_machine::gen::{generate, GenParams, InDegree};
use neuron_machine::image::{read_image, write_image};
use neuron_machine::net::{parse_network, MAX_ACDN_DELAY, MAX_ACDS_DELAY};
use neuron_machine::perf::{perf_estimate, perf_estimate_compiled, PerfEstimate};
use neuron_machine::record::{
    histogram_to_csv, traces_to_text, weight_histogram, Cadence, FinalState, ProbeSpec, Raster, RunOutput,
};
use neuron_machine::{
    build_images, oracle_run, CompileParams, Engine, Error, MatchMode, NetworkDescription, OracleConfig, Stimulus,
};

const RASTER_FILE: &str = "raster.csv";
const TRACES_FILE: &str = "traces.csv";
const WEIGHTS_FILE: &str = "weights.csv";
const FINAL_FILE: &str = "final_state.txt";
const SUMMARY_FILE: &str = "summary.txt";

#[derive(Parser)]
#[command(name = "nmsim", version, about = "Neuron machine network compiler and emulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a network file and write its compiled image directory.
    Compile(CompileArgs),
    /// Execute a compiled image.
    Run(RunArgs),
    /// Simulate a network file with the dense reference simulator.
    Oracle(OracleArgs),
    /// Compare two run output directories (or two raster files).
    Diff(DiffArgs),
    /// Estimate wall time per model second from the clock-count model.
    Perf(PerfArgs),
    /// Print the lane layout summary of a compiled image.
    Inspect(InspectArgs),
    /// Write a seeded random network file.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct HwArgs {
    /// Hardware neurons.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    n_hn: u32,
    /// Lanes per hardware neuron.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    p: u32,
    /// Model clock frequency.
    #[arg(long, default_value_t = 300e6, value_parser = positive_f64)]
    clock_hz: f64,
    /// Neuron timesteps per network timestep.
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u32).range(1..))]
    substeps: u32,
}

impl HwArgs {
    fn params(&self) -> CompileParams {
        CompileParams { n_hn: self.n_hn, p: self.p, clock_hz: self.clock_hz, substeps: self.substeps }
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a positive number")),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a non-negative number")),
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("'{s}' is not in [0, 1]")),
    }
}

#[derive(Args)]
struct CompileArgs {
    /// Network description file.
    net: PathBuf,
    /// Output image directory.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CadenceArg {
    Step,
    Substep,
}

#[derive(Args)]
struct RecordArgs {
    /// Network timesteps to execute.
    #[arg(long)]
    steps: u64,
    /// Stimulus file (`timestep neuron_id current` per line).
    #[arg(long)]
    stimulus: Option<PathBuf>,
    /// Probe target, `neuron:<id>` or `synapse:<declaration index>`. Repeatable.
    #[arg(long = "probe")]
    probes: Vec<String>,
    #[arg(long, value_enum, default_value = "step")]
    cadence: CadenceArg,
    /// Also write the full final state.
    #[arg(long)]
    final_state: bool,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
}

impl RecordArgs {
    fn probe_spec(&self) -> anyhow::Result<ProbeSpec> {
        let mut spec = ProbeSpec {
            cadence: match self.cadence {
                CadenceArg::Step => Cadence::Step,
                CadenceArg::Substep => Cadence::Substep,
            },
            ..Default::default()
        };
        for p in &self.probes {
            spec.add_target(p)?;
        }
        Ok(spec)
    }

    fn stimulus(&self) -> anyhow::Result<Stimulus> {
        match &self.stimulus {
            None => Ok(Stimulus::new()),
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(Stimulus::parse(&text).with_context(|| format!("parsing {}", path.display()))?)
            }
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Compiled image directory.
    image: PathBuf,
    #[command(flatten)]
    rec: RecordArgs,
    /// Worker threads; 1 is the sequential reference schedule.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,
    /// Resume from this checkpoint instead of step 0.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Write a checkpoint after the last step.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Network description file.
    net: PathBuf,
    #[command(flatten)]
    rec: RecordArgs,
    /// Lane width defining the reduction order to reproduce.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    p: u32,
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u32).range(1..))]
    substeps: u32,
    /// Sum currents in reverse declaration order instead of the canonical order.
    #[arg(long)]
    tolerant: bool,
}

#[derive(Args)]
struct DiffArgs {
    a: PathBuf,
    b: PathBuf,
    /// Largest accepted deviation `|a - b| / max(1, |a|, |b|)` for trace values.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative_f64)]
    tolerance: f64,
}

#[derive(Args)]
struct PerfArgs {
    /// Use exact row counts from this compiled image.
    #[arg(long, conflicts_with_all = ["neurons", "synapses"])]
    image: Option<PathBuf>,
    #[arg(long, required_unless_present = "image")]
    neurons: Option<u64>,
    #[arg(long, required_unless_present = "image")]
    synapses: Option<u64>,
    #[command(flatten)]
    hw: HwArgs,
    /// Network timestep in milliseconds.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    dt_ms: f64,
}

#[derive(Args)]
struct InspectArgs {
    image: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    neurons: u32,
    /// `fixed:K`, `uniform:MIN:MAX` or `skewed:MEAN:MAX`.
    #[arg(long, default_value = "uniform:0:20", value_parser = parse_in_degree)]
    in_degree: InDegree,
    #[arg(long, default_value_t = 0.8, value_parser = fraction)]
    excitatory: f64,
    /// Fraction of neurons with a constant bias current.
    #[arg(long, default_value_t = 0.2, value_parser = fraction)]
    driven: f64,
    /// Bias current of driven neurons.
    #[arg(long, default_value_t = 10.0)]
    drive: f32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(0..=MAX_ACDS_DELAY as i64))]
    max_acds: u8,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u16).range(0..=MAX_ACDN_DELAY as i64))]
    max_acdn: u16,
    #[arg(long, default_value_t = 0.5, value_parser = fraction)]
    w_init_max: f64,
    /// Keep synapses grouped by target instead of shuffling declaration order.
    #[arg(long)]
    grouped: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output network file.
    #[arg(long, short)]
    out: PathBuf,
}

fn parse_in_degree(s: &str) -> Result<InDegree, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("'{s}' is not fixed:K, uniform:MIN:MAX or skewed:MEAN:MAX");
    let int = |x: &str| x.parse::<u32>().map_err(|_| bad());
    match parts[..] {
        ["fixed", k] => Ok(InDegree::Fixed(int(k)?)),
        ["uniform", a, b] if int(a)? <= int(b)? => Ok(InDegree::Uniform { min: int(a)?, max: int(b)? }),
        ["skewed", m, b] => match m.parse::<f64>() {
            Ok(mean) if mean >= 0.0 && mean.is_finite() => Ok(InDegree::Skewed { mean, max: int(b)? }),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

/// An error that maps to exit code 1 without further context.
#[derive(Debug)]
struct Failure(String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failure {}

fn read_net(path: &Path) -> anyhow::Result<NetworkDescription> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_network(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_text(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_outputs(
    rec: &RecordArgs,
    probes: &ProbeSpec,
    n_neurons: u32,
    start: u64,
    out: &RunOutput,
    final_state: &FinalState,
    weights: impl IntoIterator<Item = f32>,
) -> anyhow::Result<()> {
    let dir = &rec.out;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_text(dir, RASTER_FILE, &out.raster.to_csv())?;
    if !probes.is_empty() {
        write_text(dir, TRACES_FILE, &traces_to_text(&out.traces))?;
    }
    write_text(dir, WEIGHTS_FILE, &histogram_to_csv(&weight_histogram(weights)))?;
    if rec.final_state {
        write_text(dir, FINAL_FILE, &final_state.to_text())?;
    }
    let summary = format!(
        "n_neurons = {n_neurons}\nstart_step = {start}\nend_step = {}\nspikes = {}\n",
        final_state.t,
        out.raster.len()
    );
    write_text(dir, SUMMARY_FILE, &summary)
}

fn cmd_compile(args: &CompileArgs) -> anyhow::Result<()> {
    let desc = read_net(&args.net)?;
    let net = match build_images(&desc, &args.hw.params()) {
        Err(Error::Invalid(violations)) => {
            let mut msg = format!("{}: {} violation(s)", args.net.display(), violations.len());
            for v in &violations {
                msg.push_str("\n  ");
                msg.push_str(&v.0);
            }
            return Err(Failure(msg).into());
        }
        other => other?,
    };
    write_image(&net, &args.out)?;
    println!(
        "compiled {} neurons, {} synapses into {} (rows per lane: {}, null slots: {})",
        net.n_neurons,
        net.n_synapses,
        args.out.display(),
        net.max_rows(),
        net.null_slots()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let probes = args.rec.probe_spec()?;
    let stimulus = args.rec.stimulus()?;
    let net = read_image(&args.image)?;
    let mut engine = Engine::new(&net, args.workers as usize)?;
    if let Some(path) = &args.resume {
        engine.load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
    }
    let start = engine.t();
    let out = engine.run(args.rec.steps, &probes, &stimulus)?;
    if let Some(path) = &args.checkpoint {
        engine.save_checkpoint(path)?;
    }
    let final_state = engine.final_state();
    let origin = net.origin_index();
    let weights: Vec<f32> = final_state
        .synapses
        .iter()
        .zip(&origin)
        .map(|(s, &(h, l, r))| {
            let slot = &net.hns[h as usize].lanes[l as usize][r as usize];
            s.weight / net.synapse_attr_sets[&slot.attr_set].stdp.w_max
        })
        .collect();
    write_outputs(&args.rec, &probes, net.n_neurons, start, &out, &final_state, weights)?;
    println!("steps {}..{}: {} spikes", start, engine.t(), out.raster.len());
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> anyhow::Result<()> {
    let probes = args.rec.probe_spec()?;
    let stimulus = args.rec.stimulus()?;
    let desc = read_net(&args.net)?;
    let params = CompileParams { p: args.p, substeps: args.substeps, ..Default::default() };
    let config = OracleConfig { match_mode: if args.tolerant { MatchMode::Tolerant } else { MatchMode::Exact } };
    let run = match oracle_run(&desc, &params, args.rec.steps, &stimulus, &probes, config) {
        Err(Error::Invalid(v)) => return Err(Failure(Error::Invalid(v).to_string()).into()),
        other => other?,
    };
    let weights: Vec<f32> = run
        .final_state
        .synapses
        .iter()
        .zip(&desc.synapses)
        .map(|(s, d)| s.weight / desc.synapse_attr_sets[&d.attr_set].stdp.w_max)
        .collect();
    write_outputs(&args.rec, &probes, desc.n_neurons, 0, &run.output, &run.final_state, weights)?;
    println!("steps 0..{}: {} spikes", args.rec.steps, run.output.raster.len());
    Ok(())
}

struct RunFiles {
    raster: Raster,
    traces: String,
    summary: Option<String>,
}

fn load_run(path: &Path) -> anyhow::Result<RunFiles> {
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    if path.is_dir() {
        let raster = Raster::parse(&read(&path.join(RASTER_FILE))?)?;
        let mut traces = String::new();
        for name in [TRACES_FILE, FINAL_FILE] {
            let p = path.join(name);
            if p.exists() {
                traces.push_str(&read(&p)?);
            }
        }
        let summary = path.join(SUMMARY_FILE);
        let summary = if summary.exists() { Some(read(&summary)?) } else { None };
        Ok(RunFiles { raster, traces, summary })
    } else {
        Ok(RunFiles { raster: Raster::parse(&read(path)?)?, traces: String::new(), summary: None })
    }
}

fn cmd_diff(args: &DiffArgs) -> anyhow::Result<()> {
    let a = load_run(&args.a)?;
    let b = load_run(&args.b)?;
    if let (Some(sa), Some(sb)) = (&a.summary, &b.summary) {
        let dims = |s: &str| s.lines().filter(|l| !l.starts_with("spikes")).map(str::to_owned).collect::<Vec<_>>();
        if dims(sa) != dims(sb) {
            bail!(Error::Dimensions(format!("runs cover different networks or steps:\n{sa}vs\n{sb}")));
        }
    }
    let report = diff_runs(&a.raster, &b.raster, &a.traces, &b.traces, args.tolerance)?;
    if report.is_match() {
        println!("{report}");
        Ok(())
    } else {
        Err(Failure(report.to_string()).into())
    }
}

fn print_perf(e: &PerfEstimate) {
    let s = e.seconds_per_model_second;
    if s <= 1.0 {
        println!("{s:.1} (real time)");
    } else {
        println!("{s:.1} s per model s");
    }
    let bound = match e.neuron_clocks.cmp(&e.synapse_clocks) {
        std::cmp::Ordering::Equal => "balanced",
        std::cmp::Ordering::Greater => "neuron-bound",
        std::cmp::Ordering::Less => "synapse-bound",
    };
    println!(
        "neuron clocks per step: {}, synapse clocks per step: {} ({bound}), seconds per model second: {s}",
        e.neuron_clocks, e.synapse_clocks
    );
}

fn cmd_perf(args: &PerfArgs) -> anyhow::Result<()> {
    let estimate = match &args.image {
        Some(dir) => {
            let mut net = read_image(dir)?;
            net.params.clock_hz = args.hw.clock_hz;
            net.params.substeps = args.hw.substeps;
            perf_estimate_compiled(&net, args.dt_ms)
        }
        None => {
            let (n, s) = (args.neurons.unwrap_or(0), args.synapses.unwrap_or(0));
            perf_estimate(n, s, &args.hw.params(), args.dt_ms)
        }
    };
    print_perf(&estimate);
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> anyhow::Result<()> {
    let net = read_image(&args.image)?;
    println!("rows per lane: {}, null slots: {}", net.max_rows(), net.null_slots());
    println!(
        "neurons: {}, synapses: {}, HNs: {}, lanes per HN: {}",
        net.n_neurons, net.n_synapses, net.params.n_hn, net.params.p
    );
    for (h, hn) in net.hns.iter().enumerate() {
        println!(
            "hn {h}: neurons {}..{}, rows {}, null slots {}",
            hn.neurons.start,
            hn.neurons.end,
            hn.rows(),
            hn.null_slots()
        );
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let desc = generate(&GenParams {
        n_neurons: args.neurons,
        in_degree: args.in_degree,
        excitatory_fraction: args.excitatory,
        driven_fraction: args.driven,
        drive: args.drive,
        max_acds: args.max_acds,
        max_acdn: args.max_acdn,
        w_init_max: args.w_init_max as f32,
        shuffle: !args.grouped,
        seed: args.seed,
    });
    write_atomic(&args.out, desc.to_text().as_bytes())?;
    println!("wrote {} neurons, {} synapses to {}", desc.n_neurons, desc.synapses.len(), args.out.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Instability { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Perf(a) => cmd_perf(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
