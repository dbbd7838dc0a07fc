//! Command-line front end: calibrate, build, solve, simulate, sweep, compare
//! and validate, each writing its outputs plus a `<out>.manifest.json`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::calibration::{align_saturation_shift, calibrate, ingest_ops_records, CalibrationInputs, IngestOptions, MeanStd};
use crate::config::Airport;
use crate::dynamics::{build_transition_model, cache_path, load_cached, save_cached, BuildOptions, TransitionModel};
use crate::error::{Error, Result};
use crate::evaluator::{
    compare_frontiers, model_throughput_curve, parse_grid, read_frontier_csv, simulate, stationary_metrics, sweep,
    write_frontier_csv, write_reduction_csv, FrontierPoint, MetricsReport, SimOptions, SweepKind, SweepRequest,
};
use crate::optimizer::{build_cost_vector, extract_policy, solve_average_cost, write_solution_csv, Policy};
use crate::policies::{threshold_policy, MlsController, Observer, PolicyController, ThresholdController};
use crate::topology::FairnessMode;

const GRID_HELP: &str = "Grid: `log:lo:hi:n` (n geometric points), `lin:lo:hi:n` (n evenly spaced points) \
                         or a comma list such as `1,2,5`; endpoints are included. Join segments with `+`, \
                         as in `log:1:1000:31+lin:4.5:7.5:31`, to merge them into one sorted grid";

#[derive(Parser, Debug)]
#[command(name = "tarmac", version, about = "Departure spot-release control: calibrate, optimize, evaluate")]
struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ops records (flights and per-minute counts) to model parameters JSON.
    Calibrate(CalibrateArgs),
    /// Build the transition model, cache it and write its statistics.
    Build(BuildArgs),
    /// Solve the average-cost problem for one beta and write the policy.
    Solve(SolveArgs),
    /// Simulate one controller and write its metrics.
    Simulate(SimulateArgs),
    /// Evaluate a family of policies over a grid and write the frontier.
    #[command(after_help = GRID_HELP)]
    Sweep(SweepArgs),
    /// Percent reduction in taxiing aircraft between two frontiers.
    Compare(CompareArgs),
    /// Model throughput curve against ops data, with the aligning shift.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    flights: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pushback_mean: f64,
    #[arg(long, default_value_t = 1.33)]
    pushback_std: f64,
    #[arg(long, default_value_t = 1.04)]
    clearance_wait_std: f64,
    #[arg(long, default_value_t = 14)]
    saturation_threshold: u32,
    #[arg(long, default_value_t = 4)]
    light_threshold: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Airport JSON configuration.
    #[arg(long)]
    airport: PathBuf,
    /// none, alternation or statistical; defaults to the configuration's mode.
    #[arg(long)]
    fairness: Option<FairnessMode>,
    /// Transition cache directory; overrides TARMAC_CACHE_DIR.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Copy)]
struct SimArgs {
    /// Total steps, warmup included.
    #[arg(long, default_value_t = 1_010_000)]
    steps: u64,
    #[arg(long, default_value_t = 10_000)]
    warmup: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    batches: u64,
}

impl SimArgs {
    fn options(self) -> SimOptions {
        SimOptions { steps: self.steps, warmup: self.warmup, seed: self.seed, batches: self.batches }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// `threshold:TH`, `optimal:BETA` or `mls:BETA:LEVEL`.
    #[arg(long)]
    controller: String,
    #[command(flatten)]
    sim: SimArgs,
    /// Analyse Markov controllers exactly instead of simulating.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// beta, threshold or mls.
    #[arg(long)]
    kind: SweepKind,
    #[arg(long)]
    grid: String,
    /// Observation level for MLS sweeps.
    #[arg(long)]
    level: Option<String>,
    /// Simulate Markov policies instead of analysing them exactly.
    #[arg(long)]
    simulate: bool,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    optimal: PathBuf,
    #[arg(long)]
    benchmark: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    flights: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, default_value_t = 14)]
    saturation_threshold: u32,
    #[arg(long, default_value_t = 4)]
    light_threshold: u32,
    /// Count bins observed for fewer minutes are left out of the alignment.
    #[arg(long, default_value_t = 30)]
    min_minutes: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RunManifest {
    config_hash: String,
    command: String,
    parameters: Vec<String>,
    tool_version: &'static str,
    seed: Option<u64>,
    outputs: Vec<String>,
    wall_clock_seconds: f64,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    details: serde_json::Value,
}

struct Run {
    command: &'static str,
    argv: Vec<String>,
    started: Instant,
}

impl Run {
    fn finish(&self, out: &Path, config_hash: &str, seed: Option<u64>, details: serde_json::Value) -> Result<()> {
        let manifest = RunManifest {
            config_hash: config_hash.to_string(),
            command: self.command.to_string(),
            parameters: self.argv.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            outputs: vec![out.display().to_string()],
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            details,
        };
        let mut path = out.as_os_str().to_owned();
        path.push(".manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(PathBuf::from(path), e))
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn json_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn file_hash(paths: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        h.update(fs::read(p).map_err(|e| Error::io(*p, e))?);
    }
    Ok(hex::encode(h.finalize()))
}

struct Loaded {
    airport: Airport,
    fairness: FairnessMode,
    model: TransitionModel,
}

fn load_model(args: &ModelArgs) -> Result<Loaded> {
    let airport = Airport::load(&args.airport)?;
    let fairness = args.fairness.unwrap_or(airport.config.fairness_mode);
    let topology = airport.topology_for(fairness);
    let cache_dir = args
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("TARMAC_CACHE_DIR").map(PathBuf::from));
    // Statistical fairness and none share the same model.
    let coding = if topology.has_turn() { "alternation" } else { "none" };
    let model = match cache_dir {
        Some(dir) => {
            let path = cache_path(&dir, &airport.config_hash(), coding);
            if path.exists() {
                log::info!("loading transition cache {}", path.display());
                load_cached(&path, &topology, &airport.params, airport.hash_bytes())?
            } else {
                let model = build_transition_model(&topology, &airport.params, BuildOptions::default())?;
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                save_cached(&model, airport.hash_bytes(), &path)?;
                model
            }
        }
        None => build_transition_model(&topology, &airport.params, BuildOptions::default())?,
    };
    Ok(Loaded { airport, fairness, model })
}

fn optimal_policy(l: &Loaded, beta: f64) -> Result<Policy> {
    let cost = build_cost_vector(&l.model, beta)?;
    let sol = solve_average_cost(&l.model, &cost, l.fairness)?;
    Ok(extract_policy(&sol, &l.model))
}

fn observer_for(l: &Loaded, level: &str) -> Result<Observer> {
    let scheme = l.airport.observation_scheme(level, l.model.topology())?;
    Observer::new(&l.model, scheme)
}

fn cmd_calibrate(a: &CalibrateArgs, run: &Run) -> Result<()> {
    let opts = IngestOptions { saturation_threshold: a.saturation_threshold, light_traffic_threshold: a.light_threshold };
    let stats = ingest_ops_records(&a.flights, &a.counts, &opts)?;
    for d in &stats.diagnostics {
        log::warn!("{}:{}: {}", d.file, d.line, d.message);
    }
    for w in &stats.warnings {
        log::warn!("{w}");
    }
    let inputs = CalibrationInputs {
        pushback: MeanStd::new(a.pushback_mean, a.pushback_std),
        clearance_wait_std: a.clearance_wait_std,
        ..CalibrationInputs::default()
    };
    let cal = calibrate(&stats, &inputs)?;
    let text = serde_json::to_string_pretty(&cal).map_err(|e| Error::Parse(e.to_string()))?;
    let mut w = create(&a.out)?;
    writeln!(w, "{text}").map_err(|e| Error::io(&a.out, e))?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    let hash = file_hash(&[&a.flights, &a.counts])?;
    run.finish(&a.out, &hash, None, serde_json::json!({ "statistics": json_value(&stats) }))
}

fn cmd_build(a: &BuildArgs, run: &Run) -> Result<()> {
    let started = Instant::now();
    let l = load_model(&a.model)?;
    let stats = serde_json::json!({
        "config_hash": l.airport.config_hash(),
        "fairness": l.fairness.to_string(),
        "states": l.model.num_states(),
        "decisions": l.model.num_decisions(),
        "state_decision_rows": l.model.num_choices(),
        "nonzeros": l.model.nonzero_count(),
        "max_row_error": l.model.max_row_error(),
        "seconds": started.elapsed().as_secs_f64(),
    });
    let mut w = create(&a.out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&stats).unwrap()).map_err(|e| Error::io(&a.out, e))?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    run.finish(&a.out, &l.airport.config_hash(), None, stats)
}

fn cmd_solve(a: &SolveArgs, run: &Run) -> Result<()> {
    let l = load_model(&a.model)?;
    let cost = build_cost_vector(&l.model, a.beta)?;
    let sol = solve_average_cost(&l.model, &cost, l.fairness)?;
    let policy = extract_policy(&sol, &l.model);
    let hash = l.airport.config_hash();
    let mut w = create(&a.out)?;
    writeln!(w, "# config_hash={hash}").map_err(|e| Error::io(&a.out, e))?;
    write_solution_csv(&mut csv::Writer::from_writer(w), &sol, &l.model, &policy)?;
    let details = serde_json::json!({
        "beta": a.beta,
        "fairness": l.fairness.to_string(),
        "objective": sol.objective,
        "balance_residual": sol.balance_residual,
        "total_mass": sol.total_mass(),
        "columns": sol.columns,
        "optimality_gap": sol.optimality_gap,
        "release_frequencies": sol.release_frequencies(l.model.topology().num_ramps()),
    });
    run.finish(&a.out, &hash, None, details)
}

fn parse_controller(spec: &str) -> Result<(String, Vec<String>)> {
    let mut parts = spec.split(':').map(str::to_string);
    let kind = parts.next().unwrap_or_default();
    let rest: Vec<String> = parts.collect();
    let arity = match kind.as_str() {
        "threshold" | "optimal" => 1,
        "mls" => 2,
        _ => 0,
    };
    if arity == 0 || rest.len() != arity {
        return Err(Error::Parse(format!(
            "bad controller `{spec}`: expected threshold:TH, optimal:BETA or mls:BETA:LEVEL"
        )));
    }
    Ok((kind, rest))
}

fn number(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("`{s}` is not a number")))
}

fn cmd_simulate(a: &SimulateArgs, run: &Run) -> Result<()> {
    let (kind, rest) = parse_controller(&a.controller)?;
    let l = load_model(&a.model)?;
    let opts = a.sim.options();
    let param = number(&rest[0])?;
    let report: MetricsReport = match kind.as_str() {
        "threshold" => {
            let th = rest[0]
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("threshold `{}` is not a nonnegative integer", rest[0])))?;
            if a.exact {
                stationary_metrics(&l.model, &threshold_policy(&l.model, th))?
            } else {
                simulate(&mut ThresholdController { threshold: th }, &l.model, &opts)?
            }
        }
        "optimal" => {
            let policy = optimal_policy(&l, param)?;
            if a.exact {
                stationary_metrics(&l.model, &policy)?
            } else {
                simulate(&mut PolicyController::new(policy), &l.model, &opts)?
            }
        }
        _ => {
            let policy = optimal_policy(&l, param)?;
            let observer = observer_for(&l, &rest[1])?;
            let mut ctl = MlsController::new(&policy, &observer);
            simulate(&mut ctl, &l.model, &opts)?
        }
    };
    let row = FrontierPoint { kind: kind.clone(), param, report, status: "ok".into() };
    let hash = l.airport.config_hash();
    write_frontier_csv(create(&a.out)?, &hash, &l.airport.ramp_names(), std::slice::from_ref(&row))?;
    let seed = (!row.report.exact).then_some(a.sim.seed);
    let details = serde_json::json!({ "controller": a.controller, "metrics": json_value(&row.report) });
    run.finish(&a.out, &hash, seed, details)
}

fn cmd_sweep(a: &SweepArgs, run: &Run) -> Result<()> {
    let grid = parse_grid(&a.grid)?;
    let l = load_model(&a.model)?;
    let observer = match (a.kind, &a.level) {
        (SweepKind::Mls, Some(level)) => Some(observer_for(&l, level)?),
        (SweepKind::Mls, None) => return Err(Error::Parameter("an MLS sweep needs --level".into())),
        _ => None,
    };
    let mut req = SweepRequest::new(a.kind, grid);
    req.fairness = l.fairness;
    req.observer = observer.as_ref();
    req.sim = a.sim.options();
    req.simulate_markov = a.simulate;
    let rows = sweep(&l.model, &req)?;
    let hash = l.airport.config_hash();
    write_frontier_csv(create(&a.out)?, &hash, &l.airport.ramp_names(), &rows)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} grid points failed", rows.len());
    }
    let simulated = a.kind == SweepKind::Mls || a.simulate;
    let details = serde_json::json!({
        "kind": a.kind.name(),
        "grid": a.grid,
        "fairness": l.fairness.to_string(),
        "level": a.level,
        "failed_points": failed,
    });
    run.finish(&a.out, &hash, simulated.then_some(a.sim.seed), details)
}

fn read_table(path: &Path) -> Result<crate::evaluator::FrontierTable> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_frontier_csv(BufReader::new(f))
}

fn cmd_compare(a: &CompareArgs, run: &Run) -> Result<()> {
    let opt = read_table(&a.optimal)?;
    let bench = read_table(&a.benchmark)?;
    let hash = opt.config_hash.clone().unwrap_or_default();
    if opt.config_hash != bench.config_hash {
        log::warn!("frontiers come from different configurations");
    }
    let curve = compare_frontiers(&opt.points, &bench.points)?;
    write_reduction_csv(create(&a.out)?, &hash, &curve)?;
    let pct: Vec<f64> = curve.iter().map(|p| p.pct_reduction).collect();
    let details = serde_json::json!({
        "min_pct": pct.iter().copied().fold(f64::INFINITY, f64::min),
        "max_pct": pct.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "rate_range": [curve.first().map(|p| p.rate), curve.last().map(|p| p.rate)],
    });
    run.finish(&a.out, &hash, None, details)
}

fn cmd_validate(a: &ValidateArgs, run: &Run) -> Result<()> {
    let l = load_model(&a.model)?;
    let t = l.model.topology();
    let max_count = (t.num_ramps() + t.num_cells()) as u32 + t.buffer_capacity();
    let reports: Vec<MetricsReport> = (0..=max_count)
        .map(|th| stationary_metrics(&l.model, &threshold_policy(&l.model, th)))
        .collect::<Result<_>>()?;
    let model_curve = model_throughput_curve(&reports);
    let opts = IngestOptions { saturation_threshold: a.saturation_threshold, light_traffic_threshold: a.light_threshold };
    let stats = ingest_ops_records(&a.flights, &a.counts, &opts)?;
    let data_curve: Vec<(u32, f64)> = stats
        .throughput_curve
        .iter()
        .filter(|p| p.minutes >= a.min_minutes)
        .map(|p| (p.count, p.mean_rate))
        .collect();
    let shift = align_saturation_shift(&model_curve, &data_curve)?;
    let hash = l.airport.config_hash();
    let mut w = create(&a.out)?;
    writeln!(w, "# config_hash={hash}").map_err(|e| Error::io(&a.out, e))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["count", "model_rate", "data_rate_shifted"])?;
    for &(n, rate) in &model_curve {
        let data = data_curve
            .iter()
            .find(|p| i64::from(p.0) == i64::from(n) + i64::from(shift))
            .map_or(String::new(), |p| p.1.to_string());
        out.write_record([n.to_string(), rate.to_string(), data])?;
    }
    out.flush().map_err(|e| Error::io(&a.out, e))?;
    log::info!("data curve aligns with the model at a shift of {shift} aircraft");
    run.finish(&a.out, &hash, None, serde_json::json!({ "shift": shift }))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    let command = match &cli.command {
        Command::Calibrate(_) => "calibrate",
        Command::Build(_) => "build",
        Command::Solve(_) => "solve",
        Command::Simulate(_) => "simulate",
        Command::Sweep(_) => "sweep",
        Command::Compare(_) => "compare",
        Command::Validate(_) => "validate",
    };
    let run = Run {
        command,
        argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        started: Instant::now(),
    };
    let result = match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a, &run),
        Command::Build(a) => cmd_build(a, &run),
        Command::Solve(a) => cmd_solve(a, &run),
        Command::Simulate(a) => cmd_simulate(a, &run),
        Command::Sweep(a) => cmd_sweep(a, &run),
        Command::Compare(a) => cmd_compare(a, &run),
        Command::Validate(a) => cmd_validate(a, &run),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controller_specs() {
        assert_eq!(parse_controller("threshold:3").unwrap(), ("threshold".into(), vec!["3".into()]));
        assert_eq!(parse_controller("mls:20:level_two").unwrap().1, vec!["20", "level_two"]);
        assert!(parse_controller("mls:20").is_err());
        assert!(parse_controller("greedy:1").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["tarmac", "sweep", "--bogus"]), 2);
        assert_eq!(run(["tarmac"]), 2);
        assert_eq!(run(["tarmac", "--help"]), 0);
    }

    #[test]
    fn domain_errors_exit_one() {
        assert_eq!(run(["tarmac", "compare", "--optimal", "/nonexistent/a.csv", "--benchmark", "b.csv", "--out", "c.csv"]), 1);
    }
}
