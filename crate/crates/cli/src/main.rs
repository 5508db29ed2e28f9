//! Command-line front end: table synthesis, primitive-sequence simulation,
//! planning and airspeed invariance analysis.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration or input error,
//! 3 synthesis failure, 4 infeasible sequence, 5 no path, 6 envelope violated.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use glidesafe::analysis::{analyze, parse_envelope_kts, InvarianceReport};
use glidesafe::config::{ConfigError, GridName, GridSpec, RunConfig};
use glidesafe::planner::{plan, random_sequence, run_course_changes, PlanError, PlanProblem};
use glidesafe::primitives::{synthesize_table, PrimitiveTable, TableError};
use glidesafe::sim::{read_csv, write_csv, SimState, Trajectory};
use glidesafe::units::{knots_to_ms, ms_to_knots};
use glidesafe::windframe::WindVector;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("{0}")]
    InfeasibleSequence(String),
    #[error("{0}")]
    NoPath(String),
    #[error("airspeed envelope violated by {0} samples")]
    Violations(u64),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Synthesis(_) => 3,
            CliError::InfeasibleSequence(_) => 4,
            CliError::NoPath(_) => 5,
            CliError::Violations(_) => 6,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn table_error(e: TableError) -> CliError {
    CliError::Config(e.to_string())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

#[derive(Parser)]
#[command(name = "glidesafe", version, about = "Airspeed-safe gliding guidance tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a table of certified maneuver primitives.
    Synthesize(SynthesizeArgs),
    /// Simulate an explicit or random primitive sequence.
    Simulate(SimulateArgs),
    /// Plan a primitive sequence to a goal region.
    Plan(PlanArgs),
    /// Airspeed statistics and envelope check over trajectory files.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GridChoice {
    Default,
    Ci,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Run configuration (JSON); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output table path; falls back to the configuration's outputs.table.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured maneuver grid.
    #[arg(long, value_enum)]
    grid: Option<GridChoice>,
    /// Worker threads.
    #[arg(long, env = "GLIDE_JOBS")]
    jobs: Option<usize>,
}

/// Ambient wind and initial state shared by `simulate` and `plan`.
#[derive(Args)]
struct FlightArgs {
    /// Run configuration providing wind, time step and seed defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wind speed in knots.
    #[arg(long)]
    wind_kts: Option<f64>,
    /// Bearing the wind blows from, in degrees.
    #[arg(long)]
    wind_from_deg: Option<f64>,
    /// Initial airspeed in knots; the table's reference airspeed by default.
    #[arg(long)]
    airspeed_kts: Option<f64>,
    /// Integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
}

impl FlightArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        Ok(match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        })
    }

    fn wind(&self, cfg: &RunConfig) -> Result<WindVector, CliError> {
        let speed = self.wind_kts.unwrap_or(cfg.wind.speed_kts);
        let from = self.wind_from_deg.unwrap_or(cfg.wind.direction_deg);
        if !(speed >= 0.0) || !from.is_finite() {
            return Err(CliError::Config(format!("invalid wind {speed} kt from {from} deg")));
        }
        Ok(WindVector::from_speed_direction(knots_to_ms(speed), from.to_radians()))
    }

    fn dt(&self, cfg: &RunConfig) -> Result<f64, CliError> {
        let dt = self.dt.unwrap_or(cfg.sim_dt_s);
        if !(dt > 0.0) {
            return Err(CliError::Config(format!("invalid time step {dt}")));
        }
        Ok(dt)
    }

    fn airspeed_ms(&self, table: &PrimitiveTable) -> f64 {
        knots_to_ms(self.airspeed_kts.unwrap_or(table.grid().ref_airspeed_kts))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    table: PathBuf,
    /// JSON file with the course changes to fly, in degrees.
    #[arg(long, conflicts_with_all = ["random", "min_duration_s"], required_unless_present_any = ["random", "min_duration_s"])]
    sequence: Option<PathBuf>,
    /// Number of random primitives.
    #[arg(long)]
    random: Option<usize>,
    /// Keep drawing random primitives until this much time is simulated.
    #[arg(long)]
    min_duration_s: Option<f64>,
    /// Seed of the random sequence; the configured seed by default.
    #[arg(long)]
    seed: Option<u64>,
    /// Initial pose "N,E,alt,course" in metres and degrees.
    #[arg(long, default_value = "0,0,1000,0", allow_hyphen_values = true)]
    start: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flight: FlightArgs,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    table: PathBuf,
    /// Initial pose "N,E,alt,course" in metres and degrees.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    /// Goal region "N,E,radius" in metres.
    #[arg(long, allow_hyphen_values = true)]
    goal: String,
    /// Plan output (JSON); the trajectory is written next to it as CSV.
    #[arg(long)]
    out: PathBuf,
    /// Trajectory CSV path, overriding the default next to the plan.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Branches below this altitude are abandoned.
    #[arg(long, default_value_t = 0.0)]
    altitude_floor_m: f64,
    #[arg(long, default_value_t = 20_000)]
    max_expansions: usize,
    #[command(flatten)]
    flight: FlightArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Airspeed envelope "LO:HI" in knots.
    #[arg(long)]
    envelope: String,
    /// Report output (JSON).
    #[arg(long)]
    report: PathBuf,
    /// Trajectory CSV files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

fn parse_floats<const N: usize>(text: &str, what: &str) -> Result<[f64; N], CliError> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("{what} must be {N} comma-separated numbers, got {text:?}")))?;
    let values: [f64; N] = values
        .try_into()
        .map_err(|_| CliError::Config(format!("{what} must be {N} comma-separated numbers, got {text:?}")))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{what} has non-finite values")));
    }
    Ok(values)
}

fn start_state(text: &str, airspeed_ms: f64) -> Result<SimState, CliError> {
    let [n, e, alt, course] = parse_floats::<4>(text, "start")?;
    Ok(SimState::at_rest(n, e, alt, airspeed_ms, course.to_radians()))
}

fn load_table(path: &Path) -> Result<PrimitiveTable, CliError> {
    PrimitiveTable::load(path).map_err(table_error)
}

fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    write_csv(traj, BufWriter::new(file)).map_err(|e| CliError::Other(e.to_string()))?;
    let meta = serde_json::to_string_pretty(&traj.meta).map_err(|e| CliError::Other(e.to_string()))?;
    write_file(&sidecar(path), &(meta + "\n"))
}

/// Metadata file written next to a trajectory CSV.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn synthesize(args: SynthesizeArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(choice) = args.grid {
        cfg.grid = GridSpec::Named(match choice {
            GridChoice::Default => GridName::Default,
            GridChoice::Ci => GridName::Ci,
        });
    }
    let out = args
        .out
        .or_else(|| cfg.outputs.table.clone())
        .ok_or_else(|| CliError::Config("no output path: pass --out or set outputs.table".into()))?;
    let (p, env, grid) = (cfg.aircraft_params()?, cfg.envelope()?, cfg.grid());
    let (h, s, opt) = (cfg.horizon(), cfg.surrogate(), cfg.optimizer());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Other(e.to_string()))?;
    let table = pool
        .install(|| synthesize_table(&p, &env, &grid, &h, &s, &opt))
        .map_err(|e| CliError::Synthesis(e.to_string()))?;
    table.save(&out).map_err(|e| CliError::Other(e.to_string()))?;

    let feasible: Vec<_> = table.entries.iter().filter(|e| e.feasible).collect();
    println!(
        "{} cases: {} feasible, {} infeasible",
        table.len(),
        feasible.len(),
        table.len() - feasible.len()
    );
    if !feasible.is_empty() {
        let lo = feasible.iter().map(|e| e.f_tilde_vmin).fold(f64::INFINITY, f64::min);
        let hi = feasible.iter().map(|e| -e.f_tilde_vmax).fold(f64::INFINITY, f64::min);
        println!("min tangency margin: {lo:.3e} m/s^2 at v_min, {hi:.3e} m/s^2 at v_max");
    }
    println!("fingerprint {}", table.fingerprint());
    println!("wrote {}", out.display());
    Ok(())
}

/// Sequence file: a list of course changes in degrees, bare or under
/// `dchi_deg`.
#[derive(Deserialize)]
#[serde(untagged)]
enum SequenceFile {
    Bare(Vec<f64>),
    Keyed { dchi_deg: Vec<f64> },
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = args.flight.config()?;
    let table = load_table(&args.table)?;
    let p = table.header.aircraft;
    let w = args.flight.wind(&cfg)?;
    let dt = args.flight.dt(&cfg)?;
    let start = start_state(&args.start, args.flight.airspeed_ms(&table))?;
    let infeasible = |e: PlanError| match e {
        PlanError::SequenceInfeasible { .. } => CliError::InfeasibleSequence(e.to_string()),
        other => CliError::Other(other.to_string()),
    };
    let traj = match &args.sequence {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let dchi_deg =
                match serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))? {
                    SequenceFile::Bare(v) | SequenceFile::Keyed { dchi_deg: v } => v,
                };
            let dchi: Vec<f64> = dchi_deg.iter().map(|d| d.to_radians()).collect();
            run_course_changes(&p, &table, &w, &start, &dchi, dt)
                .map_err(infeasible)?
                .1
        }
        None => {
            let seed = args.seed.unwrap_or(cfg.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let min_duration = args.min_duration_s.unwrap_or(f64::INFINITY);
            let max_prims = args.random;
            let (_, mut traj) =
                random_sequence(&p, &table, &w, &start, min_duration, max_prims, dt, &mut rng).map_err(infeasible)?;
            traj.meta.seed = Some(seed);
            traj
        }
    };
    save_trajectory(&traj, &args.out)?;
    let report =
        analyze(std::slice::from_ref(&traj), &table.header.envelope).map_err(|e| CliError::Other(e.to_string()))?;
    println!(
        "{} primitives, {:.1} s simulated, airspeed {:.2}..{:.2} kt, {} violations",
        traj.meta.primitive_dchi_deg.len(),
        traj.duration_s(),
        ms_to_knots(report.v_min_observed),
        ms_to_knots(report.v_max_observed),
        report.violation_count
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct PlanStep {
    dchi_deg: f64,
    gamma_g_deg: f64,
    horizon_s: f64,
    wind_kts: f64,
    wind_dir_deg: f64,
}

#[derive(Serialize)]
struct PlanOutput {
    fingerprint: String,
    start: [f64; 4],
    goal: [f64; 3],
    expansions: usize,
    duration_s: f64,
    end: [f64; 4],
    steps: Vec<PlanStep>,
}

fn plan_cmd(args: PlanArgs) -> Result<(), CliError> {
    let cfg = args.flight.config()?;
    let table = load_table(&args.table)?;
    let p = table.header.aircraft;
    let w = args.flight.wind(&cfg)?;
    let start = start_state(&args.start, args.flight.airspeed_ms(&table))?;
    let [gn, ge, radius] = parse_floats::<3>(&args.goal, "goal")?;
    let mut problem = PlanProblem::new(&table, start, gn, ge, radius, w);
    problem.altitude_floor_m = args.altitude_floor_m;
    problem.max_expansions = args.max_expansions;
    problem.dt = args.flight.dt(&cfg)?;
    let result = plan(&p, &problem).map_err(|e| match e {
        PlanError::NoPath { .. } => CliError::NoPath(e.to_string()),
        PlanError::InvalidProblem(_) => CliError::Config(e.to_string()),
        other => CliError::Other(other.to_string()),
    })?;
    let end = *result.trajectory.last().expect("trajectory is non-empty");
    let output = PlanOutput {
        fingerprint: table.fingerprint().to_owned(),
        start: parse_floats::<4>(&args.start, "start")?,
        goal: [gn, ge, radius],
        expansions: result.expansions,
        duration_s: result.trajectory.duration_s(),
        end: [end.north_m, end.east_m, end.alt_m, end.course_rad.to_degrees()],
        steps: result
            .primitives
            .iter()
            .map(|prim| PlanStep {
                dchi_deg: prim.maneuver.delta_course_rad.to_degrees(),
                gamma_g_deg: prim.gamma_g_star_rad.to_degrees(),
                horizon_s: prim.horizon_s,
                wind_kts: ms_to_knots(prim.maneuver.wind.horizontal_speed_ms()),
                wind_dir_deg: prim.maneuver.wind.from_direction_rad().to_degrees(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&output).map_err(|e| CliError::Other(e.to_string()))?;
    write_file(&args.out, &(text + "\n"))?;
    let csv = args.trajectory.unwrap_or_else(|| args.out.with_extension("csv"));
    save_trajectory(&result.trajectory, &csv)?;
    println!(
        "{} primitives, {:.1} s, {} expansions; wrote {} and {}",
        output.steps.len(),
        output.duration_s,
        output.expansions,
        args.out.display(),
        csv.display()
    );
    Ok(())
}

fn analyze_cmd(args: AnalyzeArgs) -> Result<(), CliError> {
    let env = parse_envelope_kts(&args.envelope)
        .ok_or_else(|| CliError::Config(format!("invalid envelope {:?}, expected LO:HI knots", args.envelope)))?;
    let trajs = args
        .files
        .iter()
        .map(|path| {
            let file = fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            read_csv(file).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report: InvarianceReport = analyze(&trajs, &env).map_err(|e| CliError::Config(e.to_string()))?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))?;
    write_file(&args.report, &(text + "\n"))?;
    println!(
        "{} samples from {} trajectories: airspeed {:.2}..{:.2} kt, mean {:.2} kt, sd {:.2} kt, {} violations",
        report.sample_count,
        report.trajectory_count,
        ms_to_knots(report.v_min_observed),
        ms_to_knots(report.v_max_observed),
        ms_to_knots(report.mean),
        ms_to_knots(report.stddev),
        report.violation_count
    );
    if report.violation_count > 0 {
        return Err(CliError::Violations(report.violation_count));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synthesize(a) => synthesize(a),
        Command::Simulate(a) => simulate(a),
        Command::Plan(a) => plan_cmd(a),
        Command::Analyze(a) => analyze_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
