//! Command implementations behind the `chansense` binary.
//!
//! Every command that writes a file also writes a [`RunManifest`] next to it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chansense::grid::build_grid;
use chansense::sim::{pareto_sweep, Simulator, SweepMode, SweepSettings};
use chansense::solver::{Improvement, Mode, Quadrature, Solution, Solver};
use chansense::{ChannelDesign, LikelihoodMask, Policy, ScenarioConfig, SolverOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod manifest;
mod output;

pub use manifest::{sha256_hex, RunManifest};
pub use output::{parse_lambdas, write_sweep_csv, write_trace_csv};

/// Parsed `--lambdas` value.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaList(pub Vec<f64>);

fn parse_lambda_list(s: &str) -> Result<LambdaList, String> {
    parse_lambdas(s).map(LambdaList)
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] chansense::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 I/O or parse, 2 validation, 3 non-convergence, 4 table/scenario mismatch.
    pub fn exit_code(&self) -> i32 {
        use chansense::Error as E;
        match self {
            CliError::Core(E::Validation(_)) => 2,
            CliError::Core(E::NonConvergence { .. }) => 3,
            CliError::Core(E::Mismatch(_)) => 4,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "chansense",
    version,
    about = "Sensor scheduling with informative channels"
)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file; prints OK or the list of violations.
    Validate { scenario: PathBuf },
    /// Solve for one λ and write tables, bounds and a manifest.
    Solve(SolveArgs),
    /// Solve and simulate every (mode, λ) pair and write a CSV.
    Sweep(SweepArgs),
    /// Simulate a solved table.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MaskArg {
    Full,
    Ms,
    Ch,
}

impl From<MaskArg> for LikelihoodMask {
    fn from(m: MaskArg) -> Self {
        match m {
            MaskArg::Full => LikelihoodMask::Full,
            MaskArg::Ms => LikelihoodMask::MeasurementsOnly,
            MaskArg::Ch => LikelihoodMask::ChannelOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignArg {
    Intermediate,
    Nonrobust,
}

impl From<DesignArg> for ChannelDesign {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Intermediate => ChannelDesign::Intermediate,
            DesignArg::Nonrobust => ChannelDesign::NonRobust,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Bbp,
    Vertex,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    if s == "avg" {
        return Ok(Mode::AverageCost);
    }
    let gamma = s
        .strip_prefix("disc:")
        .ok_or_else(|| format!("expected `avg` or `disc:<gamma>`, got `{s}`"))?
        .parse::<f64>()
        .map_err(|e| e.to_string())?;
    Ok(Mode::Discounted { gamma })
}

fn parse_improvement(s: &str) -> Result<Improvement, String> {
    if s == "exhaustive" {
        return Ok(Improvement::Exhaustive);
    }
    let list = s
        .strip_prefix("greedy:")
        .ok_or_else(|| format!("expected `exhaustive` or `greedy:N1,N2,...`, got `{s}`"))?;
    let schedule = list
        .split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Improvement::Greedy { schedule })
}

/// Options shared by `solve` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Grid resolution R (points have coordinates k/R).
    #[arg(long, default_value_t = 4)]
    pub grid: u32,
    /// `avg` or `disc:<gamma>`.
    #[arg(long, default_value = "avg", value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "intermediate")]
    pub design: DesignArg,
    /// Monte Carlo observations per action (split evenly over hidden states).
    #[arg(long, default_value_t = chansense::solver::DEFAULT_MC_SAMPLES)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iterations: usize,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            mode: self.mode,
            quadrature: Quadrature::MonteCarlo {
                samples: self.mc_samples,
                seed,
            },
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            design: self.design.into(),
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// `exhaustive` or `greedy:N1,N2,...`.
    #[arg(long, default_value = "exhaustive", value_parser = parse_improvement)]
    pub improve: Improvement,
    #[arg(long, value_enum, default_value = "full")]
    pub mask: MaskArg,
    #[arg(long)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// `start:step:stop` (inclusive) or a comma-separated list.
    #[arg(long, value_parser = parse_lambda_list)]
    pub lambdas: LambdaList,
    /// Comma-separated: optimal, greedy, bbp, fixed:<sensor>, ms, ch.
    #[arg(long, value_delimiter = ',', required = true)]
    pub modes: Vec<SweepMode>,
    #[arg(long, default_value_t = chansense::sim::DEFAULT_EPISODES)]
    pub episodes: usize,
    #[arg(long, default_value_t = chansense::sim::DEFAULT_HORIZON)]
    pub horizon: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Skip the tangent upper bound (the `reward_ub` column becomes NaN).
    #[arg(long)]
    pub no_upper_bound: bool,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Solution JSON written by `solve`.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "bbp")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = chansense::sim::DEFAULT_EPISODES)]
    pub episodes: usize,
    #[arg(long, default_value_t = chansense::sim::DEFAULT_HORIZON)]
    pub horizon: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-slot trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Runs a parsed command line, honouring `--threads`.
pub fn run(cli: Cli) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let threads = cli.threads;
    pool.install(|| match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario).map(|text| print!("{text}")),
        Command::Solve(args) => cmd_solve(&args, threads),
        Command::Sweep(args) => cmd_sweep(&args, threads),
        Command::Simulate(args) => cmd_simulate(&args, threads),
    })
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Scenario plus the raw bytes it was parsed from (for hashing).
fn load(path: &Path) -> CliResult<(ScenarioConfig, String)> {
    let text = read(path)?;
    Ok((ScenarioConfig::from_json_str(&text)?, text))
}

/// `validate`: returns the text to print on success.
pub fn cmd_validate(path: &Path) -> CliResult<String> {
    load(path)?;
    Ok("OK\n".into())
}

/// Per-grid-point entry of the bounds summary.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct PointBounds {
    pub belief: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub action: chansense::Action,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct BoundsSummary {
    pub lambda: f64,
    pub lower_bound_reward: f64,
    pub lower_bound_se: f64,
    pub upper_bound_reward: f64,
    /// Average-cost values are relative to the first grid point and are not
    /// ordered pointwise; discounted values are absolute.
    pub relative_values: bool,
    pub points: Vec<PointBounds>,
}

pub fn cmd_solve(args: &SolveArgs, threads: Option<usize>) -> CliResult<()> {
    let (config, text) = load(&args.scenario)?;
    let options = SolverOptions {
        improvement: args.improve.clone(),
        mask: args.mask.into(),
        ..args.solver.options(args.seed)
    };
    let grid = build_grid(config.n_states(), args.solver.grid);
    let solver = Solver::new(&config, &grid, &options)?;
    let mut solution = solver.solve(args.lambda)?;
    solver.compute_tangents(&mut solution);
    let upper = solver.upper_bound(&mut solution)?;
    let relative = matches!(options.mode, Mode::AverageCost);
    let points = bounds_per_point(&solution)?;
    let summary = BoundsSummary {
        lambda: args.lambda,
        lower_bound_reward: solution.lower_bound_reward,
        lower_bound_se: solution.lower_bound_se,
        upper_bound_reward: upper,
        relative_values: relative,
        points,
    };
    fs::create_dir_all(&args.out).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    write(
        &args.out.join("solution.json"),
        solution.to_json().as_bytes(),
    )?;
    let bounds = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&args.out.join("bounds.json"), bounds.as_bytes())?;
    let manifest = RunManifest::new(
        "solve",
        &args.scenario,
        &text,
        serde_json::json!({ "lambda": args.lambda, "grid": args.solver.grid, "solver": options }),
        vec![args.seed],
        threads,
    );
    write(
        &args.out.join("manifest.json"),
        manifest.to_json().as_bytes(),
    )?;
    if solution.degenerate_nodes > 0 {
        log::warn!(
            "{} quadrature nodes had a degenerate likelihood",
            solution.degenerate_nodes
        );
    }
    println!(
        "lambda {}: reward in [{}, {}] (lower-bound SE {})",
        args.lambda, summary.lower_bound_reward, summary.upper_bound_reward, summary.lower_bound_se
    );
    Ok(())
}

fn bounds_per_point(solution: &Solution) -> CliResult<Vec<PointBounds>> {
    let upper = solution
        .upper_values
        .as_ref()
        .ok_or(chansense::Error::MissingTangents)?;
    let table = &solution.table;
    Ok(table
        .grid
        .points()
        .iter()
        .enumerate()
        .map(|(i, b)| PointBounds {
            belief: b.probs().to_vec(),
            lower: table.values[i],
            upper: upper[i],
            action: solution.policy.actions[i].clone(),
        })
        .collect())
}

pub fn cmd_sweep(args: &SweepArgs, threads: Option<usize>) -> CliResult<()> {
    let (config, text) = load(&args.scenario)?;
    let settings = SweepSettings {
        grid_resolution: args.solver.grid,
        solver: args.solver.options(args.seed),
        episodes: args.episodes,
        horizon: args.horizon,
        base_seed: args.seed,
        upper_bound: !args.no_upper_bound,
    };
    let rows = pareto_sweep(&config, &args.lambdas.0, &args.modes, &settings)?;
    let failed = rows.iter().filter(|r| r.status.is_some()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} sweep cells failed; see the status column",
            rows.len()
        );
    }
    let names: Vec<String> = config.sensors.iter().map(|s| s.name.clone()).collect();
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows, &names).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    write(&args.out, &buf)?;
    let manifest = RunManifest::new(
        "sweep",
        &args.scenario,
        &text,
        serde_json::json!({
            "lambdas": args.lambdas.0,
            "modes": args.modes.iter().map(SweepMode::label).collect::<Vec<_>>(),
            "settings": settings,
        }),
        vec![args.seed],
        threads,
    );
    write(&sidecar(&args.out), manifest.to_json().as_bytes())?;
    Ok(())
}

/// `<file>.manifest.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

pub fn cmd_simulate(args: &SimulateArgs, threads: Option<usize>) -> CliResult<()> {
    let (config, text) = load(&args.scenario)?;
    let solution = Solution::from_json(&read(&args.table)?)?;
    solution.check_matches(&config)?;
    let policy = match args.policy {
        PolicyArg::Bbp => Policy::bbp(&solution),
        PolicyArg::Vertex => Policy::grid_vertex(&solution),
    };
    let design = solution.table.options.design;
    let lambda = solution.table.lambda;
    let sim = Simulator::new(&config, design);
    let metrics = sim.evaluate(&policy, lambda, args.episodes, args.horizon, args.seed)?;
    write(
        &args.out,
        serde_json::to_string_pretty(&metrics)
            .expect("metrics serialize")
            .as_bytes(),
    )?;
    if let Some(trace_path) = &args.trace {
        let mut file = fs::File::create(trace_path).map_err(|source| CliError::Io {
            path: trace_path.clone(),
            source,
        })?;
        let io_err = |source| CliError::Io {
            path: trace_path.clone(),
            source,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        output::write_trace_header(&mut w, &config).map_err(io_err)?;
        for e in 0..args.episodes {
            let trace =
                sim.run_episode(&policy, args.horizon, Simulator::episode_seed(args.seed, e))?;
            write_trace_csv(&mut w, e, &trace).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| io_err(e.into_error()))?;
        file.write_all(&bytes).map_err(io_err)?;
    }
    let manifest = RunManifest::new(
        "simulate",
        &args.scenario,
        &text,
        serde_json::json!({
            "table": args.table,
            "policy": format!("{:?}", args.policy).to_lowercase(),
            "episodes": args.episodes,
            "horizon": args.horizon,
            "lambda": lambda,
            "design": design,
        }),
        vec![args.seed],
        threads,
    );
    write(&sidecar(&args.out), manifest.to_json().as_bytes())?;
    Ok(())
}
