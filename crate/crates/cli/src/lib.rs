//! Command-line harness: input generation, seeded runs in sequential or
//! parallel mode, certificate/oracle validation, JSON metrics and CSV sweeps.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or input error.

mod algo;
mod bench;
mod input;
mod report;

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use algo::{execute, Algo, Mode, Outcome, Run};
pub use bench::{bench_sweep, SeedRange};
pub use input::{generate, GenKind, Input};
pub use report::MetricsReport;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            _ => 2,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "incpar", version, about = "Deterministic parallel randomized incremental algorithms")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Seq,
    Par,
    /// Both modes; accepted by `bench` only.
    Both,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for generated inputs and the insertion order.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Execution mode (default `seq`; `bench` defaults to `both`).
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Worker threads for parallel mode.
    #[arg(long, global = true, env = "INCPAR_THREADS")]
    pub threads: Option<usize>,
    /// Check the result against a certificate or reference oracle.
    #[arg(long, global = true)]
    pub validate: bool,
    /// Append a one-line JSON metrics report to this file.
    #[arg(long, global = true)]
    pub metrics_out: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

/// Generated-size options shared by the geometric commands.
#[derive(Debug, Args)]
pub struct SizeArg {
    /// Number of generated elements (ignored when an input file is given).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge-list file: `n m [weighted]`, then `u v [w]` per line.
    #[arg(long, visible_alias = "input")]
    pub graph: Option<PathBuf>,
    /// Vertices of a generated graph.
    #[arg(long)]
    pub n: Option<usize>,
    /// Edges of a generated graph (default `4n`).
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sort keys by random-order BST insertion.
    Sort {
        #[command(flatten)]
        size: SizeArg,
        /// One integer key per line.
        #[arg(long, visible_alias = "input")]
        keys: Option<PathBuf>,
    },
    /// Delaunay triangulation; prints interior triangles as `id1 id2 id3`.
    Delaunay {
        #[command(flatten)]
        size: SizeArg,
        /// One `x y` pair per line.
        #[arg(long, visible_alias = "input")]
        points: Option<PathBuf>,
    },
    /// Two-dimensional linear program, maximising the objective.
    Lp {
        #[command(flatten)]
        size: SizeArg,
        /// One `a b c` triple per line, meaning `a x + b y <= c`.
        #[arg(long, visible_alias = "input")]
        constraints: Option<PathBuf>,
        /// Objective direction `a,b`.
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        objective: String,
    },
    /// Closest pair of points.
    ClosestPair {
        #[command(flatten)]
        size: SizeArg,
        #[arg(long, visible_alias = "input")]
        points: Option<PathBuf>,
    },
    /// Smallest enclosing disk.
    Seb {
        #[command(flatten)]
        size: SizeArg,
        #[arg(long, visible_alias = "input")]
        points: Option<PathBuf>,
    },
    /// Least-element lists of a weighted or unweighted digraph.
    LeLists {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Strongly connected components; prints `vertex component` lines.
    Scc {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Write a generated input file.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        /// Edge count for `graph` (default `4n`).
        #[arg(long)]
        m: Option<usize>,
        /// Give graph edges weights in (0, 1].
        #[arg(long)]
        weighted: bool,
    },
    /// Sweep algorithms x sizes x seeds x modes; one CSV row per run.
    Bench {
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        algo: Vec<Algo>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Edge count for graph algorithms (default `4n`).
        #[arg(long)]
        m: Option<usize>,
        /// Inclusive seed range `a..b`, or a single seed.
        #[arg(long, default_value = "1")]
        seeds: SeedRange,
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        objective: String,
    },
}

/// Parses argv and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("incpar: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let threads = match cli.global.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        t => t,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| dispatch_in_pool(cli))
}

fn single_mode(mode: Option<ModeArg>) -> Result<Mode, CliError> {
    match mode.unwrap_or(ModeArg::Seq) {
        ModeArg::Seq => Ok(Mode::Seq),
        ModeArg::Par => Ok(Mode::Par),
        ModeArg::Both => Err(CliError::Usage("--mode both is only accepted by bench".into())),
    }
}

pub(crate) fn parse_objective(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("--objective expects `a,b`, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

pub(crate) fn append_metrics(path: &Path, report: &MetricsReport) -> Result<(), CliError> {
    let line = serde_json::to_string(report).expect("metrics serialise");
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    writeln!(file, "{line}").map_err(io_err(path))
}

fn dispatch_in_pool(cli: Cli) -> Result<i32, CliError> {
    let g = &cli.global;
    let (algo, input) = match cli.command {
        Command::Gen { kind, n, m, weighted } => {
            let text = generate(kind, n, m, g.seed, weighted)?;
            write_output(g.output.as_deref(), &text)?;
            return Ok(0);
        }
        Command::Bench { algo, n, m, seeds, objective } => {
            let modes = match g.mode.unwrap_or(ModeArg::Both) {
                ModeArg::Seq => vec![Mode::Seq],
                ModeArg::Par => vec![Mode::Par],
                ModeArg::Both => vec![Mode::Seq, Mode::Par],
            };
            let plan =
                bench::Plan { algos: algo, sizes: n, edges: m, seeds, modes, objective: parse_objective(&objective)? };
            let table = bench_sweep(&plan, g.validate, g.metrics_out.as_deref())?;
            write_output(g.output.as_deref(), &table.csv)?;
            return Ok(if table.failed_rows == 0 { 0 } else { 1 });
        }
        Command::Sort { size, keys } => (Algo::Sort, input::load_keys(keys.as_deref(), size.n, g.seed)?),
        Command::Delaunay { size, points } => (Algo::Delaunay, input::load_points(points.as_deref(), size.n, g.seed)?),
        Command::ClosestPair { size, points } => {
            (Algo::ClosestPair, input::load_points(points.as_deref(), size.n, g.seed)?)
        }
        Command::Seb { size, points } => (Algo::Seb, input::load_points(points.as_deref(), size.n, g.seed)?),
        Command::Lp { size, constraints, objective } => {
            let objective = parse_objective(&objective)?;
            (Algo::Lp, input::load_constraints(constraints.as_deref(), size.n, g.seed, objective)?)
        }
        Command::LeLists { graph } => (Algo::LeLists, input::load_graph(&graph, g.seed, true)?),
        Command::Scc { graph } => (Algo::Scc, input::load_graph(&graph, g.seed, false)?),
    };
    let mode = single_mode(g.mode)?;
    let run = execute(algo, &input, mode, g.seed, g.validate)?;
    let report = MetricsReport::new(algo, &input, g.seed, mode, &run);
    if let Some(path) = &g.metrics_out {
        append_metrics(path, &report)?;
    }
    if let Some(Err(msg)) = &run.validation {
        return Err(CliError::Validation(msg.clone()));
    }
    write_output(g.output.as_deref(), &run.outcome.render())?;
    Ok(0)
}
