//! `tagmax`: generate data, train tag models, solve, benchmark and serve.
//!
//! Exit codes: 0 on success, 1 for invalid input or arguments, 2 for internal failures.

mod bench;
mod input;

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tagmax_core::synthetic::{generate_synthetic, SyntheticSpec};
use tagmax_core::{
    solve, train, worked_example, Algorithm, AlgorithmConfig, Budget, EttConfig, GroupingMethod,
    HcConfig, Model, PaConfig, PriorMode, Query, SmoothingSpec, SolveOptions, TagGroupingMethod,
};

use crate::input::{classify, Invalid, ModelSource};

#[derive(Parser, Debug)]
#[command(
    name = "tagmax",
    version,
    about = "Design products that attract desirable tags"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic products-and-tags CSV.
    Gen(GenArgs),
    /// Fit per-tag classifiers on a CSV and save the model as JSON.
    Train(TrainArgs),
    /// Find the top-k attribute vectors for a set of tags and print them as JSON.
    Solve(SolveArgs),
    /// Run a parameter sweep and write a timing and quality report.
    Bench(bench::BenchArgs),
    /// Serve the HTTP API over a model.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Smallest number of attributes a tag depends on.
    #[arg(long)]
    relation_min: Option<usize>,
    /// Largest number of attributes a tag depends on.
    #[arg(long)]
    relation_max: Option<usize>,
    /// Write the built-in eight-product example instead of synthetic data.
    #[arg(long, conflicts_with_all = ["n", "m", "r", "seed"])]
    worked_example: bool,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SmoothingArgs {
    /// Weight of the m-estimate prior.
    #[arg(long, default_value_t = 1.0)]
    m_weight: f64,
    #[arg(long, value_enum, default_value = "class-prior")]
    prior_mode: PriorModeArg,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum PriorModeArg {
    Uniform,
    ClassPrior,
}

impl SmoothingArgs {
    pub fn spec(&self) -> SmoothingSpec {
        SmoothingSpec {
            m_weight: self.m_weight,
            prior_mode: match self.prior_mode {
                PriorModeArg::Uniform => PriorMode::Uniform,
                PriorModeArg::ClassPrior => PriorMode::ClassPrior,
            },
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    smoothing: SmoothingArgs,
}

/// Solver parameters shared by `solve` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Attributes per group for the two-tier solver.
    #[arg(long, default_value_t = 4)]
    group_size: usize,
    /// Number of attribute groups for the two-tier solver (overrides --group-size).
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long, value_enum, default_value = "contiguous")]
    grouping: GroupingArg,
    /// Tags per group for the approximation scheme.
    #[arg(long, default_value_t = 2)]
    zprime: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Compression factor; overrides the one derived from --epsilon.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "contiguous")]
    tag_grouping: GroupingArg,
    /// Hill-climbing restarts.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Moves per climb (default 10·m).
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest attribute count the exhaustive solver accepts.
    #[arg(long, default_value_t = tagmax_core::oracle::DEFAULT_NAIVE_CAP)]
    cap: usize,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum GroupingArg {
    Contiguous,
    Correlation,
}

impl SolverArgs {
    pub fn config(&self, algorithm: Algorithm) -> AlgorithmConfig {
        let correlated = matches!(self.grouping, GroupingArg::Correlation);
        match algorithm {
            Algorithm::Naive => AlgorithmConfig::Naive { cap: self.cap },
            Algorithm::Ett => AlgorithmConfig::Ett(EttConfig {
                group_size: self.group_size,
                groups: self.groups,
                method: if correlated {
                    GroupingMethod::Correlation
                } else {
                    GroupingMethod::Contiguous
                },
            }),
            Algorithm::Pa => AlgorithmConfig::Pa(PaConfig {
                zprime: self.zprime,
                epsilon: self.epsilon,
                sigma: self.sigma,
                method: match self.tag_grouping {
                    GroupingArg::Contiguous => TagGroupingMethod::Contiguous,
                    GroupingArg::Correlation => TagGroupingMethod::Correlation,
                },
            }),
            Algorithm::Hc => AlgorithmConfig::Hc(HcConfig {
                restarts: self.restarts,
                max_steps: self.max_steps,
                seed: self.seed,
            }),
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, alias = "algorithm", default_value = "ett")]
    algo: Algorithm,
    #[arg(short, long, default_value_t = 1)]
    k: usize,
    /// Comma-separated tag names; `name=w` sets a weight, a leading `!` marks the tag undesirable.
    #[arg(long)]
    tags: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Include the solver's step-by-step trace.
    #[arg(long)]
    trace: bool,
    /// Give up after this many seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    pretty: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, env = "TAGMAX_HOST", default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "TAGMAX_PORT", default_value_t = 8080)]
    port: u16,
    /// Per-request time budget in seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    #[arg(long, default_value_t = tagmax_core::oracle::DEFAULT_NAIVE_CAP)]
    naive_cap: usize,
}

pub fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| Invalid(format!("invalid duration {s}")).into())
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let ds = if args.worked_example {
        worked_example()
    } else {
        let mut spec = SyntheticSpec::new(args.n, args.m, args.r, args.seed);
        if let Some(lo) = args.relation_min {
            spec.relation_size_range.0 = lo;
        }
        if let Some(hi) = args.relation_max {
            spec.relation_size_range.1 = hi;
        }
        generate_synthetic(&spec)?
    };
    write_output(args.out.as_ref(), &ds.to_csv_string())
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let ds = input::load_dataset(&args.data)?;
    let model = train(&ds, &args.smoothing.spec())?;
    model.save(&args.out)?;
    eprintln!(
        "trained {} tags over {} attributes from {} products",
        model.r(),
        model.m(),
        model.n_rows
    );
    Ok(())
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let model: Model = args.source.load()?;
    let query = Query::parse(&model, &args.tags, args.k)?;
    let options = SolveOptions {
        trace: args.trace,
        budget: Budget::from_timeout(args.timeout.map(seconds).transpose()?),
    };
    let top = solve(&model, &query, &args.solver.config(args.algo), &options)?;
    let mut text = if args.pretty {
        serde_json::to_string_pretty(&top)?
    } else {
        serde_json::to_string(&top)?
    };
    text.push('\n');
    write_output(None, &text)
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let model = args.source.load()?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| Invalid(format!("invalid listen address: {e}")))?;
    let config = tagmax_service::ServiceConfig {
        naive_cap: args.naive_cap,
        timeout: Some(seconds(args.timeout)?),
    };
    let state = tagmax_service::AppState::with_model(model, config);
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(tagmax_service::serve(addr, state))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train_cmd(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Bench(a) => bench::run(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
