//! Parameter sweeps over the solvers.
//!
//! Every cell slices a leading `(n, m, z)` block out of one source matrix, trains
//! on it (untimed), then times `reps` solves with a monotonic clock. Cells whose
//! attribute count fits the exhaustive solver are checked against it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use tagmax_core::synthetic::{generate_synthetic, SyntheticSpec};
use tagmax_core::{
    solve, train, Algorithm, AlgorithmConfig, Budget, Dataset, Error, Model, Query, SolveOptions,
    TopK,
};

use crate::input::{load_dataset, Invalid};
use crate::{seconds, SmoothingArgs, SolverArgs};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVar {
    M,
    Z,
    N,
    /// Attributes per group of the two-tier solver.
    #[value(alias = "mprime")]
    GroupSize,
    Algorithm,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Source CSV; a synthetic matrix is generated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Products in the generated source matrix.
    #[arg(long, default_value_t = 10_000)]
    source_n: usize,
    /// Attributes in the generated source matrix.
    #[arg(long, default_value_t = 50)]
    source_m: usize,
    /// Tags in the generated source matrix.
    #[arg(long, default_value_t = 50)]
    source_r: usize,
    #[arg(long, default_value_t = 0)]
    source_seed: u64,

    #[arg(long, value_enum)]
    sweep: SweepVar,
    /// Comma-separated sweep values (algorithm names when sweeping the algorithm).
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Algorithms run in every cell (ignored when sweeping the algorithm).
    #[arg(long, value_delimiter = ',', default_value = "naive,ett")]
    algos: Vec<Algorithm>,

    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 12)]
    m: usize,
    /// Selected tags: the first `z` tags of the slice, all desirable.
    #[arg(long, default_value_t = 8)]
    z: usize,
    #[arg(short, long, default_value_t = 1)]
    k: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    smoothing: SmoothingArgs,

    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Seconds allowed per solve before the cell is marked timed out.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Skip the comparison against the exhaustive solver.
    #[arg(long)]
    no_verify: bool,
    /// Run cells concurrently; timings are then unreliable.
    #[arg(long)]
    parallel: bool,

    /// JSON-lines report.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// CSV mirror of the report.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Plain-text summary file; standard output when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
struct Cell {
    value: String,
    algorithm: Algorithm,
    n: usize,
    m: usize,
    z: usize,
    group_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub sweep: SweepVar,
    pub value: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    pub z: usize,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_size: Option<usize>,
    pub reps: usize,
    pub times_s: Vec<f64>,
    pub mean_time_s: Option<f64>,
    pub candidates_examined: Option<u64>,
    pub best_bits: Option<String>,
    pub score: Option<f64>,
    pub oracle_score: Option<f64>,
    /// `score / oracle_score`.
    pub ratio: Option<f64>,
    /// Guaranteed lower bound on `ratio`, for solvers that have one.
    pub bound: Option<f64>,
    /// Top-k identical to the exhaustive solver's (exact solvers only).
    pub matches_oracle: Option<bool>,
    pub timed_out: bool,
    pub error: Option<String>,
}

const CSV_COLUMNS: [&str; 18] = [
    "sweep",
    "value",
    "algorithm",
    "n",
    "m",
    "z",
    "k",
    "group_size",
    "reps",
    "mean_time_s",
    "candidates_examined",
    "best_bits",
    "score",
    "oracle_score",
    "ratio",
    "bound",
    "matches_oracle",
    "status",
];

impl Row {
    fn status(&self) -> String {
        if self.timed_out {
            "timed-out".into()
        } else if let Some(e) = &self.error {
            format!("error: {e}")
        } else if self.matches_oracle == Some(false)
            || self.bound.zip(self.ratio).is_some_and(|(b, r)| r < b)
        {
            "MISMATCH".into()
        } else {
            "ok".into()
        }
    }

    fn csv_record(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(T::to_string).unwrap_or_default()
        }
        vec![
            serde_json::to_value(self.sweep)
                .unwrap()
                .as_str()
                .unwrap()
                .to_string(),
            self.value.clone(),
            self.algorithm.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.z.to_string(),
            self.k.to_string(),
            opt(&self.group_size),
            self.reps.to_string(),
            opt(&self.mean_time_s),
            opt(&self.candidates_examined),
            opt(&self.best_bits),
            opt(&self.score),
            opt(&self.oracle_score),
            opt(&self.ratio),
            opt(&self.bound),
            opt(&self.matches_oracle),
            self.status(),
        ]
    }
}

fn cells(args: &BenchArgs) -> Result<Vec<Cell>> {
    let base = Cell {
        value: String::new(),
        algorithm: Algorithm::Ett,
        n: args.n,
        m: args.m,
        z: args.z,
        group_size: args.solver.group_size,
    };
    let mut out = Vec::new();
    for v in &args.values {
        let v = v.trim();
        let number = || {
            v.parse::<usize>()
                .map_err(|_| Invalid(format!("sweep value {v:?} is not a count")))
        };
        let mut cell = Cell {
            value: v.to_string(),
            ..base.clone()
        };
        let algos = match args.sweep {
            SweepVar::Algorithm => {
                vec![v.parse::<Algorithm>().map_err(|e| Invalid(e.to_string()))?]
            }
            _ => args.algos.clone(),
        };
        match args.sweep {
            SweepVar::M => cell.m = number()?,
            SweepVar::Z => cell.z = number()?,
            SweepVar::N => cell.n = number()?,
            SweepVar::GroupSize => cell.group_size = number()?,
            SweepVar::Algorithm => {}
        }
        for algorithm in algos {
            out.push(Cell {
                algorithm,
                ..cell.clone()
            });
        }
    }
    if out.is_empty() {
        return Err(Invalid("no sweep values".into()).into());
    }
    if args.reps == 0 {
        return Err(Invalid("--reps must be at least 1".into()).into());
    }
    Ok(out)
}

type SliceKey = (usize, usize, usize);

/// Trains one model per distinct slice, up front so cells only time solving.
fn models(source: &Dataset, cells: &[Cell], args: &BenchArgs) -> Result<HashMap<SliceKey, Model>> {
    let mut out = HashMap::new();
    for c in cells {
        let key = (c.n, c.m, c.z);
        if out.contains_key(&key) {
            continue;
        }
        let ds = source
            .slice(c.n, c.m, c.z)
            .map_err(|e| Invalid(e.to_string()))?;
        out.insert(key, train(&ds, &args.smoothing.spec())?);
    }
    Ok(out)
}

struct Runner<'a> {
    args: &'a BenchArgs,
    models: &'a HashMap<SliceKey, Model>,
    oracles: Mutex<HashMap<SliceKey, Option<TopK>>>,
}

impl Runner<'_> {
    fn query(&self, c: &Cell) -> Query {
        Query::desirable(0..c.z, self.args.k)
    }

    fn options(&self) -> Result<SolveOptions> {
        Ok(SolveOptions {
            trace: false,
            budget: Budget::from_timeout(Some(seconds(self.args.timeout)?)),
        })
    }

    fn oracle(&self, c: &Cell) -> Result<Option<TopK>> {
        let key = (c.n, c.m, c.z);
        if self.args.no_verify || c.m > self.args.solver.cap {
            return Ok(None);
        }
        if let Some(o) = self.oracles.lock().unwrap().get(&key) {
            return Ok(o.clone());
        }
        let model = &self.models[&key];
        let config = AlgorithmConfig::Naive {
            cap: self.args.solver.cap,
        };
        let top = match solve(model, &self.query(c), &config, &self.options()?) {
            Ok(t) => Some(t),
            Err(Error::TimedOut) => None,
            Err(e) => return Err(e.into()),
        };
        self.oracles.lock().unwrap().insert(key, top.clone());
        Ok(top)
    }

    fn run(&self, c: &Cell) -> Result<Row> {
        let model = &self.models[&(c.n, c.m, c.z)];
        let query = self.query(c);
        let mut solver = self.args.solver.clone();
        solver.group_size = c.group_size;
        let config = solver.config(c.algorithm);
        let mut row = Row {
            sweep: self.args.sweep,
            value: c.value.clone(),
            algorithm: c.algorithm,
            n: c.n,
            m: c.m,
            z: c.z,
            k: self.args.k,
            group_size: (c.algorithm == Algorithm::Ett && solver.groups.is_none())
                .then_some(c.group_size),
            reps: 0,
            times_s: Vec::new(),
            mean_time_s: None,
            candidates_examined: None,
            best_bits: None,
            score: None,
            oracle_score: None,
            ratio: None,
            bound: None,
            matches_oracle: None,
            timed_out: false,
            error: None,
        };
        let mut last = None;
        for _ in 0..self.args.reps {
            let options = self.options()?;
            let started = Instant::now();
            let result = solve(model, &query, &config, &options);
            let elapsed = started.elapsed();
            match result {
                Ok(top) => {
                    row.times_s.push(elapsed.as_secs_f64());
                    last = Some(top);
                }
                Err(Error::TimedOut) => {
                    row.timed_out = true;
                    break;
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    break;
                }
            }
        }
        row.reps = row.times_s.len();
        if row.reps > 0 {
            row.mean_time_s = Some(row.times_s.iter().sum::<f64>() / row.reps as f64);
        }
        let Some(top) = last else { return Ok(row) };
        row.candidates_examined = Some(top.stats.candidates_examined);
        row.best_bits = top.best().map(|e| e.bits.to_string());
        row.score = top.best().map(|e| e.score);
        if let AlgorithmConfig::Pa(pa) = &config {
            let zprime = pa.zprime.min(c.z) as f64;
            row.bound = Some(zprime / (c.z as f64 * (1.0 + pa.effective_epsilon(c.m)?)));
        }
        if row.timed_out || row.error.is_some() {
            return Ok(row);
        }
        if let Some(oracle) = self.oracle(c)? {
            row.oracle_score = oracle.best().map(|e| e.score);
            row.ratio = row.score.zip(row.oracle_score).map(|(s, o)| s / o);
            if matches!(c.algorithm, Algorithm::Naive | Algorithm::Ett) {
                row.matches_oracle = Some(top.entries == oracle.entries);
            }
        }
        Ok(row)
    }
}

fn source(args: &BenchArgs) -> Result<Dataset> {
    match &args.data {
        Some(path) => load_dataset(path),
        None => Ok(generate_synthetic(&SyntheticSpec::new(
            args.source_n,
            args.source_m,
            args.source_r,
            args.source_seed,
        ))?),
    }
}

pub fn run_bench(args: &BenchArgs) -> Result<Vec<Row>> {
    let cells = cells(args)?;
    let source = source(args)?;
    let models = models(&source, &cells, args)?;
    let runner = Runner {
        args,
        models: &models,
        oracles: Mutex::default(),
    };
    if !args.parallel {
        return cells.iter().map(|c| runner.run(c)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Row>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let workers = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(cells.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                *slots[i].lock().unwrap() = Some(runner.run(&cells[i]));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every cell ran"))
        .collect()
}

pub fn summary(args: &BenchArgs, rows: &[Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "sweep {} over {} | n={} m={} z={} k={} reps={}",
        args.sweep
            .to_possible_value()
            .expect("no skipped variants")
            .get_name(),
        args.values.join(","),
        args.n,
        args.m,
        args.z,
        args.k,
        args.reps
    );
    let _ = writeln!(
        s,
        "{:>8} {:>6} {:>12} {:>12} {:>9} {:>9} {:>7}  status",
        "value", "algo", "mean time", "candidates", "of 2^m", "score", "ratio"
    );
    for r in rows {
        let time = r
            .mean_time_s
            .map_or("-".into(), |t| format!("{:.3}ms", t * 1e3));
        let cand = r.candidates_examined.map_or("-".into(), |c| c.to_string());
        let frac = r.candidates_examined.map_or("-".into(), |c| {
            format!("{:.2}%", 100.0 * c as f64 / 2f64.powi(r.m as i32))
        });
        let score = r.score.map_or("-".into(), |x| format!("{x:.4}"));
        let ratio = r.ratio.map_or("-".into(), |x| format!("{x:.4}"));
        let _ = writeln!(
            s,
            "{:>8} {:>6} {:>12} {:>12} {:>9} {:>9} {:>7}  {}",
            r.value,
            r.algorithm.to_string(),
            time,
            cand,
            frac,
            score,
            ratio,
            r.status()
        );
    }
    s
}

pub fn run(args: BenchArgs) -> Result<()> {
    let rows = run_bench(&args)?;
    if let Some(path) = &args.out {
        let mut text = String::new();
        for r in &rows {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.csv {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(CSV_COLUMNS)?;
        for r in &rows {
            w.write_record(r.csv_record())?;
        }
        w.flush()?;
    }
    let text = summary(&args, &rows);
    match &args.summary {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}
