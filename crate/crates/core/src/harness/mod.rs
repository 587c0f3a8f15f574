//! Experiment harness: repeated seeded trials, aggregation and result files.
//!
//! Trial `k` of an experiment uses seed `base_seed + k`. Trials may run on a
//! thread pool; results are always merged in seed order so the output does
//! not depend on the worker count.

pub mod cli;
mod output;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algos::{run_policy, Algorithm, RunResult};
use crate::env::DEFAULT_GRID_SIZE;
use crate::prefmat::{generate_synthetic, GapProfile, PreferenceMatrix, SyntheticKind};
use crate::{Error, Result};

pub use output::{
    emit_csv, emit_json, load_overlay, load_trace_csv, resample, trace_csv_string, ExperimentMetadata,
    TrialSummary,
};
pub use svg::{bound_overlay, emit_svg, render_svg, PlotOptions, Series};

/// Environment variable capping the worker count (0 = one per core).
pub const THREADS_ENV: &str = "DUELBATCH_THREADS";

pub const DEFAULT_REPEATS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum MatrixSource {
    Csv { path: PathBuf },
    Synthetic { kind: SyntheticKind, k: usize, eps: f64, seed: u64 },
}

impl MatrixSource {
    pub fn load(&self) -> Result<PreferenceMatrix> {
        match self {
            MatrixSource::Csv { path } => PreferenceMatrix::load_csv(path),
            MatrixSource::Synthetic { kind, k, eps, seed } => generate_synthetic(*kind, *k, *eps, *seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Two,
    E,
}

/// Number of rounds: explicit, or `floor(log T) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundsSpec {
    Fixed(u32),
    Auto { offset: u32, base: LogBase },
}

impl RoundsSpec {
    pub fn auto() -> Self {
        RoundsSpec::Auto {
            offset: 0,
            base: LogBase::Two,
        }
    }

    pub fn with_base(self, base: LogBase) -> Self {
        match self {
            RoundsSpec::Auto { offset, .. } => RoundsSpec::Auto { offset, base },
            fixed => fixed,
        }
    }

    pub fn resolve(self, t: u64) -> u32 {
        match self {
            RoundsSpec::Fixed(b) => b,
            RoundsSpec::Auto { offset, base } => {
                let log = match base {
                    LogBase::Two => exact_floor_log2(t),
                    LogBase::E => (t as f64).ln().floor() as u32,
                };
                (log + offset).max(1)
            }
        }
    }
}

fn exact_floor_log2(t: u64) -> u32 {
    if t == 0 {
        0
    } else {
        63 - t.leading_zeros()
    }
}

impl fmt::Display for RoundsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundsSpec::Fixed(b) => write!(f, "{b}"),
            RoundsSpec::Auto { offset: 0, .. } => f.write_str("auto"),
            RoundsSpec::Auto { offset, .. } => write!(f, "auto+{offset}"),
        }
    }
}

impl FromStr for RoundsSpec {
    type Err = Error;

    /// `"16"`, `"auto"` or `"auto+6"` (base 2; see [`RoundsSpec::with_base`]).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Usage(format!("invalid round count {s:?} (expected N, auto or auto+N)"));
        if let Some(rest) = s.strip_prefix("auto") {
            let offset = match rest.strip_prefix('+') {
                Some(n) => n.parse().map_err(|_| bad())?,
                None if rest.is_empty() => 0,
                None => return Err(bad()),
            };
            return Ok(RoundsSpec::Auto {
                offset,
                base: LogBase::Two,
            });
        }
        match s.parse::<u32>() {
            Ok(b) if b >= 1 => Ok(RoundsSpec::Fixed(b)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub matrix: MatrixSource,
    pub algorithm: Algorithm,
    pub t: u64,
    pub rounds: RoundsSpec,
    pub repeats: usize,
    pub base_seed: u64,
    /// Replaces `f(K)` in the KL elimination threshold.
    pub f_override: Option<f64>,
    pub grid_size: usize,
    /// Worker cap; `None` defers to `DUELBATCH_THREADS`, 0 means one per core.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(matrix: MatrixSource, algorithm: Algorithm, t: u64) -> Self {
        Self {
            matrix,
            algorithm,
            t,
            rounds: RoundsSpec::auto(),
            repeats: DEFAULT_REPEATS,
            base_seed: 0,
            f_override: None,
            grid_size: DEFAULT_GRID_SIZE,
            threads: None,
        }
    }

    fn validate(&self, k: usize) -> Result<u32> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.t < k as u64 {
            return Err(Error::Config(format!("T = {} is smaller than K = {k}", self.t)));
        }
        if self.grid_size == 0 {
            return Err(Error::Config("checkpoint grid size must be at least 1".into()));
        }
        if self.base_seed.checked_add(self.repeats as u64 - 1).is_none() {
            return Err(Error::Config("seed range overflows u64".into()));
        }
        let b = self.rounds.resolve(self.t);
        if b == 0 {
            return Err(Error::Config("B must be at least 1".into()));
        }
        Ok(b)
    }

    fn worker_count(&self) -> usize {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
            .unwrap_or(0)
    }
}

/// Mean regret curve over trials on a common time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTrace {
    pub t: Vec<u64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (0 for a single trial).
    pub std: Vec<f64>,
    /// Final cumulative regret of each trial, in seed order.
    pub finals: Vec<f64>,
}

impl AggregateTrace {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_std(&self) -> f64 {
        self.std.last().copied().unwrap_or(0.0)
    }

    /// Mean regret at the largest grid point not exceeding `t`.
    pub fn mean_at(&self, t: u64) -> Option<f64> {
        let idx = self.t.partition_point(|&x| x <= t);
        idx.checked_sub(1).map(|i| self.mean[i])
    }
}

/// Aggregates trials that share a time grid. Sums run in seed order.
pub fn aggregate(results: &[RunResult]) -> Result<AggregateTrace> {
    let first = results.first().ok_or(Error::Usage("no trials to aggregate".into()))?;
    let grid = first.ledger.grid().to_vec();
    for r in results {
        if r.ledger.grid() != grid.as_slice() || r.ledger.grid_values().len() != grid.len() {
            return Err(Error::Config("trials do not share a complete checkpoint grid".into()));
        }
    }
    let n = results.len() as f64;
    let mut mean = Vec::with_capacity(grid.len());
    let mut std = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let m = results.iter().map(|r| r.ledger.grid_values()[idx]).sum::<f64>() / n;
        let s = if results.len() > 1 {
            let ss: f64 = results
                .iter()
                .map(|r| (r.ledger.grid_values()[idx] - m).powi(2))
                .sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        std.push(s);
    }
    Ok(AggregateTrace {
        t: grid,
        mean,
        std,
        finals: results.iter().map(|r| r.final_regret).collect(),
    })
}

/// Everything produced by one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: RunConfig,
    pub matrix: PreferenceMatrix,
    pub gap_profile: GapProfile,
    pub b: u32,
    pub q: f64,
    pub trials: Vec<RunResult>,
    pub trace: AggregateTrace,
    pub warnings: Vec<String>,
}

impl Experiment {
    pub fn summaries(&self) -> Vec<TrialSummary> {
        let winner = self.gap_profile.winner;
        self.trials
            .iter()
            .map(|r| TrialSummary {
                seed: r.seed,
                final_regret: r.final_regret,
                rounds_used: r.planning_rounds(),
                declared_winner: r.declared_winner,
                final_active: r.final_active.clone(),
                winner_eliminated: winner.is_some_and(|w| r.eliminations.iter().any(|e| e.arm == w)),
            })
            .collect()
    }
}

pub fn run_experiment(config: &RunConfig) -> Result<Experiment> {
    let matrix = config.matrix.load()?;
    run_experiment_on(config, matrix)
}

/// Runs `config` against an already loaded matrix (the config's source is only echoed).
pub fn run_experiment_on(config: &RunConfig, matrix: PreferenceMatrix) -> Result<Experiment> {
    let k = matrix.k();
    let b = config.validate(k)?;
    let q = (config.t as f64).powf(1.0 / b as f64);
    let gap_profile = matrix.condorcet_analysis();

    let mut warnings = Vec::new();
    if gap_profile.winner.is_none() {
        warnings.push("matrix has no Condorcet winner; regret is reported as zero".to_string());
    }
    if q < 2.0 - 1e-9 {
        warnings.push(format!("q = T^(1/B) = {q:.4} is below 2 (B = {b}); the regret guarantees assume q >= 2"));
    }

    let policy = config.algorithm.policy(config.f_override);
    let policy = policy.as_ref();
    let seeds: Vec<u64> = (0..config.repeats as u64).map(|i| config.base_seed + i).collect();
    let run_one = |&seed: &u64| run_policy(policy, &matrix, config.t, b, seed, config.grid_size);

    let threads = config.worker_count();
    let trials: Vec<RunResult> = if threads == 1 {
        seeds.iter().map(run_one).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(run_one).collect::<Result<_>>())?
    };

    let trace = aggregate(&trials)?;
    Ok(Experiment {
        config: config.clone(),
        matrix,
        gap_profile,
        b,
        q,
        trials,
        trace,
        warnings,
    })
}

/// What a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Rounds(Vec<RoundsSpec>),
    Algorithms(Vec<Algorithm>),
}

/// Runs one experiment per grid value; each cell reuses the base config's seeds.
pub fn sweep(base: &RunConfig, axis: &SweepAxis) -> Result<Vec<(String, Experiment)>> {
    let matrix = base.matrix.load()?;
    let cells: Vec<(String, RunConfig)> = match axis {
        SweepAxis::Rounds(list) => list
            .iter()
            .map(|&r| {
                let label = format!("{}-B{}", base.algorithm, r.resolve(base.t));
                (label, RunConfig { rounds: r, ..base.clone() })
            })
            .collect(),
        SweepAxis::Algorithms(list) => list
            .iter()
            .map(|&a| (a.to_string(), RunConfig { algorithm: a, ..base.clone() }))
            .collect(),
    };
    if cells.is_empty() {
        return Err(Error::Usage("sweep grid is empty".into()));
    }
    cells
        .into_iter()
        .map(|(label, cfg)| run_experiment_on(&cfg, matrix.clone()).map(|e| (label, e)))
        .collect()
}
