//! Command-line front end. `cli_main` returns the process exit code:
//! 0 on success, 1 on usage errors, 2 on runtime errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{
    bound_overlay, emit_csv, emit_json, emit_svg, load_overlay, load_trace_csv, resample, run_experiment,
    sweep, trace_csv_string, Experiment, ExperimentMetadata, LogBase, MatrixSource, PlotOptions, RoundsSpec,
    RunConfig, Series, SweepAxis, DEFAULT_REPEATS,
};
use crate::algos::Algorithm;
use crate::bounds::{a_constant, c_delta, r_delta, regret_bound_expected, regret_bound_high_prob, BoundInputs, SHAPE_ONLY};
use crate::env::DEFAULT_GRID_SIZE;
use crate::numfmt::format_sig;
use crate::prefmat::{generate_synthetic, SyntheticKind};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "duelbatch", version, about = "Batched dueling-bandit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its mean regret trace.
    Run(RunArgs),
    /// Run a grid of experiments over B or over algorithms.
    Sweep(SweepArgs),
    /// Render result CSVs to an SVG chart.
    Plot(PlotArgs),
    /// Print analysis constants and shape-only regret bounds.
    Bound(BoundArgs),
    /// Write a synthetic preference matrix as CSV.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogBaseArg {
    #[value(name = "2")]
    Two,
    #[value(name = "e")]
    E,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// Preference matrix CSV.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    matrix: Option<PathBuf>,
    /// Generate a synthetic matrix instead of reading one.
    #[arg(long, value_name = "KIND")]
    gen: Option<SyntheticKind>,
    #[arg(long = "K", requires = "gen")]
    k: Option<usize>,
    #[arg(long, requires = "gen")]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    matrix_seed: u64,
}

impl MatrixArgs {
    fn source(&self) -> Result<MatrixSource> {
        match (&self.matrix, self.gen) {
            (Some(path), _) => Ok(MatrixSource::Csv { path: path.clone() }),
            (None, Some(kind)) => Ok(MatrixSource::Synthetic {
                kind,
                k: self.k.ok_or_else(|| Error::Usage("--gen needs --K".into()))?,
                eps: self.eps.ok_or_else(|| Error::Usage("--gen needs --eps".into()))?,
                seed: self.matrix_seed,
            }),
            (None, None) => Err(Error::Usage("either --matrix or --gen is required".into())),
        }
    }
}

#[derive(Debug, Args)]
struct TrialArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long, default_value = "c2b")]
    algo: Algorithm,
    #[arg(long = "T")]
    t: u64,
    /// Log base for automatic B.
    #[arg(long, value_enum, default_value = "2")]
    log_base: LogBaseArg,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    /// Base seed; trial k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replaces f(K) in the KL elimination threshold.
    #[arg(long = "f-k")]
    f_k: Option<f64>,
    /// Number of log-spaced checkpoints.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid: usize,
    /// Worker threads (0 = one per core); overrides DUELBATCH_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock time in the JSON sidecar.
    #[arg(long)]
    timing: bool,
}

impl TrialArgs {
    fn config(&self, rounds: RoundsSpec) -> Result<RunConfig> {
        let base = match self.log_base {
            LogBaseArg::Two => LogBase::Two,
            LogBaseArg::E => LogBase::E,
        };
        let mut cfg = RunConfig::new(self.matrix.source()?, self.algo, self.t);
        cfg.rounds = rounds.with_base(base);
        cfg.repeats = self.repeats;
        cfg.base_seed = self.seed;
        cfg.f_override = self.f_k;
        cfg.grid_size = self.grid;
        cfg.threads = self.threads;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    trial: TrialArgs,
    /// Number of rounds: N, auto or auto+N.
    #[arg(long = "B", default_value = "auto")]
    b: RoundsSpec,
    /// Results CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON metadata sidecar.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    log_x: bool,
    /// Add the shape-only regret bound to the SVG.
    #[arg(long)]
    bound_overlay: bool,
    /// External `t,value` trace to draw on the SVG (repeatable).
    #[arg(long)]
    overlay: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    trial: TrialArgs,
    /// Comma-separated round counts, e.g. 4,8,16.
    #[arg(long = "B-list", value_delimiter = ',', conflicts_with = "algos", required_unless_present = "algos")]
    b_list: Vec<RoundsSpec>,
    /// Comma-separated algorithms; B comes from --B.
    #[arg(long, value_delimiter = ',')]
    algos: Vec<Algorithm>,
    #[arg(long = "B", default_value = "auto")]
    b: RoundsSpec,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    log_x: bool,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Results CSVs (`t,mean_regret,std_regret`).
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    #[arg(long)]
    overlay: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "T")]
    t: u64,
    #[arg(long = "B")]
    b: u32,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    dmin: f64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    kind: SyntheticKind,
    #[arg(long = "K")]
    k: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Param(_) | Error::Config(_) | Error::Domain(_) => 1,
        _ => 2,
    }
}

fn write_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn trace_series(label: &str, exp: &Experiment) -> Series {
    let points = exp.trace.t.iter().zip(&exp.trace.mean).map(|(&t, &m)| (t as f64, m)).collect();
    Series::solid(label, points)
}

fn overlays(paths: &[PathBuf], grid: &[f64]) -> Result<Vec<Series>> {
    paths
        .iter()
        .map(|p| {
            let mut s = load_overlay(p)?;
            s.points = resample(&s.points, grid);
            Ok(s)
        })
        .collect()
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = a.trial.config(a.b)?;
    let start = Instant::now();
    let exp = run_experiment(&cfg)?;
    let wall = a.trial.timing.then(|| start.elapsed().as_secs_f64());
    for w in &exp.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{} K={} T={} B={} q={}: mean R(T) = {} (std {}) over {} trials",
        cfg.algorithm,
        exp.matrix.k(),
        cfg.t,
        exp.b,
        format_sig(exp.q, 6),
        format_sig(exp.trace.final_mean(), 6),
        format_sig(exp.trace.final_std(), 6),
        exp.trials.len()
    );

    match &a.out {
        Some(path) => emit_csv(&exp.trace, path)?,
        None => write_stdout(&trace_csv_string(&exp.trace)?)?,
    }
    if let Some(path) = &a.json {
        emit_json(&ExperimentMetadata::from_experiment(&exp, wall), path)?;
    }
    if let Some(path) = &a.svg {
        let grid: Vec<f64> = exp.trace.t.iter().map(|&t| t as f64).collect();
        let mut series = vec![trace_series(cfg.algorithm.as_str(), &exp)];
        if a.bound_overlay {
            match exp.gap_profile.delta_min {
                Some(dmin) => series.push(bound_overlay(exp.matrix.k(), exp.q, dmin, &exp.gap_profile.gaps, &grid)),
                None => eprintln!("warning: no Condorcet winner, bound overlay skipped"),
            }
        }
        series.extend(overlays(&a.overlay, &grid)?);
        let opts = PlotOptions {
            log_x: a.log_x,
            ..PlotOptions::default()
        };
        emit_svg(&series, &opts, path)?;
    } else if a.bound_overlay || !a.overlay.is_empty() {
        return Err(Error::Usage("--bound-overlay and --overlay need --svg".into()));
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let axis = if a.algos.is_empty() {
        SweepAxis::Rounds(a.b_list.clone())
    } else {
        SweepAxis::Algorithms(a.algos.clone())
    };
    let base = a.trial.config(a.b)?;
    let cells = sweep(&base, &axis)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;

    let mut summary = String::from("label,algorithm,B,mean_final_regret,std_final_regret\n");
    let mut series = Vec::new();
    for (label, exp) in &cells {
        for w in &exp.warnings {
            eprintln!("warning [{label}]: {w}");
        }
        emit_csv(&exp.trace, a.out_dir.join(format!("{label}.csv")))?;
        emit_json(
            &ExperimentMetadata::from_experiment(exp, None),
            a.out_dir.join(format!("{label}.json")),
        )?;
        summary.push_str(&format!(
            "{label},{},{},{},{}\n",
            exp.config.algorithm,
            exp.b,
            format_sig(exp.trace.final_mean(), 9),
            format_sig(exp.trace.final_std(), 9)
        ));
        series.push(trace_series(label, exp));
    }
    let summary_path = a.out_dir.join("summary.csv");
    fs::write(&summary_path, &summary).map_err(|e| Error::io(&summary_path, e))?;
    let opts = PlotOptions {
        log_x: a.log_x,
        ..PlotOptions::default()
    };
    emit_svg(&series, &opts, a.out_dir.join("sweep.svg"))?;
    write_stdout(&summary)
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let mut series = a.csv.iter().map(load_trace_csv).collect::<Result<Vec<_>>>()?;
    let grid: Vec<f64> = series[0].points.iter().map(|p| p.0).collect();
    series.extend(overlays(&a.overlay, &grid)?);
    let mut opts = PlotOptions {
        log_x: a.log_x,
        ..PlotOptions::default()
    };
    if let Some(title) = a.title {
        opts.title = title;
    }
    emit_svg(&series, &opts, &a.out)
}

fn cmd_bound(a: BoundArgs) -> Result<()> {
    let inputs = BoundInputs {
        k: a.k,
        t: a.t,
        b: a.b,
        delta_min: a.dmin,
        delta: a.delta,
    };
    inputs.validate()?;
    let q = inputs.q();
    // every suboptimal arm at the minimum gap
    let mut gaps = vec![a.dmin; a.k];
    gaps[0] = 0.0;
    let text = format!(
        "q = {}\nC(delta) = {}\nA = {}\nr(delta) = {}\nexpected regret bound ({SHAPE_ONLY}) = {}\nhigh-probability regret bound ({SHAPE_ONLY}) = {}\n",
        format_sig(q, 9),
        c_delta(q, a.delta)?,
        format_sig(a_constant(a.k, a.dmin)?, 9),
        r_delta(q, a.delta, a.k, a.dmin)?,
        format_sig(regret_bound_expected(&inputs, &gaps)?, 6),
        format_sig(regret_bound_high_prob(&inputs, &gaps)?, 6),
    );
    write_stdout(&text)
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let m = generate_synthetic(a.kind, a.k, a.eps, a.seed)?;
    match a.out {
        Some(path) => m.save_csv(&path),
        None => write_stdout(&m.to_csv_string()),
    }
}
