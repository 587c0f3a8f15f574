use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AggregateTrace, Experiment, RunConfig, Series};
use crate::numfmt::format_sig;
use crate::{Error, Result};

/// Significant digits in result CSVs.
pub const RESULT_SIG_DIGITS: usize = 9;

pub const RESULT_HEADER: &str = "t,mean_regret,std_regret";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub seed: u64,
    pub final_regret: f64,
    pub rounds_used: u32,
    pub declared_winner: Option<usize>,
    pub final_active: Vec<usize>,
    pub winner_eliminated: bool,
}

/// JSON sidecar written next to a results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetadata {
    pub config: RunConfig,
    pub k: usize,
    pub b: u32,
    pub q: f64,
    pub condorcet_winner: Option<usize>,
    pub delta_min: Option<f64>,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub trials: Vec<TrialSummary>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
}

impl ExperimentMetadata {
    pub fn from_experiment(exp: &Experiment, wall_clock_secs: Option<f64>) -> Self {
        Self {
            config: exp.config.clone(),
            k: exp.matrix.k(),
            b: exp.b,
            q: exp.q,
            condorcet_winner: exp.gap_profile.winner,
            delta_min: exp.gap_profile.delta_min,
            mean_final_regret: exp.trace.final_mean(),
            std_final_regret: exp.trace.final_std(),
            trials: exp.summaries(),
            warnings: exp.warnings.clone(),
            wall_clock_secs,
        }
    }
}

pub fn trace_csv_string(trace: &AggregateTrace) -> Result<String> {
    if trace.t.is_empty() {
        return Err(Error::Usage("cannot write an empty trace".into()));
    }
    let mut out = String::with_capacity(32 * trace.t.len());
    out.push_str(RESULT_HEADER);
    out.push('\n');
    for ((t, m), s) in trace.t.iter().zip(&trace.mean).zip(&trace.std) {
        out.push_str(&format!(
            "{t},{},{}\n",
            format_sig(*m, RESULT_SIG_DIGITS),
            format_sig(*s, RESULT_SIG_DIGITS)
        ));
    }
    Ok(out)
}

pub fn emit_csv(trace: &AggregateTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = trace_csv_string(trace)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_json(meta: &ExperimentMetadata, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a headed CSV whose first two columns are `t` and a value.
fn read_xy_csv(path: &Path) -> Result<(Vec<String>, Vec<(f64, f64)>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if header.is_none() {
            if fields.len() < 2 {
                return Err(Error::Parse {
                    line: idx + 1,
                    column: 1,
                    message: "header needs at least two columns".into(),
                });
            }
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: idx + 1,
                column: fields.len() + 1,
                message: "expected at least two columns".into(),
            });
        }
        let parse = |col: usize| {
            fields[col].parse::<f64>().map_err(|_| Error::Parse {
                line: idx + 1,
                column: col + 1,
                message: format!("not a number: {:?}", fields[col]),
            })
        };
        points.push((parse(0)?, parse(1)?));
    }
    let header = header.ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Parse {
            line: 0,
            column: 1,
            message: "t column must be strictly increasing".into(),
        });
    }
    Ok((header, points))
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string())
}

/// Loads a results CSV (`t,mean_regret,std_regret`) as a plot series.
pub fn load_trace_csv(path: impl AsRef<Path>) -> Result<Series> {
    let path = path.as_ref();
    let (_, points) = read_xy_csv(path)?;
    Ok(Series::solid(file_label(path), points))
}

/// Loads an external regret trace: a header line, then `t,value[,...]` rows.
/// The label is the value column's header unless it is a generic name.
pub fn load_overlay(path: impl AsRef<Path>) -> Result<Series> {
    let path = path.as_ref();
    let (header, points) = read_xy_csv(path)?;
    let label = match header[1].as_str() {
        "" | "regret" | "mean_regret" | "value" => file_label(path),
        name => name.to_string(),
    };
    Ok(Series::dashed(label, points))
}

/// Linearly interpolates `points` onto the grid values inside the points' range.
pub fn resample(points: &[(f64, f64)], grid: &[f64]) -> Vec<(f64, f64)> {
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        return Vec::new();
    };
    grid.iter()
        .filter(|&&g| g >= first.0 && g <= last.0)
        .map(|&g| {
            let idx = points.partition_point(|p| p.0 < g);
            if points[idx].0 == g || idx == 0 {
                return (g, points[idx].1);
            }
            let (x0, y0) = points[idx - 1];
            let (x1, y1) = points[idx];
            (g, y0 + (y1 - y0) * (g - x0) / (x1 - x0))
        })
        .collect()
}
