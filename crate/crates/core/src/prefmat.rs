//! Ground-truth preference matrices.
//!
//! Entry `p(i, j)` is the probability that arm `i` wins a single duel against arm `j`.
//! A valid matrix has `p(i, i) = 1/2`, `p(i, j) + p(j, i) = 1` and every entry in `[0, 1]`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numfmt::format_sig;
use crate::{Error, Result};

/// Absolute tolerance for the diagonal and complementarity checks.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Significant digits used when serializing probabilities.
pub const CSV_SIG_DIGITS: usize = 12;

/// Lower clip for the linear-order generator; upper clip is `1 - LINEAR_ORDER_FLOOR`.
pub const LINEAR_ORDER_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    k: usize,
    probs: Vec<f64>,
}

/// Condorcet winner and the gap of every arm against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub winner: Option<usize>,
    /// `gaps[j] = p(winner, j) - 1/2`; all zero when there is no winner.
    pub gaps: Vec<f64>,
    /// Smallest strictly positive gap.
    pub delta_min: Option<f64>,
}

/// Checks square shape, range, diagonal and complementarity of raw rows.
pub fn validate(rows: &[Vec<f64>]) -> Result<()> {
    let k = rows.len();
    if k == 0 {
        return Err(Error::Param("matrix must have at least one arm".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Param(format!(
                "row {i} has {} entries, expected {k}",
                row.len()
            )));
        }
        for (j, &value) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Range { i, j, value });
            }
        }
    }
    for (i, row) in rows.iter().enumerate() {
        if (row[i] - 0.5).abs() > VALIDATION_TOL {
            return Err(Error::Diagonal { i, value: row[i] });
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let sum = rows[i][j] + rows[j][i];
            if (sum - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::Asymmetry { i, j, sum });
            }
        }
    }
    Ok(())
}

impl PreferenceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        validate(&rows)?;
        let k = rows.len();
        Ok(Self {
            k,
            probs: rows.into_iter().flatten().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        validate(&self.rows())
    }

    /// Finds the Condorcet winner (the arm with `p(i, j) > 1/2` for every `j != i`)
    /// and the gap vector relative to it.
    pub fn condorcet_analysis(&self) -> GapProfile {
        let winner = (0..self.k).find(|&i| (0..self.k).all(|j| j == i || self.p(i, j) > 0.5));
        let gaps: Vec<f64> = match winner {
            Some(a) => (0..self.k)
                .map(|j| if j == a { 0.0 } else { self.p(a, j) - 0.5 })
                .collect(),
            None => vec![0.0; self.k],
        };
        let delta_min = gaps
            .iter()
            .copied()
            .filter(|&g| g > 0.0)
            .min_by(f64::total_cmp);
        GapProfile {
            winner,
            gaps,
            delta_min,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.k {
            let line: Vec<String> = self
                .row(i)
                .iter()
                .map(|&p| format_sig(p, CSV_SIG_DIGITS))
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for (col, field) in line.split(',').enumerate() {
                let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    column: col + 1,
                    message: format!("not a number: {:?}", field.trim()),
                })?;
                row.push(value);
            }
            rows.push((idx + 1, row));
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "no matrix rows".into(),
            });
        }
        let k = rows.len();
        for (line, row) in &rows {
            if row.len() != k {
                return Err(Error::Parse {
                    line: *line,
                    column: row.len().min(k) + 1,
                    message: format!("expected {k} columns, found {}", row.len()),
                });
            }
        }
        Self::from_rows(rows.into_iter().map(|(_, r)| r).collect())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Arm 0 beats every other arm with probability `1/2 + eps`; the rest are
    /// seeded-uniform in `[1/2 - eps/2, 1/2 + eps/2]`.
    UniformGap,
    /// `p(i, j) = 1/2 + eps * (j - i) / (K - 1)`, clipped to `[0.01, 0.99]`.
    LinearOrder,
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::UniformGap => "uniform-gap",
            SyntheticKind::LinearOrder => "linear-order",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-gap" => Ok(SyntheticKind::UniformGap),
            "linear-order" => Ok(SyntheticKind::LinearOrder),
            other => Err(Error::Param(format!("unknown generator kind {other:?}"))),
        }
    }
}

pub fn generate_synthetic(kind: SyntheticKind, k: usize, eps: f64, seed: u64) -> Result<PreferenceMatrix> {
    if k < 2 {
        return Err(Error::Param(format!("generator needs K >= 2, got {k}")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Param(format!("gap must lie in (0, 1/2], got {eps}")));
    }
    let mut rows = vec![vec![0.5; k]; k];
    match kind {
        SyntheticKind::UniformGap => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for j in 1..k {
                rows[0][j] = 0.5 + eps;
                rows[j][0] = 1.0 - rows[0][j];
            }
            let (lo, hi) = (0.5 - eps / 2.0, 0.5 + eps / 2.0);
            for i in 1..k {
                for j in (i + 1)..k {
                    let p: f64 = rng.random_range(lo..=hi);
                    rows[i][j] = p;
                    rows[j][i] = 1.0 - p;
                }
            }
        }
        SyntheticKind::LinearOrder => {
            let span = (k - 1) as f64;
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        let p = 0.5 + eps * (j as f64 - i as f64) / span;
                        rows[i][j] = p.clamp(LINEAR_ORDER_FLOOR, 1.0 - LINEAR_ORDER_FLOOR);
                    }
                }
            }
        }
    }
    PreferenceMatrix::from_rows(rows)
}
