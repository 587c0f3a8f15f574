//! Seeded stochastic duel environment.
//!
//! Every single comparison is one time step and accrues regret
//! `(gap[i] + gap[j]) / 2`. Outcomes for pair `(i, j)` in round `r` come from
//! an independent ChaCha stream keyed by `(seed, r, i, j)`, so changing which
//! other pairs appear in a plan never changes the draws of a given pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algos::BatchPlan;
use crate::prefmat::PreferenceMatrix;
use crate::{Error, Result};

/// Default number of log-spaced checkpoints.
pub const DEFAULT_GRID_SIZE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuelOutcome {
    pub pair: (usize, usize),
    pub wins_i: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetState {
    pub total: u64,
    pub remaining: u64,
}

impl BudgetState {
    pub fn new(total: u64) -> Self {
        Self {
            total,
            remaining: total,
        }
    }

    pub fn used(&self) -> u64 {
        self.total - self.remaining
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub cumulative: f64,
}

/// Cumulative regret with snapshots on a fixed time grid and at batch boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    t: u64,
    cumulative: f64,
    grid: Vec<u64>,
    grid_values: Vec<f64>,
    checkpoints: Vec<Checkpoint>,
}

impl RegretLedger {
    pub fn new(grid: Vec<u64>) -> Self {
        debug_assert!(grid.windows(2).all(|w| w[0] < w[1]));
        Self {
            t: 0,
            cumulative: 0.0,
            grid_values: Vec::with_capacity(grid.len()),
            grid,
            checkpoints: Vec::new(),
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    pub fn grid(&self) -> &[u64] {
        &self.grid
    }

    /// Cumulative regret at each grid point reached so far.
    pub fn grid_values(&self) -> &[f64] {
        &self.grid_values
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    /// Adds `steps` comparisons each costing `per_step`.
    pub fn accrue(&mut self, steps: u64, per_step: f64) {
        if steps == 0 {
            return;
        }
        let (t0, c0) = (self.t, self.cumulative);
        let end = t0 + steps;
        self.cumulative = c0 + steps as f64 * per_step;
        self.t = end;
        while let Some(&g) = self.grid.get(self.grid_values.len()) {
            if g > end {
                break;
            }
            let value = if g == end {
                self.cumulative
            } else {
                c0 + (g - t0) as f64 * per_step
            };
            self.grid_values.push(value);
            self.push_checkpoint(g, value);
        }
    }

    /// Snapshots the current state (used at batch boundaries).
    pub fn mark(&mut self) {
        let (t, c) = (self.t, self.cumulative);
        self.push_checkpoint(t, c);
    }

    fn push_checkpoint(&mut self, t: u64, cumulative: f64) {
        if self.checkpoints.last().is_some_and(|c| c.t == t) {
            return;
        }
        self.checkpoints.push(Checkpoint { t, cumulative });
    }
}

/// `min(size, t_max)` distinct integer time points over `[1, t_max]`, ending at
/// `t_max`. Each step is the geometric step toward `t_max` for the points left,
/// but at least 1, so the early grid is dense integers and the rest log-spaced.
pub fn log_grid(t_max: u64, size: usize) -> Vec<u64> {
    if t_max == 0 || size == 0 {
        return Vec::new();
    }
    let n = (size as u64).min(t_max) as usize;
    if n == 1 {
        return vec![t_max];
    }
    let mut grid = Vec::with_capacity(n);
    let mut x = 1u64;
    grid.push(x);
    for left in (1..n).rev() {
        if left == 1 {
            x = t_max;
        } else {
            let step = (t_max as f64 / x as f64).powf(1.0 / left as f64);
            let next = (x as f64 * step).round() as u64;
            // leave room for the remaining points below t_max
            x = next.max(x + 1).min(t_max - (left as u64 - 1));
        }
        grid.push(x);
    }
    grid
}

/// Independent outcome stream for one pair in one round.
#[derive(Debug, Clone)]
pub struct DuelStream {
    rng: ChaCha8Rng,
}

impl DuelStream {
    pub fn new(seed: u64, round: u32, i: usize, j: usize) -> Self {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(hi < (1 << 20) && (round as u64) < (1 << 24));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((round as u64) << 40) | ((lo as u64) << 20) | hi as u64);
        Self { rng }
    }

    /// Next uniform draw in `[0, 1)`.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Number of wins for the lower-indexed arm in `n` duels it wins with probability `p`.
    pub fn wins(&mut self, p: f64, n: u64) -> u64 {
        (0..n).filter(|_| self.next_uniform() < p).count() as u64
    }
}

/// One trial's environment: matrix, budget, ledger and per-arm comparison tallies.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    matrix: &'a PreferenceMatrix,
    gaps: Vec<f64>,
    seed: u64,
    budget: BudgetState,
    ledger: RegretLedger,
    arm_comparisons: Vec<u64>,
}

impl<'a> Environment<'a> {
    /// Regret uses the matrix's Condorcet gaps (all zero if there is no winner).
    pub fn new(matrix: &'a PreferenceMatrix, budget: u64, seed: u64, grid_size: usize) -> Self {
        let gaps = matrix.condorcet_analysis().gaps;
        Self::with_gaps(matrix, gaps, budget, seed, log_grid(budget, grid_size))
    }

    pub fn with_gaps(
        matrix: &'a PreferenceMatrix,
        gaps: Vec<f64>,
        budget: u64,
        seed: u64,
        grid: Vec<u64>,
    ) -> Self {
        assert_eq!(gaps.len(), matrix.k());
        Self {
            matrix,
            seed,
            budget: BudgetState::new(budget),
            ledger: RegretLedger::new(grid),
            arm_comparisons: vec![0; gaps.len()],
            gaps,
        }
    }

    pub fn budget(&self) -> BudgetState {
        self.budget
    }

    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> RegretLedger {
        self.ledger
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Number of comparisons each arm took part in (a self-duel counts twice).
    pub fn arm_comparisons(&self) -> &[u64] {
        &self.arm_comparisons
    }

    /// `(1/2) * sum_j T_j * gap_j`, computed from the per-arm tallies.
    pub fn tally_regret(&self) -> f64 {
        0.5 * self
            .arm_comparisons
            .iter()
            .zip(&self.gaps)
            .map(|(&n, &g)| n as f64 * g)
            .sum::<f64>()
    }

    /// Executes the plan in its canonical order, truncating at budget exhaustion.
    /// Returns one outcome per plan entry (with `total = 0` past exhaustion).
    pub fn execute_batch(&mut self, plan: &BatchPlan) -> Result<Vec<DuelOutcome>> {
        let k = self.matrix.k();
        let mut outcomes = Vec::with_capacity(plan.entries.len());
        for entry in &plan.entries {
            let (i, j) = entry.pair;
            if i >= k || j >= k {
                return Err(Error::Param(format!("pair ({i}, {j}) out of range for K = {k}")));
            }
            let n = entry.count.min(self.budget.remaining);
            let wins_i = if n > 0 {
                DuelStream::new(self.seed, plan.round, i, j).wins(self.matrix.p(i, j), n)
            } else {
                0
            };
            self.consume(i, j, n);
            outcomes.push(DuelOutcome {
                pair: (i, j),
                wins_i,
                total: n,
            });
        }
        self.ledger.mark();
        Ok(outcomes)
    }

    /// Spends the rest of the budget on `(arm, arm)` self-duels.
    pub fn play_filler(&mut self, arm: usize) {
        let n = self.budget.remaining;
        if n == 0 {
            return;
        }
        self.consume(arm, arm, n);
        self.ledger.mark();
    }

    fn consume(&mut self, i: usize, j: usize, n: u64) {
        if n == 0 {
            return;
        }
        self.budget.remaining -= n;
        self.arm_comparisons[i] += n;
        self.arm_comparisons[j] += n;
        self.ledger.accrue(n, (self.gaps[i] + self.gaps[j]) / 2.0);
    }
}
