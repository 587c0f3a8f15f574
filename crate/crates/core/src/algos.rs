//! Batch policies: C2B, C2B-KL and an all-pairs elimination baseline.
//!
//! A run alternates plan -> execute -> observe -> eliminate. Round `r` compares
//! every planned pair `floor(q^r)` times with `q = T^(1/B)`; the defeated sets
//! for round `r` use statistics through round `r - 1`, eliminations use
//! statistics through round `r`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{DuelOutcome, Environment, RegretLedger};
use crate::prefmat::PreferenceMatrix;
use crate::stats::{c_radius, gamma_radius, i_score, phat, PairStats, RoundContext, RoundSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub pair: (usize, usize),
    pub count: u64,
}

/// One round's comparisons: unordered pairs, deduplicated and sorted by `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub round: u32,
    pub entries: Vec<PlanEntry>,
}

impl BatchPlan {
    pub fn from_pairs(round: u32, pairs: impl IntoIterator<Item = (usize, usize)>, count: u64) -> Self {
        let set: BTreeSet<(usize, usize)> = pairs
            .into_iter()
            .map(|(i, j)| if i <= j { (i, j) } else { (j, i) })
            .collect();
        Self {
            round,
            entries: set.into_iter().map(|pair| PlanEntry { pair, count }).collect(),
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| e.pair).collect()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EliminationReason {
    /// Some active arm beats it by more than the gamma radius.
    Gamma,
    /// Its KL evidence score exceeds the minimum by more than `ln T + f(K)`.
    Kl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub round: u32,
    pub arm: usize,
    pub reason: EliminationReason,
}

/// Defeated sets, candidate and champion flag for one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefeatRecord {
    /// `defeated[i]` for every arm index; empty for inactive arms.
    pub defeated: Vec<Vec<usize>>,
    pub candidate: usize,
    pub champion: bool,
}

#[derive(Debug, Clone)]
pub struct PolicyState {
    active: Vec<usize>,
    stats: PairStats,
    schedule: RoundSchedule,
    round: u32,
    k: usize,
    t: u64,
    b: u32,
    eliminated_log: Vec<Elimination>,
}

impl PolicyState {
    pub fn new(k: usize, t: u64, b: u32) -> Result<Self> {
        Self::from_parts(PairStats::new(k), (0..k).collect(), 1, t, b)
    }

    /// Builds a state mid-run, e.g. to inspect a single planning step.
    pub fn from_parts(stats: PairStats, active: Vec<usize>, round: u32, t: u64, b: u32) -> Result<Self> {
        let k = stats.k();
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if round == 0 {
            return Err(Error::Config("rounds are 1-based".into()));
        }
        let mut active = active;
        active.sort_unstable();
        active.dedup();
        if active.is_empty() || active.iter().any(|&a| a >= k) {
            return Err(Error::Config(format!("invalid active set {active:?} for K = {k}")));
        }
        Ok(Self {
            active,
            stats,
            schedule: RoundSchedule::new(t, b)?,
            round,
            k,
            t,
            b,
            eliminated_log: Vec::new(),
        })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn stats(&self) -> &PairStats {
        &self.stats
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ctx(&self) -> RoundContext {
        self.schedule.context(self.round)
    }

    pub fn eliminated_log(&self) -> &[Elimination] {
        &self.eliminated_log
    }

    pub fn observe(&mut self, outcomes: &[DuelOutcome]) {
        for o in outcomes {
            self.stats.record(o.pair.0, o.pair.1, o.wins_i, o.total);
        }
    }

    /// Removes `arms` from the active set. A proposal that would empty the set
    /// (possible only without a Condorcet winner) is dropped and nothing changes.
    pub fn apply_eliminations(&mut self, arms: &[usize], reason: EliminationReason) -> Vec<usize> {
        let removed: Vec<usize> = self.active.iter().copied().filter(|a| arms.contains(a)).collect();
        if removed.is_empty() || removed.len() == self.active.len() {
            return Vec::new();
        }
        self.active.retain(|a| !removed.contains(a));
        let round = self.round;
        self.eliminated_log
            .extend(removed.iter().map(|&arm| Elimination { round, arm, reason }));
        removed
    }

    fn advance(&mut self) {
        self.round += 1;
    }
}

/// Defeated sets from statistics through round `r - 1`, using `c` radii at `q_(r-1)`.
/// Ties for the candidate go to the lowest arm index.
pub fn defeat_record(state: &PolicyState) -> DefeatRecord {
    let q_prev = state.schedule.count(state.round - 1);
    let stats = &state.stats;
    let mut defeated = vec![Vec::new(); state.k];
    for &i in &state.active {
        defeated[i] = state
            .active
            .iter()
            .copied()
            .filter(|&j| {
                let n = stats.n(i, j);
                j != i
                    && n > 0
                    && c_radius(n, state.k, q_prev).is_ok_and(|c| phat(stats, i, j) > 0.5 + c)
            })
            .collect();
    }
    let mut candidate = state.active[0];
    for &i in &state.active[1..] {
        if defeated[i].len() > defeated[candidate].len() {
            candidate = i;
        }
    }
    let champion = defeated[candidate].len() + 1 == state.active.len();
    DefeatRecord {
        defeated,
        candidate,
        champion,
    }
}

/// C2B planning: arms the candidate defeats are compared only with the candidate;
/// every other arm is compared with all active arms.
pub fn c2b_plan(state: &PolicyState) -> (BatchPlan, DefeatRecord) {
    let record = defeat_record(state);
    let cand = record.candidate;
    let anchored = &record.defeated[cand];
    let mut pairs = Vec::new();
    for &i in state.active.iter().filter(|&&i| i != cand) {
        if anchored.contains(&i) {
            pairs.push((cand, i));
        } else {
            pairs.extend(state.active.iter().filter(|&&j| j != i).map(|&j| (i, j)));
        }
    }
    let plan = BatchPlan::from_pairs(state.round, pairs, state.ctx().q_r);
    (plan, record)
}

/// Arms `j` with some active `i` such that `phat(i, j) > 1/2 + gamma(i, j)`.
/// All arms are judged against the same pre-elimination snapshot.
pub fn c2b_eliminate(state: &PolicyState) -> Vec<usize> {
    let stats = &state.stats;
    state
        .active
        .iter()
        .copied()
        .filter(|&j| {
            state.active.iter().any(|&i| {
                let n = stats.n(i, j);
                i != j
                    && n > 0
                    && gamma_radius(n, state.k, state.b, state.t)
                        .is_ok_and(|g| phat(stats, i, j) > 0.5 + g)
            })
        })
        .collect()
}

/// Arms whose KL score exceeds the active minimum by more than `ln T + f_of_k`.
pub fn c2bkl_eliminate(state: &PolicyState, f_of_k: f64) -> Vec<usize> {
    let scores: Vec<f64> = state
        .active
        .iter()
        .map(|&j| i_score(&state.stats, j, &state.active))
        .collect();
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = (state.t as f64).ln() + f_of_k;
    state
        .active
        .iter()
        .zip(&scores)
        .filter(|&(_, &s)| s - best > threshold)
        .map(|(&j, _)| j)
        .collect()
}

/// `0.3 * K^1.01`.
pub fn f_default(k: usize) -> f64 {
    0.3 * (k as f64).powf(1.01)
}

pub fn allpairs_plan(state: &PolicyState) -> BatchPlan {
    let a = &state.active;
    let pairs = a
        .iter()
        .enumerate()
        .flat_map(|(x, &i)| a[x + 1..].iter().map(move |&j| (i, j)));
    BatchPlan::from_pairs(state.round, pairs, state.ctx().q_r)
}

pub fn allpairs_eliminate(state: &PolicyState) -> Vec<usize> {
    c2b_eliminate(state)
}

/// A batch policy: what to compare next and whom to eliminate after observing it.
pub trait Policy: Send + Sync {
    fn name(&self) -> &'static str;

    fn plan(&self, state: &PolicyState) -> (BatchPlan, Option<DefeatRecord>);

    fn observe(&self, state: &mut PolicyState, outcomes: &[DuelOutcome]) {
        state.observe(outcomes);
    }

    fn eliminate(&self, state: &PolicyState) -> (Vec<usize>, EliminationReason);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct C2b;

#[derive(Debug, Clone, Copy, Default)]
pub struct C2bKl {
    /// Overrides `f_default(K)`.
    pub f_of_k: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AllPairs;

impl Policy for C2b {
    fn name(&self) -> &'static str {
        "c2b"
    }

    fn plan(&self, state: &PolicyState) -> (BatchPlan, Option<DefeatRecord>) {
        let (plan, record) = c2b_plan(state);
        (plan, Some(record))
    }

    fn eliminate(&self, state: &PolicyState) -> (Vec<usize>, EliminationReason) {
        (c2b_eliminate(state), EliminationReason::Gamma)
    }
}

impl Policy for C2bKl {
    fn name(&self) -> &'static str {
        "c2b-kl"
    }

    fn plan(&self, state: &PolicyState) -> (BatchPlan, Option<DefeatRecord>) {
        let (plan, record) = c2b_plan(state);
        (plan, Some(record))
    }

    fn eliminate(&self, state: &PolicyState) -> (Vec<usize>, EliminationReason) {
        let f = self.f_of_k.unwrap_or_else(|| f_default(state.k));
        (c2bkl_eliminate(state, f), EliminationReason::Kl)
    }
}

impl Policy for AllPairs {
    fn name(&self) -> &'static str {
        "allpairs"
    }

    fn plan(&self, state: &PolicyState) -> (BatchPlan, Option<DefeatRecord>) {
        (allpairs_plan(state), None)
    }

    fn eliminate(&self, state: &PolicyState) -> (Vec<usize>, EliminationReason) {
        (allpairs_eliminate(state), EliminationReason::Gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    C2b,
    C2bKl,
    Allpairs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::C2b, Algorithm::C2bKl, Algorithm::Allpairs];

    pub fn policy(self, f_override: Option<f64>) -> Box<dyn Policy> {
        match self {
            Algorithm::C2b => Box::new(C2b),
            Algorithm::C2bKl => Box::new(C2bKl { f_of_k: f_override }),
            Algorithm::Allpairs => Box::new(AllPairs),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::C2b => "c2b",
            Algorithm::C2bKl => "c2b-kl",
            Algorithm::Allpairs => "allpairs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Param(format!("unknown algorithm {s:?} (expected c2b, c2b-kl or allpairs)")))
    }
}

/// Everything observable about one planning round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub q_r: u64,
    pub active: Vec<usize>,
    pub defeat: Option<DefeatRecord>,
    pub plan: Vec<(usize, usize)>,
    /// Comparisons actually performed in this round.
    pub performed: u64,
    pub truncated: bool,
    pub eliminated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub k: usize,
    pub t: u64,
    pub b: u32,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub eliminations: Vec<Elimination>,
    pub final_active: Vec<usize>,
    /// The sole surviving arm, or else the last round's candidate.
    pub declared_winner: Option<usize>,
    /// Whether the last planning round's candidate defeated every other active arm.
    pub last_champion: bool,
    pub comparisons: u64,
    pub filler_comparisons: u64,
    pub final_regret: f64,
    /// Same quantity recomputed from per-arm comparison counts.
    pub tally_regret: f64,
    pub arm_comparisons: Vec<u64>,
    pub ledger: RegretLedger,
}

impl RunResult {
    pub fn planning_rounds(&self) -> u32 {
        self.rounds.len() as u32
    }
}

/// Runs one trial with a fixed budget `t` and round budget `b`.
pub fn run_policy(
    policy: &dyn Policy,
    matrix: &PreferenceMatrix,
    t: u64,
    b: u32,
    seed: u64,
    grid_size: usize,
) -> Result<RunResult> {
    if t == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    if b == 0 {
        return Err(Error::Config("B must be at least 1".into()));
    }
    let k = matrix.k();
    let mut state = PolicyState::new(k, t, b)?;
    let mut env = Environment::new(matrix, t, seed, grid_size);
    let mut rounds = Vec::new();
    let mut filler_comparisons = 0;

    while !env.budget().is_exhausted() {
        if let [arm] = state.active() {
            filler_comparisons = env.budget().remaining;
            env.play_filler(*arm);
            break;
        }
        let active = state.active().to_vec();
        let q_r = state.ctx().q_r;
        let (plan, defeat) = policy.plan(&state);
        let outcomes = env.execute_batch(&plan)?;
        policy.observe(&mut state, &outcomes);
        let performed: u64 = outcomes.iter().map(|o| o.total).sum();
        let truncated = performed < plan.total();
        let eliminated = if truncated {
            Vec::new()
        } else {
            let (proposed, reason) = policy.eliminate(&state);
            state.apply_eliminations(&proposed, reason)
        };
        rounds.push(RoundRecord {
            round: state.round(),
            q_r,
            active,
            defeat,
            plan: plan.pairs(),
            performed,
            truncated,
            eliminated,
        });
        state.advance();
    }

    let last_defeat = rounds.last().and_then(|r| r.defeat.as_ref());
    let declared_winner = match state.active() {
        [arm] => Some(*arm),
        _ => last_defeat.map(|d| d.candidate),
    };
    let tally_regret = env.tally_regret();
    let arm_comparisons = env.arm_comparisons().to_vec();
    let comparisons = env.budget().used();
    let ledger = env.into_ledger();
    Ok(RunResult {
        algorithm: policy.name().to_string(),
        k,
        t,
        b,
        seed,
        last_champion: last_defeat.is_some_and(|d| d.champion),
        eliminations: state.eliminated_log().to_vec(),
        final_active: state.active().to_vec(),
        declared_winner,
        rounds,
        comparisons,
        filler_comparisons,
        final_regret: ledger.cumulative(),
        tally_regret,
        arm_comparisons,
        ledger,
    })
}
