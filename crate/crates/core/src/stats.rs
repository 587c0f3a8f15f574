//! Running pairwise statistics and the confidence/score formulas built on them.
//!
//! All logarithms are natural.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Comparison counts `n[i][j]` (symmetric) and directed win counts `w[i][j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    k: usize,
    n: Vec<u64>,
    w: Vec<u64>,
}

impl PairStats {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            n: vec![0; k * k],
            w: vec![0; k * k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn n(&self, i: usize, j: usize) -> u64 {
        self.n[i * self.k + j]
    }

    #[inline]
    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.w[i * self.k + j]
    }

    /// Adds `total` comparisons of `(i, j)` of which `i` won `wins_i`.
    /// Self-pairs carry no information and are ignored.
    pub fn record(&mut self, i: usize, j: usize, wins_i: u64, total: u64) {
        debug_assert!(wins_i <= total);
        if i == j {
            return;
        }
        let k = self.k;
        self.n[i * k + j] += total;
        self.n[j * k + i] += total;
        self.w[i * k + j] += wins_i;
        self.w[j * k + i] += total - wins_i;
    }
}

/// Empirical probability that `i` beats `j`; `1/2` for a pair never compared.
pub fn phat(stats: &PairStats, i: usize, j: usize) -> f64 {
    match stats.n(i, j) {
        0 => 0.5,
        n => stats.wins(i, j) as f64 / n as f64,
    }
}

/// Defeat radius `sqrt(2 ln(2 K^2 q_r) / n)`.
pub fn c_radius(n_ij: u64, k: usize, q_r: u64) -> Result<f64> {
    if n_ij == 0 {
        return Err(Error::Domain("c radius needs at least one comparison".into()));
    }
    if k == 0 || q_r == 0 {
        return Err(Error::Domain(format!("c radius needs K >= 1 and q_r >= 1 (K={k}, q_r={q_r})")));
    }
    let kk = (k * k) as f64;
    Ok((2.0 * (2.0 * kk * q_r as f64).ln() / n_ij as f64).sqrt())
}

/// Elimination radius `sqrt(ln(K^2 B T) / (2 n))`.
pub fn gamma_radius(n_ij: u64, k: usize, b: u32, t: u64) -> Result<f64> {
    if n_ij == 0 {
        return Err(Error::Domain("gamma radius needs at least one comparison".into()));
    }
    if k == 0 || b == 0 || t == 0 {
        return Err(Error::Domain(format!("gamma radius needs positive K, B, T (K={k}, B={b}, T={t})")));
    }
    let kk = (k * k) as f64;
    Ok(((kk * b as f64 * t as f64).ln() / (2.0 * n_ij as f64)).sqrt())
}

/// Bernoulli KL divergence `D(p || q)` with `0 ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} is outside [0, 1]")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q = {q} must lie strictly inside (0, 1)")));
    }
    Ok(kl_unchecked(p, q))
}

#[inline]
fn kl_unchecked(p: f64, q: f64) -> f64 {
    let mut d = 0.0;
    if p > 0.0 {
        d += p * (p / q).ln();
    }
    if p < 1.0 {
        d += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    d.max(0.0)
}

/// Evidence that `j` is not the Condorcet winner: the sum, over active opponents `i`
/// with `phat(i, j) >= 1/2`, of `n[i][j] * D(phat(i, j) || 1/2)`.
pub fn i_score(stats: &PairStats, j: usize, active: &[usize]) -> f64 {
    active
        .iter()
        .filter(|&&i| i != j)
        .map(|&i| {
            let n = stats.n(i, j);
            let p = phat(stats, i, j);
            if n == 0 || p < 0.5 {
                0.0
            } else {
                kl_unchecked(p, 0.5) * n as f64
            }
        })
        .sum()
}

pub fn i_star(stats: &PairStats, active: &[usize]) -> Result<f64> {
    active
        .iter()
        .map(|&j| i_score(stats, j, active))
        .min_by(f64::total_cmp)
        .ok_or(Error::EmptySet)
}

/// Round index and batch sizes for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundContext {
    /// 1-based round index.
    pub r: u32,
    /// Growth base `T^(1/B)`.
    pub q: f64,
    /// Per-pair repetitions `floor(q^r)`.
    pub q_r: u64,
    pub b: u32,
    pub t: u64,
}

/// Precomputed `floor(q^r)` for `r = 0..=B`, exact over the reals.
#[derive(Debug, Clone)]
pub struct RoundSchedule {
    t: u64,
    b: u32,
    q: f64,
    counts: Vec<u64>,
}

impl RoundSchedule {
    pub fn new(t: u64, b: u32) -> Result<Self> {
        if t == 0 || b == 0 {
            return Err(Error::Config(format!("need T >= 1 and B >= 1 (T={t}, B={b})")));
        }
        let q = (t as f64).powf(1.0 / b as f64);
        let counts = (0..=b).map(|r| floor_root_power(t, r, b)).collect();
        Ok(Self { t, b, q, counts })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `floor(q^r)`; `count(0) = 1` and `count(B) = T`.
    pub fn count(&self, r: u32) -> u64 {
        match self.counts.get(r as usize) {
            Some(&c) => c,
            None => floor_root_power(self.t, r, self.b),
        }
    }

    pub fn context(&self, r: u32) -> RoundContext {
        RoundContext {
            r,
            q: self.q,
            q_r: self.count(r),
            b: self.b,
            t: self.t,
        }
    }
}

/// Largest integer `m` with `m^b <= t^r`, i.e. `floor(t^(r/b))` computed exactly.
fn floor_root_power(t: u64, r: u32, b: u32) -> u64 {
    let target = BigUint::from(t).pow(r);
    let fits = |m: u64| BigUint::from(m).pow(b) <= target;
    let mut m = (t as f64).powf(r as f64 / b as f64).floor().max(1.0) as u64;
    while !fits(m) {
        m -= 1;
    }
    while fits(m + 1) {
        m += 1;
    }
    m
}
