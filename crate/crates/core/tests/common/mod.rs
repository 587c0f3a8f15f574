//! Independent step-by-step transcription of the batch algorithms, fed from the
//! same per-pair duel streams as the library. Shares no code with `algos`
//! or `stats` beyond `DuelStream`.

#![allow(dead_code)]

use duelbatch::env::DuelStream;
use duelbatch::prefmat::PreferenceMatrix;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flavor {
    C2b,
    C2bKl(f64),
    AllPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRound {
    pub round: u32,
    pub active: Vec<usize>,
    pub candidate: Option<usize>,
    pub champion: Option<bool>,
    pub plan: Vec<(usize, usize)>,
    pub eliminated: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub rounds: Vec<OracleRound>,
    pub comparisons: u64,
    pub final_active: Vec<usize>,
}

/// Largest `m` with `m^b <= t^r`.
pub fn q_r(t: u64, b: u32, r: u32) -> u64 {
    let target = BigUint::from(t).pow(r);
    let (mut lo, mut hi) = (1u64, t.max(1));
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if BigUint::from(mid).pow(b) <= target {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

fn bern_kl(p: f64, q: f64) -> f64 {
    let a = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    let b = if p < 1.0 { (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln() } else { 0.0 };
    a + b
}

pub fn oracle_run(m: &PreferenceMatrix, t: u64, b: u32, seed: u64, flavor: Flavor) -> OracleRun {
    let k = m.k();
    let kf = k as f64;
    let mut wins = vec![vec![0u64; k]; k];
    let mut cnt = vec![vec![0u64; k]; k];
    let mut active: Vec<usize> = (0..k).collect();
    let mut used = 0u64;
    let mut r = 1u32;
    let mut rounds = Vec::new();

    let phat = |wins: &Vec<Vec<u64>>, cnt: &Vec<Vec<u64>>, i: usize, j: usize| {
        if cnt[i][j] == 0 {
            0.5
        } else {
            wins[i][j] as f64 / cnt[i][j] as f64
        }
    };

    while used < t {
        if active.len() == 1 {
            used = t;
            break;
        }
        let before = active.clone();
        let qr = q_r(t, b, r);
        let qprev = q_r(t, b, r - 1);

        let mut candidate = None;
        let mut champion = None;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        match flavor {
            Flavor::AllPairs => {
                for x in 0..active.len() {
                    for y in x + 1..active.len() {
                        pairs.push((active[x], active[y]));
                    }
                }
            }
            Flavor::C2b | Flavor::C2bKl(_) => {
                // D_r(i) from round r-1 stats, c radius at q_(r-1)
                let mut d: Vec<Vec<usize>> = vec![Vec::new(); k];
                for &i in &active {
                    for &j in &active {
                        if i == j || cnt[i][j] == 0 {
                            continue;
                        }
                        let c = (2.0 * (2.0 * kf * kf * qprev as f64).ln() / cnt[i][j] as f64).sqrt();
                        if phat(&wins, &cnt, i, j) > 0.5 + c {
                            d[i].push(j);
                        }
                    }
                }
                let mut best = active[0];
                for &i in &active {
                    if d[i].len() > d[best].len() {
                        best = i;
                    }
                }
                candidate = Some(best);
                champion = Some(d[best].len() == active.len() - 1);
                for &i in &active {
                    if i == best {
                        continue;
                    }
                    if d[best].contains(&i) {
                        pairs.push((best, i));
                    } else {
                        for &j in &active {
                            if j != i {
                                pairs.push((i, j));
                            }
                        }
                    }
                }
            }
        }
        let mut plan: Vec<(usize, usize)> = pairs.into_iter().map(|(a, c)| (a.min(c), a.max(c))).collect();
        plan.sort();
        plan.dedup();

        let mut truncated = false;
        for &(lo, hi) in &plan {
            let n = qr.min(t - used);
            if n < qr {
                truncated = true;
            }
            if n == 0 {
                continue;
            }
            let mut s = DuelStream::new(seed, r, lo, hi);
            let mut w = 0u64;
            for _ in 0..n {
                if s.next_uniform() < m.p(lo, hi) {
                    w += 1;
                }
            }
            wins[lo][hi] += w;
            wins[hi][lo] += n - w;
            cnt[lo][hi] += n;
            cnt[hi][lo] += n;
            used += n;
        }

        let mut eliminated = Vec::new();
        if !truncated {
            let proposed: Vec<usize> = match flavor {
                Flavor::C2b | Flavor::AllPairs => active
                    .iter()
                    .copied()
                    .filter(|&j| {
                        active.iter().any(|&i| {
                            if i == j || cnt[i][j] == 0 {
                                return false;
                            }
                            let g = ((kf * kf * b as f64 * t as f64).ln() / (2.0 * cnt[i][j] as f64)).sqrt();
                            phat(&wins, &cnt, i, j) > 0.5 + g
                        })
                    })
                    .collect(),
                Flavor::C2bKl(f) => {
                    let score: Vec<f64> = active
                        .iter()
                        .map(|&j| {
                            let mut s = 0.0;
                            for &i in &active {
                                let p = phat(&wins, &cnt, i, j);
                                if i != j && p >= 0.5 {
                                    s += bern_kl(p, 0.5) * cnt[i][j] as f64;
                                }
                            }
                            s
                        })
                        .collect();
                    let min = score.iter().cloned().fold(f64::INFINITY, f64::min);
                    active
                        .iter()
                        .zip(&score)
                        .filter(|(_, &s)| s - min > (t as f64).ln() + f)
                        .map(|(&j, _)| j)
                        .collect()
                }
            };
            // never empty the active set
            if !proposed.is_empty() && proposed.len() < active.len() {
                active.retain(|a| !proposed.contains(a));
                eliminated = proposed;
            }
        }
        rounds.push(OracleRound {
            round: r,
            active: before,
            candidate,
            champion,
            plan,
            eliminated,
        });
        r += 1;
    }
    OracleRun {
        rounds,
        comparisons: used,
        final_active: active,
    }
}

/// Random valid preference matrix; with `condorcet` arm `winner` beats all others.
pub fn random_matrix(rng: &mut ChaCha8Rng, k: usize, condorcet: bool) -> PreferenceMatrix {
    let winner = rng.random_range(0..k);
    let mut rows = vec![vec![0.5; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let mut p: f64 = rng.random_range(0.05..0.95);
            if condorcet && i == winner {
                p = rng.random_range(0.55..0.95);
            } else if condorcet && j == winner {
                p = rng.random_range(0.05..0.45);
            }
            rows[i][j] = p;
            rows[j][i] = 1.0 - p;
        }
    }
    PreferenceMatrix::from_rows(rows).expect("valid by construction")
}

/// Config for oracle and budget checks: `K <= 5`, `T <= 4096`, `B <= 12`.
pub fn random_config(rng: &mut ChaCha8Rng) -> (PreferenceMatrix, u64, u32, u64) {
    let k = rng.random_range(2..=5);
    let t = rng.random_range(k as u64..=4096);
    let b = rng.random_range(1..=12);
    let condorcet = rng.random_bool(0.8);
    let m = random_matrix(rng, k, condorcet);
    (m, t, b, rng.random())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
