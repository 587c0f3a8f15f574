//! Analysis constants and shape-only regret bound expressions.
//!
//! The regret bounds are `O(.)` statements; here every hidden constant is 1, so the
//! values are only meaningful as curve shapes (for plot overlays), never as thresholds.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Label attached to every bound value shown to users.
pub const SHAPE_ONLY: &str = "shape-only";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub k: usize,
    pub t: u64,
    pub b: u32,
    pub delta_min: f64,
    /// Confidence parameter of the high-probability statement.
    pub delta: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Domain(format!("K must be at least 2, got {}", self.k)));
        }
        if self.t < 2 {
            return Err(Error::Domain(format!("T must be at least 2, got {}", self.t)));
        }
        if self.b == 0 || self.b as f64 > (self.t as f64).log2() + 1e-12 {
            return Err(Error::Domain(format!(
                "B must lie in [1, log2 T] = [1, {:.3}], got {}",
                (self.t as f64).log2(),
                self.b
            )));
        }
        if !(self.delta_min > 0.0 && self.delta_min <= 0.5) {
            return Err(Error::Domain(format!("delta_min must lie in (0, 1/2], got {}", self.delta_min)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// `T^(1/B)`.
    pub fn q(&self) -> f64 {
        (self.t as f64).powf(1.0 / self.b as f64)
    }
}

/// Ceiling that ignores floating-point noise just above an integer.
fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn check_q_delta(q: f64, delta: f64) -> Result<()> {
    if q.is_nan() || q <= 1.0 || q.is_infinite() {
        return Err(Error::Domain(format!("q must exceed 1, got {q}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `ceil((1/2) log_q(1/delta))`: the round after which the `c` confidence
/// intervals hold simultaneously with probability `1 - delta`.
pub fn c_delta(q: f64, delta: f64) -> Result<u64> {
    check_q_delta(q, delta)?;
    Ok(ceil_snapped(0.5 * (1.0 / delta).ln() / q.ln()) as u64)
}

/// `32 ln(2 K^2) / delta_min^2`.
pub fn a_constant(k: usize, delta_min: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("K must be at least 2, got {k}")));
    }
    if delta_min.is_nan() || delta_min <= 0.0 || delta_min.is_infinite() {
        return Err(Error::Domain(format!("delta_min must be positive, got {delta_min}")));
    }
    Ok(32.0 * (2.0 * (k * k) as f64).ln() / (delta_min * delta_min))
}

/// Smallest `r >= C(delta) + 1` with `q^r >= 2 A ln A`.
pub fn r_delta(q: f64, delta: f64, k: usize, delta_min: f64) -> Result<u64> {
    check_q_delta(q, delta)?;
    let a = a_constant(k, delta_min)?;
    let target = 2.0 * a * a.ln();
    let by_a = ceil_snapped(target.ln() / q.ln()).max(0.0) as u64;
    Ok(by_a.max(c_delta(q, delta)? + 1))
}

/// Whether `q^r > (8 / delta_min^2) ln(2 K^2 q^r)`: past this point the `c` radius
/// at `q^r` samples is below `delta_min / 2`, so the winner defeats every arm.
pub fn anchor_condition(q: f64, r: u64, k: usize, delta_min: f64) -> bool {
    let qr = q.powf(r as f64);
    qr > 8.0 / (delta_min * delta_min) * (2.0 * (k * k) as f64 * qr).ln()
}

/// The three terms of the expected-regret bound with unit constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `T^(1/B) K^2 ln K / dmin^2 * ln(ln K / dmin)`: rounds until the winner is found.
    pub identification: f64,
    /// `T^(2/B) K^2` (times `sqrt(1/delta)` in the high-probability form).
    pub early_rounds: f64,
    /// `sum_j T^(1/B) ln(K T) / gap_j` over arms with a positive gap.
    pub elimination: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.identification + self.early_rounds + self.elimination
    }
}

fn check_gaps(gaps: &[f64]) -> Result<()> {
    if gaps.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::Domain("gaps must be finite and nonnegative".into()));
    }
    Ok(())
}

pub fn expected_bound_terms(inputs: &BoundInputs, gaps: &[f64]) -> Result<BoundTerms> {
    inputs.validate()?;
    check_gaps(gaps)?;
    Ok(terms_at(inputs.k, inputs.q(), inputs.t as f64, inputs.delta_min, gaps))
}

/// Bound terms at horizon `t` with the growth base `q` held fixed, without
/// input validation. Used to draw the bound as a curve over `t`.
pub fn terms_at(k: usize, q: f64, t: f64, delta_min: f64, gaps: &[f64]) -> BoundTerms {
    let k = k as f64;
    let dmin = delta_min;
    let identification = q * k * k * k.ln() / (dmin * dmin) * (k.ln() / dmin).ln();
    let early_rounds = q * q * k * k;
    let elimination = gaps
        .iter()
        .filter(|&&g| g > 0.0)
        .map(|&g| q * (k * t).ln() / g)
        .sum();
    BoundTerms {
        identification,
        early_rounds,
        elimination,
    }
}

/// Expected regret bound, shape only.
pub fn regret_bound_expected(inputs: &BoundInputs, gaps: &[f64]) -> Result<f64> {
    expected_bound_terms(inputs, gaps).map(|t| t.total())
}

/// High-probability (`1 - delta - 1/T`) regret bound, shape only.
pub fn regret_bound_high_prob(inputs: &BoundInputs, gaps: &[f64]) -> Result<f64> {
    let mut terms = expected_bound_terms(inputs, gaps)?;
    terms.early_rounds *= (1.0 / inputs.delta).sqrt();
    Ok(terms.total())
}
