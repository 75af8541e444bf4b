//! Pre-copy live migration time, cost coefficient, and the gain/cost/profit
//! of moving one avatar.
//!
//! Units: bits and seconds for the time model, ms for delays. The penalty
//! coefficient `alpha` bridges ms of delay and seconds of migration time.

use crate::domain::DelayMatrix;
use crate::workload::AvatarWorkload;

/// Relative slack when comparing a round's payload against the stop-and-copy
/// threshold, so that `(D/R)^n · M` landing exactly on `M_th` is not pushed
/// over by rounding.
const STOP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MigrationParams {
    /// Memory to transfer in the initial round.
    pub memory_bits: f64,
    /// Page-dirtying rate during migration.
    pub dirty_bits_per_s: f64,
    /// Bandwidth reserved for migration.
    pub rate_bits_per_s: f64,
    /// Stop-and-copy threshold.
    pub threshold_bits: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MigrationError {
    #[error("divergent migration: dirty rate {dirty_bits_per_s} bit/s >= migration bandwidth {rate_bits_per_s} bit/s")]
    Divergent {
        dirty_bits_per_s: f64,
        rate_bits_per_s: f64,
    },
    #[error("invalid migration parameters: {0}")]
    Invalid(&'static str),
}

impl MigrationParams {
    // Negated comparisons so that NaN fields are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check(&self) -> Result<f64, MigrationError> {
        if !(self.memory_bits > 0.0 && self.memory_bits.is_finite()) {
            return Err(MigrationError::Invalid("memory must be positive"));
        }
        if !(self.threshold_bits > 0.0) {
            return Err(MigrationError::Invalid("threshold must be positive"));
        }
        if !(self.rate_bits_per_s > 0.0 && self.rate_bits_per_s.is_finite()) {
            return Err(MigrationError::Invalid("rate must be positive"));
        }
        if !(self.dirty_bits_per_s >= 0.0) {
            return Err(MigrationError::Invalid("dirty rate must be >= 0"));
        }
        if self.rate_bits_per_s <= self.dirty_bits_per_s {
            return Err(MigrationError::Divergent {
                dirty_bits_per_s: self.dirty_bits_per_s,
                rate_bits_per_s: self.rate_bits_per_s,
            });
        }
        Ok(self.dirty_bits_per_s / self.rate_bits_per_s)
    }

    fn within_threshold(&self, payload_bits: f64) -> bool {
        payload_bits <= self.threshold_bits * (1.0 + STOP_SLACK)
    }
}

/// Number of pre-copy rounds N: the smallest N ≥ 1 whose round N−1 carries
/// at most the threshold, i.e. ⌈log_{D/R}(M_th/M) + 1⌉.
pub fn rounds(params: &MigrationParams) -> Result<u32, MigrationError> {
    let ratio = params.check()?;
    if ratio == 0.0 || params.within_threshold(params.memory_bits) {
        return Ok(1);
    }
    let estimate = ((params.threshold_bits / params.memory_bits).ln() / ratio.ln() + 1.0).ceil();
    let mut n = estimate.max(1.0) as u32;
    // The log form is only a starting point; settle on the exact stopping rule.
    let payload = |round: u32| ratio.powi(round as i32) * params.memory_bits;
    while n > 1 && params.within_threshold(payload(n - 2)) {
        n -= 1;
    }
    while !params.within_threshold(payload(n - 1)) {
        n += 1;
    }
    Ok(n)
}

/// Total pre-copy migration time: M/(R−D) · [1 − (D/R)^{N+1}].
pub fn migration_time(params: &MigrationParams) -> Result<f64, MigrationError> {
    let n = rounds(params)?;
    let ratio = params.dirty_bits_per_s / params.rate_bits_per_s;
    if ratio == 0.0 {
        return Ok(params.memory_bits / params.rate_bits_per_s);
    }
    let geometric = 1.0 - ratio.powi(n as i32 + 1);
    Ok(params.memory_bits / (params.rate_bits_per_s - params.dirty_bits_per_s) * geometric)
}

/// Independent check of [`migration_time`] that replays the rounds one by
/// one: T₀ = M/R, Tₙ = (D/R)·Tₙ₋₁, stopping after the first round whose
/// payload Tₙ·R is within the threshold and then adding one final round for
/// the residue. Returns the total time and the round count N.
pub fn migration_time_by_rounds(params: &MigrationParams) -> Result<(f64, u32), MigrationError> {
    let ratio = params.check()?;
    let mut round_time = params.memory_bits / params.rate_bits_per_s;
    let mut total = round_time;
    let mut n = 0;
    while !params.within_threshold(round_time * params.rate_bits_per_s) {
        round_time *= ratio;
        total += round_time;
        n += 1;
    }
    total += round_time * ratio;
    Ok((total, n + 1))
}

/// κ = α · (w_net·u_net + w_disk·u_disk + w_mem·u_mem + w_cpu·u_cpu).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactWeights {
    pub w_net: f64,
    pub w_mem: f64,
    pub w_disk: f64,
    pub w_cpu: f64,
    pub alpha: f64,
}

impl ImpactWeights {
    pub fn weighted_utilization(&self, w: &AvatarWorkload) -> f64 {
        self.w_net * w.u_net + self.w_disk * w.u_disk + self.w_mem * w.u_mem + self.w_cpu * w.u_cpu
    }
}

pub fn cost_coefficient(workload: &AvatarWorkload, weights: &ImpactWeights) -> f64 {
    weights.alpha * weights.weighted_utilization(workload)
}

/// Delay reduction at BS `next_bs` from moving `from` → `to`. Negative when
/// the move lengthens the path.
pub fn migration_gain(from: usize, to: usize, next_bs: usize, delays: &DelayMatrix) -> f64 {
    if from == to {
        return 0.0;
    }
    delays.get(from, next_bs) - delays.get(to, next_bs)
}

pub fn migration_cost(kappa: f64, migration_time_s: f64, moved: bool) -> f64 {
    if moved {
        kappa * migration_time_s
    } else {
        0.0
    }
}

pub fn profit(gain: f64, cost: f64) -> f64 {
    gain - cost
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProfitBreakdown {
    pub gain_ms: f64,
    pub cost: f64,
    pub profit: f64,
    /// Zero unless `moved`.
    pub migration_time_s: f64,
    pub moved: bool,
}

impl ProfitBreakdown {
    pub fn evaluate(
        from: usize,
        to: usize,
        next_bs: usize,
        delays: &DelayMatrix,
        kappa: f64,
        migration_time_s: f64,
    ) -> Self {
        let moved = from != to;
        let gain_ms = migration_gain(from, to, next_bs, delays);
        let cost = migration_cost(kappa, migration_time_s, moved);
        Self {
            gain_ms,
            cost,
            profit: profit(gain_ms, cost),
            migration_time_s: if moved { migration_time_s } else { 0.0 },
            moved,
        }
    }
}
