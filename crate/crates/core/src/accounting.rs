//! Noise calibration and moments accounting.
//!
//! Calibration covers the one-shot tangent-space Gaussian mechanism and the
//! iterative schedule used by the optimizer. The [`MomentsLedger`] records a
//! per-iteration bound on the lambda-th moment of the privacy loss (full
//! batch or subsampled without replacement), composes the bounds additively,
//! and converts the result back to an `(epsilon, delta)` statement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AccountingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "batch must be strictly smaller than the dataset for subsampled moments (b={b}, n={n})"
    )]
    BatchNotSmaller { b: usize, n: usize },
    #[error("no moment order in the grid satisfies every entry's preconditions")]
    NoValidMomentOrder,
    #[error("ledger is empty")]
    EmptyLedger,
}

/// Target `(epsilon, delta)` guarantee plus the calibration constant `c`
/// multiplying the iterative noise formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_c() -> f64 {
    1.0
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, AccountingError> {
        Self::with_constant(epsilon, delta, 1.0)
    }

    pub fn with_constant(epsilon: f64, delta: f64, c: f64) -> Result<Self, AccountingError> {
        if !(epsilon > 0.0) {
            return Err(AccountingError::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AccountingError::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(c > 0.0) {
            return Err(AccountingError::InvalidParameter(format!(
                "calibration constant must be positive, got {c}"
            )));
        }
        Ok(Self { epsilon, delta, c })
    }
}

/// Noise variance for a single release of a tangent-space query with the
/// given sensitivity (measured in the Riemannian norm):
/// `sigma^2 = 2 ln(1.25/delta) Delta^2 / epsilon^2`.
pub fn calibrate_mechanism(
    sensitivity: f64,
    budget: &PrivacyBudget,
) -> Result<f64, AccountingError> {
    if !(sensitivity > 0.0) {
        return Err(AccountingError::InvalidParameter(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    Ok(2.0 * (1.25 / budget.delta).ln() * sensitivity * sensitivity
        / (budget.epsilon * budget.epsilon))
}

/// Noise scale for an iterative run, together with the parameters it was
/// derived from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub sigma2: f64,
    pub t: usize,
    pub l0: f64,
    pub n: usize,
    pub b: usize,
}

impl NoiseCalibration {
    /// A calibration with the noise forced to zero (non-private reference
    /// runs and zero-noise reduction tests).
    pub fn noiseless(t: usize, l0: f64, n: usize, b: usize) -> Self {
        Self {
            sigma2: 0.0,
            t,
            l0,
            n,
            b,
        }
    }

    /// Whether the variance floor `4 L0^2 / b^2` was the binding constraint.
    pub fn floor_active(&self) -> bool {
        let floor = 4.0 * self.l0 * self.l0 / (self.b as f64 * self.b as f64);
        self.sigma2 <= floor
    }
}

/// Per-iteration noise for a `T`-step run:
/// `sigma^2 = max(c T ln(1/delta) L0^2 / (n^2 eps^2), 4 L0^2 / b^2)`.
pub fn calibrate_iterative(
    t: usize,
    l0: f64,
    n: usize,
    b: usize,
    budget: &PrivacyBudget,
) -> Result<NoiseCalibration, AccountingError> {
    if t == 0 {
        return Err(AccountingError::InvalidParameter(
            "iteration count must be at least 1".into(),
        ));
    }
    if !(l0 > 0.0) {
        return Err(AccountingError::InvalidParameter(format!(
            "L0 must be positive, got {l0}"
        )));
    }
    if n == 0 || b == 0 || b > n {
        return Err(AccountingError::InvalidParameter(format!(
            "need 1 <= b <= n, got b={b}, n={n}"
        )));
    }
    let nf = n as f64;
    let bf = b as f64;
    let budgeted = budget.c * t as f64 * (1.0 / budget.delta).ln() * l0 * l0
        / (nf * nf * budget.epsilon * budget.epsilon);
    let floor = 4.0 * l0 * l0 / (bf * bf);
    Ok(NoiseCalibration {
        sigma2: budgeted.max(floor),
        t,
        l0,
        n,
        b,
    })
}

/// Moment bound for a full-batch mean query of an `L0`-Lipschitz per-sample
/// map: `K(lambda) <= 2 lambda (lambda + 1) L0^2 / (n^2 sigma^2)`.
pub fn moment_full(lambda: u32, l0: f64, n: usize, sigma2: f64) -> f64 {
    let lf = lambda as f64;
    let nf = n as f64;
    2.0 * lf * (lf + 1.0) * l0 * l0 / (nf * nf * sigma2)
}

/// Why a subsampled moment bound was not applicable at a given order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefusalReason {
    /// `sigma^2 < 4 L0^2 / b^2`.
    VarianceBelowFloor,
    /// The order exceeds `2 sigma^2 ln(n / (b (lambda+1) (1 + b^2 sigma^2 / (4 L0^2)))) / 3`.
    OrderTooLarge,
}

/// Result of a subsampled moment-bound query: either the bound or a typed
/// refusal the caller can use to drop that order from the search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentBound {
    Available(f64),
    Refused(RefusalReason),
}

impl MomentBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            MomentBound::Available(v) => Some(*v),
            MomentBound::Refused(_) => None,
        }
    }
}

/// Moment bound for a subsampled (without replacement) mean query:
/// `K(lambda) <= 15 (lambda + 1) L0^2 / (n^2 sigma^2)` under the stated
/// preconditions, evaluated literally.
pub fn moment_subsampled(
    lambda: u32,
    l0: f64,
    n: usize,
    b: usize,
    sigma2: f64,
) -> Result<MomentBound, AccountingError> {
    if b >= n {
        return Err(AccountingError::BatchNotSmaller { b, n });
    }
    if !(l0 > 0.0) || !(sigma2 > 0.0) {
        return Err(AccountingError::InvalidParameter(format!(
            "need positive L0 and sigma^2, got L0={l0}, sigma^2={sigma2}"
        )));
    }
    let lf = lambda as f64;
    let nf = n as f64;
    let bf = b as f64;
    let floor = 4.0 * l0 * l0 / (bf * bf);
    if sigma2 < floor {
        return Ok(MomentBound::Refused(RefusalReason::VarianceBelowFloor));
    }
    let inner = nf / (bf * (lf + 1.0) * (1.0 + bf * bf * sigma2 / (4.0 * l0 * l0)));
    if inner <= 1.0 {
        // ln(inner) <= 0: no positive order can satisfy the condition.
        return Ok(MomentBound::Refused(RefusalReason::OrderTooLarge));
    }
    let max_lambda = 2.0 * sigma2 * inner.ln() / 3.0;
    if lf > max_lambda {
        return Ok(MomentBound::Refused(RefusalReason::OrderTooLarge));
    }
    Ok(MomentBound::Available(
        15.0 * (lf + 1.0) * l0 * l0 / (nf * nf * sigma2),
    ))
}

/// Renyi-to-DP conversion: an `(alpha, rho)`-Renyi guarantee yields
/// `(rho + ln(1/delta)/(alpha - 1), delta)`-DP.
pub fn rdp_to_dp(alpha: f64, rho: f64, delta: f64) -> Result<f64, AccountingError> {
    if !(alpha > 1.0) {
        return Err(AccountingError::InvalidParameter(format!(
            "alpha must exceed 1, got {alpha}"
        )));
    }
    if !(rho > 0.0) {
        return Err(AccountingError::InvalidParameter(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AccountingError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(rho + (1.0 / delta).ln() / (alpha - 1.0))
}

/// A single mechanism release recorded in the ledger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LedgerEntry {
    FullBatch {
        l0: f64,
        n: usize,
        sigma2: f64,
    },
    Subsampled {
        l0: f64,
        n: usize,
        b: usize,
        sigma2: f64,
    },
}

impl LedgerEntry {
    /// Moment bound of this entry at order `lambda`, or a refusal.
    fn moment(&self, lambda: u32) -> Result<MomentBound, AccountingError> {
        match *self {
            LedgerEntry::FullBatch { l0, n, sigma2 } => {
                Ok(MomentBound::Available(moment_full(lambda, l0, n, sigma2)))
            }
            LedgerEntry::Subsampled { l0, n, b, sigma2 } => {
                moment_subsampled(lambda, l0, n, b, sigma2)
            }
        }
    }
}

pub const DEFAULT_LAMBDA_MAX: u32 = 64;

/// Composition ledger: one entry per mechanism invocation, plus the grid of
/// integer moment orders searched during audit.
#[derive(Clone, Debug)]
pub struct MomentsLedger {
    entries: Vec<LedgerEntry>,
    lambda_grid: Vec<u32>,
}

impl Default for MomentsLedger {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of an audit: the certified epsilon, the order that achieved it,
/// and how many grid orders were skipped due to refused preconditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditReport {
    pub epsilon: f64,
    pub best_lambda: u32,
    pub skipped_orders: usize,
}

impl MomentsLedger {
    /// Ledger with the default order grid `1..=64`.
    pub fn new() -> Self {
        Self::with_lambda_grid((1..=DEFAULT_LAMBDA_MAX).collect())
    }

    pub fn with_lambda_grid(lambda_grid: Vec<u32>) -> Self {
        Self {
            entries: Vec::new(),
            lambda_grid,
        }
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn lambda_grid(&self) -> &[u32] {
        &self.lambda_grid
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn record_full_batch(&mut self, l0: f64, n: usize, sigma2: f64) {
        self.entries.push(LedgerEntry::FullBatch { l0, n, sigma2 });
    }

    pub fn record_subsampled(&mut self, l0: f64, n: usize, b: usize, sigma2: f64) {
        self.entries
            .push(LedgerEntry::Subsampled { l0, n, b, sigma2 });
    }

    /// Composed moment bound `K(lambda) = sum_t K_t(lambda)`, or a refusal if
    /// any entry refuses that order.
    pub fn composed_moment(&self, lambda: u32) -> Result<MomentBound, AccountingError> {
        let mut total = 0.0;
        for entry in &self.entries {
            match entry.moment(lambda)? {
                MomentBound::Available(v) => total += v,
                MomentBound::Refused(r) => return Ok(MomentBound::Refused(r)),
            }
        }
        Ok(MomentBound::Available(total))
    }

    /// Converts the composed moments into the best `(epsilon, delta)`-DP
    /// statement over the order grid:
    /// `epsilon = min_lambda (K(lambda) + ln(1/delta)) / lambda`,
    /// which is the Renyi conversion at `alpha = lambda + 1`.
    pub fn audit(&self, delta: f64) -> Result<AuditReport, AccountingError> {
        if self.entries.is_empty() {
            return Err(AccountingError::EmptyLedger);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AccountingError::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        let log_inv_delta = (1.0 / delta).ln();
        let mut best: Option<(f64, u32)> = None;
        let mut skipped = 0;
        for &lambda in &self.lambda_grid {
            if lambda == 0 {
                skipped += 1;
                continue;
            }
            match self.composed_moment(lambda)? {
                MomentBound::Refused(_) => skipped += 1,
                MomentBound::Available(k) => {
                    let eps = (k + log_inv_delta) / lambda as f64;
                    if best.is_none_or(|(e, _)| eps < e) {
                        best = Some((eps, lambda));
                    }
                }
            }
        }
        match best {
            Some((epsilon, best_lambda)) => Ok(AuditReport {
                epsilon,
                best_lambda,
                skipped_orders: skipped,
            }),
            None => Err(AccountingError::NoValidMomentOrder),
        }
    }
}

/// Analytic lambda-th cumulant of the privacy loss between two tangent
/// Gaussians with common scale `sigma` and mean separation `dist` (measured
/// in the Riemannian norm): `lambda (lambda + 1) dist^2 / (2 sigma^2)`.
pub fn gaussian_pair_cumulant(lambda: u32, mean_distance: f64, sigma2: f64) -> f64 {
    let lf = lambda as f64;
    lf * (lf + 1.0) * mean_distance * mean_distance / (2.0 * sigma2)
}
