//! Recovery error and success accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm_sq, DenseMatrix};

/// Threshold below which a recovery counts as successful.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    pub relative_error: f64,
    pub success: bool,
    pub dot_products: u64,
}

impl RecoveryOutcome {
    pub fn new(relative_error: f64, threshold: f64, dot_products: u64) -> Self {
        RecoveryOutcome {
            relative_error,
            success: is_success(relative_error, threshold),
            dot_products,
        }
    }
}

/// `||X - X̂||²_F / ||X||²_F`. Both norms are squared; no square root is
/// taken.
pub fn relative_error(x_true: &DenseMatrix, x_hat: &DenseMatrix) -> Result<f64> {
    let diff = x_true.sub(x_hat)?;
    let denom = frobenius_norm_sq(x_true);
    if denom == 0.0 {
        return Err(Error::DegenerateMetric("ground truth is all zero"));
    }
    Ok(frobenius_norm_sq(&diff) / denom)
}

/// Strict comparison `err < threshold`.
pub fn is_success(err: f64, threshold: f64) -> bool {
    err < threshold
}

/// Percentage of successful outcomes.
pub fn recovery_rate(outcomes: &[RecoveryOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::DegenerateMetric("no outcomes to aggregate"));
    }
    let hits = outcomes.iter().filter(|o| o.success).count();
    Ok(100.0 * hits as f64 / outcomes.len() as f64)
}
