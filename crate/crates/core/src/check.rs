//! Three-valued accuracy verification of an inexact Taylor decrement.

use crate::error::{invalid, Result};
use crate::taylor::accuracy_sum;
use crate::tensor::factorial;

/// Verdict of [`check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckOutcome {
    /// The decrement error is at most `omega` times the decrement itself.
    Relative,
    /// The decrement and its error are both absolutely small.
    Absolute,
    /// Neither guarantee can be given with the current accuracies.
    Insufficient,
}

impl CheckOutcome {
    pub fn is_sufficient(&self) -> bool {
        !matches!(self, CheckOutcome::Insufficient)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckOutcome::Relative => "relative",
            CheckOutcome::Absolute => "absolute",
            CheckOutcome::Insufficient => "insufficient",
        }
    }
}

/// Decides whether accuracies `eps_bar[0..r]` on the derivatives of orders
/// `1..=r` make the decrement `decrement`, computed over a ball of radius
/// `delta`, trustworthy in the relative sense, the absolute sense at level
/// `xi`, or neither. Ties count as passing.
pub fn check(
    delta: f64,
    decrement: f64,
    eps_bar: &[f64],
    xi: f64,
    omega: f64,
) -> Result<CheckOutcome> {
    if decrement < 0.0 || decrement.is_nan() {
        return Err(invalid(format!("decrement must be >= 0, got {decrement}")));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("radius must be > 0, got {delta}")));
    }
    if eps_bar.is_empty() || eps_bar.iter().any(|e| !(*e >= 0.0)) {
        return Err(invalid("accuracies must be a non-empty list of values >= 0"));
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(invalid(format!("omega must lie in (0,1), got {omega}")));
    }
    let r = eps_bar.len();
    let error_sum = accuracy_sum(eps_bar, delta);
    if decrement > 0.0 && error_sum <= omega * decrement {
        return Ok(CheckOutcome::Relative);
    }
    if error_sum <= omega * xi * delta.powi(r as i32) / factorial(r) {
        return Ok(CheckOutcome::Absolute);
    }
    Ok(CheckOutcome::Insufficient)
}
