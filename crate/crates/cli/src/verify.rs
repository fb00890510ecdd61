//! Certificate verification against exact derivatives.

use arq_core::{Certificate, Problem};

use crate::reference;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderStatus {
    Verified,
    Violated,
    /// Order three in dimension above three.
    Unsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCheck {
    pub j: usize,
    pub delta: f64,
    pub phi: Option<f64>,
    /// `epsilon_j delta_j^j / j!`.
    pub threshold: f64,
    pub status: OrderStatus,
}

/// Recomputes every order's optimality measure at the certified point and
/// radius with exact derivatives.
pub fn verify_certificate(problem: &dyn Problem, cert: &Certificate) -> Vec<OrderCheck> {
    cert.epsilons
        .iter()
        .zip(&cert.delta_eps)
        .enumerate()
        .map(|(i, (eps, delta))| {
            let j = i + 1;
            let fact: f64 = (1..=j).map(|k| k as f64).product();
            let threshold = eps * delta.powi(j as i32) / fact;
            let phi = reference::optimality_measure(problem, &cert.x_eps, j, *delta);
            let status = match phi {
                None => OrderStatus::Unsupported,
                Some(v) if v <= threshold => OrderStatus::Verified,
                Some(_) => OrderStatus::Violated,
            };
            OrderCheck {
                j,
                delta: *delta,
                phi,
                threshold,
                status,
            }
        })
        .collect()
}

/// True when no supported order was violated.
pub fn all_verified(checks: &[OrderCheck]) -> bool {
    checks.iter().all(|c| c.status != OrderStatus::Violated)
}
