//! Theoretical constants and worst-case evaluation bounds for a configuration.

use crate::error::{ArqError, Result};
use crate::solver::SolverConfig;
use crate::tensor::factorial;

/// Problem-dependent inputs to the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// Largest Lipschitz constant over derivative orders `0..=p`, at least 1.
    pub l_f: f64,
    /// Lipschitz constant of the `p`-th derivative.
    pub l_fp: f64,
    /// `f(x0) - f_low`, non-negative.
    pub f0_minus_flow: f64,
}

impl ProblemConstants {
    /// Uses a single constant for both Lipschitz quantities.
    pub fn uniform(l_f: f64, f0_minus_flow: f64) -> Self {
        ProblemConstants {
            l_f,
            l_fp: l_f,
            f0_minus_flow,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub p: usize,
    pub q: usize,
    pub l_f: f64,
    pub l_fp: f64,
    pub l_bar_f: f64,
    pub sigma_max: f64,
    pub kappa_s: f64,
    pub kappa_delta_min: f64,
    pub kappa_dm: f64,
    pub pi: Vec<f64>,
    pub step_lower_bounds: Vec<f64>,
    pub kappa_step2: f64,
    pub kappa_acc: f64,
    pub k_acc_min: u64,
    /// Coefficient of the successful-iteration bound.
    pub kappa_succ: f64,
    pub kappa_a: f64,
    pub kappa_c: f64,
    pub kappa_e: f64,
    pub kappa_f: f64,
    pub successful_bound: f64,
    pub value_eval_bound: f64,
    pub deriv_eval_bound: f64,
    omega: f64,
    varsigma: f64,
    theta: f64,
}

impl BoundReport {
    /// Lower-bound factor on optimality radii at regularization weight `sigma`.
    pub fn kappa_delta(&self, sigma: f64) -> f64 {
        kappa_delta(self.varsigma, self.theta, self.omega, self.l_bar_f, sigma)
    }

    /// Flat `key = value` listing.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            ("p".into(), self.p.to_string()),
            ("q".into(), self.q.to_string()),
            ("L_f".into(), format!("{:e}", self.l_f)),
            ("L_fp".into(), format!("{:e}", self.l_fp)),
            ("L_bar_f".into(), format!("{:e}", self.l_bar_f)),
            ("sigma_max".into(), format!("{:e}", self.sigma_max)),
            ("kappa_s".into(), format!("{:e}", self.kappa_s)),
            ("kappa_delta_min".into(), format!("{:e}", self.kappa_delta_min)),
            ("kappa_dm".into(), format!("{:e}", self.kappa_dm)),
            ("pi".into(), join(&self.pi)),
            ("step_lower_bounds".into(), join(&self.step_lower_bounds)),
            ("kappa_step2".into(), format!("{:e}", self.kappa_step2)),
            ("kappa_acc".into(), format!("{:e}", self.kappa_acc)),
            ("k_acc_min".into(), self.k_acc_min.to_string()),
            ("kappa_S".into(), format!("{:e}", self.kappa_succ)),
            ("kappa_A".into(), format!("{:e}", self.kappa_a)),
            ("kappa_C".into(), format!("{:e}", self.kappa_c)),
            ("kappa_E".into(), format!("{:e}", self.kappa_e)),
            ("kappa_F".into(), format!("{:e}", self.kappa_f)),
            ("successful_bound".into(), format!("{:e}", self.successful_bound)),
            ("value_eval_bound".into(), format!("{:e}", self.value_eval_bound)),
            ("deriv_eval_bound".into(), format!("{:e}", self.deriv_eval_bound)),
        ]
    }
}

pub fn kappa_delta(varsigma: f64, theta: f64, omega: f64, l_bar_f: f64, sigma: f64) -> f64 {
    varsigma * theta * (1.0 - omega) / (8.0 * (1.0 + omega) * (3.0 * l_bar_f + sigma))
}

/// Upper bound on `sigma_k`.
pub fn sigma_max(config: &SolverConfig, l_fp: f64) -> f64 {
    config.sigma0.max(config.gamma3 * 4.0 * l_fp / (1.0 - config.eta2))
}

/// Upper bound on the step norm.
pub fn kappa_s(p: usize, l_bar_f: f64, sigma_min: f64) -> f64 {
    let a = 2.0 * l_bar_f * factorial(p + 1) / sigma_min;
    a.max(a.powf(1.0 / p as f64))
}

/// Bound on the total number of successful and unsuccessful iterations.
pub fn iteration_bound(config: &SolverConfig, successful: usize, sigma_max: f64) -> f64 {
    let g1 = config.gamma1.ln().abs();
    let g2 = config.gamma2.ln();
    successful as f64 * (1.0 + g1 / g2) + (sigma_max / config.sigma0).ln() / g2
}

pub fn compute_bounds(config: &SolverConfig, constants: ProblemConstants) -> Result<BoundReport> {
    config.validate()?;
    let ProblemConstants {
        l_f,
        l_fp,
        f0_minus_flow,
    } = constants;
    if !(l_f >= 1.0) {
        return Err(ArqError::InvalidArgument(format!("L_f must be >= 1, got {l_f}")));
    }
    if !(l_fp >= 0.0 && l_fp <= l_f) {
        return Err(ArqError::InvalidArgument(format!(
            "L_fp must lie in [0, L_f], got {l_fp}"
        )));
    }
    if !(f0_minus_flow >= 0.0) {
        return Err(ArqError::InvalidArgument(format!(
            "f(x0) - f_low must be >= 0, got {f0_minus_flow}"
        )));
    }
    let (p, q) = (config.p, config.q);
    let (omega, theta, vs) = (config.omega, config.theta, config.varsigma);
    let pf = p as f64;
    let qf = q as f64;
    let l_bar_f = l_f + config.acc_max;
    let s_max = sigma_max(config, l_fp);
    let k_s = kappa_s(p, l_bar_f, config.sigma_min);
    let k_dmin = kappa_delta(vs, theta, omega, l_bar_f, s_max);

    let small_q = q <= 2;
    let pi: Vec<f64> = (1..=q)
        .map(|j| {
            let jf = j as f64;
            if small_q {
                (pf + 1.0) / (pf - jf + 1.0)
            } else {
                jf * (pf + 1.0) / pf
            }
        })
        .collect();

    let base = vs * (1.0 - theta) * (1.0 - omega);
    let denom_q = 2.0 * factorial(q) * (l_fp + s_max) * (1.0 + omega);
    let kappa_dm = if small_q {
        config.sigma_min / factorial(p + 1) * (base / denom_q).powf((pf + 1.0) / (pf - qf + 1.0))
    } else {
        config.sigma_min / factorial(p + 1)
            * (base * k_dmin.powi(q as i32 - 1) / denom_q).powf(qf * (pf + 1.0) / pf)
    };

    let step_lower_bounds: Vec<f64> = (1..=q)
        .map(|j| {
            let jf = j as f64;
            let eps = config.epsilons[j - 1];
            let denom = 2.0 * factorial(j) * (l_fp + s_max) * (1.0 + omega);
            if small_q {
                (base / denom).powf(1.0 / (pf - jf + 1.0)) * eps.powf(1.0 / (pf - jf + 1.0))
            } else {
                (base * k_dmin.powi(j as i32 - 1) / denom).powf(1.0 / pf) * eps.powf(jf / pf)
            }
        })
        .collect();

    let kappa_step2 = vs * omega * k_dmin.powi(q as i32) / (4.0 * factorial(q) * (1.0 + omega))
        * (1.0 / 1f64.max(k_s.powi(p as i32))).min(theta * (1.0 - omega) / (3.0 * (1.0 + omega)));
    let kappa_acc =
        (vs * omega / (4.0 * factorial(q)) * k_dmin.powi(q as i32 - 1)).min(kappa_step2);
    let eps_min = config.epsilon_min();
    let k_acc_min = if config.acc_max > 0.0 {
        let raw = ((qf + 1.0) * eps_min.ln() + (kappa_acc / config.acc_max).ln())
            / config.gamma_acc.ln();
        raw.floor().max(0.0) as u64
    } else {
        0
    };

    let g_ratio = 1.0 + config.gamma1.ln().abs() / config.gamma2.ln();
    let prefactor = factorial(p + 1) / ((config.eta1 - 2.0 * omega) * config.sigma_min);
    let (kappa_succ, kappa_a) = if small_q {
        let k = prefactor
            * (2.0 * factorial(q) * (l_fp + config.acc_max + s_max) * (1.0 + omega)
                / ((1.0 - theta) * (1.0 - omega)));
        (k, 2.0 * k * g_ratio)
    } else {
        let k = prefactor
            * (2.0 * factorial(q) * (l_fp + s_max) * (1.0 + omega)
                / ((1.0 - theta) * (1.0 - omega) * k_dmin.powi(q as i32 - 1)))
            .powf((pf + 1.0) / pf);
        (k, k * g_ratio)
    };
    let kappa_c = 2.0 / config.gamma2.ln() * (s_max / config.sigma0).ln() + 2.0;
    let kappa_e = (qf + 1.0) / config.gamma_acc.ln().abs();
    let kappa_f = (kappa_acc / config.acc_max).ln().abs() / config.gamma_acc.ln().abs() + 2.0;
    let kappa_f = if kappa_f.is_finite() { kappa_f } else { 2.0 };

    let min_eps_pi = config
        .epsilons
        .iter()
        .zip(&pi)
        .map(|(e, pj)| e.powf(*pj))
        .fold(f64::INFINITY, f64::min);
    let ratio = f0_minus_flow / min_eps_pi;
    let successful_bound = kappa_succ * f0_minus_flow / eps_min.powf(pi[q - 1]) + 1.0;
    let value_eval_bound = kappa_a * ratio + kappa_c;
    let deriv_eval_bound = kappa_succ * ratio + kappa_e * eps_min.ln().abs() + kappa_f;

    Ok(BoundReport {
        p,
        q,
        l_f,
        l_fp,
        l_bar_f,
        sigma_max: s_max,
        kappa_s: k_s,
        kappa_delta_min: k_dmin,
        kappa_dm,
        pi,
        step_lower_bounds,
        kappa_step2,
        kappa_acc,
        k_acc_min,
        kappa_succ,
        kappa_a,
        kappa_c,
        kappa_e,
        kappa_f,
        successful_bound,
        value_eval_bound,
        deriv_eval_bound,
        omega,
        varsigma: vs,
        theta,
    })
}
