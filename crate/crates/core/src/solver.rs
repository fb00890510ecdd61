//! The adaptive-regularization main loop with explicit dynamic accuracy.
//!
//! Each iteration runs the optimality-measure loop (Step 1), computes and
//! verifies a step (Step 2), accepts or rejects it (Step 3), updates the
//! regularization weight (Step 4), or tightens the derivative accuracies
//! (Step 5) whenever a verification reports insufficient accuracy.

use std::sync::Arc;

use log::{debug, trace};

use crate::check::{check, CheckOutcome};
use crate::error::{ArqError, Result};
use crate::oracle::{EvalCounters, NoiseModel, Oracle};
use crate::problems::Problem;
use crate::subsolvers::{
    minimize_model, optimality_measure_with, InnerTermination, MeasureConfig, StepResult,
    DEFAULT_INNER_ITERS,
};
use crate::taylor::{DerivativeBundle, RegularizedModel};
use crate::tensor::{factorial, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p: usize,
    pub q: usize,
    pub epsilons: Vec<f64>,
    pub sigma0: f64,
    pub sigma_min: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Accuracy reduction factor applied in Step 5.
    pub gamma_acc: f64,
    pub omega: f64,
    pub varsigma: f64,
    pub theta: f64,
    pub delta0: Vec<f64>,
    pub acc0: Vec<f64>,
    pub acc_max: f64,
    pub max_iters: usize,
    pub inner_max_iters: usize,
    pub measure: MeasureConfig,
}

impl SolverConfig {
    /// Default constants for degree `p`, order `q` and targets `epsilons`.
    pub fn new(p: usize, q: usize, epsilons: Vec<f64>) -> Self {
        let measure = MeasureConfig::default();
        SolverConfig {
            p,
            q,
            epsilons,
            sigma0: 1.0,
            sigma_min: 1e-8,
            eta1: 0.1,
            eta2: 0.9,
            gamma1: 0.5,
            gamma2: 2.0,
            gamma3: 4.0,
            gamma_acc: 0.25,
            omega: 0.02,
            varsigma: measure.varsigma(q),
            theta: 0.5,
            delta0: vec![1.0; q],
            acc0: vec![0.1; p],
            acc_max: 1.0,
            max_iters: 2000,
            inner_max_iters: DEFAULT_INNER_ITERS,
            measure,
        }
    }

    pub fn epsilon_min(&self) -> f64 {
        self.epsilons.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(ArqError::Config(msg));
        if !(1..=3).contains(&self.q) {
            return fail(format!("q must be 1, 2 or 3, got {}", self.q));
        }
        if self.p < self.q || self.p > 3 {
            return fail(format!("p must satisfy q <= p <= 3, got p = {}", self.p));
        }
        if self.epsilons.len() != self.q || self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return fail(format!("epsilons must be {} values in (0,1)", self.q));
        }
        if !(self.sigma0 > 0.0) {
            return fail("sigma0 must be > 0".into());
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma0) {
            return fail("sigma_min must lie in (0, sigma0]".into());
        }
        if !(0.0 < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return fail(format!(
                "need 0 < eta1 <= eta2 < 1, got eta1 = {}, eta2 = {}",
                self.eta1, self.eta2
            ));
        }
        if !(0.0 < self.gamma1 && self.gamma1 < 1.0 && 1.0 < self.gamma2 && self.gamma2 < self.gamma3) {
            return fail("need 0 < gamma1 < 1 < gamma2 < gamma3".into());
        }
        if !(self.gamma_acc > 0.0 && self.gamma_acc < 1.0) {
            return fail("gamma_acc must lie in (0,1)".into());
        }
        let omega_cap = (0.5 * self.eta1).min(0.25 * (1.0 - self.eta2));
        if !(self.omega > 0.0 && self.omega < omega_cap) {
            return fail(format!("omega must lie in (0, {omega_cap}), got {}", self.omega));
        }
        let certified = self.measure.varsigma(self.q);
        if !(self.varsigma > 0.0 && self.varsigma <= 1.0) {
            return fail("varsigma must lie in (0,1]".into());
        }
        if self.varsigma > certified {
            return fail(format!(
                "varsigma {} exceeds the subsolver guarantee {certified}",
                self.varsigma
            ));
        }
        if !(self.theta > 0.0) {
            return fail("theta must be > 0".into());
        }
        if self.delta0.len() != self.q
            || self
                .delta0
                .iter()
                .zip(&self.epsilons)
                .any(|(d, e)| !(*d > *e && *d <= 1.0))
        {
            return fail("delta0 must lie in (epsilon, 1] componentwise".into());
        }
        if !(self.acc_max >= 0.0) {
            return fail("acc_max must be >= 0".into());
        }
        if self.acc0.len() != self.p || self.acc0.iter().any(|a| !(*a >= 0.0 && *a <= self.acc_max)) {
            return fail(format!("acc0 must be {} values in [0, acc_max]", self.p));
        }
        if self.max_iters == 0 || self.inner_max_iters == 0 {
            return fail("iteration caps must be positive".into());
        }
        Ok(())
    }

    fn inner_rule(&self) -> InnerTermination {
        InnerTermination {
            q: self.q,
            theta: self.theta,
            omega: self.omega,
            varsigma: self.varsigma,
            epsilons: self.epsilons.clone(),
            max_iters: self.inner_max_iters,
            measure: self.measure,
        }
    }
}

/// Current absolute derivative accuracies and the number of Step-5 passes.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyState {
    pub eps_bar: Vec<f64>,
    pub j_sharp: usize,
    pub gamma_acc: f64,
}

impl AccuracyState {
    pub fn max(&self) -> f64 {
        self.eps_bar.iter().copied().fold(0.0, f64::max)
    }

    fn improve(&mut self) {
        self.eps_bar.iter_mut().for_each(|e| *e *= self.gamma_acc);
        self.j_sharp += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IterationKind {
    Successful,
    Unsuccessful,
    AccuracyImproving,
}

impl IterationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IterationKind::Successful => "successful",
            IterationKind::Unsuccessful => "unsuccessful",
            IterationKind::AccuracyImproving => "accuracy_improving",
        }
    }
}

/// Where a CHECK call was made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckSite {
    /// Step 1 for order `j`.
    Measure(usize),
    /// The step decrement in Step 2.
    Step,
    /// The model measure of order `l` at the step.
    ModelMeasure(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEvent {
    pub site: CheckSite,
    pub delta: f64,
    pub decrement: f64,
    pub outcome: CheckOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `None` on the terminating iteration.
    pub kind: Option<IterationKind>,
    pub j_k: Option<usize>,
    pub x: Vec<f64>,
    pub sigma: f64,
    pub sigma_next: f64,
    pub rho: Option<f64>,
    pub step: Option<Vec<f64>>,
    pub step_norm: Option<f64>,
    /// Inexact Taylor decrement of degree `p` at the step.
    pub dt_bar: Option<f64>,
    pub model_decrement: Option<f64>,
    pub delta_start: Vec<f64>,
    pub delta_end: Vec<f64>,
    pub step_radii: Option<Vec<f64>>,
    pub accuracy: Vec<f64>,
    pub f_bar_before: Option<f64>,
    pub f_bar_after: Option<f64>,
    /// Error bound requested for both function values in Step 3.
    pub value_bound: Option<f64>,
    pub checks: Vec<CheckEvent>,
    pub inner_iterations: Option<usize>,
    pub value_evals: usize,
    pub derivative_evals: usize,
    pub value_evals_cum: usize,
    pub derivative_evals_cum: usize,
}

/// Per-order termination evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEvidence {
    pub j: usize,
    pub delta: f64,
    pub phi_bar: f64,
    /// `epsilon_j delta_j^j / j!`.
    pub threshold: f64,
    /// The exit bound `varsigma epsilon_j / (1 + omega) delta_j^j / j!` that `phi_bar` met.
    pub exit_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub x_eps: Vec<f64>,
    pub delta_eps: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub measured: Vec<OrderEvidence>,
    pub verified_exact: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub sigma: f64,
    /// Radii carried between iterations.
    pub delta: Vec<f64>,
    pub delta_start: Vec<f64>,
    pub delta_end: Vec<f64>,
    pub accuracy: AccuracyState,
    pub k: usize,
    /// Last inexact value at `x` and the error bound it was computed with.
    pub f_bar: Option<(f64, f64)>,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub enum Step1Outcome {
    Terminated(Certificate),
    ToStep2 { j_k: usize, d_k: Vec<f64> },
    ToStep5,
}

#[derive(Debug, Clone)]
pub enum Step2Outcome {
    ToStep3 { step: StepResult, dt_bar: f64 },
    ToStep5,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub certificate: Certificate,
    pub counters: EvalCounters,
    pub trace: Vec<IterationRecord>,
    pub state: SolverState,
}

/// One run: configuration, oracle and evolving state.
pub struct Solver {
    pub config: SolverConfig,
    pub oracle: Oracle,
    pub state: SolverState,
    record: IterationRecord,
    bundle: Option<DerivativeBundle>,
}

impl Solver {
    pub fn new(problem: Arc<dyn Problem>, noise: NoiseModel, config: SolverConfig, x0: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if x0.len() != problem.dim() || x0.is_empty() {
            return Err(ArqError::InvalidArgument(format!(
                "starting point has dimension {}, problem has {}",
                x0.len(),
                problem.dim()
            )));
        }
        if problem.max_order() < config.p {
            return Err(ArqError::Config(format!(
                "problem provides derivatives up to order {}, p = {}",
                problem.max_order(),
                config.p
            )));
        }
        let state = SolverState {
            x: x0,
            sigma: config.sigma0,
            delta: config.delta0.clone(),
            delta_start: config.delta0.clone(),
            delta_end: config.delta0.clone(),
            accuracy: AccuracyState {
                eps_bar: config.acc0.clone(),
                j_sharp: 0,
                gamma_acc: config.gamma_acc,
            },
            k: 0,
            f_bar: None,
            trace: Vec::new(),
        };
        let record = blank_record(&state);
        Ok(Solver {
            oracle: Oracle::new(problem, noise),
            config,
            state,
            record,
            bundle: None,
        })
    }

    fn current_bundle(&self) -> &DerivativeBundle {
        self.bundle.as_ref().expect("step 1 evaluates the bundle first")
    }

    /// Optimality measures and termination test.
    pub fn step1(&mut self) -> Result<Step1Outcome> {
        let cfg = &self.config;
        let st = &mut self.state;
        st.delta_start = st.delta.clone();
        self.record = blank_record(st);
        let bundle = self.oracle.inexact_bundle(&st.x, &st.accuracy.eps_bar);
        self.bundle = Some(bundle);
        let bundle = self.bundle.as_ref().expect("just set");
        let model = RegularizedModel::new(bundle.clone(), st.sigma)?;
        let omega = cfg.omega;
        let vs = cfg.varsigma;
        // derivative-norm bound for the loop guard
        let l_bound = bundle.tensors.iter().map(|t| t.norm_upper_bound()).fold(1.0, f64::max);
        let mut evidence = Vec::with_capacity(cfg.q);
        for j in 1..=cfg.q {
            let eps_j = cfg.epsilons[j - 1];
            let floor = 1e-3 * vs * eps_j / (4.0 * (1.0 + omega) * l_bound.max(st.sigma));
            loop {
                let delta = st.delta[j - 1];
                let m = optimality_measure_with(bundle, j, delta, &cfg.measure)?;
                let outcome = check(delta, m.phi_bar, &st.accuracy.eps_bar[..j], 0.5 * eps_j, omega)?;
                self.record.checks.push(CheckEvent {
                    site: CheckSite::Measure(j),
                    delta,
                    decrement: m.phi_bar,
                    outcome,
                });
                if outcome == CheckOutcome::Insufficient {
                    st.delta_end = st.delta.clone();
                    return Ok(Step1Outcome::ToStep5);
                }
                let scale = delta.powi(j as i32) / factorial(j);
                let exit_bound = vs * eps_j / (1.0 + omega) * scale;
                if m.phi_bar <= exit_bound {
                    evidence.push(OrderEvidence {
                        j,
                        delta,
                        phi_bar: m.phi_bar,
                        threshold: eps_j * scale,
                        exit_bound,
                    });
                    break;
                }
                let dm = model.model_decrement(&m.displacement)?;
                if dm >= vs * eps_j / (2.0 * (1.0 + omega)) * scale {
                    st.delta_end = st.delta.clone();
                    return Ok(Step1Outcome::ToStep2 {
                        j_k: j,
                        d_k: m.displacement,
                    });
                }
                st.delta[j - 1] = 0.5 * delta;
                if st.delta[j - 1] < floor {
                    return Err(ArqError::Internal(format!(
                        "order-{j} radius fell to {:.3e}, below the loop guard {floor:.3e}",
                        st.delta[j - 1]
                    )));
                }
            }
        }
        st.delta_end = st.delta.clone();
        Ok(Step1Outcome::Terminated(Certificate {
            x_eps: st.x.clone(),
            delta_eps: st.delta.clone(),
            epsilons: cfg.epsilons.clone(),
            measured: evidence,
            verified_exact: None,
        }))
    }

    /// Step computation and its accuracy verification.
    pub fn step2(&mut self, j_k: usize, d_k: &[f64]) -> Result<Step2Outcome> {
        let cfg = &self.config;
        let st = &self.state;
        let bundle = self.current_bundle().clone();
        let p = cfg.p;
        let omega = cfg.omega;
        let vs = cfg.varsigma;
        let model = RegularizedModel::new(bundle, st.sigma)?;
        let step = minimize_model(&model, d_k, &cfg.inner_rule())?;
        let s = &step.step;
        let sn = norm(s);
        let dt_bar = model.bundle.taylor_decrement(s, p)?;
        let dm = model.model_decrement(s)?;
        self.record.j_k = Some(j_k);
        self.record.step = Some(s.clone());
        self.record.step_norm = Some(sn);
        self.record.dt_bar = Some(dt_bar);
        self.record.model_decrement = Some(dm);
        self.record.inner_iterations = Some(step.iterations);
        self.record.step_radii = step.radii.clone();
        if !(dt_bar > 0.0) || dm < model.model_decrement(d_k)? {
            return Err(ArqError::Internal(format!(
                "step does not decrease the model (Taylor decrement {dt_bar:.3e})"
            )));
        }
        let d1 = st.delta_end[j_k - 1];
        let xi = vs * cfg.epsilons[j_k - 1] / (2.0 * (1.0 + omega)) * factorial(p) * d1.powi(j_k as i32)
            / (factorial(j_k) * d1.max(sn).powi(p as i32));
        let acc = &st.accuracy.eps_bar;
        let outcome = check(sn, dt_bar, &acc[..p], xi, omega)?;
        self.record.checks.push(CheckEvent {
            site: CheckSite::Step,
            delta: sn,
            decrement: dt_bar,
            outcome,
        });
        match outcome {
            CheckOutcome::Insufficient => return Ok(Step2Outcome::ToStep5),
            CheckOutcome::Absolute => {
                return Err(ArqError::Internal(
                    "step decrement verification returned an absolute verdict".into(),
                ))
            }
            CheckOutcome::Relative => {}
        }
        if sn < 1.0 {
            let radii = step
                .radii
                .as_ref()
                .ok_or_else(|| ArqError::Internal("short step without optimality radii".into()))?;
            for ell in 1..=cfg.q {
                let tripled = 3.0 * acc[ell - 1..p].iter().copied().fold(0.0, f64::max);
                let list = vec![tripled; ell];
                let xi_l = vs * cfg.theta * (1.0 - omega) * cfg.epsilons[ell - 1]
                    / (2.0 * (1.0 + omega) * (1.0 + omega));
                let decrement = step.inner_decrements[ell - 1];
                let outcome = check(radii[ell - 1], decrement, &list, xi_l, omega)?;
                self.record.checks.push(CheckEvent {
                    site: CheckSite::ModelMeasure(ell),
                    delta: radii[ell - 1],
                    decrement,
                    outcome,
                });
                if outcome == CheckOutcome::Insufficient {
                    return Ok(Step2Outcome::ToStep5);
                }
            }
        }
        Ok(Step2Outcome::ToStep3 { step, dt_bar })
    }

    /// Acceptance test and regularization update; returns the iteration kind.
    pub fn step3_step4(&mut self, step: &StepResult, dt_bar: f64) -> IterationKind {
        let cfg = &self.config;
        let st = &mut self.state;
        let bound = cfg.omega * dt_bar;
        let trial: Vec<f64> = st.x.iter().zip(&step.step).map(|(a, b)| a + b).collect();
        let f_plus = self.oracle.inexact_value(&trial, bound);
        let f_x = match st.f_bar {
            Some((v, b)) if b <= bound => v,
            _ => {
                let v = self.oracle.inexact_value(&st.x, bound);
                st.f_bar = Some((v, bound));
                v
            }
        };
        let rho = (f_x - f_plus) / dt_bar;
        self.record.rho = Some(rho);
        self.record.f_bar_before = Some(f_x);
        self.record.f_bar_after = Some(f_plus);
        self.record.value_bound = Some(bound);
        let kind = if rho >= cfg.eta1 {
            st.x = trial;
            st.f_bar = Some((f_plus, bound));
            st.delta = match (&step.radii, step.long_step) {
                (Some(r), false) => r.clone(),
                _ => st.delta_end.clone(),
            };
            IterationKind::Successful
        } else {
            st.delta = st.delta_end.clone();
            IterationKind::Unsuccessful
        };
        st.sigma = next_sigma(cfg, st.sigma, rho);
        kind
    }

    /// Accuracy improvement.
    pub fn step5(&mut self) {
        let st = &mut self.state;
        st.accuracy.improve();
        st.delta = st.delta_start.clone();
    }

    fn close(&mut self, kind: Option<IterationKind>) {
        let (v, d) = self.oracle.counters_mut().close_iteration();
        let counters = self.oracle.counters();
        let mut rec = std::mem::replace(&mut self.record, blank_record(&self.state));
        rec.kind = kind;
        rec.sigma_next = self.state.sigma;
        rec.value_evals = v;
        rec.derivative_evals = d;
        rec.value_evals_cum = counters.value_evals;
        rec.derivative_evals_cum = counters.derivative_evals;
        trace!(
            "k={} kind={:?} sigma={:.3e} rho={:?} ||s||={:?}",
            rec.k,
            rec.kind,
            rec.sigma,
            rec.rho,
            rec.step_norm
        );
        self.state.trace.push(rec);
        if kind.is_some() {
            self.state.k += 1;
        }
    }

    /// Runs one full iteration; returns the certificate on termination.
    pub fn iterate(&mut self) -> Result<Option<Certificate>> {
        match self.step1()? {
            Step1Outcome::Terminated(cert) => {
                self.close(None);
                return Ok(Some(cert));
            }
            Step1Outcome::ToStep5 => {
                self.step5();
                self.close(Some(IterationKind::AccuracyImproving));
            }
            Step1Outcome::ToStep2 { j_k, d_k } => match self.step2(j_k, &d_k)? {
                Step2Outcome::ToStep5 => {
                    self.step5();
                    self.close(Some(IterationKind::AccuracyImproving));
                }
                Step2Outcome::ToStep3 { step, dt_bar } => {
                    let kind = self.step3_step4(&step, dt_bar);
                    self.close(Some(kind));
                }
            },
        }
        Ok(None)
    }

    pub fn run(mut self) -> Result<SolveReport> {
        while self.state.k < self.config.max_iters {
            if let Some(certificate) = self.iterate()? {
                debug!(
                    "terminated after {} iterations, {} value and {} derivative evaluations",
                    self.state.k,
                    self.oracle.counters().value_evals,
                    self.oracle.counters().derivative_evals
                );
                return Ok(SolveReport {
                    certificate,
                    counters: self.oracle.counters().clone(),
                    trace: self.state.trace.clone(),
                    state: self.state,
                });
            }
        }
        Err(ArqError::BudgetExhausted {
            max_iters: self.config.max_iters,
            trace: Box::new(self.state.trace),
        })
    }
}

/// Regularization update, taking the lower endpoint of each admissible interval.
pub fn next_sigma(config: &SolverConfig, sigma: f64, rho: f64) -> f64 {
    if rho >= config.eta2 {
        (config.gamma1 * sigma).max(config.sigma_min)
    } else if rho >= config.eta1 {
        sigma
    } else {
        config.gamma2 * sigma
    }
}

fn blank_record(st: &SolverState) -> IterationRecord {
    IterationRecord {
        k: st.k,
        kind: None,
        j_k: None,
        x: st.x.clone(),
        sigma: st.sigma,
        sigma_next: st.sigma,
        rho: None,
        step: None,
        step_norm: None,
        dt_bar: None,
        model_decrement: None,
        delta_start: st.delta.clone(),
        delta_end: st.delta.clone(),
        step_radii: None,
        accuracy: st.accuracy.eps_bar.clone(),
        f_bar_before: None,
        f_bar_after: None,
        value_bound: None,
        checks: Vec::new(),
        inner_iterations: None,
        value_evals: 0,
        derivative_evals: 0,
        value_evals_cum: 0,
        derivative_evals_cum: 0,
    }
}

/// Runs the algorithm from `x0`.
pub fn solve_from(
    problem: Arc<dyn Problem>,
    noise: NoiseModel,
    config: SolverConfig,
    x0: Vec<f64>,
) -> Result<SolveReport> {
    Solver::new(problem, noise, config, x0)?.run()
}

/// Runs the algorithm from the problem's default starting point.
pub fn solve(problem: Arc<dyn Problem>, noise: NoiseModel, config: SolverConfig) -> Result<SolveReport> {
    let x0 = problem.default_start();
    solve_from(problem, noise, config, x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::NoiseKind;
    use crate::problems::Quadratic;

    fn quad1() -> Arc<dyn Problem> {
        Arc::new(Quadratic::isotropic(1))
    }

    fn exact_config(p: usize, q: usize, eps: f64) -> SolverConfig {
        let mut c = SolverConfig::new(p, q, vec![eps; q]);
        c.acc0 = vec![0.0; p];
        c
    }

    #[test]
    fn default_config_is_valid() {
        for (p, q) in [(1, 1), (2, 1), (2, 2), (3, 3)] {
            SolverConfig::new(p, q, vec![1e-3; q]).validate().unwrap();
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = SolverConfig::new(2, 1, vec![1e-3]);
        let mut bad = vec![];
        let mut c = base.clone();
        c.eta2 = 1.0;
        bad.push(c);
        let mut c = base.clone();
        c.omega = 0.03;
        bad.push(c);
        let mut c = base.clone();
        c.delta0 = vec![1e-4];
        bad.push(c);
        let mut c = base.clone();
        c.acc0 = vec![2.0, 0.1];
        bad.push(c);
        let mut c = base.clone();
        c.q = 3;
        c.epsilons = vec![1e-3; 3];
        c.delta0 = vec![1.0; 3];
        bad.push(c);
        let mut c = base.clone();
        c.sigma_min = 2.0;
        bad.push(c);
        let mut c = base;
        c.gamma3 = 1.5;
        bad.push(c);
        for c in bad {
            assert!(matches!(c.validate(), Err(ArqError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn sigma_update_endpoints() {
        let c = SolverConfig::new(2, 1, vec![1e-3]);
        assert_eq!(next_sigma(&c, 2.0, 0.5), 2.0);
        assert_eq!(next_sigma(&c, 2.0, 0.95), 1.0);
        assert_eq!(next_sigma(&c, 2.0, -0.2), 4.0);
        assert_eq!(next_sigma(&c, 1e-8, 0.95), 1e-8);
    }

    #[test]
    fn large_gradient_goes_to_step2_without_halving() {
        // g = 1, H = 1, sigma = 1: the full step d = -1 decreases the model by 1/3
        let mut s = Solver::new(quad1(), NoiseModel::exact(), exact_config(2, 1, 0.1), vec![1.0]).unwrap();
        match s.step1().unwrap() {
            Step1Outcome::ToStep2 { j_k, d_k } => {
                assert_eq!(j_k, 1);
                assert_eq!(d_k, vec![-1.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.state.delta_end, vec![1.0]);
    }

    #[test]
    fn huge_accuracy_goes_to_step5() {
        let mut c = SolverConfig::new(2, 1, vec![0.1]);
        c.acc0 = vec![1.0, 1.0];
        let mut s = Solver::new(quad1(), NoiseModel::exact(), c, vec![1.0]).unwrap();
        assert!(matches!(s.step1().unwrap(), Step1Outcome::ToStep5));
        assert_eq!(s.record.checks.len(), 1);
        assert_eq!(s.record.checks[0].outcome, CheckOutcome::Insufficient);
    }

    #[test]
    fn stationary_start_terminates_immediately() {
        let r = solve_from(quad1(), NoiseModel::exact(), exact_config(2, 2, 1e-3), vec![0.0]).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert!(r.trace[0].kind.is_none());
        assert_eq!(r.certificate.x_eps, vec![0.0]);
        assert_eq!(r.counters.value_evals, 0);
    }

    #[test]
    fn step5_scales_accuracies_and_resets_radii() {
        let mut c = SolverConfig::new(2, 1, vec![0.1]);
        c.acc0 = vec![0.1, 0.1];
        let mut s = Solver::new(quad1(), NoiseModel::exact(), c, vec![1.0]).unwrap();
        s.state.delta_start = vec![1.0];
        s.state.delta = vec![0.25];
        let sigma = s.state.sigma;
        s.step5();
        assert!((s.state.accuracy.eps_bar[0] - 0.025).abs() < 1e-15);
        assert!((s.state.accuracy.eps_bar[1] - 0.025).abs() < 1e-15);
        assert_eq!(s.state.accuracy.j_sharp, 1);
        assert_eq!(s.state.delta, vec![1.0]);
        assert_eq!(s.state.sigma, sigma);
    }

    #[test]
    fn exact_step2_first_check_is_relative() {
        let mut s = Solver::new(quad1(), NoiseModel::exact(), exact_config(2, 1, 0.1), vec![1.0]).unwrap();
        let Step1Outcome::ToStep2 { j_k, d_k } = s.step1().unwrap() else {
            panic!("expected step 2")
        };
        let out = s.step2(j_k, &d_k).unwrap();
        assert!(matches!(out, Step2Outcome::ToStep3 { .. }));
        let first = s.record.checks.iter().find(|c| c.site == CheckSite::Step).unwrap();
        assert_eq!(first.outcome, CheckOutcome::Relative);
    }

    #[test]
    fn first_iteration_evaluates_both_values() {
        let mut s = Solver::new(quad1(), NoiseModel::exact(), exact_config(2, 1, 0.1), vec![1.0]).unwrap();
        s.iterate().unwrap();
        let rec = &s.state.trace[0];
        assert_eq!(rec.value_evals, 2);
        assert_eq!(rec.derivative_evals, 1);
        let rho = rec.rho.unwrap();
        let exact = (rec.f_bar_before.unwrap() - rec.f_bar_after.unwrap()) / rec.dt_bar.unwrap();
        assert_eq!(rho, exact);
    }

    #[test]
    fn accuracy_improving_iterations_keep_sigma() {
        let mut c = SolverConfig::new(2, 1, vec![1e-3]);
        c.acc0 = vec![1.0, 1.0];
        let noise = NoiseModel::new(NoiseKind::BoundedRandom, 3);
        let r = solve_from(Arc::new(Quadratic::isotropic(2)), noise, c, vec![1.0, -0.5]).unwrap();
        let a: Vec<_> = r
            .trace
            .iter()
            .filter(|t| t.kind == Some(IterationKind::AccuracyImproving))
            .collect();
        assert!(!a.is_empty());
        for t in a {
            assert!(t.rho.is_none());
            assert_eq!(t.sigma, t.sigma_next);
        }
    }
}
