//! Single runs, their analysis, and accuracy sweeps.

use std::sync::Arc;

use arq_core::diagnostics::{compute_bounds, ProblemConstants};
use arq_core::{
    solve_from, ArqError, BoundReport, Certificate, IterationKind, IterationRecord, Problem, SolverConfig,
};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::lipschitz::{estimate, LipschitzEstimate};
use crate::seeds;
use crate::spec::ExperimentSpec;
use crate::verify::{all_verified, verify_certificate, OrderCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KindCounts {
    pub successful: usize,
    pub unsuccessful: usize,
    pub accuracy_improving: usize,
}

impl KindCounts {
    pub fn of(trace: &[IterationRecord]) -> Self {
        let mut c = KindCounts::default();
        for r in trace {
            match r.kind {
                Some(IterationKind::Successful) => c.successful += 1,
                Some(IterationKind::Unsuccessful) => c.unsuccessful += 1,
                Some(IterationKind::AccuracyImproving) => c.accuracy_improving += 1,
                None => {}
            }
        }
        c
    }
}

/// A finished run: certified or out of budget.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub config: SolverConfig,
    pub certificate: Option<Certificate>,
    pub trace: Vec<IterationRecord>,
    pub counts: KindCounts,
    pub value_evals: usize,
    pub deriv_evals: usize,
    pub lipschitz: LipschitzEstimate,
    pub bounds: BoundReport,
    pub verification: Vec<OrderCheck>,
}

impl RunRecord {
    pub fn verified(&self) -> bool {
        self.certificate.is_some() && all_verified(&self.verification)
    }
}

/// Runs the solver and derives Lipschitz estimates, bounds and the exact
/// verification of the certificate. Budget exhaustion yields a record
/// without certificate; other solver errors propagate.
pub fn run_and_analyze(problem: Arc<dyn Problem>, spec: &ExperimentSpec, config: SolverConfig, seed: u64) -> Result<RunRecord> {
    let noise = spec.noise_model(seed)?;
    let x0 = spec.x0.clone().unwrap_or_else(|| problem.default_start());
    let (certificate, trace) = match solve_from(problem.clone(), noise, config.clone(), x0) {
        Ok(r) => (Some(r.certificate), r.trace),
        Err(ArqError::BudgetExhausted { trace, .. }) => (None, *trace),
        Err(e) => return Err(e.into()),
    };
    analyze(problem.as_ref(), config, certificate, trace, seed)
}

pub fn analyze(
    problem: &dyn Problem,
    config: SolverConfig,
    certificate: Option<Certificate>,
    trace: Vec<IterationRecord>,
    seed: u64,
) -> Result<RunRecord> {
    let lipschitz = estimate(problem, &trace, config.p, seed);
    let x0 = &trace
        .first()
        .ok_or_else(|| HarnessError::InvalidArgument("empty trace".into()))?
        .x;
    let gap = (problem.value(x0) - problem.f_low()).max(0.0);
    let bounds = compute_bounds(
        &config,
        ProblemConstants {
            l_f: lipschitz.l_f,
            l_fp: lipschitz.l_fp,
            f0_minus_flow: gap,
        },
    )?;
    let mut certificate = certificate;
    let verification = match certificate.as_mut() {
        Some(c) => {
            let checks = verify_certificate(problem, c);
            c.verified_exact = Some(
                checks
                    .iter()
                    .map(|k| k.status != crate::verify::OrderStatus::Violated)
                    .collect(),
            );
            checks
        }
        None => Vec::new(),
    };
    let last = trace.last().expect("checked non-empty");
    Ok(RunRecord {
        seed,
        counts: KindCounts::of(&trace),
        value_evals: last.value_evals_cum,
        deriv_evals: last.derivative_evals_cum,
        config,
        certificate,
        trace,
        lipschitz,
        bounds,
        verification,
    })
}

/// A single solve as described by `spec`.
pub fn run_solve(spec: &ExperimentSpec) -> Result<RunRecord> {
    let problem = spec.build_problem()?;
    let config = spec.build_config()?;
    run_and_analyze(problem, spec, config, spec.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub seed: u64,
    pub counts: KindCounts,
    pub value_evals: usize,
    pub deriv_evals: usize,
    pub value_bound: f64,
    pub deriv_bound: f64,
    pub k_acc_min: u64,
    pub certified: bool,
    pub verified: bool,
}

impl SweepRow {
    pub fn value_ok(&self) -> bool {
        self.value_evals as f64 <= self.value_bound
    }
    pub fn deriv_ok(&self) -> bool {
        self.deriv_evals as f64 <= self.deriv_bound
    }
    pub fn acc_ok(&self) -> bool {
        self.counts.accuracy_improving as u64 <= self.k_acc_min
    }
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of log(value evaluations) against log(1/eps).
    pub value_slope: f64,
    pub deriv_slope: f64,
    /// The worst-case exponent plus 0.1.
    pub slope_limit: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs every `(eps, seed)` pair, concurrently up to `spec.jobs`, and returns
/// rows in grid order.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepSummary> {
    let grid = &spec.eps_grid;
    if grid.len() < 3 {
        return Err(HarnessError::InvalidArgument(format!(
            "a sweep needs at least 3 grid points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(HarnessError::InvalidArgument("sweep grid entries must lie in (0,1)".into()));
    }
    let problem = spec.build_problem()?;
    let seeds = seeds::expand(spec.seed, spec.runs.max(1));
    let mut tasks = Vec::new();
    for &eps in grid {
        let config = spec.build_config_with(&[eps])?;
        for &seed in &seeds {
            tasks.push((eps, seed, config.clone()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| HarnessError::InvalidArgument(e.to_string()))?;
    let records: Vec<Result<(f64, RunRecord)>> = pool.install(|| {
        tasks
            .into_par_iter()
            .map(|(eps, seed, config)| Ok((eps, run_and_analyze(problem.clone(), spec, config, seed)?)))
            .collect()
    });
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let (eps, rec) = r?;
        rows.push(SweepRow {
            eps,
            seed: rec.seed,
            counts: rec.counts,
            value_evals: rec.value_evals,
            deriv_evals: rec.deriv_evals,
            value_bound: rec.bounds.value_eval_bound,
            deriv_bound: rec.bounds.deriv_eval_bound,
            k_acc_min: rec.bounds.k_acc_min,
            certified: rec.certificate.is_some(),
            verified: rec.verified(),
        });
    }
    let (p, q) = (spec.p as f64, spec.q as f64);
    let exponent = if spec.q <= 2 { (p + 1.0) / (p - q + 1.0) } else { q * (p + 1.0) / p };
    let slope = |pick: fn(&SweepRow) -> usize| {
        let xs: Vec<f64> = grid.iter().map(|e| (1.0 / e).ln()).collect();
        let ys: Vec<f64> = grid
            .iter()
            .map(|e| {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.eps == *e)
                    .map(|r| (pick(r).max(1) as f64).ln())
                    .collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            })
            .collect();
        ls_slope(&xs, &ys)
    };
    Ok(SweepSummary {
        value_slope: slope(|r| r.value_evals),
        deriv_slope: slope(|r| r.deriv_evals),
        slope_limit: exponent + 0.1,
        rows,
    })
}

pub const SWEEP_COLUMNS: [&str; 15] = [
    "eps",
    "seed",
    "successful",
    "unsuccessful",
    "accuracy_improving",
    "value_evals",
    "deriv_evals",
    "value_bound",
    "deriv_bound",
    "k_acc_min",
    "value_bound_ok",
    "deriv_bound_ok",
    "acc_bound_ok",
    "certified",
    "verified",
];

pub fn write_sweep_csv<W: std::io::Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:e},{:e},{},{},{},{},{},{}",
            r.eps,
            r.seed,
            r.counts.successful,
            r.counts.unsuccessful,
            r.counts.accuracy_improving,
            r.value_evals,
            r.deriv_evals,
            r.value_bound,
            r.deriv_bound,
            r.k_acc_min,
            r.value_ok(),
            r.deriv_ok(),
            r.acc_ok(),
            r.certified,
            r.verified,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.5, 7.0];
        assert!((ls_slope(&x, &y) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_needs_three_points() {
        let spec = ExperimentSpec {
            eps_grid: vec![1e-2],
            ..Default::default()
        };
        assert!(matches!(run_sweep(&spec), Err(HarnessError::InvalidArgument(_))));
    }

    #[test]
    fn exact_quadratic_sweep_meets_every_bound() {
        let spec = ExperimentSpec {
            eps_grid: vec![1e-2, 1e-3, 1e-4],
            jobs: 2,
            ..Default::default()
        };
        let s = run_sweep(&spec).unwrap();
        assert_eq!(s.rows.len(), 3);
        assert_eq!(s.rows.iter().map(|r| r.eps).collect::<Vec<_>>(), spec.eps_grid);
        for r in &s.rows {
            assert!(r.certified && r.verified && r.value_ok() && r.deriv_ok() && r.acc_ok(), "{r:?}");
        }
        assert!(s.value_slope <= s.slope_limit && s.deriv_slope <= s.slope_limit);
    }
}
