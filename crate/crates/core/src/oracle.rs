//! Inexact evaluation oracle.
//!
//! The oracle answers value and derivative requests at any absolute accuracy
//! the caller demands, injecting controlled errors that never exceed the
//! requested bounds. It also keeps the evaluation counters the complexity
//! analysis is stated in terms of.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problems::Problem;
use crate::taylor::DerivativeBundle;
use crate::tensor::{random_symmetric, SymTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// No injected error.
    Exact,
    /// Round to the coarsest decimal grid whose error fits the bound.
    Truncation,
    /// Random perturbation of size `fill_fraction * bound` with random sign
    /// (values) or random symmetric direction (tensors).
    BoundedRandom,
}

impl NoiseKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(NoiseKind::Exact),
            "truncation" => Some(NoiseKind::Truncation),
            "bounded_random" | "random" => Some(NoiseKind::BoundedRandom),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseKind::Exact => "exact",
            NoiseKind::Truncation => "truncation",
            NoiseKind::BoundedRandom => "bounded_random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Fraction of the permitted error actually used by `BoundedRandom`.
    /// Zero disables injection for every kind.
    pub fill_fraction: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        NoiseModel {
            kind,
            fill_fraction: 0.9,
            seed,
        }
    }

    pub fn exact() -> Self {
        NoiseModel::new(NoiseKind::Exact, 0)
    }

    fn is_silent(&self) -> bool {
        self.kind == NoiseKind::Exact || self.fill_fraction == 0.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub value_evals: usize,
    pub derivative_evals: usize,
    /// `(value_evals, derivative_evals)` spent in each closed iteration.
    pub per_iteration: Vec<(usize, usize)>,
    mark: (usize, usize),
}

impl EvalCounters {
    /// Closes the current iteration, recording what it spent.
    pub fn close_iteration(&mut self) -> (usize, usize) {
        let spent = (
            self.value_evals - self.mark.0,
            self.derivative_evals - self.mark.1,
        );
        self.per_iteration.push(spent);
        self.mark = (self.value_evals, self.derivative_evals);
        spent
    }
}

struct CachedBundle {
    x: Vec<f64>,
    bundle: DerivativeBundle,
}

/// One run's view of a problem: noise state, counters and the derivative cache.
pub struct Oracle {
    problem: Arc<dyn Problem>,
    noise: NoiseModel,
    rng: ChaCha8Rng,
    counters: EvalCounters,
    cache: Option<CachedBundle>,
}

impl Oracle {
    pub fn new(problem: Arc<dyn Problem>, noise: NoiseModel) -> Self {
        Oracle {
            rng: ChaCha8Rng::seed_from_u64(noise.seed),
            problem,
            noise,
            counters: EvalCounters::default(),
            cache: None,
        }
    }

    pub fn problem(&self) -> &Arc<dyn Problem> {
        &self.problem
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn counters(&self) -> &EvalCounters {
        &self.counters
    }

    pub fn counters_mut(&mut self) -> &mut EvalCounters {
        &mut self.counters
    }

    /// `f_bar(x)` with `|f_bar - f(x)| <= bound`.
    pub fn inexact_value(&mut self, x: &[f64], bound: f64) -> f64 {
        debug_assert!(bound >= 0.0);
        self.counters.value_evals += 1;
        let exact = self.problem.value(x);
        self.perturb_value(exact, bound)
    }

    fn perturb_value(&mut self, exact: f64, bound: f64) -> f64 {
        if self.noise.is_silent() || bound == 0.0 {
            return exact;
        }
        match self.noise.kind {
            NoiseKind::Exact => exact,
            NoiseKind::Truncation => truncate_value(exact, bound),
            NoiseKind::BoundedRandom => {
                let sign = if self.rng.gen::<bool>() { 1.0 } else { -1.0 };
                let candidate = exact + sign * self.noise.fill_fraction * bound;
                // rounding in the addition must not push the error past the bound
                if (candidate - exact).abs() <= bound {
                    candidate
                } else {
                    exact
                }
            }
        }
    }

    /// Derivatives of orders `1..=accuracy.len()` at `x`, each within its
    /// accuracy in operator norm. A cached bundle at the same point whose
    /// accuracies are all at least as tight as requested is returned without
    /// a new evaluation.
    pub fn inexact_bundle(&mut self, x: &[f64], accuracy: &[f64]) -> DerivativeBundle {
        if let Some(c) = &self.cache {
            let p = accuracy.len();
            if c.x == x
                && c.bundle.degree() == p
                && c.bundle.accuracy.iter().zip(accuracy).all(|(have, want)| have <= want)
            {
                return c.bundle.clone();
            }
        }
        self.counters.derivative_evals += 1;
        let value_bound = accuracy.first().copied().unwrap_or(0.0);
        let value = self.perturb_value(self.problem.value(x), value_bound);
        let tensors = accuracy
            .iter()
            .enumerate()
            .map(|(i, &acc)| {
                let exact = self.problem.derivative(x, i + 1);
                self.perturb_tensor(exact, acc)
            })
            .collect();
        let bundle = DerivativeBundle::new(value, tensors, accuracy.to_vec())
            .expect("oracle tensors have consistent shapes");
        self.cache = Some(CachedBundle {
            x: x.to_vec(),
            bundle: bundle.clone(),
        });
        bundle
    }

    fn perturb_tensor(&mut self, exact: SymTensor, bound: f64) -> SymTensor {
        if self.noise.is_silent() || bound == 0.0 {
            return exact;
        }
        match self.noise.kind {
            NoiseKind::Exact => exact,
            NoiseKind::Truncation => truncate_tensor(&exact, bound),
            NoiseKind::BoundedRandom => {
                let dir = random_symmetric(&mut self.rng, exact.order(), exact.dim());
                let scale = dir.norm_upper_bound();
                if scale == 0.0 {
                    return exact;
                }
                let mut out = exact.clone();
                out.add_scaled(self.noise.fill_fraction * bound / scale, &dir);
                if out.sub(&exact).norm_upper_bound() <= bound {
                    out
                } else {
                    exact
                }
            }
        }
    }

    /// Exact derivatives for verification; not counted.
    pub fn exact_bundle(&self, x: &[f64], p: usize) -> DerivativeBundle {
        exact_bundle(self.problem.as_ref(), x, p)
    }
}

/// Exact value and derivatives of orders `1..=p` at `x`.
pub fn exact_bundle(problem: &dyn Problem, x: &[f64], p: usize) -> DerivativeBundle {
    let tensors = (1..=p).map(|i| problem.derivative(x, i)).collect();
    DerivativeBundle::exact(problem.value(x), tensors).expect("problem tensors are well formed")
}

fn round_to(v: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits);
    (v * scale).round() / scale
}

/// First decimal position tried when rounding under `bound`: the grid
/// spacing `10^-d` is the largest power of ten not above `bound`.
fn start_digits(bound: f64) -> i32 {
    (-bound.log10()).ceil() as i32
}

/// Rounds to the coarsest decimal grid (starting from the spacing of `bound`)
/// whose rounding error does not exceed `bound`.
pub fn truncate_value(exact: f64, bound: f64) -> f64 {
    if bound == 0.0 {
        return exact;
    }
    let start = start_digits(bound);
    for d in start..start + 20 {
        let r = round_to(exact, d);
        if (r - exact).abs() <= bound {
            return r;
        }
    }
    exact
}

/// Entrywise rounding on one decimal grid shared by all entries, with the
/// error measured in the same norm the accuracy contract uses.
pub fn truncate_tensor(exact: &SymTensor, bound: f64) -> SymTensor {
    if bound == 0.0 {
        return exact.clone();
    }
    let start = start_digits(bound);
    for d in start..start + 20 {
        let mut r = exact.clone();
        r.data_mut().iter_mut().for_each(|v| *v = round_to(*v, d));
        if r.sub(exact).norm_upper_bound() <= bound {
            return r;
        }
    }
    exact.clone()
}
