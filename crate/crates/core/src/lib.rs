//! Adaptive regularization of arbitrary degree with explicitly controlled
//! derivative accuracy.
//!
//! The solver minimizes a smooth nonconvex function using Taylor models of
//! degree `p` regularized by `sigma ||s||^(p+1) / (p+1)!`, and returns a point
//! satisfying approximate optimality conditions of order `q <= 3`. Derivatives
//! and function values are supplied by an inexact oracle whose absolute error
//! bounds are chosen by the algorithm itself.

pub mod check;
pub mod diagnostics;
pub mod error;
pub mod oracle;
pub mod problems;
pub mod solver;
pub mod subsolvers;
pub mod taylor;
pub mod tensor;

pub use check::{check, CheckOutcome};
pub use diagnostics::{compute_bounds, BoundReport, ProblemConstants};
pub use error::{ArqError, Result};
pub use oracle::{EvalCounters, NoiseKind, NoiseModel, Oracle};
pub use problems::Problem;
pub use solver::{solve, solve_from, Certificate, IterationKind, IterationRecord, SolveReport, SolverConfig};
pub use subsolvers::{minimize_model, optimality_measure, MeasureResult, StepResult};
pub use taylor::{DerivativeBundle, RegularizedModel};
pub use tensor::SymTensor;
