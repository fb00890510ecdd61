//! Benchmark objectives with closed-form derivatives of orders one to four.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::{standard_normal, SymTensor};

/// An objective with exact derivatives, used as ground truth by the oracle.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Exact derivative tensor of order `order` (`1..=max_order()`).
    fn derivative(&self, x: &[f64], order: usize) -> SymTensor;
    fn max_order(&self) -> usize {
        4
    }
    /// Lower bound on the objective over the whole space.
    fn f_low(&self) -> f64;
    /// Optional user-supplied Lipschitz constant overriding sampled estimates.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
    /// Conventional starting point.
    fn default_start(&self) -> Vec<f64>;
}

/// `0.5 x^T A x` with symmetric positive definite `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DMatrix<f64>,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>) -> Self {
        assert!(a.is_square());
        Quadratic { a }
    }

    /// `0.5 ||x||^2`.
    pub fn isotropic(n: usize) -> Self {
        Quadratic::new(DMatrix::identity(n, n))
    }

    /// Spectrum spread linearly over `[1, 10]` in a seeded random orthonormal basis.
    pub fn benchmark(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| standard_normal(&mut rng));
        let q = m.qr().q();
        let eig = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                if n == 1 {
                    1.0
                } else {
                    1.0 + 9.0 * i as f64 / (n - 1) as f64
                }
            } else {
                0.0
            }
        });
        let a = &q * eig * q.transpose();
        Quadratic::new((&a + a.transpose()) * 0.5)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl Problem for Quadratic {
    fn name(&self) -> String {
        "quadratic".into()
    }
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                v += x[i] * self.a[(i, j)] * x[j];
            }
        }
        0.5 * v
    }
    fn derivative(&self, x: &[f64], order: usize) -> SymTensor {
        let n = self.dim();
        match order {
            1 => SymTensor::from_vector(
                &(0..n)
                    .map(|i| (0..n).map(|j| self.a[(i, j)] * x[j]).sum())
                    .collect::<Vec<f64>>(),
            ),
            2 => SymTensor::from_matrix(&self.a),
            k => SymTensor::zeros(k, n),
        }
    }
    fn f_low(&self) -> f64 {
        0.0
    }
    fn default_start(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }
}

/// Chained Rosenbrock `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    n: usize,
}

impl Rosenbrock {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Rosenbrock needs at least two variables");
        Rosenbrock { n }
    }
}

impl Problem for Rosenbrock {
    fn name(&self) -> String {
        "rosenbrock".into()
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        (0..self.n - 1)
            .map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2))
            .sum()
    }
    fn derivative(&self, x: &[f64], order: usize) -> SymTensor {
        let n = self.n;
        let mut t = SymTensor::zeros(order, n);
        for i in 0..n - 1 {
            let (a, b) = (x[i], x[i + 1]);
            match order {
                1 => {
                    let d = t.data_mut();
                    d[i] += -400.0 * a * (b - a * a) - 2.0 * (1.0 - a);
                    d[i + 1] += 200.0 * (b - a * a);
                }
                2 => {
                    t.add_symmetric(&[i, i], 1200.0 * a * a - 400.0 * b + 2.0);
                    t.add_symmetric(&[i, i + 1], -400.0 * a);
                    t.add_symmetric(&[i + 1, i + 1], 200.0);
                }
                3 => {
                    t.add_symmetric(&[i, i, i], 2400.0 * a);
                    t.add_symmetric(&[i, i, i + 1], -400.0);
                }
                4 => {
                    t.add_symmetric(&[i, i, i, i], 2400.0);
                }
                _ => {}
            }
        }
        t
    }
    fn f_low(&self) -> f64 {
        0.0
    }
    fn default_start(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| if i % 2 == 0 { -1.2 } else { 1.0 })
            .collect()
    }
}

/// Separable double well `sum_i (x_i^2 - 1)^2`; saddle at the origin,
/// minimizers at every sign pattern of `(+-1, ..., +-1)`.
#[derive(Debug, Clone)]
pub struct SeparableQuartic {
    n: usize,
}

impl SeparableQuartic {
    pub fn new(n: usize) -> Self {
        SeparableQuartic { n }
    }
}

fn diagonal(order: usize, entries: impl Iterator<Item = f64>, n: usize) -> SymTensor {
    let mut t = SymTensor::zeros(order, n);
    for (i, v) in entries.enumerate() {
        t.set_symmetric(&vec![i; order], v);
    }
    t
}

impl Problem for SeparableQuartic {
    fn name(&self) -> String {
        "quartic".into()
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| (v * v - 1.0).powi(2)).sum()
    }
    fn derivative(&self, x: &[f64], order: usize) -> SymTensor {
        let n = self.n;
        match order {
            1 => SymTensor::from_vector(
                &x.iter().map(|v| 4.0 * v * (v * v - 1.0)).collect::<Vec<_>>(),
            ),
            2 => diagonal(2, x.iter().map(|v| 12.0 * v * v - 4.0), n),
            3 => diagonal(3, x.iter().map(|v| 24.0 * v), n),
            4 => diagonal(4, x.iter().map(|_| 24.0), n),
            k => SymTensor::zeros(k, n),
        }
    }
    fn f_low(&self) -> f64 {
        0.0
    }
    fn default_start(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| 0.1 + 0.15 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect()
    }
}

/// `sum_i sin(x_i) + 0.5 ||x||^2`, bounded below by `-n`.
#[derive(Debug, Clone)]
pub struct SinePlusQuadratic {
    n: usize,
}

impl SinePlusQuadratic {
    pub fn new(n: usize) -> Self {
        SinePlusQuadratic { n }
    }
}

impl Problem for SinePlusQuadratic {
    fn name(&self) -> String {
        "sine".into()
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.sin() + 0.5 * v * v).sum()
    }
    fn derivative(&self, x: &[f64], order: usize) -> SymTensor {
        let n = self.n;
        match order {
            1 => SymTensor::from_vector(&x.iter().map(|v| v.cos() + v).collect::<Vec<_>>()),
            2 => diagonal(2, x.iter().map(|v| 1.0 - v.sin()), n),
            3 => diagonal(3, x.iter().map(|v| -v.cos()), n),
            4 => diagonal(4, x.iter().map(|v| v.sin()), n),
            k => SymTensor::zeros(k, n),
        }
    }
    fn f_low(&self) -> f64 {
        -(self.n as f64)
    }
    fn default_start(&self) -> Vec<f64> {
        (0..self.n).map(|i| 2.0 - 0.5 * i as f64).collect()
    }
}

/// Names accepted by [`by_name`].
pub const PROBLEM_NAMES: [&str; 4] = ["quadratic", "rosenbrock", "quartic", "sine"];

/// Looks up a benchmark by name. The quadratic uses a fixed basis seed.
pub fn by_name(name: &str, n: usize) -> Option<Box<dyn Problem>> {
    match name {
        "quadratic" => Some(Box::new(Quadratic::benchmark(n, 7))),
        "rosenbrock" if n >= 2 => Some(Box::new(Rosenbrock::new(n))),
        "quartic" => Some(Box::new(SeparableQuartic::new(n))),
        "sine" => Some(Box::new(SinePlusQuadratic::new(n))),
        _ => None,
    }
}
