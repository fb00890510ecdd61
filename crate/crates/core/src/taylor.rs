//! Taylor expansions built from (possibly inexact) derivative tensors and the
//! regularized model minimized at every iteration.

use crate::error::{invalid, Result};
use crate::tensor::{factorial, norm, SymTensor};

/// Function value and derivative tensors of orders `1..=degree` at one point,
/// together with the absolute accuracy each tensor is known to satisfy
/// (`0` means exact).
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub value: f64,
    /// `tensors[i]` holds the derivative of order `i + 1`.
    pub tensors: Vec<SymTensor>,
    pub accuracy: Vec<f64>,
}

impl DerivativeBundle {
    pub fn new(value: f64, tensors: Vec<SymTensor>, accuracy: Vec<f64>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(invalid("a derivative bundle needs at least a gradient"));
        }
        if accuracy.len() != tensors.len() {
            return Err(invalid(format!(
                "{} accuracy entries for {} tensors",
                accuracy.len(),
                tensors.len()
            )));
        }
        if accuracy.iter().any(|a| !(*a >= 0.0)) {
            return Err(invalid("accuracies must be non-negative"));
        }
        let dim = tensors[0].dim();
        for (i, t) in tensors.iter().enumerate() {
            if t.order() != i + 1 || t.dim() != dim {
                return Err(invalid(format!(
                    "tensor {i} has order {} over R^{}, expected order {} over R^{dim}",
                    t.order(),
                    t.dim(),
                    i + 1
                )));
            }
        }
        Ok(DerivativeBundle {
            value,
            tensors,
            accuracy,
        })
    }

    /// Bundle of exact tensors (all accuracies zero).
    pub fn exact(value: f64, tensors: Vec<SymTensor>) -> Result<Self> {
        let p = tensors.len();
        DerivativeBundle::new(value, tensors, vec![0.0; p])
    }

    pub fn degree(&self) -> usize {
        self.tensors.len()
    }

    pub fn dim(&self) -> usize {
        self.tensors[0].dim()
    }

    pub fn gradient(&self) -> &[f64] {
        self.tensors[0].data()
    }

    fn check_args(&self, s: &[f64], j: usize) -> Result<()> {
        if s.len() != self.dim() {
            return Err(invalid(format!(
                "step has dimension {}, bundle has {}",
                s.len(),
                self.dim()
            )));
        }
        if j == 0 || j > self.degree() {
            return Err(invalid(format!(
                "Taylor order {j} outside 1..={}",
                self.degree()
            )));
        }
        Ok(())
    }

    /// `value + sum_{i<=j} T_i[s]^i / i!`.
    pub fn taylor_eval(&self, s: &[f64], j: usize) -> Result<f64> {
        Ok(self.value - self.taylor_decrement(s, j)?)
    }

    /// `T(0) - T(s)` for the degree-`j` expansion; independent of `value`.
    pub fn taylor_decrement(&self, s: &[f64], j: usize) -> Result<f64> {
        self.check_args(s, j)?;
        Ok(-self.polynomial_part(s, j))
    }

    fn polynomial_part(&self, s: &[f64], j: usize) -> f64 {
        self.tensors[..j]
            .iter()
            .enumerate()
            .map(|(i, t)| t.apply(s) / factorial(i + 1))
            .sum()
    }

    /// `sum_{i<=j} acc_i r^i / i!`, the bound on the decrement error at
    /// displacements of norm `r`.
    pub fn error_bound(&self, r: f64, j: usize) -> f64 {
        accuracy_sum(&self.accuracy[..j], r)
    }
}

/// `sum_i acc_i r^i / i!` with `acc` indexed from order one.
pub fn accuracy_sum(acc: &[f64], r: f64) -> f64 {
    acc.iter()
        .enumerate()
        .map(|(i, a)| a * r.powi(i as i32 + 1) / factorial(i + 1))
        .sum()
}

/// Degree-`p` Taylor expansion plus `sigma / (p+1)! * ||s||^(p+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedModel {
    pub bundle: DerivativeBundle,
    pub sigma: f64,
}

impl RegularizedModel {
    pub fn new(bundle: DerivativeBundle, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(invalid(format!("regularization weight must be > 0, got {sigma}")));
        }
        Ok(RegularizedModel { bundle, sigma })
    }

    pub fn degree(&self) -> usize {
        self.bundle.degree()
    }

    pub fn dim(&self) -> usize {
        self.bundle.dim()
    }

    fn regularizer(&self, s: &[f64]) -> f64 {
        let p = self.degree();
        self.sigma / factorial(p + 1) * norm(s).powi(p as i32 + 1)
    }

    /// Model value at `s`.
    pub fn value(&self, s: &[f64]) -> Result<f64> {
        Ok(self.bundle.taylor_eval(s, self.degree())? + self.regularizer(s))
    }

    /// `m(0) - m(s)`.
    pub fn model_decrement(&self, s: &[f64]) -> Result<f64> {
        Ok(self.bundle.taylor_decrement(s, self.degree())? - self.regularizer(s))
    }

    /// Order-`j` derivative of the model at `s`, i.e. the shifted Taylor
    /// coefficient `sum_{l=j..p} T_l[s]^(l-j)/(l-j)!` plus the exact
    /// derivative of the regularization term. Defined for `1 <= j <= p`.
    pub fn shifted_model_derivatives(&self, s: &[f64], j: usize) -> Result<SymTensor> {
        if j == 0 || j > self.degree() {
            return Err(invalid(format!(
                "model derivative order {j} outside 1..={}",
                self.degree()
            )));
        }
        self.derivative(s, j)
    }

    /// Like [`Self::shifted_model_derivatives`] but also allows `j = p + 1`
    /// (where only the regularizer contributes) as long as `j <= 3`; the
    /// inner Newton iteration needs the Hessian when `p = 1`.
    pub(crate) fn derivative(&self, s: &[f64], j: usize) -> Result<SymTensor> {
        let p = self.degree();
        let n = self.dim();
        if s.len() != n {
            return Err(invalid(format!("step has dimension {}, model has {n}", s.len())));
        }
        if j == 0 || j > p + 1 || j > 3 {
            return Err(invalid(format!("model derivative order {j} not available")));
        }
        let mut out = SymTensor::zeros(j, n);
        for l in j..=p {
            let shifted = self.bundle.tensors[l - 1].contract_times(s, l - j);
            out.add_scaled(1.0 / factorial(l - j), &shifted);
        }
        let reg = power_norm_derivative(s, p + 1, j);
        out.add_scaled(self.sigma / factorial(p + 1), &reg);
        Ok(out)
    }

    /// Bundle whose tensors are the model derivatives of orders `1..=q` at
    /// `s` and whose accuracies are `acc`.
    pub fn shifted_bundle(&self, s: &[f64], q: usize, acc: Vec<f64>) -> Result<DerivativeBundle> {
        let tensors = (1..=q)
            .map(|j| self.shifted_model_derivatives(s, j))
            .collect::<Result<Vec<_>>>()?;
        DerivativeBundle::new(0.0, tensors, acc)
    }
}

/// Closed-form `j`-th derivative of `r(s) = ||s||^m` for `j <= 3`:
///
/// * `grad r = m ||s||^(m-2) s`
/// * `hess r = m ||s||^(m-2) I + m (m-2) ||s||^(m-4) s s^T`
/// * `D^3 r = m (m-2) ||s||^(m-4) sym(s (x) I) + m (m-2) (m-4) ||s||^(m-6) s (x) s (x) s`
///
/// where `sym(s (x) I)` has entries `s_a d_bc + s_b d_ac + s_c d_ab`. At
/// `s = 0` each term is replaced by its limit, which is zero unless the
/// power of `||s||` left over after counting `s` factors is zero.
pub fn power_norm_derivative(s: &[f64], m: usize, j: usize) -> SymTensor {
    let n = s.len();
    let r = norm(s);
    let mf = m as f64;
    // ||s||^e * (product of `factors` copies of s), vanishing at s = 0 when the
    // total homogeneity e + factors is positive.
    let coef = |e: i32, factors: i32| -> f64 {
        if r == 0.0 {
            if e + factors == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            r.powi(e)
        }
    };
    let at_origin = r == 0.0;
    match j {
        1 => {
            let c = mf * coef(m as i32 - 2, 1);
            SymTensor::from_vector(&s.iter().map(|v| c * v).collect::<Vec<_>>())
        }
        2 => {
            let mut t = SymTensor::zeros(2, n);
            let c_id = mf * coef(m as i32 - 2, 0);
            let c_ss = mf * (mf - 2.0) * coef(m as i32 - 4, 2);
            for a in 0..n {
                for b in 0..n {
                    let mut v = if a == b { c_id } else { 0.0 };
                    if !at_origin {
                        v += c_ss * s[a] * s[b];
                    }
                    t.data_mut()[a * n + b] = v;
                }
            }
            t
        }
        3 => {
            let mut t = SymTensor::zeros(3, n);
            if at_origin {
                return t;
            }
            let c1 = mf * (mf - 2.0) * coef(m as i32 - 4, 1);
            let c2 = mf * (mf - 2.0) * (mf - 4.0) * coef(m as i32 - 6, 3);
            let data = t.data_mut();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut v = c2 * s[a] * s[b] * s[c];
                        if b == c {
                            v += c1 * s[a];
                        }
                        if a == c {
                            v += c1 * s[b];
                        }
                        if a == b {
                            v += c1 * s[c];
                        }
                        data[(a * n + b) * n + c] = v;
                    }
                }
            }
            t
        }
        _ => panic!("regularizer derivatives are implemented for orders 1..=3"),
    }
}
