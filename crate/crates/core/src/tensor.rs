//! Dense symmetric tensors over `R^n`.
//!
//! A tensor of order `k` stores all `n^k` entries in row-major order (last
//! index fastest). Storage is not packed; symmetry is an invariant maintained
//! by the constructors that build derivative tensors, and can be checked with
//! [`SymTensor::is_symmetric`].

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Number of random unit directions used by the order >= 3 norm estimate.
pub const NORM_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        SymTensor {
            order,
            dim,
            data: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn from_data(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let expected = dim.pow(order as u32);
        if data.len() != expected {
            return Err(invalid(format!(
                "order-{order} tensor over R^{dim} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(SymTensor { order, dim, data })
    }

    pub fn scalar(value: f64) -> Self {
        SymTensor {
            order: 0,
            dim: 0,
            data: vec![value],
        }
    }

    pub fn from_vector(v: &[f64]) -> Self {
        SymTensor {
            order: 1,
            dim: v.len(),
            data: v.to_vec(),
        }
    }

    /// Builds an order-2 tensor from a square matrix. The matrix is assumed
    /// symmetric; no symmetrization is applied.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(m[(i, j)]);
            }
        }
        SymTensor { order: 2, dim: n, data }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.order, 2, "to_matrix needs an order-2 tensor");
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = SymTensor::zeros(2, dim);
        for i in 0..dim {
            t.data[i * dim + i] = 1.0;
        }
        t
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    fn unflat(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat(idx)]
    }

    /// Sets the entry at `idx` and at every permutation of it.
    pub fn set_symmetric(&mut self, idx: &[usize], value: f64) {
        for perm in permutations(idx) {
            let f = self.flat(&perm);
            self.data[f] = value;
        }
    }

    /// Adds `value` to the entry at `idx` and at every distinct permutation of it.
    pub fn add_symmetric(&mut self, idx: &[usize], value: f64) {
        let mut perms = permutations(idx);
        perms.sort();
        perms.dedup();
        for perm in perms {
            let f = self.flat(&perm);
            self.data[f] += value;
        }
    }

    /// Contracts the last index with `s`, giving a tensor of order `order - 1`.
    pub fn contract(&self, s: &[f64]) -> SymTensor {
        assert!(self.order >= 1, "cannot contract a scalar");
        assert_eq!(s.len(), self.dim, "contraction vector has wrong length");
        let n = self.dim;
        let out_len = self.data.len() / n.max(1);
        let mut out = Vec::with_capacity(out_len.max(1));
        for chunk in self.data.chunks_exact(n) {
            out.push(chunk.iter().zip(s).map(|(a, b)| a * b).sum());
        }
        if out.is_empty() {
            out.push(0.0);
        }
        SymTensor {
            order: self.order - 1,
            dim: if self.order == 1 { 0 } else { n },
            data: out,
        }
    }

    /// `T[s]^k`, the contraction with `k` copies of `s`.
    pub fn contract_times(&self, s: &[f64], k: usize) -> SymTensor {
        let mut t = self.clone();
        for _ in 0..k {
            t = t.contract(s);
        }
        t
    }

    /// `T[s]^order`, the full contraction.
    pub fn apply(&self, s: &[f64]) -> f64 {
        if self.order == 0 {
            return self.data[0];
        }
        self.contract_times(s, self.order).data[0]
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> SymTensor {
        let mut t = self.clone();
        t.scale(a);
        t
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &SymTensor) {
        assert_eq!(self.order, other.order);
        assert_eq!(self.dim, other.dim);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        let mut t = self.clone();
        t.add_scaled(-1.0, other);
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Averages every entry over all permutations of its multi-index.
    pub fn symmetrize(&self) -> SymTensor {
        if self.order < 2 {
            return self.clone();
        }
        let mut out = SymTensor::zeros(self.order, self.dim);
        let mut idx = vec![0; self.order];
        for f in 0..self.data.len() {
            self.unflat(f, &mut idx);
            let perms = permutations(&idx);
            let sum: f64 = perms.iter().map(|p| self.data[self.flat(p)]).sum();
            out.data[f] = sum / perms.len() as f64;
        }
        out
    }

    /// Exhaustive check that every entry equals all of its index permutations
    /// up to `tol` (absolute).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.order < 2 {
            return true;
        }
        let mut idx = vec![0; self.order];
        for f in 0..self.data.len() {
            self.unflat(f, &mut idx);
            let v = self.data[f];
            if permutations(&idx)
                .iter()
                .any(|p| (self.data[self.flat(p)] - v).abs() > tol)
            {
                return false;
            }
        }
        true
    }

    /// Operator norm induced by the Euclidean norm,
    /// `max_{||u|| = 1} |T[u]^k|` (equal to the multilinear norm for symmetric
    /// tensors).
    ///
    /// Exact for orders 0, 1 and 2. For higher orders this is a lower estimate
    /// obtained from [`NORM_SAMPLES`] random unit directions plus the
    /// coordinate directions, polished by a shifted power iteration. Use
    /// [`SymTensor::norm_upper_bound`] where a guaranteed bound is needed.
    pub fn operator_norm(&self) -> f64 {
        match self.order {
            0 => self.data[0].abs(),
            1 => self.frobenius_norm(),
            2 => {
                if self.dim == 0 {
                    return 0.0;
                }
                let eig = self.to_matrix().symmetric_eigen();
                eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
            _ => self.estimate_high_order_norm(),
        }
    }

    /// A bound that is never below the operator norm: exact for orders up to
    /// two, the Frobenius norm otherwise.
    pub fn norm_upper_bound(&self) -> f64 {
        if self.order <= 2 {
            self.operator_norm()
        } else {
            self.frobenius_norm()
        }
    }

    fn estimate_high_order_norm(&self) -> f64 {
        let n = self.dim;
        if n == 0 || self.max_abs_entry() == 0.0 {
            return 0.0;
        }
        let seed = 0x5eed_u64 ^ ((n as u64) << 8) ^ (self.order as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates: Vec<(f64, Vec<f64>)> = Vec::with_capacity(NORM_SAMPLES + n);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            candidates.push((self.apply(&e).abs(), e));
        }
        for _ in 0..NORM_SAMPLES {
            let u = random_unit(&mut rng, n);
            candidates.push((self.apply(&u).abs(), u));
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let shift = self.frobenius_norm();
        let mut best = candidates[0].0;
        for (_, start) in candidates.iter().take(4) {
            let mut u = start.clone();
            for _ in 0..60 {
                let value = self.apply(&u);
                let sign = if value < 0.0 { -1.0 } else { 1.0 };
                let grad = self.contract_times(&u, self.order - 1);
                let mut next: Vec<f64> = grad
                    .data
                    .iter()
                    .zip(&u)
                    .map(|(g, ui)| sign * g + shift * ui)
                    .collect();
                let nrm = norm(&next);
                if nrm == 0.0 {
                    break;
                }
                next.iter_mut().for_each(|v| *v /= nrm);
                u = next;
            }
            best = best.max(self.apply(&u).abs());
        }
        best
    }
}

/// All orderings of `idx` (with repetition when `idx` has repeated entries).
pub(crate) fn permutations(idx: &[usize]) -> Vec<Vec<usize>> {
    if idx.len() <= 1 {
        return vec![idx.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..idx.len() {
        let mut rest = idx.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        let nrm = norm(&v);
        if nrm > 1e-12 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Box-Muller normal sample.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A random symmetric tensor with standard-normal entries before symmetrization.
pub fn random_symmetric<R: Rng>(rng: &mut R, order: usize, dim: usize) -> SymTensor {
    let mut t = SymTensor::zeros(order, dim);
    t.data.iter_mut().for_each(|v| *v = standard_normal(rng));
    t.symmetrize()
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}
