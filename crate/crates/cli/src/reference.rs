//! Ground-truth computations written independently of the solver's own
//! tensor, Taylor and subproblem code.

use arq_core::Problem;
use nalgebra::{DMatrix, DVector};

/// `T[s]^k` for a dense order-`k` tensor stored row-major.
pub fn full_contraction(data: &[f64], order: usize, s: &[f64]) -> f64 {
    let n = s.len();
    let mut total = 0.0;
    for (flat, v) in data.iter().enumerate() {
        let mut rest = flat;
        let mut w = *v;
        for _ in 0..order {
            w *= s[rest % n];
            rest /= n;
        }
        total += w;
    }
    total
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, b| a * b as f64)
}

/// Exact `-sum_i grad^i f(x)[s]^i / i!` for `i = 1..=p`.
pub fn taylor_decrement(problem: &dyn Problem, x: &[f64], s: &[f64], p: usize) -> f64 {
    -(1..=p)
        .map(|i| full_contraction(problem.derivative(x, i).data(), i, s) / factorial(i))
        .sum::<f64>()
}

/// The negated Taylor polynomial `d -> -(g.d + d'Hd/2 + T[d]^3/6)`.
#[derive(Debug, Clone)]
pub struct LocalDecrement {
    pub n: usize,
    pub g: Vec<f64>,
    pub h: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
}

impl LocalDecrement {
    pub fn from_problem(problem: &dyn Problem, x: &[f64], j: usize) -> Self {
        let take = |k: usize| (j >= k).then(|| problem.derivative(x, k).data().to_vec());
        LocalDecrement {
            n: x.len(),
            g: problem.derivative(x, 1).data().to_vec(),
            h: take(2),
            t: take(3),
        }
    }

    pub fn value(&self, d: &[f64]) -> f64 {
        let mut v: f64 = self.g.iter().zip(d).map(|(a, b)| a * b).sum();
        if let Some(h) = &self.h {
            v += 0.5 * full_contraction(h, 2, d);
        }
        if let Some(t) = &self.t {
            v += full_contraction(t, 3, d) / 6.0;
        }
        -v
    }

    pub fn gradient(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out: Vec<f64> = self.g.iter().map(|v| -v).collect();
        if let Some(h) = &self.h {
            for a in 0..n {
                for b in 0..n {
                    out[a] -= h[a * n + b] * d[b];
                }
            }
        }
        if let Some(t) = &self.t {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        out[a] -= 0.5 * t[(a * n + b) * n + c] * d[b] * d[c];
                    }
                }
            }
        }
        out
    }
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn project(d: &mut [f64], delta: f64) {
    let r = vnorm(d);
    if r > delta {
        d.iter_mut().for_each(|v| *v *= delta / r);
    }
}

/// Largest value of `-(g.d + d'Hd/2)` over `||d|| <= delta`, by eigen-decomposition
/// and bisection on the secular equation.
pub fn trust_region_max(g: &[f64], h: &[f64], delta: f64) -> f64 {
    let n = g.len();
    let hm = DMatrix::from_row_slice(n, n, h);
    let hm = (&hm + hm.transpose()) * 0.5;
    let eig = hm.clone().symmetric_eigen();
    let gv = DVector::from_column_slice(g);
    let gamma: Vec<f64> = (0..n).map(|i| eig.eigenvectors.column(i).dot(&gv)).collect();
    let lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = lam.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let tiny = 1e-12 * scale;
    let step_norm = |mu: f64| -> f64 {
        gamma
            .iter()
            .zip(&lam)
            .map(|(c, l)| if (l + mu).abs() <= tiny { 0.0 } else { (c / (l + mu)).powi(2) })
            .sum::<f64>()
            .sqrt()
    };
    let objective = |d: &DVector<f64>| -(gv.dot(d) + 0.5 * d.dot(&(&hm * d)));
    let build = |mu: f64| -> DVector<f64> {
        let mut d = DVector::zeros(n);
        for i in 0..n {
            if (lam[i] + mu).abs() > tiny {
                d -= eig.eigenvectors.column(i) * (gamma[i] / (lam[i] + mu));
            }
        }
        d
    };
    let lo = (-lmin).max(0.0);
    // interior stationary point for a positive definite Hessian
    if lmin > tiny && step_norm(0.0) <= delta {
        return objective(&build(0.0)).max(0.0);
    }
    let near = step_norm(lo + tiny * 10.0);
    if near <= delta || !near.is_finite() {
        // hard case: fill the remaining radius along the bottom eigenvector
        let mut d = build(lo);
        let rem = (delta * delta - d.norm_squared()).max(0.0).sqrt();
        let imin = (0..n).min_by(|a, b| lam[*a].total_cmp(&lam[*b])).unwrap_or(0);
        let v = eig.eigenvectors.column(imin).into_owned();
        let plus = &d + &v * rem;
        let minus = &d - &v * rem;
        d = if objective(&plus) >= objective(&minus) { plus } else { minus };
        return objective(&d).max(0.0);
    }
    let mut a = lo;
    let mut b = lo + vnorm(g) / delta + scale + 1.0;
    while step_norm(b) > delta {
        b *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if step_norm(m) > delta {
            a = m;
        } else {
            b = m;
        }
    }
    objective(&build(b)).max(0.0)
}

/// Grid points of the ball of radius `delta` in dimension `n <= 3`.
fn ball_grid(n: usize, delta: f64, fine: bool) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let mut pts = vec![vec![0.0; n]];
    match n {
        1 => {
            let m = if fine { 20_000 } else { 4000 };
            for i in 0..=m {
                pts.push(vec![-delta + 2.0 * delta * i as f64 / m as f64]);
            }
        }
        2 => {
            let (nr, na) = if fine { (200, 1440) } else { (60, 720) };
            for i in 1..=nr {
                let r = delta * i as f64 / nr as f64;
                for k in 0..na {
                    let a = 2.0 * PI * k as f64 / na as f64;
                    pts.push(vec![r * a.cos(), r * a.sin()]);
                }
            }
        }
        3 => {
            let (nr, np, na) = if fine { (60, 120, 240) } else { (30, 60, 120) };
            for i in 1..=nr {
                let r = delta * i as f64 / nr as f64;
                for kp in 0..=np {
                    let th = PI * kp as f64 / np as f64;
                    for ka in 0..na {
                        let ph = 2.0 * PI * ka as f64 / na as f64;
                        pts.push(vec![
                            r * th.sin() * ph.cos(),
                            r * th.sin() * ph.sin(),
                            r * th.cos(),
                        ]);
                    }
                }
            }
        }
        _ => panic!("grid search supports n <= 3"),
    }
    pts
}

/// Projected gradient ascent with step backtracking.
fn refine(f: &LocalDecrement, start: &[f64], delta: f64) -> (f64, Vec<f64>) {
    let mut d = start.to_vec();
    let mut best = f.value(&d);
    let mut step = 0.05 * delta;
    for _ in 0..2000 {
        let g = f.gradient(&d);
        let gn = vnorm(&g);
        if gn == 0.0 {
            break;
        }
        let mut trial: Vec<f64> = d.iter().zip(&g).map(|(a, b)| a + step * b / gn).collect();
        project(&mut trial, delta);
        let v = f.value(&trial);
        if v > best {
            best = v;
            d = trial;
            step *= 1.5;
        } else {
            step *= 0.5;
            if step < 1e-15 * delta.max(1e-300) {
                break;
            }
        }
    }
    (best, d)
}

/// Brute-force `max(0, max_{||d|| <= delta} f(d))` for `n <= 3`: dense polar or
/// spherical grid followed by local refinement of the best grid points.
pub fn grid_ball_max(f: &LocalDecrement, delta: f64, fine: bool) -> f64 {
    let mut scored: Vec<(f64, Vec<f64>)> = ball_grid(f.n, delta, fine)
        .into_iter()
        .map(|d| (f.value(&d), d))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0].0.max(0.0);
    for (_, d) in scored.iter().take(12) {
        best = best.max(refine(f, d, delta).0);
    }
    best
}

/// Exact order-`j` optimality measure at `x` for radius `delta`; `None` when
/// `j = 3` and the dimension exceeds 3.
pub fn optimality_measure(problem: &dyn Problem, x: &[f64], j: usize, delta: f64) -> Option<f64> {
    let f = LocalDecrement::from_problem(problem, x, j);
    match j {
        1 => Some(vnorm(&f.g) * delta),
        2 => Some(trust_region_max(&f.g, f.h.as_ref().unwrap(), delta)),
        3 if x.len() <= 3 => Some(grid_ball_max(&f, delta, false)),
        _ => None,
    }
}
