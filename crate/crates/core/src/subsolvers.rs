//! Ball-constrained maximization of Taylor decrements and approximate
//! minimization of the regularized model.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, ArqError, Result};
use crate::taylor::{DerivativeBundle, RegularizedModel};
use crate::tensor::{dot, factorial, norm, random_unit};

/// Fraction of the optimal decrement certified by the order-two subsolver.
pub const ORDER2_GUARANTEE: f64 = 1.0 - 1e-8;

/// Smallest radius tried by [`radius_search`].
pub const RADIUS_FLOOR: f64 = 1e-8;

/// Default cap on inner model-minimization iterations.
pub const DEFAULT_INNER_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    /// Certified fraction for the order-three multi-start search.
    pub order3_guarantee: f64,
    /// Number of starting points of the order-three search.
    pub order3_starts: usize,
    pub seed: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            order3_guarantee: 0.5,
            order3_starts: 50,
            seed: 0x0ad3,
        }
    }
}

impl MeasureConfig {
    /// Fraction of the optimal decrement the order-`j` subsolver certifies.
    pub fn guarantee(&self, j: usize) -> f64 {
        match j {
            1 => 1.0,
            2 => ORDER2_GUARANTEE,
            _ => self.order3_guarantee,
        }
    }

    /// The single fraction entering the algorithm for orders `1..=q`.
    pub fn varsigma(&self, q: usize) -> f64 {
        (1..=q).map(|j| self.guarantee(j)).fold(1.0, f64::min)
    }
}

/// Approximate maximizer of a Taylor decrement over a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureResult {
    pub phi_bar: f64,
    pub displacement: Vec<f64>,
    pub guarantee: f64,
}

/// Outcome of the inner model minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub step: Vec<f64>,
    /// Optimality radii at the step; absent for long steps.
    pub radii: Option<Vec<f64>>,
    /// Inner displacements `d^m_l`, one per order, when `radii` is present.
    pub inner_displacements: Vec<Vec<f64>>,
    /// Model Taylor decrements at the inner displacements.
    pub inner_decrements: Vec<f64>,
    pub long_step: bool,
    pub iterations: usize,
}

/// Parameters of the inner termination test.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerTermination {
    pub q: usize,
    pub theta: f64,
    pub omega: f64,
    pub varsigma: f64,
    pub epsilons: Vec<f64>,
    pub max_iters: usize,
    pub measure: MeasureConfig,
}

impl InnerTermination {
    /// `varsigma * theta * (1 - omega) / (2 (1 + omega))`.
    pub fn coefficient(&self) -> f64 {
        self.varsigma * self.theta * (1.0 - self.omega) / (2.0 * (1.0 + self.omega))
    }

    fn threshold(&self, ell: usize, delta: f64) -> f64 {
        self.coefficient() * self.epsilons[ell - 1] * delta.powi(ell as i32) / factorial(ell)
    }
}

/// Minimizer of `g^T d + 0.5 d^T H d` over `||d|| <= delta`.
///
/// Uses the eigen-decomposition of `H` and a safeguarded Newton iteration on
/// the secular equation. Candidates from the interior, boundary and hard
/// cases are compared by objective value; among global minimizers the one
/// with lexicographically largest components wins.
pub fn trust_region_step(g: &[f64], h: &DMatrix<f64>, delta: f64) -> Vec<f64> {
    let n = g.len();
    if n == 0 {
        return Vec::new();
    }
    let eig = h.clone().symmetric_eigen();
    let lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let q = &eig.eigenvectors;
    let g_hat: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|r| q[(r, i)] * g[r]).sum())
        .collect();
    let (i_min, lambda_min) = lambdas
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, l)| if l < acc.1 { (i, l) } else { acc });
    let scale = lambdas.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    let to_original = |y: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|r| (0..n).map(|i| q[(r, i)] * y[i]).sum())
            .collect()
    };
    let objective = |d: &[f64]| -> f64 {
        let hd = h * DVector::from_column_slice(d);
        dot(g, d) + 0.5 * dot(d, hd.as_slice())
    };
    let norm_at = |lam: f64| -> f64 {
        g_hat
            .iter()
            .zip(&lambdas)
            .map(|(gi, li)| {
                if *gi == 0.0 {
                    0.0
                } else {
                    (gi / (li + lam)).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt()
    };
    let step_at = |lam: f64| -> Vec<f64> {
        let y: Vec<f64> = g_hat
            .iter()
            .zip(&lambdas)
            .map(|(gi, li)| if *gi == 0.0 { 0.0 } else { -gi / (li + lam) })
            .collect();
        to_original(&y)
    };

    let mut candidates: Vec<Vec<f64>> = vec![vec![0.0; n]];

    if lambda_min > 0.0 {
        let d = step_at(0.0);
        if norm(&d) <= delta {
            candidates.push(d);
        }
    }

    let lo = (-lambda_min).max(0.0);
    let at_lo = norm_at(lo);
    if !(at_lo <= delta) {
        let g_norm = norm(g);
        let mut lo_b = lo;
        let mut hi_b = lo + g_norm / delta + 1.0;
        while norm_at(hi_b) > delta {
            hi_b = 2.0 * hi_b + 1.0;
        }
        let mut lam = hi_b;
        for _ in 0..200 {
            let nd = norm_at(lam);
            if (nd - delta).abs() <= 1e-14 * delta {
                break;
            }
            if nd > delta {
                lo_b = lam;
            } else {
                hi_b = lam;
            }
            // Newton on 1/||d(lam)|| - 1/delta
            let dn: f64 = g_hat
                .iter()
                .zip(&lambdas)
                .map(|(gi, li)| gi * gi / (li + lam).powi(3))
                .sum();
            let phi = 1.0 / nd - 1.0 / delta;
            let dphi = dn / nd.powi(3);
            let newton = lam - phi / dphi;
            lam = if dphi > 0.0 && newton > lo_b && newton < hi_b {
                newton
            } else {
                0.5 * (lo_b + hi_b)
            };
            if hi_b - lo_b <= 1e-16 * hi_b.max(1.0) {
                break;
            }
        }
        let mut d = step_at(lam);
        let nd = norm(&d);
        if nd > delta {
            d.iter_mut().for_each(|v| *v *= delta / nd);
        }
        candidates.push(d);
    }

    if lambda_min <= 0.0 {
        // hard case: pseudo-inverse solution plus a null-space component
        let tol = 1e-12 * scale;
        let y: Vec<f64> = g_hat
            .iter()
            .zip(&lambdas)
            .map(|(gi, li)| {
                if li - lambda_min <= tol {
                    0.0
                } else {
                    -gi / (li - lambda_min)
                }
            })
            .collect();
        let base = to_original(&y);
        let nb = norm(&base);
        if nb <= delta {
            let tau = (delta * delta - nb * nb).max(0.0).sqrt();
            for sign in [1.0, -1.0] {
                let d: Vec<f64> = base
                    .iter()
                    .enumerate()
                    .map(|(r, b)| b + sign * tau * q[(r, i_min)])
                    .collect();
                candidates.push(d);
            }
        }
    }

    select_best(candidates, objective)
}

fn lexicographic_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

/// Lowest objective, ties broken toward the lexicographically largest point.
fn select_best(candidates: Vec<Vec<f64>>, objective: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for c in candidates {
        let v = objective(&c);
        best = match best {
            None => Some((v, c)),
            Some((bv, bc)) => {
                let tol = 1e-12 * bv.abs().max(1e-300);
                if v < bv - tol || ((v - bv).abs() <= tol && lexicographic_greater(&c, &bc)) {
                    Some((v, c))
                } else {
                    Some((bv, bc))
                }
            }
        };
    }
    best.map(|b| b.1).unwrap_or_default()
}

/// Approximate maximizer of the order-`j` Taylor decrement of `bundle` over
/// the ball of radius `delta`.
pub fn optimality_measure(bundle: &DerivativeBundle, j: usize, delta: f64) -> Result<MeasureResult> {
    optimality_measure_with(bundle, j, delta, &MeasureConfig::default())
}

pub fn optimality_measure_with(
    bundle: &DerivativeBundle,
    j: usize,
    delta: f64,
    cfg: &MeasureConfig,
) -> Result<MeasureResult> {
    if j == 0 || j > bundle.degree() || j > 3 {
        return Err(invalid(format!(
            "measure order {j} outside 1..={}",
            bundle.degree().min(3)
        )));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("measure radius must be > 0, got {delta}")));
    }
    let n = bundle.dim();
    let g = bundle.gradient();
    let displacement = match j {
        1 => {
            let gn = norm(g);
            if gn == 0.0 {
                vec![0.0; n]
            } else {
                g.iter().map(|v| -delta * v / gn).collect()
            }
        }
        2 => trust_region_step(g, &bundle.tensors[1].to_matrix(), delta),
        _ => cubic_ball_search(bundle, delta, cfg),
    };
    let mut phi_bar = bundle.taylor_decrement(&displacement, j)?;
    let displacement = if phi_bar < 0.0 {
        phi_bar = 0.0;
        vec![0.0; n]
    } else {
        displacement
    };
    Ok(MeasureResult {
        phi_bar,
        displacement,
        guarantee: cfg.guarantee(j),
    })
}

fn project(d: &mut [f64], delta: f64) {
    let nd = norm(d);
    if nd > delta {
        d.iter_mut().for_each(|v| *v *= delta / nd);
    }
}

/// Multi-start projected gradient ascent on the cubic decrement.
fn cubic_ball_search(bundle: &DerivativeBundle, delta: f64, cfg: &MeasureConfig) -> Vec<f64> {
    let n = bundle.dim();
    let g = bundle.gradient();
    let h = &bundle.tensors[1];
    let t = &bundle.tensors[2];
    let decrement = |d: &[f64]| -> f64 {
        -(dot(g, d) + 0.5 * h.apply(d) + t.apply(d) / 6.0)
    };
    let ascent_dir = |d: &[f64]| -> Vec<f64> {
        let hd = h.contract(d);
        let tdd = t.contract_times(d, 2);
        (0..n)
            .map(|i| -(g[i] + hd.data()[i] + 0.5 * tdd.data()[i]))
            .collect()
    };
    let lipschitz = h.norm_upper_bound() + t.norm_upper_bound() * delta;
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { delta };

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(cfg.order3_starts);
    starts.push(trust_region_step(g, &h.to_matrix(), delta));
    let gn = norm(g);
    if gn > 0.0 {
        starts.push(g.iter().map(|v| -delta * v / gn).collect());
    }
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign * delta;
            starts.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < cfg.order3_starts {
        let r: f64 = rand::Rng::gen::<f64>(&mut rng).powf(1.0 / n as f64);
        starts.push(random_unit(&mut rng, n).into_iter().map(|v| v * r * delta).collect());
    }
    starts.truncate(cfg.order3_starts.max(1));

    let mut candidates = vec![vec![0.0; n]];
    for start in starts {
        let mut d = start;
        project(&mut d, delta);
        for _ in 0..300 {
            let dir = ascent_dir(&d);
            let mut next: Vec<f64> = d.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            project(&mut next, delta);
            let moved = norm(&next.iter().zip(&d).map(|(a, b)| a - b).collect::<Vec<_>>());
            d = next;
            if moved <= 1e-13 * delta {
                break;
            }
        }
        candidates.push(d);
    }
    select_best(candidates, |d| -decrement(d))
}

/// Largest radius on the halving grid from `delta_cap` at which the order
/// `ell` inner termination test holds at `s`.
pub fn radius_search(
    model: &RegularizedModel,
    s: &[f64],
    ell: usize,
    rule: &InnerTermination,
    delta_cap: f64,
) -> Result<(f64, MeasureResult)> {
    if ell < 3 {
        return Err(invalid("radius search is only used for orders >= 3"));
    }
    let bundle = model.shifted_bundle(s, ell, vec![0.0; ell])?;
    let mut delta = delta_cap;
    while delta >= RADIUS_FLOOR {
        let m = optimality_measure_with(&bundle, ell, delta, &rule.measure)?;
        if m.phi_bar <= rule.threshold(ell, delta) {
            return Ok((delta, m));
        }
        delta *= 0.5;
    }
    Err(ArqError::SolverStall(format!(
        "no radius above {RADIUS_FLOOR} satisfies the order-{ell} inner test"
    )))
}

struct Certified {
    radii: Vec<f64>,
    displacements: Vec<Vec<f64>>,
    decrements: Vec<f64>,
}

/// The inner termination test at `s`. Short steps need every order to pass
/// at some radius; long steps need orders up to two to pass at radius one.
fn inner_test(model: &RegularizedModel, s: &[f64], rule: &InnerTermination) -> Result<Option<Certified>> {
    let long = norm(s) >= 1.0;
    let top = if long { rule.q.min(2) } else { rule.q };
    let mut out = Certified {
        radii: Vec::with_capacity(top),
        displacements: Vec::with_capacity(top),
        decrements: Vec::with_capacity(top),
    };
    for ell in 1..=top {
        let (delta, m) = if ell <= 2 {
            let bundle = model.shifted_bundle(s, ell, vec![0.0; ell])?;
            let m = optimality_measure_with(&bundle, ell, 1.0, &rule.measure)?;
            if m.phi_bar > rule.threshold(ell, 1.0) {
                return Ok(None);
            }
            (1.0, m)
        } else {
            match radius_search(model, s, ell, rule, 1.0) {
                Ok(found) => found,
                Err(ArqError::SolverStall(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        };
        out.radii.push(delta);
        out.displacements.push(m.displacement);
        out.decrements.push(m.phi_bar);
    }
    Ok(Some(out))
}

fn finish(s: Vec<f64>, cert: Option<Certified>, iterations: usize) -> StepResult {
    let long_step = norm(&s) >= 1.0;
    match cert {
        Some(c) if !long_step => StepResult {
            step: s,
            radii: Some(c.radii),
            inner_displacements: c.displacements,
            inner_decrements: c.decrements,
            long_step,
            iterations,
        },
        _ => StepResult {
            step: s,
            radii: None,
            inner_displacements: Vec::new(),
            inner_decrements: Vec::new(),
            long_step,
            iterations,
        },
    }
}

/// Trust-region Newton iteration on the model from `warm_start`, stopped as
/// soon as the inner termination test holds. Every accepted iterate lowers
/// the model, so the returned step never decreases the model less than the
/// warm start does.
pub fn minimize_model(
    model: &RegularizedModel,
    warm_start: &[f64],
    rule: &InnerTermination,
) -> Result<StepResult> {
    let n = model.dim();
    if warm_start.len() != n {
        return Err(invalid("warm start has the wrong dimension"));
    }
    if rule.q == 0 || rule.q > model.degree() || rule.epsilons.len() != rule.q {
        return Err(invalid("inner test needs 1 <= q <= p and q accuracy targets"));
    }
    let mut s = warm_start.to_vec();
    let mut dm = model.model_decrement(&s)?;
    if let Some(c) = inner_test(model, &s, rule)? {
        return Ok(finish(s, Some(c), 0));
    }
    let mut radius = norm(&s).max(1.0);
    for it in 1..=rule.max_iters {
        let g = model.derivative(&s, 1)?;
        let h = model.derivative(&s, 2)?.to_matrix();
        let step = trust_region_step(g.data(), &h, radius);
        let hs = &h * DVector::from_column_slice(&step);
        let predicted = -(dot(g.data(), &step) + 0.5 * dot(&step, hs.as_slice()));
        let trial: Vec<f64> = s.iter().zip(&step).map(|(a, b)| a + b).collect();
        let trial_dm = model.model_decrement(&trial)?;
        let actual = trial_dm - dm;
        let ratio = if predicted > 0.0 { actual / predicted } else { -1.0 };
        let step_norm = norm(&step);
        if actual > 0.0 && ratio >= 0.1 {
            s = trial;
            dm = trial_dm;
            if ratio > 0.75 && step_norm >= 0.99 * radius {
                radius *= 2.0;
            }
            if let Some(c) = inner_test(model, &s, rule)? {
                return Ok(finish(s, Some(c), it));
            }
        } else {
            radius = 0.25 * step_norm.max(radius * 1e-3);
            if radius < 1e-15 * norm(&s).max(1.0) {
                break;
            }
        }
    }
    if norm(&s) >= 1.0 {
        return Ok(finish(s, None, rule.max_iters));
    }
    Err(ArqError::SolverStall(format!(
        "inner minimization did not meet its termination test (||s|| = {:.3e}, model decrease {:.3e})",
        norm(&s),
        dm
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SymTensor;
    use rand::Rng;

    fn bundle2(g: &[f64], h: &[f64]) -> DerivativeBundle {
        let n = g.len();
        DerivativeBundle::exact(
            0.0,
            vec![
                SymTensor::from_vector(g),
                SymTensor::from_data(2, n, h.to_vec()).unwrap(),
            ],
        )
        .unwrap()
    }

    /// Exhaustive polar-grid maximization of the quadratic decrement in 2-D.
    fn polar_grid_phi(g: &[f64], h: &[f64], delta: f64) -> f64 {
        let mut best: f64 = 0.0;
        for a in 0..4000 {
            let th = 2.0 * std::f64::consts::PI * a as f64 / 4000.0;
            let (c, s) = (th.cos(), th.sin());
            for r in 1..=100 {
                let rad = delta * r as f64 / 100.0;
                let d = [rad * c, rad * s];
                let q = g[0] * d[0] + g[1] * d[1]
                    + 0.5 * (h[0] * d[0] * d[0] + 2.0 * h[1] * d[0] * d[1] + h[3] * d[1] * d[1]);
                best = best.max(-q);
            }
        }
        best
    }

    #[test]
    fn first_order_closed_form() {
        let b = DerivativeBundle::exact(0.0, vec![SymTensor::from_vector(&[3.0, 4.0])]).unwrap();
        let m = optimality_measure(&b, 1, 0.5).unwrap();
        assert!((m.phi_bar - 2.5).abs() < 1e-15);
        assert!((m.displacement[0] + 0.3).abs() < 1e-15);
        assert!((m.displacement[1] + 0.4).abs() < 1e-15);
        assert_eq!(m.guarantee, 1.0);
    }

    #[test]
    fn pure_negative_curvature() {
        let b = bundle2(&[0.0, 0.0], &[-2.0, 0.0, 0.0, 1.0]);
        let m = optimality_measure(&b, 2, 1.0).unwrap();
        assert!((m.phi_bar - 1.0).abs() < 1e-12);
        assert!((m.displacement[0].abs() - 1.0).abs() < 1e-12);
        // tie between (1,0) and (-1,0) resolves to the larger first component
        assert!(m.displacement[0] > 0.0);
    }

    #[test]
    fn second_order_matches_polar_grid() {
        let g = [1.0, 0.0];
        let h = [-1.0, 0.0, 0.0, 2.0];
        let m = optimality_measure(&bundle2(&g, &h), 2, 0.8).unwrap();
        let grid = polar_grid_phi(&g, &h, 0.8);
        assert!((m.phi_bar - grid).abs() <= 1e-4 * grid);
        assert!(m.phi_bar >= grid - 1e-12);
    }

    #[test]
    fn second_order_random_instances_match_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let off = rng.gen_range(-2.0..2.0);
            let h = [rng.gen_range(-3.0..3.0), off, off, rng.gen_range(-3.0..3.0)];
            let delta = rng.gen_range(0.05..1.0);
            let m = optimality_measure(&bundle2(&g, &h), 2, delta).unwrap();
            let grid = polar_grid_phi(&g, &h, delta);
            assert!(norm(&m.displacement) <= delta * (1.0 + 1e-12));
            assert!(m.phi_bar >= grid - 1e-12, "{} < {}", m.phi_bar, grid);
            assert!(m.phi_bar - grid <= 1e-4 * grid.max(1e-12));
        }
    }

    #[test]
    fn trs_hard_case_with_gradient_orthogonal_to_null_space() {
        // g lies along the positive eigenvector; global minimizer uses the
        // negative-curvature direction at the boundary
        let g = [0.0, 1.0];
        let h = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 3.0]);
        let d = trust_region_step(&g, &h, 1.0);
        assert!((norm(&d) - 1.0).abs() < 1e-12);
        let q = |d: &[f64]| d[1] + 0.5 * (-d[0] * d[0] + 3.0 * d[1] * d[1]);
        // compare against a dense boundary scan
        let mut best = f64::INFINITY;
        for a in 0..20000 {
            let th = 2.0 * std::f64::consts::PI * a as f64 / 20000.0;
            best = best.min(q(&[th.cos(), th.sin()]));
        }
        assert!(q(&d) <= best + 1e-9);
        assert!(d[0] > 0.0);
    }

    #[test]
    fn third_order_search_beats_random_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let tensors = (1..=3)
                .map(|i| crate::tensor::random_symmetric(&mut rng, i, 2))
                .collect();
            let b = DerivativeBundle::exact(0.0, tensors).unwrap();
            let m = optimality_measure(&b, 3, 0.7).unwrap();
            assert!(norm(&m.displacement) <= 0.7 + 1e-12);
            for _ in 0..2000 {
                let r = 0.7 * rng.gen::<f64>().sqrt();
                let w: Vec<f64> = random_unit(&mut rng, 2).iter().map(|v| v * r).collect();
                let v = b.taylor_decrement(&w, 3).unwrap();
                assert!(m.guarantee * v <= m.phi_bar + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_orders_above_degree() {
        let b = DerivativeBundle::exact(0.0, vec![SymTensor::from_vector(&[1.0])]).unwrap();
        assert!(optimality_measure(&b, 2, 0.5).is_err());
    }

    fn rule(q: usize, eps: f64) -> InnerTermination {
        InnerTermination {
            q,
            theta: 0.5,
            omega: 0.02,
            varsigma: MeasureConfig::default().varsigma(q),
            epsilons: vec![eps; q],
            max_iters: DEFAULT_INNER_ITERS,
            measure: MeasureConfig::default(),
        }
    }

    #[test]
    fn convex_model_step_matches_grid_minimizer() {
        let b = bundle2(&[1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        let model = RegularizedModel::new(b, 1.0).unwrap();
        let cauchy = optimality_measure(&model.bundle, 1, 0.25).unwrap().displacement;
        let res = minimize_model(&model, &cauchy, &rule(1, 1e-6)).unwrap();
        assert!(model.model_decrement(&res.step).unwrap() >= model.model_decrement(&cauchy).unwrap());
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in 0..=400 {
            for j in 0..=400 {
                let s = [-2.0 + 0.01 * i as f64, -2.0 + 0.01 * j as f64];
                let v = model.value(&s).unwrap();
                if v < best.0 {
                    best = (v, s);
                }
            }
        }
        assert!(model.value(&res.step).unwrap() <= best.0 + 1e-12);
        assert!((res.step[0] - best.1[0]).abs() < 0.02 && res.step[1].abs() < 0.02);
        assert_eq!(res.radii.as_deref(), Some(&[1.0][..]));
    }

    #[test]
    fn warm_start_meeting_test_is_returned_unchanged() {
        // m(x) = x + x^2/2 + |x|^3/6 is stationary where 1 + x - x^2/2 = 0
        let b = bundle2(&[1.0], &[1.0]);
        let model = RegularizedModel::new(b, 1.0).unwrap();
        let x = 1.0 - 3f64.sqrt();
        let res = minimize_model(&model, &[x], &rule(1, 1e-3)).unwrap();
        assert_eq!(res.step, vec![x]);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn negative_curvature_gives_long_step() {
        // m(x) = -x^2 + sigma |x|^3 / 6, minimized at |x| = 4 / sigma
        let sigma = 0.1;
        let b = bundle2(&[0.0], &[-2.0]);
        let model = RegularizedModel::new(b, sigma).unwrap();
        let res = minimize_model(&model, &[0.5], &rule(2, 1e-3)).unwrap();
        assert!(res.long_step);
        assert!(res.radii.is_none());
        assert!((res.step[0] - 4.0 / sigma).abs() < 1e-6);
    }

    #[test]
    fn radius_search_returns_cap_when_measure_vanishes() {
        // quadratic f with zero third derivative, at the model minimizer
        let tensors = vec![
            SymTensor::from_vector(&[0.0, 0.0]),
            SymTensor::identity(2),
            SymTensor::zeros(3, 2),
        ];
        let model = RegularizedModel::new(DerivativeBundle::exact(0.0, tensors).unwrap(), 1.0).unwrap();
        let (delta, m) = radius_search(&model, &[0.0, 0.0], 3, &rule(3, 1e-3), 1.0).unwrap();
        assert_eq!(delta, 1.0);
        assert_eq!(m.phi_bar, 0.0);
    }

    #[test]
    fn radius_search_respects_theoretical_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let tensors: Vec<SymTensor> = (1..=3)
                .map(|i| crate::tensor::random_symmetric(&mut rng, i, 2))
                .collect();
            let bundle = DerivativeBundle::exact(0.0, tensors.clone()).unwrap();
            let sigma = 2.0;
            let model = RegularizedModel::new(bundle, sigma).unwrap();
            let r = rule(3, 1e-2);
            let warm = optimality_measure(&model.bundle, 1, 0.1).unwrap().displacement;
            let Ok(step) = minimize_model(&model, &warm, &r) else { continue };
            let Some(radii) = step.radii else { continue };
            let l_bar = tensors.iter().map(|t| t.norm_upper_bound()).fold(1.0, f64::max);
            let kappa = r.varsigma * r.theta * (1.0 - r.omega)
                / (8.0 * (1.0 + r.omega) * (3.0 * l_bar + sigma));
            assert!(radii[2] >= (kappa * 1e-2).min(1.0));
        }
    }
}
