//! Sampled Lipschitz estimates over the region a run visited.

use arq_core::{IterationRecord, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOX_SAMPLES: usize = 200;
const SEGMENT_POINTS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    /// Estimated Lipschitz constant of the order-`j` derivative, `j = 0..=p`.
    pub per_order: Vec<f64>,
    /// Largest of `per_order`, at least 1.
    pub l_f: f64,
    /// Constant for order `p`.
    pub l_fp: f64,
}

/// Points visited by a trace: iterates, trial points and points on the steps.
pub fn visited_points(trace: &[IterationRecord]) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for rec in trace {
        pts.push(rec.x.clone());
        if let Some(s) = &rec.step {
            for t in SEGMENT_POINTS.iter().chain(&[1.0]) {
                pts.push(rec.x.iter().zip(s).map(|(a, b)| a + t * b).collect());
            }
        }
    }
    pts
}

/// `L_{f,j}` is estimated as the largest norm of the order-`j+1` derivative over
/// the visited points and random points of their bounding box.
pub fn estimate(problem: &dyn Problem, trace: &[IterationRecord], p: usize, seed: u64) -> LipschitzEstimate {
    let mut pts = visited_points(trace);
    if let Some(first) = pts.first().cloned() {
        let n = first.len();
        let mut lo = first.clone();
        let mut hi = first;
        for x in &pts {
            for i in 0..n {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..BOX_SAMPLES {
            pts.push((0..n).map(|i| lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>()).collect());
        }
    }
    let per_order: Vec<f64> = (0..=p)
        .map(|j| {
            pts.iter()
                .map(|x| problem.derivative(x, j + 1).operator_norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let l_f = per_order.iter().copied().fold(1.0, f64::max);
    LipschitzEstimate {
        l_fp: per_order[p],
        per_order,
        l_f,
    }
}
