//! Experiment descriptions and the `key = value` configuration format.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use arq_core::problems::{by_name, PROBLEM_NAMES};
use arq_core::{NoiseKind, NoiseModel, Problem, SolverConfig};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: String,
    pub dim: usize,
    pub noise: NoiseKind,
    pub fill_fraction: f64,
    pub seed: u64,
    pub p: usize,
    pub q: usize,
    /// Targets per order; a single value is used for every order.
    pub eps: Vec<f64>,
    /// Starting point; the problem's default when absent.
    pub x0: Option<Vec<f64>>,
    /// Solver constants applied on top of the defaults, in order.
    pub overrides: Vec<(String, String)>,
    /// Sweep grid of `epsilon_min` values.
    pub eps_grid: Vec<f64>,
    pub runs: usize,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            problem: "quadratic".into(),
            dim: 4,
            noise: NoiseKind::Exact,
            fill_fraction: 0.9,
            seed: 0,
            p: 2,
            q: 1,
            eps: vec![1e-3],
            x0: None,
            overrides: Vec::new(),
            eps_grid: Vec::new(),
            runs: 1,
            out: None,
            jobs: 1,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| HarnessError::Config(format!("{key}: cannot parse '{v}' as a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| HarnessError::Config(format!("{key}: cannot parse '{v}' as an integer")))
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected 'key = value'", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(HarnessError::Config(format!("line {}: empty key", no + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    parse_config_text(&std::fs::read_to_string(path)?)
}

const SOLVER_KEYS: [&str; 17] = [
    "sigma0",
    "sigma_min",
    "eta1",
    "eta2",
    "gamma1",
    "gamma2",
    "gamma3",
    "gamma_acc",
    "omega",
    "varsigma",
    "theta",
    "delta0",
    "acc0",
    "acc_max",
    "max_iters",
    "inner_max_iters",
    "order3_starts",
];

impl ExperimentSpec {
    /// Applies one setting; experiment keys are set directly, solver keys are
    /// queued as overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = value.to_string(),
            "dim" => self.dim = parse_usize(key, value)?,
            "noise" => {
                self.noise = NoiseKind::parse(value)
                    .ok_or_else(|| HarnessError::Config(format!("unknown noise model '{value}'")))?
            }
            "fill_fraction" => self.fill_fraction = parse_f64(key, value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| HarnessError::Config(format!("seed: cannot parse '{value}'")))?
            }
            "p" => self.p = parse_usize(key, value)?,
            "q" => self.q = parse_usize(key, value)?,
            "eps" => self.eps = parse_list(key, value)?,
            "x0" => self.x0 = Some(parse_list(key, value)?),
            "eps_grid" => self.eps_grid = parse_list(key, value)?,
            "runs" => self.runs = parse_usize(key, value)?,
            "jobs" => self.jobs = parse_usize(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            k if SOLVER_KEYS.contains(&k) => self.overrides.push((k.to_string(), value.to_string())),
            k => return Err(HarnessError::Config(format!("unknown configuration key '{k}'"))),
        }
        Ok(())
    }

    pub fn apply_all(&mut self, pairs: &[(String, String)]) -> Result<()> {
        pairs.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn build_problem(&self) -> Result<Arc<dyn Problem>> {
        if self.dim == 0 {
            return Err(HarnessError::Config("dim must be >= 1".into()));
        }
        by_name(&self.problem, self.dim).map(Arc::from).ok_or_else(|| {
            HarnessError::Config(format!(
                "unknown problem '{}' for dimension {} (known: {})",
                self.problem,
                self.dim,
                PROBLEM_NAMES.join(", ")
            ))
        })
    }

    pub fn noise_model(&self, seed: u64) -> Result<NoiseModel> {
        if !(0.0..=1.0).contains(&self.fill_fraction) {
            return Err(HarnessError::Config("fill_fraction must lie in [0,1]".into()));
        }
        let mut n = NoiseModel::new(self.noise, seed);
        n.fill_fraction = self.fill_fraction;
        Ok(n)
    }

    /// Solver configuration with every order targeting `eps`.
    pub fn build_config(&self) -> Result<SolverConfig> {
        self.build_config_with(&self.eps)
    }

    pub fn build_config_with(&self, eps: &[f64]) -> Result<SolverConfig> {
        let eps = match eps.len() {
            1 => vec![eps[0]; self.q],
            n if n == self.q => eps.to_vec(),
            n => {
                return Err(HarnessError::Config(format!(
                    "eps has {n} entries, expected 1 or q = {}",
                    self.q
                )))
            }
        };
        let mut c = SolverConfig::new(self.p, self.q, eps);
        // q may lie outside the measure table; validation reports it
        if (1..=3).contains(&self.q) {
            c.varsigma = c.measure.varsigma(self.q);
        }
        for (k, v) in &self.overrides {
            match k.as_str() {
                "sigma0" => c.sigma0 = parse_f64(k, v)?,
                "sigma_min" => c.sigma_min = parse_f64(k, v)?,
                "eta1" => c.eta1 = parse_f64(k, v)?,
                "eta2" => c.eta2 = parse_f64(k, v)?,
                "gamma1" => c.gamma1 = parse_f64(k, v)?,
                "gamma2" => c.gamma2 = parse_f64(k, v)?,
                "gamma3" => c.gamma3 = parse_f64(k, v)?,
                "gamma_acc" => c.gamma_acc = parse_f64(k, v)?,
                "omega" => c.omega = parse_f64(k, v)?,
                "varsigma" => c.varsigma = parse_f64(k, v)?,
                "theta" => c.theta = parse_f64(k, v)?,
                "delta0" => c.delta0 = broadcast(k, parse_list(k, v)?, self.q)?,
                "acc0" => c.acc0 = broadcast(k, parse_list(k, v)?, self.p)?,
                "acc_max" => c.acc_max = parse_f64(k, v)?,
                "max_iters" => c.max_iters = parse_usize(k, v)?,
                "inner_max_iters" => c.inner_max_iters = parse_usize(k, v)?,
                "order3_starts" => c.measure.order3_starts = parse_usize(k, v)?,
                _ => unreachable!("filtered by set"),
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn broadcast(key: &str, v: Vec<f64>, len: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; len]),
        n if n == len => Ok(v),
        n => Err(HarnessError::Config(format!("{key} has {n} entries, expected 1 or {len}"))),
    }
}
