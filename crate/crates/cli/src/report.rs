//! Single-solve report.

use std::fmt;
use std::time::Instant;

use dsop_core::solver;
use dsop_core::{Algorithm, Estimator, Instance, Result, SearchConfig, SolveRequest};
use serde::Serialize;

use crate::sweep::{check_seed, matrix_probability, sampling_probability};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: Algorithm,
    pub estimator: Estimator,
    pub deadline: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub path: Vec<usize>,
    pub reward: f64,
    pub prob_matrix: f64,
    /// The solver's own estimate for sampling runs, a re-score with
    /// `check_samples` walks otherwise.
    pub prob_sampling: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

/// Solves and scores the result under both estimators. `seed` is the root
/// from which the search, sampler and check seeds are derived.
pub fn solve_report(
    instance: &Instance,
    request: &SolveRequest,
    config: &SearchConfig,
    algorithm: Algorithm,
    seed: u64,
    check_samples: usize,
    timing: bool,
) -> Result<SolveReport> {
    let cfg = config.clone().with_seed(seed);
    let started = Instant::now();
    let sol = solver::solve(instance, request, &cfg, algorithm)?;
    let elapsed = started.elapsed().as_secs_f64();
    let route = sol.path.vertices();
    let (pm, ps) = match cfg.estimator {
        Estimator::Matrix => (
            sol.estimate.value,
            sampling_probability(instance, request, check_samples, check_seed(seed), route),
        ),
        Estimator::Sampling => (matrix_probability(instance, request, &cfg, route)?, sol.estimate.value),
    };
    Ok(SolveReport {
        method: algorithm,
        estimator: cfg.estimator,
        deadline: request.deadline,
        epsilon: request.epsilon,
        seed,
        path: route.iter().map(|v| v.0).collect(),
        reward: sol.reward,
        prob_matrix: pm,
        prob_sampling: ps,
        runtime_s: timing.then_some(elapsed),
    })
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(|v| v.to_string()).collect();
        writeln!(f, "method: {} ({})", self.method, self.estimator)?;
        writeln!(
            f,
            "H: {}  epsilon: {}  seed: {}",
            self.deadline, self.epsilon, self.seed
        )?;
        writeln!(f, "path: {}", path.join(" -> "))?;
        writeln!(f, "reward: {}", self.reward)?;
        writeln!(f, "prob_matrix: {:.6}", self.prob_matrix)?;
        write!(f, "prob_sampling: {:.6}", self.prob_sampling)?;
        if let Some(t) = self.runtime_s {
            write!(f, "\nruntime_s: {t:.3}")?;
        }
        Ok(())
    }
}
