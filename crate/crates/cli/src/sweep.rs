//! Benchmark sweeps over deadline, risk level and gamma scale.

use std::time::Instant;

use dsop_core::instances::{generate_synthetic, GeneratorConfig, ScaleSetting};
use dsop_core::probability::{MatrixPropagator, Propagator, SamplingPropagator};
use dsop_core::seed::{derive_indexed, derive_seed};
use dsop_core::solver;
use dsop_core::{Algorithm, DsopError, Estimator, Instance, Result, SearchConfig, Solution, SolveRequest, VertexId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// What to sweep and with which solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub deadlines: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Ignored for hard instances, whose scale is random per edge.
    pub thetas: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub vertex_count: usize,
    pub hard: bool,
    pub estimators: Vec<Estimator>,
    pub methods: Vec<Algorithm>,
    pub config: SearchConfig,
    /// Walks used to re-score matrix solutions.
    pub check_samples: usize,
    pub timing: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            deadlines: vec![20.0, 40.0, 60.0, 80.0, 100.0],
            epsilons: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            thetas: vec![2.0],
            repetitions: 5,
            seed: 0,
            vertex_count: 32,
            hard: false,
            estimators: vec![Estimator::Matrix, Estimator::Sampling],
            methods: vec![Algorithm::Construction, Algorithm::LocalSearch],
            config: SearchConfig::default(),
            check_samples: 10_000,
            timing: false,
        }
    }
}

/// One generated instance of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceKey {
    pub id: String,
    pub theta: Option<f64>,
    pub repetition: usize,
    pub generator_seed: u64,
    pub vertex_count: usize,
    pub hard: bool,
}

impl InstanceKey {
    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            vertex_count: self.vertex_count,
            theta: match self.theta {
                Some(t) => ScaleSetting::Fixed(t),
                None => ScaleSetting::PerEdgeRandom,
            },
            hard: self.hard,
            seed: self.generator_seed,
            ..GeneratorConfig::default()
        }
    }

    pub fn generate(&self) -> Result<Instance> {
        generate_synthetic(&self.generator())
    }

    /// `"2"` for a fixed scale, `"random"` for per-edge scales.
    pub fn theta_label(&self) -> String {
        self.theta.map_or_else(|| "random".to_string(), |t| t.to_string())
    }
}

impl SweepSpec {
    pub fn instances(&self) -> Vec<InstanceKey> {
        let thetas: Vec<Option<f64>> = if self.hard {
            vec![None]
        } else {
            self.thetas.iter().map(|&t| Some(t)).collect()
        };
        let mut out = Vec::new();
        for (ti, &theta) in thetas.iter().enumerate() {
            for rep in 0..self.repetitions {
                let id = match theta {
                    Some(t) => format!("simple-t{t}-r{rep}"),
                    None => format!("hard-r{rep}"),
                };
                out.push(InstanceKey {
                    id,
                    theta,
                    repetition: rep,
                    generator_seed: derive_seed(derive_indexed(self.seed, &[ti as u64, rep as u64]), "generate"),
                    vertex_count: self.vertex_count,
                    hard: self.hard,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DsopError::Config(m.to_string()));
        if self.deadlines.is_empty() || self.epsilons.is_empty() || (!self.hard && self.thetas.is_empty()) {
            return bad("every sweep dimension needs at least one value");
        }
        if self.repetitions == 0 || self.estimators.is_empty() || self.methods.is_empty() {
            return bad("need at least one repetition, estimator and method");
        }
        if self.check_samples == 0 {
            return bad("check_samples must be positive");
        }
        for &h in &self.deadlines {
            for &e in &self.epsilons {
                SolveRequest::new(h, e, 0.0)?;
            }
        }
        self.config.validate()
    }
}

/// One solver result of a sweep. The path lives in the sidecar, not the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance_id: String,
    pub method: Algorithm,
    pub estimator: Estimator,
    pub deadline: f64,
    pub epsilon: f64,
    pub theta: String,
    pub reward: f64,
    pub prob_matrix: f64,
    pub prob_sampling: f64,
    pub runtime_s: f64,
    pub seed: u64,
}

/// Everything needed to recompute a row from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub instance: InstanceKey,
    pub method: Algorithm,
    pub estimator: Estimator,
    pub deadline: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub path: Vec<usize>,
    pub config: SearchConfig,
    pub check_samples: usize,
}

/// A cell that produced no row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unsolved {
    pub instance_id: String,
    pub method: Algorithm,
    pub estimator: Estimator,
    pub deadline: f64,
    pub epsilon: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<BenchmarkRow>,
    pub paths: Vec<PathRecord>,
    pub unsolved: Vec<Unsolved>,
}

/// Completion probability of `route` under the matrix estimator.
pub fn matrix_probability(inst: &Instance, req: &SolveRequest, cfg: &SearchConfig, route: &[VertexId]) -> Result<f64> {
    Ok(MatrixPropagator::new(inst, req, cfg)?.evaluate(route).value)
}

/// Completion probability of `route` under `samples` walks seeded with `seed`.
pub fn sampling_probability(inst: &Instance, req: &SolveRequest, samples: usize, seed: u64, route: &[VertexId]) -> f64 {
    SamplingPropagator::new(inst, req, samples, seed).evaluate(route).value
}

/// Sampler seed for re-scoring a matrix solution.
pub fn check_seed(seed: u64) -> u64 {
    derive_seed(seed, "check")
}

/// Recomputes `(prob_matrix, prob_sampling)` for a stored path.
pub fn recompute(record: &PathRecord) -> Result<(f64, f64)> {
    let inst = record.instance.generate()?;
    let req = SolveRequest::new(record.deadline, record.epsilon, 0.0)?;
    let route: Vec<VertexId> = record.path.iter().map(|&v| VertexId(v)).collect();
    let cfg = cell_config(&record.config, record.seed, record.estimator);
    let pm = matrix_probability(&inst, &req, &cfg, &route)?;
    let ps = match record.estimator {
        Estimator::Sampling => sampling_probability(&inst, &req, cfg.sample_count, cfg.sampler_seed, &route),
        Estimator::Matrix => sampling_probability(&inst, &req, record.check_samples, check_seed(record.seed), &route),
    };
    Ok((pm, ps))
}

fn cell_config(base: &SearchConfig, seed: u64, estimator: Estimator) -> SearchConfig {
    base.clone().with_seed(seed).with_estimator(estimator)
}

struct Cell<'a> {
    key: &'a InstanceKey,
    instance: &'a Instance,
    deadline: f64,
    epsilon: f64,
    estimator: Estimator,
    seed: u64,
}

type CellOutput = (Vec<(BenchmarkRow, PathRecord)>, Vec<Unsolved>);

impl Cell<'_> {
    fn run(&self, spec: &SweepSpec) -> Result<CellOutput> {
        let req = SolveRequest::new(self.deadline, self.epsilon, 0.0)?;
        let cfg = cell_config(&spec.config, self.seed, self.estimator);
        let mut solved: Vec<(Algorithm, Solution)> = Vec::new();
        let mut unsolved = Vec::new();
        let fail = |method, reason: String| Unsolved {
            instance_id: self.key.id.clone(),
            method,
            estimator: self.estimator,
            deadline: self.deadline,
            epsilon: self.epsilon,
            reason,
        };

        let wants = |m| spec.methods.contains(&m);
        if wants(Algorithm::LocalSearch) {
            let started = Instant::now();
            match solver::local_search(self.instance, &req, &cfg) {
                Ok(mut outcome) => {
                    outcome.best.runtime_secs = started.elapsed().as_secs_f64();
                    if wants(Algorithm::Construction) {
                        if spec.timing {
                            solved.push((
                                Algorithm::Construction,
                                timed(self.instance, &req, &cfg, Algorithm::Construction)?,
                            ));
                        } else {
                            solved.push((Algorithm::Construction, outcome.construction));
                        }
                    }
                    solved.push((Algorithm::LocalSearch, outcome.best));
                }
                Err(DsopError::NoFeasibleSolution) => {
                    for m in [Algorithm::Construction, Algorithm::LocalSearch] {
                        if wants(m) {
                            unsolved.push(fail(m, "no feasible solution".into()));
                        }
                    }
                }
                Err(e) => return Err(e),
            }
        } else if wants(Algorithm::Construction) {
            match timed(self.instance, &req, &cfg, Algorithm::Construction) {
                Ok(s) => solved.push((Algorithm::Construction, s)),
                Err(DsopError::NoFeasibleSolution) => {
                    unsolved.push(fail(Algorithm::Construction, "no feasible solution".into()))
                }
                Err(e) => return Err(e),
            }
        }
        if wants(Algorithm::BranchAndBound) {
            match timed(self.instance, &req, &cfg, Algorithm::BranchAndBound) {
                Ok(s) => solved.push((Algorithm::BranchAndBound, s)),
                Err(DsopError::NoFeasibleSolution) => {
                    unsolved.push(fail(Algorithm::BranchAndBound, "no feasible solution".into()))
                }
                Err(DsopError::Timeout { budget, .. }) => unsolved.push(fail(
                    Algorithm::BranchAndBound,
                    format!("node budget of {budget} exhausted"),
                )),
                Err(e) => return Err(e),
            }
        }

        let mut rows = Vec::with_capacity(solved.len());
        for (method, sol) in solved {
            let route = sol.path.vertices();
            let (pm, ps) = match self.estimator {
                Estimator::Matrix => (
                    sol.estimate.value,
                    sampling_probability(self.instance, &req, spec.check_samples, check_seed(self.seed), route),
                ),
                Estimator::Sampling => (
                    matrix_probability(self.instance, &req, &cfg, route)?,
                    sol.estimate.value,
                ),
            };
            let row = BenchmarkRow {
                instance_id: self.key.id.clone(),
                method,
                estimator: self.estimator,
                deadline: self.deadline,
                epsilon: self.epsilon,
                theta: self.key.theta_label(),
                reward: sol.reward,
                prob_matrix: pm,
                prob_sampling: ps,
                runtime_s: if spec.timing { sol.runtime_secs } else { 0.0 },
                seed: self.seed,
            };
            let record = PathRecord {
                instance: self.key.clone(),
                method,
                estimator: self.estimator,
                deadline: self.deadline,
                epsilon: self.epsilon,
                seed: self.seed,
                path: route.iter().map(|v| v.0).collect(),
                config: spec.config.clone(),
                check_samples: spec.check_samples,
            };
            rows.push((row, record));
        }
        Ok((rows, unsolved))
    }
}

fn timed(inst: &Instance, req: &SolveRequest, cfg: &SearchConfig, algo: Algorithm) -> Result<Solution> {
    let started = Instant::now();
    let mut sol = solver::solve(inst, req, cfg, algo)?;
    sol.runtime_secs = started.elapsed().as_secs_f64();
    Ok(sol)
}

/// Runs every cell, in parallel, and returns rows sorted by instance, H, ε,
/// estimator and method regardless of completion order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let keys = spec.instances();
    let instances = keys.iter().map(|k| k.generate()).collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for (ki, key) in keys.iter().enumerate() {
        for (hi, &deadline) in spec.deadlines.iter().enumerate() {
            for (ei, &epsilon) in spec.epsilons.iter().enumerate() {
                for (xi, &estimator) in spec.estimators.iter().enumerate() {
                    let seed = derive_indexed(key.generator_seed, &[hi as u64, ei as u64]);
                    cells.push((
                        (ki, hi, ei, xi),
                        Cell {
                            key,
                            instance: &instances[ki],
                            deadline,
                            epsilon,
                            estimator,
                            seed,
                        },
                    ));
                }
            }
        }
    }
    let outputs: Vec<_> = cells
        .par_iter()
        .map(|(order, cell)| cell.run(spec).map(|out| (*order, out)))
        .collect::<Result<Vec<_>>>()?;

    let mut result = SweepResult::default();
    let mut keyed = Vec::new();
    for (order, (rows, unsolved)) in outputs {
        for (row, record) in rows {
            keyed.push(((order, row.method), row, record));
        }
        result.unsolved.extend(unsolved);
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, row, record) in keyed {
        result.rows.push(row);
        result.paths.push(record);
    }
    Ok(result)
}
