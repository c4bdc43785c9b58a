//! Solvers: greedy construction, local search and depth-first
//! branch-and-bound, each generic over the completion-probability estimator.

mod bnb;
mod local;
mod metric;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DsopError, Result};
use crate::model::{
    route_reward, validate_instance, Estimator, Instance, Path, SearchConfig, Solution, SolveRequest, VertexId,
};
use crate::probability::{
    is_feasible, MatrixPropagator, PathEdit, PrefixProductCache, ProbabilityEstimate, Propagator, SamplingPropagator,
};

pub use local::{sa_accept, LocalSearchOutcome, SearchState};
pub use metric::{evaluate_insertion, InsertionEvaluation, InsertionMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "CH")]
    Construction,
    #[serde(rename = "LS")]
    LocalSearch,
    #[serde(rename = "BnB")]
    BranchAndBound,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Construction => "CH",
            Algorithm::LocalSearch => "LS",
            Algorithm::BranchAndBound => "BnB",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ch" | "construction" => Ok(Algorithm::Construction),
            "ls" | "local-search" => Ok(Algorithm::LocalSearch),
            "bnb" | "branch-and-bound" => Ok(Algorithm::BranchAndBound),
            _ => Err(format!("unknown method {s:?}, expected ch, ls or bnb")),
        }
    }
}

/// Runs `$body` with `$p` bound to the estimator selected by `$config`.
macro_rules! with_propagator {
    ($instance:expr, $request:expr, $config:expr, |$p:ident| $body:expr) => {
        match $config.estimator {
            Estimator::Matrix => {
                let $p = MatrixPropagator::new($instance, $request, $config)?;
                $body
            }
            Estimator::Sampling => {
                let $p = SamplingPropagator::new($instance, $request, $config.sample_count, $config.sampler_seed);
                $body
            }
        }
    };
}

fn check_inputs(instance: &Instance, request: &SolveRequest, config: &SearchConfig) -> Result<()> {
    let violations = validate_instance(instance);
    if !violations.is_empty() {
        return Err(DsopError::Invalid(violations));
    }
    request.validate()?;
    config.validate()
}

/// Solves with the algorithm and estimator chosen in `config`.
pub fn solve(
    instance: &Instance,
    request: &SolveRequest,
    config: &SearchConfig,
    algorithm: Algorithm,
) -> Result<Solution> {
    check_inputs(instance, request, config)?;
    with_propagator!(instance, request, config, |p| {
        let solver = Solver::new(&p, *request, config.clone())?;
        match algorithm {
            Algorithm::Construction => solver.construction_heuristic(InsertionMetric::RatioRP),
            Algorithm::LocalSearch => solver.local_search().map(|o| o.best),
            Algorithm::BranchAndBound => solver.branch_and_bound(),
        }
    })
}

/// Greedy insertion from `⟨start, exit⟩` with the given metric.
pub fn construction_heuristic(
    instance: &Instance,
    request: &SolveRequest,
    config: &SearchConfig,
    metric: InsertionMetric,
) -> Result<Path> {
    check_inputs(instance, request, config)?;
    with_propagator!(instance, request, config, |p| {
        Solver::new(&p, *request, config.clone())?
            .construction_heuristic(metric)
            .map(|s| s.path)
    })
}

pub fn local_search(instance: &Instance, request: &SolveRequest, config: &SearchConfig) -> Result<LocalSearchOutcome> {
    check_inputs(instance, request, config)?;
    with_propagator!(instance, request, config, |p| Solver::new(
        &p,
        *request,
        config.clone()
    )?
    .local_search())
}

pub fn branch_and_bound(instance: &Instance, request: &SolveRequest, config: &SearchConfig) -> Result<Solution> {
    check_inputs(instance, request, config)?;
    with_propagator!(instance, request, config, |p| Solver::new(
        &p,
        *request,
        config.clone()
    )?
    .branch_and_bound())
}

/// One request on one estimator. All phases of every algorithm live here so
/// tests can drive them one at a time.
#[derive(Debug)]
pub struct Solver<'p, P: Propagator> {
    prop: &'p P,
    request: SolveRequest,
    config: SearchConfig,
}

impl<'p, P: Propagator> Solver<'p, P> {
    pub fn new(prop: &'p P, request: SolveRequest, config: SearchConfig) -> Result<Self> {
        request.validate()?;
        config.validate()?;
        Ok(Solver { prop, request, config })
    }

    pub fn propagator(&self) -> &'p P {
        self.prop
    }

    pub fn instance(&self) -> &Instance {
        self.prop.instance()
    }

    pub fn request(&self) -> &SolveRequest {
        &self.request
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn floor(&self) -> f64 {
        self.request.required_probability()
    }

    pub fn feasible(&self, estimate: &ProbabilityEstimate) -> bool {
        is_feasible(estimate, self.request.epsilon)
    }

    pub fn reward(&self, route: &[VertexId]) -> f64 {
        route_reward(route, self.instance())
    }

    /// Cache of `⟨start, exit⟩`; fails when that path is infeasible.
    pub fn start_cache(&self) -> Result<PrefixProductCache<P::State>> {
        let inst = self.instance();
        if !inst.has_edge(inst.start(), inst.exit()) {
            return Err(DsopError::NoFeasibleSolution);
        }
        let cache = PrefixProductCache::new(self.prop, vec![inst.start(), inst.exit()]);
        if !self.feasible(&cache.estimate()) {
            return Err(DsopError::NoFeasibleSolution);
        }
        Ok(cache)
    }

    /// Solution for `route` with its estimate recomputed from scratch.
    pub fn solution(&self, route: &[VertexId]) -> Solution {
        Solution {
            path: Path::new(route.to_vec()),
            reward: self.reward(route),
            estimate: self.prop.evaluate(route),
            runtime_secs: 0.0,
        }
    }

    /// The feasible insertion with the highest score. Ties go to the lower
    /// vertex index, then the earlier position.
    pub fn best_insertion(
        &self,
        cache: &PrefixProductCache<P::State>,
        metric: InsertionMetric,
    ) -> Option<InsertionEvaluation> {
        let inst = self.instance();
        let route = cache.route();
        let before = cache.estimate().value;
        let floor = self.floor();

        // Every metric is largest at zero loss, so candidates are visited by
        // that bound and the scan stops once the bound cannot win.
        let mut order: Vec<(f64, VertexId)> = inst
            .interior_vertices()
            .filter(|&v| !cache.contains(v))
            .map(|v| (metric.score(inst.reward(v), 0.0), v))
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut best: Option<(f64, InsertionEvaluation)> = None;
        for (bound, v) in order {
            let reward = inst.reward(v);
            for pos in 1..route.len() {
                let mut probe_floor = floor;
                if let Some((target, ev)) = &best {
                    let key_loses = (v, pos) > (ev.vertex, ev.position);
                    if bound < *target || (bound == *target && key_loses) {
                        break;
                    }
                    if let Some(budget) = metric.loss_budget(reward, *target) {
                        // slack so that the exact comparison below decides ties
                        probe_floor = probe_floor.max(before - budget - 1e-9);
                    } else if key_loses {
                        break;
                    }
                }
                if !inst.has_edge(route[pos - 1], v) || !inst.has_edge(v, route[pos]) {
                    continue;
                }
                let Some(after) = cache.probe_insert(self.prop, v, pos, Some(probe_floor)) else {
                    continue;
                };
                if !self.feasible(&after) {
                    continue;
                }
                let ev = InsertionEvaluation::new(v, pos, reward, before, after);
                let score = ev.score(metric);
                let wins = match &best {
                    None => true,
                    Some((s, b)) => score > *s || (score == *s && (v, pos) < (b.vertex, b.position)),
                };
                if wins {
                    best = Some((score, ev));
                }
            }
        }
        best.map(|(_, ev)| ev)
    }

    /// Reference scan of every candidate, without pruning.
    #[doc(hidden)]
    pub fn best_insertion_exhaustive(
        &self,
        cache: &PrefixProductCache<P::State>,
        metric: InsertionMetric,
    ) -> Option<InsertionEvaluation> {
        let inst = self.instance();
        let route = cache.route();
        let before = cache.estimate().value;
        let mut best: Option<(f64, InsertionEvaluation)> = None;
        for v in inst.interior_vertices() {
            if cache.contains(v) {
                continue;
            }
            for pos in 1..route.len() {
                if !inst.has_edge(route[pos - 1], v) || !inst.has_edge(v, route[pos]) {
                    continue;
                }
                let after = cache.probe_insert(self.prop, v, pos, None).expect("no floor");
                if !self.feasible(&after) {
                    continue;
                }
                let ev = InsertionEvaluation::new(v, pos, inst.reward(v), before, after);
                let score = ev.score(metric);
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, ev));
                }
            }
        }
        best.map(|(_, ev)| ev)
    }

    /// Inserts greedily until no feasible insertion is left. Returns the
    /// number of insertions.
    pub fn insertion_phase(&self, cache: &mut PrefixProductCache<P::State>, metric: InsertionMetric) -> usize {
        let mut inserted = 0;
        while let Some(ev) = self.best_insertion(cache, metric) {
            cache.apply(
                self.prop,
                PathEdit::Insert {
                    vertex: ev.vertex,
                    position: ev.position,
                },
            );
            inserted += 1;
        }
        inserted
    }

    pub fn construction(&self, metric: InsertionMetric) -> Result<PrefixProductCache<P::State>> {
        let mut cache = self.start_cache()?;
        self.insertion_phase(&mut cache, metric);
        Ok(cache)
    }

    pub fn construction_heuristic(&self, metric: InsertionMetric) -> Result<Solution> {
        let cache = self.construction(metric)?;
        Ok(self.solution(cache.route()))
    }

    /// Swaps two distinct interior positions chosen uniformly at random.
    /// A swap that would use a missing edge is dropped. Returns the swapped
    /// positions, if any.
    pub fn two_opt<R: Rng + ?Sized>(
        &self,
        cache: &mut PrefixProductCache<P::State>,
        rng: &mut R,
    ) -> Option<(usize, usize)> {
        let k = cache.interior_len();
        if k < 2 {
            return None;
        }
        let i = 1 + rng.random_range(0..k);
        let mut j = 1 + rng.random_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        let mut route = cache.route().to_vec();
        route.swap(i, j);
        let inst = self.instance();
        if !route.windows(2).all(|w| inst.has_edge(w[0], w[1])) {
            return None;
        }
        cache.apply(self.prop, PathEdit::Swap(i, j));
        Some((i, j))
    }

    /// Removes the second-last vertex while the path is infeasible or a
    /// uniform draw is at most `z`. One draw per loop test, and only when the
    /// path is feasible. Returns the number of removals.
    pub fn removal_phase<R: Rng + ?Sized>(
        &self,
        cache: &mut PrefixProductCache<P::State>,
        z: f64,
        rng: &mut R,
    ) -> Result<usize> {
        let mut removed = 0;
        loop {
            let feasible = self.feasible(&cache.estimate());
            if cache.len() == 2 {
                return if feasible {
                    Ok(removed)
                } else {
                    Err(DsopError::NoFeasibleSolution)
                };
            }
            if !feasible || rng.random::<f64>() <= z {
                cache.apply(self.prop, PathEdit::RemoveSecondLast);
                removed += 1;
            } else {
                return Ok(removed);
            }
        }
    }
}
