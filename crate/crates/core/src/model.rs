//! Domain types: instances with time-banded stochastic edges, paths, solve
//! requests and solver configuration.
//!
//! An instance carries only the travel-time distributions. The deadline,
//! risk level and start time live in [`SolveRequest`], so one instance can
//! be swept over many risk profiles.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DsopError, Result};
use crate::probability::{Method, ProbabilityEstimate};
use crate::special;

/// Probabilities of a discrete distribution must sum to one within this.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub time: f64,
    pub prob: f64,
}

/// Travel-time distribution of one edge within one arrival-time band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DistributionSpec {
    /// Gamma with shape `k` and scale `θ`; mean `kθ`, variance `kθ²`.
    Gamma {
        shape: f64,
        scale: f64,
    },
    Discrete {
        outcomes: Vec<Outcome>,
    },
}

impl DistributionSpec {
    pub fn gamma(shape: f64, scale: f64) -> Self {
        DistributionSpec::Gamma { shape, scale }
    }

    pub fn point_mass(time: f64) -> Self {
        DistributionSpec::Discrete {
            outcomes: vec![Outcome { time, prob: 1.0 }],
        }
    }

    /// Builds a discrete distribution from `(time, probability)` pairs.
    pub fn discrete(outcomes: &[(f64, f64)]) -> Self {
        DistributionSpec::Discrete {
            outcomes: outcomes.iter().map(|&(time, prob)| Outcome { time, prob }).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Gamma { shape, scale } => shape * scale,
            DistributionSpec::Discrete { outcomes } => outcomes.iter().map(|o| o.time * o.prob).sum(),
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Gamma { shape, scale } => special::gamma_cdf(*shape, *scale, x),
            DistributionSpec::Discrete { outcomes } => outcomes.iter().filter(|o| o.time <= x).map(|o| o.prob).sum(),
        }
    }

    /// `P(X < x)`. Equal to [`cdf`](Self::cdf) for continuous distributions.
    pub fn cdf_below(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Gamma { .. } => self.cdf(x),
            DistributionSpec::Discrete { outcomes } => outcomes.iter().filter(|o| o.time < x).map(|o| o.prob).sum(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, DistributionSpec::Discrete { .. })
    }

    fn violations(&self, field: &str, out: &mut Vec<Violation>) {
        match self {
            DistributionSpec::Gamma { shape, scale } => {
                if !(shape.is_finite() && *shape > 0.0) {
                    out.push(Violation::new(
                        field,
                        format!("gamma shape must be positive, got {shape}"),
                    ));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    out.push(Violation::new(
                        field,
                        format!("gamma scale must be positive, got {scale}"),
                    ));
                }
            }
            DistributionSpec::Discrete { outcomes } => {
                if outcomes.is_empty() {
                    out.push(Violation::new(field, "discrete distribution has no outcomes"));
                    return;
                }
                for (i, o) in outcomes.iter().enumerate() {
                    if !(o.time.is_finite() && o.time >= 0.0) {
                        out.push(Violation::new(
                            format!("{field}.outcomes[{i}].time"),
                            format!("travel time must be finite and >= 0, got {}", o.time),
                        ));
                    }
                    if !(0.0..=1.0).contains(&o.prob) {
                        out.push(Violation::new(
                            format!("{field}.outcomes[{i}].prob"),
                            format!("probability must lie in [0, 1], got {}", o.prob),
                        ));
                    }
                }
                let total: f64 = outcomes.iter().map(|o| o.prob).sum();
                if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                    out.push(Violation::new(
                        field,
                        format!("discrete probabilities sum to {total}, expected 1"),
                    ));
                }
            }
        }
    }
}

/// A travel-time distribution that applies from `start` (inclusive) up to the
/// next band's start (exclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub start: f64,
    pub dist: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDependentEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub bands: Vec<Band>,
}

impl TimeDependentEdge {
    /// A time-independent edge (one band starting at zero).
    pub fn fixed(from: VertexId, to: VertexId, dist: DistributionSpec) -> Self {
        TimeDependentEdge {
            from,
            to,
            bands: vec![Band { start: 0.0, dist }],
        }
    }

    /// Index of the band that governs departures at `arrival`. A boundary
    /// belongs to the later band.
    pub fn band_index(&self, arrival: f64) -> usize {
        self.bands.partition_point(|b| b.start <= arrival).saturating_sub(1)
    }

    pub fn distribution_at(&self, arrival: f64) -> &DistributionSpec {
        &self.bands[self.band_index(arrival)].dist
    }

    pub fn is_dynamic(&self) -> bool {
        self.bands.len() > 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub reward: f64,
    #[serde(default)]
    pub penalty: f64,
}

/// One broken invariant: which field, which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// A DSOP instance. Missing edges mean infinite travel time.
#[derive(Debug, Clone)]
pub struct Instance {
    vertices: Vec<Vertex>,
    edges: Vec<TimeDependentEdge>,
    start: VertexId,
    exit: VertexId,
    // dense n*n lookup; first edge wins on duplicates
    edge_index: Vec<Option<usize>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.edges == other.edges
            && self.start == other.start
            && self.exit == other.exit
    }
}

impl Instance {
    /// Assembles an instance without validating it; see [`validate_instance`].
    pub fn new(vertices: Vec<Vertex>, edges: Vec<TimeDependentEdge>, start: VertexId, exit: VertexId) -> Self {
        let n = vertices.len();
        let mut edge_index = vec![None; n * n];
        for (i, e) in edges.iter().enumerate() {
            if e.from.0 < n && e.to.0 < n {
                let slot = &mut edge_index[e.from.0 * n + e.to.0];
                if slot.is_none() {
                    *slot = Some(i);
                }
            }
        }
        Instance {
            vertices,
            edges,
            start,
            exit,
            edge_index,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[TimeDependentEdge] {
        &self.edges
    }

    pub fn start(&self) -> VertexId {
        self.start
    }

    pub fn exit(&self) -> VertexId {
        self.exit
    }

    pub fn reward(&self, v: VertexId) -> f64 {
        self.vertices[v.0].reward
    }

    pub fn penalty(&self, v: VertexId) -> f64 {
        self.vertices[v.0].penalty
    }

    pub fn edge_id(&self, from: VertexId, to: VertexId) -> Option<usize> {
        let n = self.vertices.len();
        if from.0 >= n || to.0 >= n {
            return None;
        }
        self.edge_index[from.0 * n + to.0]
    }

    pub fn edge(&self, from: VertexId, to: VertexId) -> Option<&TimeDependentEdge> {
        self.edge_id(from, to).map(|i| &self.edges[i])
    }

    pub fn has_edge(&self, from: VertexId, to: VertexId) -> bool {
        self.edge_id(from, to).is_some()
    }

    /// Vertices that may be visited between start and exit, ascending.
    pub fn interior_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len())
            .map(VertexId)
            .filter(move |&v| v != self.start && v != self.exit)
    }

    /// All band start times strictly inside `(0, horizon)`, with their owning
    /// edge and band index.
    pub fn band_boundaries(&self, horizon: f64) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().enumerate().flat_map(move |(ei, e)| {
            e.bands
                .iter()
                .enumerate()
                .filter(move |(_, b)| b.start > 0.0 && b.start < horizon)
                .map(move |(bi, b)| (ei, bi, b.start))
        })
    }

    pub fn all_discrete(&self) -> bool {
        self.edges.iter().all(|e| e.bands.iter().all(|b| b.dist.is_discrete()))
    }
}

/// Checks every instance invariant; an empty list means the instance is valid.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = instance.vertex_count();
    if n == 0 {
        out.push(Violation::new("vertices", "instance has no vertices"));
    }
    for (i, v) in instance.vertices.iter().enumerate() {
        if !(v.reward.is_finite() && v.reward >= 0.0) {
            out.push(Violation::new(
                format!("vertices[{i}].reward"),
                format!("reward must be finite and >= 0, got {}", v.reward),
            ));
        }
        if !(v.penalty.is_finite() && v.penalty >= 0.0) {
            out.push(Violation::new(
                format!("vertices[{i}].penalty"),
                format!("penalty must be finite and >= 0, got {}", v.penalty),
            ));
        }
    }
    if instance.start.0 >= n {
        out.push(Violation::new(
            "start",
            format!("vertex {} out of range", instance.start.0),
        ));
    }
    if instance.exit.0 >= n {
        out.push(Violation::new(
            "exit",
            format!("vertex {} out of range", instance.exit.0),
        ));
    }

    let mut seen = vec![false; n * n];
    for (ei, e) in instance.edges.iter().enumerate() {
        let field = format!("edges[{ei}]");
        let mut endpoints_ok = true;
        if e.from.0 >= n {
            out.push(Violation::new(
                format!("{field}.from"),
                format!("vertex {} out of range", e.from.0),
            ));
            endpoints_ok = false;
        }
        if e.to.0 >= n {
            out.push(Violation::new(
                format!("{field}.to"),
                format!("vertex {} out of range", e.to.0),
            ));
            endpoints_ok = false;
        }
        if endpoints_ok {
            let slot = e.from.0 * n + e.to.0;
            if seen[slot] {
                out.push(Violation::new(
                    field.clone(),
                    format!("duplicate edge {} -> {}", e.from, e.to),
                ));
            }
            seen[slot] = true;
        }
        if e.bands.is_empty() {
            out.push(Violation::new(format!("{field}.bands"), "edge needs at least one band"));
            continue;
        }
        if e.bands[0].start != 0.0 {
            out.push(Violation::new(
                format!("{field}.bands[0].start"),
                format!("first band must start at 0, got {}", e.bands[0].start),
            ));
        }
        for (bi, pair) in e.bands.windows(2).enumerate() {
            if !(pair[1].start > pair[0].start) || !pair[1].start.is_finite() {
                out.push(Violation::new(
                    format!("{field}.bands[{}].start", bi + 1),
                    "band starts must be finite and strictly increasing",
                ));
            }
        }
        for (bi, b) in e.bands.iter().enumerate() {
            b.dist.violations(&format!("{field}.bands[{bi}].dist"), &mut out);
        }
    }
    out
}

/// An ordered vertex sequence from start to exit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<VertexId>);

impl Path {
    pub fn new(vertices: Vec<VertexId>) -> Self {
        Path(vertices)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        Path(indices.iter().copied().map(VertexId).collect())
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    pub fn into_vertices(self) -> Vec<VertexId> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rejects wrong endpoints, repeated vertices and missing edges.
    pub fn check(&self, instance: &Instance) -> Result<()> {
        check_route(&self.0, instance)
    }

    /// Sum of rewards over every vertex on the path, endpoints included.
    pub fn reward(&self, instance: &Instance) -> f64 {
        route_reward(&self.0, instance)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.0.to_string()).collect();
        write!(f, "{}", parts.join(" -> "))
    }
}

pub(crate) fn route_reward(route: &[VertexId], instance: &Instance) -> f64 {
    route.iter().map(|&v| instance.reward(v)).sum()
}

pub(crate) fn check_route(route: &[VertexId], instance: &Instance) -> Result<()> {
    let n = instance.vertex_count();
    if route.len() < 2 {
        return Err(DsopError::InvalidPath(format!(
            "path needs at least start and exit, got {} vertices",
            route.len()
        )));
    }
    if route[0] != instance.start() {
        return Err(DsopError::InvalidPath(format!(
            "path starts at {} instead of {}",
            route[0],
            instance.start()
        )));
    }
    if route[route.len() - 1] != instance.exit() {
        return Err(DsopError::InvalidPath(format!(
            "path ends at {} instead of {}",
            route[route.len() - 1],
            instance.exit()
        )));
    }
    let mut seen = vec![false; n];
    // A tour instance may repeat its start as the exit.
    let body = if instance.start() == instance.exit() {
        &route[..route.len() - 1]
    } else {
        route
    };
    for &v in body {
        if v.0 >= n {
            return Err(DsopError::InvalidPath(format!("{v} is out of range")));
        }
        if seen[v.0] {
            return Err(DsopError::InvalidPath(format!("{v} is visited twice")));
        }
        seen[v.0] = true;
    }
    for w in route.windows(2) {
        if !instance.has_edge(w[0], w[1]) {
            return Err(DsopError::MissingEdge { from: w[0], to: w[1] });
        }
    }
    Ok(())
}

/// Deadline, risk level and start time for one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub deadline: f64,
    pub epsilon: f64,
    pub start_time: f64,
}

impl SolveRequest {
    pub fn new(deadline: f64, epsilon: f64, start_time: f64) -> Result<Self> {
        let request = SolveRequest {
            deadline,
            epsilon,
            start_time,
        };
        request.validate()?;
        Ok(request)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.deadline.is_finite() && self.deadline > 0.0) {
            return Err(DsopError::InvalidRequest(format!(
                "deadline must be positive, got {}",
                self.deadline
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(DsopError::InvalidRequest(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.start_time >= 0.0 && self.start_time <= self.deadline) {
            return Err(DsopError::InvalidRequest(format!(
                "start time must lie in [0, deadline], got {}",
                self.start_time
            )));
        }
        Ok(())
    }

    /// Smallest completion probability that satisfies the chance constraint.
    pub fn required_probability(&self) -> f64 {
        1.0 - self.epsilon
    }
}

/// Which completion-probability engine a solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Matrix,
    Sampling,
}

impl Estimator {
    pub fn method(self) -> Method {
        match self {
            Estimator::Matrix => Method::Matrix,
            Estimator::Sampling => Method::Sampling,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Matrix => "matrix",
            Estimator::Sampling => "sampling",
        })
    }
}

/// When branch-and-bound discards a subtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneRule {
    /// Prune once the prefix itself has dropped below `1 - ε`. Travel times
    /// are non-negative, so no extension can recover; the search stays exact
    /// even when edge means break the triangle inequality.
    PrefixBound,
    /// Prune as soon as the prefix with the exit appended is infeasible.
    /// Faster, but can miss detours that reach the exit sooner.
    ExitAppended,
}

/// Solver and estimator parameters. Defaults match the reference experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub max_iter_no_improve: usize,
    pub initial_temperature: f64,
    pub cooling: f64,
    pub range_count: usize,
    pub sample_count: usize,
    /// Seed of the local-search random stream.
    pub seed: u64,
    /// Seed of the Monte Carlo walks; kept apart so estimates do not depend
    /// on how many random draws the search consumed.
    pub sampler_seed: u64,
    pub estimator: Estimator,
    /// Interior evaluation points per source range for continuous bands.
    pub interior_probes: usize,
    /// Largest factor by which the range count may be multiplied to align
    /// band boundaries with the grid.
    pub max_grid_refinement: usize,
    pub node_budget: u64,
    pub prune_rule: PruneRule,
    pub exact_outcome_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_iterations: 1500,
            max_iter_no_improve: 50,
            initial_temperature: 0.1,
            cooling: 0.99,
            range_count: 100,
            sample_count: 1000,
            seed: 0,
            sampler_seed: crate::seed::derive_seed(0, "sampler"),
            estimator: Estimator::Matrix,
            interior_probes: 3,
            max_grid_refinement: 64,
            node_budget: 10_000_000,
            prune_rule: PruneRule::PrefixBound,
            exact_outcome_cap: 10_000_000,
        }
    }
}

impl SearchConfig {
    /// Sets both the search and sampler seeds from one root seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = crate::seed::derive_seed(seed, "solver");
        self.sampler_seed = crate::seed::derive_seed(seed, "sampler");
        self
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DsopError::Config(msg.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if self.max_iter_no_improve == 0 {
            return bad("max_iter_no_improve must be positive");
        }
        if !(self.initial_temperature > 0.0) {
            return bad("initial temperature must be positive");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling factor must lie in (0, 1)");
        }
        if self.range_count == 0 {
            return bad("range_count must be positive");
        }
        if self.sample_count == 0 {
            return bad("sample_count must be positive");
        }
        if self.max_grid_refinement == 0 {
            return bad("max_grid_refinement must be positive");
        }
        Ok(())
    }
}

/// A solver result: path, its reward and its completion-probability estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub path: Path,
    pub reward: f64,
    pub estimate: ProbabilityEstimate,
    pub runtime_secs: f64,
}

impl Solution {
    pub fn method(&self) -> Method {
        self.estimate.method
    }
}
