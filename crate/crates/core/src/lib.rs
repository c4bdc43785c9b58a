//! Dynamic stochastic orienteering under a chance constraint.
//!
//! Edges carry travel-time distributions that depend on the arrival time at
//! their source. A path from start to exit is feasible when
//! `P(a_n <= H) >= 1 - ε`; the solvers look for the feasible path of largest
//! reward.
//!
//! * [`model`]: instances, paths, requests, configuration.
//! * [`probability`]: completion-probability estimators and the prefix cache.
//! * [`solver`]: construction heuristic, local search, branch-and-bound.
//! * [`instances`]: synthetic and small exact-checkable instance generators.
//! * [`io`]: the JSON instance format.

pub mod error;
pub mod instances;
pub mod io;
pub mod model;
pub mod probability;
pub mod seed;
pub mod solver;
pub mod special;

pub use error::{DsopError, Result};
pub use model::{
    validate_instance, Band, DistributionSpec, Estimator, Instance, Outcome, Path, PruneRule, SearchConfig, Solution,
    SolveRequest, TimeDependentEdge, Vertex, VertexId, Violation,
};
pub use probability::{is_feasible, Method, ProbabilityEstimate};
pub use solver::{Algorithm, InsertionMetric};
