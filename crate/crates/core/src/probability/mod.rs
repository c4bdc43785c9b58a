//! Completion-probability engines.
//!
//! Three ways to estimate `P(a_n <= H)` for a path:
//!
//! * [`MatrixPropagator`]: arrival-time ranges and per-edge conservative
//!   transition matrices. Deterministic, and never above the true value.
//! * [`SamplingPropagator`]: Monte Carlo walks along the path. Unbiased,
//!   but with no guarantee.
//! * [`exact_completion_probability`]: exhaustive enumeration, only for
//!   all-discrete edges. Used as the test oracle.
//!
//! The first two implement [`Propagator`], which lets the solvers and
//! [`PrefixProductCache`] stay generic over the estimator.

mod cache;
mod exact;
mod grid;
mod matrix;
mod sampling;
mod utility;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Instance, VertexId};

pub use cache::{PathEdit, PrefixProductCache};
pub use exact::{exact_completion_probability, exact_on_time_profile};
pub use grid::{build_range_grid, RangeGrid};
pub use matrix::{
    edge_transition_matrix, matrix_completion_probability, ArrivalDistribution, MatrixPropagator, TransitionMatrix,
};
pub use sampling::{sampling_completion_probability, SampleTable, SamplingPropagator};
pub use utility::{exact_expected_utility, expected_utility, vertex_utility};

/// Slack used when a matrix prefix is declared hopeless, so that rounding in
/// later products can never turn a rejected candidate into a feasible one.
pub(crate) const MATRIX_FLOOR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Matrix,
    Sampling,
    ExactOracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Matrix => "matrix",
            Method::Sampling => "sampling",
            Method::ExactOracle => "exact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingDetail {
    pub samples: usize,
    pub on_time: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingDetail>,
}

impl ProbabilityEstimate {
    pub fn new(value: f64, method: Method) -> Self {
        ProbabilityEstimate {
            value,
            method,
            sampling: None,
        }
    }

    pub fn from_counts(on_time: usize, samples: usize) -> Self {
        ProbabilityEstimate {
            value: on_time as f64 / samples as f64,
            method: Method::Sampling,
            sampling: Some(SamplingDetail { samples, on_time }),
        }
    }
}

/// The chance constraint `P(a_n <= H) >= 1 - ε`.
pub fn is_feasible(estimate: &ProbabilityEstimate, epsilon: f64) -> bool {
    estimate.value >= 1.0 - epsilon
}

/// Pushes an arrival-time state along a path, one edge at a time.
pub trait Propagator {
    type State: Clone;

    fn method(&self) -> Method;

    fn instance(&self) -> &Instance;

    /// State at the start vertex.
    fn initial(&self) -> Self::State;

    /// State on arrival at `to` after leaving `from` in `state`. A missing
    /// edge is an infinite travel time: everything arrives late.
    fn advance(&self, state: &Self::State, from: VertexId, to: VertexId) -> Self::State;

    /// Probability of being on time in `state`.
    fn estimate(&self, state: &Self::State) -> ProbabilityEstimate;

    /// True when no continuation of `state` can reach probability `floor`.
    /// Travel times are non-negative, so on-time mass only ever shrinks.
    fn below_floor(&self, state: &Self::State, floor: f64) -> bool;

    /// Completes `route` from `state`, which must be the state at `route[0]`.
    ///
    /// With a `floor`, returns `None` as soon as the result is certain to be
    /// below it.
    fn finish(&self, state: &Self::State, route: &[VertexId], floor: Option<f64>) -> Option<ProbabilityEstimate> {
        let mut current: Option<Self::State> = None;
        for w in route.windows(2) {
            let next = self.advance(current.as_ref().unwrap_or(state), w[0], w[1]);
            if let Some(f) = floor {
                if self.below_floor(&next, f) {
                    return None;
                }
            }
            current = Some(next);
        }
        Some(self.estimate(current.as_ref().unwrap_or(state)))
    }

    /// From-scratch estimate for a whole route.
    fn evaluate(&self, route: &[VertexId]) -> ProbabilityEstimate {
        self.finish(&self.initial(), route, None)
            .expect("no floor, never cut short")
    }
}
