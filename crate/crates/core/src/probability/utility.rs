//! Expected utility of a path: each vertex earns its reward if reached by
//! the deadline and pays its penalty otherwise.

use crate::error::{DsopError, Result};
use crate::model::{Instance, Path, SolveRequest};

use super::exact::exact_on_time_profile;
use super::{Propagator, SamplingPropagator};

/// `P(a_i <= H) R(v_i) - P(a_i > H) C(v_i)`.
pub fn vertex_utility(reward: f64, penalty: f64, on_time: f64) -> f64 {
    on_time * reward - (1.0 - on_time) * penalty
}

fn sum_utility(instance: &Instance, path: &Path, profile: &[f64]) -> f64 {
    path.vertices()
        .iter()
        .zip(profile)
        .map(|(&v, &p)| vertex_utility(instance.reward(v), instance.penalty(v), p))
        .sum()
}

/// Sum of vertex utilities, with on-time probabilities taken from the same
/// sampled walks as [`sampling_completion_probability`](super::sampling_completion_probability).
pub fn expected_utility(
    instance: &Instance,
    path: &Path,
    request: &SolveRequest,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(DsopError::Config("sample count must be positive".into()));
    }
    request.validate()?;
    path.check(instance)?;
    let prop = SamplingPropagator::new(instance, request, samples, seed);
    let mut state = prop.initial();
    let mut profile = vec![prop.estimate(&state).value];
    for w in path.vertices().windows(2) {
        state = prop.advance(&state, w[0], w[1]);
        profile.push(prop.estimate(&state).value);
    }
    Ok(sum_utility(instance, path, &profile))
}

/// Expected utility with exact on-time probabilities; all-discrete paths only.
pub fn exact_expected_utility(instance: &Instance, path: &Path, request: &SolveRequest, cap: usize) -> Result<f64> {
    let profile = exact_on_time_profile(instance, path, request, cap)?;
    Ok(sum_utility(instance, path, &profile))
}
