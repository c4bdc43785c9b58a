use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::VertexId;
use crate::probability::{PrefixProductCache, ProbabilityEstimate, Propagator};

/// Scores an insertion from its reward gain `ΔR` and probability loss `ΔP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InsertionMetric {
    /// `ΔR / (1 + ΔP)`
    RatioRP,
    /// `1 / (1 + ΔP)`
    InvP,
    /// `ΔR`
    RewardOnly,
    /// `ΔR² / (1 + ΔP)`
    RewardSqP,
    /// `ΔR / sqrt(1 + ΔP)`
    RatioSqrtP,
}

impl InsertionMetric {
    pub const ALL: [InsertionMetric; 5] = [
        InsertionMetric::RatioRP,
        InsertionMetric::InvP,
        InsertionMetric::RewardOnly,
        InsertionMetric::RewardSqP,
        InsertionMetric::RatioSqrtP,
    ];

    pub fn score(self, delta_reward: f64, delta_prob: f64) -> f64 {
        let d = 1.0 + delta_prob;
        match self {
            InsertionMetric::RatioRP => delta_reward / d,
            InsertionMetric::InvP => 1.0 / d,
            InsertionMetric::RewardOnly => delta_reward,
            InsertionMetric::RewardSqP => delta_reward * delta_reward / d,
            InsertionMetric::RatioSqrtP => delta_reward / d.sqrt(),
        }
    }

    /// Largest probability loss at which a candidate with gain
    /// `delta_reward` still scores above `target`, or `None` when the score
    /// does not depend on the loss. Negative when no loss is small enough.
    pub fn loss_budget(self, delta_reward: f64, target: f64) -> Option<f64> {
        match self {
            InsertionMetric::RatioRP => Some(delta_reward / target - 1.0),
            InsertionMetric::InvP => Some(1.0 / target - 1.0),
            InsertionMetric::RewardOnly => None,
            InsertionMetric::RewardSqP => Some(delta_reward * delta_reward / target - 1.0),
            InsertionMetric::RatioSqrtP => Some((delta_reward / target).powi(2) - 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InsertionMetric::RatioRP => "ratio",
            InsertionMetric::InvP => "inv-p",
            InsertionMetric::RewardOnly => "reward",
            InsertionMetric::RewardSqP => "reward-sq",
            InsertionMetric::RatioSqrtP => "ratio-sqrt",
        }
    }
}

impl fmt::Display for InsertionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InsertionMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InsertionMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Reward gain and probability loss of one candidate insertion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionEvaluation {
    pub vertex: VertexId,
    pub position: usize,
    pub delta_reward: f64,
    /// `max(0, before - after)`.
    pub delta_prob: f64,
    pub after: ProbabilityEstimate,
}

impl InsertionEvaluation {
    pub fn new(vertex: VertexId, position: usize, reward: f64, before: f64, after: ProbabilityEstimate) -> Self {
        InsertionEvaluation {
            vertex,
            position,
            delta_reward: reward,
            delta_prob: (before - after.value).max(0.0),
            after,
        }
    }

    pub fn score(&self, metric: InsertionMetric) -> f64 {
        metric.score(self.delta_reward, self.delta_prob)
    }
}

/// Evaluates inserting `vertex` at `position` of the cached path.
pub fn evaluate_insertion<P: Propagator>(
    prop: &P,
    cache: &PrefixProductCache<P::State>,
    vertex: VertexId,
    position: usize,
) -> InsertionEvaluation {
    let after = cache.probe_insert(prop, vertex, position, None).expect("no floor");
    InsertionEvaluation::new(
        vertex,
        position,
        prop.instance().reward(vertex),
        cache.estimate().value,
        after,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_arithmetic() {
        assert_eq!(InsertionMetric::RatioRP.score(10.0, 0.25), 8.0);
        assert_eq!(InsertionMetric::RewardSqP.score(10.0, 0.25), 80.0);
        for m in [
            InsertionMetric::RatioRP,
            InsertionMetric::RewardOnly,
            InsertionMetric::RatioSqrtP,
        ] {
            assert_eq!(m.score(10.0, 0.0), 10.0);
        }
        assert_eq!(InsertionMetric::RewardSqP.score(10.0, 0.0), 100.0);
        assert_eq!(InsertionMetric::InvP.score(10.0, 0.0), 1.0);
        assert!((InsertionMetric::RatioSqrtP.score(9.0, 0.44) - 7.5).abs() < 1e-12);
    }

    #[test]
    fn loss_is_clamped_at_zero() {
        let after = ProbabilityEstimate::new(0.9, crate::probability::Method::Matrix);
        let ev = InsertionEvaluation::new(VertexId(1), 1, 5.0, 0.8, after);
        assert_eq!(ev.delta_prob, 0.0);
        let ev = InsertionEvaluation::new(VertexId(1), 1, 5.0, 1.0, after);
        assert!((ev.delta_prob - 0.1).abs() < 1e-15);
    }

    #[test]
    fn names_round_trip() {
        for m in InsertionMetric::ALL {
            assert_eq!(m.name().parse::<InsertionMetric>().unwrap(), m);
        }
    }
}
