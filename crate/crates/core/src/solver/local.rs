//! Local search: variable neighbourhood search over the five insertion
//! metrics, with simulated-annealing acceptance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{Solution, VertexId};
use crate::probability::{PrefixProductCache, ProbabilityEstimate, Propagator};

use super::{InsertionMetric, Solver};

/// True when `delta_reward > 0`, otherwise with probability
/// `exp(delta_reward / temperature)`. Draws only in the second case.
pub fn sa_accept<R: Rng + ?Sized>(delta_reward: f64, temperature: f64, rng: &mut R) -> bool {
    delta_reward > 0.0 || rng.random::<f64>() <= (delta_reward / temperature).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome {
    /// The construction-heuristic path the search started from.
    pub construction: Solution,
    pub best: Solution,
    pub iterations: usize,
}

/// Everything one local-search iteration reads and writes.
#[derive(Debug, Clone)]
pub struct SearchState<S> {
    pub current: PrefixProductCache<S>,
    pub best_route: Vec<VertexId>,
    pub best_reward: f64,
    pub best_estimate: ProbabilityEstimate,
    pub num_iter_no_improve: usize,
    pub metric: InsertionMetric,
    pub temperature: f64,
    pub z: f64,
    pub iteration: usize,
    pub rng: ChaCha8Rng,
}

impl<P: Propagator> Solver<'_, P> {
    /// State after construction, before the first iteration.
    pub fn search_state(&self) -> Result<SearchState<P::State>> {
        let current = self.construction(InsertionMetric::RatioRP)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config().seed);
        let metric = InsertionMetric::ALL[rng.random_range(0..InsertionMetric::ALL.len())];
        Ok(SearchState {
            best_route: current.route().to_vec(),
            best_reward: self.reward(current.route()),
            best_estimate: current.estimate(),
            current,
            num_iter_no_improve: 0,
            metric,
            temperature: self.config().initial_temperature,
            z: 0.0,
            iteration: 0,
            rng,
        })
    }

    /// One iteration: cool, swap, remove, insert, accept, track the best.
    pub fn step(&self, state: &mut SearchState<P::State>) -> Result<()> {
        let cfg = self.config();
        state.iteration += 1;
        state.temperature *= cfg.cooling;
        state.z = state.num_iter_no_improve as f64 / (2 * cfg.max_iter_no_improve) as f64;

        self.two_opt(&mut state.current, &mut state.rng);
        self.removal_phase(&mut state.current, state.z, &mut state.rng)?;

        let mut neighbor = state.current.clone();
        self.insertion_phase(&mut neighbor, state.metric);
        let current_reward = self.reward(state.current.route());
        let delta = self.reward(neighbor.route()) - current_reward;
        if sa_accept(delta, state.temperature, &mut state.rng) {
            state.current = neighbor;
        }

        let reward = self.reward(state.current.route());
        if reward > state.best_reward {
            state.best_route = state.current.route().to_vec();
            state.best_reward = reward;
            state.best_estimate = state.current.estimate();
            state.num_iter_no_improve = 0;
        } else {
            state.num_iter_no_improve += 1;
            if state.num_iter_no_improve > cfg.max_iter_no_improve {
                let others: Vec<InsertionMetric> = InsertionMetric::ALL
                    .into_iter()
                    .filter(|&m| m != state.metric)
                    .collect();
                state.metric = others[state.rng.random_range(0..others.len())];
                state.num_iter_no_improve = 0;
            }
        }
        Ok(())
    }

    pub fn local_search(&self) -> Result<LocalSearchOutcome> {
        let mut state = self.search_state()?;
        let construction = self.solution(state.current.route());
        for _ in 0..self.config().max_iterations {
            self.step(&mut state)?;
        }
        Ok(LocalSearchOutcome {
            construction,
            best: self.solution(&state.best_route),
            iterations: state.iteration,
        })
    }
}
