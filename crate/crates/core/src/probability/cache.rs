//! Prefix states of a path, so local edits only recompute what they touch.

use crate::model::VertexId;

use super::{ProbabilityEstimate, Propagator};

/// A local path edit. Positions index the full path, start at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathEdit {
    Swap(usize, usize),
    RemoveSecondLast,
    Insert { vertex: VertexId, position: usize },
}

/// Arrival state after every prefix of a path except the full path, plus
/// the completion estimate of the full path.
///
/// The propagator is passed to each call rather than stored; every call on
/// one cache must use the same propagator.
#[derive(Debug, Clone)]
pub struct PrefixProductCache<S> {
    route: Vec<VertexId>,
    // states[t] is the state on arrival at route[t], for t < route.len() - 1
    states: Vec<S>,
    exit: ProbabilityEstimate,
    recomputed: usize,
}

impl<S: Clone> PrefixProductCache<S> {
    pub fn new<P: Propagator<State = S>>(prop: &P, route: Vec<VertexId>) -> Self {
        assert!(route.len() >= 2, "a path has at least start and exit");
        let mut cache = PrefixProductCache {
            states: vec![prop.initial()],
            route,
            exit: ProbabilityEstimate::new(0.0, prop.method()),
            recomputed: 0,
        };
        cache.rebuild_from(prop, 1);
        cache
    }

    pub fn route(&self) -> &[VertexId] {
        &self.route
    }

    pub fn len(&self) -> usize {
        self.route.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Interior vertex count.
    pub fn interior_len(&self) -> usize {
        self.route.len() - 2
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.route.contains(&v)
    }

    /// Completion estimate of the whole path.
    pub fn estimate(&self) -> ProbabilityEstimate {
        self.exit
    }

    /// State on arrival at `route[t]`, for `t < len() - 1`.
    pub fn state(&self, t: usize) -> &S {
        &self.states[t]
    }

    /// Prefix states recomputed by the most recent edit, for tests.
    pub fn last_recomputed(&self) -> usize {
        self.recomputed
    }

    pub fn apply<P: Propagator<State = S>>(&mut self, prop: &P, edit: PathEdit) -> ProbabilityEstimate {
        let m = self.route.len();
        match edit {
            PathEdit::Swap(i, j) => {
                assert!(
                    i > 0 && j > 0 && i < m - 1 && j < m - 1,
                    "swap ({i}, {j}) touches an endpoint"
                );
                if i == j {
                    self.recomputed = 0;
                    return self.exit;
                }
                self.route.swap(i, j);
                self.rebuild_from(prop, i.min(j));
            }
            PathEdit::RemoveSecondLast => {
                assert!(m > 2, "nothing to remove from a start-exit path");
                self.route.remove(m - 2);
                self.rebuild_from(prop, m - 2);
            }
            PathEdit::Insert { vertex, position } => {
                assert!(
                    position > 0 && position < m,
                    "insert position {position} outside 1..{m}"
                );
                self.route.insert(position, vertex);
                self.rebuild_from(prop, position);
            }
        }
        self.exit
    }

    /// Estimate after inserting `vertex` at `position`, without changing the
    /// cache. `None` when the result is certain to fall below `floor`.
    pub fn probe_insert<P: Propagator<State = S>>(
        &self,
        prop: &P,
        vertex: VertexId,
        position: usize,
        floor: Option<f64>,
    ) -> Option<ProbabilityEstimate> {
        let prev = self.route[position - 1];
        let mut tail = Vec::with_capacity(self.route.len() - position + 2);
        tail.push(prev);
        tail.push(vertex);
        tail.extend_from_slice(&self.route[position..]);
        prop.finish(&self.states[position - 1], &tail, floor)
    }

    /// Recomputes every prefix state from `first` on, and the exit estimate.
    fn rebuild_from<P: Propagator<State = S>>(&mut self, prop: &P, first: usize) {
        let last = self.route.len() - 1;
        let first = first.max(1);
        self.states.truncate(first);
        for t in first..last {
            let next = prop.advance(&self.states[t - 1], self.route[t - 1], self.route[t]);
            self.states.push(next);
        }
        self.recomputed = last.saturating_sub(first);
        self.exit = prop
            .finish(&self.states[last - 1], &self.route[last - 1..], None)
            .expect("no floor");
    }
}
