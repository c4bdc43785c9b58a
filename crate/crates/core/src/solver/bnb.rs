//! Depth-first branch-and-bound over path prefixes.

use crate::error::{DsopError, Result};
use crate::model::{PruneRule, Solution, VertexId};
use crate::probability::Propagator;

use super::Solver;

struct Search<'s, 'p, P: Propagator> {
    solver: &'s Solver<'p, P>,
    // interior vertices, reward descending then index ascending
    order: Vec<VertexId>,
    visited: Vec<bool>,
    route: Vec<VertexId>,
    best: Option<(f64, Vec<VertexId>)>,
    nodes: u64,
    exit_reward: f64,
}

struct BudgetExhausted;

impl<P: Propagator> Search<'_, '_, P> {
    fn visit(&mut self, state: &P::State, reward: f64, remaining: f64) -> Result<(), BudgetExhausted> {
        self.nodes += 1;
        if self.nodes > self.solver.config().node_budget {
            return Err(BudgetExhausted);
        }
        let inst = self.solver.instance();
        let prop = self.solver.propagator();
        let floor = self.solver.floor();
        let rule = self.solver.config().prune_rule;
        let last = *self.route.last().unwrap();
        let exit = inst.exit();

        let with_exit = if inst.has_edge(last, exit) {
            prop.finish(state, &[last, exit], Some(floor))
                .filter(|est| self.solver.feasible(est))
        } else {
            None
        };
        match with_exit {
            Some(_) => {
                let total = reward + self.exit_reward;
                if self.best.as_ref().is_none_or(|(r, _)| total > *r) {
                    let mut route = self.route.clone();
                    route.push(exit);
                    self.best = Some((total, route));
                }
            }
            None if rule == PruneRule::ExitAppended => return Ok(()),
            None => {}
        }
        if let Some((best, _)) = &self.best {
            if reward + remaining + self.exit_reward <= *best {
                return Ok(());
            }
        }

        for k in 0..self.order.len() {
            let v = self.order[k];
            if self.visited[v.0] || !inst.has_edge(last, v) {
                continue;
            }
            let next = prop.advance(state, last, v);
            if prop.below_floor(&next, floor) {
                continue;
            }
            let rv = inst.reward(v);
            self.visited[v.0] = true;
            self.route.push(v);
            let outcome = self.visit(&next, reward + rv, remaining - rv);
            self.route.pop();
            self.visited[v.0] = false;
            outcome?;
        }
        Ok(())
    }
}

impl<P: Propagator> Solver<'_, P> {
    /// Highest-reward feasible path.
    ///
    /// A subtree is cut when its prefix has already lost too much on-time
    /// probability, or, under [`PruneRule::ExitAppended`], as soon as the
    /// prefix followed by the exit is infeasible. Subtrees that cannot beat
    /// the incumbent even by visiting every remaining vertex are cut too.
    pub fn branch_and_bound(&self) -> Result<Solution> {
        let inst = self.instance();
        let mut order: Vec<VertexId> = inst.interior_vertices().collect();
        order.sort_by(|a, b| inst.reward(*b).total_cmp(&inst.reward(*a)).then(a.cmp(b)));
        let remaining: f64 = order.iter().map(|&v| inst.reward(v)).sum();
        let mut search = Search {
            solver: self,
            order,
            visited: vec![false; inst.vertex_count()],
            route: vec![inst.start()],
            best: None,
            nodes: 0,
            exit_reward: inst.reward(inst.exit()),
        };
        search.visited[inst.start().0] = true;
        search.visited[inst.exit().0] = true;
        let initial = self.propagator().initial();
        let outcome = if self.propagator().below_floor(&initial, self.floor()) {
            Ok(())
        } else {
            search.visit(&initial, inst.reward(inst.start()), remaining)
        };
        let best = search.best.map(|(_, route)| self.solution(&route));
        match (outcome, best) {
            (Ok(()), Some(best)) => Ok(best),
            (Ok(()), None) => Err(DsopError::NoFeasibleSolution),
            (Err(BudgetExhausted), best) => Err(DsopError::Timeout {
                budget: self.config().node_budget,
                best: best.map(Box::new),
            }),
        }
    }
}
