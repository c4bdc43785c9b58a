#![allow(dead_code)]

use dsop_core::probability::Propagator;
use dsop_core::{DistributionSpec, Instance, TimeDependentEdge, Vertex, VertexId};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn point(from: usize, to: usize, time: f64) -> TimeDependentEdge {
    TimeDependentEdge::fixed(VertexId(from), VertexId(to), DistributionSpec::point_mass(time))
}

pub fn discrete(from: usize, to: usize, outcomes: &[(f64, f64)]) -> TimeDependentEdge {
    TimeDependentEdge::fixed(VertexId(from), VertexId(to), DistributionSpec::discrete(outcomes))
}

/// Start is vertex 0, exit is the last vertex.
pub fn instance(rewards: &[f64], edges: Vec<TimeDependentEdge>) -> Instance {
    let vertices = rewards.iter().map(|&reward| Vertex { reward, penalty: 0.0 }).collect();
    Instance::new(vertices, edges, VertexId(0), VertexId(rewards.len() - 1))
}

/// Complete digraph of point-mass edges, travel time `time(i, j)`.
pub fn complete_points(rewards: &[f64], time: impl Fn(usize, usize) -> f64) -> Instance {
    let n = rewards.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                edges.push(point(i, j, time(i, j)));
            }
        }
    }
    instance(rewards, edges)
}

pub fn ids(v: &[usize]) -> Vec<VertexId> {
    v.iter().map(|&i| VertexId(i)).collect()
}

/// Start, a random ordered subset of the interior, exit.
pub fn random_route<R: Rng>(instance: &Instance, rng: &mut R) -> Vec<VertexId> {
    let mut interior: Vec<VertexId> = instance.interior_vertices().collect();
    interior.shuffle(rng);
    let keep = rng.random_range(0..=interior.len());
    let mut route = vec![instance.start()];
    route.extend_from_slice(&interior[..keep]);
    route.push(instance.exit());
    route
}

/// Every ordered subset of the interior, as full routes.
pub fn all_routes(instance: &Instance) -> Vec<Vec<VertexId>> {
    fn extend(prefix: &mut Vec<VertexId>, rest: &[VertexId], exit: VertexId, out: &mut Vec<Vec<VertexId>>) {
        let mut route = prefix.clone();
        route.push(exit);
        out.push(route);
        for (i, &v) in rest.iter().enumerate() {
            let mut left = rest.to_vec();
            left.remove(i);
            prefix.push(v);
            extend(prefix, &left, exit, out);
            prefix.pop();
        }
    }
    let interior: Vec<VertexId> = instance.interior_vertices().collect();
    let mut out = Vec::new();
    extend(&mut vec![instance.start()], &interior, instance.exit(), &mut out);
    out
}

/// Highest reward over all routes whose estimate meets `1 - epsilon`.
pub fn brute_force_best<P: Propagator>(prop: &P, epsilon: f64) -> Option<f64> {
    let inst = prop.instance();
    all_routes(inst)
        .into_iter()
        .filter(|r| r.windows(2).all(|w| inst.has_edge(w[0], w[1])))
        .filter(|r| dsop_core::is_feasible(&prop.evaluate(r), epsilon))
        .map(|r| r.iter().map(|&v| inst.reward(v)).sum::<f64>())
        .max_by(f64::total_cmp)
}
