//! Exact completion probability by enumerating every joint outcome. Only
//! defined when every edge on the path is discrete in every band.

use crate::error::{DsopError, Result};
use crate::model::{DistributionSpec, Instance, Path, SolveRequest};

use super::{Method, ProbabilityEstimate};

/// Probability of being on time at each vertex of `path`, start included.
///
/// `cap` bounds the number of distinct arrival times tracked at once.
pub fn exact_on_time_profile(instance: &Instance, path: &Path, request: &SolveRequest, cap: usize) -> Result<Vec<f64>> {
    request.validate()?;
    path.check(instance)?;
    let h = request.deadline;
    // (arrival, probability), late branches dropped
    let mut support: Vec<(f64, f64)> = vec![(request.start_time, 1.0)];
    let mut profile = vec![1.0];
    for w in path.vertices().windows(2) {
        let edge = instance.edge(w[0], w[1]).expect("path checked");
        let mut next = Vec::with_capacity(support.len() * 2);
        for &(a, p) in &support {
            let DistributionSpec::Discrete { outcomes } = edge.distribution_at(a) else {
                return Err(DsopError::UnsupportedDistribution(format!(
                    "exact enumeration needs discrete travel times, edge {} -> {} is gamma",
                    w[0], w[1]
                )));
            };
            for o in outcomes {
                let t = a + o.time;
                if t <= h && o.prob > 0.0 {
                    next.push((t, p * o.prob));
                }
            }
        }
        next.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (t, p) in next {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += p,
                _ => merged.push((t, p)),
            }
        }
        if merged.len() > cap {
            return Err(DsopError::OutcomeCap { cap });
        }
        support = merged;
        profile.push(support.iter().map(|&(_, p)| p).sum::<f64>().min(1.0));
    }
    Ok(profile)
}

/// Exact `P(a_n <= H)` for an all-discrete path.
pub fn exact_completion_probability(
    instance: &Instance,
    path: &Path,
    request: &SolveRequest,
    cap: usize,
) -> Result<ProbabilityEstimate> {
    let profile = exact_on_time_profile(instance, path, request, cap)?;
    Ok(ProbabilityEstimate::new(*profile.last().unwrap(), Method::ExactOracle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Band, TimeDependentEdge, Vertex, VertexId};

    fn chain(edges: Vec<DistributionSpec>) -> (Instance, Path) {
        let n = edges.len() + 1;
        let edges = edges
            .into_iter()
            .enumerate()
            .map(|(i, d)| TimeDependentEdge::fixed(VertexId(i), VertexId(i + 1), d))
            .collect();
        let inst = Instance::new(
            vec![
                Vertex {
                    reward: 1.0,
                    penalty: 0.0
                };
                n
            ],
            edges,
            VertexId(0),
            VertexId(n - 1),
        );
        (inst, Path::from_indices(&(0..n).collect::<Vec<_>>()))
    }

    fn req(h: f64) -> SolveRequest {
        SolveRequest::new(h, 0.1, 0.0).unwrap()
    }

    #[test]
    fn point_mass() {
        let (inst, path) = chain(vec![DistributionSpec::point_mass(3.0)]);
        assert_eq!(
            exact_completion_probability(&inst, &path, &req(5.0), 100)
                .unwrap()
                .value,
            1.0
        );
    }

    #[test]
    fn two_coin_edges() {
        let coin = DistributionSpec::discrete(&[(1.0, 0.5), (2.0, 0.5)]);
        let (inst, path) = chain(vec![coin.clone(), coin]);
        let est = exact_completion_probability(&inst, &path, &req(3.0), 100).unwrap();
        assert_eq!(est.value, 0.75);
        assert_eq!(est.method, Method::ExactOracle);
    }

    #[test]
    fn band_follows_accumulated_arrival() {
        let mut inst_edges = vec![TimeDependentEdge::fixed(
            VertexId(0),
            VertexId(1),
            DistributionSpec::discrete(&[(2.0, 0.5), (4.0, 0.5)]),
        )];
        inst_edges.push(TimeDependentEdge {
            from: VertexId(1),
            to: VertexId(2),
            bands: vec![
                Band {
                    start: 0.0,
                    dist: DistributionSpec::point_mass(1.0),
                },
                Band {
                    start: 3.0,
                    dist: DistributionSpec::point_mass(10.0),
                },
            ],
        });
        let inst = Instance::new(
            vec![
                Vertex {
                    reward: 1.0,
                    penalty: 0.0
                };
                3
            ],
            inst_edges,
            VertexId(0),
            VertexId(2),
        );
        let path = Path::from_indices(&[0, 1, 2]);
        assert_eq!(
            exact_completion_probability(&inst, &path, &req(6.0), 100)
                .unwrap()
                .value,
            0.5
        );
        assert_eq!(
            exact_on_time_profile(&inst, &path, &req(6.0), 100).unwrap(),
            vec![1.0, 1.0, 0.5]
        );
    }

    #[test]
    fn gamma_and_cap_are_errors() {
        let (inst, path) = chain(vec![DistributionSpec::gamma(2.0, 1.0)]);
        assert!(matches!(
            exact_completion_probability(&inst, &path, &req(5.0), 100),
            Err(DsopError::UnsupportedDistribution(_))
        ));
        let spread = DistributionSpec::discrete(&[(0.1, 0.25), (0.2, 0.25), (0.4, 0.25), (0.8, 0.25)]);
        let (inst, path) = chain(vec![spread.clone(), spread.clone(), spread]);
        assert!(matches!(
            exact_completion_probability(&inst, &path, &req(50.0), 10),
            Err(DsopError::OutcomeCap { cap: 10 })
        ));
    }
}
