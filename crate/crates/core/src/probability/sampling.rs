//! Monte Carlo completion probability.
//!
//! Walk `j` draws the travel time of edge `(from, to)` in band `b` from a
//! fixed column of pre-seeded samples, at row `j`. A walk's draw therefore
//! depends only on `(seed, j, from, to, b)` and never on the route that led
//! there, so re-evaluating an edited path reproduces the untouched walks
//! exactly and the prefix cache agrees bit for bit with a fresh evaluation.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{DsopError, Result};
use crate::model::{DistributionSpec, Instance, Path, SolveRequest, VertexId};
use crate::seed::derive_indexed;

use super::{Method, ProbabilityEstimate, Propagator};

/// Lazily drawn travel-time samples, one column of `n` per edge band.
#[derive(Debug)]
pub struct SampleTable {
    samples: usize,
    seed: u64,
    // offsets[e] is the column of band 0 of edge e
    offsets: Vec<usize>,
    columns: Vec<OnceLock<Arc<[f64]>>>,
}

impl SampleTable {
    pub fn new(instance: &Instance, samples: usize, seed: u64) -> Self {
        assert!(samples > 0, "sample count must be positive");
        let mut offsets = Vec::with_capacity(instance.edges().len());
        let mut total = 0;
        for e in instance.edges() {
            offsets.push(total);
            total += e.bands.len();
        }
        SampleTable {
            samples,
            seed,
            offsets,
            columns: (0..total).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Samples of band `band` of edge number `edge`, drawn on first use.
    pub fn column(&self, instance: &Instance, edge: usize, band: usize) -> &Arc<[f64]> {
        self.columns[self.offsets[edge] + band].get_or_init(|| {
            let e = &instance.edges()[edge];
            let seed = derive_indexed(self.seed, &[e.from.0 as u64, e.to.0 as u64, band as u64]);
            draw(&e.bands[band].dist, self.samples, seed)
        })
    }
}

fn draw(dist: &DistributionSpec, n: usize, seed: u64) -> Arc<[f64]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dist {
        DistributionSpec::Gamma { shape, scale } => {
            let g = Gamma::new(*shape, *scale).expect("validated gamma parameters");
            (0..n).map(|_| g.sample(&mut rng)).collect()
        }
        DistributionSpec::Discrete { outcomes } => {
            let last = outcomes.len() - 1;
            (0..n)
                .map(|_| {
                    let mut u: f64 = rng.random();
                    for o in &outcomes[..last] {
                        if u < o.prob {
                            return o.time;
                        }
                        u -= o.prob;
                    }
                    outcomes[last].time
                })
                .collect()
        }
    }
}

/// Sample columns of the bands of one edge that a walk can use before the
/// deadline.
#[derive(Debug, Clone)]
struct Leg {
    starts: Vec<f64>,
    columns: Vec<Arc<[f64]>>,
}

impl Leg {
    /// Moves every walk across this edge. Late walks stay at infinity.
    fn apply(&self, walks: &mut [f64], deadline: f64) {
        let settle = |a: f64, t: f64| {
            let next = a + t;
            if next > deadline {
                f64::INFINITY
            } else {
                next
            }
        };
        match self.columns.as_slice() {
            [c0] => {
                for (a, &t) in walks.iter_mut().zip(c0.iter()) {
                    *a = settle(*a, t);
                }
            }
            [c0, c1] => {
                let s1 = self.starts[1];
                for ((a, &t0), &t1) in walks.iter_mut().zip(c0.iter()).zip(c1.iter()) {
                    let t = if *a >= s1 { t1 } else { t0 };
                    *a = settle(*a, t);
                }
            }
            [c0, c1, c2] => {
                let (s1, s2) = (self.starts[1], self.starts[2]);
                for (((a, &t0), &t1), &t2) in walks.iter_mut().zip(c0.iter()).zip(c1.iter()).zip(c2.iter()) {
                    let t = if *a >= s2 {
                        t2
                    } else if *a >= s1 {
                        t1
                    } else {
                        t0
                    };
                    *a = settle(*a, t);
                }
            }
            columns => {
                for (j, a) in walks.iter_mut().enumerate() {
                    let b = self.starts[1..].iter().take_while(|&&s| *a >= s).count();
                    *a = settle(*a, columns[b][j]);
                }
            }
        }
    }
}

/// Arrival time of every walk; late walks hold `f64::INFINITY`.
pub type Walks = Vec<f64>;

#[derive(Debug, Clone)]
pub struct SamplingPropagator<'a> {
    instance: &'a Instance,
    table: Arc<SampleTable>,
    deadline: f64,
    start_time: f64,
    legs: Vec<Leg>,
}

impl<'a> SamplingPropagator<'a> {
    pub fn new(instance: &'a Instance, request: &SolveRequest, samples: usize, seed: u64) -> Self {
        Self::with_table(instance, request, Arc::new(SampleTable::new(instance, samples, seed)))
    }

    /// Shares drawn samples across requests on the same instance.
    pub fn with_table(instance: &'a Instance, request: &SolveRequest, table: Arc<SampleTable>) -> Self {
        let legs = instance
            .edges()
            .iter()
            .enumerate()
            .map(|(ei, edge)| {
                let used = edge
                    .bands
                    .iter()
                    .take_while(|b| b.start <= request.deadline)
                    .count()
                    .max(1);
                Leg {
                    starts: edge.bands[..used].iter().map(|b| b.start).collect(),
                    columns: (0..used).map(|b| Arc::clone(table.column(instance, ei, b))).collect(),
                }
            })
            .collect();
        SamplingPropagator {
            instance,
            table,
            deadline: request.deadline,
            start_time: request.start_time,
            legs,
        }
    }

    pub fn table(&self) -> &Arc<SampleTable> {
        &self.table
    }

    pub fn samples(&self) -> usize {
        self.table.samples()
    }

    fn leg(&self, from: VertexId, to: VertexId) -> Option<&Leg> {
        self.instance.edge_id(from, to).map(|ei| &self.legs[ei])
    }

    fn on_time(&self, walks: &[f64]) -> usize {
        walks.iter().filter(|&&a| a <= self.deadline).count()
    }
}

impl Propagator for SamplingPropagator<'_> {
    type State = Walks;

    fn method(&self) -> Method {
        Method::Sampling
    }

    fn instance(&self) -> &Instance {
        self.instance
    }

    fn initial(&self) -> Walks {
        let a = if self.start_time <= self.deadline {
            self.start_time
        } else {
            f64::INFINITY
        };
        vec![a; self.samples()]
    }

    fn advance(&self, state: &Walks, from: VertexId, to: VertexId) -> Walks {
        let mut walks = state.clone();
        match self.leg(from, to) {
            Some(leg) => leg.apply(&mut walks, self.deadline),
            None => walks.fill(f64::INFINITY),
        }
        walks
    }

    fn estimate(&self, state: &Walks) -> ProbabilityEstimate {
        ProbabilityEstimate::from_counts(self.on_time(state), state.len())
    }

    fn below_floor(&self, state: &Walks, floor: f64) -> bool {
        (self.on_time(state) as f64) / (state.len() as f64) < floor
    }

    fn finish(&self, state: &Walks, route: &[VertexId], floor: Option<f64>) -> Option<ProbabilityEstimate> {
        let mut walks = state.clone();
        for w in route.windows(2) {
            match self.leg(w[0], w[1]) {
                Some(leg) => leg.apply(&mut walks, self.deadline),
                None => walks.fill(f64::INFINITY),
            }
            if floor.is_some_and(|f| self.below_floor(&walks, f)) {
                return None;
            }
        }
        Some(self.estimate(&walks))
    }
}

/// Sampled completion probability of `path` with `samples` walks.
pub fn sampling_completion_probability(
    instance: &Instance,
    path: &Path,
    request: &SolveRequest,
    samples: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    if samples == 0 {
        return Err(DsopError::Config("sample count must be positive".into()));
    }
    request.validate()?;
    path.check(instance)?;
    Ok(SamplingPropagator::new(instance, request, samples, seed).evaluate(path.vertices()))
}
