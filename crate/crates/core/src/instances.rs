//! Instance generators.
//!
//! Synthetic instances place points uniformly in a square and give every
//! ordered pair an edge whose travel time is gamma with the Euclidean
//! distance as mean. Later time bands perturb the shape and mean slightly.
//! The hard variant draws the scale per edge and inflates a subset of
//! edges until the means break the triangle inequality.
//!
//! Oracle instances are small and all-discrete, so exact enumeration can
//! check the estimators against them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DsopError, Result};
use crate::model::{Band, DistributionSpec, Instance, Outcome, TimeDependentEdge, Vertex, VertexId};

const HARD_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coordinates {
    /// Uniform points in `[0, side]²`.
    Random {
        side: f64,
    },
    Explicit(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScaleSetting {
    Fixed(f64),
    /// Uniform in `[1, 4]` per edge.
    PerEdgeRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Ignored for explicit coordinates.
    pub vertex_count: usize,
    pub coordinates: Coordinates,
    pub theta: ScaleSetting,
    pub shape_min: f64,
    pub shape_max: f64,
    pub reward_min: u32,
    pub reward_max: u32,
    pub band_count: usize,
    /// Bands start at `0, band_length, 2 * band_length, ...`.
    pub band_length: f64,
    /// Later bands scale shape and mean by factors in `[1 - drift, 1 + drift]`.
    pub drift: f64,
    pub hard: bool,
    pub hard_fraction: f64,
    pub hard_inflation: (f64, f64),
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            vertex_count: 32,
            coordinates: Coordinates::Random { side: 10.0 },
            theta: ScaleSetting::Fixed(2.0),
            shape_min: 2.0,
            shape_max: 9.0,
            reward_min: 1,
            reward_max: 100,
            band_count: 3,
            band_length: 24.0,
            drift: 0.1,
            hard: false,
            hard_fraction: 0.2,
            hard_inflation: (1.5, 3.0),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DsopError::Config(m));
        if let ScaleSetting::Fixed(t) = self.theta {
            if !(1.0..=4.0).contains(&t) {
                return bad(format!("theta must lie in [1, 4], got {t}"));
            }
        }
        if !(self.shape_min > 0.0 && self.shape_min <= self.shape_max) {
            return bad(format!("bad shape bounds [{}, {}]", self.shape_min, self.shape_max));
        }
        if self.reward_min > self.reward_max {
            return bad(format!("bad reward range [{}, {}]", self.reward_min, self.reward_max));
        }
        if self.band_count == 0 || !(self.band_length > 0.0) {
            return bad("need at least one band of positive length".into());
        }
        if !(0.0..1.0).contains(&self.drift) {
            return bad(format!("drift must lie in [0, 1), got {}", self.drift));
        }
        let n = match &self.coordinates {
            Coordinates::Random { side } => {
                if !(*side > 0.0) {
                    return bad(format!("square side must be positive, got {side}"));
                }
                self.vertex_count
            }
            Coordinates::Explicit(points) => points.len(),
        };
        if n < 2 {
            return bad(format!("need at least 2 vertices, got {n}"));
        }
        Ok(())
    }
}

/// Shape and scale with mean `mean`: `k = clamp(mean / θ, lo, hi)`, then the
/// scale is reset to `mean / k` so that `kθ` is exactly the mean again.
pub fn gamma_for_mean(mean: f64, theta: f64, shape_min: f64, shape_max: f64) -> (f64, f64) {
    let k = (mean / theta).clamp(shape_min, shape_max);
    (k, mean / k)
}

fn points(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    match &config.coordinates {
        Coordinates::Random { side } => (0..config.vertex_count)
            .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
            .collect(),
        Coordinates::Explicit(p) => p.clone(),
    }
}

#[derive(Clone)]
struct EdgeDraft {
    from: usize,
    to: usize,
    // (start, shape, scale) per band
    bands: Vec<(f64, f64, f64)>,
}

impl EdgeDraft {
    fn build(&self) -> TimeDependentEdge {
        TimeDependentEdge {
            from: VertexId(self.from),
            to: VertexId(self.to),
            bands: self
                .bands
                .iter()
                .map(|&(start, k, t)| Band {
                    start,
                    dist: DistributionSpec::gamma(k, t),
                })
                .collect(),
        }
    }
}

fn drafts(config: &GeneratorConfig, pts: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Result<Vec<EdgeDraft>> {
    let n = pts.len();
    let mut out = Vec::with_capacity(n * (n - 1));
    let uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mean = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
            if !(mean > 0.0) {
                return Err(DsopError::Generation(format!(
                    "vertices {i} and {j} share coordinates, so edge {i} -> {j} has zero mean"
                )));
            }
            let theta = match config.theta {
                ScaleSetting::Fixed(t) if !config.hard => t,
                _ => uniform(rng, 1.0, 4.0),
            };
            let (k, t) = gamma_for_mean(mean, theta, config.shape_min, config.shape_max);
            let mut bands = vec![(0.0, k, t)];
            for b in 1..config.band_count {
                let kb = (k * uniform(rng, 1.0 - config.drift, 1.0 + config.drift))
                    .clamp(config.shape_min, config.shape_max);
                let mb = mean * uniform(rng, 1.0 - config.drift, 1.0 + config.drift);
                bands.push((b as f64 * config.band_length, kb, mb / kb));
            }
            out.push(EdgeDraft { from: i, to: j, bands });
        }
    }
    Ok(out)
}

fn rewards(config: &GeneratorConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vertex> {
    (0..n)
        .map(|_| Vertex {
            reward: rng.random_range(config.reward_min..=config.reward_max) as f64,
            penalty: 0.0,
        })
        .collect()
}

fn assemble(vertices: Vec<Vertex>, drafts: &[EdgeDraft]) -> Instance {
    let n = vertices.len();
    Instance::new(
        vertices,
        drafts.iter().map(EdgeDraft::build).collect(),
        VertexId(0),
        VertexId(n - 1),
    )
}

/// Complete-graph instance; delegates to [`generate_hard_variant`] when
/// `config.hard` is set. Start is vertex 0, exit the last vertex.
pub fn generate_synthetic(config: &GeneratorConfig) -> Result<Instance> {
    if config.hard {
        return generate_hard_variant(config);
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pts = points(config, &mut rng);
    let vertices = rewards(config, pts.len(), &mut rng);
    let drafts = drafts(config, &pts, &mut rng)?;
    Ok(assemble(vertices, &drafts))
}

/// Like [`generate_synthetic`], but with per-edge random scales and a subset
/// of edges whose shape (and so mean) is inflated, redrawn until some
/// triangle is violated.
pub fn generate_hard_variant(config: &GeneratorConfig) -> Result<Instance> {
    let config = GeneratorConfig {
        hard: true,
        ..config.clone()
    };
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pts = points(&config, &mut rng);
    let vertices = rewards(&config, pts.len(), &mut rng);
    let base = drafts(&config, &pts, &mut rng)?;
    let (lo, hi) = config.hard_inflation;
    let picks = ((base.len() as f64) * config.hard_fraction).round().max(1.0) as usize;
    for _ in 0..HARD_RETRIES {
        let mut edges = base.clone();
        for idx in rand::seq::index::sample(&mut rng, edges.len(), picks.min(edges.len())) {
            let factor = lo + (hi - lo) * rng.random::<f64>();
            for band in edges[idx].bands.iter_mut() {
                band.1 = (band.1 * factor).clamp(config.shape_min, config.shape_max);
            }
        }
        let instance = assemble(vertices.clone(), &edges);
        if find_violated_triangle(&instance).is_some() {
            return Ok(instance);
        }
    }
    Err(DsopError::Generation(format!(
        "no triangle-inequality violation after {HARD_RETRIES} inflation draws"
    )))
}

/// Some `(i, j, l)` with `mean(i, l) > mean(i, j) + mean(j, l)`, judged on the
/// first band of each edge.
pub fn find_violated_triangle(instance: &Instance) -> Option<(VertexId, VertexId, VertexId)> {
    let n = instance.vertex_count();
    let mean = |a: usize, b: usize| instance.edge(VertexId(a), VertexId(b)).map(|e| e.bands[0].dist.mean());
    for i in 0..n {
        for l in 0..n {
            let Some(direct) = mean(i, l).filter(|_| i != l) else {
                continue;
            };
            for j in 0..n {
                if j == i || j == l {
                    continue;
                }
                if let (Some(a), Some(b)) = (mean(i, j), mean(j, l)) {
                    if direct > a + b + 1e-9 {
                        return Some((VertexId(i), VertexId(j), VertexId(l)));
                    }
                }
            }
        }
    }
    None
}

/// Parameters of a small all-discrete instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub vertex_count: usize,
    pub outcomes_per_edge: usize,
    pub band_count: usize,
    pub seed: u64,
}

pub const ORACLE_MAX_VERTICES: usize = 8;

/// All-discrete instance with start 0 and exit `n - 1`. No edge enters the
/// start or leaves the exit. Travel times are multiples of 0.25 in
/// `[0.25, 3]`, so a grid whose width divides 0.25 represents them without
/// leakage. With two bands the second starts at an integer time in `1..=4`
/// and at least one edge has it.
pub fn generate_oracle_instance(config: &OracleConfig) -> Result<Instance> {
    let n = config.vertex_count;
    if !(2..=ORACLE_MAX_VERTICES).contains(&n) {
        return Err(DsopError::Config(format!(
            "oracle instances have 2 to {ORACLE_MAX_VERTICES} vertices, got {n}"
        )));
    }
    if !(1..=3).contains(&config.outcomes_per_edge) {
        return Err(DsopError::Config(format!(
            "oracle edges have 1 to 3 outcomes, got {}",
            config.outcomes_per_edge
        )));
    }
    if !(1..=2).contains(&config.band_count) {
        return Err(DsopError::Config(format!(
            "oracle edges have 1 or 2 bands, got {}",
            config.band_count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vertices: Vec<Vertex> = (0..n)
        .map(|_| Vertex {
            reward: rng.random_range(1..=100u32) as f64,
            penalty: 0.0,
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && j != 0 && i != n - 1)
        .collect();
    let forced = rng.random_range(0..pairs.len());
    let mut edges = Vec::with_capacity(pairs.len());
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let mut bands = vec![Band {
            start: 0.0,
            dist: discrete(config.outcomes_per_edge, &mut rng),
        }];
        if config.band_count == 2 && (idx == forced || rng.random::<bool>()) {
            bands.push(Band {
                start: rng.random_range(1..=4u32) as f64,
                dist: discrete(config.outcomes_per_edge, &mut rng),
            });
        }
        edges.push(TimeDependentEdge {
            from: VertexId(i),
            to: VertexId(j),
            bands,
        });
    }
    Ok(Instance::new(vertices, edges, VertexId(0), VertexId(n - 1)))
}

fn discrete(k: usize, rng: &mut ChaCha8Rng) -> DistributionSpec {
    let weights: Vec<f64> = (0..k).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut outcomes: Vec<Outcome> = weights
        .iter()
        .map(|w| Outcome {
            time: 0.25 * rng.random_range(1..=12u32) as f64,
            prob: w / total,
        })
        .collect();
    let head: f64 = outcomes[..k - 1].iter().map(|o| o.prob).sum();
    outcomes[k - 1].prob = 1.0 - head;
    DistributionSpec::Discrete { outcomes }
}
