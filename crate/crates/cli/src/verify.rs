//! Cross-checks the two estimators against exact enumeration on small
//! all-discrete instances.

use std::fmt;

use dsop_core::instances::{generate_oracle_instance, OracleConfig};
use dsop_core::probability::exact_completion_probability;
use dsop_core::seed::{derive_indexed, derive_seed};
use dsop_core::{Path, Result, SearchConfig, SolveRequest, VertexId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sweep::{matrix_probability, sampling_probability};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    /// Number of oracle instances.
    pub trials: usize,
    pub paths_per_instance: usize,
    pub samples: usize,
    pub range_count: usize,
    pub seed: u64,
    /// Allowed |sampling - exact|.
    pub sampling_tolerance: f64,
    /// Share of cases that must fall within the tolerance.
    pub sampling_quantile: f64,
    pub max_vertices: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            trials: 200,
            paths_per_instance: 5,
            samples: 10_000,
            range_count: 100,
            seed: 0,
            sampling_tolerance: 0.02,
            sampling_quantile: 0.95,
            max_vertices: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCase {
    pub instance_seed: u64,
    pub deadline: f64,
    pub path: Vec<usize>,
    pub exact: f64,
    pub matrix: f64,
    pub sampling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub spec: VerifySpec,
    pub cases: Vec<VerifyCase>,
}

impl VerifyReport {
    /// Cases where the matrix estimate exceeds the exact value.
    pub fn matrix_violations(&self) -> usize {
        self.cases.iter().filter(|c| c.matrix > c.exact + 1e-9).count()
    }

    pub fn sampling_outliers(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| (c.sampling - c.exact).abs() > self.spec.sampling_tolerance)
            .count()
    }

    pub fn sampling_within_share(&self) -> f64 {
        if self.cases.is_empty() {
            return 1.0;
        }
        1.0 - self.sampling_outliers() as f64 / self.cases.len() as f64
    }

    pub fn passes(&self) -> bool {
        self.matrix_violations() == 0 && self.sampling_within_share() >= self.spec.sampling_quantile
    }

    pub fn max_sampling_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| (c.sampling - c.exact).abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_matrix_gap(&self) -> f64 {
        let n = self.cases.len().max(1) as f64;
        self.cases.iter().map(|c| c.exact - c.matrix).sum::<f64>() / n
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spec;
        writeln!(
            f,
            "cases: {} ({} instances x {} paths), samples {}, ranges {}",
            self.cases.len(),
            s.trials,
            s.paths_per_instance,
            s.samples,
            s.range_count
        )?;
        writeln!(f, "matrix above exact: {}", self.matrix_violations())?;
        writeln!(f, "mean exact - matrix: {:.6}", self.mean_matrix_gap())?;
        writeln!(
            f,
            "sampling off by more than {}: {} ({:.2}% within, need {:.0}%)",
            s.sampling_tolerance,
            self.sampling_outliers(),
            100.0 * self.sampling_within_share(),
            100.0 * s.sampling_quantile
        )?;
        writeln!(f, "largest sampling error: {:.6}", self.max_sampling_error())?;
        for c in self.cases.iter().filter(|c| c.matrix > c.exact + 1e-9) {
            writeln!(
                f,
                "  violation: instance seed {} H={} path {:?} exact {} matrix {}",
                c.instance_seed, c.deadline, c.path, c.exact, c.matrix
            )?;
        }
        write!(f, "{}", if self.passes() { "PASS" } else { "FAIL" })
    }
}

/// A random start-to-exit route through a random subset of interior vertices.
fn random_route<R: Rng>(n: usize, rng: &mut R) -> Vec<VertexId> {
    let mut interior: Vec<usize> = (1..n - 1).collect();
    interior.shuffle(rng);
    let k = rng.random_range(0..=interior.len());
    std::iter::once(0)
        .chain(interior[..k].iter().copied())
        .chain([n - 1])
        .map(VertexId)
        .collect()
}

pub fn run_verify(spec: &VerifySpec) -> Result<VerifyReport> {
    if spec.max_vertices < 3 {
        return Err(dsop_core::DsopError::Config(
            "oracle instances need at least 3 vertices".into(),
        ));
    }
    let cfg = SearchConfig {
        range_count: spec.range_count,
        ..SearchConfig::default()
    };
    let mut cases = Vec::with_capacity(spec.trials * spec.paths_per_instance);
    for t in 0..spec.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed(spec.seed, &[t as u64]));
        let oracle = OracleConfig {
            vertex_count: rng.random_range(3..=spec.max_vertices),
            outcomes_per_edge: rng.random_range(1..=3),
            band_count: 2,
            seed: rng.random(),
        };
        let inst = generate_oracle_instance(&oracle)?;
        let deadline = rng.random_range(2..=10u32) as f64;
        let req = SolveRequest::new(deadline, 0.0, 0.0)?;
        for p in 0..spec.paths_per_instance {
            let route = random_route(inst.vertex_count(), &mut rng);
            let exact =
                exact_completion_probability(&inst, &Path::new(route.clone()), &req, cfg.exact_outcome_cap)?.value;
            let matrix = matrix_probability(&inst, &req, &cfg, &route)?;
            let seed = derive_seed(derive_indexed(spec.seed, &[t as u64, p as u64]), "sampler");
            let sampling = sampling_probability(&inst, &req, spec.samples, seed, &route);
            cases.push(VerifyCase {
                instance_seed: oracle.seed,
                deadline,
                path: route.iter().map(|v| v.0).collect(),
                exact,
                matrix,
                sampling,
            });
        }
    }
    Ok(VerifyReport {
        spec: spec.clone(),
        cases,
    })
}
