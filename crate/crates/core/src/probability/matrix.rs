//! Conservative range-to-range transition matrices.
//!
//! For an edge `i -> j` and source range `r_p`, entry `(p, q)` is
//!
//! ```text
//!   min over a in r_p of P(a + X in r_q),   X ~ travel time of the band containing r_p
//! ```
//!
//! which bounds the true conditional probability from below for every
//! arrival inside `r_p`. All ranges have the same width, so within one band
//! row `p` is row `0` shifted right by `p`: each band only needs one template
//! over the offset `q - p`.
//!
//! The minimum over `a` is taken as follows:
//!
//! * Discrete travel times: `a -> P(a + X in r_q)` is piecewise constant and
//!   right-continuous, with breakpoints where an outcome crosses a range
//!   edge. Evaluating every piece gives the exact infimum.
//! * Gamma travel times: the range endpoints plus `interior_probes` evenly
//!   spaced points. A window over a log-concave density (shape >= 1) is
//!   unimodal in its position, so the endpoints already give the minimum.

use crate::error::{DsopError, Result};
use crate::model::{
    DistributionSpec, Instance, Outcome, Path, SearchConfig, SolveRequest, TimeDependentEdge, VertexId,
};

use super::grid::RangeGrid;
use super::{Method, ProbabilityEstimate, Propagator, MATRIX_FLOOR_SLACK};

/// Entries below this are dropped. Dropping mass only lowers the estimate.
const TRIM: f64 = 1e-15;

/// Probability mass over the ranges of a [`RangeGrid`], overflow last.
pub type ArrivalDistribution = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
struct Template {
    /// Offset `q - p` of `values[0]`.
    first: usize,
    values: Vec<f64>,
}

impl Template {
    fn at(&self, offset: usize) -> f64 {
        offset
            .checked_sub(self.first)
            .and_then(|i| self.values.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Conservative transition matrix of one edge, of dimension `count + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    count: usize,
    templates: Vec<Template>,
    row_template: Vec<usize>,
    /// Entry `(p, overflow)` for each regular row `p`.
    overflow: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.count + 1
    }

    pub fn entry(&self, p: usize, q: usize) -> f64 {
        let n = self.count;
        assert!(p <= n && q <= n, "entry ({p}, {q}) outside a {0}x{0} matrix", n + 1);
        if p == n {
            return if q == n { 1.0 } else { 0.0 };
        }
        if q == n {
            return self.overflow[p];
        }
        if q < p {
            return 0.0;
        }
        self.templates[self.row_template[p]].at(q - p)
    }

    pub fn row_sum(&self, p: usize) -> f64 {
        (0..self.dim()).map(|q| self.entry(p, q)).sum()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|p| (0..self.dim()).map(|q| self.entry(p, q)).collect())
            .collect()
    }

    /// Row vector times matrix.
    pub fn apply(&self, dist: &[f64]) -> ArrivalDistribution {
        let n = self.count;
        debug_assert_eq!(dist.len(), n + 1);
        let mut out = vec![0.0; n + 1];
        for (p, &mass) in dist[..n].iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let t = &self.templates[self.row_template[p]];
            let lo = p + t.first;
            if lo < n {
                let hi = (lo + t.values.len()).min(n);
                for (slot, &v) in out[lo..hi].iter_mut().zip(&t.values) {
                    *slot += mass * v;
                }
            }
            out[n] += mass * self.overflow[p];
        }
        out[n] += dist[n];
        out
    }
}

/// Builds the conservative transition matrix of `edge` on `grid`.
pub fn edge_transition_matrix(
    edge: &TimeDependentEdge,
    grid: &RangeGrid,
    interior_probes: usize,
) -> Result<TransitionMatrix> {
    let n = grid.count();
    let mut templates = Vec::new();
    let mut row_template = vec![0usize; n];
    let mut overflow = vec![0.0; n];

    for (bi, band) in edge.bands.iter().enumerate() {
        let first_row = if bi == 0 {
            0
        } else {
            match band_row(grid, band.start) {
                Some(r) => r,
                None => {
                    return Err(DsopError::Config(format!(
                        "band {bi} of edge {} -> {} starts at {}, off the grid of width {}",
                        edge.from,
                        edge.to,
                        band.start,
                        grid.width()
                    )))
                }
            }
        };
        let end_row = match edge.bands.get(bi + 1) {
            Some(next) => band_row(grid, next.start).unwrap_or(n).min(n),
            None => n,
        };
        if first_row >= end_row {
            continue;
        }
        check_distribution(&band.dist, edge)?;
        let values = match &band.dist {
            DistributionSpec::Discrete { outcomes } => discrete_template(outcomes, grid),
            dist @ DistributionSpec::Gamma { .. } => continuous_template(dist, grid, interior_probes),
        };
        templates.push(trimmed(values));
        let ti = templates.len() - 1;
        for p in first_row..end_row {
            row_template[p] = ti;
            // P(a + X >= H) is smallest at the left end of r_p
            overflow[p] = overflow_mass(&band.dist, n - p, grid.width());
        }
    }
    if templates.is_empty() {
        return Err(DsopError::Config(format!(
            "edge {} -> {} has no band covering time 0",
            edge.from, edge.to
        )));
    }
    Ok(TransitionMatrix {
        count: n,
        templates,
        row_template,
        overflow,
    })
}

fn band_row(grid: &RangeGrid, start: f64) -> Option<usize> {
    if start >= grid.deadline() {
        Some(grid.count())
    } else {
        grid.boundary_index(start)
    }
}

fn check_distribution(dist: &DistributionSpec, edge: &TimeDependentEdge) -> Result<()> {
    match dist {
        DistributionSpec::Gamma { shape, scale } if !(*shape > 0.0 && *scale > 0.0) => Err(
            DsopError::UnsupportedDistribution(format!("gamma({shape}, {scale}) on edge {} -> {}", edge.from, edge.to)),
        ),
        DistributionSpec::Discrete { outcomes } if outcomes.is_empty() => Err(DsopError::UnsupportedDistribution(
            format!("empty discrete distribution on edge {} -> {}", edge.from, edge.to),
        )),
        _ => Ok(()),
    }
}

fn trimmed(mut values: Vec<f64>) -> Template {
    for v in values.iter_mut() {
        if *v < TRIM {
            *v = 0.0;
        }
    }
    let Some(first) = values.iter().position(|&v| v > 0.0) else {
        return Template {
            first: 0,
            values: Vec::new(),
        };
    };
    let last = values.iter().rposition(|&v| v > 0.0).unwrap();
    Template {
        first,
        values: values[first..=last].to_vec(),
    }
}

/// `t / w`, snapped to the nearest integer when it is one up to rounding, so
/// that outcomes on the grid do not straddle two ranges.
fn grid_units(t: f64, w: f64) -> f64 {
    let u = t / w;
    let r = u.round();
    if (u - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        u
    }
}

/// `values[d] = min over δ in [0, 1) of P(d - δ <= X/w < d + 1 - δ)`,
/// where `δ` is how far, in ranges, the departure sits into its source range.
fn discrete_template(outcomes: &[Outcome], grid: &RangeGrid) -> Vec<f64> {
    let n = grid.count();
    let units: Vec<(f64, f64)> = outcomes
        .iter()
        .map(|o| (grid_units(o.time, grid.width()), o.prob))
        .collect();
    let mut values = vec![0.0; n];
    let (umin, umax) = units
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(u, _)| {
            (lo.min(u), hi.max(u))
        });
    let d_lo = (umin.floor().max(0.0) as usize).min(n);
    let d_hi = (umax.ceil().max(0.0) as usize + 1).min(n);
    let mut cuts = Vec::with_capacity(2 * units.len() + 2);
    for (d, slot) in values.iter_mut().enumerate().take(d_hi).skip(d_lo) {
        let lo = d as f64;
        let hi = lo + 1.0;
        cuts.clear();
        cuts.push(0.0);
        for &(u, _) in &units {
            for edge in [lo, hi] {
                let delta = edge - u;
                if delta > 0.0 && delta < 1.0 {
                    cuts.push(delta);
                }
            }
        }
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let window_mass = |delta: f64| -> f64 {
            units
                .iter()
                .filter(|&&(u, _)| u >= lo - delta && u < hi - delta)
                .map(|&(_, p)| p)
                .sum()
        };
        *slot = cuts
            .windows(2)
            .map(|c| window_mass(0.5 * (c[0] + c[1])))
            .fold(f64::INFINITY, f64::min);
    }
    values
}

/// `P(X >= ranges·w)`, the mass that overflows from the left end of a row
/// `ranges` short of the deadline.
fn overflow_mass(dist: &DistributionSpec, ranges: usize, w: f64) -> f64 {
    match dist {
        DistributionSpec::Discrete { outcomes } => outcomes
            .iter()
            .filter(|o| grid_units(o.time, w) >= ranges as f64)
            .map(|o| o.prob)
            .sum::<f64>()
            .min(1.0),
        _ => (1.0 - dist.cdf_below(ranges as f64 * w)).max(0.0),
    }
}

fn continuous_template(dist: &DistributionSpec, grid: &RangeGrid, interior_probes: usize) -> Vec<f64> {
    let n = grid.count();
    let w = grid.width();
    let steps = interior_probes + 1;
    let mut values = vec![f64::INFINITY; n];
    let mut cdf = vec![0.0; n + 1];
    for s in 0..=steps {
        let delta = w * s as f64 / steps as f64;
        for (d, c) in cdf.iter_mut().enumerate() {
            *c = dist.cdf(d as f64 * w - delta);
        }
        for (d, v) in values.iter_mut().enumerate() {
            *v = v.min((cdf[d + 1] - cdf[d]).max(0.0));
        }
    }
    values
}

/// Grid plus one transition matrix per instance edge.
#[derive(Debug, Clone)]
pub struct MatrixPropagator<'a> {
    instance: &'a Instance,
    grid: RangeGrid,
    start_time: f64,
    matrices: Vec<TransitionMatrix>,
}

impl<'a> MatrixPropagator<'a> {
    pub fn new(instance: &'a Instance, request: &SolveRequest, config: &SearchConfig) -> Result<Self> {
        let grid = RangeGrid::build(request, instance, config.range_count, config.max_grid_refinement)?;
        Self::with_grid(instance, request, grid, config.interior_probes)
    }

    pub fn with_grid(
        instance: &'a Instance,
        request: &SolveRequest,
        grid: RangeGrid,
        interior_probes: usize,
    ) -> Result<Self> {
        if (grid.deadline() - request.deadline).abs() > 1e-12 * request.deadline {
            return Err(DsopError::Config(format!(
                "grid built for deadline {} used with deadline {}",
                grid.deadline(),
                request.deadline
            )));
        }
        let matrices = instance
            .edges()
            .iter()
            .map(|e| edge_transition_matrix(e, &grid, interior_probes))
            .collect::<Result<Vec<_>>>()?;
        Ok(MatrixPropagator {
            instance,
            grid,
            start_time: request.start_time,
            matrices,
        })
    }

    pub fn grid(&self) -> &RangeGrid {
        &self.grid
    }

    pub fn matrix(&self, from: VertexId, to: VertexId) -> Option<&TransitionMatrix> {
        self.instance.edge_id(from, to).map(|i| &self.matrices[i])
    }

    /// On-time mass: every regular range ends at or before the deadline.
    pub fn on_time_mass(dist: &[f64]) -> f64 {
        dist[..dist.len() - 1].iter().sum()
    }
}

impl Propagator for MatrixPropagator<'_> {
    type State = ArrivalDistribution;

    fn method(&self) -> Method {
        Method::Matrix
    }

    fn instance(&self) -> &Instance {
        self.instance
    }

    fn initial(&self) -> ArrivalDistribution {
        let mut dist = vec![0.0; self.grid.dim()];
        dist[self.grid.range_of(self.start_time)] = 1.0;
        dist
    }

    fn advance(&self, state: &ArrivalDistribution, from: VertexId, to: VertexId) -> ArrivalDistribution {
        match self.matrix(from, to) {
            Some(m) => m.apply(state),
            None => {
                let mut late = vec![0.0; state.len()];
                *late.last_mut().unwrap() = state.iter().sum();
                late
            }
        }
    }

    fn estimate(&self, state: &ArrivalDistribution) -> ProbabilityEstimate {
        ProbabilityEstimate::new(Self::on_time_mass(state).clamp(0.0, 1.0), Method::Matrix)
    }

    fn below_floor(&self, state: &ArrivalDistribution, floor: f64) -> bool {
        Self::on_time_mass(state) < floor - MATRIX_FLOOR_SLACK
    }
}

/// Matrix-method completion probability of `path`; every edge must exist.
pub fn matrix_completion_probability(propagator: &MatrixPropagator<'_>, path: &Path) -> Result<ProbabilityEstimate> {
    for w in path.vertices().windows(2) {
        if propagator.matrix(w[0], w[1]).is_none() {
            return Err(DsopError::MissingEdge { from: w[0], to: w[1] });
        }
    }
    Ok(propagator.evaluate(path.vertices()))
}
