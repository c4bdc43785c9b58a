use crate::error::{DsopError, Result};
use crate::model::{Instance, SolveRequest};

const ALIGN_TOLERANCE: f64 = 1e-9;

/// One global discretization of arrival times: `count` ranges of equal width
/// covering `[0, H)`, plus an absorbing overflow range `[H, ∞)` with index
/// `count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeGrid {
    width: f64,
    count: usize,
    deadline: f64,
}

impl RangeGrid {
    pub fn uniform(deadline: f64, count: usize) -> Self {
        assert!(count > 0 && deadline > 0.0);
        RangeGrid {
            width: deadline / count as f64,
            count,
            deadline,
        }
    }

    /// Builds a grid for `request.deadline` with `range_count` ranges,
    /// multiplying the count by the smallest factor up to `max_refinement`
    /// that puts every band boundary below the deadline on a grid boundary.
    pub fn build(
        request: &SolveRequest,
        instance: &Instance,
        range_count: usize,
        max_refinement: usize,
    ) -> Result<Self> {
        if range_count == 0 {
            return Err(DsopError::Config("range count must be positive".into()));
        }
        let deadline = request.deadline;
        let mut offending = None;
        for factor in 1..=max_refinement.max(1) {
            let grid = RangeGrid::uniform(deadline, range_count * factor);
            offending = instance
                .band_boundaries(deadline)
                .find(|&(_, _, start)| grid.boundary_index(start).is_none());
            if offending.is_none() {
                return Ok(grid);
            }
        }
        let (ei, bi, start) = offending.expect("loop ran at least once");
        let e = &instance.edges()[ei];
        Err(DsopError::Config(format!(
            "band {bi} of edge {} -> {} starts at {start}, which no grid of up to {} x {range_count} ranges over [0, {deadline}) can align with",
            e.from, e.to, max_refinement
        )))
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Number of regular (non-overflow) ranges.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    /// Index of the overflow range.
    pub fn overflow(&self) -> usize {
        self.count
    }

    /// Dimension of arrival distributions and transition matrices.
    pub fn dim(&self) -> usize {
        self.count + 1
    }

    /// `[lo, hi)` of range `r`; the overflow range ends at infinity.
    pub fn bounds(&self, r: usize) -> (f64, f64) {
        if r >= self.count {
            (self.deadline, f64::INFINITY)
        } else {
            (r as f64 * self.width, (r + 1) as f64 * self.width)
        }
    }

    /// Range containing time `t`. Times within rounding of a boundary are
    /// placed in the later range.
    pub fn range_of(&self, t: f64) -> usize {
        if t >= self.deadline {
            return self.count;
        }
        let x = t / self.width;
        let mut r = x.floor();
        if (r + 1.0 - x).abs() <= ALIGN_TOLERANCE * x.max(1.0) {
            r += 1.0;
        }
        (r.max(0.0) as usize).min(self.count)
    }

    /// Grid boundary index of `t`, if `t` sits on a boundary.
    pub fn boundary_index(&self, t: f64) -> Option<usize> {
        let x = t / self.width;
        let r = x.round();
        ((x - r).abs() <= ALIGN_TOLERANCE * x.max(1.0) && r >= 0.0).then_some(r as usize)
    }
}

/// Grid for a request, with the default refinement cap.
pub fn build_range_grid(request: &SolveRequest, instance: &Instance, range_count: usize) -> Result<RangeGrid> {
    RangeGrid::build(request, instance, range_count, 64)
}
