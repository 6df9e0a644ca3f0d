//! Exact best/second-best search over a uniform grid of buckets.
//!
//! Units are bucketed by position inside a fixed domain box; positions
//! outside the box fall into the border buckets, which are treated as
//! extending to infinity. A query visits buckets in rings of growing
//! Chebyshev radius around the sample's bucket and stops once no unvisited
//! bucket can hold a unit at or below the current second-best distance.
//! Distances are computed exactly as the linear scan computes them and
//! candidates are ordered by `(distance, index)`, so results are identical to
//! an exhaustive scan with lowest-index tie-breaking.

use crate::lattice::UnitId;

#[derive(Debug, Clone)]
pub(crate) struct Grid<const D: usize> {
    lo: [f64; D],
    cell: [f64; D],
    /// Per-axis allowance for rounding in bucket assignment.
    slack: [f64; D],
    dims: [usize; D],
    buckets: Vec<Vec<u32>>,
    unit_bucket: Vec<u32>,
    unit_slot: Vec<u32>,
}

#[inline(always)]
fn sq_dist<const D: usize>(s: &[f64; D], w: &[f64]) -> f64 {
    let mut d = 0.0;
    for k in 0..D {
        let diff = s[k] - w[k];
        d += diff * diff;
    }
    d
}

#[inline(always)]
fn offer(j: u32, d: f64, best: &mut (f64, u32), second: &mut (f64, u32)) {
    if d > second.0 {
        return;
    }
    if (d, j) < *best {
        *second = *best;
        *best = (d, j);
    } else if (d, j) < *second {
        *second = (d, j);
    }
}

impl<const D: usize> Grid<D> {
    /// Buckets `weights` (flattened, `D` values per unit) over `[min, max]`
    /// using about `units_per_bucket` units per bucket.
    pub(crate) fn build(weights: &[f64], min: &[f64], max: &[f64], units_per_bucket: f64) -> Self {
        let n = weights.len() / D;
        let per_axis = ((n as f64 / units_per_bucket).powf(1.0 / D as f64).round() as usize).max(1);
        let mut lo = [0.0; D];
        let mut cell = [0.0; D];
        let mut slack = [0.0; D];
        let mut dims = [per_axis; D];
        for k in 0..D {
            lo[k] = min[k];
            let span = max[k] - min[k];
            if span > 0.0 {
                cell[k] = span / per_axis as f64;
            } else {
                cell[k] = 1.0;
                dims[k] = 1;
            }
            slack[k] = 1e-9 * (cell[k] + min[k].abs() + max[k].abs());
        }
        let total: usize = dims.iter().product();
        let mut grid = Self {
            lo,
            cell,
            slack,
            dims,
            buckets: vec![Vec::new(); total],
            unit_bucket: vec![0; n],
            unit_slot: vec![0; n],
        };
        for j in 0..n {
            let b = grid.bucket_of(&weights[j * D..(j + 1) * D]);
            grid.insert(j as u32, b);
        }
        grid
    }

    #[inline]
    fn coord_of(&self, p: &[f64]) -> [usize; D] {
        let mut c = [0; D];
        for k in 0..D {
            let t = (p[k] - self.lo[k]) / self.cell[k];
            // truncation is floor for t >= 0; NaN and negatives go to bucket 0
            c[k] = if t >= 0.0 {
                (t as usize).min(self.dims[k] - 1)
            } else {
                0
            };
        }
        c
    }

    #[inline]
    fn flat(&self, c: &[usize; D]) -> usize {
        let mut idx = 0;
        for (&n, &ck) in self.dims.iter().zip(c) {
            idx = idx * n + ck;
        }
        idx
    }

    #[inline]
    fn bucket_of(&self, p: &[f64]) -> u32 {
        self.flat(&self.coord_of(p)) as u32
    }

    fn insert(&mut self, j: u32, b: u32) {
        let bucket = &mut self.buckets[b as usize];
        self.unit_bucket[j as usize] = b;
        self.unit_slot[j as usize] = bucket.len() as u32;
        bucket.push(j);
    }

    fn remove(&mut self, j: u32) {
        let b = self.unit_bucket[j as usize] as usize;
        let slot = self.unit_slot[j as usize] as usize;
        let bucket = &mut self.buckets[b];
        bucket.swap_remove(slot);
        if let Some(&moved) = bucket.get(slot) {
            self.unit_slot[moved as usize] = slot as u32;
        }
    }

    /// Re-buckets unit `j` after its weight changed to `w`.
    #[inline]
    pub(crate) fn relocate(&mut self, j: UnitId, w: &[f64]) {
        let b = self.bucket_of(w);
        if b != self.unit_bucket[j] {
            self.remove(j as u32);
            self.insert(j as u32, b);
        }
    }

    /// Squared distance from `s` to the region of bucket coordinate `c`.
    #[inline]
    fn bucket_bound(&self, s: &[f64; D], c: &[usize; D]) -> f64 {
        let mut lb = 0.0;
        for k in 0..D {
            let lower = self.lo[k] + c[k] as f64 * self.cell[k];
            let upper = self.lo[k] + (c[k] + 1) as f64 * self.cell[k];
            let gap = if c[k] > 0 && s[k] < lower {
                lower - s[k]
            } else if c[k] + 1 < self.dims[k] && s[k] > upper {
                s[k] - upper
            } else {
                0.0
            };
            let gap = (gap - self.slack[k]).max(0.0);
            lb += gap * gap;
        }
        lb
    }

    /// Squared distance from `s` to anything outside the block of buckets
    /// within Chebyshev radius `r` of `center`; `None` when that block already
    /// covers the grid.
    #[inline]
    fn outside_bound(&self, s: &[f64; D], center: &[usize; D], r: usize) -> Option<f64> {
        let mut nearest = f64::INFINITY;
        for k in 0..D {
            // a lower face exists only when the block stops short of bucket 0
            if center[k] > r {
                let face = self.lo[k] + (center[k] - r) as f64 * self.cell[k];
                nearest = nearest.min((s[k] - face - self.slack[k]).max(0.0));
            }
            if center[k] + r + 1 < self.dims[k] {
                let face = self.lo[k] + (center[k] + r + 1) as f64 * self.cell[k];
                nearest = nearest.min((face - s[k] - self.slack[k]).max(0.0));
            }
        }
        nearest.is_finite().then_some(nearest * nearest)
    }

    /// Best and second-best units for `sample`, with their squared distances.
    pub(crate) fn search(&self, weights: &[f64], sample: &[f64]) -> (UnitId, f64, UnitId, f64) {
        let s: [f64; D] = sample.try_into().expect("sample dimension checked by caller");
        let center = self.coord_of(&s);
        let mut best = (f64::INFINITY, u32::MAX);
        let mut second = (f64::INFINITY, u32::MAX);
        let mut r = 0usize;
        loop {
            self.visit_ring(&s, &center, r, weights, &mut best, &mut second);
            match self.outside_bound(&s, &center, r) {
                None => break,
                Some(bound) if bound > second.0 => break,
                Some(_) => r += 1,
            }
        }
        (best.1 as usize, best.0, second.1 as usize, second.0)
    }

    fn visit_ring(
        &self,
        s: &[f64; D],
        center: &[usize; D],
        r: usize,
        weights: &[f64],
        best: &mut (f64, u32),
        second: &mut (f64, u32),
    ) {
        let mut lo = [0usize; D];
        let mut hi = [0usize; D];
        for k in 0..D {
            lo[k] = center[k].saturating_sub(r);
            hi[k] = (center[k] + r).min(self.dims[k] - 1);
        }
        let mut c = lo;
        loop {
            let on_ring = (0..D).any(|k| c[k].abs_diff(center[k]) == r);
            if on_ring && self.bucket_bound(s, &c) <= second.0 {
                for &j in &self.buckets[self.flat(&c)] {
                    let w = &weights[j as usize * D..(j as usize + 1) * D];
                    offer(j, sq_dist(s, w), best, second);
                }
            }
            // odometer increment over the clipped block
            let mut k = D;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if c[k] < hi[k] {
                    c[k] += 1;
                    break;
                }
                c[k] = lo[k];
            }
        }
    }
}

/// Grid index for the supported sample-space dimensions.
#[derive(Debug, Clone)]
pub(crate) enum GridIndex {
    D2(Grid<2>),
    D3(Grid<3>),
}

impl GridIndex {
    pub(crate) fn build(dim: usize, weights: &[f64], min: &[f64], max: &[f64]) -> Option<Self> {
        const UNITS_PER_BUCKET: f64 = 4.0;
        match dim {
            2 => Some(GridIndex::D2(Grid::build(weights, min, max, UNITS_PER_BUCKET))),
            3 => Some(GridIndex::D3(Grid::build(weights, min, max, UNITS_PER_BUCKET))),
            _ => None,
        }
    }

    #[inline]
    pub(crate) fn search(&self, weights: &[f64], sample: &[f64]) -> (UnitId, f64, UnitId, f64) {
        match self {
            GridIndex::D2(g) => g.search(weights, sample),
            GridIndex::D3(g) => g.search(weights, sample),
        }
    }

    #[inline]
    pub(crate) fn relocate(&mut self, j: UnitId, w: &[f64]) {
        match self {
            GridIndex::D2(g) => g.relocate(j, w),
            GridIndex::D3(g) => g.relocate(j, w),
        }
    }
}
