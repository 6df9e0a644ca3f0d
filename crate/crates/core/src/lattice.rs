//! Fixed rectangular unit lattice with 4-connected adjacency.

use serde::{Deserialize, Serialize};

use crate::error::SomError;

/// Index of a map unit, row-major over the lattice.
pub type UnitId = usize;

/// A `rows × cols` lattice. Units are numbered row-major; two units are
/// neighbors when their lattice coordinates differ by one along exactly one
/// axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGraph {
    rows: usize,
    cols: usize,
}

impl LatticeGraph {
    pub fn new(rows: usize, cols: usize) -> Result<Self, SomError> {
        if rows == 0 || cols == 0 {
            return Err(SomError::InvalidInput(format!(
                "lattice dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols })
    }

    /// Square lattice with `side × side` units.
    pub fn square(side: usize) -> Result<Self, SomError> {
        Self::new(side, side)
    }

    /// Square lattice holding exactly `n` units; `n` must be a perfect square.
    pub fn square_with_units(n: usize) -> Result<Self, SomError> {
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n || n == 0 {
            return Err(SomError::InvalidInput(format!(
                "unit count {n} is not a perfect square"
            )));
        }
        Self::square(side)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn unit_count(&self) -> usize {
        self.rows * self.cols
    }

    /// `(row, col)` of a unit.
    #[inline]
    pub fn coords(&self, unit: UnitId) -> (usize, usize) {
        (unit / self.cols, unit % self.cols)
    }

    #[inline]
    pub fn unit_at(&self, row: usize, col: usize) -> UnitId {
        row * self.cols + col
    }

    /// Manhattan distance between lattice coordinates.
    #[inline]
    pub fn graph_distance(&self, a: UnitId, b: UnitId) -> usize {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb) + ca.abs_diff(cb)
    }

    #[inline]
    pub fn are_neighbors(&self, a: UnitId, b: UnitId) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        hi < self.unit_count() && (hi - lo == self.cols || (hi - lo == 1 && hi % self.cols != 0))
    }

    /// Lattice neighbors of `unit` (two to four of them), in ascending index order.
    pub fn neighbors(&self, unit: UnitId) -> impl Iterator<Item = UnitId> {
        let (r, c) = self.coords(unit);
        let cols = self.cols;
        let up = (r > 0).then(|| unit - cols);
        let left = (c > 0).then(|| unit - 1);
        let right = (c + 1 < cols).then(|| unit + 1);
        let down = (r + 1 < self.rows).then(|| unit + cols);
        [up, left, right, down].into_iter().flatten()
    }

    /// Every lattice edge once, as `(lower, higher)` unit pairs.
    pub fn edges(&self) -> Vec<(UnitId, UnitId)> {
        let mut out = Vec::with_capacity(2 * self.unit_count());
        for r in 0..self.rows {
            for c in 0..self.cols {
                let u = self.unit_at(r, c);
                if c + 1 < self.cols {
                    out.push((u, u + 1));
                }
                if r + 1 < self.rows {
                    out.push((u, u + self.cols));
                }
            }
        }
        out
    }

    /// Largest graph distance between any two units.
    pub fn diameter(&self) -> usize {
        (self.rows - 1) + (self.cols - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn row_major_layout() {
        let g = LatticeGraph::new(3, 4).unwrap();
        assert_eq!(g.unit_count(), 12);
        assert_eq!(g.coords(5), (1, 1));
        assert_eq!(g.unit_at(2, 3), 11);
    }

    #[test]
    fn neighbor_sets() {
        let g = LatticeGraph::square(3).unwrap();
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(g.neighbors(4).collect::<Vec<_>>(), vec![1, 3, 5, 7]);
        assert_eq!(g.neighbors(8).collect::<Vec<_>>(), vec![5, 7]);
        for u in 0..9 {
            for v in g.neighbors(u) {
                assert_eq!(g.graph_distance(u, v), 1);
            }
        }
    }

    #[test]
    fn edge_count() {
        let g = LatticeGraph::new(3, 4).unwrap();
        // 3 rows of 3 horizontal edges, 2 rows of 4 vertical edges
        assert_eq!(g.edges().len(), 9 + 8);
        assert!(g.edges().iter().all(|&(a, b)| a < b && g.are_neighbors(a, b)));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(LatticeGraph::new(0, 3).is_err());
        assert!(LatticeGraph::square_with_units(50).is_err());
        assert_eq!(LatticeGraph::square_with_units(400).unwrap().rows(), 20);
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(rows in 1usize..12, cols in 1usize..12, seed in any::<(u16, u16, u16)>()) {
            let g = LatticeGraph::new(rows, cols).unwrap();
            let n = g.unit_count();
            let (a, b, c) = (seed.0 as usize % n, seed.1 as usize % n, seed.2 as usize % n);
            prop_assert_eq!(g.graph_distance(a, a), 0);
            prop_assert_eq!(g.graph_distance(a, b), g.graph_distance(b, a));
            prop_assert!(g.graph_distance(a, c) <= g.graph_distance(a, b) + g.graph_distance(b, c));
        }

        #[test]
        fn adjacency_is_unit_distance(rows in 1usize..12, cols in 1usize..12, seed in any::<(u16, u16)>()) {
            let g = LatticeGraph::new(rows, cols).unwrap();
            let n = g.unit_count();
            let (a, b) = (seed.0 as usize % n, seed.1 as usize % n);
            prop_assert_eq!(g.are_neighbors(a, b), g.graph_distance(a, b) == 1);
        }
    }
}
