//! Map state and the per-sample competitive-learning step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::BoundingBox;
use crate::error::SomError;
use crate::index::GridIndex;
use crate::lattice::{LatticeGraph, UnitId};
use crate::rate::{rate_classical, rate_fnnsom, rate_nnsom, RatePolicy};

/// Default decay of the per-unit running error estimates.
pub const DEFAULT_EMA_DECAY: f64 = 0.999;

/// How unit weights are placed before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Every unit at the coordinate origin.
    Sic,
    /// Units drawn uniformly over the dataset's bounding box.
    Ric,
}

impl InitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitMode::Sic => "sic",
            InitMode::Ric => "ric",
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sic" => Ok(InitMode::Sic),
            "ric" => Ok(InitMode::Ric),
            other => Err(SomError::InvalidInput(format!(
                "unknown init mode '{other}', expected sic or ric"
            ))),
        }
    }
}

/// Initial weights for `n` units, flattened row-major (`n * domain.dim()` values).
///
/// `n` must be a perfect square of at least 4.
pub fn init_weights<R: Rng + ?Sized>(
    mode: InitMode,
    n: usize,
    domain: &BoundingBox,
    rng: &mut R,
) -> Result<Vec<f64>, SomError> {
    if n < 4 || LatticeGraph::square_with_units(n).is_err() {
        return Err(SomError::InvalidInput(format!(
            "unit count {n} must be a perfect square >= 4"
        )));
    }
    let dim = domain.dim();
    Ok(match mode {
        InitMode::Sic => vec![0.0; n * dim],
        InitMode::Ric => {
            let mut w = Vec::with_capacity(n * dim);
            for _ in 0..n {
                for (lo, hi) in domain.min().iter().zip(domain.max()) {
                    let u: f64 = rng.random();
                    w.push(lo + (hi - lo) * u);
                }
            }
            w
        }
    })
}

/// Outcome of presenting one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub bmu: UnitId,
    pub second: UnitId,
    /// Distance from the sample to the BMU weight before the update.
    pub quantization: f64,
    /// Set when the second-best unit is not a lattice neighbor of the BMU.
    pub alfa_defect: bool,
}

/// Unit weights plus per-unit running error estimates.
///
/// A state is owned by one training loop at a time; independent states can be
/// trained on separate threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapState {
    dim: usize,
    weights: Vec<f64>,
    q_ema: Vec<f64>,
    alfa_ema: Vec<f64>,
    bmu_hits: Vec<u64>,
    ema_decay: f64,
    /// Sum of `q_ema` over units with at least one hit.
    hit_q_sum: f64,
    hit_units: usize,
    #[serde(skip)]
    rate_buf: Vec<(UnitId, f64)>,
    #[serde(skip)]
    index: SearchIndex,
}

/// Optional spatial index; never part of equality or serialized state.
#[derive(Debug, Clone, Default)]
struct SearchIndex(Option<GridIndex>);

impl PartialEq for SearchIndex {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl MapState {
    /// Builds a state from flattened weights (`n * dim` values).
    pub fn new(weights: Vec<f64>, dim: usize, ema_decay: f64) -> Result<Self, SomError> {
        if dim == 0 || !weights.len().is_multiple_of(dim) {
            return Err(SomError::InvalidInput(format!(
                "{} weight values do not split into vectors of dimension {dim}",
                weights.len()
            )));
        }
        if weights.len() / dim < 2 {
            return Err(SomError::InvalidInput("a map needs at least 2 units".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(SomError::InvalidInput(format!("non-finite weight {bad}")));
        }
        if !(ema_decay > 0.0 && ema_decay < 1.0) {
            return Err(SomError::InvalidInput(format!(
                "EMA decay must lie in (0, 1), got {ema_decay}"
            )));
        }
        let n = weights.len() / dim;
        Ok(Self {
            dim,
            weights,
            q_ema: vec![0.0; n],
            alfa_ema: vec![0.0; n],
            bmu_hits: vec![0; n],
            ema_decay,
            hit_q_sum: 0.0,
            hit_units: 0,
            rate_buf: Vec::new(),
            index: SearchIndex::default(),
        })
    }

    /// Builds a state from one weight vector per unit.
    pub fn from_units(units: &[Vec<f64>], ema_decay: f64) -> Result<Self, SomError> {
        let dim = units.first().map_or(0, Vec::len);
        if units.iter().any(|u| u.len() != dim) {
            return Err(SomError::InvalidInput("ragged unit weights".into()));
        }
        Self::new(units.concat(), dim, ema_decay)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unit_count(&self) -> usize {
        self.bmu_hits.len()
    }

    /// Flattened weights, `unit_count() * dim()` values.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, unit: UnitId) -> &[f64] {
        &self.weights[unit * self.dim..(unit + 1) * self.dim]
    }

    pub fn q_ema(&self) -> &[f64] {
        &self.q_ema
    }

    pub fn alfa_ema(&self) -> &[f64] {
        &self.alfa_ema
    }

    pub fn bmu_hits(&self) -> &[u64] {
        &self.bmu_hits
    }

    pub fn ema_decay(&self) -> f64 {
        self.ema_decay
    }

    /// Switches BMU search to a bucket grid laid over `domain`. Results are
    /// identical to the linear scan; only the cost changes. Returns `false`
    /// (and keeps scanning) when the dimension is not 2 or 3 or the domain does
    /// not match the map.
    pub fn enable_grid_index(&mut self, domain: &BoundingBox) -> bool {
        if domain.dim() != self.dim {
            return false;
        }
        self.index = SearchIndex(GridIndex::build(self.dim, &self.weights, domain.min(), domain.max()));
        self.index.0.is_some()
    }

    pub fn has_grid_index(&self) -> bool {
        self.index.0.is_some()
    }

    /// Overwrites the error estimates of one unit and marks it hit `hits` times.
    /// Intended for constructing fixtures.
    pub fn set_unit_errors(&mut self, unit: UnitId, q: f64, alfa: f64, hits: u64) {
        assert!(q >= 0.0 && (0.0..=1.0).contains(&alfa));
        if self.bmu_hits[unit] > 0 {
            self.hit_q_sum -= self.q_ema[unit];
            self.hit_units -= 1;
        }
        self.q_ema[unit] = q;
        self.alfa_ema[unit] = alfa;
        self.bmu_hits[unit] = hits;
        if hits > 0 {
            self.hit_q_sum += q;
            self.hit_units += 1;
        }
    }

    /// Quantization estimate of `unit`, or the mean over hit units while `unit`
    /// has never won. `None` before any unit has won.
    pub fn effective_q(&self, unit: UnitId) -> Option<f64> {
        if self.bmu_hits[unit] > 0 {
            Some(self.q_ema[unit])
        } else if self.hit_units > 0 {
            Some((self.hit_q_sum / self.hit_units as f64).max(0.0))
        } else {
            None
        }
    }

    fn check_sample(&self, sample: &[f64]) -> Result<(), SomError> {
        if sample.len() != self.dim {
            return Err(SomError::DimensionMismatch {
                expected: self.dim,
                actual: sample.len(),
            });
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(SomError::InvalidInput("sample has non-finite coordinates".into()));
        }
        Ok(())
    }

    /// Best and second-best matching units by squared Euclidean distance.
    /// Ties go to the lower unit index.
    pub fn find_bmu(&self, sample: &[f64]) -> Result<(UnitId, UnitId), SomError> {
        if sample.len() != self.dim {
            return Err(SomError::DimensionMismatch {
                expected: self.dim,
                actual: sample.len(),
            });
        }
        let (b, _, s, _) = self.scan(sample);
        Ok((b, s))
    }

    #[inline]
    fn scan(&self, sample: &[f64]) -> (UnitId, f64, UnitId, f64) {
        if let Some(index) = &self.index.0 {
            return index.search(&self.weights, sample);
        }
        match self.dim {
            2 => scan_fixed::<2>(&self.weights, sample),
            3 => scan_fixed::<3>(&self.weights, sample),
            _ => scan_dyn(&self.weights, sample, self.dim),
        }
    }

    /// Presents one sample: finds the BMU pair, computes every rate from the
    /// current state, updates the BMU's running errors, then moves the weights.
    ///
    /// `iter` is the training iteration (only the classical schedule reads it).
    pub fn apply_sample(
        &mut self,
        policy: &RatePolicy,
        graph: &LatticeGraph,
        sample: &[f64],
        iter: u64,
    ) -> Result<SampleRecord, SomError> {
        self.check_sample(sample)?;
        if graph.unit_count() != self.unit_count() {
            return Err(SomError::InvalidInput(format!(
                "lattice has {} units, map has {}",
                graph.unit_count(),
                self.unit_count()
            )));
        }
        let (bmu, d2, second, _) = self.scan(sample);
        let quantization = d2.sqrt();
        let alfa_defect = !graph.are_neighbors(bmu, second);

        let mut rates = std::mem::take(&mut self.rate_buf);
        rates.clear();
        match policy {
            RatePolicy::Nnsom { l_zeta } => {
                rates.push((bmu, rate_nnsom(*l_zeta, 0)));
                rates.extend(graph.neighbors(bmu).map(|j| (j, rate_nnsom(*l_zeta, 1))));
            }
            RatePolicy::Fnnsom(params) => {
                rates.push((bmu, rate_fnnsom(params, self, bmu, bmu, graph)));
                rates.extend(
                    graph
                        .neighbors(bmu)
                        .map(|j| (j, rate_fnnsom(params, self, j, bmu, graph))),
                );
            }
            RatePolicy::Classical(schedule) => {
                rates.extend(
                    (0..self.unit_count()).map(|j| (j, rate_classical(schedule, iter, graph.graph_distance(j, bmu)))),
                );
            }
        }

        self.record_hit(bmu, quantization, alfa_defect);

        for &(j, r) in &rates {
            if r == 0.0 {
                continue;
            }
            let w = &mut self.weights[j * self.dim..(j + 1) * self.dim];
            for (wk, &sk) in w.iter_mut().zip(sample) {
                let moved = *wk + r * (sk - *wk);
                // keep the step convex under rounding
                *wk = moved.clamp(wk.min(sk), wk.max(sk));
            }
            if let Some(index) = &mut self.index.0 {
                index.relocate(j, &self.weights[j * self.dim..(j + 1) * self.dim]);
            }
        }
        self.rate_buf = rates;

        Ok(SampleRecord {
            bmu,
            second,
            quantization,
            alfa_defect,
        })
    }

    /// EMA update of the BMU's errors; the first hit seeds the estimates with
    /// the observation.
    fn record_hit(&mut self, bmu: UnitId, quantization: f64, alfa_defect: bool) {
        let indicator = if alfa_defect { 1.0 } else { 0.0 };
        let beta = self.ema_decay;
        if self.bmu_hits[bmu] == 0 {
            self.q_ema[bmu] = quantization;
            self.alfa_ema[bmu] = indicator;
            self.hit_units += 1;
            self.hit_q_sum += quantization;
        } else {
            let old = self.q_ema[bmu];
            let q = ema(beta, old, quantization);
            self.q_ema[bmu] = q;
            self.hit_q_sum += q - old;
            self.alfa_ema[bmu] = ema(beta, self.alfa_ema[bmu], indicator).clamp(0.0, 1.0);
        }
        self.bmu_hits[bmu] += 1;
    }
}

/// One step of `beta * prev + (1 - beta) * obs`.
#[inline]
pub fn ema(beta: f64, prev: f64, obs: f64) -> f64 {
    beta * prev + (1.0 - beta) * obs
}

#[inline(always)]
fn offer(j: UnitId, d: f64, best: &mut (UnitId, f64), second: &mut (UnitId, f64)) {
    if d < best.1 {
        *second = *best;
        *best = (j, d);
    } else if d < second.1 {
        *second = (j, d);
    }
}

/// Scan in blocks of four units; a block is only inspected unit by unit when
/// its closest member beats the current second-best distance.
#[inline]
fn scan_fixed<const D: usize>(weights: &[f64], sample: &[f64]) -> (UnitId, f64, UnitId, f64) {
    let s: [f64; D] = sample.try_into().expect("sample dimension checked by caller");
    let mut best = (0, f64::INFINITY);
    let mut second = (0, f64::INFINITY);
    let blocks = weights.chunks_exact(4 * D);
    let tail = blocks.remainder();
    for (b, block) in blocks.enumerate() {
        let mut d = [0.0f64; 4];
        for (u, du) in d.iter_mut().enumerate() {
            for k in 0..D {
                let diff = s[k] - block[u * D + k];
                *du += diff * diff;
            }
        }
        if d[0].min(d[1]).min(d[2].min(d[3])) < second.1 {
            for (u, &du) in d.iter().enumerate() {
                offer(4 * b + u, du, &mut best, &mut second);
            }
        }
    }
    let base = (weights.len() - tail.len()) / D;
    for (u, w) in tail.chunks_exact(D).enumerate() {
        let mut d = 0.0;
        for k in 0..D {
            let diff = s[k] - w[k];
            d += diff * diff;
        }
        offer(base + u, d, &mut best, &mut second);
    }
    (best.0, best.1, second.0, second.1)
}

fn scan_dyn(weights: &[f64], sample: &[f64], dim: usize) -> (UnitId, f64, UnitId, f64) {
    let (mut best, mut best_d) = (0, f64::INFINITY);
    let (mut second, mut second_d) = (0, f64::INFINITY);
    for (j, w) in weights.chunks_exact(dim).enumerate() {
        let d: f64 = w.iter().zip(sample).map(|(a, b)| (b - a) * (b - a)).sum();
        if d < best_d {
            second = best;
            second_d = best_d;
            best = j;
            best_d = d;
        } else if d < second_d {
            second = j;
            second_d = d;
        }
    }
    (best, best_d, second, second_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(units: &[&[f64]]) -> MapState {
        let v: Vec<Vec<f64>> = units.iter().map(|u| u.to_vec()).collect();
        MapState::from_units(&v, 0.9).unwrap()
    }

    #[test]
    fn bmu_by_inspection() {
        let s = state(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(s.find_bmu(&[0.1, 0.0]).unwrap(), (0, 1));
    }

    #[test]
    fn bmu_tie_goes_to_lower_index() {
        let s = state(&[&[0.0, 0.0], &[0.0, 0.0], &[5.0, 5.0]]);
        assert_eq!(s.find_bmu(&[0.0, 0.0]).unwrap(), (0, 1));
        let s = state(&[&[5.0, 5.0], &[0.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(s.find_bmu(&[0.0, 0.0]).unwrap(), (1, 2));
    }

    #[test]
    fn bmu_dimension_mismatch() {
        let s = state(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert!(matches!(
            s.find_bmu(&[0.0, 0.0, 0.0]),
            Err(SomError::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn higher_dimension_uses_generic_scan() {
        let s = state(&[&[0.0; 5], &[1.0; 5], &[0.4; 5]]);
        assert_eq!(s.find_bmu(&[0.3; 5]).unwrap(), (2, 0));
    }

    #[test]
    fn midpoint_step() {
        let g = LatticeGraph::square(2).unwrap();
        let mut s = state(&[&[0.0, 0.0], &[9.0, 9.0], &[9.0, 9.0], &[9.0, 9.0]]);
        let p = RatePolicy::Nnsom { l_zeta: 0.5 };
        let rec = s.apply_sample(&p, &g, &[1.0, 0.0], 0).unwrap();
        assert_eq!(rec.bmu, 0);
        assert_eq!(rec.quantization, 1.0);
        assert_eq!(s.weight(0), &[0.5, 0.0]);
    }

    #[test]
    fn non_neighbors_untouched() {
        let g = LatticeGraph::square(3).unwrap();
        let units: Vec<Vec<f64>> = (0..9).map(|j| vec![(j % 3) as f64, (j / 3) as f64]).collect();
        let mut s = MapState::from_units(&units, 0.9).unwrap();
        let before = s.weights().to_vec();
        s.apply_sample(&RatePolicy::Nnsom { l_zeta: 0.7 }, &g, &[0.1, 0.1], 0)
            .unwrap();
        for j in [2, 4, 5, 6, 7, 8] {
            assert_eq!(s.weight(j), &before[2 * j..2 * j + 2]);
        }
        assert_ne!(s.weight(1), &before[2..4]);
    }

    #[test]
    fn ema_recurrence() {
        assert_relative_eq!(ema(0.9, 1.0, 0.5), 0.95, max_relative = 1e-15);
        let g = LatticeGraph::square(2).unwrap();
        let mut s = state(&[&[0.0, 0.0], &[5.0, 0.0], &[0.0, 5.0], &[5.0, 5.0]]);
        s.set_unit_errors(0, 1.0, 0.0, 3);
        s.apply_sample(&RatePolicy::Nnsom { l_zeta: 0.1 }, &g, &[0.5, 0.0], 0)
            .unwrap();
        assert_relative_eq!(s.q_ema()[0], 0.95, max_relative = 1e-15);
        assert_eq!(s.bmu_hits()[0], 4);
    }

    #[test]
    fn first_hit_seeds_estimates() {
        let g = LatticeGraph::square(2).unwrap();
        let mut s = state(&[&[0.0, 0.0], &[5.0, 0.0], &[0.0, 5.0], &[5.0, 5.0]]);
        let rec = s
            .apply_sample(&RatePolicy::Nnsom { l_zeta: 0.1 }, &g, &[4.0, 4.0], 0)
            .unwrap();
        assert_eq!((rec.bmu, rec.alfa_defect), (3, false));
        assert_relative_eq!(s.q_ema()[3], 2f64.sqrt());
        assert_eq!(s.effective_q(0), Some(s.q_ema()[3]));
    }

    #[test]
    fn alfa_indicator_uses_lattice_adjacency() {
        let g = LatticeGraph::square(2).unwrap();
        // unit 3 sits next to unit 0 in sample space but is its lattice diagonal
        let mut s = state(&[&[0.0, 0.0], &[5.0, 0.0], &[0.0, 5.0], &[0.5, 0.0]]);
        let rec = s
            .apply_sample(&RatePolicy::Nnsom { l_zeta: 0.1 }, &g, &[0.1, 0.0], 0)
            .unwrap();
        assert_eq!((rec.bmu, rec.second, rec.alfa_defect), (0, 3, true));
        assert_eq!(s.alfa_ema()[0], 1.0);
    }

    #[test]
    fn rejects_non_finite_sample() {
        let g = LatticeGraph::square(2).unwrap();
        let mut s = state(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let err = s.apply_sample(&RatePolicy::Nnsom { l_zeta: 0.1 }, &g, &[f64::NAN, 0.0], 0);
        assert!(matches!(err, Err(SomError::InvalidInput(_))));
    }

    #[test]
    fn sic_and_ric_initialization() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let square = BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let w = init_weights(InitMode::Sic, 100, &square, &mut rng).unwrap();
        assert_eq!(w.len(), 200);
        assert!(w.iter().all(|&x| x == 0.0));

        let a = init_weights(InitMode::Ric, 4, &square, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = init_weights(InitMode::Ric, 4, &square, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));

        assert!(init_weights(InitMode::Ric, 10, &square, &mut rng).is_err());
        assert!(init_weights(InitMode::Sic, 1, &square, &mut rng).is_err());
    }

    fn train_pair(dataset: crate::Dataset, n: usize, init: InitMode, samples: usize) {
        let graph = LatticeGraph::square_with_units(n).unwrap();
        let bbox = dataset.bounding_box();
        let w = init_weights(init, n, &bbox, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut plain = MapState::new(w, dataset.dim(), 0.999).unwrap();
        let mut indexed = plain.clone();
        assert!(indexed.enable_grid_index(&bbox));
        let policy = RatePolicy::fnnsom(0.15).unwrap();
        let mut stream = dataset.stream(11);
        for i in 0..samples {
            let x = stream.next_sample().unwrap();
            let a = plain.apply_sample(&policy, &graph, &x, i as u64).unwrap();
            let b = indexed.apply_sample(&policy, &graph, &x, i as u64).unwrap();
            assert_eq!(a, b, "sample {i}");
        }
        assert_eq!(plain.weights(), indexed.weights());
    }

    #[test]
    fn grid_index_matches_scan_during_training() {
        train_pair(crate::Dataset::Square, 100, InitMode::Sic, 20_000);
        train_pair(crate::Dataset::Square, 64, InitMode::Ric, 20_000);
        train_pair(crate::Dataset::clusters_2d(), 49, InitMode::Ric, 20_000);
        train_pair(crate::Dataset::SphericalShell, 36, InitMode::Ric, 20_000);
        train_pair(crate::Dataset::Dispersion3D, 25, InitMode::Sic, 20_000);
    }

    #[test]
    fn grid_index_breaks_ties_low() {
        let mut s = state(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let bbox = BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(s.enable_grid_index(&bbox));
        assert_eq!(s.find_bmu(&[0.9, 0.0]).unwrap(), (0, 2));
        assert_eq!(s.find_bmu(&[0.5, 0.5]).unwrap(), (0, 1));
    }

    #[test]
    fn grid_index_needs_2d_or_3d() {
        let mut s = state(&[&[0.0; 4], &[1.0; 4]]);
        let bbox = BoundingBox::new(vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert!(!s.enable_grid_index(&bbox));
        assert!(!s.has_grid_index());
    }
}
