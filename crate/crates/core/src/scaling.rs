//! Training-time scaling with map size.
//!
//! Each map size is trained on the same fixed number of samples, so the
//! measured time reflects per-sample cost. With a linear BMU scan that cost
//! grows linearly in the number of units.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::datasets::Dataset;
use crate::error::{HarnessError, SomError};
use crate::harness::mix64;
use crate::lattice::LatticeGraph;
use crate::map::{init_weights, InitMode, MapState, DEFAULT_EMA_DECAY};
use crate::rate::RatePolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, SomError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(SomError::InvalidInput(
            "linear fit needs at least 2 paired points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(SomError::InvalidInput("linear fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub units: usize,
    pub samples: u64,
    pub wall_time_seconds: f64,
    pub nanos_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub fit: LinearFit,
}

#[derive(Debug, Clone)]
pub struct ScalingBench {
    /// Unit counts; each must be a perfect square.
    pub sizes: Vec<usize>,
    /// Samples per size, identical for every size.
    pub samples: u64,
    pub dataset: Dataset,
    pub policy: RatePolicy,
    pub seed: u64,
    /// Timed runs per size; the fastest is kept.
    pub runs: u32,
}

impl ScalingBench {
    pub fn new(sizes: Vec<usize>, samples: u64) -> Self {
        Self {
            sizes,
            samples,
            dataset: Dataset::Square,
            policy: RatePolicy::fnnsom(0.15).expect("valid default"),
            seed: 0,
            runs: 3,
        }
    }

    pub fn run(&self) -> Result<ScalingReport, HarnessError> {
        if self.sizes.len() < 3 {
            return Err(HarnessError::InvalidConfig(format!(
                "scaling fit needs at least 3 map sizes, got {}",
                self.sizes.len()
            )));
        }
        if self.samples == 0 || self.runs == 0 {
            return Err(HarnessError::InvalidConfig(
                "sample budget and runs must be positive".into(),
            ));
        }
        let mut points = Vec::with_capacity(self.sizes.len());
        for &n in &self.sizes {
            let mut best = f64::INFINITY;
            for run in 0..self.runs {
                best = best.min(self.time_one(n, run)?);
            }
            points.push(ScalingPoint {
                units: n,
                samples: self.samples,
                wall_time_seconds: best,
                nanos_per_sample: best * 1e9 / self.samples as f64,
            });
        }
        let xs: Vec<f64> = points.iter().map(|p| p.units as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.wall_time_seconds).collect();
        let fit = linear_fit(&xs, &ys)?;
        Ok(ScalingReport { points, fit })
    }

    fn time_one(&self, n: usize, run: u32) -> Result<f64, HarnessError> {
        let graph = LatticeGraph::square_with_units(n)?;
        let seed = mix64(self.seed ^ mix64(n as u64) ^ run as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = init_weights(InitMode::Ric, n, &self.dataset.bounding_box(), &mut rng)?;
        let mut state = MapState::new(weights, self.dataset.dim(), DEFAULT_EMA_DECAY)?;
        // pre-draw samples so only the training loop is timed
        let mut stream = self.dataset.stream(mix64(seed));
        let dim = self.dataset.dim();
        let mut samples = vec![0.0; self.samples as usize * dim];
        for chunk in samples.chunks_exact_mut(dim) {
            stream.next_into(chunk)?;
        }
        let start = Instant::now();
        for s in samples.chunks_exact(dim) {
            state.apply_sample(&self.policy, &graph, s, 0)?;
        }
        Ok(start.elapsed().as_secs_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_line_by_hand() {
        // sxx = 5, sxy = 4.8, ss_tot = 4.64, residuals (.04, -.12, .12, -.04)
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[0.1, 0.9, 2.1, 2.9]).unwrap();
        assert!((f.slope - 0.96).abs() < 1e-12);
        assert!((f.intercept - 0.06).abs() < 1e-12);
        assert!((f.r_squared - (1.0 - 0.032 / 4.64)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn needs_three_sizes() {
        let b = ScalingBench::new(vec![100], 1000);
        assert!(matches!(b.run(), Err(HarnessError::InvalidConfig(_))));
    }

    #[test]
    fn small_bench_runs() {
        let mut b = ScalingBench::new(vec![4, 16, 36], 2000);
        b.runs = 1;
        let r = b.run().unwrap();
        assert_eq!(r.points.len(), 3);
        assert!(r.points.iter().all(|p| p.wall_time_seconds > 0.0));
    }
}
