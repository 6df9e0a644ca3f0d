//! Learning-rate policies.
//!
//! Three policies are supported:
//!
//! * [`RatePolicy::Classical`]: a Gaussian neighborhood over the whole lattice whose
//!   rate and radius shrink exponentially over a fixed horizon.
//! * [`RatePolicy::Nnsom`]: only the BMU and its immediate lattice neighbors move,
//!   with rate `l_zeta * exp(-d)` for graph distance `d <= 1`.
//! * [`RatePolicy::Fnnsom`]: the BMU moves at a constant `sigma`; its neighbors move
//!   at a rate driven by the BMU's running alfa and quantization errors.

use serde::{Deserialize, Serialize};

use crate::error::SomError;
use crate::lattice::{LatticeGraph, UnitId};
use crate::map::MapState;

/// BMU learning rate used by the feedback policy unless configured otherwise.
pub const DEFAULT_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSchedule {
    pub initial_rate: f64,
    pub final_rate: f64,
    /// Neighborhood radius at iteration 0, in lattice units.
    pub initial_radius: f64,
    pub final_radius: f64,
    /// Iterations over which rate and radius decay; both stay at their final
    /// values afterwards.
    pub horizon: u64,
}

impl ClassicalSchedule {
    /// Defaults for a lattice: rate 0.5 → 0.01, radius diameter/2 → 0.5.
    pub fn for_lattice(graph: &LatticeGraph, horizon: u64) -> Self {
        Self {
            initial_rate: 0.5,
            final_rate: 0.01,
            initial_radius: (graph.diameter() as f64 / 2.0).max(1.0),
            final_radius: 0.5,
            horizon: horizon.max(1),
        }
    }

    fn progress(&self, iter: u64) -> f64 {
        iter.min(self.horizon) as f64 / self.horizon as f64
    }

    /// Learning rate at `iter`.
    pub fn rate(&self, iter: u64) -> f64 {
        self.initial_rate * (self.final_rate / self.initial_rate).powf(self.progress(iter))
    }

    /// Neighborhood radius at `iter`.
    pub fn radius(&self, iter: u64) -> f64 {
        self.initial_radius * (self.final_radius / self.initial_radius).powf(self.progress(iter))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    /// Constant BMU learning rate.
    pub sigma: f64,
    /// Sensitivity of neighbor attraction to the BMU's relative quantization error.
    pub c_q: f64,
}

impl FeedbackParams {
    pub fn with_c_q(c_q: f64) -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            c_q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum RatePolicy {
    Classical(ClassicalSchedule),
    Nnsom { l_zeta: f64 },
    Fnnsom(FeedbackParams),
}

impl RatePolicy {
    pub fn nnsom(l_zeta: f64) -> Result<Self, SomError> {
        let p = RatePolicy::Nnsom { l_zeta };
        p.validate()?;
        Ok(p)
    }

    pub fn fnnsom(c_q: f64) -> Result<Self, SomError> {
        let p = RatePolicy::Fnnsom(FeedbackParams::with_c_q(c_q));
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SomError> {
        match *self {
            RatePolicy::Nnsom { l_zeta } => {
                if !(l_zeta > 0.0 && l_zeta <= 1.0) {
                    return Err(SomError::InvalidInput(format!(
                        "l_zeta must lie in (0, 1], got {l_zeta}"
                    )));
                }
            }
            RatePolicy::Fnnsom(FeedbackParams { sigma, c_q }) => {
                if !(sigma > 0.0 && sigma <= 1.0) {
                    return Err(SomError::InvalidInput(format!("sigma must lie in (0, 1], got {sigma}")));
                }
                if !(c_q > 0.0 && c_q.is_finite()) {
                    return Err(SomError::InvalidInput(format!("c_q must be positive, got {c_q}")));
                }
            }
            RatePolicy::Classical(s) => {
                let ok = s.initial_rate > 0.0
                    && s.initial_rate <= 1.0
                    && s.final_rate > 0.0
                    && s.final_rate <= s.initial_rate
                    && s.initial_radius > 0.0
                    && s.final_radius > 0.0
                    && s.final_radius <= s.initial_radius
                    && s.horizon > 0;
                if !ok {
                    return Err(SomError::InvalidInput(format!("inconsistent classical schedule {s:?}")));
                }
            }
        }
        Ok(())
    }

    /// Short lowercase name used in result files.
    pub fn variant_name(&self) -> &'static str {
        match self {
            RatePolicy::Classical(_) => "classical",
            RatePolicy::Nnsom { .. } => "nnsom",
            RatePolicy::Fnnsom(_) => "fnnsom",
        }
    }

    /// The swept parameter as `(name, value)`.
    pub fn param(&self) -> (&'static str, f64) {
        match *self {
            RatePolicy::Classical(s) => ("initial_rate", s.initial_rate),
            RatePolicy::Nnsom { l_zeta } => ("l_zeta", l_zeta),
            RatePolicy::Fnnsom(p) => ("c_q", p.c_q),
        }
    }

    /// True when units beyond graph distance 1 from the BMU never move.
    pub fn is_local(&self) -> bool {
        !matches!(self, RatePolicy::Classical(_))
    }
}

/// NNSOM rate for a unit at graph distance `graph_dist` from the BMU.
#[inline]
pub fn rate_nnsom(l_zeta: f64, graph_dist: usize) -> f64 {
    match graph_dist {
        0 => l_zeta,
        1 => l_zeta * (-1.0f64).exp(),
        _ => 0.0,
    }
}

/// `1 - exp(-c_q * q_bmu / q_j)`, the BMU's quantization error relative to
/// unit `j`, squashed into `[0, 1)`. Returns `None` when `q_j` is not positive.
#[inline]
pub fn quantization_feedback(c_q: f64, q_bmu: f64, q_j: f64) -> Option<f64> {
    if q_j > 0.0 {
        Some(-(-c_q * q_bmu / q_j).exp_m1())
    } else {
        None
    }
}

/// Probabilistic OR of the BMU alfa error and the quantization feedback:
/// `a + f - a*f`. Both inputs must lie in `[0, 1]`.
#[inline]
pub fn combine_feedback(alfa_bmu: f64, f: f64) -> Result<f64, SomError> {
    if !(0.0..=1.0).contains(&alfa_bmu) || !(0.0..=1.0).contains(&f) {
        return Err(SomError::InvalidInput(format!(
            "feedback inputs must lie in [0, 1], got alfa={alfa_bmu}, f={f}"
        )));
    }
    Ok(alfa_bmu + f - alfa_bmu * f)
}

/// Feedback-policy rate of unit `j` for a sample won by `bmu`.
///
/// Unit `j`'s quantization estimate falls back to the map-wide mean while `j`
/// has never been a BMU; if no unit has been hit yet the quantization term is 0.
/// A zero estimate for `j` yields the limit of the quantization term: 1 when
/// the BMU's estimate is positive, 0 otherwise.
pub fn rate_fnnsom(params: &FeedbackParams, state: &MapState, j: UnitId, bmu: UnitId, graph: &LatticeGraph) -> f64 {
    if j == bmu {
        return params.sigma;
    }
    if !graph.are_neighbors(j, bmu) {
        return 0.0;
    }
    let f = match (state.effective_q(bmu), state.effective_q(j)) {
        (Some(q_bmu), Some(q_j)) => {
            quantization_feedback(params.c_q, q_bmu, q_j).unwrap_or(if q_bmu > 0.0 { 1.0 } else { 0.0 })
        }
        _ => 0.0,
    };
    let alfa = state.alfa_ema()[bmu].clamp(0.0, 1.0);
    // both arguments are in range by construction
    alfa + f - alfa * f
}

/// Gaussian neighborhood kernel `rate * exp(-d^2 / (2 r^2))`.
#[inline]
pub fn gaussian_kernel(rate: f64, radius: f64, graph_dist: usize) -> f64 {
    let d = graph_dist as f64;
    rate * (-(d * d) / (2.0 * radius * radius)).exp()
}

/// Classical decaying-neighborhood rate.
pub fn rate_classical(schedule: &ClassicalSchedule, iter: u64, graph_dist: usize) -> f64 {
    gaussian_kernel(schedule.rate(iter), schedule.radius(iter), graph_dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nnsom_cases() {
        assert_eq!(rate_nnsom(0.5, 0), 0.5);
        assert_eq!(rate_nnsom(0.5, 2), 0.0);
        assert_eq!(rate_nnsom(0.5, 7), 0.0);
        assert_relative_eq!(rate_nnsom(0.5, 1), 0.183_939_720_585_721_2, max_relative = 1e-15);
    }

    #[test]
    fn quantization_feedback_values() {
        assert_relative_eq!(
            quantization_feedback(0.15, 2.0, 2.0).unwrap(),
            0.139_292_023_574_942_4,
            max_relative = 1e-14
        );
        assert_eq!(quantization_feedback(0.7, 0.0, 3.0), Some(0.0));
        assert_relative_eq!(quantization_feedback(1.0, 1e6, 1e-6).unwrap(), 1.0);
        assert_eq!(quantization_feedback(0.15, 1.0, 0.0), None);
    }

    #[test]
    fn combine_feedback_values() {
        assert_eq!(combine_feedback(0.0, 0.4).unwrap(), 0.4);
        assert_eq!(combine_feedback(1.0, 0.3).unwrap(), 1.0);
        assert_relative_eq!(combine_feedback(0.3, 0.5).unwrap(), 0.65, max_relative = 1e-15);
        assert!(combine_feedback(1.2, 0.1).is_err());
        assert!(combine_feedback(0.2, -0.1).is_err());
    }

    #[test]
    fn classical_kernel_and_schedule() {
        assert_relative_eq!(
            gaussian_kernel(0.1, 2.0, 2),
            0.060_653_065_971_263_34,
            max_relative = 1e-14
        );
        let g = LatticeGraph::square(10).unwrap();
        let s = ClassicalSchedule::for_lattice(&g, 1000);
        assert_eq!(rate_classical(&s, 0, 0), s.initial_rate);
        assert_relative_eq!(s.rate(1000), s.final_rate, max_relative = 1e-12);
        assert_relative_eq!(s.rate(5000), s.final_rate, max_relative = 1e-12);
        assert_relative_eq!(s.radius(1000), s.final_radius, max_relative = 1e-12);
        for it in 0..999 {
            assert!(rate_classical(&s, it + 1, 1) < rate_classical(&s, it, 1));
        }
        for d in 0..10 {
            assert!(rate_classical(&s, 10, d + 1) < rate_classical(&s, 10, d));
        }
    }

    #[test]
    fn policy_validation() {
        assert!(RatePolicy::nnsom(0.0).is_err());
        assert!(RatePolicy::nnsom(1.0).is_ok());
        assert!(RatePolicy::nnsom(1.01).is_err());
        assert!(RatePolicy::fnnsom(0.0).is_err());
        assert!(RatePolicy::fnnsom(0.15).is_ok());
        let bad = RatePolicy::Fnnsom(FeedbackParams { sigma: 0.0, c_q: 0.1 });
        assert!(bad.validate().is_err());
    }
}
