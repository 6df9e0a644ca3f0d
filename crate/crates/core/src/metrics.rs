//! Map-level error aggregates and lattice-edge crossing diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::SomError;
use crate::lattice::LatticeGraph;
use crate::map::MapState;

/// Default ratio above the reference A_t at which a trial counts as tangled.
pub const DEFAULT_TANGLE_FACTOR: f64 = 2.0;

/// Map alfa error: mean alfa estimate over units that have won at least once.
pub fn map_alfa(state: &MapState) -> Result<f64, SomError> {
    mean_over_hit(state, state.alfa_ema()).map(|a| a.clamp(0.0, 1.0))
}

/// Mean quantization estimate over units that have won at least once.
pub fn map_quantization(state: &MapState) -> Result<f64, SomError> {
    mean_over_hit(state, state.q_ema())
}

fn mean_over_hit(state: &MapState, values: &[f64]) -> Result<f64, SomError> {
    let (sum, count) = values
        .iter()
        .zip(state.bmu_hits())
        .filter(|(_, &h)| h > 0)
        .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
    if count == 0 {
        return Err(SomError::UndefinedMetric("no unit has been a BMU yet"));
    }
    Ok(sum / count as f64)
}

/// Sequence of `(iteration, A_t)` observations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapAlfaTrace {
    values: Vec<(u64, f64)>,
}

impl MapAlfaTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, iteration: u64, alfa: f64) -> Result<(), SomError> {
        if let Some(&(last, _)) = self.values.last() {
            if iteration <= last {
                return Err(SomError::InvalidInput(format!(
                    "trace iteration {iteration} does not follow {last}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&alfa) {
            return Err(SomError::InvalidInput(format!("A_t {alfa} outside [0, 1]")));
        }
        self.values.push((iteration, alfa));
        Ok(())
    }

    pub fn values(&self) -> &[(u64, f64)] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<(u64, f64)> {
        self.values.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TangleClass {
    Untangled,
    Tangled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangleDiagnostic {
    pub edge_crossings: u64,
    pub classified: TangleClass,
}

impl TangleDiagnostic {
    pub fn from_crossings(edge_crossings: u64) -> Self {
        let classified = if edge_crossings > 0 {
            TangleClass::Tangled
        } else {
            TangleClass::Untangled
        };
        Self {
            edge_crossings,
            classified,
        }
    }

    pub fn of_map(state: &MapState, graph: &LatticeGraph) -> Result<Self, SomError> {
        count_edge_crossings(state, graph).map(Self::from_crossings)
    }
}

/// Classifies a trial against a reference A_t: tangled when
/// `final_alfa > factor * baseline_alfa`.
pub fn classify_trial(final_alfa: f64, baseline_alfa: f64, factor: f64) -> Result<TangleClass, SomError> {
    if !(baseline_alfa > 0.0) {
        return Err(SomError::InvalidBaseline(baseline_alfa));
    }
    Ok(if final_alfa > factor * baseline_alfa {
        TangleClass::Tangled
    } else {
        TangleClass::Untangled
    })
}

type Point = [f64; 2];

#[inline]
fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(
        robust::Coord { x: a[0], y: a[1] },
        robust::Coord { x: b[0], y: b[1] },
        robust::Coord { x: c[0], y: c[1] },
    )
}

#[inline]
fn on_segment(p: Point, q: Point, r: Point) -> bool {
    // r collinear with pq; test whether it lies inside pq's extent
    r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
}

/// Closed-segment intersection with exact orientation signs. Collinear
/// overlaps and touching endpoints count as intersections.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Number of pairs of lattice edges, drawn as straight segments between unit
/// weights, that intersect. Pairs sharing a lattice endpoint are skipped.
/// Only defined for 2D sample spaces.
pub fn count_edge_crossings(state: &MapState, graph: &LatticeGraph) -> Result<u64, SomError> {
    if state.dim() != 2 {
        return Err(SomError::UnsupportedDimension(state.dim()));
    }
    if graph.unit_count() != state.unit_count() {
        return Err(SomError::InvalidInput(format!(
            "lattice has {} units, map has {}",
            graph.unit_count(),
            state.unit_count()
        )));
    }
    let pt = |u: usize| -> Point { [state.weight(u)[0], state.weight(u)[1]] };
    struct Seg {
        a: usize,
        b: usize,
        pa: Point,
        pb: Point,
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
    }
    let mut segs: Vec<Seg> = graph
        .edges()
        .into_iter()
        .map(|(a, b)| {
            let (pa, pb) = (pt(a), pt(b));
            Seg {
                a,
                b,
                pa,
                pb,
                x_lo: pa[0].min(pb[0]),
                x_hi: pa[0].max(pb[0]),
                y_lo: pa[1].min(pb[1]),
                y_hi: pa[1].max(pb[1]),
            }
        })
        .collect();
    segs.sort_by(|s, t| s.x_lo.total_cmp(&t.x_lo));

    let mut crossings = 0u64;
    for (i, s) in segs.iter().enumerate() {
        for t in &segs[i + 1..] {
            if t.x_lo > s.x_hi {
                break;
            }
            if t.y_lo > s.y_hi || t.y_hi < s.y_lo {
                continue;
            }
            if s.a == t.a || s.a == t.b || s.b == t.a || s.b == t.b {
                continue;
            }
            if segments_intersect(s.pa, s.pb, t.pa, t.pb) {
                crossings += 1;
            }
        }
    }
    Ok(crossings)
}
