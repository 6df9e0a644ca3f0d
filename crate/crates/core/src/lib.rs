//! Locally interacting self-organizing maps.
//!
//! Units sit on a fixed square lattice and only the best-matching unit (BMU)
//! and its four lattice neighbors move for each sample. Two local policies are
//! provided: a constant-rate nearest-neighbor map, and a feedback variant that
//! raises neighbor attraction around units whose running alfa (topographic) or
//! quantization error is high. A classical decaying-neighborhood SOM is
//! included as a baseline.
//!
//! The [`harness`] module runs reproducible parameter sweeps; [`metrics`]
//! provides the map alfa error A_t and an edge-crossing tangle detector.

pub mod datasets;
pub mod error;
pub mod harness;
mod index;
pub mod lattice;
pub mod map;
pub mod metrics;
pub mod rate;
pub mod scaling;
pub mod summary;

pub use datasets::{BoundingBox, Dataset, DatasetKind, PointCloud, SampleStream};
pub use error::{DatasetError, HarnessError, SomError};
pub use harness::{run_sweep, run_trial, SweepPlan, TrialConfig, TrialResult};
pub use lattice::{LatticeGraph, UnitId};
pub use map::{InitMode, MapState, SampleRecord};
pub use metrics::{MapAlfaTrace, TangleClass, TangleDiagnostic};
pub use rate::{ClassicalSchedule, FeedbackParams, RatePolicy};
