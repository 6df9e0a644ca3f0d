//! Synthetic datasets and point-cloud ingestion.
//!
//! All random streams use ChaCha8 seeded with `ChaCha8Rng::seed_from_u64`, so a
//! `(dataset, seed)` pair yields the same sequence on every platform.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{DatasetError, SomError};

/// Default standard deviation of each Clusters2D component.
pub const DEFAULT_CLUSTER_SIGMA: f64 = 0.5;

/// Centers of the five Clusters2D components.
pub const CLUSTER_CENTERS: [[f64; 2]; 5] = [[0.0, 0.0], [0.0, 5.0], [5.0, 0.0], [5.0, 5.0], [2.5, 2.5]];

/// Half-width of the box reported for the standard-normal dataset.
const DISPERSION_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl BoundingBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self, SomError> {
        if min.is_empty() || min.len() != max.len() {
            return Err(SomError::InvalidInput(
                "bounding box corners must share a positive dimension".into(),
            ));
        }
        if min
            .iter()
            .zip(&max)
            .any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(SomError::InvalidInput(format!("invalid bounding box {min:?}..{max:?}")));
        }
        Ok(Self { min, max })
    }

    fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            min: vec![lo; dim],
            max: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

/// Points loaded from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    path: PathBuf,
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn from_points(path: impl Into<PathBuf>, dim: usize, coords: Vec<f64>) -> Result<Self, SomError> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(SomError::InvalidInput(
                "point cloud must hold whole, non-empty points".into(),
            ));
        }
        Ok(Self {
            path: path.into(),
            dim,
            coords,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact per-axis extent.
    pub fn bounding_box(&self) -> BoundingBox {
        let mut min = vec![f64::INFINITY; self.dim];
        let mut max = vec![f64::NEG_INFINITY; self.dim];
        for p in self.coords.chunks_exact(self.dim) {
            for k in 0..self.dim {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        BoundingBox { min, max }
    }
}

/// Reads a point cloud: one point per line, comma-separated decimal
/// coordinates. Lines starting with `#` and blank lines are skipped. The first
/// data row fixes the dimension.
pub fn ingest_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud, DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let parse_err = |line: usize, message: String| DatasetError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut dim = 0;
    let mut coords = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let start = coords.len();
        for field in trimmed.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line_no, format!("'{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value '{field}'")));
            }
            coords.push(v);
        }
        let width = coords.len() - start;
        if dim == 0 {
            dim = width;
        } else if width != dim {
            return Err(parse_err(line_no, format!("expected {dim} fields, found {width}")));
        }
    }
    if coords.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    Ok(PointCloud {
        path: path.to_path_buf(),
        dim,
        coords,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    Square,
    Clusters2D,
    SphericalShell,
    Dispersion3D,
    FilePointCloud,
}

impl DatasetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetKind::Square => "square",
            DatasetKind::Clusters2D => "clusters2d",
            DatasetKind::SphericalShell => "spherical_shell",
            DatasetKind::Dispersion3D => "dispersion3d",
            DatasetKind::FilePointCloud => "point_cloud",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "square" => Ok(DatasetKind::Square),
            "clusters2d" | "clusters_2d" | "clusters" => Ok(DatasetKind::Clusters2D),
            "spherical_shell" | "sphere" | "shell" => Ok(DatasetKind::SphericalShell),
            "dispersion3d" | "dispersion_3d" | "dispersion" => Ok(DatasetKind::Dispersion3D),
            "point_cloud" | "file" => Ok(DatasetKind::FilePointCloud),
            other => Err(SomError::InvalidInput(format!("unknown dataset '{other}'"))),
        }
    }
}

/// A data source: one of the synthetic distributions or a loaded point cloud.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    /// Uniform on `[0, 1]^2`.
    Square,
    /// Equal mixture of isotropic normals at [`CLUSTER_CENTERS`].
    Clusters2D { sigma: f64 },
    /// Uniform on the unit sphere surface in 3D.
    SphericalShell,
    /// Standard trivariate normal.
    Dispersion3D,
    /// Points of a file, visited in a seeded random order.
    PointCloud(Arc<PointCloud>),
}

impl Dataset {
    pub fn clusters_2d() -> Self {
        Dataset::Clusters2D {
            sigma: DEFAULT_CLUSTER_SIGMA,
        }
    }

    /// Builds a synthetic dataset from its kind; point clouds need [`Dataset::from_file`].
    pub fn synthetic(kind: DatasetKind) -> Result<Self, SomError> {
        Ok(match kind {
            DatasetKind::Square => Dataset::Square,
            DatasetKind::Clusters2D => Dataset::clusters_2d(),
            DatasetKind::SphericalShell => Dataset::SphericalShell,
            DatasetKind::Dispersion3D => Dataset::Dispersion3D,
            DatasetKind::FilePointCloud => {
                return Err(SomError::InvalidInput("a point-cloud dataset needs a file path".into()))
            }
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        Ok(Dataset::PointCloud(Arc::new(ingest_point_cloud(path)?)))
    }

    pub fn kind(&self) -> DatasetKind {
        match self {
            Dataset::Square => DatasetKind::Square,
            Dataset::Clusters2D { .. } => DatasetKind::Clusters2D,
            Dataset::SphericalShell => DatasetKind::SphericalShell,
            Dataset::Dispersion3D => DatasetKind::Dispersion3D,
            Dataset::PointCloud(_) => DatasetKind::FilePointCloud,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Dataset::Square | Dataset::Clusters2D { .. } => 2,
            Dataset::SphericalShell | Dataset::Dispersion3D => 3,
            Dataset::PointCloud(pc) => pc.dim(),
        }
    }

    /// Axis-aligned box used for random initialization. Gaussian kinds report a
    /// box covering nearly all of their mass.
    pub fn bounding_box(&self) -> BoundingBox {
        match self {
            Dataset::Square => BoundingBox::cube(2, 0.0, 1.0),
            Dataset::Clusters2D { sigma } => {
                let pad = 3.0 * sigma;
                BoundingBox::cube(2, -pad, 5.0 + pad)
            }
            Dataset::SphericalShell => BoundingBox::cube(3, -1.0, 1.0),
            Dataset::Dispersion3D => BoundingBox::cube(3, -DISPERSION_HALF_WIDTH, DISPERSION_HALF_WIDTH),
            Dataset::PointCloud(pc) => pc.bounding_box(),
        }
    }

    pub fn stream(&self, seed: u64) -> SampleStream {
        SampleStream::new(self.clone(), seed)
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().as_str())
    }
}

/// Seeded, single-consumer generator of samples.
#[derive(Debug, Clone)]
pub struct SampleStream {
    dataset: Dataset,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
    passes_left: Option<u64>,
}

impl SampleStream {
    pub fn new(dataset: Dataset, seed: u64) -> Self {
        Self {
            dataset,
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: Vec::new(),
            cursor: 0,
            passes_left: None,
        }
    }

    /// Limits a point-cloud stream to `passes` shuffled passes over the file;
    /// afterwards it reports [`DatasetError::EndOfStream`]. Synthetic streams
    /// are unaffected.
    pub fn with_passes(mut self, passes: u64) -> Self {
        self.passes_left = Some(passes);
        self
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Writes the next sample into `out` (length `dim()`).
    pub fn next_into(&mut self, out: &mut [f64]) -> Result<(), DatasetError> {
        debug_assert_eq!(out.len(), self.dim());
        match &self.dataset {
            Dataset::Square => {
                out[0] = self.rng.random();
                out[1] = self.rng.random();
            }
            Dataset::Clusters2D { sigma } => {
                let c = CLUSTER_CENTERS[self.rng.random_range(0..CLUSTER_CENTERS.len())];
                let (dx, dy): (f64, f64) = (self.rng.sample(StandardNormal), self.rng.sample(StandardNormal));
                out[0] = c[0] + sigma * dx;
                out[1] = c[1] + sigma * dy;
            }
            Dataset::SphericalShell => loop {
                let v: [f64; 3] = [
                    self.rng.sample(StandardNormal),
                    self.rng.sample(StandardNormal),
                    self.rng.sample(StandardNormal),
                ];
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if norm > 1e-12 {
                    for k in 0..3 {
                        out[k] = v[k] / norm;
                    }
                    break;
                }
            },
            Dataset::Dispersion3D => {
                for o in out.iter_mut() {
                    *o = self.rng.sample(StandardNormal);
                }
            }
            Dataset::PointCloud(pc) => {
                if self.cursor == self.order.len() {
                    if let Some(left) = self.passes_left.as_mut() {
                        if *left == 0 {
                            return Err(DatasetError::EndOfStream);
                        }
                        *left -= 1;
                    }
                    if self.order.is_empty() {
                        self.order = (0..pc.len()).collect();
                    }
                    self.order.shuffle(&mut self.rng);
                    self.cursor = 0;
                }
                out.copy_from_slice(pc.point(self.order[self.cursor]));
                self.cursor += 1;
            }
        }
        Ok(())
    }

    pub fn next_sample(&mut self) -> Result<Vec<f64>, DatasetError> {
        let mut v = vec![0.0; self.dim()];
        self.next_into(&mut v)?;
        Ok(v)
    }
}
