//! Point cloud data model, file formats, neighbor search and noise injection.

mod index;
mod io;
mod noise;

pub use index::SpatialIndex;
pub use io::{load_cloud, save_cloud, write_cloud, CloudFormat};
pub use noise::{add_noise, add_noise_sigma};

use crate::error::{Error, Result};
use crate::parallel::{pairwise_sum, par_map_indices};

pub type Point3 = [f64; 3];

#[inline]
pub fn dist_sq(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn dist(a: &Point3, b: &Point3) -> f64 {
    dist_sq(a, b).sqrt()
}

/// An ordered set of 3D points with optional per-point edge labels.
///
/// The point order is never changed by any operation in this crate; subsets are
/// expressed as index lists or as new clouds.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    labels: Option<Vec<bool>>,
    name: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        Self::with_labels(points, None)
    }

    pub fn with_labels(points: Vec<Point3>, labels: Option<Vec<bool>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid(
                "point cloud must contain at least one point",
            ));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    actual: l.len(),
                });
            }
        }
        Ok(Self {
            points,
            labels,
            name: None,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false for a constructed cloud; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point3 {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn edge_count(&self) -> usize {
        self.labels
            .as_ref()
            .map_or(0, |l| l.iter().filter(|&&e| e).count())
    }

    /// Points whose label is set, in cloud order.
    pub fn edge_points(&self) -> Vec<Point3> {
        match &self.labels {
            Some(l) => self
                .points
                .iter()
                .zip(l)
                .filter_map(|(p, &e)| e.then_some(*p))
                .collect(),
            None => Vec::new(),
        }
    }

    /// New cloud holding the given points (and their labels) in the order of `indices`.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::invalid(format!(
                "index {bad} out of range for cloud of {} points",
                self.len()
            )));
        }
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        let mut out = Self::with_labels(points, labels)?;
        out.name = self.name.clone();
        Ok(out)
    }

    /// Same cloud with every point passed through `f`; labels are kept.
    pub fn map_points(&self, f: impl Fn(&Point3) -> Point3) -> Result<Self> {
        let mut out = Self::with_labels(self.points.iter().map(f).collect(), self.labels.clone())?;
        out.name = self.name.clone();
        Ok(out)
    }

    pub fn translated(&self, t: Point3) -> Result<Self> {
        self.map_points(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]])
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        self.map_points(|p| [p[0] * s, p[1] * s, p[2] * s])
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounds(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }
}

/// Mean distance from each point to its nearest other point.
///
/// Duplicate points count, so a cloud with coincident points can have a smaller
/// (even zero) resolution.
pub fn intrinsic_resolution(cloud: &PointCloud) -> Result<f64> {
    intrinsic_resolution_with(cloud, &SpatialIndex::build(cloud))
}

/// [`intrinsic_resolution`] reusing an index already built over `cloud`.
pub fn intrinsic_resolution_with(cloud: &PointCloud, index: &SpatialIndex) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::invalid(
            "intrinsic resolution needs at least two points",
        ));
    }
    let nn = par_map_indices(cloud.len(), |i| {
        let j = index.k_nearest(i, 1).expect("N >= 2")[0];
        dist(cloud.point(i), cloud.point(j))
    });
    Ok(pairwise_sum(&nn) / cloud.len() as f64)
}
