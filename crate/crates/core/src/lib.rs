//! Edge-preserving point cloud resampling with hypergraph spectral filters.
//!
//! Three scorers rank points by local sharpness:
//!
//! * [`resample::hkc_scores`]: high-pass convolution of voxel-count signals in a
//!   fixed kernel spectrum,
//! * [`resample::hkf_scores`]: high-frequency energy fraction of the same signals,
//! * [`resample::lhf_scores`]: two-scale sharpness from per-point neighbourhood
//!   spectra.
//!
//! [`resample::select_points`] keeps the sharpest fraction of the cloud. The
//! [`synth`] and [`metrics`] modules provide labelled test clouds and the edge and
//! cloud-distance evaluation measures.

pub mod baseline;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod parallel;
pub mod pointcloud;
pub mod resample;
pub mod spectrum;
pub mod synth;

pub use error::{Error, Result};
pub use pointcloud::{Point3, PointCloud, SpatialIndex};
