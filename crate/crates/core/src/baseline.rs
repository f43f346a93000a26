//! PCA surface-variation baseline: the smallest share of neighbourhood variance.

use crate::error::{Error, Result};
use crate::linalg::eigenvalues_3x3;
use crate::parallel::par_map_indices_with;
use crate::pointcloud::{Point3, PointCloud, SpatialIndex};
use crate::resample::{Direction, Method, ScoreVector};

/// `mu_1 / (mu_1 + mu_2 + mu_3)` of a neighbourhood covariance, 0 when the trace is 0.
pub fn surface_variation(neighborhood: &[Point3]) -> f64 {
    let n = neighborhood.len() as f64;
    let mut mean = [0.0; 3];
    for p in neighborhood {
        for a in 0..3 {
            mean[a] += p[a];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = [[0.0; 3]; 3];
    for p in neighborhood {
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for r in 0..3 {
            for c in r..3 {
                cov[r][c] += d[r] * d[c];
            }
        }
    }
    for r in 0..3 {
        for c in r..3 {
            cov[r][c] /= n;
            cov[c][r] = cov[r][c];
        }
    }
    let mu = eigenvalues_3x3(&cov);
    let trace = mu.iter().map(|m| m.max(0.0)).sum::<f64>();
    if trace <= 0.0 {
        0.0
    } else {
        mu[0].max(0.0) / trace
    }
}

/// Surface variation over each point and its `m - 1` nearest neighbours.
pub fn pca_surface_variation(
    cloud: &PointCloud,
    index: &SpatialIndex,
    m: usize,
) -> Result<ScoreVector> {
    if m < 3 || m >= cloud.len() {
        return Err(Error::invalid(format!(
            "neighbourhood size must satisfy 3 <= m < N = {}, got {m}",
            cloud.len()
        )));
    }
    if index.len() != cloud.len() {
        return Err(Error::invalid(
            "spatial index was built for a different cloud",
        ));
    }
    let scores: Vec<Result<f64>> = par_map_indices_with(
        cloud.len(),
        || (Vec::with_capacity(m), Vec::with_capacity(m)),
        |(neighbors, pts): &mut (Vec<usize>, Vec<Point3>), i| {
            index.k_nearest_into(i, m - 1, neighbors)?;
            pts.clear();
            pts.push(*cloud.point(i));
            pts.extend(neighbors.iter().map(|&j| *cloud.point(j)));
            Ok(surface_variation(pts))
        },
    );
    let scores = scores.into_iter().collect::<Result<Vec<_>>>()?;
    ScoreVector::new(scores, Method::PcaBaseline, Direction::SharpHigh)
}
