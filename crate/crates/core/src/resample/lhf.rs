//! Local hypergraph filtering: per-point neighbourhood spectra at two scales.

use super::{Direction, Method, ScoreVector};
use crate::error::{Error, Result};
use crate::parallel::par_map_indices_with;
use crate::pointcloud::{Point3, PointCloud, SpatialIndex};
use crate::spectrum::estimate_spectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhfConfig {
    /// small hyperedge length, including the point itself
    pub n_a: usize,
    /// large hyperedge length
    pub n_b: usize,
    /// resampling ratio, used to summarize each scale by its top fraction
    pub alpha: f64,
}

impl Default for LhfConfig {
    fn default() -> Self {
        Self {
            n_a: 4,
            n_b: 8,
            alpha: 0.2,
        }
    }
}

impl LhfConfig {
    pub fn new(n_a: usize, n_b: usize, alpha: f64) -> Result<Self> {
        let cfg = Self { n_a, n_b, alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a < 4 {
            return Err(Error::invalid(format!(
                "N_a must be at least 4, got {}",
                self.n_a
            )));
        }
        if self.n_b <= self.n_a {
            return Err(Error::invalid(format!(
                "N_b ({}) must exceed N_a ({})",
                self.n_b, self.n_a
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "resampling ratio must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Row 0 is the origin, then `p_n - p_i` for the `n_i - 1` nearest neighbours in
/// ascending distance order.
pub fn lhf_local_signal(
    cloud: &PointCloud,
    index: &SpatialIndex,
    i: usize,
    n_i: usize,
) -> Result<Vec<Point3>> {
    if n_i == 0 || n_i >= cloud.len() {
        return Err(Error::invalid(format!(
            "signal length {n_i} must lie in 1..{}",
            cloud.len()
        )));
    }
    let neighbors = index.k_nearest(i, n_i - 1)?;
    Ok(relative_rows(cloud, i, &neighbors))
}

fn relative_rows(cloud: &PointCloud, i: usize, neighbors: &[usize]) -> Vec<Point3> {
    let p = cloud.point(i);
    std::iter::once([0.0; 3])
        .chain(neighbors.iter().map(|&j| {
            let q = cloud.point(j);
            [q[0] - p[0], q[1] - p[1], q[2] - p[2]]
        }))
        .collect()
}

/// Fraction of the spectral L1 mass of a local signal in its own high-frequency band.
pub fn lhf_local_sharpness(signal: &[Point3]) -> Result<f64> {
    let basis = estimate_spectrum(signal)?;
    let s_hat = basis.hgft_rows3(signal)?;
    let l1 = |rows: &[Point3]| -> f64 { rows.iter().flatten().map(|c| c.abs()).sum() };
    let high = l1(&s_hat[..basis.theta()]);
    let total = high + l1(&s_hat[basis.theta()..]);
    Ok(if total == 0.0 { 0.0 } else { high / total })
}

/// Mean of the `ceil(alpha * N)` largest values.
fn top_fraction_mean(values: &[f64], alpha: f64) -> f64 {
    let m = ((alpha * values.len() as f64).ceil() as usize).clamp(1, values.len());
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    sorted[..m].iter().sum::<f64>() / m as f64
}

/// Two-scale weight `Gamma_b / (Gamma_a + Gamma_b)`, 0.5 when both vanish.
pub fn scale_weight(gamma_a_top: f64, gamma_b_top: f64) -> f64 {
    let sum = gamma_a_top + gamma_b_top;
    if sum > 0.0 {
        gamma_b_top / sum
    } else {
        0.5
    }
}

/// Intermediate values of an LHF run.
#[derive(Debug, Clone, PartialEq)]
pub struct LhfOutput {
    pub scores: ScoreVector,
    pub gamma_a: Vec<f64>,
    pub gamma_b: Vec<f64>,
    pub top_a: f64,
    pub top_b: f64,
    pub epsilon: f64,
}

/// Combined two-scale sharpness `gamma` per point. Higher is sharper.
pub fn lhf_scores(
    cloud: &PointCloud,
    index: &SpatialIndex,
    cfg: &LhfConfig,
) -> Result<ScoreVector> {
    Ok(lhf_scores_detailed(cloud, index, cfg)?.scores)
}

pub fn lhf_scores_detailed(
    cloud: &PointCloud,
    index: &SpatialIndex,
    cfg: &LhfConfig,
) -> Result<LhfOutput> {
    cfg.validate()?;
    if cloud.len() <= cfg.n_b {
        return Err(Error::invalid(format!(
            "LHF needs more than N_b = {} points, got {}",
            cfg.n_b,
            cloud.len()
        )));
    }
    if index.len() != cloud.len() {
        return Err(Error::invalid(
            "spatial index was built for a different cloud",
        ));
    }
    let pairs: Vec<Result<(f64, f64)>> = par_map_indices_with(
        cloud.len(),
        || Vec::with_capacity(cfg.n_b),
        |neighbors, i| {
            // the small-scale neighbourhood is a prefix of the large one
            index.k_nearest_into(i, cfg.n_b - 1, neighbors)?;
            let rows = relative_rows(cloud, i, neighbors);
            let a = lhf_local_sharpness(&rows[..cfg.n_a])?;
            let b = lhf_local_sharpness(&rows)?;
            Ok((a, b))
        },
    );
    let mut gamma_a = Vec::with_capacity(cloud.len());
    let mut gamma_b = Vec::with_capacity(cloud.len());
    for p in pairs {
        let (a, b) = p?;
        gamma_a.push(a);
        gamma_b.push(b);
    }
    let top_a = top_fraction_mean(&gamma_a, cfg.alpha);
    let top_b = top_fraction_mean(&gamma_b, cfg.alpha);
    let epsilon = scale_weight(top_a, top_b);
    let combined = gamma_a
        .iter()
        .zip(&gamma_b)
        .map(|(a, b)| epsilon * a + (1.0 - epsilon) * b)
        .collect();
    Ok(LhfOutput {
        scores: ScoreVector::new(combined, Method::Lhf, Direction::SharpHigh)?,
        gamma_a,
        gamma_b,
        top_a,
        top_b,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_cloud() -> PointCloud {
        PointCloud::new(
            (0..12)
                .map(|i| [i as f64 * 1.1, (i * i) as f64 * 0.01, 0.3])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(LhfConfig::new(3, 8, 0.2).is_err());
        assert!(LhfConfig::new(4, 4, 0.2).is_err());
        assert!(LhfConfig::new(4, 8, 0.0).is_err());
        assert!(LhfConfig::new(4, 8, 0.2).is_ok());
    }

    #[test]
    fn first_row_is_origin() {
        let c = line_cloud();
        let idx = SpatialIndex::build(&c);
        for i in 0..c.len() {
            let s = lhf_local_signal(&c, &idx, i, 5).unwrap();
            assert_eq!(s.len(), 5);
            assert_eq!(s[0], [0.0; 3]);
        }
        assert!(lhf_local_signal(&c, &idx, 0, 12).is_err());
    }

    #[test]
    fn weight_symmetry() {
        assert_eq!(scale_weight(0.3, 0.3), 0.5);
        assert_eq!(scale_weight(0.0, 0.0), 0.5);
        assert!((scale_weight(0.1, 0.3) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn top_fraction_mean_uses_ceiling() {
        let v = [0.1, 0.9, 0.5, 0.7];
        // ceil(0.3 * 4) = 2 -> mean of 0.9 and 0.7
        assert!((top_fraction_mean(&v, 0.3) - 0.8).abs() < 1e-15);
        assert_eq!(top_fraction_mean(&v, 1.0), 0.55);
    }

    #[test]
    fn coincident_neighbourhood_scores_zero() {
        assert_eq!(lhf_local_sharpness(&[[0.0; 3]; 5]).unwrap(), 0.0);
    }

    #[test]
    fn scores_in_unit_interval() {
        let c = line_cloud();
        let idx = SpatialIndex::build(&c);
        let out = lhf_scores_detailed(&c, &idx, &LhfConfig::new(4, 6, 0.25).unwrap()).unwrap();
        for s in out.scores.scores() {
            assert!((0.0..=1.0).contains(s));
        }
        assert!((0.0..=1.0).contains(&out.epsilon));
    }

    #[test]
    fn too_small_cloud() {
        let c = PointCloud::new((0..8).map(|i| [i as f64, 0.0, 0.0]).collect()).unwrap();
        let idx = SpatialIndex::build(&c);
        assert!(lhf_scores(&c, &idx, &LhfConfig::default()).is_err());
    }
}
