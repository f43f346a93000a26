//! Voxel-kernel scorers: convolution (HKC) and high-frequency energy (HKF).
//!
//! Every point gets a length-`k^3` signal counting the cloud points that fall into
//! each voxel of a kernel centered on it. All signals share one spectrum basis,
//! estimated from the kernel's own voxel centers.
//!
//! In that basis the three non-zero eigenvectors are the coordinate (linear) ramps
//! and everything else, including the constant, is the high-frequency null space.
//! A point on a flat face sees a symmetric slab with no linear component, so its
//! signal is entirely high frequency. Near an edge the occupied voxels are lopsided
//! and the linear part grows. Sharp points therefore have the *smaller* scores.

use super::{Direction, Method, ScoreVector};
use crate::error::{Error, Result};
use crate::parallel::par_map_indices_with;
use crate::pointcloud::{PointCloud, SpatialIndex};
use crate::spectrum::{estimate_spectrum, kernel_voxel_centers, KernelConfig, SpectrumBasis};

/// Score reported when the residual `s - s_o` vanishes (a pure high-frequency signal).
pub const BETA_SENTINEL: f64 = 1e12;
const RESIDUAL_EPS: f64 = 1e-12;

/// Voxel counts around point `i`.
///
/// Voxel `n` spans `[c_n - d/2, c_n + d/2)` on each axis, so a point falls in at
/// most one voxel. The center point counts itself.
pub fn local_count_signal(
    cloud: &PointCloud,
    index: &SpatialIndex,
    i: usize,
    cfg: &KernelConfig,
) -> Result<Vec<u32>> {
    if i >= cloud.len() {
        return Err(Error::invalid(format!(
            "point index {i} out of range for {} points",
            cloud.len()
        )));
    }
    let mut counts = vec![0.0; cfg.n_k()];
    fill_count_signal(cloud, index, i, cfg, &mut counts);
    Ok(counts.into_iter().map(|c| c as u32).collect())
}

fn fill_count_signal(
    cloud: &PointCloud,
    index: &SpatialIndex,
    i: usize,
    cfg: &KernelConfig,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let k = cfg.k();
    let d = cfg.d();
    let half = (k / 2) as f64;
    let reach = (half + 0.5) * d;
    let p = cloud.point(i);
    let lo = [p[0] - reach, p[1] - reach, p[2] - reach];
    let hi = [p[0] + reach, p[1] + reach, p[2] + reach];
    let bin = |delta: f64| -> Option<usize> {
        let t = (delta / d + half + 0.5).floor();
        (t >= 0.0 && t < k as f64).then_some(t as usize)
    };
    index.for_each_in_box(&lo, &hi, |_, q| {
        if let (Some(ix), Some(iy), Some(iz)) =
            (bin(q[0] - p[0]), bin(q[1] - p[1]), bin(q[2] - p[2]))
        {
            out[cfg.voxel_index(ix, iy, iz)] += 1.0;
        }
    });
}

/// Shared state of the kernel scorers: the kernel spectrum and the high-pass gains.
#[derive(Debug, Clone)]
pub struct KernelScorer {
    cfg: KernelConfig,
    basis: SpectrumBasis,
    gain: Vec<f64>,
}

impl KernelScorer {
    pub fn new(cfg: KernelConfig) -> Result<Self> {
        if cfg.k() < 3 {
            return Err(Error::invalid("kernel scoring needs k >= 3"));
        }
        let basis = estimate_spectrum(&kernel_voxel_centers(&cfg))?;
        Self::with_basis(cfg, basis)
    }

    /// Scorer over an explicit basis of dimension `k^3`.
    pub fn with_basis(cfg: KernelConfig, basis: SpectrumBasis) -> Result<Self> {
        if basis.dim() != cfg.n_k() {
            return Err(Error::DimensionMismatch {
                expected: cfg.n_k(),
                actual: basis.dim(),
            });
        }
        // Haar-like high pass on normalized eigenvalues
        let gain = basis
            .normalized_eigenvalues()?
            .into_iter()
            .map(|l| 1.0 - l)
            .collect();
        Ok(Self { cfg, basis, gain })
    }

    pub fn config(&self) -> &KernelConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &SpectrumBasis {
        &self.basis
    }

    /// Spectral gains `1 - lambda / lambda_max`.
    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    /// `||s_o|| / ||s - s_o||` with `s_o = V diag(G) V^T s`.
    pub fn beta(&self, s: &[f64]) -> f64 {
        let n = s.len();
        let mut s_hat = vec![0.0; n];
        let mut s_o = vec![0.0; n];
        self.beta_with(s, &mut s_hat, &mut s_o)
    }

    fn beta_with(&self, s: &[f64], s_hat: &mut [f64], s_o: &mut [f64]) -> f64 {
        self.basis.hgft_into(s, s_hat);
        for (c, g) in s_hat.iter_mut().zip(&self.gain) {
            *c *= g;
        }
        self.basis.ihgft_into(s_hat, s_o);
        let out_norm = s_o.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rest = s
            .iter()
            .zip(s_o.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if rest < RESIDUAL_EPS {
            BETA_SENTINEL
        } else {
            out_norm / rest
        }
    }

    /// Share of the spectral L1 mass carried by the `theta` high-frequency components.
    pub fn high_frequency_fraction(&self, s: &[f64]) -> f64 {
        let mut s_hat = vec![0.0; s.len()];
        self.sigma_with(s, &mut s_hat)
    }

    fn sigma_with(&self, s: &[f64], s_hat: &mut [f64]) -> f64 {
        self.basis.hgft_into(s, s_hat);
        let theta = self.basis.theta();
        let high: f64 = s_hat[..theta].iter().map(|c| c.abs()).sum();
        let total: f64 = high + s_hat[theta..].iter().map(|c| c.abs()).sum::<f64>();
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }

    fn check_cloud(&self, cloud: &PointCloud, index: &SpatialIndex) -> Result<()> {
        if cloud.len() < 2 {
            return Err(Error::invalid("kernel scoring needs at least two points"));
        }
        if index.len() != cloud.len() {
            return Err(Error::invalid(
                "spatial index was built for a different cloud",
            ));
        }
        Ok(())
    }

    pub fn hkc(&self, cloud: &PointCloud, index: &SpatialIndex) -> Result<ScoreVector> {
        self.check_cloud(cloud, index)?;
        let n_k = self.cfg.n_k();
        let scores = par_map_indices_with(
            cloud.len(),
            || (vec![0.0; n_k], vec![0.0; n_k], vec![0.0; n_k]),
            |(s, s_hat, s_o), i| {
                fill_count_signal(cloud, index, i, &self.cfg, s);
                self.beta_with(s, s_hat, s_o)
            },
        );
        ScoreVector::new(scores, Method::Hkc, Direction::SharpLow)
    }

    pub fn hkf(&self, cloud: &PointCloud, index: &SpatialIndex) -> Result<ScoreVector> {
        self.check_cloud(cloud, index)?;
        let n_k = self.cfg.n_k();
        let scores = par_map_indices_with(
            cloud.len(),
            || (vec![0.0; n_k], vec![0.0; n_k]),
            |(s, s_hat), i| {
                fill_count_signal(cloud, index, i, &self.cfg, s);
                self.sigma_with(s, s_hat)
            },
        );
        ScoreVector::new(scores, Method::Hkf, Direction::SharpLow)
    }
}

/// Kernel-convolution smoothness `beta` per point. Lower is sharper.
pub fn hkc_scores(
    cloud: &PointCloud,
    index: &SpatialIndex,
    cfg: &KernelConfig,
) -> Result<ScoreVector> {
    KernelScorer::new(*cfg)?.hkc(cloud, index)
}

/// High-frequency energy fraction `sigma` per point. Lower is sharper.
pub fn hkf_scores(
    cloud: &PointCloud,
    index: &SpatialIndex,
    cfg: &KernelConfig,
) -> Result<ScoreVector> {
    KernelScorer::new(*cfg)?.hkf(cloud, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Point3;

    fn unit_kernel() -> KernelConfig {
        KernelConfig::new(3, 1.0).unwrap()
    }

    #[test]
    fn isolated_point_counts_itself() {
        let cloud = PointCloud::new(vec![[0.0; 3], [10.0, 0.0, 0.0]]).unwrap();
        let index = SpatialIndex::build(&cloud);
        let s = local_count_signal(&cloud, &index, 0, &unit_kernel()).unwrap();
        let mut want = vec![0; 27];
        want[13] = 1;
        assert_eq!(s, want);
        assert!(local_count_signal(&cloud, &index, 2, &unit_kernel()).is_err());
    }

    #[test]
    fn planar_patch_is_binary() {
        // one point per voxel in the z = 0 layer, plus points outside the block
        let mut pts: Vec<Point3> = Vec::new();
        for x in -3..=3 {
            for y in -3..=3 {
                pts.push([x as f64, y as f64, 0.0]);
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let index = SpatialIndex::build(&cloud);
        let center = cloud.points().iter().position(|p| *p == [0.0; 3]).unwrap();
        let s = local_count_signal(&cloud, &index, center, &unit_kernel()).unwrap();
        assert!(s.iter().all(|&c| c <= 1));
        assert_eq!(s.iter().sum::<u32>(), 9);
        for ix in 0..3 {
            for iy in 0..3 {
                assert_eq!(s[unit_kernel().voxel_index(ix, iy, 1)], 1);
            }
        }
    }

    #[test]
    fn half_open_boundaries() {
        // +1.5 lies on the upper boundary of the outer voxel and is excluded,
        // -1.5 is on the lower boundary and is included
        let cloud = PointCloud::new(vec![
            [0.0; 3],
            [1.5, 0.0, 0.0],
            [-1.5, 0.0, 0.0],
            [0.5, 0.0, 0.0],
        ])
        .unwrap();
        let index = SpatialIndex::build(&cloud);
        let cfg = unit_kernel();
        let s = local_count_signal(&cloud, &index, 0, &cfg).unwrap();
        assert_eq!(s[cfg.voxel_index(0, 1, 1)], 1);
        assert_eq!(s[cfg.voxel_index(2, 1, 1)], 1); // the point at +0.5
        assert_eq!(s[cfg.voxel_index(1, 1, 1)], 1);
        assert_eq!(s.iter().sum::<u32>(), 3);
    }

    #[test]
    fn beta_on_eigenvector_with_half_eigenvalue() {
        // permuted identity basis of dimension 27, eigenvalues spread over [0, 2]
        let n = 27;
        let mut v = vec![0.0; n * n];
        for r in 0..n {
            v[r * n + (r * 5) % n] = 1.0;
        }
        let eig: Vec<f64> = (0..n).map(|r| 2.0 * r as f64 / (n - 1) as f64).collect();
        let basis = SpectrumBasis::from_parts(v, eig).unwrap();
        let scorer = KernelScorer::with_basis(unit_kernel(), basis).unwrap();
        // column 13 has eigenvalue 1.0, i.e. normalized 0.5
        let f = scorer.basis().column(13).to_vec();
        assert_eq!(scorer.gain()[13], 0.5);
        assert!((scorer.beta(&f) - 1.0).abs() < 1e-12);
        // column 26 is the lowest frequency: no output, beta = 0
        let f = scorer.basis().column(26).to_vec();
        assert_eq!(scorer.beta(&f), 0.0);
        // column 0 passes unchanged: residual vanishes
        let f = scorer.basis().column(0).to_vec();
        assert_eq!(scorer.beta(&f), BETA_SENTINEL);
    }

    #[test]
    fn beta_on_top_kernel_eigenvector_is_zero() {
        let scorer = KernelScorer::new(unit_kernel()).unwrap();
        let mut s = vec![0.0; 27];
        // a signal on a top-eigenvalue column: filter output is exactly zero
        s.copy_from_slice(scorer.basis().column(26));
        assert!(scorer.beta(&s).abs() < 1e-12);
        for x in s.iter_mut() {
            *x *= 3.0;
        }
        assert!(scorer.beta(&s).abs() < 1e-12);
    }

    #[test]
    fn sigma_extremes() {
        let scorer = KernelScorer::new(unit_kernel()).unwrap();
        let theta = scorer.basis().theta();
        assert_eq!(theta, 24);
        // only high-frequency content
        let s = scorer.basis().column(3).to_vec();
        assert!((scorer.high_frequency_fraction(&s) - 1.0).abs() < 1e-12);
        // only low-frequency content
        let s = scorer.basis().column(25).to_vec();
        assert!(scorer.high_frequency_fraction(&s) < 1e-12);
        assert_eq!(scorer.high_frequency_fraction(&[0.0; 27]), 0.0);
    }

    #[test]
    fn flat_face_is_smoother_than_edge() {
        // an L-shaped fold: plane z=0 for x<=0 and plane x=0 for z<=0
        let mut pts: Vec<Point3> = Vec::new();
        for y in -4..=4 {
            for x in -6..=0 {
                pts.push([x as f64, y as f64, 0.0]);
            }
            for z in -6..=-1 {
                pts.push([0.0, y as f64, z as f64]);
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let index = SpatialIndex::build(&cloud);
        let at = |p: Point3| cloud.points().iter().position(|q| *q == p).unwrap();
        let beta = hkc_scores(&cloud, &index, &unit_kernel()).unwrap();
        let sigma = hkf_scores(&cloud, &index, &unit_kernel()).unwrap();
        let edge = at([0.0, 0.0, 0.0]);
        let face = at([-4.0, 0.0, 0.0]);
        assert_eq!(beta.scores()[face], BETA_SENTINEL);
        assert!(beta.scores()[edge] < 10.0);
        assert!((sigma.scores()[face] - 1.0).abs() < 1e-12);
        assert!(sigma.scores()[edge] < 0.99);
        assert_eq!(beta.direction(), Direction::SharpLow);
        assert_eq!(sigma.direction(), Direction::SharpLow);
    }

    #[test]
    fn rejects_tiny_inputs() {
        let cloud = PointCloud::new(vec![[0.0; 3]]).unwrap();
        let index = SpatialIndex::build(&cloud);
        assert!(hkc_scores(&cloud, &index, &unit_kernel()).is_err());
        let cloud = PointCloud::new(vec![[0.0; 3], [1.0; 3]]).unwrap();
        let index = SpatialIndex::build(&cloud);
        assert!(hkf_scores(&cloud, &index, &KernelConfig::new(1, 1.0).unwrap()).is_err());
    }
}
