use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{intrinsic_resolution, PointCloud};
use crate::error::{Error, Result};

/// Perturb every coordinate with i.i.d. Gaussian noise of standard deviation
/// `level * intrinsic_resolution(cloud)`.
pub fn add_noise(cloud: &PointCloud, level: f64, seed: u64) -> Result<PointCloud> {
    if !(level >= 0.0) || !level.is_finite() {
        return Err(Error::invalid(format!(
            "noise level must be a finite non-negative number, got {level}"
        )));
    }
    if level == 0.0 {
        return Ok(cloud.clone());
    }
    let sigma = level * intrinsic_resolution(cloud)?;
    add_noise_sigma(cloud, sigma, seed)
}

/// Same as [`add_noise`] with an absolute standard deviation.
pub fn add_noise_sigma(cloud: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise sigma must be a finite non-negative number, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy: Vec<_> = cloud
        .points()
        .iter()
        .map(|p| {
            [
                p[0] + normal.sample(&mut rng),
                p[1] + normal.sample(&mut rng),
                p[2] + normal.sample(&mut rng),
            ]
        })
        .collect();
    let out = PointCloud::with_labels(noisy, cloud.labels().map(<[bool]>::to_vec))?;
    Ok(match cloud.name() {
        Some(n) => out.named(n),
        None => out,
    })
}
