use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ColorSpace, ImageBuffer};
use crate::error::{Error, Result};

/// Additive white Gaussian noise, in normalized intensity units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::param(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }
}

/// Adds seeded Gaussian noise to every sample and clamps to `[0, 1]`.
/// A zero sigma returns the input untouched.
pub fn add_gaussian_noise(img: &ImageBuffer, spec: NoiseSpec) -> Result<ImageBuffer> {
    let spec = NoiseSpec::new(spec.sigma, spec.seed)?;
    if spec.sigma == 0.0 {
        return Ok(img.clone());
    }
    let cs = match img.colorspace() {
        ColorSpace::Mask => ColorSpace::Gray,
        other => other,
    };
    let normal = Normal::new(0.0, spec.sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let data = img.data().iter().map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0)).collect();
    Ok(ImageBuffer::from_parts(img.width(), img.height(), cs, data))
}
