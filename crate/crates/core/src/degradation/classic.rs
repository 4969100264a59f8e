use crate::error::{Error, Result};
use crate::imaging::{add_gaussian_noise, convolve, gaussian_kernel, resize_to, Border, ImageBuffer, Kernel2D, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BlurKernel {
    Delta,
    Gaussian { sigma: f64 },
}

impl BlurKernel {
    pub fn kernel(&self) -> Result<Kernel2D> {
        match *self {
            BlurKernel::Delta => Ok(Kernel2D::delta()),
            BlurKernel::Gaussian { sigma } => gaussian_kernel(sigma),
        }
    }
}

/// Blur, integer downscale and additive noise of the classical model
/// `LR = (HR * k) downsampled by s, plus n`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DegradationSpec {
    pub scale: u32,
    pub kernel: BlurKernel,
    /// Standard deviation of the noise, on the `[0, 1]` intensity scale.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn new(scale: u32, kernel: BlurKernel, noise_sigma: f64, seed: u64) -> Result<Self> {
        let spec = Self { scale, kernel, noise_sigma, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn bicubic(scale: u32) -> Result<Self> {
        Self::new(scale, BlurKernel::Delta, 0.0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.scale) {
            return Err(Error::param(format!("scale must be 2, 3 or 4, got {}", self.scale)));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param(format!("noise sigma must be non-negative, got {}", self.noise_sigma)));
        }
        if let BlurKernel::Gaussian { sigma } = self.kernel {
            if !(sigma > 0.0) {
                return Err(Error::param(format!("blur sigma must be positive, got {sigma}")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Applies the degradation to an HR image whose sides are multiples of the
/// scale. Use [`crate::imaging::center_crop_to_multiple`] first otherwise.
pub fn degrade_classic(hr: &ImageBuffer, spec: &DegradationSpec) -> Result<ImageBuffer> {
    spec.validate()?;
    let s = spec.scale as usize;
    let (w, h) = hr.dims();
    if w < 2 * s || h < 2 * s {
        return Err(Error::ImageTooSmall { width: w, height: h, min: 2 * s });
    }
    if w % s != 0 || h % s != 0 {
        return Err(Error::InvalidDimensions(format!("{w}x{h} is not a multiple of scale {s}")));
    }
    let blurred = match spec.kernel {
        BlurKernel::Delta => None,
        k => Some(convolve(hr, &k.kernel()?, Border::Reflect)),
    };
    let lr = resize_to(blurred.as_ref().unwrap_or(hr), w / s, h / s, true)?;
    add_gaussian_noise(&lr, NoiseSpec::new(spec.noise_sigma, spec.seed)?)
}
