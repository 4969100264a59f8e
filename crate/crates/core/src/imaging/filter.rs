use rayon::prelude::*;

use super::{ColorSpace, ImageBuffer};
use crate::error::{Error, Result};

/// Border extension for convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Border {
    /// Mirror about the edge sample without repeating it (`-1 -> 1`).
    #[default]
    Reflect,
}

/// Square, normalized convolution kernel of side `2 * radius + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(Error::param(format!("kernel of radius {radius} needs {} weights", side * side)));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::param(format!("kernel weights sum to {sum}, expected 1")));
        }
        Ok(Self { radius, weights })
    }

    pub fn delta() -> Self {
        Self { radius: 0, weights: vec![1.0] }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the center.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        self.weights[((dy + r) * (2 * r + 1) + dx + r) as usize]
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Gaussian blur kernel with radius `ceil(3 * sigma)`.
///
/// Each tap is the Gaussian integrated over its unit pixel cell; the
/// truncated kernel is then renormalized to sum to one.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel2D> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let r = radius as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| std_normal_cdf((i as f64 + 0.5) / sigma) - std_normal_cdf((i as f64 - 0.5) / sigma))
        .collect();
    let mut weights: Vec<f64> = taps.iter().flat_map(|wy| taps.iter().map(move |wx| wx * wy)).collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    Ok(Kernel2D { radius, weights })
}

#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// 2-D convolution with reflected borders; output has the input's dimensions.
pub fn convolve(img: &ImageBuffer, kernel: &Kernel2D, border: Border) -> ImageBuffer {
    let Border::Reflect = border;
    let cs = match img.colorspace() {
        ColorSpace::Mask => ColorSpace::Gray,
        other => other,
    };
    if kernel.radius == 0 {
        let w = kernel.weights[0];
        return img.map_samples(cs, |v| v * w);
    }
    let (w, h) = img.dims();
    let ch = img.channels();
    let r = kernel.radius as isize;
    let side = kernel.side();
    let src = img.data();
    let xs: Vec<usize> = (-r..w as isize + r).map(|x| reflect(x, w)).collect();
    let mut out = vec![0.0; w * h * ch];
    out.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for ky in 0..side {
                    let sy = reflect(y as isize + ky as isize - r, h);
                    let base = sy * w;
                    let krow = &kernel.weights[ky * side..(ky + 1) * side];
                    for (kx, kw) in krow.iter().enumerate() {
                        acc += kw * src[(base + xs[x + kx]) * ch + c];
                    }
                }
                row[x * ch + c] = acc;
            }
        }
    });
    ImageBuffer::from_parts(w, h, cs, out)
}
