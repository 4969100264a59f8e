//! Raster primitives shared by every other module.
//!
//! Images are immutable values holding `f64` samples in the nominal range
//! `[0, 1]`, interleaved row-major (`(y * width + x) * channels + c`).
//! Quantization to 8 bits only happens when a PNG is written.

mod color;
mod filter;
mod geometry;
pub mod io;
mod noise;
mod resample;
mod warp;

pub use color::{from_ycbcr, luma, to_ycbcr};
pub use filter::{convolve, gaussian_kernel, Border, Kernel2D};
pub(crate) use filter::reflect as filter_reflect;
pub use geometry::{center_crop_to_multiple, crop, flip_h, rotate90};
pub use noise::{add_gaussian_noise, NoiseSpec};
pub use resample::{cubic_weight, resize_bicubic, resize_to, CUBIC_A};
pub use warp::{warp_affine, AffineTransform, Interpolation};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Rgb,
    YCbCr,
    Gray,
    Mask,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Rgb | ColorSpace::YCbCr => 3,
            ColorSpace::Gray | ColorSpace::Mask => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, colorspace: ColorSpace, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!("{width}x{height}")));
        }
        let expected = width * height * colorspace.channels();
        if data.len() != expected {
            return Err(Error::InvalidDimensions(format!(
                "{width}x{height}x{} needs {expected} samples, got {}",
                colorspace.channels(),
                data.len()
            )));
        }
        if colorspace == ColorSpace::Mask && data.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::param("mask samples must be exactly 0.0 or 1.0"));
        }
        Ok(Self { width, height, colorspace, data })
    }

    pub fn filled(width: usize, height: usize, colorspace: ColorSpace, value: f64) -> Result<Self> {
        Self::new(width, height, colorspace, vec![value; width * height * colorspace.channels()])
    }

    /// Builds an image by evaluating `f(x, y, channel)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let ch = colorspace.channels();
        let mut data = Vec::with_capacity(width * height * ch);
        for y in 0..height {
            for x in 0..width {
                for c in 0..ch {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, colorspace, data)
    }

    /// Internal constructor for operations that already guarantee the invariants.
    pub(crate) fn from_parts(width: usize, height: usize, colorspace: ColorSpace, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * colorspace.channels());
        debug_assert!(width > 0 && height > 0);
        Self { width, height, colorspace, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.colorspace.channels()
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels() + c]
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, c: usize) -> Result<ImageBuffer> {
        let ch = self.channels();
        if c >= ch {
            return Err(Error::param(format!("channel {c} out of range for {ch}-channel image")));
        }
        let cs = if self.colorspace == ColorSpace::Mask { ColorSpace::Mask } else { ColorSpace::Gray };
        let data = self.data.iter().skip(c).step_by(ch).copied().collect();
        Ok(Self::from_parts(self.width, self.height, cs, data))
    }

    /// Same samples under a different tag. Channel counts must agree; tagging as
    /// `Mask` revalidates the binary invariant.
    pub fn with_colorspace(self, colorspace: ColorSpace) -> Result<ImageBuffer> {
        if colorspace.channels() != self.channels() {
            return Err(Error::InvalidColorspace { expected: colorspace, found: self.colorspace });
        }
        Self::new(self.width, self.height, colorspace, self.data)
    }

    /// Grayscale view used for feature extraction (luma for color input).
    pub fn to_gray(&self) -> ImageBuffer {
        match self.colorspace {
            ColorSpace::Gray => self.clone(),
            ColorSpace::Mask => Self::from_parts(self.width, self.height, ColorSpace::Gray, self.data.clone()),
            ColorSpace::YCbCr => {
                let data = self.data.chunks_exact(3).map(|p| p[0]).collect();
                Self::from_parts(self.width, self.height, ColorSpace::Gray, data)
            }
            ColorSpace::Rgb => {
                let data = self
                    .data
                    .chunks_exact(3)
                    .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
                    .collect();
                Self::from_parts(self.width, self.height, ColorSpace::Gray, data)
            }
        }
    }

    pub(crate) fn map_samples(&self, colorspace: ColorSpace, f: impl Fn(f64) -> f64) -> ImageBuffer {
        Self::from_parts(self.width, self.height, colorspace, self.data.iter().map(|&v| f(v)).collect())
    }
}
