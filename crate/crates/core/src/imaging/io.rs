//! 8-bit PNG decode/encode. Decoding maps `v -> v / 255`; encoding rounds
//! half away from zero after clamping to `[0, 1]`.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use super::{from_ycbcr, ColorSpace, ImageBuffer};
use crate::error::{Error, Result};

pub fn read_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let decoded = reader
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
    Ok(from_dynamic(decoded))
}

fn from_dynamic(img: DynamicImage) -> ImageBuffer {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.into_rgb8();
        let data = rgb.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
        ImageBuffer::from_parts(w, h, ColorSpace::Rgb, data)
    } else {
        let gray = img.into_luma8();
        let data = gray.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
        ImageBuffer::from_parts(w, h, ColorSpace::Gray, data)
    }
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    // f64::round is half away from zero
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit PNG. YCbCr input is converted back to RGB; masks are
/// written as grayscale.
pub fn write_png(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let converted;
    let img = if img.colorspace() == ColorSpace::YCbCr {
        converted = from_ycbcr(img)?;
        &converted
    } else {
        img
    };
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = match img.channels() {
        3 => DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("buffer length checked")),
        _ => DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("buffer length checked")),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

/// Snaps every sample to the nearest 8-bit level, as a write/read cycle would.
pub fn quantize_8bit(img: &ImageBuffer) -> ImageBuffer {
    img.map_samples(img.colorspace(), |v| quantize(v) as f64 / 255.0)
}
