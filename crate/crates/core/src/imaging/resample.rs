use rayon::prelude::*;

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Cubic-convolution parameter used throughout ("Keys" bicubic).
pub const CUBIC_A: f64 = -0.5;

#[inline]
pub fn cubic_weight(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        (((x - 5.0) * x + 8.0) * x - 4.0) * CUBIC_A
    } else {
        0.0
    }
}

/// Normalized taps for one output sample: first input index plus weights.
struct Taps {
    start: usize,
    weights: Vec<f64>,
}

fn axis_taps(in_len: usize, out_len: usize, antialias: bool) -> Vec<Taps> {
    let scale = out_len as f64 / in_len as f64;
    let stretch = if antialias && scale < 1.0 { 1.0 / scale } else { 1.0 };
    let support = 2.0 * stretch;
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale;
            let lo = ((center - support).floor().max(0.0)) as usize;
            let hi = ((center + support).ceil() as usize).min(in_len);
            let mut weights: Vec<f64> =
                (lo..hi).map(|j| cubic_weight((j as f64 + 0.5 - center) / stretch)).collect();
            let sum: f64 = weights.iter().sum();
            if sum != 0.0 {
                weights.iter_mut().for_each(|w| *w /= sum);
            }
            Taps { start: lo, weights }
        })
        .collect()
}

/// Resamples to explicit output dimensions with the cubic-convolution kernel.
///
/// Pixel centers are aligned (`src = (dst + 0.5) / scale - 0.5`). With
/// `antialias` set and a shrinking axis, the kernel is stretched by the inverse
/// scale. Taps falling outside the image are dropped and the rest renormalized.
pub fn resize_to(img: &ImageBuffer, out_w: usize, out_h: usize, antialias: bool) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidDimensions(format!("resize target {out_w}x{out_h}")));
    }
    let (w, h) = img.dims();
    let ch = img.channels();
    let src = img.data();

    let xt = axis_taps(w, out_w, antialias);
    let mut horiz = vec![0.0; out_w * h * ch];
    horiz.par_chunks_mut(out_w * ch).enumerate().for_each(|(y, row)| {
        let src_row = &src[y * w * ch..(y + 1) * w * ch];
        for (x, taps) in xt.iter().enumerate() {
            for c in 0..ch {
                let mut acc = 0.0;
                for (k, wt) in taps.weights.iter().enumerate() {
                    acc += wt * src_row[(taps.start + k) * ch + c];
                }
                row[x * ch + c] = acc;
            }
        }
    });

    let yt = axis_taps(h, out_h, antialias);
    let mut out = vec![0.0; out_w * out_h * ch];
    out.par_chunks_mut(out_w * ch).enumerate().for_each(|(y, row)| {
        let taps = &yt[y];
        for (i, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, wt) in taps.weights.iter().enumerate() {
                acc += wt * horiz[(taps.start + k) * out_w * ch + i];
            }
            *v = acc.clamp(0.0, 1.0);
        }
    });
    Ok(ImageBuffer::from_parts(out_w, out_h, img.colorspace(), out))
}

/// Resamples by `scale`; output dims are `round(input dims * scale)`.
pub fn resize_bicubic(img: &ImageBuffer, scale: f64, antialias: bool) -> Result<ImageBuffer> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::param(format!("resize scale must be positive, got {scale}")));
    }
    let out_w = (img.width() as f64 * scale).round() as usize;
    let out_h = (img.height() as f64 * scale).round() as usize;
    resize_to(img, out_w, out_h, antialias)
}
