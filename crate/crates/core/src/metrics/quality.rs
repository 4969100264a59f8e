use crate::error::{Error, Result};
use crate::imaging::{crop, luma, ImageBuffer};

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const L: f64 = 255.0;

/// Y plane on the 8-bit scale, `crop_border` pixels removed from each side.
fn y_plane(img: &ImageBuffer, crop_border: usize) -> Result<ImageBuffer> {
    let (w, h) = img.dims();
    if 2 * crop_border >= w.min(h) {
        return Err(Error::param(format!("crop border {crop_border} leaves nothing of a {w}x{h} image")));
    }
    let y = luma(img);
    let y = if crop_border > 0 { crop(&y, crop_border, crop_border, w - 2 * crop_border, h - 2 * crop_border)? } else { y };
    Ok(y.map_samples(y.colorspace(), |v| v * 255.0))
}

fn planes(reference: &ImageBuffer, test: &ImageBuffer, crop_border: usize) -> Result<(ImageBuffer, ImageBuffer)> {
    if reference.dims() != test.dims() {
        return Err(Error::DimensionMismatch { a: reference.dims(), b: test.dims() });
    }
    Ok((y_plane(reference, crop_border)?, y_plane(test, crop_border)?))
}

/// PSNR of the BT.601 luma on the 8-bit scale, capped at [`PSNR_CAP_DB`].
pub fn psnr_y(reference: &ImageBuffer, test: &ImageBuffer, crop_border: usize) -> Result<f64> {
    let (a, b) = planes(reference, test, crop_border)?;
    let n = a.data().len() as f64;
    let mse = a.data().iter().zip(b.data()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (L * L / mse).log10()).min(PSNR_CAP_DB))
}

fn ssim_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let g: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable 'valid' filtering: output is `(w - 10) x (h - 10)`.
fn filter_valid(data: &[f64], w: usize, h: usize, g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = g.iter().zip(&row[x..x + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = g.iter().enumerate().map(|(i, a)| a * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Single-scale SSIM of the luma: 11x11 Gaussian window with sigma 1.5,
/// averaged over all window positions fully inside the image.
pub fn ssim_y(reference: &ImageBuffer, test: &ImageBuffer, crop_border: usize) -> Result<f64> {
    let (a, b) = planes(reference, test, crop_border)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall { width: w, height: h, min: SSIM_WINDOW });
    }
    let g = ssim_window();
    let (x, y) = (a.data(), b.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mx = filter_valid(x, w, h, &g);
    let my = filter_valid(y, w, h, &g);
    let sxx = filter_valid(&xx, w, h, &g);
    let syy = filter_valid(&yy, w, h, &g);
    let sxy = filter_valid(&xy, w, h, &g);
    let (c1, c2) = ((K1 * L).powi(2), (K2 * L).powi(2));
    let n = mx.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / n as f64)
}
