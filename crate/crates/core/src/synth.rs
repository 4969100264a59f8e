//! Seeded synthetic fixtures: textured scenes and affine perturbations used
//! by tests, benchmarks and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::{
    add_gaussian_noise, convolve, crop, gaussian_kernel, resize_to, warp_affine, AffineTransform, Border, ColorSpace, ImageBuffer,
    Interpolation, NoiseSpec,
};

/// Grayscale scene of overlapping discs and boxes over a smooth background.
pub fn textured_gray(width: usize, height: usize, seed: u64) -> ImageBuffer {
    textured(width, height, seed, ColorSpace::Gray)
}

/// Color variant of [`textured_gray`]; each shape gets its own RGB tint.
pub fn textured_rgb(width: usize, height: usize, seed: u64) -> ImageBuffer {
    textured(width, height, seed, ColorSpace::Rgb)
}

fn textured(width: usize, height: usize, seed: u64, cs: ColorSpace) -> ImageBuffer {
    let ch = cs.channels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| (rng.random_range(0.01..0.06), rng.random_range(0.01..0.06), rng.random_range(0.0..6.3), rng.random_range(0.05..0.12)))
        .collect();
    let mut data = vec![0.0; width * height * ch];
    for y in 0..height {
        for x in 0..width {
            let v = 0.45 + waves.iter().map(|&(fx, fy, ph, amp)| amp * (fx * x as f64 + fy * y as f64 + ph).sin()).sum::<f64>();
            for c in 0..ch {
                data[(y * width + x) * ch + c] = v;
            }
        }
    }
    let area = w * h;
    let shapes = (area / 180.0).round() as usize;
    for _ in 0..shapes {
        let cx = rng.random_range(0.0..w);
        let cy = rng.random_range(0.0..h);
        let r = rng.random_range(2.5..14.0);
        let disc = rng.random_bool(0.6);
        let aspect = rng.random_range(0.5..1.6);
        let tint: Vec<f64> = (0..ch).map(|_| rng.random_range(0.05..0.95)).collect();
        let (x0, x1) = ((cx - r * 1.6).floor().max(0.0) as usize, ((cx + r * 1.6).ceil() as usize).min(width));
        let (y0, y1) = ((cy - r * 1.6).floor().max(0.0) as usize, ((cy + r * 1.6).ceil() as usize).min(height));
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = (x as f64 + 0.5 - cx) / (r * aspect);
                let dy = (y as f64 + 0.5 - cy) / r;
                let inside = if disc { dx * dx + dy * dy <= 1.0 } else { dx.abs() <= 1.0 && dy.abs() <= 1.0 };
                if inside {
                    for (c, t) in tint.iter().enumerate() {
                        data[(y * width + x) * ch + c] = *t;
                    }
                }
            }
        }
    }
    let img = ImageBuffer::new(width, height, cs, data).expect("dimensions are consistent");
    let k = gaussian_kernel(0.7).expect("positive sigma");
    convolve(&img, &k, Border::Reflect)
}

/// Random affine transform about the frame center: rotation within
/// `±max_rot_deg`, isotropic scale in `[1 - max_scale_dev, 1 + max_scale_dev]`
/// and translation within `±max_shift` pixels per axis.
pub fn random_affine(width: usize, height: usize, max_rot_deg: f64, max_scale_dev: f64, max_shift: f64, rng: &mut impl Rng) -> AffineTransform {
    let angle = rng.random_range(-max_rot_deg..=max_rot_deg).to_radians();
    let scale = rng.random_range(1.0 - max_scale_dev..=1.0 + max_scale_dev);
    let tx = rng.random_range(-max_shift..=max_shift);
    let ty = rng.random_range(-max_shift..=max_shift);
    AffineTransform::similarity_about(width as f64 / 2.0, height as f64 / 2.0, angle, scale, tx, ty)
        .expect("bounded similarity is invertible")
}

/// Paired HR/LR frame sequence of a panning camera with two still segments.
pub struct DualQualitySequence {
    pub hr: Vec<ImageBuffer>,
    pub lr: Vec<ImageBuffer>,
    /// Middle frame of each still segment.
    pub still_midpoints: Vec<usize>,
}

/// 18 frames, HR 384x288 and LR 192x144: frames 0-5 still, 6-10 panning,
/// 11-17 still. LR frames are slightly misregistered, blurred, halved and
/// noisier, as a low-bitrate copy of the same capture would be.
pub fn dual_quality_sequence(seed: u64) -> DualQualitySequence {
    let (fw, fh) = (384, 288);
    let m = 8;
    let canvas = textured_rgb(fw + 96 + 2 * m, fh + 2 * m, seed);
    let offsets: Vec<usize> = [0; 6].into_iter().chain([12, 24, 36, 48, 60]).chain([96; 7]).collect();
    let shift = AffineTransform::similarity_about(fw as f64 / 2.0, fh as f64 / 2.0, 0.3f64.to_radians(), 1.0, 1.5, -1.0)
        .expect("small similarity is invertible");
    // source crops carry a margin so the misregistration never exposes a border
    let shift = AffineTransform::translation(-(m as f64), -(m as f64)).then(&shift);
    let blur = gaussian_kernel(0.8).expect("positive sigma");
    let mut hr = Vec::with_capacity(offsets.len());
    let mut lr = Vec::with_capacity(offsets.len());
    for (i, &ox) in offsets.iter().enumerate() {
        let frame = crop(&canvas, ox + m, m, fw, fh).expect("offset inside canvas");
        let source = crop(&canvas, ox, 0, fw + 2 * m, fh + 2 * m).expect("offset inside canvas");
        let noisy = add_gaussian_noise(&frame, NoiseSpec { sigma: 0.001, seed: seed ^ (2 * i as u64) }).expect("valid noise");
        hr.push(noisy);
        let (moved, _) = warp_affine(&source, &shift, fw, fh, Interpolation::Bilinear).expect("invertible shift");
        let small = resize_to(&convolve(&moved, &blur, Border::Reflect), fw / 2, fh / 2, true).expect("valid size");
        lr.push(add_gaussian_noise(&small, NoiseSpec { sigma: 0.004, seed: seed ^ (2 * i as u64 + 1) }).expect("valid noise"));
    }
    DualQualitySequence { hr, lr, still_midpoints: vec![2, 14] }
}
