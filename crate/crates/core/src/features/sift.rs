//! Difference-of-Gaussians keypoints with 4x4x8 gradient-orientation
//! descriptors.
//!
//! The pyramid halves each octave by center-aligned resampling rather than by
//! dropping every other sample, so detections are equivariant under flips and
//! quarter turns of the input.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::filter_reflect as reflect;
use crate::imaging::{ColorSpace, ImageBuffer};

pub const DESCRIPTOR_LEN: usize = 128;
pub const MIN_DIMENSION: usize = 32;

const DESC_WIDTH: usize = 4;
const DESC_BINS: usize = 8;
const ORI_BINS: usize = 36;
const ORI_SIGMA_FACTOR: f64 = 1.5;
const ORI_PEAK_RATIO: f64 = 0.8;
const DESC_MAG_CLAMP: f64 = 0.2;
const MAX_REFINE_STEPS: usize = 5;
const IMG_BORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftParams {
    pub scales_per_octave: usize,
    pub sigma: f64,
    /// Blur already present in the input image.
    pub assumed_blur: f64,
    /// Contrast threshold for images in `[0, 1]`. As in the common
    /// implementations it is divided by `scales_per_octave` before being
    /// compared with |DoG| at the refined extremum.
    pub contrast_threshold: f64,
    /// Maximum principal-curvature ratio.
    pub edge_threshold: f64,
    /// Start the pyramid from a 2x upsampled input (one extra octave).
    pub upsample_base: bool,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self { scales_per_octave: 3, sigma: 1.6, assumed_blur: 0.5, contrast_threshold: 0.03, edge_threshold: 10.0, upsample_base: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    pub orientation: f64,
    pub response: f64,
}

/// Unit-length, non-negative 128-component descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    v: [f32; DESCRIPTOR_LEN],
}

impl Descriptor {
    /// Normalizes `v` to unit length. Returns `None` for an all-zero vector or
    /// negative components.
    pub fn from_components(v: [f32; DESCRIPTOR_LEN]) -> Option<Self> {
        if v.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return None;
        }
        let norm = v.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let mut out = [0.0f32; DESCRIPTOR_LEN];
        for (o, c) in out.iter_mut().zip(v) {
            *o = (c as f64 / norm) as f32;
        }
        Some(Self { v: out })
    }

    pub fn components(&self) -> &[f32; DESCRIPTOR_LEN] {
        &self.v
    }

    #[inline]
    pub fn distance_sq(&self, other: &Descriptor) -> f32 {
        self.v.iter().zip(&other.v).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Plane {
    #[inline]
    fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.w + x]
    }

    fn sub(&self, other: &Plane) -> Plane {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Plane { w: self.w, h: self.h, data }
    }
}

fn gaussian_taps(sigma: f64) -> Vec<f32> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let raw: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| (v / sum) as f32).collect()
}

fn blur(p: &Plane, sigma: f64) -> Plane {
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as isize;
    let (w, h) = (p.w, p.h);
    let xs: Vec<usize> = (-r..w as isize + r).map(|i| reflect(i, w)).collect();
    let ys: Vec<usize> = (-r..h as isize + r).map(|i| reflect(i, h)).collect();
    let mut tmp = vec![0.0f32; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let src = &p.data[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            *out = taps.iter().enumerate().map(|(k, t)| t * src[xs[x + k]]).sum();
        }
    });
    let mut data = vec![0.0f32; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = taps.iter().enumerate().map(|(k, t)| t * tmp[ys[y + k] * w + x]).sum();
        }
    });
    Plane { w, h, data }
}

/// Center-aligned linear taps resampling `n` samples to `m`.
fn linear_taps(n: usize, m: usize) -> Vec<(usize, usize, f32)> {
    let f = n as f64 / m as f64;
    (0..m)
        .map(|i| {
            let s = ((i as f64 + 0.5) * f - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, (s - i0 as f64) as f32)
        })
        .collect()
}

fn resample(p: &Plane, w: usize, h: usize) -> Plane {
    let xt = linear_taps(p.w, w);
    let yt = linear_taps(p.h, h);
    let mut tmp = vec![0.0f32; w * p.h];
    for y in 0..p.h {
        for (x, &(a, b, f)) in xt.iter().enumerate() {
            let (va, vb) = (p.at(a, y), p.at(b, y));
            tmp[y * w + x] = va + (vb - va) * f;
        }
    }
    let mut data = vec![0.0f32; w * h];
    for (y, &(a, b, f)) in yt.iter().enumerate() {
        for x in 0..w {
            let (va, vb) = (tmp[a * w + x], tmp[b * w + x]);
            data[y * w + x] = va + (vb - va) * f;
        }
    }
    Plane { w, h, data }
}

struct Octave {
    gauss: Vec<Plane>,
    dog: Vec<Plane>,
    /// Original-image pixels per octave pixel, per axis.
    fx: f64,
    fy: f64,
}

/// `orig` is the size of the caller's image, which the base may upsample.
fn build_pyramid(base: Plane, orig: (usize, usize), octaves: usize, p: &SiftParams) -> Vec<Octave> {
    let s = p.scales_per_octave;
    let k = 2f64.powf(1.0 / s as f64);
    let increments: Vec<f64> = (1..s + 3)
        .map(|i| {
            let prev = p.sigma * k.powi(i as i32 - 1);
            let total = prev * k;
            (total * total - prev * prev).sqrt()
        })
        .collect();
    let (w0, h0) = (orig.0 as f64, orig.1 as f64);
    let mut out: Vec<Octave> = Vec::with_capacity(octaves);
    let mut first = base;
    for o in 0..octaves {
        if o > 0 {
            let prev = &out[o - 1].gauss[s];
            first = resample(prev, prev.w / 2, prev.h / 2);
        }
        let mut gauss = Vec::with_capacity(s + 3);
        gauss.push(first.clone());
        for inc in &increments {
            let next = blur(gauss.last().expect("nonempty"), *inc);
            gauss.push(next);
        }
        let dog = gauss.windows(2).map(|pair| pair[1].sub(&pair[0])).collect();
        let fx = w0 / first.w as f64;
        let fy = h0 / first.h as f64;
        out.push(Octave { gauss, dog, fx, fy });
    }
    out
}

struct Extremum {
    octave: usize,
    /// Refined octave-space position and fractional layer.
    x: f64,
    y: f64,
    layer: f64,
    contrast: f64,
}

fn is_extremum(dog: &[Plane], s: usize, x: usize, y: usize) -> bool {
    let v = dog[s].at(x, y);
    let mut max = true;
    let mut min = true;
    for (ds, plane) in dog[s - 1..=s + 1].iter().enumerate() {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if ds == 1 && xx == x && yy == y {
                    continue;
                }
                let n = plane.at(xx, yy);
                max &= v > n;
                min &= v < n;
                if !max && !min {
                    return false;
                }
            }
        }
    }
    max || min
}

fn solve3(h: [[f64; 3]; 3], g: [f64; 3]) -> Option<[f64; 3]> {
    let det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
        + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
    if det.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut m = h;
        for row in 0..3 {
            m[row][col] = g[row];
        }
        let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        *o = d / det;
    }
    Some(out)
}

fn refine(oct: &Octave, octave: usize, mut s: usize, mut x: usize, mut y: usize, p: &SiftParams) -> Option<Extremum> {
    let layers = p.scales_per_octave;
    let (w, h) = (oct.dog[0].w, oct.dog[0].h);
    let mut offset = [0.0; 3];
    let mut grad = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    let mut converged = false;
    for _ in 0..MAX_REFINE_STEPS {
        let d = |ds: isize, dx: isize, dy: isize| -> f64 {
            oct.dog[(s as isize + ds) as usize].at((x as isize + dx) as usize, (y as isize + dy) as usize) as f64
        };
        let v = d(0, 0, 0);
        grad = [(d(0, 1, 0) - d(0, -1, 0)) * 0.5, (d(0, 0, 1) - d(0, 0, -1)) * 0.5, (d(1, 0, 0) - d(-1, 0, 0)) * 0.5];
        let dxx = d(0, 1, 0) + d(0, -1, 0) - 2.0 * v;
        let dyy = d(0, 0, 1) + d(0, 0, -1) - 2.0 * v;
        let dss = d(1, 0, 0) + d(-1, 0, 0) - 2.0 * v;
        let dxy = (d(0, 1, 1) - d(0, -1, 1) - d(0, 1, -1) + d(0, -1, -1)) * 0.25;
        let dxs = (d(1, 1, 0) - d(1, -1, 0) - d(-1, 1, 0) + d(-1, -1, 0)) * 0.25;
        let dys = (d(1, 0, 1) - d(1, 0, -1) - d(-1, 0, 1) + d(-1, 0, -1)) * 0.25;
        hess = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
        let sol = solve3(hess, grad)?;
        offset = [-sol[0], -sol[1], -sol[2]];
        if offset.iter().all(|o| o.abs() < 0.5) {
            converged = true;
            break;
        }
        if offset.iter().any(|o| o.abs() > 1e3) {
            return None;
        }
        let nx = x as isize + offset[0].round() as isize;
        let ny = y as isize + offset[1].round() as isize;
        let ns = s as isize + offset[2].round() as isize;
        let b = IMG_BORDER as isize;
        if ns < 1 || ns > layers as isize || nx < b || ny < b || nx >= w as isize - b || ny >= h as isize - b {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        s = ns as usize;
    }
    if !converged {
        return None;
    }
    let v = oct.dog[s].at(x, y) as f64;
    let contrast = v + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
    if contrast.abs() * (layers as f64) < p.contrast_threshold {
        return None;
    }
    let tr = hess[0][0] + hess[1][1];
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[0][1];
    let r = p.edge_threshold;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }
    Some(Extremum { octave, x: x as f64 + offset[0], y: y as f64 + offset[1], layer: s as f64 + offset[2], contrast })
}

fn detect_extrema(pyr: &[Octave], p: &SiftParams) -> Vec<Extremum> {
    let pre = 0.5 * p.contrast_threshold / p.scales_per_octave as f64;
    let jobs: Vec<(usize, usize)> =
        (0..pyr.len()).flat_map(|o| (1..=p.scales_per_octave).map(move |s| (o, s))).collect();
    jobs.par_iter()
        .map(|&(o, s)| {
            let oct = &pyr[o];
            let (w, h) = (oct.dog[s].w, oct.dog[s].h);
            let mut found = Vec::new();
            if w <= 2 * IMG_BORDER || h <= 2 * IMG_BORDER {
                return found;
            }
            for y in IMG_BORDER..h - IMG_BORDER {
                for x in IMG_BORDER..w - IMG_BORDER {
                    let v = oct.dog[s].at(x, y) as f64;
                    if v.abs() <= pre || !is_extremum(&oct.dog, s, x, y) {
                        continue;
                    }
                    if let Some(e) = refine(oct, o, s, x, y, p) {
                        found.push(e);
                    }
                }
            }
            found
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[inline]
fn gradient(img: &Plane, x: usize, y: usize) -> (f64, f64) {
    let gx = img.at(x + 1, y) as f64 - img.at(x - 1, y) as f64;
    let gy = img.at(x, y + 1) as f64 - img.at(x, y - 1) as f64;
    (gx, gy)
}

fn orientations(img: &Plane, cx: usize, cy: usize, sigma: f64) -> Vec<f64> {
    let sw = ORI_SIGMA_FACTOR * sigma;
    let radius = (3.0 * sw).round() as isize;
    let denom = 2.0 * sw * sw;
    let mut hist = [0.0f64; ORI_BINS];
    for dy in -radius..=radius {
        let y = cy as isize + dy;
        if y < 1 || y >= img.h as isize - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let x = cx as isize + dx;
            if x < 1 || x >= img.w as isize - 1 {
                continue;
            }
            let (gx, gy) = gradient(img, x as usize, y as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            let angle = gy.atan2(gx);
            let weight = (-((dx * dx + dy * dy) as f64) / denom).exp();
            let bin = ((ORI_BINS as f64 * angle / TAU).round() as isize).rem_euclid(ORI_BINS as isize) as usize;
            hist[bin] += weight * mag;
        }
    }
    let n = ORI_BINS;
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let at = |k: isize| hist[(i as isize + k).rem_euclid(n as isize) as usize];
            (at(-2) + at(2)) / 16.0 + (at(-1) + at(1)) * 4.0 / 16.0 + at(0) * 6.0 / 16.0
        })
        .collect();
    let peak = smooth.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..n {
        let l = smooth[(i + n - 1) % n];
        let r = smooth[(i + 1) % n];
        let c = smooth[i];
        if c > l && c > r && c >= ORI_PEAK_RATIO * peak {
            let bin = i as f64 + 0.5 * (l - r) / (l - 2.0 * c + r);
            out.push((TAU * bin / n as f64).rem_euclid(TAU));
        }
    }
    out
}

fn describe(img: &Plane, x: f64, y: f64, sigma: f64, ori: f64) -> Option<Descriptor> {
    let d = DESC_WIDTH as f64;
    let n = DESC_BINS as f64;
    let hist_width = 3.0 * sigma;
    let diag = ((img.w * img.w + img.h * img.h) as f64).sqrt();
    let radius = (hist_width * std::f64::consts::SQRT_2 * (d + 1.0) * 0.5).round().min(diag) as isize;
    let (sin_o, cos_o) = ori.sin_cos();
    let cx = x.round() as isize;
    let cy = y.round() as isize;
    let exp_scale = -1.0 / (d * d * 0.5);
    let side = DESC_WIDTH + 2;
    let mut hist = vec![0.0f64; side * side * (DESC_BINS + 2)];
    for i in -radius..=radius {
        for j in -radius..=radius {
            let c_rot = (j as f64 * cos_o + i as f64 * sin_o) / hist_width;
            let r_rot = (-(j as f64) * sin_o + i as f64 * cos_o) / hist_width;
            let rbin = r_rot + d / 2.0 - 0.5;
            let cbin = c_rot + d / 2.0 - 0.5;
            if rbin <= -1.0 || rbin >= d || cbin <= -1.0 || cbin >= d {
                continue;
            }
            let px = cx + j;
            let py = cy + i;
            if px < 1 || py < 1 || px >= img.w as isize - 1 || py >= img.h as isize - 1 {
                continue;
            }
            let (gx, gy) = gradient(img, px as usize, py as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            let obin = ((gy.atan2(gx) - ori).rem_euclid(TAU)) * n / TAU;
            let weight = ((c_rot * c_rot + r_rot * r_rot) * exp_scale).exp();
            let v = mag * weight;

            let r0 = rbin.floor();
            let c0 = cbin.floor();
            let o0 = obin.floor();
            let (fr, fc, fo) = (rbin - r0, cbin - c0, obin - o0);
            // shifted by one so the -1 bins land in padding
            let (r0, c0, o0) = ((r0 + 1.0) as usize, (c0 + 1.0) as usize, o0 as usize);
            for (dr, wr) in [(0, 1.0 - fr), (1, fr)] {
                for (dc, wc) in [(0, 1.0 - fc), (1, fc)] {
                    for (dob, wo) in [(0, 1.0 - fo), (1, fo)] {
                        let ob = (o0 + dob) % DESC_BINS;
                        hist[((r0 + dr) * side + c0 + dc) * (DESC_BINS + 2) + ob] += v * wr * wc * wo;
                    }
                }
            }
        }
    }
    let mut raw = [0.0f64; DESCRIPTOR_LEN];
    for r in 0..DESC_WIDTH {
        for c in 0..DESC_WIDTH {
            for o in 0..DESC_BINS {
                raw[(r * DESC_WIDTH + c) * DESC_BINS + o] = hist[((r + 1) * side + c + 1) * (DESC_BINS + 2) + o];
            }
        }
    }
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let cap = DESC_MAG_CLAMP * norm;
    let mut clamped = [0.0f32; DESCRIPTOR_LEN];
    for (o, v) in clamped.iter_mut().zip(raw) {
        *o = v.min(cap) as f32;
    }
    Descriptor::from_components(clamped)
}

/// Detects keypoints and computes one descriptor per keypoint.
///
/// Input must be single-channel with both sides at least [`MIN_DIMENSION`].
/// Output order is deterministic: octave, then layer, then raster order, then
/// orientation.
pub fn detect_and_describe(img: &ImageBuffer) -> Result<(Vec<Keypoint>, Vec<Descriptor>)> {
    detect_and_describe_with(img, &SiftParams::default())
}

pub fn detect_and_describe_with(img: &ImageBuffer, params: &SiftParams) -> Result<(Vec<Keypoint>, Vec<Descriptor>)> {
    if !matches!(img.colorspace(), ColorSpace::Gray | ColorSpace::Mask) {
        return Err(Error::InvalidColorspace { expected: ColorSpace::Gray, found: img.colorspace() });
    }
    let (w, h) = img.dims();
    if w.min(h) < MIN_DIMENSION {
        return Err(Error::ImageTooSmall { width: w, height: h, min: MIN_DIMENSION });
    }
    if params.scales_per_octave == 0 || !(params.sigma > params.assumed_blur) {
        return Err(Error::param("SIFT needs at least one scale per octave and sigma above the assumed blur"));
    }
    let mut octaves = ((w.min(h) as f64).log2().floor() as usize).saturating_sub(2).max(1);
    let mut input = Plane { w, h, data: img.data().iter().map(|&v| v as f32).collect() };
    let mut prior = params.assumed_blur;
    if params.upsample_base {
        input = resample(&input, 2 * w, 2 * h);
        prior *= 2.0;
        octaves += 1;
    }
    if !(params.sigma > prior) {
        return Err(Error::param("sigma must exceed the assumed blur of the base image"));
    }
    let base = blur(&input, (params.sigma * params.sigma - prior * prior).sqrt());
    let pyr = build_pyramid(base, (w, h), octaves, params);
    let extrema = detect_extrema(&pyr, params);

    let s = params.scales_per_octave as f64;
    let described: Vec<Vec<(Keypoint, Descriptor)>> = extrema
        .par_iter()
        .map(|e| {
            let oct = &pyr[e.octave];
            let layer = (e.layer.round() as usize).min(oct.gauss.len() - 1);
            let img = &oct.gauss[layer];
            let sigma = params.sigma * 2f64.powf(e.layer / s);
            let (cx, cy) = (e.x.round() as usize, e.y.round() as usize);
            let ox = ((e.x + 0.5) * oct.fx - 0.5).clamp(0.0, w as f64 - 1e-6);
            let oy = ((e.y + 0.5) * oct.fy - 0.5).clamp(0.0, h as f64 - 1e-6);
            let scale = sigma * 0.5 * (oct.fx + oct.fy);
            orientations(img, cx, cy, sigma)
                .into_iter()
                .filter_map(|ori| {
                    describe(img, e.x, e.y, sigma, ori).map(|desc| {
                        (Keypoint { x: ox, y: oy, scale, orientation: ori, response: e.contrast.abs() }, desc)
                    })
                })
                .collect()
        })
        .collect();
    Ok(described.into_iter().flatten().unzip())
}
