use crate::error::{Error, Result};
use crate::imaging::{AffineTransform, ColorSpace, ImageBuffer};

/// Axis-aligned pixel rectangle, `(x, y)` top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl CropRect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.x + self.w <= width && self.y + self.h <= height
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x as f64 && y >= self.y as f64 && x < (self.x + self.w) as f64 && y < (self.y + self.h) as f64
    }
}

/// Thresholds a single-channel coverage map into a binary mask
/// (`v >= threshold -> 1`).
pub fn binarize_validity(mask: &ImageBuffer, threshold: f64) -> Result<ImageBuffer> {
    if mask.channels() != 1 {
        return Err(Error::InvalidColorspace { expected: ColorSpace::Mask, found: mask.colorspace() });
    }
    Ok(mask.map_samples(ColorSpace::Mask, |v| if v >= threshold { 1.0 } else { 0.0 }))
}

pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 0.999;

/// Maximum-area axis-aligned rectangle of 1-pixels in a binary mask.
///
/// Row-by-row histogram of column run lengths with a monotonic stack,
/// O(width * height). Among equal areas the smallest `y` wins, then the
/// smallest `x`.
pub fn largest_inscribed_rect(mask: &ImageBuffer) -> Result<CropRect> {
    if mask.colorspace() != ColorSpace::Mask {
        return Err(Error::InvalidColorspace { expected: ColorSpace::Mask, found: mask.colorspace() });
    }
    let (w, h) = mask.dims();
    let mut heights = vec![0usize; w];
    let mut stack: Vec<usize> = Vec::with_capacity(w + 1);
    let mut best: Option<CropRect> = None;
    let better = |cand: &CropRect, cur: &Option<CropRect>| match cur {
        None => true,
        Some(b) => {
            let (ca, ba) = (cand.area(), b.area());
            ca > ba || (ca == ba && (cand.y, cand.x) < (b.y, b.x))
        }
    };
    for row in 0..h {
        for (x, hgt) in heights.iter_mut().enumerate() {
            *hgt = if mask.get(x, row, 0) == 1.0 { *hgt + 1 } else { 0 };
        }
        stack.clear();
        for i in 0..=w {
            let cur = if i < w { heights[i] } else { 0 };
            while let Some(&top) = stack.last() {
                if heights[top] < cur {
                    break;
                }
                stack.pop();
                let hh = heights[top];
                if hh == 0 {
                    continue;
                }
                let left = stack.last().map_or(0, |&l| l + 1);
                let cand = CropRect { x: left, y: row + 1 - hh, w: i - left, h: hh };
                if better(&cand, &best) {
                    best = Some(cand);
                }
            }
            stack.push(i);
        }
    }
    best.ok_or(Error::EmptyMask)
}

/// Projects an HR crop back into raw-LR pixel coordinates.
///
/// The four corners go through `t⁻¹` (HR frame to the upsampled LR frame),
/// the bounding box is scaled by `scale_ratio` (LR size / HR size) and
/// clamped to the `lr_width x lr_height` frame.
pub fn map_crop_to_lr(crop_hr: &CropRect, t: &AffineTransform, scale_ratio: f64, lr_width: usize, lr_height: usize) -> Result<CropRect> {
    if !(scale_ratio > 0.0) {
        return Err(Error::param(format!("scale ratio must be positive, got {scale_ratio}")));
    }
    let inv = t.inverse()?;
    let (x0, y0) = (crop_hr.x as f64, crop_hr.y as f64);
    let (x1, y1) = (x0 + crop_hr.w as f64, y0 + crop_hr.h as f64);
    let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)].map(|(x, y)| inv.apply(x, y));
    let min_x = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min) * scale_ratio;
    let max_x = corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max) * scale_ratio;
    let min_y = corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min) * scale_ratio;
    let max_y = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max) * scale_ratio;
    let snap = |v: f64, hi: usize| (v.round().max(0.0) as usize).min(hi);
    let (lx0, lx1) = (snap(min_x, lr_width), snap(max_x, lr_width));
    let (ly0, ly1) = (snap(min_y, lr_height), snap(max_y, lr_height));
    if lx1 <= lx0 || ly1 <= ly0 {
        return Err(Error::InvalidDimensions(format!("LR crop degenerates to {}x{}", lx1.saturating_sub(lx0), ly1.saturating_sub(ly0))));
    }
    Ok(CropRect { x: lx0, y: ly0, w: lx1 - lx0, h: ly1 - ly0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask_from(w: usize, h: usize, f: impl Fn(usize, usize) -> bool) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, ColorSpace::Mask, |x, y, _| if f(x, y) { 1.0 } else { 0.0 }).unwrap()
    }

    /// Exhaustive O(W²H²) search with prefix sums, same tie-break.
    fn brute_force(mask: &ImageBuffer) -> Option<CropRect> {
        let (w, h) = mask.dims();
        let mut pre = vec![0usize; (w + 1) * (h + 1)];
        for y in 0..h {
            for x in 0..w {
                pre[(y + 1) * (w + 1) + x + 1] =
                    mask.get(x, y, 0) as usize + pre[y * (w + 1) + x + 1] + pre[(y + 1) * (w + 1) + x] - pre[y * (w + 1) + x];
            }
        }
        let mut best: Option<CropRect> = None;
        for y0 in 0..h {
            for x0 in 0..w {
                for y1 in y0 + 1..=h {
                    for x1 in x0 + 1..=w {
                        let ones = pre[y1 * (w + 1) + x1] + pre[y0 * (w + 1) + x0] - pre[y0 * (w + 1) + x1] - pre[y1 * (w + 1) + x0];
                        let area = (x1 - x0) * (y1 - y0);
                        if ones != area {
                            continue;
                        }
                        let cand = CropRect::new(x0, y0, x1 - x0, y1 - y0);
                        let take = match best {
                            None => true,
                            Some(b) => area > b.area() || (area == b.area() && (y0, x0) < (b.y, b.x)),
                        };
                        if take {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn full_mask() {
        let m = mask_from(10, 10, |_, _| true);
        assert_eq!(largest_inscribed_rect(&m).unwrap(), CropRect::new(0, 0, 10, 10));
    }

    #[test]
    fn corner_hole_tie_break() {
        let m = mask_from(10, 10, |x, y| (x, y) != (0, 0));
        let r = largest_inscribed_rect(&m).unwrap();
        assert_eq!(r.area(), 90);
        // (1,0,9,10) and (0,1,10,9) tie; smallest y wins
        assert_eq!(r, CropRect::new(1, 0, 9, 10));
        assert_eq!(brute_force(&m), Some(r));
    }

    #[test]
    fn empty_mask_is_error() {
        let m = mask_from(4, 4, |_, _| false);
        assert!(matches!(largest_inscribed_rect(&m), Err(Error::EmptyMask)));
    }

    #[test]
    fn random_masks_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for case in 0..100 {
            let density = rng.random_range(0.3..0.95);
            let bits: Vec<bool> = (0..144).map(|_| rng.random_bool(density)).collect();
            let m = mask_from(12, 12, |x, y| bits[y * 12 + x]);
            let oracle = brute_force(&m);
            match oracle {
                None => assert!(largest_inscribed_rect(&m).is_err()),
                Some(o) => {
                    let r = largest_inscribed_rect(&m).unwrap();
                    assert_eq!(r.area(), o.area(), "case {case}");
                    assert_eq!(r, o, "tie-break, case {case}");
                    for y in r.y..r.y + r.h {
                        for x in r.x..r.x + r.w {
                            assert_eq!(m.get(x, y, 0), 1.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn binarize_cases() {
        let ones = ImageBuffer::filled(5, 5, ColorSpace::Gray, 1.0).unwrap();
        assert!(binarize_validity(&ones, DEFAULT_BINARIZE_THRESHOLD).unwrap().data().iter().all(|&v| v == 1.0));
        let zeros = ImageBuffer::filled(5, 5, ColorSpace::Gray, 0.0).unwrap();
        assert!(binarize_validity(&zeros, DEFAULT_BINARIZE_THRESHOLD).unwrap().data().iter().all(|&v| v == 0.0));
        let rgb = ImageBuffer::filled(2, 2, ColorSpace::Rgb, 1.0).unwrap();
        assert!(binarize_validity(&rgb, 0.5).is_err());
    }

    #[test]
    fn binarize_drops_fractional_warp_edge() {
        // coverage of an all-ones 8x8 image shifted by half a pixel with
        // zero padding outside: the leading column mixes 0.5 of the border
        let coverage = ImageBuffer::from_fn(8, 8, ColorSpace::Gray, |x, _, _| {
            let sx = x as f64 - 0.5;
            let x0 = sx.floor();
            let f = sx - x0;
            let tap = |i: f64| if (0.0..8.0).contains(&i) { 1.0 } else { 0.0 };
            tap(x0) * (1.0 - f) + tap(x0 + 1.0) * f
        })
        .unwrap();
        assert_eq!(coverage.get(0, 3, 0), 0.5);
        let b = binarize_validity(&coverage, DEFAULT_BINARIZE_THRESHOLD).unwrap();
        for y in 0..8 {
            assert_eq!(b.get(0, y, 0), 0.0);
            for x in 1..8 {
                assert_eq!(b.get(x, y, 0), 1.0);
            }
        }
    }

    #[test]
    fn crop_mapping_examples() {
        let id = AffineTransform::identity();
        let c = CropRect::new(10, 10, 20, 20);
        assert_eq!(map_crop_to_lr(&c, &id, 1.0, 100, 100).unwrap(), c);
        let t = AffineTransform::translation(5.0, 7.0);
        assert_eq!(map_crop_to_lr(&c, &t, 1.0, 100, 100).unwrap(), CropRect::new(5, 3, 20, 20));
        let c = CropRect::new(8, 8, 40, 40);
        assert_eq!(map_crop_to_lr(&c, &id, 0.25, 25, 25).unwrap(), CropRect::new(2, 2, 10, 10));
        // clamped to the LR frame
        let far = AffineTransform::translation(-200.0, 0.0);
        assert!(map_crop_to_lr(&CropRect::new(0, 0, 10, 10), &far, 1.0, 100, 100).is_err());
    }
}
