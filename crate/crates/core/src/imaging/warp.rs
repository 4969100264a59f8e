use rayon::prelude::*;

use super::{ColorSpace, ImageBuffer};
use crate::error::{Error, Result};

/// 2x3 affine map `(x, y) -> (a x + b y + tx, c x + d y + ty)`, stored as
/// `[a, b, tx, c, d, ty]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineTransform {
    m: [f64; 6],
}

const SINGULAR_EPS: f64 = 1e-12;

impl AffineTransform {
    pub fn new(m: [f64; 6]) -> Result<Self> {
        let t = Self { m };
        if !m.iter().all(|v| v.is_finite()) || t.determinant().abs() < SINGULAR_EPS {
            return Err(Error::SingularTransform);
        }
        Ok(t)
    }

    pub fn identity() -> Self {
        Self { m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0] }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { m: [1.0, 0.0, tx, 0.0, 1.0, ty] }
    }

    pub fn scaling(sx: f64, sy: f64) -> Result<Self> {
        Self::new([sx, 0.0, 0.0, 0.0, sy, 0.0])
    }

    /// Rotation by `angle` radians and isotropic `scale` about `(cx, cy)`,
    /// followed by a translation.
    pub fn similarity_about(cx: f64, cy: f64, angle: f64, scale: f64, tx: f64, ty: f64) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        let a = scale * c;
        let b = -scale * s;
        let cc = scale * s;
        let d = scale * c;
        Self::new([a, b, cx - a * cx - b * cy + tx, cc, d, cy - cc * cx - d * cy + ty])
    }

    pub fn coefficients(&self) -> [f64; 6] {
        self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m[0] * self.m[4] - self.m[1] * self.m[3]
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.m;
        (m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5])
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant();
        if det.abs() < SINGULAR_EPS {
            return Err(Error::SingularTransform);
        }
        let [a, b, tx, c, d, ty] = self.m;
        let ia = d / det;
        let ib = -b / det;
        let ic = -c / det;
        let id = a / det;
        Ok(Self { m: [ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)] })
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &AffineTransform) -> AffineTransform {
        let [a, b, tx, c, d, ty] = self.m;
        let [e, f, ux, g, h, uy] = next.m;
        AffineTransform {
            m: [e * a + f * c, e * b + f * d, e * tx + f * ty + ux, g * a + h * c, g * b + h * d, g * tx + h * ty + uy],
        }
    }

    /// Largest displacement between `self` and `other` over the four corners
    /// of a `width` x `height` frame.
    pub fn max_corner_distance(&self, other: &AffineTransform, width: f64, height: f64) -> f64 {
        [(0.0, 0.0), (width, 0.0), (0.0, height), (width, height)]
            .iter()
            .map(|&(x, y)| {
                let (ax, ay) = self.apply(x, y);
                let (bx, by) = other.apply(x, y);
                ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
}

const EDGE_EPS: f64 = 1e-9;

/// Warps `img` so that source point `p` lands at `t(p)` in an `out_w` x `out_h`
/// frame. Returns the warped image and a validity mask that is 1 exactly where
/// every bilinear tap carrying weight lies inside the source; elsewhere both
/// image and mask are 0.
pub fn warp_affine(
    img: &ImageBuffer,
    t: &AffineTransform,
    out_w: usize,
    out_h: usize,
    interp: Interpolation,
) -> Result<(ImageBuffer, ImageBuffer)> {
    let Interpolation::Bilinear = interp;
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidDimensions(format!("warp target {out_w}x{out_h}")));
    }
    let inv = t.inverse()?;
    let (w, h) = img.dims();
    let ch = img.channels();
    let src = img.data();
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;

    let mut out = vec![0.0; out_w * out_h * ch];
    let mut mask = vec![0.0; out_w * out_h];
    out.par_chunks_mut(out_w * ch).zip(mask.par_chunks_mut(out_w)).enumerate().for_each(|(y, (row, mrow))| {
        for x in 0..out_w {
            let (sx, sy) = inv.apply(x as f64, y as f64);
            if !(sx >= -EDGE_EPS && sx <= max_x + EDGE_EPS && sy >= -EDGE_EPS && sy <= max_y + EDGE_EPS) {
                continue;
            }
            let sx = sx.clamp(0.0, max_x);
            let sy = sy.clamp(0.0, max_y);
            let x0 = sx.floor() as usize;
            let y0 = sy.floor() as usize;
            let fx = sx - x0 as f64;
            let fy = sy - y0 as f64;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            for c in 0..ch {
                let p00 = src[(y0 * w + x0) * ch + c];
                let p10 = src[(y0 * w + x1) * ch + c];
                let p01 = src[(y1 * w + x0) * ch + c];
                let p11 = src[(y1 * w + x1) * ch + c];
                let top = p00 + (p10 - p00) * fx;
                let bottom = p01 + (p11 - p01) * fx;
                row[x * ch + c] = top + (bottom - top) * fy;
            }
            mrow[x] = 1.0;
        }
    });
    let cs = match img.colorspace() {
        ColorSpace::Mask => ColorSpace::Gray,
        other => other,
    };
    Ok((
        ImageBuffer::from_parts(out_w, out_h, cs, out),
        ImageBuffer::from_parts(out_w, out_h, ColorSpace::Mask, mask),
    ))
}
