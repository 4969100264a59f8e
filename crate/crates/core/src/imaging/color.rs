use super::{ColorSpace, ImageBuffer};
use crate::error::{Error, Result};

// ITU-R BT.601 studio swing, inputs in [0, 1], outputs in 8-bit code values.
const FORWARD: [[f64; 3]; 3] = [
    [65.481, 128.553, 24.966],
    [-37.797, -74.203, 112.0],
    [112.0, -93.786, -18.214],
];
const OFFSET: [f64; 3] = [16.0, 128.0, 128.0];

fn inverse_forward() -> [[f64; 3]; 3] {
    let m = FORWARD;
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            // cofactor of (c, r), transposed
            let (r0, r1) = match c {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match r {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            *v = sign * minor / det;
        }
    }
    inv
}

/// RGB to YCbCr (BT.601 studio swing). Y lands in channel 0, all channels
/// normalized by 255 so Y spans `[16/255, 235/255]`.
pub fn to_ycbcr(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.colorspace() != ColorSpace::Rgb {
        return Err(Error::InvalidColorspace { expected: ColorSpace::Rgb, found: img.colorspace() });
    }
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        for (row, off) in FORWARD.iter().zip(OFFSET) {
            data.push((off + row[0] * px[0] + row[1] * px[1] + row[2] * px[2]) / 255.0);
        }
    }
    Ok(ImageBuffer::from_parts(img.width(), img.height(), ColorSpace::YCbCr, data))
}

/// Exact inverse of [`to_ycbcr`]; the result is clamped to `[0, 1]`.
pub fn from_ycbcr(img: &ImageBuffer) -> Result<ImageBuffer> {
    if img.colorspace() != ColorSpace::YCbCr {
        return Err(Error::InvalidColorspace { expected: ColorSpace::YCbCr, found: img.colorspace() });
    }
    let inv = inverse_forward();
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        let centered = [px[0] * 255.0 - OFFSET[0], px[1] * 255.0 - OFFSET[1], px[2] * 255.0 - OFFSET[2]];
        for row in &inv {
            let v = row[0] * centered[0] + row[1] * centered[1] + row[2] * centered[2];
            data.push(v.clamp(0.0, 1.0));
        }
    }
    Ok(ImageBuffer::from_parts(img.width(), img.height(), ColorSpace::Rgb, data))
}

/// Luma plane in `[0, 1]` used by the metrics.
///
/// RGB goes through BT.601 studio swing, YCbCr contributes its Y channel, and
/// single-channel images are taken as luma directly.
pub fn luma(img: &ImageBuffer) -> ImageBuffer {
    match img.colorspace() {
        ColorSpace::Rgb => {
            let row = FORWARD[0];
            let data = img
                .data()
                .chunks_exact(3)
                .map(|p| (OFFSET[0] + row[0] * p[0] + row[1] * p[1] + row[2] * p[2]) / 255.0)
                .collect();
            ImageBuffer::from_parts(img.width(), img.height(), ColorSpace::Gray, data)
        }
        _ => img.to_gray(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solid(r: f64, g: f64, b: f64) -> ImageBuffer {
        ImageBuffer::from_fn(2, 2, ColorSpace::Rgb, |_, _, c| [r, g, b][c]).unwrap()
    }

    #[test]
    fn white_and_black_luma() {
        let w = to_ycbcr(&solid(1.0, 1.0, 1.0)).unwrap();
        assert!((w.get(0, 0, 0) - 235.0 / 255.0).abs() < 1e-12);
        let k = to_ycbcr(&solid(0.0, 0.0, 0.0)).unwrap();
        assert!((k.get(1, 1, 0) - 16.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn gray_has_neutral_chroma() {
        let g = to_ycbcr(&solid(0.5, 0.5, 0.5)).unwrap();
        assert!((g.get(0, 0, 1) - 128.0 / 255.0).abs() < 1e-12);
        assert!((g.get(0, 0, 2) - 128.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_rgb() {
        let g = ImageBuffer::filled(2, 2, ColorSpace::Gray, 0.3).unwrap();
        assert!(matches!(to_ycbcr(&g), Err(Error::InvalidColorspace { .. })));
        assert!(from_ycbcr(&g).is_err());
    }

    #[test]
    fn luma_matches_ycbcr_channel() {
        let img = solid(0.2, 0.7, 0.4);
        let y = to_ycbcr(&img).unwrap();
        assert_eq!(luma(&img).get(0, 0, 0), y.get(0, 0, 0));
    }

    proptest! {
        #[test]
        fn round_trip_within_one_code_value(samples in proptest::collection::vec(0.0f64..=1.0, 3 * 16)) {
            let img = ImageBuffer::new(4, 4, ColorSpace::Rgb, samples).unwrap();
            let back = from_ycbcr(&to_ycbcr(&img).unwrap()).unwrap();
            for (a, b) in img.data().iter().zip(back.data()) {
                prop_assert!((a - b).abs() <= 1.0 / 255.0);
            }
        }
    }
}
