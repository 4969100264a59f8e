use super::ImageBuffer;
use crate::error::{Error, Result};

/// Rotates clockwise by `quarter_turns * 90` degrees.
pub fn rotate90(img: &ImageBuffer, quarter_turns: u32) -> ImageBuffer {
    let turns = quarter_turns % 4;
    if turns == 0 {
        return img.clone();
    }
    let (w, h) = img.dims();
    let ch = img.channels();
    let src = img.data();
    let (ow, oh) = if turns == 2 { (w, h) } else { (h, w) };
    let mut out = Vec::with_capacity(src.len());
    for y in 0..oh {
        for x in 0..ow {
            let (sx, sy) = match turns {
                1 => (y, h - 1 - x),
                2 => (w - 1 - x, h - 1 - y),
                _ => (w - 1 - y, x),
            };
            let base = (sy * w + sx) * ch;
            out.extend_from_slice(&src[base..base + ch]);
        }
    }
    ImageBuffer::from_parts(ow, oh, img.colorspace(), out)
}

/// Mirrors left to right.
pub fn flip_h(img: &ImageBuffer) -> ImageBuffer {
    let (w, h) = img.dims();
    let ch = img.channels();
    let src = img.data();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in (0..w).rev() {
            let base = (y * w + x) * ch;
            out.extend_from_slice(&src[base..base + ch]);
        }
    }
    ImageBuffer::from_parts(w, h, img.colorspace(), out)
}

pub fn crop(img: &ImageBuffer, x: usize, y: usize, w: usize, h: usize) -> Result<ImageBuffer> {
    if w == 0 || h == 0 || x + w > img.width() || y + h > img.height() {
        return Err(Error::InvalidDimensions(format!(
            "crop ({x},{y},{w},{h}) outside {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let ch = img.channels();
    let mut out = Vec::with_capacity(w * h * ch);
    for row in y..y + h {
        let base = (row * img.width() + x) * ch;
        out.extend_from_slice(&img.data()[base..base + w * ch]);
    }
    Ok(ImageBuffer::from_parts(w, h, img.colorspace(), out))
}

/// Center-crops so both dimensions are multiples of `m`.
pub fn center_crop_to_multiple(img: &ImageBuffer, m: usize) -> Result<ImageBuffer> {
    if m == 0 {
        return Err(Error::param("crop multiple must be positive"));
    }
    let (w, h) = img.dims();
    let (cw, ch) = (w - w % m, h - h % m);
    if cw == 0 || ch == 0 {
        return Err(Error::InvalidDimensions(format!("{w}x{h} is smaller than multiple {m}")));
    }
    if (cw, ch) == (w, h) {
        return Ok(img.clone());
    }
    crop(img, (w - cw) / 2, (h - ch) / 2, cw, ch)
}
