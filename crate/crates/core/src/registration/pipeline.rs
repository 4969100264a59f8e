use std::collections::HashMap;

use crate::error::{Error, Result, Stage};
use crate::features::{
    detect_and_describe, filter_gms, filter_mlc, match_descriptors, GmsConfig, Keypoint, Match, MlcConfig, DEFAULT_RATIO,
};
use crate::imaging::{crop, resize_to, warp_affine, AffineTransform, ImageBuffer, Interpolation};

use super::ransac::{estimate_affine_ransac, RansacConfig};
use super::rect::{binarize_validity, largest_inscribed_rect, map_crop_to_lr, CropRect, DEFAULT_BINARIZE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOrder {
    #[default]
    GmsThenMlc,
    MlcThenGms,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegistrationConfig {
    pub ratio: f64,
    pub gms: GmsConfig,
    pub mlc: MlcConfig,
    pub filter_order: FilterOrder,
    pub ransac: RansacConfig,
    pub min_inliers: usize,
    pub binarize_threshold: f64,
    /// Regions of the HR frame (moving objects and the like) whose keypoints
    /// are ignored on both sides.
    pub exclusions: Vec<CropRect>,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            ratio: DEFAULT_RATIO,
            gms: GmsConfig::default(),
            mlc: MlcConfig::default(),
            filter_order: FilterOrder::default(),
            ransac: RansacConfig::default(),
            min_inliers: 12,
            binarize_threshold: DEFAULT_BINARIZE_THRESHOLD,
            exclusions: Vec::new(),
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::param(format!("ratio must lie in (0, 1], got {}", self.ratio)));
        }
        GmsConfig::new(self.gms.grid_cells, self.gms.tau_factor)?;
        MlcConfig::new(self.mlc.alpha)?;
        self.ransac.validate()?;
        if self.min_inliers < 3 {
            return Err(Error::param("min_inliers must be at least 3"));
        }
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold <= 1.0) {
            return Err(Error::param("binarize threshold must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegistrationResult {
    /// Maps the upsampled LR frame onto the HR frame.
    pub transform: AffineTransform,
    /// Positions in the raw descriptor match list.
    pub inliers: Vec<usize>,
    pub mean_residual: f64,
    pub crop_hr: CropRect,
    pub crop_lr: CropRect,
    pub keypoints_lr: usize,
    pub keypoints_hr: usize,
    pub matches_raw: usize,
    pub matches_filtered: usize,
}

#[derive(Debug, Clone)]
pub struct RegisteredPair {
    /// LR content warped into the HR frame, HR resolution.
    pub lr_aligned: ImageBuffer,
    pub hr_aligned: ImageBuffer,
    /// `lr_aligned` resampled back to the nominal LR resolution.
    pub lr_native: ImageBuffer,
    pub result: RegistrationResult,
}

fn fail(stage: Stage, reason: impl Into<String>) -> Error {
    Error::AlignmentFailed { stage, reason: reason.into() }
}

/// Integer scale factor when the HR/LR size ratio is one on both axes.
fn integer_factor(hr: (usize, usize), lr: (usize, usize)) -> Option<usize> {
    (1..=16).find(|&s| lr.0 * s == hr.0 && lr.1 * s == hr.1)
}

/// Trims a rectangle symmetrically so both sides are multiples of `m`.
fn trim_to_multiple(r: CropRect, m: usize) -> Option<CropRect> {
    let (w, h) = (r.w / m * m, r.h / m * m);
    (w > 0 && h > 0).then(|| CropRect { x: r.x + (r.w - w) / 2, y: r.y + (r.h - h) / 2, w, h })
}

fn apply_filters(matches: &[Match], kps_lr: &[Keypoint], kps_hr: &[Keypoint], size: (f64, f64), cfg: &RegistrationConfig) -> Vec<Match> {
    let gms = |m: &[Match]| filter_gms(m, kps_lr, kps_hr, size, size, cfg.gms);
    let mlc = |m: &[Match]| filter_mlc(m, kps_lr, kps_hr, size.0, size.1, cfg.mlc);
    match cfg.filter_order {
        FilterOrder::GmsThenMlc => mlc(&gms(matches)),
        FilterOrder::MlcThenGms => gms(&mlc(matches)),
    }
}

/// Aligns a raw LR capture with its HR counterpart.
///
/// The LR image is bicubically upsampled to the HR size, features are
/// matched and filtered, an affine model is fit with RANSAC and the LR image
/// is warped onto the HR frame. Both images are then cut to the largest
/// rectangle fully covered by warped LR content.
pub fn register_pair(raw_lr: &ImageBuffer, raw_hr: &ImageBuffer, cfg: &RegistrationConfig) -> Result<RegisteredPair> {
    cfg.validate()?;
    if raw_lr.colorspace() != raw_hr.colorspace() {
        return Err(Error::InvalidColorspace { expected: raw_hr.colorspace(), found: raw_lr.colorspace() });
    }
    let (hw, hh) = raw_hr.dims();
    let (lw, lh) = raw_lr.dims();
    let lr_up = if (lw, lh) == (hw, hh) { raw_lr.clone() } else { resize_to(raw_lr, hw, hh, true)? };

    let (kps_lr, desc_lr) = detect_and_describe(&lr_up.to_gray())?;
    let (kps_hr, desc_hr) = detect_and_describe(&raw_hr.to_gray())?;
    let excluded = |k: &Keypoint| cfg.exclusions.iter().any(|r| r.contains(k.x, k.y));
    let keep_lr: Vec<usize> = (0..kps_lr.len()).filter(|&i| !excluded(&kps_lr[i])).collect();
    let keep_hr: Vec<usize> = (0..kps_hr.len()).filter(|&i| !excluded(&kps_hr[i])).collect();
    if keep_lr.len() < 3 || keep_hr.len() < 3 {
        return Err(fail(Stage::Features, format!("too few keypoints (lr {}, hr {})", keep_lr.len(), keep_hr.len())));
    }
    let kps_lr: Vec<Keypoint> = keep_lr.iter().map(|&i| kps_lr[i]).collect();
    let kps_hr: Vec<Keypoint> = keep_hr.iter().map(|&i| kps_hr[i]).collect();
    let desc_lr: Vec<_> = keep_lr.iter().map(|&i| desc_lr[i].clone()).collect();
    let desc_hr: Vec<_> = keep_hr.iter().map(|&i| desc_hr[i].clone()).collect();

    let raw_matches = match_descriptors(&desc_lr, &desc_hr, cfg.ratio);
    let size = (hw as f64, hh as f64);
    let filtered = apply_filters(&raw_matches, &kps_lr, &kps_hr, size, cfg);
    if filtered.len() < cfg.min_inliers {
        return Err(fail(
            Stage::Matching,
            format!("{} of {} matches survive filtering, need {}", filtered.len(), raw_matches.len(), cfg.min_inliers),
        ));
    }

    let est = estimate_affine_ransac(&filtered, &kps_lr, &kps_hr, &cfg.ransac).map_err(|e| fail(Stage::Ransac, e.to_string()))?;
    if est.inliers.len() < cfg.min_inliers {
        return Err(fail(Stage::Ransac, format!("{} inliers, need {}", est.inliers.len(), cfg.min_inliers)));
    }
    // each LR keypoint appears in at most one raw match
    let position: HashMap<usize, usize> = raw_matches.iter().enumerate().map(|(i, m)| (m.idx_a, i)).collect();
    let inliers: Vec<usize> = est.inliers.iter().map(|&i| position[&filtered[i].idx_a]).collect();

    let (warped, coverage) = warp_affine(&lr_up, &est.transform, hw, hh, Interpolation::Bilinear)?;
    let valid = binarize_validity(&coverage, cfg.binarize_threshold)?;
    let rect = largest_inscribed_rect(&valid).map_err(|e| fail(Stage::Crop, e.to_string()))?;
    let factor = integer_factor((hw, hh), (lw, lh));
    let crop_hr = match factor {
        Some(s) if s > 1 => trim_to_multiple(rect, s).ok_or_else(|| fail(Stage::Crop, format!("valid region smaller than {s}x{s}")))?,
        _ => rect,
    };
    let ratio = lw as f64 / hw as f64;
    let crop_lr =
        map_crop_to_lr(&crop_hr, &est.transform, ratio, lw, lh).map_err(|e| fail(Stage::Crop, e.to_string()))?;

    let hr_aligned = crop(raw_hr, crop_hr.x, crop_hr.y, crop_hr.w, crop_hr.h)?;
    let lr_aligned = crop(&warped, crop_hr.x, crop_hr.y, crop_hr.w, crop_hr.h)?;
    let lr_native = if (lw, lh) == (hw, hh) {
        lr_aligned.clone()
    } else {
        let nw = ((crop_hr.w as f64 * ratio).round() as usize).max(1);
        let nh = ((crop_hr.h as f64 * lh as f64 / hh as f64).round() as usize).max(1);
        resize_to(&lr_aligned, nw, nh, true)?
    };

    let result = RegistrationResult {
        transform: est.transform,
        inliers,
        mean_residual: est.mean_residual,
        crop_hr,
        crop_lr,
        keypoints_lr: kps_lr.len(),
        keypoints_hr: kps_hr.len(),
        matches_raw: raw_matches.len(),
        matches_filtered: filtered.len(),
    };
    Ok(RegisteredPair { lr_aligned, hr_aligned, lr_native, result })
}
