//! Affine alignment of LR/HR captures and extraction of the common crop.

mod pipeline;
mod ransac;
mod rect;

pub use pipeline::{register_pair, FilterOrder, RegisteredPair, RegistrationConfig, RegistrationResult};
pub use ransac::{estimate_affine_ransac, fit_affine, AffineEstimate, RansacConfig};
pub use rect::{binarize_validity, largest_inscribed_rect, map_crop_to_lr, CropRect, DEFAULT_BINARIZE_THRESHOLD};
