//! Keypoints, descriptor matching and the two geometric match filters.

mod dump;
mod gms;
mod matching;
mod mlc;
mod sift;

pub use dump::write_match_csv;
pub use gms::{filter_gms, gms_support, GmsConfig};
pub use matching::{match_descriptors, Match, DEFAULT_RATIO};
pub use mlc::{filter_mlc, MlcConfig};
pub use sift::{detect_and_describe, detect_and_describe_with, Descriptor, Keypoint, SiftParams, DESCRIPTOR_LEN, MIN_DIMENSION};
