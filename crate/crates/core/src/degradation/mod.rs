//! Synthetic LR generation, pair manifests, augmentation and video pairing.

mod classic;
mod manifest;
mod pairs;
mod video;

pub use classic::{degrade_classic, BlurKernel, DegradationSpec};
pub use manifest::{relative_path, ManifestEntry, PairClass, PairManifest, SkippedInput, MANIFEST_VERSION};
pub use pairs::{apply_rigid, augment_pairs, build_interpolation_pairs, derive_seed, list_pngs, AugmentPolicy};
pub use video::{
    build_video_pairs, extract_still_pairs, frame_difference, select_still_frames, FrameSelection, PairFailure, StillSceneParams,
    VideoPairRecord, VideoPairing,
};
