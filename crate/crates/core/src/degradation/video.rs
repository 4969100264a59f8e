use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use super::manifest::{ManifestEntry, PairClass, PairManifest, SkippedInput};
use super::pairs::list_pngs;
use crate::error::{Error, Result, Stage};
use crate::imaging::io::{read_png, write_png};
use crate::imaging::{luma, ImageBuffer};
use crate::registration::{register_pair, RegistrationConfig, RegistrationResult};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StillSceneParams {
    /// Mean absolute luma difference between consecutive frames, `[0, 1]`
    /// scale, below which the scene counts as still.
    pub diff_threshold: f64,
    /// Minimum still run length, in frames.
    pub window: usize,
}

impl Default for StillSceneParams {
    fn default() -> Self {
        Self { diff_threshold: 0.004, window: 5 }
    }
}

impl StillSceneParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.diff_threshold > 0.0) {
            return Err(Error::param("still-scene threshold must be positive"));
        }
        if self.window < 2 {
            return Err(Error::param("still-scene window must be at least 2 frames"));
        }
        Ok(())
    }
}

/// Frame chosen from a still run, with its HR and LR files.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FrameSelection {
    pub index: usize,
    pub hr: PathBuf,
    pub lr: PathBuf,
}

/// Middle frame of every maximal run of at least `window` frames whose
/// consecutive differences `diffs[i]` (frame `i` to `i + 1`) stay below the
/// threshold.
pub fn select_still_frames(diffs: &[f64], params: &StillSceneParams) -> Vec<usize> {
    let mut picks = Vec::new();
    let mut start = 0;
    for i in 0..=diffs.len() {
        let still = i < diffs.len() && diffs[i] < params.diff_threshold;
        if !still {
            // frames start..=i form a still run
            if i + 1 - start >= params.window {
                picks.push(start + (i - start) / 2);
            }
            start = i + 1;
        }
    }
    picks
}

/// Mean absolute difference of the luma planes; infinite when sizes differ.
pub fn frame_difference(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
    if a.dims() != b.dims() {
        return f64::INFINITY;
    }
    let (ya, yb) = (luma(a), luma(b));
    ya.data().iter().zip(yb.data()).map(|(p, q)| (p - q).abs()).sum::<f64>() / ya.data().len() as f64
}

/// Picks still frames from index-aligned HR and LR frame directories.
/// Motion is judged on the HR sequence only.
pub fn extract_still_pairs(hr_dir: &Path, lr_dir: &Path, params: &StillSceneParams) -> Result<Vec<FrameSelection>> {
    params.validate()?;
    let hr = list_pngs(hr_dir)?;
    let lr = list_pngs(lr_dir)?;
    if hr.len() != lr.len() {
        return Err(Error::FrameCountMismatch { hr: hr.len(), lr: lr.len() });
    }
    let diffs: Vec<f64> = hr
        .par_windows(2)
        .map(|w| Ok(frame_difference(&read_png(&w[0])?, &read_png(&w[1])?)))
        .collect::<Result<_>>()?;
    Ok(select_still_frames(&diffs, params)
        .into_iter()
        .map(|index| FrameSelection { index, hr: hr[index].clone(), lr: lr[index].clone() })
        .collect())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PairFailure {
    pub index: usize,
    pub hr: String,
    /// `None` for errors outside the alignment pipeline, such as I/O.
    pub stage: Option<Stage>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VideoPairRecord {
    pub index: usize,
    pub result: RegistrationResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoPairing {
    pub manifest: PairManifest,
    pub records: Vec<VideoPairRecord>,
    pub failures: Vec<PairFailure>,
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Registers every selected frame pair and writes the aligned HR crop to
/// `hr/<stem>.png` and the LR-resolution crop to `lr/<stem>.png`.
/// Failed pairs are reported, never fatal.
pub fn build_video_pairs(selections: &[FrameSelection], cfg: &RegistrationConfig, out_dir: &Path) -> Result<VideoPairing> {
    cfg.validate()?;
    let outcomes: Vec<Result<(ManifestEntry, RegistrationResult)>> = selections
        .par_iter()
        .map(|sel| {
            let hr = read_png(&sel.hr)?;
            let lr = read_png(&sel.lr)?;
            let pair = register_pair(&lr, &hr, cfg)?;
            let name = stem(&sel.hr);
            let hr_rel = format!("hr/{name}.png");
            let lr_rel = format!("lr/{name}.png");
            write_png(&pair.hr_aligned, out_dir.join(&hr_rel))?;
            write_png(&pair.lr_native, out_dir.join(&lr_rel))?;
            let scale = ((hr.width() as f64 / lr.width() as f64).round() as u32).max(1);
            let provenance = format!(
                "video frame {} ({} / {}), {} inliers",
                sel.index,
                sel.hr.file_name().unwrap_or_default().to_string_lossy(),
                sel.lr.file_name().unwrap_or_default().to_string_lossy(),
                pair.result.inliers.len()
            );
            let entry = ManifestEntry { hr: hr_rel, lr: lr_rel, class: PairClass::Video, scale, level: None, provenance };
            Ok((entry, pair.result))
        })
        .collect();

    let mut out = VideoPairing { manifest: PairManifest::new(), records: Vec::new(), failures: Vec::new() };
    for (sel, r) in selections.iter().zip(outcomes) {
        match r {
            Ok((entry, result)) => {
                out.manifest.entries.push(entry);
                out.records.push(VideoPairRecord { index: sel.index, result });
            }
            Err(e) => {
                let stage = e.stage();
                warn!("frame {} not paired: {e}", sel.index);
                let hr = sel.hr.display().to_string();
                out.manifest.skipped.push(SkippedInput { path: hr.clone(), reason: e.to_string() });
                out.failures.push(PairFailure { index: sel.index, hr, stage, reason: e.to_string() });
            }
        }
    }
    if out.manifest.entries.is_empty() && !selections.is_empty() {
        warn!("no video frame pair could be aligned");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> StillSceneParams {
        StillSceneParams::default()
    }

    #[test]
    fn repeated_frame_selects_middle() {
        // 10 identical frames, 9 zero differences
        assert_eq!(select_still_frames(&[0.0; 9], &params()), vec![4]);
    }

    #[test]
    fn alternating_frames_select_nothing() {
        assert!(select_still_frames(&[1.0; 9], &params()).is_empty());
    }

    #[test]
    fn two_segments() {
        // frames 0..=5 still, 6..=9 moving, 10..=16 still
        let mut d = vec![0.001; 5];
        d.extend([0.1; 5]);
        d.extend([0.002; 6]);
        assert_eq!(select_still_frames(&d, &params()), vec![2, 13]);
    }

    #[test]
    fn run_shorter_than_window_is_ignored() {
        // runs of 4 frames each
        let d = [0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0];
        assert!(select_still_frames(&d, &params()).is_empty());
        let p = StillSceneParams { window: 4, ..params() };
        assert_eq!(select_still_frames(&d, &p), vec![1, 5]);
    }

    #[test]
    fn empty_and_single() {
        assert!(select_still_frames(&[], &params()).is_empty());
        let p = StillSceneParams { window: 2, ..params() };
        assert_eq!(select_still_frames(&[], &p), Vec::<usize>::new());
        assert_eq!(select_still_frames(&[0.0], &p), vec![0]);
    }

    #[test]
    fn params_validate() {
        assert!(StillSceneParams { diff_threshold: 0.0, window: 5 }.validate().is_err());
        assert!(StillSceneParams { diff_threshold: 0.01, window: 1 }.validate().is_err());
    }
}
