use std::fs;
use std::path::{Component, Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use super::classic::{degrade_classic, DegradationSpec};
use super::manifest::{relative_path, ManifestEntry, PairClass, PairManifest, SkippedInput};
use crate::error::{Error, Result};
use crate::imaging::io::{read_png, write_png};
use crate::imaging::{center_crop_to_multiple, flip_h, rotate90, ImageBuffer};

/// Sorted `*.png` files directly inside `dir`.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for ent in rd {
        let p = ent.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Independent per-item seed (splitmix64 of the base seed and index).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Degrades every PNG in `hr_dir` and writes `hr/<stem>.png` (cropped to a
/// multiple of the scale) and `lr/<stem>_x<s>.png` under `out_dir`.
///
/// Files that fail to decode are logged and listed under `skipped`. The
/// manifest itself is returned, not written.
pub fn build_interpolation_pairs(hr_dir: &Path, spec: &DegradationSpec, out_dir: &Path) -> Result<PairManifest> {
    spec.validate()?;
    let files = list_pngs(hr_dir)?;
    if files.is_empty() {
        return Err(Error::Manifest(format!("no PNG files in {}", hr_dir.display())));
    }
    let s = spec.scale;
    let results: Vec<Result<ManifestEntry>> = files
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let hr = center_crop_to_multiple(&read_png(path)?, s as usize)?;
            let lr = degrade_classic(&hr, &spec.with_seed(derive_seed(spec.seed, i as u64)))?;
            let name = stem(path);
            let hr_rel = format!("hr/{name}.png");
            let lr_rel = format!("lr/{name}_x{s}.png");
            write_png(&hr, out_dir.join(&hr_rel))?;
            write_png(&lr, out_dir.join(&lr_rel))?;
            let provenance = format!("bicubic x{s} of {}", relative_path(path, hr_dir));
            Ok(ManifestEntry { hr: hr_rel, lr: lr_rel, class: PairClass::Interpolation, scale: s, level: None, provenance })
        })
        .collect();

    let mut manifest = PairManifest::new();
    for (path, r) in files.iter().zip(results) {
        match r {
            Ok(e) => manifest.entries.push(e),
            Err(e @ (Error::Image { .. } | Error::ImageTooSmall { .. } | Error::InvalidDimensions(_))) => {
                warn!("skipping {}: {e}", path.display());
                manifest.skipped.push(SkippedInput { path: relative_path(path, hr_dir), reason: e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(manifest)
}

/// Rigid augmentations applied identically to both members of a pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AugmentPolicy {
    /// Clockwise rotations in degrees, each one of 90, 180, 270.
    pub rotations: Vec<u32>,
    pub hflip: bool,
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<()> {
        match self.rotations.iter().find(|r| ![90, 180, 270].contains(*r)) {
            Some(r) => Err(Error::param(format!("rotation must be 90, 180 or 270, got {r}"))),
            None => Ok(()),
        }
    }

    /// Every non-identity `(hflip, quarter_turns)` combination, flip applied
    /// first.
    pub fn transforms(&self) -> Vec<(bool, u32)> {
        let mut turns: Vec<u32> = self.rotations.iter().map(|r| r / 90).collect();
        turns.sort_unstable();
        turns.dedup();
        turns.insert(0, 0);
        let flips: &[bool] = if self.hflip { &[false, true] } else { &[false] };
        let mut out = Vec::new();
        for &f in flips {
            for &t in &turns {
                if f || t != 0 {
                    out.push((f, t));
                }
            }
        }
        out
    }
}

fn suffix(flip: bool, turns: u32) -> String {
    let mut s = String::new();
    if flip {
        s.push_str("_hflip");
    }
    if turns != 0 {
        s.push_str(&format!("_rot{}", turns * 90));
    }
    s
}

pub fn apply_rigid(img: &ImageBuffer, flip: bool, turns: u32) -> ImageBuffer {
    let base = if flip { flip_h(img) } else { img.clone() };
    if turns == 0 {
        base
    } else {
        rotate90(&base, turns)
    }
}

/// Output location for a manifest path: kept as-is when it is a plain
/// relative path, otherwise flattened into `<fallback>/<file name>`.
fn output_rel(p: &str, fallback: &str) -> String {
    let path = Path::new(p);
    let plain = path.components().all(|c| matches!(c, Component::Normal(_)));
    if plain {
        p.to_string()
    } else {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        format!("{fallback}/{name}")
    }
}

fn with_suffix(rel: &str, sfx: &str) -> String {
    match rel.rsplit_once('.') {
        Some((head, ext)) if !head.is_empty() && !ext.contains('/') => format!("{head}{sfx}.{ext}"),
        _ => format!("{rel}{sfx}"),
    }
}

/// Copies the pairs of `manifest` into `out_dir` and appends one entry per
/// policy transform. Original entries come first, in order, followed by
/// the augmented variants of each entry in turn.
pub fn augment_pairs(manifest: &PairManifest, manifest_dir: &Path, policy: &AugmentPolicy, out_dir: &Path) -> Result<PairManifest> {
    policy.validate()?;
    let transforms = policy.transforms();
    let per_entry: Vec<Result<(ManifestEntry, Vec<ManifestEntry>)>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let (hr_src, lr_src) = (PairManifest::resolve(manifest_dir, &e.hr), PairManifest::resolve(manifest_dir, &e.lr));
            let mut orig = e.clone();
            orig.hr = output_rel(&e.hr, "hr");
            orig.lr = output_rel(&e.lr, "lr");
            for (src, rel) in [(&hr_src, &orig.hr), (&lr_src, &orig.lr)] {
                let dst = out_dir.join(rel);
                if let Some(parent) = dst.parent() {
                    fs::create_dir_all(parent).map_err(|err| Error::io(parent, err))?;
                }
                if fs::canonicalize(src).ok() != fs::canonicalize(&dst).ok() {
                    fs::copy(src, &dst).map_err(|err| Error::io(src, err))?;
                }
            }
            if transforms.is_empty() {
                return Ok((orig, Vec::new()));
            }
            let hr = read_png(&hr_src)?;
            let lr = read_png(&lr_src)?;
            let mut extra = Vec::with_capacity(transforms.len());
            for &(flip, turns) in &transforms {
                let sfx = suffix(flip, turns);
                let mut aug = orig.clone();
                aug.hr = with_suffix(&orig.hr, &sfx);
                aug.lr = with_suffix(&orig.lr, &sfx);
                write_png(&apply_rigid(&hr, flip, turns), out_dir.join(&aug.hr))?;
                write_png(&apply_rigid(&lr, flip, turns), out_dir.join(&aug.lr))?;
                let tag = sfx.trim_start_matches('_').replace('_', "+");
                aug.provenance = if orig.provenance.is_empty() { format!("augment {tag}") } else { format!("{}; augment {tag}", orig.provenance) };
                extra.push(aug);
            }
            Ok((orig, extra))
        })
        .collect();

    let mut out = PairManifest { skipped: manifest.skipped.clone(), ..PairManifest::new() };
    let mut augmented = Vec::new();
    for r in per_entry {
        let (orig, extra) = r?;
        out.entries.push(orig);
        augmented.extend(extra);
    }
    out.entries.extend(augmented);
    Ok(out)
}
