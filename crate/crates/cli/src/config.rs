//! Config file schema. The same schema is written back, fully resolved, as
//! the effective-config echo of every run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use srpair_core::registration::CropRect;

pub const ECHO_FILE: &str = "srpair-run.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// `error`, `warn`, `info`, `debug` or `trace`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub register: Option<RegisterSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrade: Option<DegradeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub augment: Option<AugmentSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegisterSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hr: Option<PathBuf>,
    #[serde(flatten)]
    pub align: AlignSection,
}

/// Alignment knobs shared by `register` and `degrade video`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_order: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ransac_thresh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ransac_confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ransac_max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_inliers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binarize_threshold: Option<f64>,
    /// Rectangles as `"x,y,w,h"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclude: Option<Vec<String>>,
    // serde cannot combine flatten with deny_unknown_fields, so leftovers
    // land here and are rejected after loading
    #[serde(flatten, skip_serializing)]
    pub unknown: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classic: Option<ClassicSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub video: Option<VideoSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<u32>,
    /// `delta` or `gaussian`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blur_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VideoSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hr_frames: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_frames: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(flatten)]
    pub align: AlignSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sr: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crop_border: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotations: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hflip: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: FileConfig = toml::from_str(text)?;
        let aligns = [
            ("register", cfg.register.as_ref().map(|r| &r.align)),
            ("degrade.video", cfg.degrade.as_ref().and_then(|d| d.video.as_ref()).map(|v| &v.align)),
        ];
        for (section, align) in aligns {
            if let Some(key) = align.and_then(|a| a.unknown.keys().next()) {
                bail!("unknown key `{key}` in [{section}]");
            }
        }
        Ok(cfg)
    }

    /// Writes the resolved config into `dir` as [`ECHO_FILE`].
    pub fn echo(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let text = toml::to_string_pretty(self).expect("config serializes");
        let path = dir.join(ECHO_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Bad flags, unreadable config values or missing required settings.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(msg.into()))
}

/// Takes the flag value, else the file value; fails when neither is set.
pub fn required<T: Clone>(flag: &Option<T>, file: Option<&T>, name: &str) -> Result<T> {
    flag.clone().or_else(|| file.cloned()).ok_or_else(|| config_error(format!("missing required setting `{name}`")))
}

pub fn pick<T: Clone>(flag: &Option<T>, file: Option<&T>, default: T) -> T {
    flag.clone().or_else(|| file.cloned()).unwrap_or(default)
}

pub fn parse_rect(s: &str) -> Result<CropRect> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Vec<usize> = parts.iter().filter_map(|p| p.parse().ok()).collect();
    if parts.len() != 4 || nums.len() != 4 {
        bail!(ConfigError(format!("exclusion rectangle must be x,y,w,h, got {s:?}")));
    }
    if nums[2] == 0 || nums[3] == 0 {
        bail!(ConfigError(format!("exclusion rectangle {s:?} is empty")));
    }
    Ok(CropRect::new(nums[0], nums[1], nums[2], nums[3]))
}

pub fn format_rect(r: &CropRect) -> String {
    format!("{},{},{},{}", r.x, r.y, r.w, r.h)
}
