use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    Interpolation,
    Cnn,
    Gan,
    Video,
    RealWorld,
}

impl PairClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PairClass::Interpolation => "interpolation",
            PairClass::Cnn => "cnn",
            PairClass::Gan => "gan",
            PairClass::Video => "video",
            PairClass::RealWorld => "real_world",
        }
    }
}

/// One LR/HR pair. Paths are relative to the directory holding the manifest
/// unless absolute.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ManifestEntry {
    pub hr: String,
    pub lr: String,
    pub class: PairClass,
    pub scale: u32,
    /// GAN degradation level, 1 to 3.
    #[serde(default)]
    pub level: Option<u8>,
    #[serde(default)]
    pub provenance: String,
}

impl ManifestEntry {
    /// Identifier used in reports and for SR file lookup: the HR file name.
    pub fn id(&self) -> &str {
        Path::new(&self.hr).file_name().and_then(|n| n.to_str()).unwrap_or(&self.hr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SkippedInput {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PairManifest {
    pub version: String,
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedInput>,
}

impl Default for PairManifest {
    fn default() -> Self {
        Self { version: MANIFEST_VERSION.to_string(), entries: Vec::new(), skipped: Vec::new() }
    }
}

/// Manifest-relative form of a path, always with `/` separators.
pub fn relative_path(path: &Path, base: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

impl PairManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: PairManifest = serde_json::from_str(text)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!("unsupported manifest version {:?}", m.version)));
        }
        Ok(m)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(base: &Path, p: &str) -> PathBuf {
        base.join(p)
    }

    /// Checks field invariants and that every referenced file exists under
    /// `base`.
    pub fn validate(&self, base: &Path) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!("unsupported manifest version {:?}", self.version)));
        }
        for (i, e) in self.entries.iter().enumerate() {
            match (e.class, e.level) {
                (PairClass::Gan, Some(1..=3)) => {}
                (PairClass::Gan, _) => return Err(Error::Manifest(format!("entry {i}: GAN entries need level 1, 2 or 3"))),
                (_, Some(l)) => return Err(Error::Manifest(format!("entry {i}: level {l} set on non-GAN entry"))),
                (_, None) => {}
            }
            if e.scale == 0 {
                return Err(Error::Manifest(format!("entry {i}: scale must be positive")));
            }
            for p in [&e.hr, &e.lr] {
                if !Self::resolve(base, p).is_file() {
                    return Err(Error::Manifest(format!("entry {i}: missing file {p}")));
                }
            }
        }
        Ok(())
    }
}
