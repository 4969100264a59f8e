use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::quality::{psnr_y, ssim_y};
use crate::degradation::{PairClass, PairManifest};
use crate::error::{Error, Result};
use crate::imaging::io::read_png;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Ok,
    /// No SR output with the expected name.
    Missing,
    /// SR output present but unreadable or of the wrong size.
    Error,
}

impl EntryStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntryStatus::Ok => "ok",
            EntryStatus::Missing => "missing",
            EntryStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricRow {
    pub id: String,
    pub class: PairClass,
    pub scale: u32,
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    pub status: EntryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aggregate {
    pub class: PairClass,
    pub scale: u32,
    pub count: usize,
    pub mean_psnr_db: f64,
    pub mean_ssim: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Fixed border crop; when unset each entry uses its own scale.
    pub crop_border: Option<usize>,
}

impl MetricReport {
    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(|r| r.status == EntryStatus::Ok)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,class,scale,psnr_db,ssim,status\n");
        for r in &self.rows {
            let psnr = r.psnr_db.map(|v| format!("{v:.4}")).unwrap_or_default();
            let ssim = r.ssim.map(|v| format!("{v:.6}")).unwrap_or_default();
            let id = if r.id.contains([',', '"', '\n']) { format!("\"{}\"", r.id.replace('"', "\"\"")) } else { r.id.clone() };
            writeln!(s, "{id},{},{},{psnr},{ssim},{}", r.class.as_str(), r.scale, r.status.as_str()).expect("string write");
        }
        s
    }

    /// Aggregates plus entry counts, pretty-printed with a trailing newline.
    pub fn to_json(&self) -> String {
        let count = |st: EntryStatus| self.rows.iter().filter(|r| r.status == st).count();
        let doc = serde_json::json!({
            "entries": self.rows.len(),
            "ok": count(EntryStatus::Ok),
            "missing": count(EntryStatus::Missing),
            "error": count(EntryStatus::Error),
            "aggregates": self.aggregates,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `<path>` as CSV and `<path>` with a `.json` extension as the
    /// aggregate block.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(csv_path, self.to_csv()).map_err(|e| Error::io(csv_path, e))?;
        let json_path = csv_path.with_extension("json");
        fs::write(&json_path, self.to_json()).map_err(|e| Error::io(&json_path, e))
    }
}

/// Scores SR outputs in `sr_dir` against the HR side of every manifest
/// entry. The SR file for an entry carries the HR file name.
pub fn evaluate_manifest(manifest: &PairManifest, manifest_dir: &Path, sr_dir: &Path, opts: EvalOptions) -> MetricReport {
    let rows: Vec<MetricRow> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let id = e.id().to_string();
            let mut row = MetricRow { id: id.clone(), class: e.class, scale: e.scale, psnr_db: None, ssim: None, status: EntryStatus::Ok, detail: None };
            let sr_path = sr_dir.join(&id);
            if !sr_path.is_file() {
                row.status = EntryStatus::Missing;
                return row;
            }
            let border = opts.crop_border.unwrap_or(e.scale as usize);
            let scored = (|| -> Result<(f64, f64)> {
                let hr = read_png(PairManifest::resolve(manifest_dir, &e.hr))?;
                let sr = read_png(&sr_path)?;
                Ok((psnr_y(&hr, &sr, border)?, ssim_y(&hr, &sr, border)?))
            })();
            match scored {
                Ok((p, s)) => {
                    row.psnr_db = Some(p);
                    row.ssim = Some(s);
                }
                Err(err) => {
                    row.status = EntryStatus::Error;
                    row.detail = Some(err.to_string());
                }
            }
            row
        })
        .collect();

    let mut groups: BTreeMap<(PairClass, u32), (usize, f64, f64)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status == EntryStatus::Ok) {
        let g = groups.entry((r.class, r.scale)).or_default();
        g.0 += 1;
        g.1 += r.psnr_db.unwrap_or_default();
        g.2 += r.ssim.unwrap_or_default();
    }
    let aggregates = groups
        .into_iter()
        .map(|((class, scale), (n, p, s))| Aggregate { class, scale, count: n, mean_psnr_db: p / n as f64, mean_ssim: s / n as f64 })
        .collect();
    MetricReport { rows, aggregates }
}
