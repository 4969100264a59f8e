//! Luma PSNR/SSIM and manifest-driven evaluation reports.

mod quality;
mod report;

pub use quality::{psnr_y, ssim_y, PSNR_CAP_DB, SSIM_SIGMA, SSIM_WINDOW};
pub use report::{evaluate_manifest, Aggregate, EntryStatus, EvalOptions, MetricReport, MetricRow};
