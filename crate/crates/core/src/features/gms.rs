use std::collections::HashMap;

use super::{Keypoint, Match};
use crate::error::{Error, Result};

/// Grid-based motion statistics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GmsConfig {
    /// Cells per axis, applied to both images.
    pub grid_cells: usize,
    /// Threshold multiplier: keep when support >= `tau_factor * sqrt(mean)`.
    pub tau_factor: f64,
}

impl Default for GmsConfig {
    fn default() -> Self {
        Self { grid_cells: 20, tau_factor: 6.0 }
    }
}

impl GmsConfig {
    pub fn new(grid_cells: usize, tau_factor: f64) -> Result<Self> {
        if grid_cells < 2 || !(tau_factor > 0.0) {
            return Err(Error::param(format!("GMS needs grid_cells >= 2 and tau_factor > 0, got {grid_cells}, {tau_factor}")));
        }
        Ok(Self { grid_cells, tau_factor })
    }
}

fn cell_of(k: &Keypoint, size: (f64, f64), g: usize) -> (isize, isize) {
    let cx = ((k.x / size.0 * g as f64).floor() as isize).clamp(0, g as isize - 1);
    let cy = ((k.y / size.1 * g as f64).floor() as isize).clamp(0, g as isize - 1);
    (cx, cy)
}

/// Support count of every match plus the keep threshold.
///
/// A match whose A point falls in cell `i` and B point in cell `j` is
/// supported by every match (itself included) whose A point lies in the 3x3
/// neighbourhood of `i` and whose B point lies in the 3x3 neighbourhood of
/// `j`. The threshold is `tau_factor * sqrt(n)` with `n` the mean number of
/// matches per occupied cell of A.
pub fn gms_support(
    matches: &[Match],
    kps_a: &[Keypoint],
    kps_b: &[Keypoint],
    size_a: (f64, f64),
    size_b: (f64, f64),
    cfg: GmsConfig,
) -> (Vec<u32>, f64) {
    if matches.is_empty() {
        return (Vec::new(), 0.0);
    }
    let g = cfg.grid_cells;
    let cells: Vec<((isize, isize), (isize, isize))> = matches
        .iter()
        .map(|m| (cell_of(&kps_a[m.idx_a], size_a, g), cell_of(&kps_b[m.idx_b], size_b, g)))
        .collect();
    let mut pair_counts: HashMap<((isize, isize), (isize, isize)), u32> = HashMap::new();
    let mut occupied: HashMap<(isize, isize), u32> = HashMap::new();
    for &(ca, cb) in &cells {
        *pair_counts.entry((ca, cb)).or_default() += 1;
        *occupied.entry(ca).or_default() += 1;
    }
    let mean = matches.len() as f64 / occupied.len() as f64;
    let tau = cfg.tau_factor * mean.sqrt();

    let support = cells
        .iter()
        .map(|&((ax, ay), (bx, by))| {
            let mut s = 0;
            for dax in -1..=1 {
                for day in -1..=1 {
                    for dbx in -1..=1 {
                        for dby in -1..=1 {
                            if let Some(c) = pair_counts.get(&((ax + dax, ay + day), (bx + dbx, by + dby))) {
                                s += c;
                            }
                        }
                    }
                }
            }
            s
        })
        .collect();
    (support, tau)
}

/// Keeps matches whose neighbourhood support reaches the threshold,
/// preserving order.
pub fn filter_gms(
    matches: &[Match],
    kps_a: &[Keypoint],
    kps_b: &[Keypoint],
    size_a: (f64, f64),
    size_b: (f64, f64),
    cfg: GmsConfig,
) -> Vec<Match> {
    let (support, tau) = gms_support(matches, kps_a, kps_b, size_a, size_b, cfg);
    matches.iter().zip(support).filter(|(_, s)| *s as f64 >= tau).map(|(m, _)| *m).collect()
}
