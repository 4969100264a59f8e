use std::io::Write;

use super::{Keypoint, Match};

/// Debug dump of candidate matches, one CSV row per match:
/// `idx_a,x_a,y_a,idx_b,x_b,y_b,distance,kept_by_gms,kept_by_mlc`.
pub fn write_match_csv<W: Write>(
    mut out: W,
    matches: &[Match],
    kps_a: &[Keypoint],
    kps_b: &[Keypoint],
    kept_by_gms: &[bool],
    kept_by_mlc: &[bool],
) -> std::io::Result<()> {
    writeln!(out, "idx_a,x_a,y_a,idx_b,x_b,y_b,distance,kept_by_gms,kept_by_mlc")?;
    for (i, m) in matches.iter().enumerate() {
        let (a, b) = (&kps_a[m.idx_a], &kps_b[m.idx_b]);
        writeln!(
            out,
            "{},{:.3},{:.3},{},{:.3},{:.3},{:.6},{},{}",
            m.idx_a,
            a.x,
            a.y,
            m.idx_b,
            b.x,
            b.y,
            m.distance,
            kept_by_gms.get(i).copied().unwrap_or(false),
            kept_by_mlc.get(i).copied().unwrap_or(false)
        )?;
    }
    Ok(())
}
