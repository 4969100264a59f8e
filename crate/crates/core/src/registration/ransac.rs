use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{Keypoint, Match};
use crate::imaging::AffineTransform;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RansacConfig {
    /// Reprojection error, in pixels, below which a correspondence is an inlier.
    pub inlier_threshold: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { inlier_threshold: 3.0, confidence: 0.995, max_iterations: 2000, seed: 0 }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::param("RANSAC inlier threshold must be positive"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::param("RANSAC confidence must lie in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("RANSAC needs at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineEstimate {
    pub transform: AffineTransform,
    /// Indices into the input match list.
    pub inliers: Vec<usize>,
    pub mean_residual: f64,
}

type Point = (f64, f64);

/// Least-squares affine fit `src -> dst` over centered coordinates.
pub fn fit_affine(src: &[Point], dst: &[Point]) -> Result<AffineTransform> {
    if src.len() != dst.len() || src.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: src.len().min(dst.len()) });
    }
    let n = src.len() as f64;
    let mean = |pts: &[Point]| {
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        (sx / n, sy / n)
    };
    let (mx, my) = mean(src);
    let (ux, uy) = mean(dst);
    // scatter of src and cross-covariance dst/src
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let (mut cxx, mut cxy, mut cyx, mut cyy) = (0.0, 0.0, 0.0, 0.0);
    for (p, q) in src.iter().zip(dst) {
        let (px, py) = (p.0 - mx, p.1 - my);
        let (qx, qy) = (q.0 - ux, q.1 - uy);
        sxx += px * px;
        sxy += px * py;
        syy += py * py;
        cxx += qx * px;
        cxy += qx * py;
        cyx += qy * px;
        cyy += qy * py;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= 1e-10 * (sxx + syy).powi(2).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateGeometry);
    }
    let (ixx, ixy, iyy) = (syy / det, -sxy / det, sxx / det);
    let a = cxx * ixx + cxy * ixy;
    let b = cxx * ixy + cxy * iyy;
    let c = cyx * ixx + cyy * ixy;
    let d = cyx * ixy + cyy * iyy;
    AffineTransform::new([a, b, ux - a * mx - b * my, c, d, uy - c * mx - d * my]).map_err(|_| Error::DegenerateGeometry)
}

fn collinear(p: [Point; 3]) -> bool {
    let (ax, ay) = (p[1].0 - p[0].0, p[1].1 - p[0].1);
    let (bx, by) = (p[2].0 - p[0].0, p[2].1 - p[0].1);
    let cross = (ax * by - ay * bx).abs();
    let scale = (ax * ax + ay * ay).max(bx * bx + by * by);
    cross <= 1e-6 * scale.max(1e-12)
}

fn residual(t: &AffineTransform, p: Point, q: Point) -> f64 {
    let (x, y) = t.apply(p.0, p.1);
    ((x - q.0).powi(2) + (y - q.1).powi(2)).sqrt()
}

fn inliers_of(t: &AffineTransform, src: &[Point], dst: &[Point], thr: f64) -> Vec<usize> {
    (0..src.len()).filter(|&i| residual(t, src[i], dst[i]) < thr).collect()
}

/// Robust affine estimate mapping A keypoints onto B keypoints.
///
/// Minimal samples are three non-collinear correspondences; the best
/// hypothesis by inlier count is refit by least squares over its inliers
/// until the inlier set stops changing.
pub fn estimate_affine_ransac(matches: &[Match], kps_a: &[Keypoint], kps_b: &[Keypoint], cfg: &RansacConfig) -> Result<AffineEstimate> {
    cfg.validate()?;
    if matches.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: matches.len() });
    }
    let src: Vec<Point> = matches.iter().map(|m| (kps_a[m.idx_a].x, kps_a[m.idx_a].y)).collect();
    let dst: Vec<Point> = matches.iter().map(|m| (kps_b[m.idx_b].x, kps_b[m.idx_b].y)).collect();
    // the whole set must span two dimensions for any sample to do so
    fit_affine(&src, &dst)?;

    let n = matches.len();
    let thr = cfg.inlier_threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(AffineTransform, usize)> = None;
    let mut needed = cfg.max_iterations;
    let mut iter = 0;
    while iter < needed.min(cfg.max_iterations) {
        iter += 1;
        let idx = sample(&mut rng, n, 3);
        let pick = [idx.index(0), idx.index(1), idx.index(2)];
        let s = pick.map(|i| src[i]);
        let d = pick.map(|i| dst[i]);
        if collinear(s) || collinear(d) {
            continue;
        }
        let Ok(model) = fit_affine(&s, &d) else { continue };
        let count = (0..n).filter(|&i| residual(&model, src[i], dst[i]) < thr).count();
        if best.map_or(true, |(_, c)| count > c) {
            best = Some((model, count));
            let w = count as f64 / n as f64;
            let denom = (1.0 - w.powi(3)).ln();
            needed = if denom < 0.0 {
                ((1.0 - cfg.confidence).ln() / denom).ceil().max(1.0) as usize
            } else {
                cfg.max_iterations
            };
        }
    }
    let (hypothesis, _) = best.ok_or(Error::DegenerateGeometry)?;
    let mut inliers = inliers_of(&hypothesis, &src, &dst, thr);
    if inliers.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: inliers.len() });
    }
    let refit = |set: &[usize]| {
        let s: Vec<Point> = set.iter().map(|&i| src[i]).collect();
        let d: Vec<Point> = set.iter().map(|&i| dst[i]).collect();
        fit_affine(&s, &d)
    };
    // the returned model is always the least-squares fit of the returned set
    let mut model = refit(&inliers)?;
    for _ in 0..20 {
        let next = inliers_of(&model, &src, &dst, thr);
        if next == inliers || next.len() < 3 {
            break;
        }
        let Ok(m) = refit(&next) else { break };
        model = m;
        inliers = next;
    }
    let mean_residual = inliers.iter().map(|&i| residual(&model, src[i], dst[i])).sum::<f64>() / inliers.len() as f64;
    Ok(AffineEstimate { transform: model, inliers, mean_residual })
}
