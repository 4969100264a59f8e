use super::{Keypoint, Match};
use crate::error::{Error, Result};

/// Matching location constraint: a correspondence must not move more than
/// `alpha * M` horizontally or `alpha * N` vertically, where `M x N` is the
/// image size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MlcConfig {
    pub alpha: f64,
}

impl Default for MlcConfig {
    fn default() -> Self {
        Self { alpha: 0.1 }
    }
}

impl MlcConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(format!("MLC alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { alpha })
    }

    /// `(t_x, t_y)` thresholds for an `width x height` image.
    pub fn thresholds(&self, width: f64, height: f64) -> (f64, f64) {
        (self.alpha * width, self.alpha * height)
    }
}

/// Keeps exactly the matches with `|x_a - x_b| <= alpha * width` and
/// `|y_a - y_b| <= alpha * height`, preserving order.
pub fn filter_mlc(matches: &[Match], kps_a: &[Keypoint], kps_b: &[Keypoint], width: f64, height: f64, cfg: MlcConfig) -> Vec<Match> {
    let (tx, ty) = cfg.thresholds(width, height);
    matches
        .iter()
        .filter(|m| {
            let (a, b) = (&kps_a[m.idx_a], &kps_b[m.idx_b]);
            (a.x - b.x).abs() <= tx && (a.y - b.y).abs() <= ty
        })
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kp(x: f64, y: f64) -> Keypoint {
        Keypoint { x, y, scale: 1.0, orientation: 0.0, response: 1.0 }
    }

    fn single(a: (f64, f64), b: (f64, f64), alpha: f64) -> usize {
        let m = [Match { idx_a: 0, idx_b: 0, distance: 0.0 }];
        filter_mlc(&m, &[kp(a.0, a.1)], &[kp(b.0, b.1)], 2000.0, 1000.0, MlcConfig::new(alpha).unwrap()).len()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(single((500.0, 300.0), (620.0, 320.0), 0.1), 1);
        assert_eq!(single((500.0, 300.0), (800.0, 320.0), 0.1), 0);
        // exactly on the threshold is kept
        assert_eq!(single((500.0, 300.0), (700.0, 400.0), 0.1), 1);
        assert_eq!(single((0.0, 0.0), (1999.0, 999.0), 0.9999), 1);
    }

    #[test]
    fn alpha_bounds() {
        assert!(MlcConfig::new(0.0).is_err());
        assert!(MlcConfig::new(1.0).is_err());
        assert!(MlcConfig::new(0.5).is_ok());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<Keypoint>, Vec<Keypoint>, Vec<Match>)> {
        (1usize..30, 1usize..30).prop_flat_map(|(na, nb)| {
            (
                proptest::collection::vec((0.0f64..200.0, 0.0f64..100.0).prop_map(|(x, y)| kp(x, y)), na),
                proptest::collection::vec((0.0f64..200.0, 0.0f64..100.0).prop_map(|(x, y)| kp(x, y)), nb),
                proptest::collection::vec(
                    (0..na, 0..nb).prop_map(|(a, b)| Match { idx_a: a, idx_b: b, distance: 0.0 }),
                    0..40,
                ),
            )
        })
    }

    proptest! {
        #[test]
        fn idempotent_and_monotone((ka, kb, m) in arb_case(), a1 in 0.01f64..0.99, a2 in 0.01f64..0.99) {
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let small = filter_mlc(&m, &ka, &kb, 200.0, 100.0, MlcConfig::new(lo).unwrap());
            let large = filter_mlc(&m, &ka, &kb, 200.0, 100.0, MlcConfig::new(hi).unwrap());
            let again = filter_mlc(&small, &ka, &kb, 200.0, 100.0, MlcConfig::new(lo).unwrap());
            prop_assert_eq!(&again, &small);
            // small is a subsequence of large
            let mut it = large.iter();
            for s in &small {
                prop_assert!(it.any(|l| l == s));
            }
        }

        #[test]
        fn commutes_with_permutation((ka, kb, m) in arb_case(), alpha in 0.01f64..0.99, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = m.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let cfg = MlcConfig::new(alpha).unwrap();
            let key = |v: Vec<Match>| {
                let mut k: Vec<(usize, usize)> = v.iter().map(|m| (m.idx_a, m.idx_b)).collect();
                k.sort();
                k
            };
            prop_assert_eq!(key(filter_mlc(&m, &ka, &kb, 200.0, 100.0, cfg)), key(filter_mlc(&shuffled, &ka, &kb, 200.0, 100.0, cfg)));
        }
    }
}
