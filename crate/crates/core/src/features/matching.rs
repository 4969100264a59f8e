use rayon::prelude::*;

use super::Descriptor;

pub const DEFAULT_RATIO: f64 = 0.8;

/// Candidate correspondence between keypoint `idx_a` of image A and `idx_b`
/// of image B.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Match {
    pub idx_a: usize,
    pub idx_b: usize,
    /// Euclidean descriptor distance.
    pub distance: f64,
}

/// Nearest-neighbour matching from A into B with the ratio test.
///
/// A match survives when `d1 / d2 < ratio`. If B holds a single descriptor
/// there is no second neighbour and the match is kept unconditionally.
/// Results are ordered by `idx_a`, at most one per A descriptor.
pub fn match_descriptors(da: &[Descriptor], db: &[Descriptor], ratio: f64) -> Vec<Match> {
    if da.is_empty() || db.is_empty() {
        return Vec::new();
    }
    da.par_iter()
        .enumerate()
        .filter_map(|(ia, a)| {
            let mut best = (f32::INFINITY, usize::MAX);
            let mut second = f32::INFINITY;
            for (ib, b) in db.iter().enumerate() {
                let d = a.distance_sq(b);
                if d < best.0 {
                    second = best.0;
                    best = (d, ib);
                } else if d < second {
                    second = d;
                }
            }
            let d1 = (best.0 as f64).sqrt();
            let keep = if db.len() == 1 {
                true
            } else {
                let d2 = (second as f64).sqrt();
                d2 > 0.0 && d1 / d2 < ratio
            };
            keep.then_some(Match { idx_a: ia, idx_b: best.1, distance: d1 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DESCRIPTOR_LEN;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
        let mut v = [0.0f32; DESCRIPTOR_LEN];
        for c in v.iter_mut() {
            *c = rng.random::<f32>();
        }
        Descriptor::from_components(v).unwrap()
    }

    fn perturbed(d: &Descriptor, rng: &mut ChaCha8Rng, amount: f32) -> Descriptor {
        let mut v = *d.components();
        for c in v.iter_mut() {
            *c = (*c + amount * (rng.random::<f32>() - 0.5)).max(0.0);
        }
        Descriptor::from_components(v).unwrap()
    }

    #[test]
    fn self_match_has_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let da: Vec<_> = (0..40).map(|_| random_descriptor(&mut rng)).collect();
        let m = match_descriptors(&da, &da, DEFAULT_RATIO);
        assert_eq!(m.len(), 40);
        for (i, mm) in m.iter().enumerate() {
            assert_eq!((mm.idx_a, mm.idx_b), (i, i));
            assert_eq!(mm.distance, 0.0);
        }
    }

    #[test]
    fn single_candidate_bypasses_ratio_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = vec![random_descriptor(&mut rng)];
        let b = vec![random_descriptor(&mut rng)];
        let m = match_descriptors(&a, &b, DEFAULT_RATIO);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].idx_a, m[0].idx_b), (0, 0));
    }

    #[test]
    fn empty_inputs_give_empty_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = vec![random_descriptor(&mut rng)];
        assert!(match_descriptors(&a, &[], 0.8).is_empty());
        assert!(match_descriptors(&[], &a, 0.8).is_empty());
    }

    #[test]
    fn planted_correspondences_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let planted: Vec<_> = (0..200).map(|_| random_descriptor(&mut rng)).collect();
        let distractors: Vec<_> = (0..300).map(|_| random_descriptor(&mut rng)).collect();
        // B = noisy copies of the planted set interleaved with distractors
        let mut db = Vec::new();
        let mut truth = Vec::new();
        for (i, d) in planted.iter().enumerate() {
            truth.push(db.len());
            db.push(perturbed(d, &mut rng, 0.05));
            if i < distractors.len() {
                db.push(distractors[i].clone());
            }
        }
        db.extend(distractors[200..].iter().cloned());
        let m = match_descriptors(&planted, &db, DEFAULT_RATIO);
        let hits = m.iter().filter(|mm| truth[mm.idx_a] == mm.idx_b).count();
        assert!(hits as f64 >= 0.95 * 200.0, "recovered {hits}/200");
        assert!(m.iter().all(|mm| mm.distance >= 0.0));
    }
}
