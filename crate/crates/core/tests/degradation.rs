use std::fs;
use std::path::Path;

use srpair_core::degradation::{
    apply_rigid, augment_pairs, build_interpolation_pairs, degrade_classic, AugmentPolicy, DegradationSpec, PairClass, PairManifest,
};
use srpair_core::imaging::io::{read_png, write_png};
use srpair_core::imaging::{resize_bicubic, ImageBuffer};
use srpair_core::metrics::psnr_y;
use srpair_core::synth::{textured_gray, textured_rgb};

fn write_inputs(dir: &Path, dims: &[(usize, usize)]) {
    for (i, &(w, h)) in dims.iter().enumerate() {
        write_png(&textured_rgb(w, h, 40 + i as u64), dir.join(format!("img{i}.png"))).unwrap();
    }
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn delta_kernel_is_plain_bicubic_for_all_scales() {
    let hr = textured_rgb(120, 96, 1);
    for s in 2..=4 {
        let spec = DegradationSpec::bicubic(s).unwrap();
        assert_eq!(degrade_classic(&hr, &spec).unwrap(), resize_bicubic(&hr, 1.0 / s as f64, true).unwrap());
    }
}

#[test]
fn interpolation_pairs_contract() {
    let src = tempfile::tempdir().unwrap();
    write_inputs(src.path(), &[(64, 48), (50, 40), (66, 42)]);
    let out = tempfile::tempdir().unwrap();
    let spec = DegradationSpec::bicubic(2).unwrap();
    let m = build_interpolation_pairs(src.path(), &spec, out.path()).unwrap();
    assert_eq!(m.entries.len(), 3);
    m.validate(out.path()).unwrap();
    for e in &m.entries {
        assert_eq!(e.class, PairClass::Interpolation);
        assert!(e.lr.ends_with("_x2.png"));
        let hr = read_png(out.path().join(&e.hr)).unwrap();
        let lr = read_png(out.path().join(&e.lr)).unwrap();
        assert_eq!((lr.width() * 2, lr.height() * 2), hr.dims());
    }
    assert_eq!(m.entries[0].hr, "hr/img0.png");
}

#[test]
fn divisibility_crop() {
    let src = tempfile::tempdir().unwrap();
    write_png(&textured_gray(301, 300, 2), src.path().join("wide.png")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = build_interpolation_pairs(src.path(), &DegradationSpec::bicubic(3).unwrap(), out.path()).unwrap();
    let hr = read_png(out.path().join(&m.entries[0].hr)).unwrap();
    let lr = read_png(out.path().join(&m.entries[0].lr)).unwrap();
    assert_eq!(hr.dims(), (300, 300));
    assert_eq!(lr.dims(), (100, 100));
}

#[test]
fn rerun_is_byte_identical() {
    let src = tempfile::tempdir().unwrap();
    write_inputs(src.path(), &[(40, 40), (48, 36)]);
    let spec = DegradationSpec::new(2, srpair_core::degradation::BlurKernel::Gaussian { sigma: 1.0 }, 0.01, 9).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = build_interpolation_pairs(src.path(), &spec, a.path()).unwrap();
    let mb = build_interpolation_pairs(src.path(), &spec, b.path()).unwrap();
    assert_eq!(ma.to_json(), mb.to_json());
    assert_eq!(tree_bytes(a.path()), tree_bytes(b.path()));
}

#[test]
fn unreadable_file_is_skipped() {
    let src = tempfile::tempdir().unwrap();
    write_inputs(src.path(), &[(40, 40)]);
    fs::write(src.path().join("broken.png"), b"not a png").unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = build_interpolation_pairs(src.path(), &DegradationSpec::bicubic(2).unwrap(), out.path()).unwrap();
    assert_eq!(m.entries.len(), 1);
    assert_eq!(m.skipped.len(), 1);
    assert_eq!(m.skipped[0].path, "broken.png");
}

#[test]
fn empty_dir_is_an_error() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    assert!(build_interpolation_pairs(src.path(), &DegradationSpec::bicubic(2).unwrap(), out.path()).is_err());
}

fn base_pairs(n: usize) -> (tempfile::TempDir, PairManifest) {
    let src = tempfile::tempdir().unwrap();
    let dims: Vec<(usize, usize)> = (0..n).map(|i| (48 + 12 * i, 36)).collect();
    write_inputs(src.path(), &dims);
    let data = tempfile::tempdir().unwrap();
    let m = build_interpolation_pairs(src.path(), &DegradationSpec::bicubic(2).unwrap(), data.path()).unwrap();
    m.write(data.path().join("manifest.json")).unwrap();
    (data, m)
}

#[test]
fn empty_policy_copies_manifest() {
    let (data, m) = base_pairs(2);
    let out = tempfile::tempdir().unwrap();
    let aug = augment_pairs(&m, data.path(), &AugmentPolicy::default(), out.path()).unwrap();
    assert_eq!(aug.to_json(), m.to_json());
    aug.validate(out.path()).unwrap();
}

#[test]
fn single_rotation_doubles_entries() {
    let (data, m) = base_pairs(1);
    let out = tempfile::tempdir().unwrap();
    let policy = AugmentPolicy { rotations: vec![180], hflip: false };
    let aug = augment_pairs(&m, data.path(), &policy, out.path()).unwrap();
    assert_eq!(aug.entries.len(), 2);
    aug.validate(out.path()).unwrap();
    let hr = read_png(out.path().join(&aug.entries[0].hr)).unwrap();
    let hr_rot = read_png(out.path().join(&aug.entries[1].hr)).unwrap();
    assert_eq!(hr_rot, apply_rigid(&hr, false, 2));
    assert!(aug.entries[1].provenance.contains("rot180"));
}

#[test]
fn full_policy_counts_and_alignment() {
    let (data, m) = base_pairs(2);
    let out = tempfile::tempdir().unwrap();
    let policy = AugmentPolicy { rotations: vec![90, 180, 270], hflip: true };
    let aug = augment_pairs(&m, data.path(), &policy, out.path()).unwrap();
    assert_eq!(aug.entries.len(), 2 * 8);
    aug.validate(out.path()).unwrap();
    let spec = DegradationSpec::bicubic(2).unwrap();
    for e in &aug.entries {
        let hr = read_png(out.path().join(&e.hr)).unwrap();
        let lr = read_png(out.path().join(&e.lr)).unwrap();
        let re = degrade_classic(&hr, &spec).unwrap();
        assert!(psnr_y(&re, &lr, 0).unwrap() >= 50.0, "{}", e.hr);
    }
}

#[test]
fn rigid_ops_commute_with_degradation() {
    let hr = textured_rgb(48, 36, 5);
    let spec = DegradationSpec::new(3, srpair_core::degradation::BlurKernel::Gaussian { sigma: 1.3 }, 0.0, 0).unwrap();
    let lr = degrade_classic(&hr, &spec).unwrap();
    for flip in [false, true] {
        for turns in 0..4 {
            let a = degrade_classic(&apply_rigid(&hr, flip, turns), &spec).unwrap();
            let b: ImageBuffer = apply_rigid(&lr, flip, turns);
            let worst = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-6, "flip {flip} turns {turns}: {worst}");
        }
    }
}

#[test]
fn manifest_file_round_trip() {
    let (data, m) = base_pairs(2);
    let path = data.path().join("manifest.json");
    let text = fs::read_to_string(&path).unwrap();
    let back = PairManifest::read(&path).unwrap();
    assert_eq!(back, m);
    back.write(data.path().join("again.json")).unwrap();
    assert_eq!(fs::read_to_string(data.path().join("again.json")).unwrap(), text);
}
