use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use srpair_core::degradation::{PairClass, PairManifest};
use srpair_core::imaging::io::{read_png, write_png};
use srpair_core::imaging::{resize_to, warp_affine, AffineTransform, ColorSpace, ImageBuffer, Interpolation};
use srpair_core::synth::{dual_quality_sequence, textured_gray, textured_rgb};

fn srpair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srpair")).args(args).env_remove("SRPAIR_JOBS").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir`, relative path and bytes, sorted.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn hr_dir(root: &Path, n: usize) -> PathBuf {
    let dir = root.join("hr_in");
    fs::create_dir_all(&dir).unwrap();
    for i in 0..n {
        write_png(&textured_rgb(96, 72, 40 + i as u64), dir.join(format!("img{i}.png"))).unwrap();
    }
    dir
}

#[test]
fn register_self_pair_succeeds_with_identity() {
    let t = tempfile::tempdir().unwrap();
    let img = t.path().join("a.png");
    write_png(&textured_gray(200, 160, 3), &img).unwrap();
    let out = t.path().join("out");
    let r = srpair(&["register", "--lr", s(&img), "--hr", s(&img), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    let m: Vec<f64> = report["transform"]["m"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in m.iter().zip([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]) {
        assert!((got - want).abs() < 1e-3, "{m:?}");
    }
    for f in ["lr_aligned.png", "hr_aligned.png", "lr_native.png", "srpair-run.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn register_warped_pair_reports_recovered_transform() {
    let t = tempfile::tempdir().unwrap();
    let hr = textured_gray(256, 256, 9);
    let tr = AffineTransform::similarity_about(128.0, 128.0, 2f64.to_radians(), 1.02, 4.0, -3.0).unwrap();
    let (lr, _) = warp_affine(&hr, &tr, 256, 256, Interpolation::Bilinear).unwrap();
    let (lp, hp) = (t.path().join("lr.png"), t.path().join("hr.png"));
    write_png(&lr, &lp).unwrap();
    write_png(&hr, &hp).unwrap();
    let out = t.path().join("out");
    let r = srpair(&["register", "--lr", s(&lp), "--hr", s(&hp), "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let m: Vec<f64> = report["transform"]["m"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let got = AffineTransform::new(m.try_into().unwrap()).unwrap();
    let err = got.max_corner_distance(&tr.inverse().unwrap(), 256.0, 256.0);
    assert!(err <= 1.0, "corner error {err}");
}

#[test]
fn register_textureless_exits_2_with_report() {
    let t = tempfile::tempdir().unwrap();
    let img = t.path().join("flat.png");
    write_png(&ImageBuffer::filled(128, 128, ColorSpace::Gray, 0.5).unwrap(), &img).unwrap();
    let out = t.path().join("out");
    let r = srpair(&["register", "--lr", s(&img), "--hr", s(&img), "--out", s(&out)]);
    assert_eq!(code(&r), 2);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "failed");
    assert_eq!(report["stage"], "features");
}

#[test]
fn missing_input_exits_4_and_bad_flags_exit_5() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("out");
    let missing = t.path().join("nope.png");
    let r = srpair(&["register", "--lr", s(&missing), "--hr", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&r), 4);
    assert_eq!(code(&srpair(&["register", "--bogus"])), 5);
    let img = t.path().join("a.png");
    write_png(&textured_gray(64, 64, 1), &img).unwrap();
    let r = srpair(&["register", "--lr", s(&img), "--hr", s(&img), "--out", s(&out), "--alpha", "2"]);
    assert_eq!(code(&r), 5);
    let r = srpair(&["register", "--lr", s(&img), "--hr", s(&img), "--out", s(&out), "--exclude", "1,2,3"]);
    assert_eq!(code(&r), 5);
    let r = srpair(&["register", "--hr", s(&img), "--out", s(&out)]);
    assert_eq!(code(&r), 5, "missing --lr");
}

#[test]
fn degrade_classic_manifest_validates_and_reruns_identically() {
    let t = tempfile::tempdir().unwrap();
    let input = hr_dir(t.path(), 3);
    let run = |out: &Path| {
        srpair(&["degrade", "classic", "--input", s(&input), "--out", s(out), "--scale", "4", "--kernel", "delta", "--noise", "0"])
    };
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert_eq!(code(&run(&a)), 0);
    assert_eq!(code(&run(&b)), 0);
    assert_eq!(snapshot(&a), snapshot(&b));
    let m = PairManifest::read(a.join("manifest.json")).unwrap();
    m.validate(&a).unwrap();
    assert_eq!(m.entries.len(), 3);
    for e in &m.entries {
        assert_eq!((e.class, e.scale), (PairClass::Interpolation, 4));
        let lr = read_png(a.join(&e.lr)).unwrap();
        assert_eq!(lr.dims(), (24, 18));
    }
}

#[test]
fn degrade_classic_seed_changes_noise_only() {
    let t = tempfile::tempdir().unwrap();
    let input = hr_dir(t.path(), 1);
    let run = |out: &Path, seed: &str| {
        srpair(&["--seed", seed, "degrade", "classic", "--input", s(&input), "--out", s(out), "--scale", "2", "--noise", "0.02"])
    };
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    assert_eq!(code(&run(&a, "1")), 0);
    assert_eq!(code(&run(&b, "1")), 0);
    assert_eq!(code(&run(&c, "2")), 0);
    assert_eq!(snapshot(&a), snapshot(&b));
    assert_ne!(fs::read(a.join("lr/img0_x2.png")).unwrap(), fs::read(c.join("lr/img0_x2.png")).unwrap());
    assert_eq!(fs::read(a.join("hr/img0.png")).unwrap(), fs::read(c.join("hr/img0.png")).unwrap());
}

#[test]
fn config_file_values_and_flag_overrides() {
    let t = tempfile::tempdir().unwrap();
    let input = hr_dir(t.path(), 1);
    let cfg = t.path().join("run.toml");
    fs::write(&cfg, format!("seed = 5\n[degrade.classic]\ninput = {:?}\nscale = 2\nkernel = \"delta\"\n", s(&input))).unwrap();
    let out = t.path().join("out");
    let r = srpair(&["--config", s(&cfg), "degrade", "classic", "--out", s(&out), "--scale", "3"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let m = PairManifest::read(out.join("manifest.json")).unwrap();
    assert_eq!(m.entries[0].scale, 3);
    let echo: toml::Value = toml::from_str(&fs::read_to_string(out.join("srpair-run.toml")).unwrap()).unwrap();
    assert_eq!(echo["seed"].as_integer(), Some(5));
    let classic = &echo["degrade"]["classic"];
    assert_eq!(classic["scale"].as_integer(), Some(3));
    assert_eq!(classic["kernel"].as_str(), Some("delta"));
    assert_eq!(classic["noise"].as_float(), Some(0.0));

    // the echo alone reproduces the run
    let again = t.path().join("again");
    let r = srpair(&["--config", s(&out.join("srpair-run.toml")), "degrade", "classic", "--out", s(&again)]);
    assert_eq!(code(&r), 0);
    assert_eq!(snapshot(&out), snapshot(&again));

    fs::write(&cfg, "[degrade.classic]\nscael = 2\n").unwrap();
    assert_eq!(code(&srpair(&["--config", s(&cfg), "degrade", "classic", "--out", s(&out)])), 5);
}

#[test]
fn jobs_from_environment_and_zero_rejected() {
    let t = tempfile::tempdir().unwrap();
    let input = hr_dir(t.path(), 2);
    let out = t.path().join("out");
    let r = Command::new(env!("CARGO_BIN_EXE_srpair"))
        .args(["degrade", "classic", "--input", s(&input), "--out", s(&out), "--scale", "2"])
        .env("SRPAIR_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&r), 5);
    let r = Command::new(env!("CARGO_BIN_EXE_srpair"))
        .args(["--jobs", "2", "degrade", "classic", "--input", s(&input), "--out", s(&out), "--scale", "2"])
        .env("SRPAIR_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&r), 0, "flag beats environment");
}

fn classic_set(root: &Path, n: usize) -> PathBuf {
    let input = hr_dir(root, n);
    let out = root.join("pairs");
    assert_eq!(code(&srpair(&["degrade", "classic", "--input", s(&input), "--out", s(&out), "--scale", "2", "--kernel", "delta"])), 0);
    out
}

#[test]
fn augment_entry_counts() {
    let t = tempfile::tempdir().unwrap();
    let pairs = classic_set(t.path(), 2);
    let manifest = pairs.join("manifest.json");
    let count = |out: &Path| PairManifest::read(out.join("manifest.json")).unwrap().entries.len();

    let plain = t.path().join("plain");
    assert_eq!(code(&srpair(&["augment", "--manifest", s(&manifest), "--out", s(&plain)])), 0);
    let original = PairManifest::read(&manifest).unwrap();
    assert_eq!(PairManifest::read(plain.join("manifest.json")).unwrap().entries, original.entries);

    let r180 = t.path().join("r180");
    assert_eq!(code(&srpair(&["augment", "--manifest", s(&manifest), "--rotations", "180", "--out", s(&r180)])), 0);
    assert_eq!(count(&r180), 4);

    let full = t.path().join("full");
    assert_eq!(code(&srpair(&["augment", "--manifest", s(&manifest), "--rotations", "90,180,270", "--hflip", "--out", s(&full)])), 0);
    assert_eq!(count(&full), 2 * 8);
    PairManifest::read(full.join("manifest.json")).unwrap().validate(&full).unwrap();

    assert_eq!(code(&srpair(&["augment", "--manifest", s(&manifest), "--rotations", "45", "--out", s(&full)])), 5);
}

#[test]
fn evaluate_ground_truth_and_missing_entry() {
    let t = tempfile::tempdir().unwrap();
    let pairs = classic_set(t.path(), 3);
    let sr = pairs.join("hr");
    let report = t.path().join("rep/metrics.csv");
    let r = srpair(&["evaluate", "--manifest", s(&pairs.join("manifest.json")), "--sr", s(&sr), "--report", s(&report)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "id,class,scale,psnr_db,ssim,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",100.0000,1.000000,ok")), "{csv}");
    assert!(t.path().join("rep/metrics.json").exists());
    assert!(t.path().join("rep/srpair-run.toml").exists());

    let partial = t.path().join("partial");
    fs::create_dir_all(&partial).unwrap();
    for f in ["img0.png", "img2.png"] {
        fs::copy(sr.join(f), partial.join(f)).unwrap();
    }
    let r = srpair(&["evaluate", "--manifest", s(&pairs.join("manifest.json")), "--sr", s(&partial), "--report", s(&report)]);
    assert_eq!(code(&r), 1);
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("img1.png,") && l.ends_with(",missing")), "{csv}");
}

#[test]
fn degrade_video_pairs_each_still_window() {
    let t = tempfile::tempdir().unwrap();
    let seq = dual_quality_sequence(21);
    let (hd, ld) = (t.path().join("hr"), t.path().join("lr"));
    fs::create_dir_all(&hd).unwrap();
    fs::create_dir_all(&ld).unwrap();
    for (i, (h, l)) in seq.hr.iter().zip(&seq.lr).enumerate() {
        write_png(h, hd.join(format!("f{i:03}.png"))).unwrap();
        write_png(l, ld.join(format!("f{i:03}.png"))).unwrap();
    }
    let run = |out: &Path| srpair(&["degrade", "video", "--hr-frames", s(&hd), "--lr-frames", s(&ld), "--out", s(out)]);
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    let r = run(&a);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(code(&run(&b)), 0);
    assert_eq!(snapshot(&a), snapshot(&b));
    let m = PairManifest::read(a.join("manifest.json")).unwrap();
    assert_eq!(m.entries.len(), seq.still_midpoints.len());
    m.validate(&a).unwrap();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("video_report.json")).unwrap()).unwrap();
    let selected: Vec<u64> = report["selected"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(selected, seq.still_midpoints.iter().map(|&i| i as u64).collect::<Vec<_>>());
}

#[test]
fn register_is_byte_identical_across_runs_and_jobs() {
    let t = tempfile::tempdir().unwrap();
    let hr = textured_rgb(160, 128, 5);
    let lr = resize_to(&hr, 80, 64, true).unwrap();
    let (lp, hp) = (t.path().join("lr.png"), t.path().join("hr.png"));
    write_png(&lr, &lp).unwrap();
    write_png(&hr, &hp).unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    let ra = srpair(&["--jobs", "1", "register", "--lr", s(&lp), "--hr", s(&hp), "--out", s(&a), "--seed", "9"]);
    let rb = srpair(&["--jobs", "3", "register", "--lr", s(&lp), "--hr", s(&hp), "--out", s(&b), "--seed", "9"]);
    assert_eq!(code(&ra), code(&rb));
    assert_eq!(snapshot(&a), snapshot(&b));
}
