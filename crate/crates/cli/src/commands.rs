//! Subcommand drivers. Each one resolves flags against the config file,
//! echoes the result into its output directory and then does the work.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use serde::Serialize;
use srpair_core::degradation::{
    augment_pairs, build_interpolation_pairs, build_video_pairs, extract_still_pairs, AugmentPolicy, BlurKernel, DegradationSpec,
    PairFailure, PairManifest, StillSceneParams, VideoPairRecord,
};
use srpair_core::error::{Error as CoreError, Stage};
use srpair_core::features::{GmsConfig, MlcConfig};
use srpair_core::imaging::io::{read_png, write_png};
use srpair_core::metrics::{evaluate_manifest, EvalOptions};
use srpair_core::registration::{register_pair, FilterOrder, RansacConfig, RegistrationConfig, RegistrationResult};

use crate::config::{
    config_error, format_rect, parse_rect, pick, required, AlignSection, AugmentSection, ClassicSection, DegradeSection, EvaluateSection,
    FileConfig, RegisterSection, VideoSection,
};
use crate::{AlignArgs, AugmentArgs, ClassicArgs, Cli, Command, DegradeCommand, EvaluateArgs, RegisterArgs, VideoArgs};
use crate::{EXIT_EVAL_INCOMPLETE, EXIT_FEATURES, EXIT_OK, EXIT_RANSAC};

pub const REGISTER_REPORT: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const VIDEO_REPORT: &str = "video_report.json";

pub fn run(cli: &Cli, file: &FileConfig) -> Result<u8> {
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    match &cli.command {
        Command::Register(a) => register(a, file, seed),
        Command::Degrade(DegradeCommand::Classic(a)) => classic(a, file, seed),
        Command::Degrade(DegradeCommand::Video(a)) => video(a, file, seed),
        Command::Evaluate(a) => evaluate(a, file, seed),
        Command::Augment(a) => augment(a, file, seed),
    }
}

fn usage(e: CoreError) -> anyhow::Error {
    config_error(e.to_string())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Flags over file values over library defaults, fully spelled out.
fn resolve_align(flags: &AlignArgs, file: Option<&AlignSection>) -> AlignSection {
    let d = RegistrationConfig::default();
    let f = file.cloned().unwrap_or_default();
    let order = match d.filter_order {
        FilterOrder::GmsThenMlc => "gms_then_mlc",
        FilterOrder::MlcThenGms => "mlc_then_gms",
    };
    let exclude = if flags.exclude.is_empty() { f.exclude.clone().unwrap_or_default() } else { flags.exclude.clone() };
    AlignSection {
        alpha: Some(pick(&flags.alpha, f.alpha.as_ref(), d.mlc.alpha)),
        ratio: Some(pick(&flags.ratio, f.ratio.as_ref(), d.ratio)),
        grid_cells: Some(pick(&flags.grid_cells, f.grid_cells.as_ref(), d.gms.grid_cells)),
        tau_factor: Some(pick(&flags.tau_factor, f.tau_factor.as_ref(), d.gms.tau_factor)),
        filter_order: Some(pick(&flags.filter_order, f.filter_order.as_ref(), order.to_string())),
        ransac_thresh: Some(pick(&flags.ransac_thresh, f.ransac_thresh.as_ref(), d.ransac.inlier_threshold)),
        ransac_confidence: Some(pick(&flags.ransac_confidence, f.ransac_confidence.as_ref(), d.ransac.confidence)),
        ransac_max_iterations: Some(pick(&flags.ransac_max_iterations, f.ransac_max_iterations.as_ref(), d.ransac.max_iterations)),
        min_inliers: Some(pick(&flags.min_inliers, f.min_inliers.as_ref(), d.min_inliers)),
        binarize_threshold: Some(pick(&flags.binarize_threshold, f.binarize_threshold.as_ref(), d.binarize_threshold)),
        exclude: Some(exclude),
        unknown: Default::default(),
    }
}

/// Turns a resolved section into a validated pipeline config.
fn registration_config(a: &AlignSection, seed: u64) -> Result<RegistrationConfig> {
    let filter_order = match a.filter_order.as_deref() {
        Some("gms_then_mlc") | None => FilterOrder::GmsThenMlc,
        Some("mlc_then_gms") => FilterOrder::MlcThenGms,
        Some(other) => return Err(config_error(format!("filter order must be gms_then_mlc or mlc_then_gms, got {other:?}"))),
    };
    let d = RegistrationConfig::default();
    let exclusions = a.exclude.iter().flatten().map(|s| parse_rect(s)).collect::<Result<Vec<_>>>()?;
    let cfg = RegistrationConfig {
        ratio: a.ratio.unwrap_or(d.ratio),
        gms: GmsConfig { grid_cells: a.grid_cells.unwrap_or(d.gms.grid_cells), tau_factor: a.tau_factor.unwrap_or(d.gms.tau_factor) },
        mlc: MlcConfig { alpha: a.alpha.unwrap_or(d.mlc.alpha) },
        filter_order,
        ransac: RansacConfig {
            inlier_threshold: a.ransac_thresh.unwrap_or(d.ransac.inlier_threshold),
            confidence: a.ransac_confidence.unwrap_or(d.ransac.confidence),
            max_iterations: a.ransac_max_iterations.unwrap_or(d.ransac.max_iterations),
            seed,
        },
        min_inliers: a.min_inliers.unwrap_or(d.min_inliers),
        binarize_threshold: a.binarize_threshold.unwrap_or(d.binarize_threshold),
        exclusions,
    };
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn canonical_rects(a: &mut AlignSection) -> Result<()> {
    if let Some(ex) = a.exclude.as_mut() {
        for s in ex.iter_mut() {
            *s = format_rect(&parse_rect(s)?);
        }
    }
    Ok(())
}

fn stage_exit(stage: Stage) -> u8 {
    match stage {
        Stage::Features | Stage::Matching => EXIT_FEATURES,
        Stage::Ransac | Stage::Crop => EXIT_RANSAC,
    }
}

#[derive(Serialize)]
struct RegisterReport<'a> {
    lr: &'a str,
    hr: &'a str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inlier_count: Option<usize>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    result: Option<&'a RegistrationResult>,
}

fn register(a: &RegisterArgs, file: &FileConfig, seed: u64) -> Result<u8> {
    let f = file.register.clone().unwrap_or_default();
    let lr = required(&a.lr, f.lr.as_ref(), "register.lr")?;
    let hr = required(&a.hr, f.hr.as_ref(), "register.hr")?;
    let mut align = resolve_align(&a.align, Some(&f.align));
    canonical_rects(&mut align)?;
    let cfg = registration_config(&align, seed)?;
    let effective = FileConfig {
        seed: Some(seed),
        register: Some(RegisterSection { lr: Some(lr.clone()), hr: Some(hr.clone()), align }),
        ..Default::default()
    };
    effective.echo(&a.out)?;

    let raw_lr = read_png(&lr)?;
    let raw_hr = read_png(&hr)?;
    let (lr_s, hr_s) = (lr.to_string_lossy(), hr.to_string_lossy());
    let report_path = a.out.join(REGISTER_REPORT);
    match register_pair(&raw_lr, &raw_hr, &cfg) {
        Ok(pair) => {
            write_png(&pair.lr_aligned, a.out.join("lr_aligned.png"))?;
            write_png(&pair.hr_aligned, a.out.join("hr_aligned.png"))?;
            write_png(&pair.lr_native, a.out.join("lr_native.png"))?;
            let report = RegisterReport {
                lr: &lr_s,
                hr: &hr_s,
                status: "ok",
                stage: None,
                error: None,
                inlier_count: Some(pair.result.inliers.len()),
                result: Some(&pair.result),
            };
            write_json(&report, &report_path)?;
            info!(
                "registered with {} inliers, mean residual {:.3} px, crop {}",
                pair.result.inliers.len(),
                pair.result.mean_residual,
                format_rect(&pair.result.crop_hr)
            );
            Ok(EXIT_OK)
        }
        Err(e) => {
            for name in ["lr_aligned.png", "hr_aligned.png", "lr_native.png"] {
                let _ = fs::remove_file(a.out.join(name));
            }
            let report = RegisterReport {
                lr: &lr_s,
                hr: &hr_s,
                status: "failed",
                stage: e.stage(),
                error: Some(e.to_string()),
                inlier_count: None,
                result: None,
            };
            write_json(&report, &report_path)?;
            Err(e.into())
        }
    }
}

fn parse_kernel(name: &str, sigma: f64) -> Result<BlurKernel> {
    match name {
        "delta" => Ok(BlurKernel::Delta),
        "gaussian" => Ok(BlurKernel::Gaussian { sigma }),
        other => Err(config_error(format!("kernel must be delta or gaussian, got {other:?}"))),
    }
}

pub const DEFAULT_KERNEL: &str = "gaussian";
pub const DEFAULT_BLUR_SIGMA: f64 = 1.6;

fn classic(a: &ClassicArgs, file: &FileConfig, seed: u64) -> Result<u8> {
    let f = file.degrade.as_ref().and_then(|d| d.classic.clone()).unwrap_or_default();
    let input = required(&a.input, f.input.as_ref(), "degrade.classic.input")?;
    let scale = required(&a.scale, f.scale.as_ref(), "degrade.classic.scale")?;
    let kernel_name = pick(&a.kernel, f.kernel.as_ref(), DEFAULT_KERNEL.to_string());
    let noise = pick(&a.noise, f.noise.as_ref(), 0.0);
    let kernel = parse_kernel(&kernel_name, pick(&a.blur_sigma, f.blur_sigma.as_ref(), DEFAULT_BLUR_SIGMA))?;
    let spec = DegradationSpec::new(scale, kernel, noise, seed).map_err(usage)?;
    let blur_sigma = match kernel {
        BlurKernel::Gaussian { sigma } => Some(sigma),
        BlurKernel::Delta => None,
    };
    let effective = FileConfig {
        seed: Some(seed),
        degrade: Some(DegradeSection {
            classic: Some(ClassicSection { input: Some(input.clone()), scale: Some(scale), kernel: Some(kernel_name), blur_sigma, noise: Some(noise) }),
            video: None,
        }),
        ..Default::default()
    };
    effective.echo(&a.out)?;
    let manifest = build_interpolation_pairs(&input, &spec, &a.out)?;
    manifest.write(a.out.join(MANIFEST_FILE))?;
    info!("{} pairs written, {} inputs skipped", manifest.entries.len(), manifest.skipped.len());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VideoReport<'a> {
    selected: Vec<usize>,
    paired: &'a [VideoPairRecord],
    failed: &'a [PairFailure],
}

fn video(a: &VideoArgs, file: &FileConfig, seed: u64) -> Result<u8> {
    let f = file.degrade.as_ref().and_then(|d| d.video.clone()).unwrap_or_default();
    let hr_frames = required(&a.hr_frames, f.hr_frames.as_ref(), "degrade.video.hr_frames")?;
    let lr_frames = required(&a.lr_frames, f.lr_frames.as_ref(), "degrade.video.lr_frames")?;
    let d = StillSceneParams::default();
    let params = StillSceneParams {
        diff_threshold: pick(&a.diff_threshold, f.diff_threshold.as_ref(), d.diff_threshold),
        window: pick(&a.window, f.window.as_ref(), d.window),
    };
    params.validate().map_err(usage)?;
    let mut align = resolve_align(&a.align, Some(&f.align));
    canonical_rects(&mut align)?;
    let cfg = registration_config(&align, seed)?;
    let effective = FileConfig {
        seed: Some(seed),
        degrade: Some(DegradeSection {
            classic: None,
            video: Some(VideoSection {
                hr_frames: Some(hr_frames.clone()),
                lr_frames: Some(lr_frames.clone()),
                diff_threshold: Some(params.diff_threshold),
                window: Some(params.window),
                align,
            }),
        }),
        ..Default::default()
    };
    effective.echo(&a.out)?;

    let selections = extract_still_pairs(&hr_frames, &lr_frames, &params)?;
    info!("{} still windows found", selections.len());
    let pairing = build_video_pairs(&selections, &cfg, &a.out)?;
    pairing.manifest.write(a.out.join(MANIFEST_FILE))?;
    let report =
        VideoReport { selected: selections.iter().map(|s| s.index).collect(), paired: &pairing.records, failed: &pairing.failures };
    write_json(&report, &a.out.join(VIDEO_REPORT))?;
    if !selections.is_empty() && pairing.manifest.entries.is_empty() {
        let first = &pairing.failures[0];
        warn!("no frame pair could be aligned");
        return Ok(first.stage.map(stage_exit).unwrap_or(crate::EXIT_IO));
    }
    Ok(EXIT_OK)
}

fn evaluate(a: &EvaluateArgs, file: &FileConfig, seed: u64) -> Result<u8> {
    let f = file.evaluate.clone().unwrap_or_default();
    let manifest_path = required(&a.manifest, f.manifest.as_ref(), "evaluate.manifest")?;
    let sr = required(&a.sr, f.sr.as_ref(), "evaluate.sr")?;
    let crop_border = a.crop_border.or(f.crop_border);
    let out_dir = parent_dir(&a.report);
    let effective = FileConfig {
        seed: Some(seed),
        evaluate: Some(EvaluateSection { manifest: Some(manifest_path.clone()), sr: Some(sr.clone()), crop_border }),
        ..Default::default()
    };
    effective.echo(&out_dir)?;
    let manifest = PairManifest::read(&manifest_path)?;
    let report = evaluate_manifest(&manifest, &parent_dir(&manifest_path), &sr, EvalOptions { crop_border });
    report.write(&a.report)?;
    for row in report.rows.iter().filter(|r| r.detail.is_some()) {
        warn!("{}: {}", row.id, row.detail.as_deref().unwrap_or_default());
    }
    if report.is_complete() {
        Ok(EXIT_OK)
    } else {
        warn!("evaluation incomplete: some entries are missing or unreadable");
        Ok(EXIT_EVAL_INCOMPLETE)
    }
}

fn augment(a: &AugmentArgs, file: &FileConfig, seed: u64) -> Result<u8> {
    let f = file.augment.clone().unwrap_or_default();
    let manifest_path = required(&a.manifest, f.manifest.as_ref(), "augment.manifest")?;
    let rotations = pick(&a.rotations, f.rotations.as_ref(), Vec::new());
    let hflip = a.hflip || f.hflip.unwrap_or(false);
    let policy = AugmentPolicy { rotations: rotations.clone(), hflip };
    policy.validate().map_err(usage)?;
    let effective = FileConfig {
        seed: Some(seed),
        augment: Some(AugmentSection { manifest: Some(manifest_path.clone()), rotations: Some(rotations), hflip: Some(hflip) }),
        ..Default::default()
    };
    effective.echo(&a.out)?;
    let manifest = PairManifest::read(&manifest_path)?;
    let out = augment_pairs(&manifest, &parent_dir(&manifest_path), &policy, &a.out)?;
    out.write(a.out.join(MANIFEST_FILE))?;
    info!("{} entries after augmentation", out.entries.len());
    Ok(EXIT_OK)
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
