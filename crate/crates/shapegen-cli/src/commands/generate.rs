//! `generate`: run the full retargeting pipeline for each target shape.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;

use shapegen::alignment::{load_episode, PlanFlags};
use shapegen::annotation::parse_annotation;
use shapegen::library::{load_library, load_plugged, RefineParams};
use shapegen::obsgen::generate_for_target;
use shapegen::{Error, Result};

use crate::commands::libcmd::plugged_scan_ids;
use crate::commands::Ctx;
use crate::config::require_dir;
use crate::provenance::{record_path, RunRecord};

/// Retarget a demonstration episode onto library shapes.
#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Episode directory (defaults to [paths].episode).
    pub episode: Option<PathBuf>,
    /// Library directory (defaults to [paths].library).
    pub library: Option<PathBuf>,
    /// Target shape ids (comma-separated), or `all` for every entry.
    /// The plugged scan's own id is valid (self-substitution).
    #[arg(long, required = true, value_delimiter = ',')]
    pub targets: Vec<String>,
    /// Annotation file (default: `<episode>/annotation.json`).
    #[arg(long)]
    pub annotation: Option<PathBuf>,
    /// Plugged scan id (default: the library's only plugged scan).
    #[arg(long)]
    pub scan: Option<String>,
    /// Output directory; one subdirectory per target.
    #[arg(short, long, env = "SHAPEGEN_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Skip function-aware alignment (T̃ stays identity: shapes rely on
    /// the shared canonical orientation alone).
    #[arg(long)]
    pub skip_alignment: bool,
    /// Skip gripper action correction (source actions pass through
    /// byte-identically).
    #[arg(long)]
    pub skip_action_correction: bool,
    /// Points per observation.
    #[arg(long, env = "SHAPEGEN_N_POINTS")]
    pub n_points: Option<usize>,
    /// Maximum camera distance in meters.
    #[arg(long, env = "SHAPEGEN_D_MAX")]
    pub d_max: Option<f64>,
    /// Observation-sampling seed.
    #[arg(long, env = "SHAPEGEN_SEED")]
    pub seed: Option<u64>,
}

pub fn run(args: &GenerateArgs, ctx: &Ctx) -> Result<()> {
    let episode_dir = require_dir(args.episode.clone(), &ctx.project.paths.episode, "episode")?;
    let library_dir = require_dir(args.library.clone(), &ctx.project.paths.library, "library")?;
    let out_root = args
        .output
        .clone()
        .or_else(|| ctx.project.paths.output.clone())
        .unwrap_or_else(|| PathBuf::from("generated"));

    let episode = load_episode(&episode_dir)?;
    let annotation_path =
        args.annotation.clone().unwrap_or_else(|| episode_dir.join("annotation.json"));
    let annotation = parse_annotation(&annotation_path)?;
    let lib = load_library(&library_dir)?;
    let scan_id = match &args.scan {
        Some(id) => id.clone(),
        None => {
            let ids = plugged_scan_ids(&library_dir)?;
            match ids.as_slice() {
                [only] => only.clone(),
                [] => {
                    return Err(Error::validation(format!(
                        "library {} has no plugged scan; run `shapegen lib plug` first",
                        library_dir.display()
                    )))
                }
                many => {
                    return Err(Error::validation(format!(
                        "library has {} plugged scans ({}); pick one with --scan",
                        many.len(),
                        many.join(", ")
                    )))
                }
            }
        }
    };
    let plugged = load_plugged(&library_dir, &scan_id)?;

    let mut obs_cfg = ctx.project.obsgen;
    if let Some(n) = args.n_points {
        obs_cfg.n_points = n;
    }
    if let Some(d) = args.d_max {
        obs_cfg.d_max = d;
    }
    if let Some(s) = args.seed {
        obs_cfg.rng_seed = s;
    }
    let flags = PlanFlags {
        skip_alignment: args.skip_alignment,
        skip_action_correction: args.skip_action_correction,
    };

    let targets: Vec<String> = if args.targets.iter().any(|t| t == "all") {
        lib.entries().map(|(id, _)| id.clone()).collect()
    } else {
        args.targets.clone()
    };
    if targets.is_empty() {
        return Err(Error::validation("no targets: the library has no entries"));
    }

    let source_id = episode_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| episode_dir.display().to_string());

    let mut rec = RunRecord::new(
        "generate",
        &ctx.argv,
        serde_json::json!({
            "obsgen": obs_cfg,
            "skip_alignment": flags.skip_alignment,
            "skip_action_correction": flags.skip_action_correction,
            "scan": scan_id,
            "targets": targets,
        }),
    );
    rec.input(&episode_dir.join("episode.json"))?;
    rec.input(&annotation_path)?;
    rec.input(&library_dir.join("manifest.json"))?;
    rec.input(&library_dir.join("plugged").join(&scan_id).join("plugged.json"))?;

    for target in &targets {
        let out_dir = out_root.join(target);
        let start = Instant::now();
        let out = generate_for_target(
            &episode,
            &source_id,
            &annotation,
            &lib,
            &plugged,
            target,
            &flags,
            &RefineParams::default(),
            &obs_cfg,
            &out_dir,
        )?;
        let secs = start.elapsed().as_secs_f64();
        println!(
            "target '{target}': {} frames in {:.2} s ({:.1} frames/s) -> {}",
            out.manifest.length,
            secs,
            out.manifest.length as f64 / secs.max(1e-9),
            out_dir.display()
        );
        rec.output(&out_dir.join("generated.json"))?;
        rec.output(&out_dir.join(format!("plan_{target}.json")))?;
    }

    rec.write(&record_path(&ctx.run_record, out_root.join("run.json")))
}
