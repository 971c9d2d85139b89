//! `make-fixture`: render a synthetic demonstration episode.
//!
//! Development utility: produces a complete, loadable episode directory
//! (depth/mask PNGs, poses, actions, calibration, scan mesh, annotation)
//! so the whole pipeline can be exercised without capture hardware.

use std::path::PathBuf;

use clap::Args;

use shapegen::alignment::CameraIntrinsics;
use shapegen::synth::{write_fixture_episode, FixtureSpec};
use shapegen::Result;

use crate::commands::Ctx;
use crate::provenance::{record_path, RunRecord};

/// Render a synthetic demonstration episode for testing.
#[derive(Debug, Args)]
pub struct MakeFixtureArgs {
    /// Episode directory to create.
    pub dir: PathBuf,
    /// Frame count.
    #[arg(long, default_value_t = 50)]
    pub frames: usize,
    /// Image width in pixels.
    #[arg(long, default_value_t = 160)]
    pub width: usize,
    /// Image height in pixels.
    #[arg(long, default_value_t = 120)]
    pub height: usize,
}

pub fn run(args: &MakeFixtureArgs, ctx: &Ctx) -> Result<()> {
    let base = FixtureSpec::default();
    // Scale the camera with the requested image size so the scene stays
    // framed the same way.
    let scale = args.width as f64 / base.width as f64;
    let spec = FixtureSpec {
        length: args.frames,
        width: args.width,
        height: args.height,
        intrinsics: CameraIntrinsics {
            fx: base.intrinsics.fx * scale,
            fy: base.intrinsics.fy * scale,
            cx: args.width as f64 / 2.0,
            cy: args.height as f64 / 2.0,
        },
        ..base
    };
    let fixture = write_fixture_episode(&args.dir, &spec)?;
    println!(
        "wrote fixture episode: {} frames at {}x{} under {}",
        fixture.episode.length,
        spec.width,
        spec.height,
        args.dir.display()
    );
    println!("scan mesh: {}", fixture.scan_path.display());
    println!("annotation: {}", fixture.annotation_path.display());

    let mut rec = RunRecord::new(
        "make-fixture",
        &ctx.argv,
        serde_json::json!({
            "frames": args.frames, "width": args.width, "height": args.height,
        }),
    );
    rec.output(&args.dir.join("episode.json"))?;
    rec.output(&fixture.annotation_path)?;
    rec.write(&record_path(&ctx.run_record, args.dir.join("run.json")))
}
