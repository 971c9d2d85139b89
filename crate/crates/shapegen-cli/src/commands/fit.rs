//! `fit-sdf`: sample a mesh's ground-truth SDF and fit the neural field.

use std::path::PathBuf;

use clap::Args;

use shapegen::geometry::{load_mesh, sample_training_grid, GridSpec};
use shapegen::neural::fit_sdf;
use shapegen::Result;

use crate::commands::Ctx;
use crate::provenance::{record_path, sibling_record, RunRecord};

/// Fit a signed-distance field to a mesh and save the checkpoint.
#[derive(Debug, Args)]
pub struct FitSdfArgs {
    /// Input mesh (OBJ or PLY).
    pub mesh: PathBuf,
    /// Output network checkpoint (.sgnet).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Training-grid resolution per axis.
    #[arg(long, env = "SHAPEGEN_GRID")]
    pub grid: Option<usize>,
    /// Training RNG seed.
    #[arg(long, env = "SHAPEGEN_SEED")]
    pub seed: Option<u64>,
}

pub fn run(args: &FitSdfArgs, ctx: &Ctx) -> Result<()> {
    let mesh = load_mesh(&args.mesh)?;
    let mut grid = ctx.project.library.grid;
    if let Some(r) = args.grid {
        grid = GridSpec::with_resolution(r);
    }
    let mut fit_cfg = ctx.project.library.fit.clone();
    if let Some(s) = args.seed {
        fit_cfg.rng_seed = s;
    }
    println!(
        "fit-sdf: mesh '{}' ({} vertices, {} faces), grid {}^3, seed {}",
        mesh.name,
        mesh.vertices().len(),
        mesh.faces().len(),
        grid.resolution,
        fit_cfg.rng_seed
    );

    let (normalized, _map) = mesh.normalize_to_unit_cube()?;
    let samples = sample_training_grid(&normalized, &grid)?;
    println!("sampled {} narrow-band points", samples.len());
    let (net, report) = fit_sdf(&samples, &fit_cfg)?;
    net.save(&args.output)?;
    println!("steps: {}", report.steps);
    println!("final training loss: {:.6e}", report.final_loss);
    println!("holdout MAE: {:.6e}", report.holdout_mae);
    println!("wrote {}", args.output.display());

    let mut rec = RunRecord::new(
        "fit-sdf",
        &ctx.argv,
        serde_json::json!({ "grid": grid, "fit": fit_cfg }),
    );
    rec.input(&args.mesh)?;
    rec.output(&args.output)?;
    rec.write(&record_path(&ctx.run_record, sibling_record(&args.output)))
}
