//! `export-ply`: convert an observation point cloud to ASCII PLY.

use std::path::PathBuf;

use clap::Args;

use shapegen::obsgen::{export_ply, load_sgpc};
use shapegen::Result;

use crate::commands::Ctx;
use crate::provenance::{record_path, sibling_record, RunRecord};

/// Convert a binary observation file to ASCII PLY.
#[derive(Debug, Args)]
pub struct ExportPlyArgs {
    /// Observation file (.sgpc).
    pub observation: PathBuf,
    /// Output PLY path.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn run(args: &ExportPlyArgs, ctx: &Ctx) -> Result<()> {
    let points = load_sgpc(&args.observation)?;
    export_ply(&points, &args.output)?;
    println!("exported {} points to {}", points.len(), args.output.display());

    let mut rec = RunRecord::new("export-ply", &ctx.argv, serde_json::json!({}));
    rec.input(&args.observation)?;
    rec.output(&args.output)?;
    rec.write(&record_path(&ctx.run_record, sibling_record(&args.output)))
}
