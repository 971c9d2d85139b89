//! `lib init|add|plug|list`: shape-library curation.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shapegen::geometry::load_mesh;
use shapegen::library::{load_library, save_library, save_plugged, ShapeLibrary};
use shapegen::obsgen::sample_mesh_surface;
use shapegen::{Error, Result};

use crate::commands::Ctx;
use crate::provenance::{record_path, RunRecord};

/// Surface-sample count for the plug residual report.
const RESIDUAL_SAMPLES: usize = 2000;

/// Create and curate shape libraries.
#[derive(Debug, Args)]
pub struct LibArgs {
    #[command(subcommand)]
    pub cmd: LibCmd,
}

#[derive(Debug, Subcommand)]
pub enum LibCmd {
    /// Create a library around a template mesh.
    Init {
        /// Library directory to create.
        dir: PathBuf,
        /// Object category name.
        #[arg(long)]
        category: String,
        /// Template mesh file.
        #[arg(long)]
        template: PathBuf,
        /// Training RNG seed (fit and warp).
        #[arg(long, env = "SHAPEGEN_SEED")]
        seed: Option<u64>,
    },
    /// Add one shape: fit its SDF and train the template→shape warp.
    Add {
        dir: PathBuf,
        /// Shape mesh file; its mesh name becomes the entry id.
        mesh: PathBuf,
    },
    /// Plug a scanned mesh: train the one bridge warp onto the template.
    Plug {
        dir: PathBuf,
        /// Scanned mesh file; its mesh name becomes the scan id.
        scan: PathBuf,
    },
    /// Show the library's template, entries, and plugged scans.
    List { dir: PathBuf },
}

pub fn run(args: &LibArgs, ctx: &Ctx) -> Result<()> {
    match &args.cmd {
        LibCmd::Init { dir, category, template, seed } => init(dir, category, template, *seed, ctx),
        LibCmd::Add { dir, mesh } => add(dir, mesh, ctx),
        LibCmd::Plug { dir, scan } => plug(dir, scan, ctx),
        LibCmd::List { dir } => list(dir),
    }
}

fn init(dir: &Path, category: &str, template: &Path, seed: Option<u64>, ctx: &Ctx) -> Result<()> {
    let mesh = load_mesh(template)?;
    let mut config = ctx.project.library.clone();
    if let Some(s) = seed {
        config.fit.rng_seed = s;
        config.warp.rng_seed = s;
    }
    let lib = ShapeLibrary::init(category, &mesh, &config)?;
    save_library(&lib, dir)?;
    println!(
        "initialized library '{category}' at {} (template '{}', grid {}^3)",
        dir.display(),
        lib.template_id,
        config.grid.resolution
    );

    let mut rec = RunRecord::new("lib-init", &ctx.argv, serde_json::json!({ "library": config }));
    rec.input(template)?;
    rec.output(&dir.join("manifest.json"))?;
    rec.write(&record_path(&ctx.run_record, dir.join("run.json")))
}

fn add(dir: &Path, mesh_path: &Path, ctx: &Ctx) -> Result<()> {
    let mesh = load_mesh(mesh_path)?;
    let mut lib = load_library(dir)?;
    let report = lib.add_shape(&mesh)?;
    save_library(&lib, dir)?;
    println!(
        "added '{}' to library '{}' ({} entries)",
        mesh.name,
        lib.category,
        lib.len()
    );
    println!("  sdf fit: {} steps, holdout MAE {:.6e}", report.fit.steps, report.fit.holdout_mae);
    println!(
        "  warp: {} steps, final losses sdf {:.4e} pw {:.4e} pp {:.4e}",
        report.warp.steps,
        report.warp.losses.l_sdf,
        report.warp.losses.l_pw,
        report.warp.losses.l_pp
    );

    let mut rec =
        RunRecord::new("lib-add", &ctx.argv, serde_json::json!({ "library": lib.config }));
    rec.input(mesh_path)?;
    rec.output(&dir.join("manifest.json"))?;
    rec.write(&record_path(&ctx.run_record, dir.join("run.json")))
}

fn plug(dir: &Path, scan_path: &Path, ctx: &Ctx) -> Result<()> {
    let scan = load_mesh(scan_path)?;
    let lib = load_library(dir)?;
    let plugged = lib.plug(&scan)?;
    save_plugged(&plugged, dir)?;

    // Residual report: how well the bridge lands scan-surface points on
    // the template's zero level set (normalized frames).
    let (normalized, _map) = scan.normalize_to_unit_cube()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x706c_7567); // "plug"
    let samples = sample_mesh_surface(&normalized, RESIDUAL_SAMPLES, &mut rng);
    let mean = samples
        .iter()
        .map(|p| lib.template_sdf.eval(&plugged.bridge.warp_point(p)).abs())
        .sum::<f64>()
        / samples.len().max(1) as f64;
    println!("plugged scan '{}' into library '{}'", plugged.scan_id, lib.category);
    println!(
        "bridge residual: mean |f_template(W(x))| = {mean:.6e} over {} surface samples",
        samples.len()
    );

    let mut rec =
        RunRecord::new("lib-plug", &ctx.argv, serde_json::json!({ "library": lib.config }));
    rec.input(scan_path)?;
    rec.output(&dir.join("plugged").join(&plugged.scan_id).join("plugged.json"))?;
    rec.write(&record_path(&ctx.run_record, dir.join("run.json")))
}

/// Ids of all scans plugged into a library directory.
pub fn plugged_scan_ids(dir: &Path) -> Result<Vec<String>> {
    let plugged_dir = dir.join("plugged");
    let mut ids = Vec::new();
    if plugged_dir.is_dir() {
        let entries = std::fs::read_dir(&plugged_dir).map_err(|e| Error::io(&plugged_dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&plugged_dir, e))?;
            if entry.path().join("plugged.json").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

fn short(sha: &str) -> &str {
    &sha[..sha.len().min(12)]
}

fn list(dir: &Path) -> Result<()> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let m: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::format("library", &manifest_path, format!("bad manifest: {e}")))?;
    let s = |v: &serde_json::Value| v.as_str().unwrap_or("?").to_string();
    println!("library '{}' at {}", s(&m["category"]), dir.display());
    println!(
        "template '{}'  mesh {}  sdf {}",
        s(&m["template_id"]),
        short(&s(&m["template_mesh_sha256"])),
        short(&s(&m["template_sdf_sha256"]))
    );
    let entries = m["entries"].as_array().cloned().unwrap_or_default();
    println!("entries ({}):", entries.len());
    for e in &entries {
        println!(
            "  {}  mesh {}  sdf {}  warp {}",
            s(&e["id"]),
            short(&s(&e["mesh_sha256"])),
            short(&s(&e["sdf_sha256"])),
            short(&s(&e["warp_sha256"]))
        );
    }
    let scans = plugged_scan_ids(dir)?;
    println!("plugged scans ({}):", scans.len());
    for id in &scans {
        let rec_path = dir.join("plugged").join(id).join("plugged.json");
        let text = std::fs::read_to_string(&rec_path).map_err(|e| Error::io(&rec_path, e))?;
        let r: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::format("library", &rec_path, format!("bad plugged record: {e}")))?;
        println!(
            "  {}  mesh {}  bridge {}",
            id,
            short(&s(&r["scan_mesh_sha256"])),
            short(&s(&r["bridge_sha256"]))
        );
    }
    Ok(())
}
