//! `shapegen`: fit shape SDFs, curate shape libraries, validate
//! annotations, and generate retargeted demonstration episodes.
//!
//! Commands
//! * `fit-sdf <mesh> -o <net>` — sample a mesh's SDF and fit the field.
//! * `lib init|add|plug|list` — shape-library curation.
//! * `validate-annotation <file>` — schema check + anchor report.
//! * `generate <episode> <library> --targets <ids|all>` — one generated
//!   episode per target shape.
//! * `export-ply <observation> -o <ply>` — observation → ASCII PLY.
//! * `estimate-cost` — generation-vs-manual time comparison.
//! * `make-fixture <dir>` — synthetic test episode.
//!
//! Configuration precedence: flags > `SHAPEGEN_*` environment variables >
//! project file (`--config`, `SHAPEGEN_CONFIG`, or `./shapegen.toml`) >
//! built-in defaults. Exit codes: 0 success, 1 I/O or file-format
//! failure, 2 validation failure (also used by argument parsing), 3
//! numerical failure. Commands that write artifacts also write a
//! `run.json` provenance record.

mod commands;
mod config;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{cost, export, fit, fixture, generate, libcmd, validate, Ctx};
use config::ProjectConfig;
use shapegen::Result;

#[derive(Debug, Parser)]
#[command(name = "shapegen", version, about = "Shape-aware demonstration retargeting")]
struct Cli {
    /// Project configuration file (TOML).
    #[arg(long, global = true, env = "SHAPEGEN_CONFIG")]
    config: Option<PathBuf>,
    /// Write the run-provenance record here instead of the default spot.
    #[arg(long, global = true, env = "SHAPEGEN_RUN_RECORD")]
    run_record: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    FitSdf(fit::FitSdfArgs),
    Lib(libcmd::LibArgs),
    ValidateAnnotation(validate::ValidateAnnotationArgs),
    Generate(generate::GenerateArgs),
    ExportPly(export::ExportPlyArgs),
    EstimateCost(cost::EstimateCostArgs),
    MakeFixture(fixture::MakeFixtureArgs),
}

fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx {
        project: ProjectConfig::load(cli.config.as_deref())?,
        run_record: cli.run_record.clone(),
        argv: std::env::args().collect(),
    };
    match &cli.command {
        Command::FitSdf(args) => fit::run(args, &ctx),
        Command::Lib(args) => libcmd::run(args, &ctx),
        Command::ValidateAnnotation(args) => validate::run(args),
        Command::Generate(args) => generate::run(args, &ctx),
        Command::ExportPly(args) => export::run(args, &ctx),
        Command::EstimateCost(args) => cost::run(args, &ctx),
        Command::MakeFixture(args) => fixture::run(args, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
