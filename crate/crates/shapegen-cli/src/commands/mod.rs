//! Subcommand implementations.

pub mod cost;
pub mod export;
pub mod fit;
pub mod fixture;
pub mod generate;
pub mod libcmd;
pub mod validate;

use std::path::PathBuf;

use crate::config::ProjectConfig;

/// Shared invocation context: the resolved project configuration, an
/// optional run-record override, and the raw argument vector (recorded
/// in provenance).
pub struct Ctx {
    pub project: ProjectConfig,
    pub run_record: Option<PathBuf>,
    pub argv: Vec<String>,
}
