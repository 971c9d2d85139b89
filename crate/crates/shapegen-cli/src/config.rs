//! Project configuration: a TOML file supplying defaults that flags and
//! environment variables can override.
//!
//! Precedence, highest first: command-line flags, `SHAPEGEN_*`
//! environment variables (clap reads them when the flag is absent), the
//! project file, built-in defaults. The project file is `--config
//! <path>` / `SHAPEGEN_CONFIG`, falling back to `shapegen.toml` in the
//! working directory when present.
//!
//! ```toml
//! [paths]
//! library = "lib"
//! episode = "demo"
//! output = "generated"
//!
//! [library]          # training configuration (grid, fit, warp)
//! [library.fit]
//! epochs = 8
//!
//! [obsgen]
//! n_points = 8192
//!
//! [cost]
//! t_gen = 20.0
//! ```
//!
//! Every section is optional; omitted fields keep their defaults, so the
//! resolved configuration is always fully explicit.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use shapegen::cost::CostConstants;
use shapegen::library::LibraryConfig;
use shapegen::obsgen::ObsGenConfig;
use shapegen::{Error, Result};

/// Default locations commands fall back to when their positional
/// arguments are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Shape-library directory.
    pub library: Option<PathBuf>,
    /// Demonstration-episode directory.
    pub episode: Option<PathBuf>,
    /// Output directory for generated episodes.
    pub output: Option<PathBuf>,
}

/// The resolved project configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub paths: Paths,
    /// Library training configuration (grid + fit + warp).
    pub library: LibraryConfig,
    /// Observation-generation configuration.
    pub obsgen: ObsGenConfig,
    /// Cost-model constants.
    pub cost: CostConstants,
}

impl ProjectConfig {
    /// Load the project file: `explicit` if given (must exist), else
    /// `./shapegen.toml` when present, else pure defaults.
    pub fn load(explicit: Option<&Path>) -> Result<ProjectConfig> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => {
                let p = PathBuf::from("shapegen.toml");
                p.is_file().then_some(p)
            }
        };
        let Some(path) = path else {
            return Ok(ProjectConfig::default());
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        toml::from_str(&text).map_err(|e| Error::format("config", &path, e.to_string()))
    }
}

/// Resolve a required directory from a positional argument or the
/// project-file fallback, with a field name for the error message.
pub fn require_dir(
    arg: Option<PathBuf>,
    fallback: &Option<PathBuf>,
    what: &str,
) -> Result<PathBuf> {
    arg.or_else(|| fallback.clone()).ok_or_else(|| {
        Error::validation(format!(
            "no {what} directory given (pass it as an argument or set [paths].{what} in the project file)"
        ))
    })
}
