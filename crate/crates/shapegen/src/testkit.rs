//! Shared fixtures for the unit-test modules.
//!
//! Training even a small shape library costs tens of seconds, so the
//! behavioral tests in `library` and `alignment` share one mid-quality
//! library built lazily on first use. Structural tests (errors,
//! persistence, shapes of outputs) use the tiny config instead, where
//! network quality is irrelevant.

use crate::geometry::primitives::icosphere;
use crate::geometry::{GridSpec, TriangleMesh};
use crate::library::{LibraryConfig, PluggedLibrary, ShapeLibrary};
use crate::neural::TrainConfig;
use nalgebra::Point3;
use once_cell::sync::Lazy;

/// A small sphere in a plausible tabletop-object metric scale.
pub(crate) fn sphere(name: &str) -> TriangleMesh {
    icosphere(Point3::new(0.0, 0.0, 0.0), 0.12, 2, name)
}

/// Mid-quality config: good enough that warp drift and keypoint
/// refinement are well inside the behavioral-test tolerances, cheap
/// enough to build once. Full-quality runs live in the acceptance suite.
pub(crate) fn mid_config() -> LibraryConfig {
    LibraryConfig {
        grid: GridSpec::with_resolution(32),
        fit: TrainConfig {
            batch_size: 1024,
            epochs: 12,
            learning_rate: 1e-2,
            lr_decay_every: 200,
            ..Default::default()
        },
        warp: TrainConfig {
            batch_size: 1024,
            epochs: 12,
            learning_rate: 3e-3,
            ..Default::default()
        },
    }
}

/// Tiny config for tests that only check structure, errors, or
/// persistence.
pub(crate) fn tiny_config() -> LibraryConfig {
    LibraryConfig {
        grid: GridSpec::with_resolution(16),
        fit: TrainConfig {
            batch_size: 512,
            epochs: 2,
            learning_rate: 1e-2,
            lr_decay_every: 200,
            ..Default::default()
        },
        warp: TrainConfig {
            batch_size: 512,
            epochs: 2,
            learning_rate: 3e-3,
            ..Default::default()
        },
    }
}

/// Shared library (template "tmpl" + one entry "twin", category "ball")
/// with a plugged scan, built once at mid quality.
pub(crate) static MID: Lazy<(ShapeLibrary, PluggedLibrary)> = Lazy::new(|| {
    let mut lib = ShapeLibrary::init("ball", &sphere("tmpl"), &mid_config()).unwrap();
    lib.add_shape(&sphere("twin")).unwrap();
    let plugged = lib.plug(&sphere("scan")).unwrap();
    (lib, plugged)
});
