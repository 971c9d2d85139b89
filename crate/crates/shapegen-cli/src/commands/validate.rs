//! `validate-annotation`: parse, resolve dittos, and report anchors.

use std::path::PathBuf;

use clap::Args;

use shapegen::annotation::{parse_annotation, resolve_ditto};
use shapegen::Result;

/// Check an annotation file and report its anchors.
#[derive(Debug, Args)]
pub struct ValidateAnnotationArgs {
    /// Annotation JSON file.
    pub file: PathBuf,
}

pub fn run(args: &ValidateAnnotationArgs) -> Result<()> {
    let annotation = parse_annotation(&args.file)?;
    let resolved = resolve_ditto(&annotation)?;
    let total: usize = resolved.objects.values().map(|o| o.functionals.len()).sum();
    println!("OK: {total} anchors across {} object(s)", resolved.objects.len());
    for (name, obj) in &resolved.objects {
        let modes: Vec<&str> = annotation.objects[name]
            .functionals
            .iter()
            .map(|f| f.mode.as_str())
            .collect();
        println!(
            "object '{name}': category '{}', {}{} anchors (modes: {})",
            obj.category,
            if obj.gripped { "gripped, " } else { "" },
            obj.functionals.len(),
            modes.join(", ")
        );
    }
    if !resolved.other_foreground_objects.is_empty() {
        println!(
            "other foreground objects: {}",
            resolved.other_foreground_objects.join(", ")
        );
    }
    Ok(())
}
