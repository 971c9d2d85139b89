//! End-to-end tests that drive the compiled `shapegen` binary.
//!
//! A shared fixture (built once) holds a small synthetic episode, a
//! fast-training project config, and a library curated entirely through
//! the CLI: `lib init` + `lib add` + `lib plug`. Individual tests then
//! exercise each subcommand against it, checking stdout, exit codes,
//! on-disk artifacts, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use once_cell::sync::Lazy;
use tempfile::TempDir;

/// Environment variables the CLI reads; cleared on every invocation so
/// the ambient environment cannot leak into tests.
const CLI_ENV: &[&str] = &[
    "SHAPEGEN_CONFIG",
    "SHAPEGEN_RUN_RECORD",
    "SHAPEGEN_GRID",
    "SHAPEGEN_SEED",
    "SHAPEGEN_OUTPUT",
    "SHAPEGEN_N_POINTS",
    "SHAPEGEN_D_MAX",
    "SHAPEGEN_N_SHAPE",
    "SHAPEGEN_N_DEMO",
    "SHAPEGEN_T_SDF",
    "SHAPEGEN_T_WRP",
    "SHAPEGEN_T_SCAN",
    "SHAPEGEN_T_DEMO",
    "SHAPEGEN_T_ANN",
    "SHAPEGEN_T_GEN",
    "SHAPEGEN_T_COLLECT_PER_OBJECT",
];

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shapegen"));
    for var in CLI_ENV {
        cmd.env_remove(var);
    }
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to spawn shapegen binary")
}

/// Run and require success, returning stdout.
fn run_ok(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(
        out.status.success(),
        "command failed (status {:?})\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8(out.stdout).expect("stdout was not UTF-8")
}

/// Run and require a specific failure exit code, returning stderr.
fn run_err(cmd: &mut Command, expect_code: i32) -> String {
    let out = run(cmd);
    assert_eq!(
        out.status.code(),
        Some(expect_code),
        "expected exit code {expect_code}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8(out.stderr).expect("stderr was not UTF-8")
}

const FAST_TOML: &str = r#"
[library.grid]
resolution = 16
cube_min = [-0.05, -0.05, -0.05]
cube_max = [1.05, 1.05, 1.05]
cutoff = 0.2

[library.fit]
epochs = 2
batch_size = 512

[library.warp]
epochs = 2
batch_size = 512
"#;

struct Fixture {
    /// Keeps the tempdir alive for the whole test run.
    _dir: TempDir,
    root: PathBuf,
    episode: PathBuf,
    library: PathBuf,
    config: PathBuf,
}

/// Episode + config + CLI-curated library, built once and shared.
static FIXTURE: Lazy<Fixture> = Lazy::new(|| {
    let dir = TempDir::new().expect("tempdir");
    let root = dir.path().to_path_buf();

    let episode = root.join("ep");
    run_ok(bin().args([
        "make-fixture",
        episode.to_str().unwrap(),
        "--frames",
        "6",
        "--width",
        "64",
        "--height",
        "48",
    ]));

    let config = root.join("fast.toml");
    std::fs::write(&config, FAST_TOML).expect("write config");

    let scan_ply = episode.join("scan.ply");
    let twin_ply = root.join("twin.ply");
    std::fs::copy(&scan_ply, &twin_ply).expect("copy mesh");

    let library = root.join("lib");
    run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "lib",
        "init",
        library.to_str().unwrap(),
        "--category",
        "ball",
        "--template",
        scan_ply.to_str().unwrap(),
        "--seed",
        "7",
    ]));
    run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "lib",
        "add",
        library.to_str().unwrap(),
        twin_ply.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "--config",
        config.to_str().unwrap(),
        "lib",
        "plug",
        library.to_str().unwrap(),
        scan_ply.to_str().unwrap(),
    ]));

    Fixture { _dir: dir, root, episode, library, config }
});

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("fixture paths are UTF-8")
}

#[test]
fn fit_sdf_writes_a_loadable_checkpoint_and_run_record() {
    let fx = &*FIXTURE;
    let out_net = fx.root.join("fit_test.sgnet");
    let stdout = run_ok(bin().args([
        "--config",
        path_arg(&fx.config),
        "fit-sdf",
        path_arg(&fx.episode.join("scan.ply")),
        "-o",
        path_arg(&out_net),
        "--grid",
        "12",
        "--seed",
        "3",
    ]));
    assert!(stdout.contains("grid 12^3"), "header should echo the grid override:\n{stdout}");
    assert!(stdout.contains("holdout MAE"), "missing MAE report:\n{stdout}");

    let net = shapegen::neural::load_net(&out_net).expect("checkpoint loads");
    let sdf = net.into_sdf().expect("checkpoint is an SDF net");
    let v = sdf.eval(&nalgebra::Point3::new(0.5, 0.5, 0.5));
    assert!(v.is_finite(), "loaded net evaluates to {v}");

    let record: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(fx.root.join("fit_test.sgnet.run.json")).expect("run record"),
    )
    .expect("run record parses");
    assert_eq!(record["command"], "fit-sdf");
    assert!(record["outputs"].as_object().unwrap().len() == 1, "one output artifact");
}

#[test]
fn fit_sdf_missing_mesh_exits_with_io_code() {
    let fx = &*FIXTURE;
    let stderr = run_err(
        bin().args(["fit-sdf", path_arg(&fx.root.join("nope.ply")), "-o", "/dev/null"]),
        1,
    );
    assert!(stderr.contains("error:"), "stderr should explain: {stderr}");
}

#[test]
fn lib_list_reports_template_entries_and_plugged_scans() {
    let fx = &*FIXTURE;
    let stdout = run_ok(bin().args(["lib", "list", path_arg(&fx.library)]));
    assert!(stdout.contains("library 'ball'"), "{stdout}");
    assert!(stdout.contains("template 'scan'"), "{stdout}");
    assert!(stdout.contains("entries (1):"), "{stdout}");
    assert!(stdout.contains("twin"), "{stdout}");
    assert!(stdout.contains("plugged scans (1):"), "{stdout}");
    // Every artifact line carries an abbreviated content hash.
    let hash_lines = stdout.lines().filter(|l| l.contains("mesh ")).count();
    assert_eq!(hash_lines, 3, "template, entry, and plugged lines show hashes:\n{stdout}");
}

#[test]
fn lib_add_duplicate_id_exits_with_validation_code() {
    let fx = &*FIXTURE;
    let stderr = run_err(
        bin().args([
            "--config",
            path_arg(&fx.config),
            "lib",
            "add",
            path_arg(&fx.library),
            path_arg(&fx.root.join("twin.ply")),
        ]),
        2,
    );
    assert!(stderr.contains("already exists"), "stderr should name the clash: {stderr}");
}

#[test]
fn lib_list_missing_directory_exits_with_io_code() {
    let fx = &*FIXTURE;
    run_err(bin().args(["lib", "list", path_arg(&fx.root.join("no_such_lib"))]), 1);
}

#[test]
fn validate_annotation_reports_anchor_counts_and_modes() {
    let fx = &*FIXTURE;
    let stdout =
        run_ok(bin().args(["validate-annotation", path_arg(&fx.episode.join("annotation.json"))]));
    assert!(stdout.contains("OK: 3 anchors across 1 object(s)"), "{stdout}");
    assert!(stdout.contains("modes: simple, ditto, simple"), "{stdout}");
    assert!(stdout.contains("other foreground objects: tree"), "{stdout}");
}

#[test]
fn validate_annotation_rejects_leading_ditto() {
    let fx = &*FIXTURE;
    let bad = fx.root.join("bad_annotation.json");
    std::fs::write(
        &bad,
        r#"{"objects": {"mug_a": {"category": "mug", "functionals": [
            {"tstamp": 0, "keypoints": "ditto"}
        ], "gripped": false, "gripper_keypoint": []}}, "other_foreground_objects": []}"#,
    )
    .unwrap();
    let stderr = run_err(bin().args(["validate-annotation", path_arg(&bad)]), 2);
    assert!(stderr.contains("ditto"), "stderr should blame the ditto: {stderr}");
}

#[test]
fn generate_writes_plans_observations_and_run_record() {
    let fx = &*FIXTURE;
    let out = fx.root.join("gen_main");
    let stdout = run_ok(bin().args([
        "generate",
        path_arg(&fx.episode),
        path_arg(&fx.library),
        "--targets",
        "scan,twin",
        "-o",
        path_arg(&out),
        "--n-points",
        "256",
    ]));
    assert!(stdout.contains("target 'scan': 6 frames"), "{stdout}");
    assert!(stdout.contains("target 'twin': 6 frames"), "{stdout}");

    for target in ["scan", "twin"] {
        let dir = out.join(target);
        assert!(dir.join(format!("plan_{target}.json")).is_file(), "plan for {target}");
        assert!(dir.join("generated.json").is_file(), "manifest for {target}");
        for t in 0..6 {
            let frame = dir.join("obs").join(format!("frame_{t:04}.sgpc"));
            let points = shapegen::obsgen::load_sgpc(&frame).expect("observation loads");
            assert_eq!(points.len(), 256, "frame {t} of {target} has the requested count");
        }
    }

    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["command"], "generate");
    let inputs = record["inputs"].as_object().unwrap();
    assert!(
        inputs.keys().any(|k| k.ends_with("episode.json")),
        "episode hash recorded: {inputs:?}"
    );
    let outputs = record["outputs"].as_object().unwrap();
    assert!(
        outputs.keys().any(|k| k.ends_with("plan_scan.json")),
        "plan hash recorded: {outputs:?}"
    );
}

#[test]
fn generate_twice_is_byte_identical() {
    let fx = &*FIXTURE;
    let out_a = fx.root.join("gen_rep_a");
    let out_b = fx.root.join("gen_rep_b");
    for out in [&out_a, &out_b] {
        run_ok(bin().args([
            "generate",
            path_arg(&fx.episode),
            path_arg(&fx.library),
            "--targets",
            "scan",
            "-o",
            path_arg(out),
            "--n-points",
            "128",
        ]));
    }
    for rel in
        ["scan/plan_scan.json", "scan/generated.json", "scan/obs/frame_0000.sgpc", "scan/obs/frame_0005.sgpc"]
    {
        let a = std::fs::read(out_a.join(rel)).unwrap();
        let b = std::fs::read(out_b.join(rel)).unwrap();
        assert_eq!(a, b, "{rel} differs between identical runs");
    }
}

#[test]
fn generate_targets_all_means_library_entries_only() {
    let fx = &*FIXTURE;
    let out = fx.root.join("gen_all");
    run_ok(bin().args([
        "generate",
        path_arg(&fx.episode),
        path_arg(&fx.library),
        "--targets",
        "all",
        "-o",
        path_arg(&out),
        "--n-points",
        "64",
    ]));
    let mut dirs: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|name| out.join(name).is_dir())
        .collect();
    dirs.sort();
    assert_eq!(dirs, ["twin"], "'all' expands to entry ids, not template or scan");
}

#[test]
fn generate_unknown_target_exits_with_validation_code() {
    let fx = &*FIXTURE;
    let stderr = run_err(
        bin().args([
            "generate",
            path_arg(&fx.episode),
            path_arg(&fx.library),
            "--targets",
            "flying_saucer",
            "-o",
            path_arg(&fx.root.join("gen_unknown")),
        ]),
        2,
    );
    assert!(stderr.contains("flying_saucer"), "stderr should name the target: {stderr}");
}

#[test]
fn generate_skip_flags_change_the_plan() {
    let fx = &*FIXTURE;
    let plain = fx.root.join("gen_plain");
    let skipped = fx.root.join("gen_skip");
    run_ok(bin().args([
        "generate",
        path_arg(&fx.episode),
        path_arg(&fx.library),
        "--targets",
        "twin",
        "-o",
        path_arg(&plain),
        "--n-points",
        "64",
    ]));
    run_ok(bin().args([
        "generate",
        path_arg(&fx.episode),
        path_arg(&fx.library),
        "--targets",
        "twin",
        "-o",
        path_arg(&skipped),
        "--n-points",
        "64",
        "--skip-alignment",
        "--skip-action-correction",
    ]));
    let read = |root: &Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(root.join("twin/plan_twin.json")).unwrap())
            .unwrap()
    };
    let a = read(&plain);
    let b = read(&skipped);
    assert_ne!(a["alignment"], b["alignment"], "skip-alignment should alter the plan");
    assert_ne!(a["actions"], b["actions"], "skip-action-correction should alter the actions");
    // With alignment skipped every per-frame transform is exactly the identity
    // and no camera-frame correction is recorded.
    let identity: Vec<f64> =
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    for m in b["alignment"].as_array().unwrap() {
        let flat: Vec<f64> =
            m.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(flat, identity, "skipped alignment is bit-exact identity");
    }
    assert!(b["camera_alignment"].is_null(), "no camera correction when alignment is skipped");
}

#[test]
fn export_ply_writes_ascii_with_matching_count() {
    let fx = &*FIXTURE;
    let gen = fx.root.join("gen_export");
    run_ok(bin().args([
        "generate",
        path_arg(&fx.episode),
        path_arg(&fx.library),
        "--targets",
        "scan",
        "-o",
        path_arg(&gen),
        "--n-points",
        "96",
    ]));
    let ply = fx.root.join("frame0.ply");
    let stdout = run_ok(bin().args([
        "export-ply",
        path_arg(&gen.join("scan/obs/frame_0000.sgpc")),
        "-o",
        path_arg(&ply),
    ]));
    assert!(stdout.contains("exported 96 points"), "{stdout}");
    let text = std::fs::read_to_string(&ply).unwrap();
    assert!(text.starts_with("ply\nformat ascii 1.0\n"), "ASCII PLY header");
    assert!(text.contains("element vertex 96\n"), "vertex count in header");
    let data_lines = text.lines().skip_while(|l| *l != "end_header").skip(1).count();
    assert_eq!(data_lines, 96, "one line per point");
}

#[test]
fn estimate_cost_prints_reference_numbers() {
    let stdout = run_ok(bin().args(["estimate-cost"]));
    assert!(stdout.contains("generation cost: 5355 s"), "{stdout}");
    assert!(stdout.contains("manual cost:     4500 s"), "{stdout}");
    assert!(stdout.contains("n_demo >= 7"), "{stdout}");
    assert!(stdout.contains("ratio t_gen/t_demo = 0.333333"), "{stdout}");
}

#[test]
fn estimate_cost_flag_overrides_change_the_ratio() {
    let stdout = run_ok(bin().args(["estimate-cost", "--t-gen", "60"]));
    assert!(stdout.contains("ratio t_gen/t_demo = 1.000000"), "{stdout}");
}

#[test]
fn config_precedence_is_flag_then_env_then_file() {
    let fx = &*FIXTURE;
    let prec = fx.root.join("prec.toml");
    std::fs::write(
        &prec,
        FAST_TOML.replace("resolution = 16", "resolution = 14"),
    )
    .unwrap();
    let mesh = fx.episode.join("scan.ply");
    let net = fx.root.join("prec.sgnet");

    // File only.
    let stdout = run_ok(bin().args([
        "--config",
        path_arg(&prec),
        "fit-sdf",
        path_arg(&mesh),
        "-o",
        path_arg(&net),
    ]));
    assert!(stdout.contains("grid 14^3"), "file value used:\n{stdout}");

    // Environment beats the file.
    let stdout = run_ok(
        bin()
            .env("SHAPEGEN_GRID", "13")
            .args(["--config", path_arg(&prec), "fit-sdf", path_arg(&mesh), "-o", path_arg(&net)]),
    );
    assert!(stdout.contains("grid 13^3"), "env beats file:\n{stdout}");

    // Flag beats both.
    let stdout = run_ok(bin().env("SHAPEGEN_GRID", "13").args([
        "--config",
        path_arg(&prec),
        "fit-sdf",
        path_arg(&mesh),
        "-o",
        path_arg(&net),
        "--grid",
        "12",
    ]));
    assert!(stdout.contains("grid 12^3"), "flag beats env and file:\n{stdout}");
}

#[test]
fn config_file_is_discovered_from_working_directory() {
    let fx = &*FIXTURE;
    let cwd = fx.root.join("proj");
    std::fs::create_dir_all(&cwd).unwrap();
    std::fs::write(
        cwd.join("shapegen.toml"),
        FAST_TOML.replace("resolution = 16", "resolution = 11"),
    )
    .unwrap();
    let stdout = run_ok(bin().current_dir(&cwd).args([
        "fit-sdf",
        path_arg(&fx.episode.join("scan.ply")),
        "-o",
        path_arg(&fx.root.join("cwd.sgnet")),
    ]));
    assert!(stdout.contains("grid 11^3"), "./shapegen.toml should be picked up:\n{stdout}");
}

#[test]
fn run_record_is_byte_reproducible() {
    let fx = &*FIXTURE;
    let rec = fx.root.join("cost.run.json");
    run_ok(bin().args(["--run-record", path_arg(&rec), "estimate-cost"]));
    let first = std::fs::read(&rec).unwrap();
    run_ok(bin().args(["--run-record", path_arg(&rec), "estimate-cost"]));
    let second = std::fs::read(&rec).unwrap();
    assert_eq!(first, second, "identical invocations should write identical records");
    let text = String::from_utf8(first).unwrap();
    assert!(!text.to_lowercase().contains("time"), "records carry no timestamps: {text}");
}

#[test]
fn malformed_config_file_exits_with_format_code() {
    let fx = &*FIXTURE;
    let broken = fx.root.join("broken.toml");
    std::fs::write(&broken, "[library]\ngrid = 16\n").unwrap();
    let stderr = run_err(
        bin().args(["--config", path_arg(&broken), "estimate-cost"]),
        1,
    );
    assert!(stderr.contains("config"), "stderr should blame the config file: {stderr}");
}

#[test]
fn missing_required_arguments_use_the_usage_exit_code() {
    let fx = &*FIXTURE;
    // clap reports usage errors with exit code 2, matching validation.
    let out = run(bin().args(["generate", path_arg(&fx.episode), path_arg(&fx.library)]));
    assert_eq!(out.status.code(), Some(2), "missing --targets is a usage error");
}
