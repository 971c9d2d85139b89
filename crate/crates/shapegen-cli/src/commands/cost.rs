//! `estimate-cost`: closed-form generation-vs-manual time comparison.

use clap::Args;

use shapegen::Result;

use crate::commands::Ctx;
use crate::provenance::RunRecord;

/// Compare generation cost against manual collection.
#[derive(Debug, Args)]
pub struct EstimateCostArgs {
    /// Number of target shapes.
    #[arg(long, default_value_t = 15, env = "SHAPEGEN_N_SHAPE")]
    pub n_shape: u64,
    /// Number of source demonstrations.
    #[arg(long, default_value_t = 5, env = "SHAPEGEN_N_DEMO")]
    pub n_demo: u64,
    /// Seconds to fit one SDF network.
    #[arg(long, env = "SHAPEGEN_T_SDF")]
    pub t_sdf: Option<f64>,
    /// Seconds to train one warp network.
    #[arg(long, env = "SHAPEGEN_T_WRP")]
    pub t_wrp: Option<f64>,
    /// Seconds to scan the manipulated object.
    #[arg(long, env = "SHAPEGEN_T_SCAN")]
    pub t_scan: Option<f64>,
    /// Seconds to teleoperate one demonstration.
    #[arg(long, env = "SHAPEGEN_T_DEMO")]
    pub t_demo: Option<f64>,
    /// Seconds to annotate one demonstration.
    #[arg(long, env = "SHAPEGEN_T_ANN")]
    pub t_ann: Option<f64>,
    /// Seconds to generate one retargeted episode.
    #[arg(long, env = "SHAPEGEN_T_GEN")]
    pub t_gen: Option<f64>,
    /// Manual-baseline seconds to procure one physical object.
    #[arg(long, env = "SHAPEGEN_T_COLLECT_PER_OBJECT")]
    pub t_collect_per_object: Option<f64>,
}

pub fn run(args: &EstimateCostArgs, ctx: &Ctx) -> Result<()> {
    let mut c = ctx.project.cost;
    let overrides = [
        (&mut c.t_sdf, args.t_sdf),
        (&mut c.t_wrp, args.t_wrp),
        (&mut c.t_scan, args.t_scan),
        (&mut c.t_demo, args.t_demo),
        (&mut c.t_ann, args.t_ann),
        (&mut c.t_gen, args.t_gen),
        (&mut c.t_collect_per_object, args.t_collect_per_object),
    ];
    for (slot, value) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    c.validate()?;

    let (n_shape, n_demo) = (args.n_shape, args.n_demo);
    let generation = c.shapegen_cost(n_shape, n_demo);
    let manual = c.manual_cost(n_shape, n_demo);
    println!(
        "constants (s): t_sdf {} t_wrp {} t_scan {} t_demo {} t_ann {} t_gen {} t_collect/object {}",
        c.t_sdf, c.t_wrp, c.t_scan, c.t_demo, c.t_ann, c.t_gen, c.t_collect_per_object
    );
    println!("n_shape {n_shape}, n_demo {n_demo}");
    println!("generation cost: {generation} s");
    println!("manual cost:     {manual} s");
    match c.crossover_n_demo(n_shape) {
        Some(k) => println!("crossover: generation is cheaper from n_demo >= {k} at n_shape = {n_shape}"),
        None => println!("crossover: generation never becomes cheaper at n_shape = {n_shape}"),
    }
    println!("asymptotic cost ratio t_gen/t_demo = {:.6}", c.asymptotic_ratio());

    if let Some(path) = &ctx.run_record {
        let rec = RunRecord::new(
            "estimate-cost",
            &ctx.argv,
            serde_json::json!({ "cost": c, "n_shape": n_shape, "n_demo": n_demo }),
        );
        rec.write(path)?;
    }
    Ok(())
}
