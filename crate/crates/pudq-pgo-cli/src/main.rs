//! Command-line workflows: dataset synthesis, solving, evaluation, and
//! numerical self-checks. Every command writes a manifest next to its
//! outputs so runs can be reproduced exactly.
//!
//! Exit codes: 0 success, 1 I/O or validation failure, 2 usage error,
//! 3 solver hit the iteration cap, 4 self-check failure.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;

use manifest::RunManifest;
use pudq_pgo::bounds::compute_bounds;
use pudq_pgo::check::{run_bound_checks, run_derivative_checks, run_operator_checks, CheckOptions};
use pudq_pgo::covariance::CovFrame;
use pudq_pgo::init::{init_chordal_detailed, init_odometry};
use pudq_pgo::io::{
    load_estimate, load_graph, save_estimate, save_extended_json, save_graph, GraphFormat,
};
use pudq_pgo::manifold::ProductPoint;
use pudq_pgo::metrics::rpe_report;
use pudq_pgo::solver::{solve, HessianMode, SolveStatus, SolverConfig};
use pudq_pgo::synth::{synth_dataset, SynthConfig};

#[derive(Parser)]
#[command(name = "pudq-pgo", version, about = "Planar pose-graph optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a grid trial dataset with anisotropic edge noise.
    Synth(SynthArgs),
    /// Optimize a pose graph with the Riemannian trust-region solver.
    Solve(SolveArgs),
    /// Evaluate an estimate against ground truth with relative pose errors.
    Eval(EvalArgs),
    /// Run derivative, operator, and bound self-checks.
    Check(CheckArgs),
}

#[derive(Args, serde::Serialize)]
struct SynthArgs {
    /// Number of vertices (at least 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Wishart covariance scale.
    #[arg(long)]
    sigma_w: f64,
    /// RNG seed; drawn from entropy and recorded when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    grid_step: f64,
    #[arg(long, default_value_t = 0.03)]
    lc_prob: f64,
    #[arg(long, default_value_t = 2.0)]
    lc_radius: f64,
    #[arg(long, default_value_t = 10)]
    wishart_dof: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write the graph in g2o text form.
    #[arg(long)]
    g2o: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum InfoFrameArg {
    Euclidean,
    Se2,
    Pudq,
}

impl From<InfoFrameArg> for CovFrame {
    fn from(v: InfoFrameArg) -> CovFrame {
        match v {
            InfoFrameArg::Euclidean => CovFrame::Euclidean,
            InfoFrameArg::Se2 => CovFrame::Se2Algebra,
            InfoFrameArg::Pudq => CovFrame::PudqTangent,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum InitArg {
    Chordal,
    Odometry,
    File,
}

#[derive(Args, serde::Serialize)]
struct SolveArgs {
    /// Input graph (.json native or .g2o).
    #[arg(long)]
    input: PathBuf,
    /// Frame of g2o information matrices.
    #[arg(long, value_enum, default_value_t = InfoFrameArg::Euclidean)]
    info_frame: InfoFrameArg,
    /// Initializer.
    #[arg(long, value_enum, default_value_t = InitArg::Chordal)]
    init: InitArg,
    /// Initial estimate file (required with --init file).
    #[arg(long)]
    init_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-2)]
    eps_g: f64,
    #[arg(long, default_value_t = 100.0)]
    delta0: f64,
    #[arg(long, default_value_t = 1e6)]
    delta_max: f64,
    #[arg(long, default_value_t = 1e-2)]
    rho_prime: f64,
    #[arg(long, default_value_t = 0.05)]
    tcg_kappa: f64,
    #[arg(long, default_value_t = 0.25)]
    tcg_theta: f64,
    #[arg(long, default_value_t = 500)]
    max_outer: usize,
    /// Inner iteration cap (default: 50x the tangent dimension).
    #[arg(long)]
    max_inner: Option<usize>,
    /// Use the exact Riemannian Hessian instead of Gauss-Newton.
    #[arg(long)]
    exact_hessian: bool,
    #[arg(long)]
    out_dir: PathBuf,
    /// Suppress per-iteration progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, serde::Serialize)]
struct EvalArgs {
    /// Estimate file (bare estimate or native graph).
    #[arg(long)]
    estimate: PathBuf,
    /// Native dataset file carrying ground truth and the evaluation edges.
    #[arg(long)]
    truth: PathBuf,
    /// Second estimate; reports the percent reduction of --estimate's
    /// errors relative to it.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args, serde::Serialize)]
struct CheckArgs {
    /// Vertex count of the randomly generated check graphs.
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 12)]
    graphs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run the bound validation and print the constants table.
    #[arg(long)]
    bounds: bool,
    /// Region radius for --bounds (default: sqrt(N) + 3).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 100)]
    tangents: usize,
    /// Flip the sign of analytic Jacobian entry `ROW,COL` before checking;
    /// exists so the failure path of the checker itself can be exercised.
    #[arg(long, hide = true, value_name = "ROW,COL")]
    inject_jacobian_fault: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Solve(args) => run_solve(args),
        Command::Eval(args) => run_eval(args),
        Command::Check(args) => run_check(args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn infer_format(path: &Path) -> Result<GraphFormat> {
    Ok(GraphFormat::from_path(path)?)
}

fn run_synth(args: SynthArgs) -> Result<u8> {
    let start = Instant::now();
    let seed = args.seed.unwrap_or_else(|| rand::thread_rng().next_u64());
    let config = SynthConfig {
        n_vertices: args.n as usize,
        grid_step: args.grid_step,
        loop_closure_prob: args.lc_prob,
        loop_closure_radius: args.lc_radius,
        sigma_w: args.sigma_w,
        wishart_dof: args.wishart_dof,
        rng_seed: seed,
    };
    let trial = synth_dataset(&config)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let json_path = args.out_dir.join("dataset.json");
    save_extended_json(
        &trial.graph,
        Some(&trial.ground_truth),
        Some(serde_json::to_value(&config)?),
        &json_path,
    )?;
    let mut outputs = vec![json_path];
    if args.g2o {
        let g2o_path = args.out_dir.join("dataset.g2o");
        save_graph(&trial.graph, None, &g2o_path, GraphFormat::G2oSe2)?;
        outputs.push(g2o_path);
    }

    let mut manifest = RunManifest::new("synth", serde_json::to_value(&config)?);
    manifest.seed = Some(seed);
    manifest.outputs = outputs.clone();
    manifest.timing_ms = start.elapsed().as_millis();
    manifest.metrics = Some(serde_json::json!({
        "vertices": trial.graph.vertex_count(),
        "edges": trial.graph.edge_count(),
    }));
    manifest.write(&args.out_dir.join("synth.manifest.json"))?;
    println!(
        "synthesized {} vertices, {} edges (seed {seed}) into {}",
        trial.graph.vertex_count(),
        trial.graph.edge_count(),
        args.out_dir.display()
    );
    Ok(0)
}

fn run_solve(args: SolveArgs) -> Result<u8> {
    let start = Instant::now();
    let format = infer_format(&args.input)?;
    let loaded = load_graph(&args.input, format, args.info_frame.into())?;
    if loaded.skipped_records > 0 {
        eprintln!("warning: skipped {} unrecognized records", loaded.skipped_records);
    }
    let graph = loaded.graph;

    let config = SolverConfig {
        eps_g: args.eps_g,
        delta0: args.delta0,
        delta_max: args.delta_max,
        rho_prime: args.rho_prime,
        tcg_kappa: args.tcg_kappa,
        tcg_theta: args.tcg_theta,
        max_outer_iters: args.max_outer,
        max_inner_iters: args.max_inner,
        hessian: if args.exact_hessian {
            HessianMode::Exact
        } else {
            HessianMode::GaussNewton
        },
    };

    let x0 = match args.init {
        InitArg::Odometry => init_odometry(&graph)?,
        InitArg::Chordal => {
            let (x0, fell_back) = init_chordal_detailed(&graph)?;
            if fell_back {
                eprintln!("warning: chordal normal equations singular; fell back to odometry");
            }
            x0
        }
        InitArg::File => {
            let path = args
                .init_file
                .as_ref()
                .ok_or_else(|| anyhow!("--init file requires --init-file"))?;
            ProductPoint::new(load_estimate(path)?)
        }
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let quiet = args.quiet;
    let mut progress = |rec: &pudq_pgo::solver::IterationRecord| {
        if !quiet {
            println!(
                "k={} cost={:.6e} grad={:.6e} delta={:.3e} rho={:.3} accepted={}",
                rec.k, rec.cost, rec.grad_norm, rec.delta, rec.rho, rec.accepted
            );
        }
    };
    let result = solve(&graph, &config, x0, Some(&mut progress))?;

    let estimate_path = args.out_dir.join("estimate.json");
    save_estimate(result.estimate.poses(), &estimate_path)?;
    let trace_path = args.out_dir.join("trace.csv");
    write_trace_csv(&trace_path, &result.trace)?;

    let exit: u8 = match result.status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIterations => 3,
    };
    let mut manifest = RunManifest::new("solve", serde_json::to_value(&args)?);
    manifest.inputs = vec![args.input.clone()];
    manifest.outputs = vec![estimate_path, trace_path];
    manifest.timing_ms = start.elapsed().as_millis();
    manifest.exit_status = i32::from(exit);
    manifest.metrics = Some(serde_json::json!({
        "status": result.status,
        "outer_iterations": result.outer_iterations,
        "final_cost": result.final_cost,
        "final_grad_norm": result.final_grad_norm,
    }));
    manifest.write(&args.out_dir.join("solve.manifest.json"))?;
    println!(
        "{}: {} iterations, cost {:.6e}, grad {:.3e}",
        match result.status {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "iteration cap reached",
        },
        result.outer_iterations,
        result.final_cost,
        result.final_grad_norm
    );
    Ok(exit)
}

fn write_trace_csv(path: &Path, trace: &[pudq_pgo::solver::IterationRecord]) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from("k,cost,grad_norm,delta,rho,accepted\n");
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k, r.cost, r.grad_norm, r.delta, r.rho, r.accepted
        )
        .unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<u8> {
    let start = Instant::now();
    let estimate = load_estimate(&args.estimate)?;
    let truth_file = load_graph(
        &args.truth,
        infer_format(&args.truth)?,
        CovFrame::PudqTangent,
    )?;
    let truth = truth_file
        .ground_truth
        .clone()
        .ok_or_else(|| anyhow!("{} carries no ground truth", args.truth.display()))?;
    let edges = truth_file.graph.edge_pairs();
    let report = rpe_report(&estimate, &truth, &edges)
        .with_context(|| "evaluating estimate against ground truth")?;
    println!("rpe_l = {:.6e}", report.rpe_l);
    println!("rpe_e = {:.6e}", report.rpe_e);

    let mut reduction: Option<(f64, f64)> = None;
    if let Some(baseline_path) = &args.baseline {
        let baseline = load_estimate(baseline_path)?;
        let base_report = rpe_report(&baseline, &truth, &edges)?;
        let pct = |ours: f64, other: f64| {
            if other == 0.0 {
                0.0
            } else {
                100.0 * (other - ours) / other
            }
        };
        let red_l = pct(report.rpe_l, base_report.rpe_l);
        let red_e = pct(report.rpe_e, base_report.rpe_e);
        println!("reduction_l = {red_l:.2}%");
        println!("reduction_e = {red_e:.2}%");
        reduction = Some((red_l, red_e));
    }

    if let Some(path) = &args.out_json {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    if let Some(path) = &args.out_csv {
        write_report_csv(path, &report)?;
    }

    let mut manifest = RunManifest::new("eval", serde_json::to_value(&args)?);
    manifest.inputs = vec![args.estimate.clone(), args.truth.clone()];
    manifest.timing_ms = start.elapsed().as_millis();
    manifest.metrics = Some(serde_json::json!({
        "rpe_l": report.rpe_l,
        "rpe_e": report.rpe_e,
        "reduction_l": reduction.map(|r| r.0),
        "reduction_e": reduction.map(|r| r.1),
    }));
    if let Some(dir) = args
        .out_json
        .as_deref()
        .and_then(Path::parent)
        .or_else(|| args.estimate.parent())
    {
        manifest.write(&dir.join("eval.manifest.json"))?;
    }
    Ok(0)
}

fn write_report_csv(path: &Path, report: &pudq_pgo::metrics::RpeReport) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(out, "rpe_l,{}", report.rpe_l).unwrap();
    writeln!(out, "rpe_e,{}", report.rpe_e).unwrap();
    writeln!(out, "from,to,lie,euclidean").unwrap();
    for e in &report.per_edge {
        writeln!(out, "{},{},{},{}", e.from, e.to, e.lie, e.euclidean).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn run_check(args: CheckArgs) -> Result<u8> {
    let fault = match &args.inject_jacobian_fault {
        None => None,
        Some(spec) => {
            let (r, c) = spec
                .split_once(',')
                .ok_or_else(|| anyhow!("fault spec must be ROW,COL"))?;
            Some(pudq_pgo::check::JacobianFault {
                row: r.trim().parse()?,
                col: c.trim().parse()?,
                scale: -1.0,
            })
        }
    };
    let opts = CheckOptions {
        seed: args.seed,
        graphs: args.graphs,
        n: args.n,
        fault,
    };
    let mut report = run_derivative_checks(&opts);
    report.merge(run_operator_checks(&opts));

    if args.bounds {
        let config = SynthConfig::new(args.n.max(2), 1e-2, args.seed);
        let trial = synth_dataset(&config)?;
        let radius = args
            .radius
            .unwrap_or_else(|| (args.n.max(2) as f64).sqrt() + 3.0);
        let constants = compute_bounds(&trial.graph, radius)?;
        println!("bound constants at radius {radius}:");
        println!("{}", serde_json::to_string_pretty(&constants)?);
        report.merge(run_bound_checks(
            &trial.graph,
            radius,
            args.points,
            args.tangents,
            args.seed,
        )?);
    }

    for entry in &report.entries {
        println!(
            "{} {} (observed {:.3e}, tolerance {:.3e})",
            if entry.pass { "PASS" } else { "FAIL" },
            entry.name,
            entry.observed,
            entry.tolerance
        );
    }
    if report.passed() {
        println!("all checks passed");
        Ok(0)
    } else {
        let names: Vec<&str> = report.failures().iter().map(|f| f.name.as_str()).collect();
        eprintln!("failing checks: {}", names.join("; "));
        Ok(4)
    }
}
