//! Batch harness for the Hamilton-Jacobi laboratory: solve fields, verify
//! the control representation, run rollouts and bridge probes, fit Holder
//! moduli and reverse-Holder gains, and persist machine-readable reports.

mod config;
mod manifest;
mod report;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use hjlab_core::verify::feedback_from_value;
use manifest::{OpResult, RunManifest};
use stages::{params_summary, Pipeline};

#[derive(Parser)]
#[command(name = "hjlab", version, about = "numerical laboratory for superquadratic nonlocal Hamilton-Jacobi equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy)]
enum Stage {
    Solve,
    McValue,
    Rollout,
    Bridge,
    Holder,
    ReverseHolder,
    Suite,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured terminal-value equation and write the field
    Solve(StageArgs),
    /// Monte Carlo representation estimates against the solved field
    #[command(alias = "verify-representation")]
    McValue(StageArgs),
    /// Supersolution monotonicity rollouts and moment bounds
    Rollout(StageArgs),
    /// Bridge cost scalings and the two-sided value sandwich
    Bridge(StageArgs),
    /// Holder modulus fit of the solved field
    Holder(StageArgs),
    /// Weak reverse Holder estimate on rollout control paths
    ReverseHolder(StageArgs),
    /// Full pipeline: solve, verify, rollout, bridge, holder, reverse-holder
    Suite(StageArgs),
    /// Compare saved manifests
    Report(ReportArgs),
}

#[derive(clap::Args)]
struct StageArgs {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the [mc] table
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides HJLAB_OUT; default runs/<config-hash>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump sampled trajectories as CSV
    #[arg(long)]
    dump_paths: bool,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Manifest paths
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
}

fn resolve_out(args: &StageArgs, cfg: &RunConfig, hash: &str) -> PathBuf {
    if let Some(out) = &args.out {
        return out.clone();
    }
    if let Ok(dir) = std::env::var("HJLAB_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    if let Some(dir) = &cfg.output.dir {
        return PathBuf::from(dir);
    }
    PathBuf::from("runs").join(hash)
}

fn run_stage(kind: Stage, args: &StageArgs) -> Result<bool> {
    let (cfg, hash) = RunConfig::from_path(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.mc.seed);
    let out = resolve_out(args, &cfg, &hash);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let pipeline = Pipeline {
        cfg: &cfg,
        config_hash: hash.clone(),
        seed,
        out: out.clone(),
        dump_paths: args.dump_paths,
    };
    let params = cfg.structure_params()?;

    let command_name = match kind {
        Stage::Solve => "solve",
        Stage::McValue => "mc-value",
        Stage::Rollout => "rollout",
        Stage::Bridge => "bridge",
        Stage::Holder => "holder",
        Stage::ReverseHolder => "reverse-holder",
        Stage::Suite => "suite",
    };

    let mut timing = std::collections::BTreeMap::new();
    let started = std::time::Instant::now();
    let mut status = "ok".to_string();
    let results: Vec<OpResult> = match kind {
        Stage::Suite => {
            let (results, stage_timing, failure) = pipeline.suite()?;
            timing = stage_timing;
            if let Some(f) = failure {
                status = f;
            }
            results
        }
        Stage::Solve => pipeline.solve()?.1,
        Stage::Bridge => pipeline.bridge()?,
        Stage::Holder => {
            // the modulus fit reads the configured equation's own solution
            let sol = hjlab_core::solver::solve_terminal(
                &cfg.equation()?,
                &cfg.terminal()?,
                &cfg.solver_config(),
            )?;
            pipeline.holder(&sol)?
        }
        Stage::McValue | Stage::Rollout | Stage::ReverseHolder => {
            // these stages read the solved lower-extremal field
            let eq = hjlab_core::solver::EquationSpec::new(
                hjlab_core::solver::Variant::ExtremalLower,
                params,
                cfg.grid.length,
            )?;
            let sol = hjlab_core::solver::solve_terminal(
                &eq,
                &cfg.terminal()?,
                &cfg.solver_config(),
            )?;
            let table = feedback_from_value(&sol, &params)?;
            match kind {
                Stage::McValue => pipeline.verify_representation(&eq, &sol, &table)?,
                Stage::Rollout => pipeline.rollout(&sol, &table)?,
                Stage::ReverseHolder => pipeline.reverse_holder_stage(&sol, &table, None)?,
                _ => unreachable!(),
            }
        }
    };
    timing.insert("total".to_string(), started.elapsed().as_millis());

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command_name.to_string(),
        config_hash: hash,
        seed,
        params: params_summary(&params),
        status,
        results,
        timing_ms: timing,
    };
    manifest.write_atomic(&out.join("manifest.json"))?;
    for r in &manifest.results {
        let flag = if r.pass { "pass" } else { "FAIL" };
        match (r.margin, r.stderr) {
            (Some(m), Some(s)) => {
                println!("{flag} {} = {:.6} (margin {:.3e}, stderr {:.3e})", r.name, r.value, m, s)
            }
            (Some(m), None) => println!("{flag} {} = {:.6} (margin {:.3e})", r.name, r.value, m),
            _ => println!("{flag} {} = {:.6}", r.name, r.value),
        }
    }
    println!(
        "manifest: {} ({})",
        out.join("manifest.json").display(),
        manifest.status
    );
    Ok(manifest.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => run_stage(Stage::Solve, a),
        Command::McValue(a) => run_stage(Stage::McValue, a),
        Command::Rollout(a) => run_stage(Stage::Rollout, a),
        Command::Bridge(a) => run_stage(Stage::Bridge, a),
        Command::Holder(a) => run_stage(Stage::Holder, a),
        Command::ReverseHolder(a) => run_stage(Stage::ReverseHolder, a),
        Command::Suite(a) => run_stage(Stage::Suite, a),
        Command::Report(a) => (|| {
            let mut manifests = Vec::new();
            for p in &a.manifests {
                manifests.push((p.display().to_string(), RunManifest::read(p)?));
            }
            print!("{}", report::render(&manifests)?);
            Ok(manifests.iter().all(|(_, m)| m.all_pass()))
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
