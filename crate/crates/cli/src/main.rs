mod commands;
mod config;
mod output;

use anyhow::Context;
use clap::{Parser, Subcommand};
use commands::Failure;
use config::RunConfig;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use subshock::par::Exec;
use subshock::WaveProblem;

#[derive(Parser)]
#[command(name = "subshock-lab", version, about = "Sub-shock fronts of the viscous Hamer-type system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Debug)]
enum Command {
    /// Fast-Jacobian spectra at the end states
    Spectrum(Args),
    /// Inviscid profile with its sub-shock
    Singular(Args),
    /// Viscous profile at one epsilon
    Hetero(Args),
    /// Continuation along a descending epsilon list
    Sweep(Args),
    /// Small-shock analysis at epsilon = 1
    Bifurcate(Args),
    /// PDE evolution started from a viscous profile
    Pde(Args),
}

#[derive(clap::Args, Clone, Debug)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every kernel on the calling thread
    #[arg(long)]
    sequential: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Singular(_) => "singular",
            Command::Hetero(_) => "hetero",
            Command::Sweep(_) => "sweep",
            Command::Bifurcate(_) => "bifurcate",
            Command::Pde(_) => "pde",
        }
    }

    fn args(&self) -> &Args {
        match self {
            Command::Spectrum(a)
            | Command::Singular(a)
            | Command::Hetero(a)
            | Command::Sweep(a)
            | Command::Bifurcate(a)
            | Command::Pde(a) => a,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SUBSHOCK_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<ExitCode> {
    let args = cmd.args();
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid configuration: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("subshock-out"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut report = json!({ "subcommand": cmd.name(), "config": cfg });
    // Reversed jumps still get their flags reported.
    if let Ok(p) = WaveProblem::new(cfg.model, cfg.end_states.u_minus, cfg.end_states.u_plus) {
        report["admissibility"] = commands::admissibility(&p);
    }
    if let Err(e) = cfg.validate() {
        eprintln!("invalid configuration: {e}");
        report["status"] = json!("invalid");
        report["error"] = json!(e.to_string());
        output::write_json(&out.join("report.json"), &report)?;
        return Ok(ExitCode::from(2));
    }
    let exec = if args.sequential { Exec::Sequential } else { Exec::default() };
    let problem = cfg.problem().expect("validated above");
    log::info!("{} on u_minus = {}, u_plus = {}", cmd.name(), problem.u_minus, problem.u_plus);
    let result = match &cmd {
        Command::Spectrum(_) => commands::spectrum(&cfg, &problem, &out),
        Command::Singular(_) => commands::singular(&problem, &out, exec),
        Command::Hetero(_) => commands::hetero(&cfg, &problem, &out, exec),
        Command::Sweep(_) => commands::sweep(&cfg, &problem, &out, exec),
        Command::Bifurcate(_) => commands::bifurcate(&cfg, &problem, &out, exec),
        Command::Pde(_) => commands::pde(&cfg, &problem, &out, exec),
    };
    let code = match result {
        Ok(v) => {
            report["status"] = json!("ok");
            report["result"] = v;
            0
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("invalid configuration: {msg}");
            report["status"] = json!("invalid");
            report["error"] = json!(msg);
            2
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            report["status"] = json!("failed");
            report["error"] = json!(msg);
            3
        }
        Err(Failure::Io(e)) => return Err(e).context("writing output"),
    };
    output::write_json(&out.join("report.json"), &report)?;
    println!("{}", out.join("report.json").display());
    Ok(ExitCode::from(code))
}
