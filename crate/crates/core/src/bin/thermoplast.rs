use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thermoplast::cli::{execute_bench, execute_run, load_config, BenchKind, RunConfig};
use thermoplast::Result;

#[derive(Parser)]
#[command(name = "thermoplast", version, about = "Thermo-visco-plastic solver with gradient plasticity")]
struct Cli {
    /// worker threads for element assembly (overrides the config)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// keep a snapshot every k steps (overrides the config)
    #[arg(long, global = true)]
    snapshot_every: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write diagnostics, snapshots and a summary
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the scripted studies
    Bench {
        kind: Study,
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a configuration without running it
    Check { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    ShearBand,
    Yosida,
    Refine,
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig> {
    let mut cfg = load_config(path)?;
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(k) = cli.snapshot_every {
        cfg.output.snapshot_every = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main_inner(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config, out } => {
            let cfg = load(cli, config)?;
            let inv = execute_run(&cfg, out)?;
            println!(
                "completed {} steps: cumulative balance {:.3e}, min theta-enthalpy {:.3e}, min det P {:.3e}, invariants {}",
                cfg.steps,
                inv.cumulative_balance,
                inv.min_vartheta,
                inv.min_det_p,
                if inv.pass { "pass" } else { "FAIL" }
            );
            Ok(())
        }
        Command::Bench { kind, config, out } => {
            let cfg = load(cli, config)?;
            let kind = match kind {
                Study::ShearBand => BenchKind::ShearBand,
                Study::Yosida => BenchKind::Yosida,
                Study::Refine => BenchKind::Refine,
            };
            let outcome = execute_bench(kind, &cfg, out.as_deref())?;
            for (k, v) in &outcome.summary {
                println!("{k} = {v}");
            }
            if outcome.pass {
                Ok(())
            } else {
                Err(thermoplast::Error::BenchFailure(format!("{} targets not met", kind.name())))
            }
        }
        Command::Check { config } => {
            let cfg = load(cli, config)?;
            println!(
                "configuration valid: {}x{} mesh, {} steps of dt = {:e}",
                cfg.mesh.nx, cfg.mesh.ny, cfg.steps, cfg.step.dt
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
