// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};

use nmr_chain::chain::reference_populations;
use nmr_chain::experiment::{emit_equilibrium_report, write_oracle, write_sweep, ExperimentConfig, ModeName};
use nmr_chain::{Error, Experiment};

#[derive(Parser, Debug)]
#[command(name = "nmr-chain", version, about = "Spin-7/2 NMR emulation of an eight-site excitation chain")]
struct Cli {
    /// JSON experiment configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Coherence decay during pulses.
    #[arg(long, global = true, value_enum)]
    relaxation: Option<Switch>,

    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    tau_max: Option<f64>,

    /// Grid intervals; the sweep has `tau_steps + 1` points.
    #[arg(long, global = true)]
    tau_steps: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pulse sequence over the tau grid, compared with the exact chain.
    Sweep,
    /// Equilibrium spectrum, FID and peak-integral table.
    Equilibrium,
    /// Report the pseudopure crossing time and spread.
    Prepare,
    /// Exact chain populations only.
    Oracle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Ideal,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

fn load_config(cli: &Cli) -> nmr_chain::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = match m {
            ModeArg::Ideal => ModeName::Ideal,
            ModeArg::Full => ModeName::Full,
        };
    }
    if let Some(r) = cli.relaxation {
        cfg.relaxation.enabled = matches!(r, Switch::On);
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if cli.tau_max.is_some() || cli.tau_steps.is_some() {
        cfg.tau_grid = None;
    }
    if let Some(t) = cli.tau_max {
        cfg.tau_max = t;
    }
    if let Some(n) = cli.tau_steps {
        cfg.tau_steps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> nmr_chain::Result<()> {
    let cfg = load_config(cli)?;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Oracle => {
            let table = reference_populations(&cfg.tau_grid())?;
            let path = write_oracle(&table, &out)?;
            info!("wrote {}", path.display());
        }
        Command::Prepare => {
            let exp = Experiment::new(&cfg)?;
            let c = exp.crossing();
            println!("crossing_s,{:.12e}", c.duration_s);
            println!("spread,{:.12e}", c.spread);
            let pops: Vec<String> = exp
                .prepared_state()
                .populations()
                .iter()
                .map(|p| format!("{p:.9}"))
                .collect();
            println!("deviation_populations,{}", pops.join(","));
            let chain: Vec<String> = exp
                .prepared_chain_populations()
                .iter()
                .map(|p| format!("{p:.9}"))
                .collect();
            println!("chain_populations,{}", chain.join(","));
        }
        Command::Equilibrium => {
            let exp = Experiment::new(&cfg)?;
            let report = exp.equilibrium_report()?;
            emit_equilibrium_report(&report, exp.spin_system(), exp.acquisition(), &out)?;
            let ratios: Vec<String> = report.ratios.iter().map(|r| format!("{r:.4}")).collect();
            println!("ratios,{}", ratios.join(":"));
            info!("wrote equilibrium files to {}", out.display());
        }
        Command::Sweep => {
            let exp = Experiment::new(&cfg)?;
            let grid = cfg.tau_grid();
            info!("sweeping {} tau points in {:?} mode", grid.len(), cfg.mode);
            let sweep = exp.run_sweep(&grid)?;
            let path = write_sweep(&sweep, exp.spin_system().dim(), &out)?;
            println!("max_error,{:.6e}", sweep.summary.max_error);
            println!("rms_error,{:.6e}", sweep.summary.rms_error);
            info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            match e {
                Error::Configuration(_) | Error::Json(_) | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
