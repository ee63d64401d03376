// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sapa_cli::{execute, CliError, Config, Scenario};

/// Cavity and double-quantum-dot amplifier simulator.
///
/// Set SAPA_WORKERS to choose the number of worker threads.
#[derive(Parser)]
#[command(name = "sapa", version)]
struct Cli {
    /// TOML configuration; defaults apply to every key left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Pump-off transmission over probe frequency and detuning.
    RabiMap,
    /// Pump-on transmission over probe frequency and detuning.
    GainMap,
    /// Pump-on transmission over beat frequency and detuning.
    TuneMap,
    /// Output tones at the pump and its beat harmonics.
    Tones,
    /// Readout of the second dot with the amplifier on and off.
    Readout,
    /// Gain against probe power and the 1 dB compression point.
    Compress,
    /// Two-stage fit of a transmission map.
    Fit,
    /// Noise chain figures of merit.
    NoiseBudget,
    /// Pump amplitude for the target parametric gain.
    CalibratePump,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::RabiMap => Scenario::RabiMap,
            Command::GainMap => Scenario::GainMap,
            Command::TuneMap => Scenario::TuneMap,
            Command::Tones => Scenario::Tones,
            Command::Readout => Scenario::Readout,
            Command::Compress => Scenario::Compress,
            Command::Fit => Scenario::Fit,
            Command::NoiseBudget => Scenario::NoiseBudget,
            Command::CalibratePump => Scenario::CalibratePump,
        }
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    let text = execute(cli.command.into(), &cfg, cli.seed)?;
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
