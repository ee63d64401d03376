// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario runner behind the `sapa` binary.
//!
//! Each scenario reads a [`config::Config`], runs one protocol from
//! `sapa_core` and renders CSV preceded by `# key: value` header lines. The
//! header carries the tool version, the seed, a SHA-256 hash of the resolved
//! configuration and the configuration itself, so
//! [`output::Header::config`] recovers the exact inputs of a run.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::Config;
pub use error::CliError;

/// One `sapa` subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    RabiMap,
    GainMap,
    TuneMap,
    Tones,
    Readout,
    Compress,
    Fit,
    NoiseBudget,
    CalibratePump,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::RabiMap,
        Scenario::GainMap,
        Scenario::TuneMap,
        Scenario::Tones,
        Scenario::Readout,
        Scenario::Compress,
        Scenario::Fit,
        Scenario::NoiseBudget,
        Scenario::CalibratePump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::RabiMap => "rabi-map",
            Scenario::GainMap => "gain-map",
            Scenario::TuneMap => "tune-map",
            Scenario::Tones => "tones",
            Scenario::Readout => "readout",
            Scenario::Compress => "compress",
            Scenario::Fit => "fit",
            Scenario::NoiseBudget => "noise-budget",
            Scenario::CalibratePump => "calibrate-pump",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `scenario` and renders the full CSV text.
pub fn execute(scenario: Scenario, cfg: &Config, seed: u64) -> Result<String, CliError> {
    let table = run::run(scenario, cfg, seed)?;
    output::render(scenario, cfg, seed, &table)
}
