// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Strict TOML configuration.
//!
//! Every table rejects unknown keys. Errors carry the dotted path of the
//! offending key, e.g. `system.dqd[0].gap_hz`. Units are spelled out in key
//! names: `_hz` (cyclic), `_mhz` (offsets from the cavity), `_uev`, `_dbm`.

use serde::{Deserialize, Serialize};

use sapa_core::metrics::NoiseChain;
use sapa_core::model::{power_to_amplitude, CavityParams, DqdParams, SystemParams};
use sapa_core::scans::{CalibrationOptions, EngineOptions};
use sapa_core::meanfield::PeriodicOptions;
use sapa_core::units::{hz_to_joule, hz_to_rad, uev_to_joule};

use crate::error::CliError;
use crate::Scenario;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub system: SystemConfig,
    pub engine: EngineConfig,
    pub calibration: CalibrationConfig,
    pub rabi_map: RabiMapConfig,
    pub gain_map: GainMapConfig,
    pub tune_map: TuneMapConfig,
    pub tones: TonesConfig,
    pub readout: ReadoutConfig,
    pub compress: CompressConfig,
    pub fit: FitConfig,
    pub noise_budget: NoiseBudgetConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub cavity: CavityConfig,
    pub dqd: Vec<DqdConfig>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            cavity: CavityConfig::default(),
            dqd: vec![DqdConfig::default()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub frequency_hz: f64,
    /// Total linewidth κ/2π.
    pub kappa_hz: f64,
    /// Internal loss κ_int/2π, part of `kappa_hz`.
    pub kappa_int_hz: f64,
    /// Share of the external loss through the input port.
    pub input_fraction: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 5.198e9,
            kappa_hz: 14e6,
            kappa_int_hz: 0.0,
            input_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqdConfig {
    /// Minimum qubit gap 2t_c/h.
    pub gap_hz: f64,
    pub epsilon_uev: f64,
    pub coupling_hz: f64,
    pub gamma_1_hz: f64,
    pub gamma_phi_hz: f64,
    pub lever_arm: f64,
}

impl Default for DqdConfig {
    fn default() -> Self {
        Self {
            gap_hz: 5.32e9,
            epsilon_uev: 0.0,
            coupling_hz: 60e6,
            gamma_1_hz: 100e6,
            gamma_phi_hz: 50e6,
            lever_arm: 0.072,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub tol_rel: f64,
    pub settle: f64,
    pub max_periods: usize,
    pub samples_per_period: usize,
    pub n_harmonics: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let p = PeriodicOptions::default();
        Self {
            tol_rel: p.tol_rel,
            settle: p.settle,
            max_periods: p.max_periods,
            samples_per_period: p.samples_per_period,
            n_harmonics: EngineOptions::default().n_harmonics,
        }
    }
}

/// Pump calibration, used whenever a scenario leaves its pump power unset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub target_db: f64,
    pub tol_db: f64,
    pub beat_hz: f64,
    pub probe_power_dbm: f64,
    pub window_lo_mhz: f64,
    pub window_hi_mhz: f64,
    pub step_mhz: f64,
    pub pump_start_dbm: f64,
    pub growth: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            target_db: 11.28,
            tol_db: 0.01,
            beat_hz: 100e3,
            probe_power_dbm: -150.0,
            window_lo_mhz: -15.0,
            window_hi_mhz: 5.0,
            step_mhz: 0.5,
            pump_start_dbm: -140.0,
            growth: 1.3,
            max_iterations: 60,
        }
    }
}

/// Inclusive linear grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub const fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| (self.start * (n - k as f64) + self.stop * k as f64) / n)
            .collect()
    }

    fn check(&self, path: &str) -> Result<(), CliError> {
        if self.points == 0 {
            return Err(CliError::config(format!("{path}.points"), "must be at least 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::config(path, "start and stop must be finite"));
        }
        if self.points > 1 && self.stop <= self.start {
            return Err(CliError::config(format!("{path}.stop"), "must exceed start"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiMapConfig {
    pub dqd: usize,
    pub probe_offset_mhz: Grid,
    pub epsilon_uev: Grid,
}

impl Default for RabiMapConfig {
    fn default() -> Self {
        Self {
            dqd: 0,
            probe_offset_mhz: Grid::new(-40.0, 40.0, 161),
            epsilon_uev: Grid::new(-60.0, 60.0, 121),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainMapConfig {
    pub dqd: usize,
    /// Unset: calibrate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_power_dbm: Option<f64>,
    pub beat_hz: f64,
    pub probe_power_dbm: f64,
    pub probe_offset_mhz: Grid,
    pub epsilon_uev: Grid,
}

impl Default for GainMapConfig {
    fn default() -> Self {
        Self {
            dqd: 0,
            pump_power_dbm: None,
            beat_hz: 100e3,
            probe_power_dbm: -150.0,
            probe_offset_mhz: Grid::new(-15.0, 5.0, 41),
            epsilon_uev: Grid::new(-30.0, 30.0, 31),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneMapConfig {
    pub dqd: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_power_dbm: Option<f64>,
    /// Unset: the calibrated max-gain frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_offset_mhz: Option<f64>,
    pub probe_power_dbm: f64,
    pub beat_mhz: Grid,
    pub epsilon_uev: Grid,
}

impl Default for TuneMapConfig {
    fn default() -> Self {
        Self {
            dqd: 0,
            pump_power_dbm: None,
            probe_offset_mhz: None,
            probe_power_dbm: -150.0,
            beat_mhz: Grid::new(-19.5, 19.5, 40),
            epsilon_uev: Grid::new(-30.0, 30.0, 31),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TonesConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_offset_mhz: Option<f64>,
    pub probe_power_dbm: f64,
    pub beat_hz: f64,
    pub probe_phase_rad: f64,
    pub n_harmonics: usize,
}

impl Default for TonesConfig {
    fn default() -> Self {
        Self {
            pump_power_dbm: None,
            probe_offset_mhz: None,
            probe_power_dbm: -150.0,
            beat_hz: 12e3,
            probe_phase_rad: 0.0,
            n_harmonics: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    pub sapa_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_power_dbm: Option<f64>,
    pub beat_hz: f64,
    /// Probe with the SAPA on. Unset: the calibrated max-gain frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_offset_mhz: Option<f64>,
    pub probe_off_offset_mhz: f64,
    pub probe_power_dbm: f64,
    /// Moves the SAPA dot to `sapa_off_epsilon_uev` while the pump is off.
    pub park_sapa_when_off: bool,
    pub sapa_off_epsilon_uev: f64,
    pub n_sapa: f64,
    pub n_hemt: f64,
    pub bandwidth_hz: f64,
    pub repeats: usize,
    pub epsilon2_uev: Grid,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            sapa_index: 0,
            pump_power_dbm: None,
            beat_hz: 100e3,
            probe_offset_mhz: None,
            probe_off_offset_mhz: 0.0,
            probe_power_dbm: -150.0,
            park_sapa_when_off: true,
            sapa_off_epsilon_uev: 50.0,
            n_sapa: 1.5,
            n_hemt: 10.0,
            bandwidth_hz: 80.0,
            repeats: 30,
            epsilon2_uev: Grid::new(-40.0, 40.0, 41),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompressConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_power_dbm: Option<f64>,
    pub beat_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_offset_mhz: Option<f64>,
    pub power_dbm: Grid,
}

impl Default for CompressConfig {
    fn default() -> Self {
        Self {
            pump_power_dbm: None,
            beat_hz: 100e3,
            probe_offset_mhz: None,
            power_dbm: Grid::new(-160.0, -100.0, 31),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    GaussNewton,
    Simplex,
}

/// Two-stage fit: a Lorentzian on the far-detuned cut seeds the cavity, then
/// the coupled model fits the whole map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// CSV with columns `probe_hz,epsilon_uev,amplitude`. Unset: synthetic
    /// data from `[system]` with seeded noise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    pub method: FitMethod,
    /// Parameters held at their starting values in the coupled stage.
    pub fixed: Vec<String>,
    /// Synthetic noise deviation relative to the peak amplitude.
    pub noise_rel: f64,
    pub probe_offset_mhz: Grid,
    pub epsilon_uev: Grid,
    /// Starting point relative to the system values.
    pub init_factor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data: None,
            method: FitMethod::GaussNewton,
            fixed: Vec::new(),
            noise_rel: 0.01,
            probe_offset_mhz: Grid::new(-40.0, 40.0, 81),
            epsilon_uev: Grid::new(-60.0, 60.0, 61),
            init_factor: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseBudgetConfig {
    pub n_sapa: f64,
    pub n_hemt: f64,
    pub gain_db: f64,
    pub bandwidth_hz: f64,
    pub probe_power_dbm: f64,
    /// Measured N_on/N_off; when set, n_sapa is also inferred from it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_rise: Option<f64>,
}

impl Default for NoiseBudgetConfig {
    fn default() -> Self {
        Self {
            n_sapa: 1.5,
            n_hemt: 10.0,
            gain_db: 11.28,
            bandwidth_hz: 80.0,
            probe_power_dbm: -150.0,
            noise_rise: None,
        }
    }
}

impl Config {
    /// Parses TOML, reporting the key path of any error.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("<root>", e.message()))?;
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "<root>".to_string() } else { path };
            CliError::config(path, e.into_inner().message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks value ranges that the types alone do not.
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.system.cavity;
        positive("system.cavity.frequency_hz", c.frequency_hz)?;
        positive("system.cavity.kappa_hz", c.kappa_hz)?;
        if !(c.kappa_int_hz >= 0.0 && c.kappa_int_hz < c.kappa_hz) {
            return Err(CliError::config("system.cavity.kappa_int_hz", "must lie in [0, kappa_hz)"));
        }
        if !(c.input_fraction > 0.0 && c.input_fraction < 1.0) {
            return Err(CliError::config("system.cavity.input_fraction", "must lie in (0, 1)"));
        }
        if self.system.dqd.is_empty() {
            return Err(CliError::config("system.dqd", "at least one dot required"));
        }
        for (i, d) in self.system.dqd.iter().enumerate() {
            let p = format!("system.dqd[{i}]");
            positive(&format!("{p}.gap_hz"), d.gap_hz)?;
            finite(&format!("{p}.epsilon_uev"), d.epsilon_uev)?;
            non_negative(&format!("{p}.coupling_hz"), d.coupling_hz)?;
            non_negative(&format!("{p}.gamma_1_hz"), d.gamma_1_hz)?;
            non_negative(&format!("{p}.gamma_phi_hz"), d.gamma_phi_hz)?;
            positive(&format!("{p}.lever_arm"), d.lever_arm)?;
            if d.gamma_1_hz / 2.0 + d.gamma_phi_hz <= 0.0 {
                return Err(CliError::config(format!("{p}.gamma_phi_hz"), "total decoherence must be positive"));
            }
        }
        let e = &self.engine;
        positive("engine.tol_rel", e.tol_rel)?;
        positive("engine.settle", e.settle)?;
        if e.max_periods == 0 {
            return Err(CliError::config("engine.max_periods", "must be at least 1"));
        }
        if e.samples_per_period < 4 * e.n_harmonics.max(1) {
            return Err(CliError::config("engine.samples_per_period", "must be at least 4 × n_harmonics"));
        }
        let k = &self.calibration;
        positive("calibration.tol_db", k.tol_db)?;
        nonzero("calibration.beat_hz", k.beat_hz)?;
        positive("calibration.step_mhz", k.step_mhz)?;
        if k.window_hi_mhz <= k.window_lo_mhz {
            return Err(CliError::config("calibration.window_hi_mhz", "must exceed window_lo_mhz"));
        }
        if k.growth <= 1.0 {
            return Err(CliError::config("calibration.growth", "must exceed 1"));
        }
        self.rabi_map.probe_offset_mhz.check("rabi_map.probe_offset_mhz")?;
        self.rabi_map.epsilon_uev.check("rabi_map.epsilon_uev")?;
        dot_index("rabi_map.dqd", self.rabi_map.dqd, self.system.dqd.len())?;
        self.gain_map.probe_offset_mhz.check("gain_map.probe_offset_mhz")?;
        self.gain_map.epsilon_uev.check("gain_map.epsilon_uev")?;
        nonzero("gain_map.beat_hz", self.gain_map.beat_hz)?;
        dot_index("gain_map.dqd", self.gain_map.dqd, self.system.dqd.len())?;
        self.tune_map.beat_mhz.check("tune_map.beat_mhz")?;
        self.tune_map.epsilon_uev.check("tune_map.epsilon_uev")?;
        dot_index("tune_map.dqd", self.tune_map.dqd, self.system.dqd.len())?;
        nonzero("tones.beat_hz", self.tones.beat_hz)?;
        if self.tones.n_harmonics < 2 {
            return Err(CliError::config("tones.n_harmonics", "must be at least 2"));
        }
        let r = &self.readout;
        nonzero("readout.beat_hz", r.beat_hz)?;
        non_negative("readout.n_sapa", r.n_sapa)?;
        non_negative("readout.n_hemt", r.n_hemt)?;
        positive("readout.bandwidth_hz", r.bandwidth_hz)?;
        if r.repeats < 2 {
            return Err(CliError::config("readout.repeats", "must be at least 2"));
        }
        if r.sapa_index > 1 {
            return Err(CliError::config("readout.sapa_index", "must be 0 or 1"));
        }
        r.epsilon2_uev.check("readout.epsilon2_uev")?;
        finite("readout.sapa_off_epsilon_uev", r.sapa_off_epsilon_uev)?;
        nonzero("compress.beat_hz", self.compress.beat_hz)?;
        self.compress.power_dbm.check("compress.power_dbm")?;
        let f = &self.fit;
        non_negative("fit.noise_rel", f.noise_rel)?;
        positive("fit.init_factor", f.init_factor)?;
        f.probe_offset_mhz.check("fit.probe_offset_mhz")?;
        f.epsilon_uev.check("fit.epsilon_uev")?;
        for (i, name) in f.fixed.iter().enumerate() {
            if !sapa_core::fitting::COUPLED_PARAMS.contains(&name.as_str()) {
                return Err(CliError::config(
                    format!("fit.fixed[{i}]"),
                    format!("unknown parameter `{name}`; expected one of {:?}", sapa_core::fitting::COUPLED_PARAMS),
                ));
            }
        }
        let n = &self.noise_budget;
        non_negative("noise_budget.n_sapa", n.n_sapa)?;
        non_negative("noise_budget.n_hemt", n.n_hemt)?;
        positive("noise_budget.bandwidth_hz", n.bandwidth_hz)?;
        if let Some(rise) = n.noise_rise {
            if rise.is_nan() || rise < 1.0 {
                return Err(CliError::config("noise_budget.noise_rise", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn system_params(&self) -> Result<SystemParams, CliError> {
        let c = &self.system.cavity;
        let ext = c.kappa_hz - c.kappa_int_hz;
        let cavity = CavityParams::new(
            hz_to_rad(c.frequency_hz),
            hz_to_rad(ext * c.input_fraction),
            hz_to_rad(ext * (1.0 - c.input_fraction)),
            hz_to_rad(c.kappa_int_hz),
        )
        .map_err(|e| CliError::config("system.cavity", e.to_string()))?;
        let dqds = self
            .system
            .dqd
            .iter()
            .map(|d| DqdParams {
                epsilon: uev_to_joule(d.epsilon_uev),
                t_c: hz_to_joule(d.gap_hz) / 2.0,
                g_c: hz_to_rad(d.coupling_hz),
                gamma_1: hz_to_rad(d.gamma_1_hz),
                gamma_phi: hz_to_rad(d.gamma_phi_hz),
                lever_arm: d.lever_arm,
            })
            .collect();
        SystemParams::new(cavity, dqds).map_err(|e| CliError::config("system", e.to_string()))
    }

    pub fn engine_options(&self) -> EngineOptions {
        let e = &self.engine;
        EngineOptions {
            periodic: PeriodicOptions {
                tol_rel: e.tol_rel,
                settle: e.settle,
                max_periods: e.max_periods,
                samples_per_period: e.samples_per_period,
            },
            n_harmonics: e.n_harmonics,
        }
    }

    pub fn calibration_options(&self) -> Result<CalibrationOptions, CliError> {
        let k = &self.calibration;
        let wr = hz_to_rad(self.system.cavity.frequency_hz);
        let amp = |p: f64, path: &str| power_to_amplitude(p, wr).map_err(|e| CliError::config(path, e.to_string()));
        Ok(CalibrationOptions {
            target_db: k.target_db,
            tol_db: k.tol_db,
            beat: hz_to_rad(k.beat_hz),
            probe_amplitude: amp(k.probe_power_dbm, "calibration.probe_power_dbm")?,
            window_lo: hz_to_rad(k.window_lo_mhz * 1e6),
            window_hi: hz_to_rad(k.window_hi_mhz * 1e6),
            coarse_step: hz_to_rad(k.step_mhz * 1e6),
            amp_start: amp(k.pump_start_dbm, "calibration.pump_start_dbm")?,
            growth: k.growth,
            amp_max: 1e6,
            max_iterations: k.max_iterations,
            engine: self.engine_options(),
        })
    }

    pub fn noise_chain(&self, g_linear: f64) -> Result<NoiseChain, CliError> {
        NoiseChain::new(self.readout.n_sapa, self.readout.n_hemt, g_linear)
            .map_err(|e| CliError::config("readout", e.to_string()))
    }

    /// TOML of the sections `scenario` reads, with every default filled in.
    pub fn echo(&self, scenario: Scenario) -> String {
        let mut root = toml::Table::new();
        let mut put = |name: &str, v: toml::Value| {
            root.insert(name.to_string(), v);
        };
        put("system", value(&self.system));
        match scenario {
            Scenario::RabiMap => put("rabi_map", value(&self.rabi_map)),
            Scenario::GainMap => {
                put("engine", value(&self.engine));
                put("gain_map", value(&self.gain_map));
                if self.gain_map.pump_power_dbm.is_none() {
                    put("calibration", value(&self.calibration));
                }
            }
            Scenario::TuneMap => {
                put("engine", value(&self.engine));
                put("tune_map", value(&self.tune_map));
                if self.tune_map.pump_power_dbm.is_none() || self.tune_map.probe_offset_mhz.is_none() {
                    put("calibration", value(&self.calibration));
                }
            }
            Scenario::Tones => {
                put("engine", value(&self.engine));
                put("tones", value(&self.tones));
                if self.tones.pump_power_dbm.is_none() || self.tones.probe_offset_mhz.is_none() {
                    put("calibration", value(&self.calibration));
                }
            }
            Scenario::Readout => {
                put("engine", value(&self.engine));
                put("calibration", value(&self.calibration));
                put("readout", value(&self.readout));
            }
            Scenario::Compress => {
                put("engine", value(&self.engine));
                put("compress", value(&self.compress));
                if self.compress.pump_power_dbm.is_none() || self.compress.probe_offset_mhz.is_none() {
                    put("calibration", value(&self.calibration));
                }
            }
            Scenario::Fit => put("fit", value(&self.fit)),
            Scenario::NoiseBudget => put("noise_budget", value(&self.noise_budget)),
            Scenario::CalibratePump => {
                put("engine", value(&self.engine));
                put("calibration", value(&self.calibration));
            }
        }
        toml::to_string(&root).expect("config serialises")
    }
}

fn value<T: Serialize>(v: &T) -> toml::Value {
    toml::Value::try_from(v).expect("config section serialises")
}

fn finite(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, "must be finite"))
    }
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be non-negative and finite, got {v}")))
    }
}

fn nonzero(path: &str, v: f64) -> Result<(), CliError> {
    if v != 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be nonzero and finite, got {v}")))
    }
}

fn dot_index(path: &str, i: usize, n: usize) -> Result<(), CliError> {
    if i < n {
        Ok(())
    } else {
        Err(CliError::config(path, format!("no dot {i}; system has {n}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn unknown_key_reports_path() {
        let err = Config::from_toml("[system.cavity]\nkapa_hz = 1e6\n").unwrap_err().to_string();
        assert!(err.contains("system.cavity"), "{err}");
        assert!(err.contains("kapa_hz"), "{err}");
    }

    #[test]
    fn wrong_type_reports_indexed_path() {
        let err = Config::from_toml("[[system.dqd]]\ngap_hz = \"fast\"\n").unwrap_err().to_string();
        assert!(err.contains("system.dqd[0].gap_hz"), "{err}");
    }

    #[test]
    fn range_errors_report_path() {
        let err = Config::from_toml("[[system.dqd]]\ngap_hz = -1.0\n").unwrap_err().to_string();
        assert!(err.contains("system.dqd[0].gap_hz"), "{err}");
        let err = Config::from_toml("[fit]\nfixed = [\"kapa\"]\n").unwrap_err().to_string();
        assert!(err.contains("fit.fixed[0]"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let text = "[gain_map]\npump_power_dbm = -120.0\nbeat_hz = 5e4\n[[system.dqd]]\ngap_hz = 5.4e9\n[[system.dqd]]\ngap_hz = 5.8e9\n";
        let cfg = Config::from_toml(text).unwrap();
        for s in Scenario::ALL {
            let echo = cfg.echo(s);
            let back = Config::from_toml(&echo).unwrap();
            assert_eq!(back.echo(s), echo, "{s:?}");
        }
    }

    #[test]
    fn system_matches_presets() {
        let sys = Config::default().system_params().unwrap();
        let preset = sapa_core::model::presets::single_dot();
        assert!((sys.cavity.omega_r - preset.cavity.omega_r).abs() < 1e-3);
        assert!((sys.dqds[0].t_c / preset.dqds[0].t_c - 1.0).abs() < 1e-12);
        assert!((sys.dqds[0].gamma_2() / preset.dqds[0].gamma_2() - 1.0).abs() < 1e-12);
    }
}
