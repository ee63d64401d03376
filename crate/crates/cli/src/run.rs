// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use sapa_core::fitting::{
    fit_two_stage, synthetic_coupled_data, CoupledParams, CoupledSample, FitResult, Method, MinimizeOptions,
};
use sapa_core::metrics::{chain_noise_std, db_to_power_ratio, effective_temperature, snr_improvement, NoiseChain, NoiseScale};
use sapa_core::model::{amplitude_to_power, power_to_amplitude, DriveTone, SystemParams};
use sapa_core::scans::{
    calibrate_pump, compression_sweep, gain_map, max_gain_point, normalization_a0, rabi_map, readout_sweep,
    tone_spectrum, tune_map, GainPoint, ReadoutConfig as CoreReadout, SpectrumMap,
};
use sapa_core::units::{hz_to_rad, rad_to_hz, uev_to_joule};

use crate::config::{Config, FitMethod};
use crate::output::{num, Table};
use crate::{CliError, Scenario};

pub fn run(scenario: Scenario, cfg: &Config, seed: u64) -> Result<Table, CliError> {
    cfg.validate()?;
    match scenario {
        Scenario::RabiMap => run_rabi_map(cfg),
        Scenario::GainMap => run_gain_map(cfg),
        Scenario::TuneMap => run_tune_map(cfg),
        Scenario::Tones => run_tones(cfg),
        Scenario::Readout => run_readout(cfg, seed),
        Scenario::Compress => run_compress(cfg),
        Scenario::Fit => run_fit(cfg, seed),
        Scenario::NoiseBudget => run_noise_budget(cfg),
        Scenario::CalibratePump => run_calibrate(cfg),
    }
}

fn mhz_offsets(wr: f64, offsets: &[f64]) -> Vec<f64> {
    offsets.iter().map(|o| wr + hz_to_rad(o * 1e6)).collect()
}

fn probe_hz(cfg: &Config, offsets_mhz: &[f64]) -> Vec<f64> {
    offsets_mhz.iter().map(|o| cfg.system.cavity.frequency_hz + o * 1e6).collect()
}

fn uev(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&u| uev_to_joule(u)).collect()
}

/// Pump amplitude and signal frequency of a pumped scenario.
struct Operating {
    pump_amplitude: f64,
    omega_s: f64,
    /// Gain at the max-gain point, when it was located.
    gain: Option<GainPoint>,
}

impl Operating {
    fn resolve(
        cfg: &Config,
        system: &SystemParams,
        pump_dbm: Option<f64>,
        probe_mhz: Option<f64>,
        need_gain: bool,
    ) -> Result<Self, CliError> {
        let wr = system.cavity.omega_r;
        let opts = cfg.calibration_options()?;
        let (pump_amplitude, gain) = match pump_dbm {
            None => {
                let cal = calibrate_pump(system, &opts)?;
                (cal.amplitude, Some(cal.point))
            }
            Some(p) => (power_to_amplitude(p, wr)?, None),
        };
        let gain = match gain {
            Some(g) => Some(g),
            None if need_gain || probe_mhz.is_none() => Some(max_gain_point(
                system,
                pump_amplitude,
                opts.beat,
                opts.probe_amplitude,
                wr + opts.window_lo,
                wr + opts.window_hi,
                opts.coarse_step,
                &opts.engine,
            )?),
            None => None,
        };
        let omega_s = match (probe_mhz, &gain) {
            (Some(o), _) => wr + hz_to_rad(o * 1e6),
            (None, Some(g)) => g.omega_s,
            (None, None) => unreachable!("gain point located when the probe is unset"),
        };
        Ok(Self {
            pump_amplitude,
            omega_s,
            gain,
        })
    }

    fn describe(&self, t: &mut Table, wr: f64, calibrated: bool) {
        t.meta("calibrated", calibrated);
        t.meta("pump_amplitude", num(self.pump_amplitude));
        t.meta("pump_power_dbm", num(amplitude_to_power(self.pump_amplitude, wr)));
        t.meta("signal_hz", num(rad_to_hz(self.omega_s)));
        if let Some(g) = &self.gain {
            t.meta("max_gain_hz", num(rad_to_hz(g.omega_s)));
            t.meta("parametric_gain_db", num(g.parametric_gain_db));
            t.meta("effective_gain_db", num(g.effective_gain_db));
        }
    }
}

/// `axis1` and `eps_uev` are the configured grids, printed as given.
fn map_table(map: &SpectrumMap, axis1_col: &str, axis1: &[f64], eps_uev: &[f64]) -> Table {
    let mut t = Table::new(&[axis1_col, "epsilon_uev", "re_t", "im_t", "amplitude", "normalized", "status"]);
    t.meta("a0", num(map.a0));
    t.meta("points", map.len());
    t.meta("failed_points", map.failures.iter().filter(|f| f.is_some()).count());
    for (i2, &e) in eps_uev.iter().enumerate() {
        for (i1, &x) in axis1.iter().enumerate() {
            let k = map.index(i1, i2);
            let v = map.values[k];
            t.row(vec![
                num(x),
                num(e),
                num(v.re),
                num(v.im),
                num(map.amplitude(k)),
                num(map.normalized(k)),
                map.failures[k].clone().unwrap_or_else(|| "ok".into()),
            ]);
        }
    }
    t
}

fn run_rabi_map(cfg: &Config) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let c = &cfg.rabi_map;
    let (offsets, eps) = (c.probe_offset_mhz.values(), c.epsilon_uev.values());
    let map = rabi_map(&sys, &mhz_offsets(sys.cavity.omega_r, &offsets), &uev(&eps), c.dqd)?;
    Ok(map_table(&map, "probe_hz", &probe_hz(cfg, &offsets), &eps))
}

fn run_gain_map(cfg: &Config) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let c = &cfg.gain_map;
    let wr = sys.cavity.omega_r;
    let op = Operating::resolve(cfg, &sys, c.pump_power_dbm, Some(0.0), false)?;
    let (offsets, eps) = (c.probe_offset_mhz.values(), c.epsilon_uev.values());
    let map = gain_map(
        &sys,
        op.pump_amplitude,
        hz_to_rad(c.beat_hz),
        power_to_amplitude(c.probe_power_dbm, wr)?,
        &mhz_offsets(wr, &offsets),
        &uev(&eps),
        c.dqd,
        &cfg.engine_options(),
    )?;
    let hz = probe_hz(cfg, &offsets);
    let mut t = map_table(&map, "probe_hz", &hz, &eps);
    t.meta("pump_amplitude", num(op.pump_amplitude));
    t.meta("calibrated", c.pump_power_dbm.is_none());
    if let Some((k, a)) = map.max_normalized() {
        let i1 = k % map.axis1.len();
        t.meta("max_normalized", num(a));
        t.meta("max_probe_hz", num(hz[i1]));
    }
    Ok(t)
}

fn run_tune_map(cfg: &Config) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let c = &cfg.tune_map;
    let wr = sys.cavity.omega_r;
    let op = Operating::resolve(cfg, &sys, c.pump_power_dbm, c.probe_offset_mhz, false)?;
    let (beat_hz, eps): (Vec<f64>, _) = (c.beat_mhz.values().iter().map(|b| b * 1e6).collect(), c.epsilon_uev.values());
    let beats: Vec<f64> = beat_hz.iter().map(|&b| hz_to_rad(b)).collect();
    let map = tune_map(
        &sys,
        op.omega_s,
        op.pump_amplitude,
        power_to_amplitude(c.probe_power_dbm, wr)?,
        &beats,
        &uev(&eps),
        c.dqd,
        &cfg.engine_options(),
    )?;
    let mut t = map_table(&map, "beat_hz", &beat_hz, &eps);
    op.describe(&mut t, wr, c.pump_power_dbm.is_none());
    Ok(t)
}

fn run_tones(cfg: &Config) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let c = &cfg.tones;
    let wr = sys.cavity.omega_r;
    let op = Operating::resolve(cfg, &sys, c.pump_power_dbm, c.probe_offset_mhz, false)?;
    let beat = hz_to_rad(c.beat_hz);
    let pump = DriveTone::new(op.omega_s + beat, op.pump_amplitude, 0.0)?;
    let probe = DriveTone::new(op.omega_s, power_to_amplitude(c.probe_power_dbm, wr)?, c.probe_phase_rad)?;
    let opts = sapa_core::scans::EngineOptions {
        n_harmonics: c.n_harmonics,
        ..cfg.engine_options()
    };
    let tones = tone_spectrum(&sys, &pump, &probe, &opts)?;
    let mut t = Table::new(&["harmonic", "frequency_hz", "re", "im", "relative_amplitude", "power_db"]);
    op.describe(&mut t, wr, c.pump_power_dbm.is_none());
    t.meta("pump_hz", num(rad_to_hz(tones.pump_frequency)));
    t.meta("idler_minus_signal_hz", num(rad_to_hz(tones.idler().frequency - tones.signal().frequency)));
    for l in &tones.lines {
        t.row(vec![
            l.harmonic.to_string(),
            num(rad_to_hz(l.frequency)),
            num(l.relative_amplitude.re),
            num(l.relative_amplitude.im),
            num(l.relative_amplitude.norm()),
            num(l.power_db),
        ]);
    }
    Ok(t)
}

fn run_readout(cfg: &Config, seed: u64) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let c = &cfg.readout;
    if sys.dqds.len() != 2 {
        return Err(CliError::config("system.dqd", "readout needs exactly two dots"));
    }
    let wr = sys.cavity.omega_r;
    let sapa_only = SystemParams::new(sys.cavity, vec![sys.dqds[c.sapa_index]])?;
    let op = Operating::resolve(cfg, &sapa_only, c.pump_power_dbm, c.probe_offset_mhz, true)?;
    let gain = op.gain.as_ref().expect("readout locates the gain point");
    let g_linear = db_to_power_ratio(gain.parametric_gain_db);
    let rc = CoreReadout {
        sapa_index: c.sapa_index,
        pump_amplitude: op.pump_amplitude,
        beat: hz_to_rad(c.beat_hz),
        probe_frequency: op.omega_s,
        probe_frequency_off: Some(wr + hz_to_rad(c.probe_off_offset_mhz * 1e6)),
        probe_amplitude: power_to_amplitude(c.probe_power_dbm, wr)?,
        sapa_off_epsilon: c.park_sapa_when_off.then(|| uev_to_joule(c.sapa_off_epsilon_uev)),
        chain: cfg.noise_chain(g_linear)?,
        bandwidth_hz: c.bandwidth_hz,
        repeats: c.repeats,
        seed,
        engine: cfg.engine_options(),
    };
    let eps2 = c.epsilon2_uev.values();
    let r = readout_sweep(&sys, &rc, &uev(&eps2))?;
    let mut t = Table::new(&["epsilon2_uev", "branch", "normalized", "mean", "std"]);
    op.describe(&mut t, wr, c.pump_power_dbm.is_none());
    t.meta("g_sapa_linear", num(g_linear));
    t.meta("noise_std_on", num(r.pump_on.noise_std));
    t.meta("noise_std_off", num(r.pump_off.noise_std));
    t.meta("contrast_on", num(r.pump_on.contrast()));
    t.meta("contrast_off", num(r.pump_off.contrast()));
    t.meta("snr_on", num(r.snr(true)?));
    t.meta("snr_off", num(r.snr(false)?));
    t.meta("snr_ratio", num(r.snr_ratio()?));
    for (branch, b) in [("on", &r.pump_on), ("off", &r.pump_off)] {
        let a = b.amplitudes();
        for (k, p) in b.points.iter().enumerate() {
            t.row(vec![
                num(eps2[k]),
                branch.into(),
                num(a[k]),
                num(p.ensemble.mean()),
                num(p.ensemble.std()),
            ]);
        }
    }
    Ok(t)
}

fn run_compress(cfg: &Config) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let c = &cfg.compress;
    let wr = sys.cavity.omega_r;
    let op = Operating::resolve(cfg, &sys, c.pump_power_dbm, c.probe_offset_mhz, false)?;
    let curve = compression_sweep(
        &sys,
        op.pump_amplitude,
        hz_to_rad(c.beat_hz),
        op.omega_s,
        &c.power_dbm.values(),
        &cfg.engine_options(),
    )?;
    let mut t = Table::new(&["probe_power_dbm", "parametric_gain_db"]);
    op.describe(&mut t, wr, c.pump_power_dbm.is_none());
    t.meta("a_off", num(curve.a_off));
    t.meta("compression_dbm", num(curve.compression_dbm));
    for (p, g) in &curve.points {
        t.row(vec![num(*p), num(*g)]);
    }
    Ok(t)
}

fn truth_params(sys: &SystemParams) -> CoupledParams {
    let c = &sys.cavity;
    let d = &sys.dqds[0];
    CoupledParams {
        g_c: d.g_c,
        gamma_2: d.gamma_2(),
        t_c: d.t_c,
        omega_r: c.omega_r,
        kappa: c.kappa_total(),
        scale: 2.0 * (c.kappa_in * c.kappa_out).sqrt() / c.kappa_total(),
    }
}

fn read_samples(path: &str) -> Result<Vec<CoupledSample>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("{path}: missing column `{name}`")))
    };
    let (iw, ie, ia) = (col("probe_hz")?, col("epsilon_uev")?, col("amplitude")?);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Data(format!("{path}: row {}: column {} is not a number", line + 1, &headers[i])))
        };
        out.push(CoupledSample {
            omega: hz_to_rad(field(iw)?),
            epsilon: uev_to_joule(field(ie)?),
            amplitude: field(ia)?,
        });
    }
    Ok(out)
}

fn fit_rows(t: &mut Table, stage: &str, f: &FitResult) {
    t.meta(&format!("{stage}_residual_rms"), num(f.residual_rms));
    t.meta(&format!("{stage}_iterations"), f.iterations);
    t.meta(&format!("{stage}_converged"), f.converged);
    t.meta(&format!("{stage}_condition_number"), num(f.condition_number));
    for w in &f.warnings {
        t.meta(&format!("{stage}_warning"), w);
    }
    for i in 0..f.params.len() {
        t.row(vec![
            stage.into(),
            f.names[i].clone(),
            num(f.params[i]),
            num(f.std_errors[i]),
            f.units[i].clone(),
            f.fixed[i].to_string(),
            f.active_bounds[i].to_string(),
        ]);
    }
}

fn run_fit(cfg: &Config, seed: u64) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let c = &cfg.fit;
    let truth = truth_params(&sys);
    let mut t = Table::new(&["stage", "parameter", "value", "std_error", "unit", "fixed", "active_bound"]);
    let data = match &c.data {
        Some(path) => {
            t.meta("data", path);
            read_samples(path)?
        }
        None => {
            t.meta("data", "synthetic");
            t.meta("noise_rel", num(c.noise_rel));
            let w = mhz_offsets(truth.omega_r, &c.probe_offset_mhz.values());
            synthetic_coupled_data(&truth, &w, &uev(&c.epsilon_uev.values()), c.noise_rel, seed)?
        }
    };
    t.meta("samples", data.len());
    let init = CoupledParams {
        g_c: truth.g_c * c.init_factor,
        gamma_2: truth.gamma_2 * c.init_factor,
        ..truth
    };
    let method = match c.method {
        FitMethod::GaussNewton => Method::GaussNewton,
        FitMethod::Simplex => Method::Simplex,
    };
    let fixed: Vec<&str> = c.fixed.iter().map(String::as_str).collect();
    let fit = fit_two_stage(&data, &init, &fixed, method, &MinimizeOptions::default())?;
    fit_rows(&mut t, "cavity", &fit.cavity);
    fit_rows(&mut t, "coupled", &fit.coupled);
    Ok(t)
}

fn run_noise_budget(cfg: &Config) -> Result<Table, CliError> {
    let c = &cfg.noise_budget;
    let sys = cfg.system_params()?;
    let wr = sys.cavity.omega_r;
    let g = db_to_power_ratio(c.gain_db);
    let chain = NoiseChain::new(c.n_sapa, c.n_hemt, g)?;
    let scale = NoiseScale {
        bandwidth_hz: c.bandwidth_hz,
        probe_amplitude: power_to_amplitude(c.probe_power_dbm, wr)?,
        a0: normalization_a0(&sys)?,
    };
    let mut t = Table::new(&["quantity", "value"]);
    let mut put = |k: &str, v: f64| t.row(vec![k.into(), num(v)]);
    put("g_sapa_linear", g);
    put("n_out_on", chain.output_noise(true));
    put("n_out_off", chain.output_noise(false));
    put("noise_rise", chain.noise_rise());
    put("snr_improvement", snr_improvement(&chain)?);
    put("t_eff_k", effective_temperature(c.n_sapa, wr)?);
    put("noise_std_on", chain_noise_std(&chain, &scale, true)?);
    put("noise_std_off", chain_noise_std(&chain, &scale, false)?);
    if let Some(rise) = c.noise_rise {
        put("n_sapa_from_rise", NoiseChain::n_sapa_from_rise(rise, g, c.n_hemt)?);
    }
    Ok(t)
}

fn run_calibrate(cfg: &Config) -> Result<Table, CliError> {
    let sys = cfg.system_params()?;
    let wr = sys.cavity.omega_r;
    let cal = calibrate_pump(&sys, &cfg.calibration_options()?)?;
    let mut t = Table::new(&["step", "pump_amplitude", "pump_power_dbm", "parametric_gain_db"]);
    let op = Operating {
        pump_amplitude: cal.amplitude,
        omega_s: cal.point.omega_s,
        gain: Some(cal.point.clone()),
    };
    op.describe(&mut t, wr, true);
    for (k, (amp, g)) in cal.history.iter().enumerate() {
        t.row(vec![k.to_string(), num(*amp), num(amplitude_to_power(*amp, wr)), num(*g)]);
    }
    Ok(t)
}
