// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use super::{
    linear_response_transmission, normalization_a0, parallel_map, pumped_response, pumped_sweep,
    Axis, EngineOptions, SpectrumMap,
};
use crate::meanfield::MeanFieldState;
use crate::metrics::{compression_point, effective_gain, parametric_gain};
use crate::model::{power_to_amplitude, DriveTone, SystemParams};
use crate::units::hz_to_rad;
use crate::{Error, Result, C64};

/// Pump-on transmission over (probe frequency, detuning of dot `dqd`), with
/// the pump following the probe at `ω_p = ω_s + beat`.
#[allow(clippy::too_many_arguments)]
pub fn gain_map(
    system: &SystemParams,
    pump_amplitude: f64,
    beat: f64,
    probe_amplitude: f64,
    probe_freqs: &[f64],
    eps_grid: &[f64],
    dqd: usize,
    opts: &EngineOptions,
) -> Result<SpectrumMap> {
    system.validate()?;
    check_dot(system, dqd)?;
    let a0 = normalization_a0(system)?;
    let columns = parallel_map(eps_grid.len(), |j| {
        let sys = system.with_detuning(dqd, eps_grid[j]);
        pumped_sweep(&sys, pump_amplitude, beat, probe_amplitude, probe_freqs, opts)
    });
    let points = columns
        .into_iter()
        .flatten()
        .map(|r| r.map(|p| p.transmission))
        .collect();
    SpectrumMap::new(
        "gain-map",
        Axis::new("probe_frequency", "rad/s", probe_freqs.to_vec()),
        Some(Axis::new("epsilon", "J", eps_grid.to_vec())),
        points,
        a0,
    )
}

/// Pump-on transmission at a fixed signal frequency over (beat, detuning).
#[allow(clippy::too_many_arguments)]
pub fn tune_map(
    system: &SystemParams,
    omega_s: f64,
    pump_amplitude: f64,
    probe_amplitude: f64,
    beat_grid: &[f64],
    eps_grid: &[f64],
    dqd: usize,
    opts: &EngineOptions,
) -> Result<SpectrumMap> {
    system.validate()?;
    check_dot(system, dqd)?;
    let a0 = normalization_a0(system)?;
    let columns = parallel_map(eps_grid.len(), |j| {
        let sys = system.with_detuning(dqd, eps_grid[j]);
        let mut warm: Option<MeanFieldState> = None;
        beat_grid
            .iter()
            .map(|&beat| {
                let r = DriveTone::new(omega_s + beat, pump_amplitude, 0.0)
                    .and_then(|pump| Ok((pump, DriveTone::new(omega_s, probe_amplitude, 0.0)?)))
                    .and_then(|(pump, probe)| pumped_response(&sys, &pump, &probe, warm.as_ref(), opts));
                warm = r.as_ref().ok().map(|p| p.final_state.clone());
                r.map(|p| p.transmission)
            })
            .collect::<Vec<_>>()
    });
    SpectrumMap::new(
        "tune-map",
        Axis::new("beat", "rad/s", beat_grid.to_vec()),
        Some(Axis::new("epsilon", "J", eps_grid.to_vec())),
        columns.into_iter().flatten().collect(),
        a0,
    )
}

fn check_dot(system: &SystemParams, dqd: usize) -> Result<()> {
    if dqd >= system.dqds.len() {
        return Err(Error::param("dqd", format!("no dot with index {dqd}")));
    }
    Ok(())
}

/// One output tone.
#[derive(Clone, Debug, PartialEq)]
pub struct ToneLine {
    pub harmonic: i32,
    /// Lab angular frequency `ω_p + nΔω`.
    pub frequency: f64,
    /// Output field `i√κ_out a_n` relative to the probe input amplitude.
    pub relative_amplitude: C64,
    /// `20 log₁₀ |relative_amplitude|`; `-inf` for an absent tone.
    pub power_db: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToneSpectrum {
    pub pump_frequency: f64,
    pub beat: f64,
    pub lines: Vec<ToneLine>,
}

impl ToneSpectrum {
    pub fn line(&self, n: i32) -> Option<&ToneLine> {
        self.lines.iter().find(|l| l.harmonic == n)
    }

    pub fn signal(&self) -> &ToneLine {
        self.line(-1).expect("signal harmonic always present")
    }

    pub fn idler(&self) -> &ToneLine {
        self.line(1).expect("idler harmonic always present")
    }
}

/// Output tones at `ω_p + nΔω`, `n ∈ [−N, N]` with `N ≥ 2`.
pub fn tone_spectrum(
    system: &SystemParams,
    pump: &DriveTone,
    probe: &DriveTone,
    opts: &EngineOptions,
) -> Result<ToneSpectrum> {
    let opts = EngineOptions {
        n_harmonics: opts.n_harmonics.max(2),
        ..*opts
    };
    let r = pumped_response(system, pump, probe, None, &opts)?;
    let scale = C64::new(0.0, 1.0) * system.cavity.kappa_out.sqrt() / probe.amplitude;
    let lines = r
        .harmonics
        .coefficients
        .iter()
        .map(|(&n, &a)| {
            let rel = scale * a;
            ToneLine {
                harmonic: n,
                frequency: r.harmonics.lab_frequency(n, pump.frequency),
                relative_amplitude: rel,
                power_db: 20.0 * rel.norm().log10(),
            }
        })
        .collect();
    Ok(ToneSpectrum {
        pump_frequency: pump.frequency,
        beat: r.harmonics.beat,
        lines,
    })
}

/// Gain against probe power at a fixed signal frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionCurve {
    pub omega_s: f64,
    /// Small-signal pump-off amplitude `|t(ω_s)|`.
    pub a_off: f64,
    /// `(probe power dBm, G_p dB)`.
    pub points: Vec<(f64, f64)>,
    /// 1 dB compression point (dBm).
    pub compression_dbm: f64,
}

/// Sweeps probe power upward with warm starts and locates the 1 dB
/// compression point.
pub fn compression_sweep(
    system: &SystemParams,
    pump_amplitude: f64,
    beat: f64,
    omega_s: f64,
    powers_dbm: &[f64],
    opts: &EngineOptions,
) -> Result<CompressionCurve> {
    if powers_dbm.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("powers_dbm", "must be strictly increasing"));
    }
    let a_off = linear_response_transmission(omega_s, system)?.norm();
    let pump = DriveTone::new(omega_s + beat, pump_amplitude, 0.0)?;
    let mut warm: Option<MeanFieldState> = None;
    let mut points = Vec::with_capacity(powers_dbm.len());
    for &p in powers_dbm {
        let probe = DriveTone::new(omega_s, power_to_amplitude(p, omega_s)?, 0.0)?;
        let r = pumped_response(system, &pump, &probe, warm.as_ref(), opts)?;
        points.push((p, parametric_gain(r.transmission.norm(), a_off)?));
        warm = Some(r.final_state);
    }
    let compression_dbm = compression_point(&points)?;
    Ok(CompressionCurve {
        omega_s,
        a_off,
        points,
        compression_dbm,
    })
}

/// The pump-on maximum of `|t|` over a signal-frequency window.
#[derive(Clone, Debug)]
pub struct GainPoint {
    pub omega_s: f64,
    pub a_on: f64,
    pub a_off: f64,
    pub a0: f64,
    /// `G_p` (dB).
    pub parametric_gain_db: f64,
    /// `G_e` (dB).
    pub effective_gain_db: f64,
}

/// Locates the maximum pump-on amplitude by a warm-started coarse sweep over
/// `[lo, hi]` followed by golden-section refinement.
#[allow(clippy::too_many_arguments)]
pub fn max_gain_point(
    system: &SystemParams,
    pump_amplitude: f64,
    beat: f64,
    probe_amplitude: f64,
    lo: f64,
    hi: f64,
    coarse_step: f64,
    opts: &EngineOptions,
) -> Result<GainPoint> {
    if !(hi > lo && coarse_step > 0.0) {
        return Err(Error::param("window", "need lo < hi and a positive step"));
    }
    let n = ((hi - lo) / coarse_step).round() as usize + 1;
    let freqs: Vec<f64> = (0..n).map(|k| lo + k as f64 * (hi - lo) / (n - 1) as f64).collect();
    let sweep = pumped_sweep(system, pump_amplitude, beat, probe_amplitude, &freqs, opts);
    let mut best: Option<(usize, f64)> = None;
    let mut states = Vec::with_capacity(n);
    for (k, r) in sweep.into_iter().enumerate() {
        let r = r?;
        let a = r.transmission.norm();
        if best.map_or(true, |(_, b)| a > b) {
            best = Some((k, a));
        }
        states.push(r.final_state);
    }
    let (kb, mut a_best) = best.expect("non-empty sweep");
    let mut w_best = freqs[kb];
    let warm = states[kb].clone();
    let eval = |w: f64| -> Result<f64> {
        let pump = DriveTone::new(w + beat, pump_amplitude, 0.0)?;
        let probe = DriveTone::new(w, probe_amplitude, 0.0)?;
        Ok(pumped_response(system, &pump, &probe, Some(&warm), opts)?
            .transmission
            .norm())
    };
    // golden section on [w_{k−1}, w_{k+1}]
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (freqs[kb.saturating_sub(1)], freqs[(kb + 1).min(n - 1)]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while b - a > hz_to_rad(2e3) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    for (w, f) in [(c, fc), (d, fd)] {
        if f > a_best {
            a_best = f;
            w_best = w;
        }
    }
    let a_off = linear_response_transmission(w_best, system)?.norm();
    let a0 = normalization_a0(system)?;
    Ok(GainPoint {
        omega_s: w_best,
        a_on: a_best,
        a_off,
        a0,
        parametric_gain_db: parametric_gain(a_best, a_off)?,
        effective_gain_db: effective_gain(a_best, a0)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationOptions {
    pub target_db: f64,
    pub tol_db: f64,
    pub beat: f64,
    pub probe_amplitude: f64,
    /// Signal window `[ω_r + lo, ω_r + hi]` searched for the gain maximum.
    pub window_lo: f64,
    pub window_hi: f64,
    pub coarse_step: f64,
    /// First pump amplitude tried; grows geometrically until the target is
    /// bracketed.
    pub amp_start: f64,
    pub growth: f64,
    pub amp_max: f64,
    pub max_iterations: usize,
    pub engine: EngineOptions,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            target_db: 11.28,
            tol_db: 0.01,
            beat: hz_to_rad(100e3),
            probe_amplitude: 540.0,
            window_lo: hz_to_rad(-15e6),
            window_hi: hz_to_rad(5e6),
            coarse_step: hz_to_rad(0.5e6),
            amp_start: 2e3,
            growth: 1.3,
            amp_max: 1e6,
            max_iterations: 60,
            engine: EngineOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PumpCalibration {
    pub amplitude: f64,
    pub point: GainPoint,
    /// `(pump amplitude, G_p dB)` for every evaluation, in order.
    pub history: Vec<(f64, f64)>,
}

/// Finds the pump amplitude at which the maximum parametric gain reaches
/// `target_db` on its rising branch.
pub fn calibrate_pump(system: &SystemParams, opts: &CalibrationOptions) -> Result<PumpCalibration> {
    system.validate()?;
    if !(opts.growth > 1.0 && opts.amp_start > 0.0 && opts.tol_db > 0.0) {
        return Err(Error::param("calibration", "growth > 1, amp_start > 0, tol_db > 0 required"));
    }
    let wr = system.cavity.omega_r;
    let mut history = Vec::new();
    let mut gain = |amp: f64| -> Result<GainPoint> {
        let p = max_gain_point(
            system,
            amp,
            opts.beat,
            opts.probe_amplitude,
            wr + opts.window_lo,
            wr + opts.window_hi,
            opts.coarse_step,
            &opts.engine,
        )?;
        history.push((amp, p.parametric_gain_db));
        Ok(p)
    };
    let mut lo = 0.0;
    let mut amp = opts.amp_start;
    let mut hi_point = loop {
        let p = gain(amp)?;
        if (p.parametric_gain_db - opts.target_db).abs() < opts.tol_db {
            return Ok(PumpCalibration { amplitude: amp, point: p, history });
        }
        if p.parametric_gain_db > opts.target_db {
            break p;
        }
        lo = amp;
        amp *= opts.growth;
        if amp > opts.amp_max {
            return Err(Error::NotBracketed(format!(
                "gain stays below {} dB up to pump amplitude {}",
                opts.target_db, opts.amp_max
            )));
        }
    };
    let mut hi = amp;
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let p = gain(mid)?;
        if (p.parametric_gain_db - opts.target_db).abs() < opts.tol_db {
            return Ok(PumpCalibration { amplitude: mid, point: p, history });
        }
        if p.parametric_gain_db > opts.target_db {
            hi = mid;
            hi_point = p;
        } else {
            lo = mid;
        }
        if (hi - lo) < 1e-9 * hi {
            break;
        }
    }
    Err(Error::NotConverged {
        periods: opts.max_iterations,
        residual: hi_point.parametric_gain_db - opts.target_db,
    })
}
