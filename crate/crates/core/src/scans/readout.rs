// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{normalization_a0, parallel_map, pumped_response, EngineOptions};
use crate::meanfield::MeanFieldState;
use crate::metrics::{chain_noise_std, fwhm, snr, Baseline, MeasurementEnsemble, NoiseChain, NoiseScale};
use crate::model::{DriveTone, SystemParams};
use crate::{Error, Result, C64};

/// Settings for [`readout_sweep`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutConfig {
    /// Dot acting as the amplifier; the other is read out.
    pub sapa_index: usize,
    pub pump_amplitude: f64,
    pub beat: f64,
    pub probe_frequency: f64,
    /// Probe frequency with the amplifier off; `None` reuses `probe_frequency`.
    pub probe_frequency_off: Option<f64>,
    pub probe_amplitude: f64,
    /// SAPA dot detuning (J) while the amplifier is off; `None` leaves it in
    /// place and only turns the pump off.
    pub sapa_off_epsilon: Option<f64>,
    pub chain: NoiseChain,
    pub bandwidth_hz: f64,
    pub repeats: usize,
    pub seed: u64,
    pub engine: EngineOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutPoint {
    /// Deterministic transmission `t`.
    pub transmission: C64,
    /// Noisy repeats of `A/A₀`.
    pub ensemble: MeasurementEnsemble,
}

/// One amplifier setting swept over the target detuning.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutBranch {
    pub sapa_on: bool,
    pub points: Vec<ReadoutPoint>,
    /// Per-quadrature noise deviation in `A/A₀` units.
    pub noise_std: f64,
    pub a0: f64,
}

impl ReadoutBranch {
    /// Deterministic `A/A₀` per point.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.transmission.norm() / self.a0).collect()
    }

    fn extremes(&self) -> (usize, usize) {
        let a = self.amplitudes();
        let imax = (0..a.len()).max_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap_or(0);
        let imin = (0..a.len()).min_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap_or(0);
        (imax, imin)
    }

    /// Extinction `δA = max − min` of the deterministic `A/A₀`.
    pub fn contrast(&self) -> f64 {
        let (imax, imin) = self.extremes();
        let a = self.amplitudes();
        a[imax] - a[imin]
    }

    /// SNR of point `i1` against point `i0`.
    pub fn snr_between(&self, i1: usize, i0: usize) -> Result<f64> {
        let (p1, p0) = (self.points.get(i1), self.points.get(i0));
        match (p1, p0) {
            (Some(a), Some(b)) => snr(&a.ensemble, &b.ensemble),
            _ => Err(Error::param("index", "point index out of range")),
        }
    }

    /// Width in the target detuning of the feature `|A − A_edge|`.
    pub fn feature_width(&self, eps2: &[f64]) -> Result<f64> {
        let a = self.amplitudes();
        let edge = a[0];
        let dev: Vec<f64> = a.iter().map(|x| (x - edge).abs()).collect();
        fwhm(eps2, &dev, Baseline::Minimum)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutSweepResult {
    /// Target-dot detunings (J).
    pub eps2: Vec<f64>,
    pub pump_on: ReadoutBranch,
    pub pump_off: ReadoutBranch,
}

impl ReadoutSweepResult {
    /// Index of the largest `|ε₂|`, the reference far from the anticrossing.
    pub fn far_index(&self) -> usize {
        (0..self.eps2.len()).max_by(|&i, &j| self.eps2[i].abs().total_cmp(&self.eps2[j].abs())).unwrap_or(0)
    }

    /// Index of the smallest `|ε₂|`.
    pub fn zero_index(&self) -> usize {
        (0..self.eps2.len()).min_by(|&i, &j| self.eps2[i].abs().total_cmp(&self.eps2[j].abs())).unwrap_or(0)
    }

    /// SNR of a branch between `ε₂ ≫ g` and `ε₂ = 0`.
    pub fn snr(&self, sapa_on: bool) -> Result<f64> {
        let b = if sapa_on { &self.pump_on } else { &self.pump_off };
        b.snr_between(self.far_index(), self.zero_index())
    }

    pub fn snr_ratio(&self) -> Result<f64> {
        Ok(self.snr(true)? / self.snr(false)?)
    }
}

/// Sweeps the target dot's detuning with the SAPA on (pumped at its working
/// point) and off (unpumped, optionally parked), adding seeded
/// chain noise to `M` repeats per point.
///
/// Noise for point `k` of branch `b` (0 on, 1 off) comes from ChaCha8 stream
/// `2k + b` under `seed`, so output is independent of the worker count.
pub fn readout_sweep(
    system: &SystemParams,
    cfg: &ReadoutConfig,
    eps2: &[f64],
) -> Result<ReadoutSweepResult> {
    system.validate()?;
    if system.dqds.len() != 2 || cfg.sapa_index > 1 {
        return Err(Error::param("system", "readout needs two dots and sapa_index in {0, 1}"));
    }
    if cfg.repeats < 2 {
        return Err(Error::param("repeats", "at least 2 repeats required"));
    }
    if eps2.len() < 3 {
        return Err(Error::param("eps2", "at least 3 detuning points required"));
    }
    let target = 1 - cfg.sapa_index;
    let a0 = normalization_a0(system)?;
    let branches = parallel_map(2, |b| -> Result<ReadoutBranch> {
        let on = b == 0;
        let (pump_amp, base) = if on {
            (cfg.pump_amplitude, system.clone())
        } else {
            let parked = cfg.sapa_off_epsilon.map_or_else(
                || system.clone(),
                |e| system.with_detuning(cfg.sapa_index, e),
            );
            (0.0, parked)
        };
        let chain = if on {
            cfg.chain
        } else {
            NoiseChain { g_sapa_linear: 1.0, ..cfg.chain }
        };
        let sigma = chain_noise_std(
            &chain,
            &NoiseScale {
                bandwidth_hz: cfg.bandwidth_hz,
                probe_amplitude: cfg.probe_amplitude,
                a0,
            },
            on,
        )?;
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::param("noise", e.to_string()))?;
        let w_s = if on {
            cfg.probe_frequency
        } else {
            cfg.probe_frequency_off.unwrap_or(cfg.probe_frequency)
        };
        let pump = DriveTone::new(w_s + cfg.beat, pump_amp, 0.0)?;
        let probe = DriveTone::new(w_s, cfg.probe_amplitude, 0.0)?;
        let mut warm: Option<MeanFieldState> = None;
        let mut points = Vec::with_capacity(eps2.len());
        for (k, &e) in eps2.iter().enumerate() {
            let sys = base.with_detuning(target, e);
            let r = pumped_response(&sys, &pump, &probe, warm.as_ref(), &cfg.engine)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((2 * k + b) as u64);
            let clean = r.transmission / a0;
            let repeats = (0..cfg.repeats)
                .map(|_| {
                    let n = C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                    (clean + n).norm()
                })
                .collect();
            points.push(ReadoutPoint {
                transmission: r.transmission,
                ensemble: MeasurementEnsemble::new(repeats)?,
            });
            warm = Some(r.final_state);
        }
        Ok(ReadoutBranch {
            sapa_on: on,
            points,
            noise_std: sigma,
            a0,
        })
    });
    let mut it = branches.into_iter();
    let pump_on = it.next().expect("two branches")?;
    let pump_off = it.next().expect("two branches")?;
    Ok(ReadoutSweepResult {
        eps2: eps2.to_vec(),
        pump_on,
        pump_off,
    })
}
