// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment protocols built on the engines.
//!
//! Every scan returns its values in grid order no matter how many workers ran
//! it. Sweeps that warm-start the mean-field integrator do so along the
//! probe-frequency (or beat, or power) axis inside one work item, so results
//! do not depend on scheduling.

mod linear;
mod pumped;
mod readout;

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::meanfield::{self, HarmonicDecomposition, MeanFieldState, PeriodicOptions};
use crate::model::{build_rwa_model, DriveTone, SystemParams};
use crate::{Error, Result, C64};

pub use linear::{linear_response_transmission, normalization_a0, rabi_map};
pub use pumped::{
    calibrate_pump, compression_sweep, gain_map, max_gain_point, tone_spectrum, tune_map,
    CalibrationOptions, CompressionCurve, GainPoint, PumpCalibration, ToneLine, ToneSpectrum,
};
pub use readout::{readout_sweep, ReadoutBranch, ReadoutConfig, ReadoutPoint, ReadoutSweepResult};

/// Environment variable holding the worker count for parallel scans.
pub const WORKERS_ENV: &str = "SAPA_WORKERS";

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(worker_count())
            .build()
            .expect("thread pool")
    })
}

/// Maps `f` over `0..n` on the worker pool, returning results in index order.
pub(crate) fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Complex transmission on a 1D or 2D grid, with `axis1` running fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumMap {
    pub kind: String,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    /// Transmission `t` per point; NaN where the point failed.
    pub values: Vec<C64>,
    /// Normalisation constant `A₀`.
    pub a0: f64,
    /// Per-point failure messages; `None` marks a valid point.
    pub failures: Vec<Option<String>>,
    pub config_hash: Option<String>,
}

impl SpectrumMap {
    pub(crate) fn new(
        kind: &str,
        axis1: Axis,
        axis2: Option<Axis>,
        points: Vec<Result<C64>>,
        a0: f64,
    ) -> Result<Self> {
        if !(a0 > 0.0) {
            return Err(Error::param("a0", "normalisation must be positive"));
        }
        let n = axis1.len() * axis2.as_ref().map_or(1, Axis::len);
        if points.len() != n {
            return Err(Error::DimensionMismatch(format!("{} values for a {n}-point grid", points.len())));
        }
        let nan = C64::new(f64::NAN, f64::NAN);
        let (values, failures) = points
            .into_iter()
            .map(|p| match p {
                Ok(v) => (v, None),
                Err(e) => (nan, Some(e.to_string())),
            })
            .unzip();
        Ok(Self {
            kind: kind.into(),
            axis1,
            axis2,
            values,
            a0,
            failures,
            config_hash: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i2 * self.axis1.len() + i1
    }

    /// `A = |t|`.
    pub fn amplitude(&self, k: usize) -> f64 {
        self.values[k].norm()
    }

    /// `A/A₀`.
    pub fn normalized(&self, k: usize) -> f64 {
        self.values[k].norm() / self.a0
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.failures[k].is_none()
    }

    /// Normalised amplitudes along `axis1` at `axis2` index `i2`.
    pub fn cut(&self, i2: usize) -> Vec<f64> {
        (0..self.axis1.len()).map(|i1| self.normalized(self.index(i1, i2))).collect()
    }

    /// Largest valid normalised amplitude and its index.
    pub fn max_normalized(&self) -> Option<(usize, f64)> {
        (0..self.len())
            .filter(|&k| self.is_valid(k))
            .map(|k| (k, self.normalized(k)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Numerical settings shared by the pumped scans.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineOptions {
    pub periodic: PeriodicOptions,
    pub n_harmonics: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            periodic: PeriodicOptions::default(),
            n_harmonics: 4,
        }
    }
}

/// Converged pump-on response at one operating point.
#[derive(Clone, Debug)]
pub struct PumpedResponse {
    /// Signal transmission `i√κ_out a₋₁ / (A_s e^{−iφ_s})`.
    pub transmission: C64,
    pub harmonics: HarmonicDecomposition,
    pub final_state: MeanFieldState,
    pub periods: usize,
}

/// Runs the mean-field engine to its periodic steady state and demodulates.
pub fn pumped_response(
    system: &SystemParams,
    pump: &DriveTone,
    probe: &DriveTone,
    init: Option<&MeanFieldState>,
    opts: &EngineOptions,
) -> Result<PumpedResponse> {
    if !(probe.amplitude > 0.0) {
        return Err(Error::param("probe.amplitude", "transmission needs a nonzero probe"));
    }
    let model = build_rwa_model(system, pump, probe)?;
    let ground = MeanFieldState::ground(system.dqds.len());
    let run = meanfield::integrate_periodic(&model, init.unwrap_or(&ground), &opts.periodic)?;
    let harmonics = meanfield::demodulate(&run.trajectory, model.beat, opts.n_harmonics)?;
    let transmission = C64::new(0.0, 1.0) * system.cavity.kappa_out.sqrt() * harmonics.signal()
        / probe.complex_amplitude();
    Ok(PumpedResponse {
        transmission,
        harmonics,
        final_state: run.final_state().clone(),
        periods: run.periods,
    })
}

/// Pump-on signal sweep over `probe_freqs` with the pump at `ω_s + beat`,
/// warm-starting each point from its predecessor.
pub(crate) fn pumped_sweep(
    system: &SystemParams,
    pump_amplitude: f64,
    beat: f64,
    probe_amplitude: f64,
    probe_freqs: &[f64],
    opts: &EngineOptions,
) -> Vec<Result<PumpedResponse>> {
    let mut warm: Option<MeanFieldState> = None;
    probe_freqs
        .iter()
        .map(|&ws| {
            let point = DriveTone::new(ws + beat, pump_amplitude, 0.0)
                .and_then(|pump| Ok((pump, DriveTone::new(ws, probe_amplitude, 0.0)?)))
                .and_then(|(pump, probe)| pumped_response(system, &pump, &probe, warm.as_ref(), opts));
            warm = point.as_ref().ok().map(|r| r.final_state.clone());
            point
        })
        .collect()
}
