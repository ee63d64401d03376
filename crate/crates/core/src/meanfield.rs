// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! First-order cumulant (mean-field) dynamics in the pump frame.
//!
//! With expectations factorized, `⟨σz a⟩ → ⟨σz⟩⟨a⟩`, the cavity field `a`,
//! and for each dot `s = ⟨σ₋⟩` and `z = ⟨σz⟩` obey
//!
//! ```text
//! da/dt = −(iΔ_c + κ/2) a − i Σ_j g_j s_j − i(ε_p + ε_s e^{iΔωt})
//! ds/dt = −(iΔ_q + γ₂) s + i g z a
//! dz/dt = −γ₁ (z + 1) + 2i g (a* s − a s*)
//! ```
//!
//! The saturable two-level response is the only nonlinearity; with a strong
//! pump it mixes pump and probe into an idler at `2ω_p − ω_s`. Under a pump
//! plus a probe detuned by `Δω` the steady state is periodic in the beat
//! period `2π/|Δω|`; [`integrate_periodic`] finds it and [`demodulate`]
//! decomposes `a(t) = Σ_n a_n e^{−inΔωt}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::model::RwaModel;
use crate::ode::{Dopri5, Dopri5Options};
use crate::{Error, Result, C64};

/// Tolerance on the Bloch-ball bound for a valid state.
pub const BLOCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState {
    /// `⟨σ₋⟩`.
    pub s_minus: C64,
    /// `⟨σz⟩`.
    pub s_z: f64,
}

impl QubitState {
    pub const GROUND: Self = Self {
        s_minus: C64::new(0.0, 0.0),
        s_z: -1.0,
    };

    /// `|s|² − (1 − z²)/4`; positive values lie outside the Bloch ball.
    pub fn bloch_excess(&self) -> f64 {
        self.s_minus.norm_sqr() - (1.0 - self.s_z * self.s_z) / 4.0
    }
}

/// Semiclassical state: cavity amplitude (√photons) and per-dot Bloch data.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    pub a: C64,
    pub qubits: Vec<QubitState>,
}

impl MeanFieldState {
    /// Empty cavity with every dot in its ground state.
    pub fn ground(n_qubits: usize) -> Self {
        Self {
            a: C64::new(0.0, 0.0),
            qubits: vec![QubitState::GROUND; n_qubits],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.re.is_finite() && self.a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite cavity amplitude".into()));
        }
        for (j, q) in self.qubits.iter().enumerate() {
            if !(q.s_z >= -1.0 - BLOCH_TOL && q.s_z <= 1.0 + BLOCH_TOL) {
                return Err(Error::InvalidState(format!("qubit {j}: s_z = {} outside [-1, 1]", q.s_z)));
            }
            if q.bloch_excess() > BLOCH_TOL {
                return Err(Error::InvalidState(format!(
                    "qubit {j}: outside the Bloch ball by {:.3e}",
                    q.bloch_excess()
                )));
            }
        }
        Ok(())
    }

    /// Mean photon number `|a|²`.
    pub fn photons(&self) -> f64 {
        self.a.norm_sqr()
    }

    fn dim(&self) -> usize {
        2 + 3 * self.qubits.len()
    }

    fn write(&self, y: &mut [f64]) {
        y[0] = self.a.re;
        y[1] = self.a.im;
        for (j, q) in self.qubits.iter().enumerate() {
            y[2 + 3 * j] = q.s_minus.re;
            y[3 + 3 * j] = q.s_minus.im;
            y[4 + 3 * j] = q.s_z;
        }
    }

    fn read(y: &[f64]) -> Self {
        let n = (y.len() - 2) / 3;
        Self {
            a: C64::new(y[0], y[1]),
            qubits: (0..n)
                .map(|j| QubitState {
                    s_minus: C64::new(y[2 + 3 * j], y[3 + 3 * j]),
                    s_z: y[4 + 3 * j],
                })
                .collect(),
        }
    }
}

fn rhs(model: &RwaModel, t: f64, y: &[f64], dy: &mut [f64]) {
    let i = C64::new(0.0, 1.0);
    let a = C64::new(y[0], y[1]);
    let kappa = model.kappa_total();
    let drive = model.pump_drive + model.probe_drive * C64::from_polar(1.0, model.beat * t);
    let mut da = -(i * model.delta_c + kappa / 2.0) * a - i * drive;
    for (j, q) in model.qubits.iter().enumerate() {
        let s = C64::new(y[2 + 3 * j], y[3 + 3 * j]);
        let z = y[4 + 3 * j];
        let g = q.g_transverse;
        da -= i * g * s;
        let ds = -(i * q.delta_q + q.gamma_2) * s + i * g * z * a;
        // 2i g (a* s − a s*) = −4 g Im(a* s)
        let dz = -q.gamma_1 * (z + 1.0) - 4.0 * g * (a.conj() * s).im;
        dy[2 + 3 * j] = ds.re;
        dy[3 + 3 * j] = ds.im;
        dy[4 + 3 * j] = dz;
    }
    dy[0] = da.re;
    dy[1] = da.im;
}

/// Time derivative of the mean-field state.
pub fn derivative(state: &MeanFieldState, t: f64, model: &RwaModel) -> Result<MeanFieldState> {
    if state.qubits.len() != model.qubits.len() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits, model has {}",
            state.qubits.len(),
            model.qubits.len()
        )));
    }
    let mut y = vec![0.0; state.dim()];
    let mut dy = vec![0.0; state.dim()];
    state.write(&mut y);
    rhs(model, t, &y, &mut dy);
    Ok(MeanFieldState::read(&dy))
}

/// Sampled solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

impl Trajectory {
    pub fn cavity_amplitudes(&self) -> Vec<C64> {
        self.states.iter().map(|s| s.a).collect()
    }

    pub fn last_state(&self) -> Option<&MeanFieldState> {
        self.states.last()
    }

    /// Largest Bloch-ball excess over all samples and qubits.
    pub fn max_bloch_excess(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.qubits.iter().map(QubitState::bloch_excess))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicOptions {
    /// Relative tolerance of the integrator.
    pub tol_rel: f64,
    /// Relative L2 change of `a(t)` between successive periods that counts as
    /// settled.
    pub settle: f64,
    pub max_periods: usize,
    pub samples_per_period: usize,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-9,
            settle: 1e-6,
            max_periods: 200,
            samples_per_period: 128,
        }
    }
}

/// Outcome of [`integrate_periodic`] with convergence diagnostics.
#[derive(Clone, Debug)]
pub struct PeriodicRun {
    /// Final period, `samples_per_period + 1` samples including both ends.
    pub trajectory: Trajectory,
    /// Periods integrated, including the accepted one.
    pub periods: usize,
    /// Period-to-period residual of the accepted period.
    pub residual: f64,
    /// Largest Bloch-ball excess seen at any accepted integrator step.
    pub max_bloch_excess: f64,
}

impl PeriodicRun {
    pub fn final_state(&self) -> &MeanFieldState {
        self.trajectory
            .last_state()
            .expect("periodic trajectories are never empty")
    }
}

/// Integrates from `init` at `t = 0` until successive beat periods of `a(t)`
/// agree to `opts.settle`, returning the last period.
pub fn integrate_periodic(
    model: &RwaModel,
    init: &MeanFieldState,
    opts: &PeriodicOptions,
) -> Result<PeriodicRun> {
    if model.beat == 0.0 || !model.beat.is_finite() {
        return Err(Error::param("beat", "periodic integration needs a nonzero beat"));
    }
    if !(opts.tol_rel > 0.0 && opts.settle > 0.0) {
        return Err(Error::param("tolerances", "must be positive"));
    }
    if opts.samples_per_period < 64 {
        return Err(Error::param("samples_per_period", "at least 64 samples per period required"));
    }
    if init.qubits.len() != model.qubits.len() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits, model has {}",
            init.qubits.len(),
            model.qubits.len()
        )));
    }
    init.validate()?;

    let n = opts.samples_per_period;
    let period = model.beat_period();
    let dt = period / n as f64;
    let mut integrator = Dopri5::new(
        init.dim(),
        Dopri5Options {
            rtol: opts.tol_rel,
            atol: opts.tol_rel * 1e-3,
            h_max: dt,
            ..Default::default()
        },
    );
    let mut y = vec![0.0; init.dim()];
    init.write(&mut y);
    let n_q = model.qubits.len();
    let mut max_excess = f64::NEG_INFINITY;
    let f = |t: f64, y: &[f64], dy: &mut [f64]| rhs(model, t, y, dy);

    let mut prev: Option<Vec<C64>> = None;
    let mut residual = f64::INFINITY;
    for p in 0..opts.max_periods {
        let t_start = p as f64 * period;
        let mut times = Vec::with_capacity(n + 1);
        let mut states = Vec::with_capacity(n + 1);
        times.push(t_start);
        states.push(MeanFieldState::read(&y));
        for k in 0..n {
            let t0 = t_start + k as f64 * dt;
            let t1 = t_start + (k + 1) as f64 * dt;
            integrator.integrate_observed(f, t0, t1, &mut y, |_, ys| {
                for j in 0..n_q {
                    let s2 = ys[2 + 3 * j].powi(2) + ys[3 + 3 * j].powi(2);
                    let z = ys[4 + 3 * j];
                    max_excess = max_excess.max(s2 - (1.0 - z * z) / 4.0);
                }
            })?;
            times.push(t1);
            states.push(MeanFieldState::read(&y));
        }
        let current: Vec<C64> = states[..n].iter().map(|s| s.a).collect();
        if let Some(prev) = &prev {
            let diff: f64 = current
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let norm: f64 = current.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            residual = if norm > 0.0 { diff / norm } else { diff };
            if residual < opts.settle {
                return Ok(PeriodicRun {
                    trajectory: Trajectory { times, states },
                    periods: p + 1,
                    residual,
                    max_bloch_excess: max_excess,
                });
            }
        }
        prev = Some(current);
    }
    Err(Error::NotConverged {
        periods: opts.max_periods,
        residual,
    })
}

/// Integrates from `init` at `t0` and samples at the given increasing times.
pub fn integrate(
    model: &RwaModel,
    init: &MeanFieldState,
    t0: f64,
    sample_times: &[f64],
    tol_rel: f64,
) -> Result<Trajectory> {
    init.validate()?;
    let mut integrator = Dopri5::new(
        init.dim(),
        Dopri5Options {
            rtol: tol_rel,
            atol: tol_rel * 1e-3,
            ..Default::default()
        },
    );
    let mut y = vec![0.0; init.dim()];
    init.write(&mut y);
    let mut t = t0;
    let mut states = Vec::with_capacity(sample_times.len());
    for &ts in sample_times {
        integrator.integrate(|t, y, dy| rhs(model, t, y, dy), t, ts, &mut y)?;
        t = ts;
        states.push(MeanFieldState::read(&y));
    }
    Ok(Trajectory {
        times: sample_times.to_vec(),
        states,
    })
}

/// Fourier coefficients of a periodic cavity amplitude,
/// `a(t) = Σ_n a_n e^{−inΔωt}`, for `n ∈ [−N, N]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicDecomposition {
    pub beat: f64,
    pub coefficients: BTreeMap<i32, C64>,
}

impl HarmonicDecomposition {
    pub fn n_harmonics(&self) -> i32 {
        self.coefficients.keys().copied().max().unwrap_or(0)
    }

    pub fn get(&self, n: i32) -> C64 {
        self.coefficients.get(&n).copied().unwrap_or_default()
    }

    /// Component at the probe frequency `ω_s = ω_p − Δω`.
    pub fn signal(&self) -> C64 {
        self.get(-1)
    }

    /// Component at the idler frequency `2ω_p − ω_s`.
    pub fn idler(&self) -> C64 {
        self.get(1)
    }

    pub fn pump(&self) -> C64 {
        self.get(0)
    }

    /// Lab-frame angular frequency of harmonic `n`: `ω_p + nΔω`.
    pub fn lab_frequency(&self, n: i32, pump_frequency: f64) -> f64 {
        pump_frequency + n as f64 * self.beat
    }

    /// Whether the outermost harmonics are below 5 % of the largest one.
    pub fn window_converged(&self) -> bool {
        let n = self.n_harmonics();
        let max = self
            .coefficients
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        max == 0.0 || (self.get(n).norm() < 0.05 * max && self.get(-n).norm() < 0.05 * max)
    }
}

/// Harmonic decomposition of the cavity amplitude over one beat period.
pub fn demodulate(traj: &Trajectory, beat: f64, n_harmonics: usize) -> Result<HarmonicDecomposition> {
    demodulate_samples(&traj.times, &traj.cavity_amplitudes(), beat, n_harmonics)
}

/// Harmonic decomposition of samples `(t_k, v_k)` spanning one beat period
/// (both end points included).
pub fn demodulate_samples(
    times: &[f64],
    values: &[C64],
    beat: f64,
    n_harmonics: usize,
) -> Result<HarmonicDecomposition> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "{} times vs {} values",
            times.len(),
            values.len()
        )));
    }
    if beat == 0.0 || !beat.is_finite() {
        return Err(Error::param("beat", "must be nonzero"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidState("sample times must be strictly increasing".into()));
    }
    let period = 2.0 * PI / beat.abs();
    let span = times[times.len() - 1] - times[0];
    if (span - period).abs() > 1e-9 * period {
        return Err(Error::InvalidState(format!(
            "trajectory spans {span:.6e} s, expected one beat period {period:.6e} s"
        )));
    }
    let intervals = times.len() - 1;
    if intervals < 4 * n_harmonics.max(1) {
        return Err(Error::Aliasing {
            samples: intervals,
            harmonics: n_harmonics,
        });
    }
    let h = span / intervals as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    let (grid_t, grid_v) = if uniform {
        (times.to_vec(), values.to_vec())
    } else {
        let m = intervals.max(4 * n_harmonics);
        let grid: Vec<f64> = (0..=m).map(|k| times[0] + span * k as f64 / m as f64).collect();
        let vals = resample_cubic(times, values, &grid);
        (grid, vals)
    };
    let m = grid_t.len() - 1;
    let dt = span / m as f64;
    let nh = n_harmonics as i32;
    let mut coefficients = BTreeMap::new();
    for n in -nh..=nh {
        let mut acc = C64::new(0.0, 0.0);
        for (k, (&t, &v)) in grid_t.iter().zip(&grid_v).enumerate() {
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            acc += v * C64::from_polar(w, n as f64 * beat * t);
        }
        coefficients.insert(n, acc * dt / span);
    }
    Ok(HarmonicDecomposition { beat, coefficients })
}

/// Natural cubic spline interpolation of complex samples.
fn resample_cubic(x: &[f64], v: &[C64], at: &[f64]) -> Vec<C64> {
    let re: Vec<f64> = v.iter().map(|c| c.re).collect();
    let im: Vec<f64> = v.iter().map(|c| c.im).collect();
    let m_re = spline_second_derivatives(x, &re);
    let m_im = spline_second_derivatives(x, &im);
    at.iter()
        .map(|&t| {
            C64::new(
                spline_eval(x, &re, &m_re, t),
                spline_eval(x, &im, &m_im, t),
            )
        })
        .collect()
}

fn spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // tridiagonal system for interior second derivatives (Thomas algorithm)
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let c = h1 / 6.0;
        let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

fn spline_eval(x: &[f64], y: &[f64], m: &[f64], t: f64) -> f64 {
    let n = x.len();
    let k = match x.partition_point(|&xi| xi <= t) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let h = x[k + 1] - x[k];
    let a = (x[k + 1] - t) / h;
    let b = (t - x[k]) / h;
    a * y[k] + b * y[k + 1] + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0
}
