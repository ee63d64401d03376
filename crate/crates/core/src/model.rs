// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical parameters of the cavity and the double quantum dots, derived
//! qubit quantities, and the two model builders: the pump-frame rotating-wave
//! model used by the production engines and the lab-frame model used to
//! certify the rotating-wave reduction.
//!
//! Sign conventions. A double dot in the charge basis `{|R⟩, |L⟩}` has
//! `H_q = ½ε σz + t_c σx`, and couples to the cavity through
//! `ħ g_c σz (a + a†)`. In the qubit eigenbasis the coupling splits into a
//! transverse part `g_t = g_c · 2t_c/ħω_q` and a longitudinal part
//! `g_l = g_c · ε/ħω_q`. A coherent tone `A cos(ωt + φ)` of flux amplitude
//! `A` enters the cavity through the input port as the complex drive
//! `√κ_in · A · e^{−iφ}`.

use crate::hilbert::{pauli, CollapseOp, CompositeSpace, OperatorMatrix, Pauli};
use crate::units::{self, HBAR};
use crate::{Error, Result, C64};

/// Rotating-wave reductions are rejected when `|ω_p − ω_s|` exceeds this
/// fraction of the pump frequency.
pub const MAX_RELATIVE_BEAT: f64 = 0.05;

/// Cavity mode and its port decay rates (all rad/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityParams {
    pub omega_r: f64,
    pub kappa_in: f64,
    pub kappa_out: f64,
    pub kappa_int: f64,
}

impl CavityParams {
    pub fn new(omega_r: f64, kappa_in: f64, kappa_out: f64, kappa_int: f64) -> Result<Self> {
        let c = Self {
            omega_r,
            kappa_in,
            kappa_out,
            kappa_int,
        };
        c.validate()?;
        Ok(c)
    }

    /// Lossless cavity with the total decay split evenly between the ports.
    pub fn symmetric(omega_r: f64, kappa_total: f64) -> Result<Self> {
        Self::new(omega_r, kappa_total / 2.0, kappa_total / 2.0, 0.0)
    }

    pub fn kappa_total(&self) -> f64 {
        self.kappa_in + self.kappa_out + self.kappa_int
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return Err(Error::param("omega_r", "cavity frequency must be positive"));
        }
        for (name, v) in [
            ("kappa_in", self.kappa_in),
            ("kappa_out", self.kappa_out),
            ("kappa_int", self.kappa_int),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("decay rate must be >= 0, got {v}")));
            }
        }
        if self.kappa_total() <= 0.0 {
            return Err(Error::param("kappa", "total cavity decay rate must be > 0"));
        }
        Ok(())
    }
}

/// One double quantum dot. Energies in joules, rates in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DqdParams {
    pub epsilon: f64,
    pub t_c: f64,
    pub g_c: f64,
    /// Energy relaxation rate.
    pub gamma_1: f64,
    /// Pure dephasing rate; the transverse rate is `γ₂ = γ₁/2 + γ_φ`.
    pub gamma_phi: f64,
    /// Gate lever arm in eV per V.
    pub lever_arm: f64,
}

impl DqdParams {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() {
            return Err(Error::param("epsilon", "detuning must be finite"));
        }
        if !(self.t_c >= 0.0 && self.t_c.is_finite()) {
            return Err(Error::param("t_c", format!("tunnel coupling must be >= 0, got {}", self.t_c)));
        }
        if !(self.g_c >= 0.0 && self.g_c.is_finite()) {
            return Err(Error::param("g_c", "coupling must be >= 0"));
        }
        for (name, v) in [("gamma_1", self.gamma_1), ("gamma_phi", self.gamma_phi)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("rate must be >= 0, got {v}")));
            }
        }
        if !self.lever_arm.is_finite() {
            return Err(Error::param("lever_arm", "lever arm must be finite"));
        }
        Ok(())
    }

    /// Transition frequency `√(ε² + 4t_c²)/ħ`.
    pub fn omega_q(&self) -> f64 {
        qubit_frequency(self.epsilon, self.t_c)
    }

    pub fn gamma_2(&self) -> f64 {
        self.gamma_1 / 2.0 + self.gamma_phi
    }

    pub fn couplings(&self) -> Result<(f64, f64)> {
        effective_couplings(self.epsilon, self.t_c, self.g_c)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..*self }
    }

    pub fn with_coupling(&self, g_c: f64) -> Self {
        Self { g_c, ..*self }
    }
}

/// Cavity plus one or two double dots.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub cavity: CavityParams,
    pub dqds: Vec<DqdParams>,
}

impl SystemParams {
    pub fn new(cavity: CavityParams, dqds: Vec<DqdParams>) -> Result<Self> {
        let s = Self { cavity, dqds };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        if !(1..=2).contains(&self.dqds.len()) {
            return Err(Error::param(
                "dqds",
                format!("expected 1 or 2 double dots, got {}", self.dqds.len()),
            ));
        }
        for d in &self.dqds {
            d.validate()?;
        }
        Ok(())
    }

    /// Copy with every coupling set to zero (the Coulomb-blockade surrogate).
    pub fn uncoupled(&self) -> Self {
        Self {
            cavity: self.cavity,
            dqds: self.dqds.iter().map(|d| d.with_coupling(0.0)).collect(),
        }
    }

    /// Copy with dot `index` moved to detuning `epsilon`.
    pub fn with_detuning(&self, index: usize, epsilon: f64) -> Self {
        let mut s = self.clone();
        if let Some(d) = s.dqds.get_mut(index) {
            d.epsilon = epsilon;
        }
        s
    }
}

/// A coherent input tone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveTone {
    /// Angular frequency (rad/s).
    pub frequency: f64,
    /// Flux amplitude in √(photons/s).
    pub amplitude: f64,
    /// Phase φ of `A cos(ωt + φ)`.
    pub phase: f64,
}

impl DriveTone {
    pub fn new(frequency: f64, amplitude: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::param("amplitude", format!("must be >= 0, got {amplitude}")));
        }
        if !(frequency.is_finite() && phase.is_finite()) {
            return Err(Error::param("frequency", "tone frequency and phase must be finite"));
        }
        Ok(Self {
            frequency,
            amplitude,
            phase,
        })
    }

    pub fn off(frequency: f64) -> Self {
        Self {
            frequency,
            amplitude: 0.0,
            phase: 0.0,
        }
    }

    /// `A · e^{−iφ}`.
    pub fn complex_amplitude(&self) -> C64 {
        C64::from_polar(self.amplitude, -self.phase)
    }
}

/// Transition frequency `√(ε² + 4t_c²)/ħ` (energies in joules, result in rad/s).
pub fn qubit_frequency(epsilon: f64, t_c: f64) -> f64 {
    epsilon.hypot(2.0 * t_c) / HBAR
}

/// Transverse and longitudinal parts of `g_c σz` in the qubit eigenbasis.
pub fn effective_couplings(epsilon: f64, t_c: f64, g_c: f64) -> Result<(f64, f64)> {
    let norm = epsilon.hypot(2.0 * t_c);
    if norm == 0.0 {
        return Err(Error::param(
            "epsilon, t_c",
            "qubit eigenbasis undefined at epsilon = t_c = 0",
        ));
    }
    Ok((g_c * 2.0 * t_c / norm, g_c * epsilon / norm))
}

/// Detuning energy (J) produced by a gate voltage change.
pub fn gate_to_detuning(delta_v: f64, lever_arm: f64) -> f64 {
    lever_arm * units::ELEMENTARY_CHARGE * delta_v
}

/// Inverse of [`gate_to_detuning`].
pub fn detuning_to_gate(epsilon: f64, lever_arm: f64) -> f64 {
    epsilon / (lever_arm * units::ELEMENTARY_CHARGE)
}

/// Flux amplitude √(P/ħω) of a tone with power `power_dbm` at the device.
pub fn power_to_amplitude(power_dbm: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::param("omega", "frequency must be positive"));
    }
    Ok((units::dbm_to_watts(power_dbm) / (HBAR * omega)).sqrt())
}

/// Inverse of [`power_to_amplitude`].
pub fn amplitude_to_power(amplitude: f64, omega: f64) -> f64 {
    units::watts_to_dbm(amplitude * amplitude * HBAR * omega)
}

/// One qubit in the pump frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RwaQubit {
    /// `ω_q − ω_p`.
    pub delta_q: f64,
    pub g_transverse: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
}

/// Pump-frame rotating-wave model.
///
/// Drives enter `d⟨a⟩/dt` as `−i(ε_p + ε_s e^{+iΔω t})` with `Δω = ω_p − ω_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct RwaModel {
    /// `ω_c − ω_p`.
    pub delta_c: f64,
    pub kappa_in: f64,
    pub kappa_out: f64,
    pub kappa_int: f64,
    pub qubits: Vec<RwaQubit>,
    /// `ε_p = √κ_in · A_p e^{−iφ_p}`.
    pub pump_drive: C64,
    /// `ε_s = √κ_in · A_s e^{−iφ_s}`.
    pub probe_drive: C64,
    /// `Δω = ω_p − ω_s`.
    pub beat: f64,
    pub pump_frequency: f64,
}

impl RwaModel {
    pub fn kappa_total(&self) -> f64 {
        self.kappa_in + self.kappa_out + self.kappa_int
    }

    /// Beat period `2π/|Δω|`.
    pub fn beat_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.beat.abs()
    }

    pub fn probe_frequency(&self) -> f64 {
        self.pump_frequency - self.beat
    }
}

/// Reduces the lab-frame system to the pump-frame rotating-wave model.
///
/// Counter-rotating transverse terms and the longitudinal coupling (which
/// oscillates at the pump frequency in this frame) are dropped.
pub fn build_rwa_model(
    system: &SystemParams,
    pump: &DriveTone,
    probe: &DriveTone,
) -> Result<RwaModel> {
    system.validate()?;
    if !(pump.frequency > 0.0) {
        return Err(Error::param("pump.frequency", "must be positive"));
    }
    let beat = pump.frequency - probe.frequency;
    if beat == 0.0 {
        return Err(Error::param(
            "beat",
            "pump and probe coincide; treat a degenerate drive as a single tone",
        ));
    }
    if beat.abs() > MAX_RELATIVE_BEAT * pump.frequency {
        return Err(Error::param(
            "beat",
            format!(
                "|ω_p − ω_s| = {:.3e} rad/s is not small against ω_p",
                beat.abs()
            ),
        ));
    }
    let kin_sqrt = system.cavity.kappa_in.sqrt();
    let qubits = system
        .dqds
        .iter()
        .map(|d| {
            let (g_t, _g_l) = d.couplings()?;
            Ok(RwaQubit {
                delta_q: d.omega_q() - pump.frequency,
                g_transverse: g_t,
                gamma_1: d.gamma_1,
                gamma_2: d.gamma_2(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RwaModel {
        delta_c: system.cavity.omega_r - pump.frequency,
        kappa_in: system.cavity.kappa_in,
        kappa_out: system.cavity.kappa_out,
        kappa_int: system.cavity.kappa_int,
        qubits,
        pump_drive: pump.complex_amplitude() * kin_sqrt,
        probe_drive: probe.complex_amplitude() * kin_sqrt,
        beat,
        pump_frequency: pump.frequency,
    })
}

/// A drive term `c(t)·O + c(t)*·O†` with `c(t) = Σ_k c_k e^{−iω_k t}`.
#[derive(Clone, Debug)]
pub struct DriveTerm {
    pub op: OperatorMatrix,
    /// `(c_k, ω_k)` pairs.
    pub tones: Vec<(C64, f64)>,
}

impl DriveTerm {
    pub fn coefficient(&self, t: f64) -> C64 {
        self.tones
            .iter()
            .map(|(c, w)| c * C64::from_polar(1.0, -w * t))
            .sum()
    }
}

/// Time-dependent Hamiltonian `H(t) = H₀ + Σ (c(t)O + h.c.)` (rad/s) with its
/// dissipators, on a [`CompositeSpace`].
#[derive(Clone, Debug)]
pub struct QuantumModel {
    pub space: CompositeSpace,
    pub h_static: OperatorMatrix,
    pub drives: Vec<DriveTerm>,
    pub collapse_ops: Vec<CollapseOp>,
}

impl QuantumModel {
    pub fn hamiltonian(&self, t: f64) -> Result<OperatorMatrix> {
        let mut h = self.h_static.clone();
        for d in &self.drives {
            let c = d.coefficient(t);
            let term = &d.op.scale(c) + &d.op.dagger().scale(c.conj());
            h = &h + &term;
        }
        h.into_hermitian()
    }
}

/// Eigenbasis operators `(σ₋', σz')` of `½ε σz + t_c σx` in the charge basis.
pub fn qubit_eigen_operators(epsilon: f64, t_c: f64) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let norm = epsilon.hypot(2.0 * t_c);
    if norm == 0.0 {
        return Err(Error::param(
            "epsilon, t_c",
            "qubit eigenbasis undefined at epsilon = t_c = 0",
        ));
    }
    let (cos_t, sin_t) = (epsilon / norm, 2.0 * t_c / norm);
    let theta = sin_t.atan2(cos_t);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    // |e⟩ = (c, s), |g⟩ = (−s, c)
    let e = [c, s];
    let g = [-s, c];
    let outer = |u: [f64; 2], v: [f64; 2]| {
        nalgebra::DMatrix::from_fn(2, 2, |i, j| C64::new(u[i] * v[j], 0.0))
    };
    let sigma_minus = OperatorMatrix::new(outer(g, e))?;
    let sigma_z = OperatorMatrix::new_hermitian(outer(e, e) - outer(g, g))?;
    Ok((sigma_minus, sigma_z))
}

/// Lab-frame model with the full `σz(a + a†)` coupling and both cosine tones.
///
/// Collapse operators: `√κ_total·a`, per dot `√γ₁·σ₋'` and `√(γ_φ/2)·σz'` in
/// the qubit eigenbasis. Only practical at scaled-down frequencies.
pub fn build_lab_model(
    system: &SystemParams,
    tones: &[DriveTone],
    n_max: usize,
) -> Result<QuantumModel> {
    system.validate()?;
    let space = CompositeSpace::new(system.dqds.len(), n_max)?;
    let a = space.annihilation()?;
    let x_cav = &a + &a.dagger();
    let mut h = (&a.dagger() * &a).scale_real(system.cavity.omega_r);
    let mut collapse_ops = vec![CollapseOp::new(system.cavity.kappa_total(), a.clone())?];
    for (j, d) in system.dqds.iter().enumerate() {
        let sz = space.qubit(j, &pauli(Pauli::Z))?;
        let sx = space.qubit(j, &pauli(Pauli::X))?;
        h = &h + &sz.scale_real(d.epsilon / (2.0 * HBAR));
        h = &h + &sx.scale_real(d.t_c / HBAR);
        h = &h + &(&sz * &x_cav).scale_real(d.g_c);
        let (sm, sze) = qubit_eigen_operators(d.epsilon, d.t_c)?;
        collapse_ops.push(CollapseOp::new(d.gamma_1, space.qubit(j, &sm)?)?);
        collapse_ops.push(CollapseOp::new(d.gamma_phi / 2.0, space.qubit(j, &sze)?)?);
    }
    let kin_sqrt = system.cavity.kappa_in.sqrt();
    let drive = DriveTerm {
        op: a.dagger(),
        tones: tones
            .iter()
            .map(|t| (t.complex_amplitude() * kin_sqrt, t.frequency))
            .collect(),
    };
    Ok(QuantumModel {
        space,
        h_static: h.into_hermitian()?,
        drives: vec![drive],
        collapse_ops,
    })
}

/// Pump-frame Jaynes–Cummings model equivalent to an [`RwaModel`].
///
/// `H = Δ_c a†a + Σ_j [½Δ_q σz + g_t(σ₊a + σ₋a†)] + (ε_p + ε_s e^{iΔωt}) a† + h.c.`
/// with qubits in the eigenbasis ordering `{|e⟩, |g⟩}`.
pub fn build_pump_frame_model(model: &RwaModel, n_max: usize) -> Result<QuantumModel> {
    let space = CompositeSpace::new(model.qubits.len(), n_max)?;
    let a = space.annihilation()?;
    let ad = a.dagger();
    let mut h = (&ad * &a).scale_real(model.delta_c);
    let mut collapse_ops = vec![CollapseOp::new(model.kappa_total(), a.clone())?];
    for (j, q) in model.qubits.iter().enumerate() {
        let sz = space.qubit(j, &pauli(Pauli::Z))?;
        let sm = space.qubit(j, &pauli(Pauli::Minus))?;
        let sp = sm.dagger();
        h = &h + &sz.scale_real(q.delta_q / 2.0);
        h = &h + &(&(&sp * &a) + &(&sm * &ad)).scale_real(q.g_transverse);
        collapse_ops.push(CollapseOp::new(q.gamma_1, sm)?);
        let gamma_phi = (q.gamma_2 - q.gamma_1 / 2.0).max(0.0);
        collapse_ops.push(CollapseOp::new(gamma_phi / 2.0, sz)?);
    }
    // c(t) = ε_p + ε_s e^{+iΔωt}, i.e. tones at frequencies 0 and −Δω
    let drive = DriveTerm {
        op: ad,
        tones: vec![(model.pump_drive, 0.0), (model.probe_drive, -model.beat)],
    };
    Ok(QuantumModel {
        space,
        h_static: h.into_hermitian()?,
        drives: vec![drive],
        collapse_ops,
    })
}

/// Parameter sets reported for the measured device.
pub mod presets {
    use super::*;
    use crate::units::{hz_to_joule, hz_to_rad};

    pub const CAVITY_FREQUENCY_HZ: f64 = 5.198e9;
    pub const KAPPA_HZ: f64 = 14e6;
    pub const DQD1_GAP_HZ: f64 = 5.32e9;
    pub const DQD2_DISPERSIVE_GAP_HZ: f64 = 5.8e9;
    pub const COUPLING_HZ: f64 = 60e6;
    pub const DECOHERENCE_HZ: f64 = 100e6;
    pub const LEVER_ARM: f64 = 0.072;

    pub fn cavity() -> CavityParams {
        CavityParams::symmetric(hz_to_rad(CAVITY_FREQUENCY_HZ), hz_to_rad(KAPPA_HZ))
            .expect("preset cavity is valid")
    }

    /// A dot with gap `2t_c = h·gap_hz` at detuning zero, coupling 2π×60 MHz and
    /// transverse decoherence 2π×100 MHz split as γ₁ = γ₂.
    pub fn dqd_with_gap(gap_hz: f64) -> DqdParams {
        let gamma_2 = hz_to_rad(DECOHERENCE_HZ);
        DqdParams {
            epsilon: 0.0,
            t_c: hz_to_joule(gap_hz) / 2.0,
            g_c: hz_to_rad(COUPLING_HZ),
            gamma_1: gamma_2,
            gamma_phi: gamma_2 / 2.0,
            lever_arm: LEVER_ARM,
        }
    }

    pub fn dqd1() -> DqdParams {
        dqd_with_gap(DQD1_GAP_HZ)
    }

    pub fn dqd2_dispersive() -> DqdParams {
        dqd_with_gap(DQD2_DISPERSIVE_GAP_HZ)
    }

    pub fn single_dot() -> SystemParams {
        SystemParams::new(cavity(), vec![dqd1()]).expect("preset system is valid")
    }

    pub fn readout_pair() -> SystemParams {
        SystemParams::new(cavity(), vec![dqd1(), dqd2_dispersive()]).expect("preset system is valid")
    }
}
