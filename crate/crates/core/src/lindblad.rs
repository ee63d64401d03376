// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Truncated master-equation oracle.
//!
//! Integrates `dρ/dt = L_t(ρ)` for a [`QuantumModel`] on the real-interleaved,
//! column-stacked `vec(ρ)`. The generator is applied matrix-free, so cost
//! scales as `dim³` per evaluation rather than `dim⁴`.

use nalgebra::DMatrix;

use crate::hilbert::{LindbladGenerator, OperatorMatrix};
use crate::meanfield::{demodulate_samples, HarmonicDecomposition};
use crate::model::QuantumModel;
use crate::ode::{Dopri5, Dopri5Options};
use crate::{Error, Result, C64};

/// Largest tolerated population of the top Fock level.
pub const CUTOFF_LIMIT: f64 = 1e-4;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-8;

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Rejects anything that is not a Hermitian, positive, unit-trace matrix.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("non-finite density matrix entry".into()));
        }
        let dev = (&entries - entries.adjoint()).camax();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = entries.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = (&entries + entries.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = herm.symmetric_eigenvalues().min();
        if min_eig < -EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { entries })
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    /// Basis state `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::DimensionMismatch(format!("basis index {k} >= {dim}")));
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self::new(m)
    }

    /// Lowest eigenvector of a Hermitian operator.
    pub fn ground_state_of(h: &OperatorMatrix) -> Result<Self> {
        let eig = h.entries().clone().symmetric_eigen();
        let k = eig.eigenvalues.imin();
        let psi: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
        Self::pure(&psi)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        op.expectation(&self.entries)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Top-Fock population that triggers [`Error::CutoffViolation`].
    pub cutoff_limit: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-11,
            cutoff_limit: CUTOFF_LIMIT,
        }
    }
}

/// Diagnostics gathered over the accepted steps of an evolution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvolveDiagnostics {
    pub max_trace_error: f64,
    pub max_top_population: f64,
    pub steps: usize,
}

/// Propagator over a [`QuantumModel`] that keeps its step size between calls.
pub struct Evolver<'m> {
    model: &'m QuantumModel,
    generator: LindbladGenerator,
    drive_ops: Vec<(DMatrix<C64>, DMatrix<C64>)>,
    top: DMatrix<C64>,
    integrator: Dopri5,
    opts: EvolveOptions,
    diagnostics: EvolveDiagnostics,
}

impl<'m> Evolver<'m> {
    pub fn new(model: &'m QuantumModel, opts: EvolveOptions) -> Result<Self> {
        let generator = LindbladGenerator::new(&model.h_static, &model.collapse_ops)?;
        let d = generator.dim();
        let drive_ops = model
            .drives
            .iter()
            .map(|t| (t.op.entries().clone(), t.op.entries().adjoint()))
            .collect();
        Ok(Self {
            model,
            generator,
            drive_ops,
            top: model.space.top_fock_projector()?.into_entries(),
            integrator: Dopri5::new(
                2 * d * d,
                Dopri5Options {
                    rtol: opts.rtol,
                    atol: opts.atol,
                    ..Default::default()
                },
            ),
            opts,
            diagnostics: EvolveDiagnostics::default(),
        })
    }

    pub fn diagnostics(&self) -> EvolveDiagnostics {
        self.diagnostics
    }

    /// Advances `rho` from `t0` to `t1` in place.
    pub fn step(&mut self, rho: &mut DensityMatrix, t0: f64, t1: f64) -> Result<()> {
        let d = self.generator.dim();
        if rho.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs model dim {d}",
                rho.dim()
            )));
        }
        let mut y = vec![0.0; 2 * d * d];
        pack(&rho.entries, &mut y);
        let generator = &self.generator;
        let drives = &self.model.drives;
        let drive_ops = &self.drive_ops;
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let r = unpack(y, d);
            let extra = (!drives.is_empty()).then(|| {
                let mut h = DMatrix::<C64>::zeros(d, d);
                for (term, (op, op_dag)) in drives.iter().zip(drive_ops) {
                    let c = term.coefficient(t);
                    h += op * c + op_dag * c.conj();
                }
                h
            });
            pack(&generator.apply_with(extra.as_ref(), &r), dy);
        };
        let top = &self.top;
        let diag = &mut self.diagnostics;
        self.integrator.integrate_observed(rhs, t0, t1, &mut y, |_, ys| {
            let mut tr = C64::new(0.0, 0.0);
            let mut top_pop = 0.0;
            for k in 0..d {
                let idx = 2 * (k * d + k);
                tr += C64::new(ys[idx], ys[idx + 1]);
            }
            for k in 0..d {
                if top[(k, k)].re != 0.0 {
                    top_pop += ys[2 * (k * d + k)];
                }
            }
            diag.max_trace_error = diag.max_trace_error.max((tr - 1.0).norm());
            diag.max_top_population = diag.max_top_population.max(top_pop);
            diag.steps += 1;
        })?;
        if self.diagnostics.max_top_population > self.opts.cutoff_limit {
            return Err(Error::CutoffViolation {
                population: self.diagnostics.max_top_population,
                limit: self.opts.cutoff_limit,
            });
        }
        let mut out = unpack(&y, d);
        // remove the O(tol) anti-Hermitian drift before revalidation
        out = (&out + out.adjoint()) * C64::new(0.5, 0.0);
        rho.entries = out;
        Ok(())
    }
}

fn pack(m: &DMatrix<C64>, y: &mut [f64]) {
    for (k, z) in m.iter().enumerate() {
        y[2 * k] = z.re;
        y[2 * k + 1] = z.im;
    }
}

fn unpack(y: &[f64], d: usize) -> DMatrix<C64> {
    DMatrix::from_iterator(d, d, y.chunks_exact(2).map(|p| C64::new(p[0], p[1])))
}

/// Evolves `rho0` from `t0` to `t_final`.
pub fn evolve(
    rho0: &DensityMatrix,
    model: &QuantumModel,
    t0: f64,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<(DensityMatrix, EvolveDiagnostics)> {
    let mut ev = Evolver::new(model, *opts)?;
    let mut rho = rho0.clone();
    ev.step(&mut rho, t0, t_final)?;
    let rho = DensityMatrix::new(rho.entries)?;
    Ok((rho, ev.diagnostics()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OraclePeriodicOptions {
    pub evolve: EvolveOptions,
    pub settle: f64,
    pub max_periods: usize,
    pub samples_per_period: usize,
}

impl Default for OraclePeriodicOptions {
    fn default() -> Self {
        Self {
            evolve: EvolveOptions::default(),
            settle: 1e-6,
            max_periods: 200,
            samples_per_period: 64,
        }
    }
}

/// Result of [`periodic_expectation`].
#[derive(Clone, Debug)]
pub struct OraclePeriodic {
    pub harmonics: HarmonicDecomposition,
    pub final_state: DensityMatrix,
    pub periods: usize,
    pub residual: f64,
    pub diagnostics: EvolveDiagnostics,
}

/// Harmonics of `tr(ρ(t) O)` over one converged period `2π/|beat|`, starting
/// from `rho0` at `t = 0`.
pub fn periodic_expectation(
    model: &QuantumModel,
    rho0: &DensityMatrix,
    observable: &OperatorMatrix,
    beat: f64,
    n_harmonics: usize,
    opts: &OraclePeriodicOptions,
) -> Result<OraclePeriodic> {
    if beat == 0.0 || !beat.is_finite() {
        return Err(Error::param("beat", "must be nonzero"));
    }
    if observable.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch("observable vs state dimension".into()));
    }
    let n = opts.samples_per_period;
    let period = 2.0 * std::f64::consts::PI / beat.abs();
    let dt = period / n as f64;
    let mut ev = Evolver::new(model, opts.evolve)?;
    let mut rho = rho0.clone();
    let mut prev: Option<Vec<C64>> = None;
    let mut residual = f64::INFINITY;
    for p in 0..opts.max_periods {
        let t_start = p as f64 * period;
        let mut times = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        times.push(t_start);
        values.push(rho.expectation(observable));
        for k in 0..n {
            let t0 = t_start + k as f64 * dt;
            let t1 = t_start + (k + 1) as f64 * dt;
            ev.step(&mut rho, t0, t1)?;
            times.push(t1);
            values.push(rho.expectation(observable));
        }
        let current = values[..n].to_vec();
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
                let harmonics = demodulate_samples(&times, &values, beat, n_harmonics)?;
                return Ok(OraclePeriodic {
                    harmonics,
                    final_state: DensityMatrix::new(rho.entries)?,
                    periods: p + 1,
                    residual,
                    diagnostics: ev.diagnostics(),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::fock_number;
    use crate::meanfield::{self, MeanFieldState, PeriodicOptions};
    use crate::model::{
        build_lab_model, build_pump_frame_model, CavityParams, DqdParams, DriveTone, RwaModel,
        RwaQubit, SystemParams,
    };
    use crate::units::{hz_to_joule, hz_to_rad, HBAR};

    fn ground(model: &QuantumModel) -> DensityMatrix {
        // qubit eigenbasis {|e⟩,|g⟩}: ground is the odd qubit index, Fock 0
        let cav = model.space.n_max + 1;
        let mut k = 0;
        for _ in 0..model.space.n_qubits {
            k = k * 2 + 1;
        }
        DensityMatrix::basis(model.space.dim(), k * cav).unwrap()
    }

    fn empty_cavity(delta_c: f64, probe: f64) -> RwaModel {
        RwaModel {
            delta_c,
            kappa_in: 0.5,
            kappa_out: 0.5,
            kappa_int: 0.0,
            qubits: vec![],
            pump_drive: C64::new(0.0, 0.0),
            probe_drive: C64::new(probe, 0.0),
            beat: 0.2,
            pump_frequency: 100.0,
        }
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::basis(3, 1).is_ok());
        let mut bad = DMatrix::zeros(2, 2);
        bad[(0, 0)] = C64::new(1.5, 0.0);
        bad[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(bad).is_err());
        let mut nh = DMatrix::zeros(2, 2);
        nh[(0, 0)] = C64::new(1.0, 0.0);
        nh[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(nh), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn driven_empty_cavity_coherent_state() {
        let rwa = empty_cavity(0.3, 0.05);
        let qm = build_pump_frame_model(&rwa, 4).unwrap();
        let a = qm.space.annihilation().unwrap();
        let out = periodic_expectation(
            &qm,
            &ground(&qm),
            &a,
            rwa.beat,
            3,
            &OraclePeriodicOptions::default(),
        )
        .unwrap();
        // a_{−1} = −iε_s/(i(Δ_c + Δω) + κ/2)
        let expected = -C64::new(0.0, 1.0) * rwa.probe_drive
            / (C64::new(0.0, rwa.delta_c + rwa.beat) + rwa.kappa_total() / 2.0);
        assert!((out.harmonics.signal() - expected).norm() < 1e-6 * expected.norm().max(1.0));
        assert!(out.diagnostics.max_trace_error < 1e-8);
    }

    #[test]
    fn cutoff_violation_reported() {
        let mut rwa = empty_cavity(0.0, 0.0);
        rwa.pump_drive = C64::new(2.0, 0.0);
        let qm = build_pump_frame_model(&rwa, 3).unwrap();
        let err = evolve(&ground(&qm), &qm, 0.0, 20.0, &EvolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::CutoffViolation { .. }));
        assert!(err.to_string().contains("increase n_max"));
    }

    fn single_qubit_rwa(g: f64, pump: f64, probe: f64) -> RwaModel {
        RwaModel {
            delta_c: 0.0,
            kappa_in: 0.5,
            kappa_out: 0.5,
            kappa_int: 0.0,
            qubits: vec![RwaQubit {
                delta_q: 0.4,
                g_transverse: g,
                gamma_1: 1.0,
                gamma_2: 1.0,
            }],
            pump_drive: C64::new(pump, 0.0),
            probe_drive: C64::new(probe, 0.0),
            beat: 0.25,
            pump_frequency: 100.0,
        }
    }

    fn meanfield_signal(rwa: &RwaModel) -> C64 {
        let run = meanfield::integrate_periodic(
            rwa,
            &MeanFieldState::ground(rwa.qubits.len()),
            &PeriodicOptions::default(),
        )
        .unwrap();
        meanfield::demodulate(&run.trajectory, rwa.beat, 4)
            .unwrap()
            .signal()
    }

    fn oracle_signal(rwa: &RwaModel, n_max: usize) -> C64 {
        let qm = build_pump_frame_model(rwa, n_max).unwrap();
        let a = qm.space.annihilation().unwrap();
        periodic_expectation(&qm, &ground(&qm), &a, rwa.beat, 4, &OraclePeriodicOptions::default())
            .unwrap()
            .harmonics
            .signal()
    }

    #[test]
    fn uncoupled_qubit_matches_meanfield_exactly() {
        let rwa = single_qubit_rwa(0.0, 0.1, 0.05);
        let mf = meanfield_signal(&rwa);
        let q = oracle_signal(&rwa, 5);
        assert!((mf - q).norm() < 1e-6 * mf.norm(), "{mf} vs {q}");
    }

    #[test]
    fn linear_regime_matches_meanfield() {
        let rwa = single_qubit_rwa(0.8, 0.0, 0.01);
        let mf = meanfield_signal(&rwa);
        let q = oracle_signal(&rwa, 3);
        assert!((mf - q).norm() < 1e-2 * mf.norm(), "{mf} vs {q}");
    }

    #[test]
    fn cutoff_convergence() {
        let rwa = single_qubit_rwa(0.8, 0.15, 0.02);
        let a = oracle_signal(&rwa, 4);
        let b = oracle_signal(&rwa, 9);
        assert!((a - b).norm() < 1e-2 * b.norm(), "{a} vs {b}");
    }

    #[test]
    fn lab_frame_certifies_rwa_at_scaled_frequencies() {
        // 50 MHz-scale cavity, resonant qubit at ε = 0, weak probe at ω_r
        let omega_r = hz_to_rad(50e6);
        let cavity = CavityParams::symmetric(omega_r, hz_to_rad(1e6)).unwrap();
        let dqd = DqdParams {
            epsilon: 0.0,
            t_c: hz_to_joule(50e6) / 2.0,
            g_c: hz_to_rad(0.5e6),
            gamma_1: hz_to_rad(1e6),
            gamma_phi: hz_to_rad(0.5e6),
            lever_arm: 0.072,
        };
        let sys = SystemParams::new(cavity, vec![dqd]).unwrap();
        let probe_w = omega_r - hz_to_rad(0.5e6);
        let probe = DriveTone::new(probe_w, 40.0, 0.0).unwrap();
        let qm = build_lab_model(&sys, &[probe], 3).unwrap();
        let a = qm.space.annihilation().unwrap();
        let rho0 = DensityMatrix::ground_state_of(&qm.h_static).unwrap();
        let out = periodic_expectation(
            &qm,
            &rho0,
            &a,
            probe_w,
            2,
            &OraclePeriodicOptions {
                settle: 1e-4,
                max_periods: 2000,
                ..Default::default()
            },
        )
        .unwrap();
        // lab ⟨a(t)⟩ ∝ e^{−iω_s t}: harmonic +1 of the probe period
        let lab = out.harmonics.get(1).norm() * sys.cavity.kappa_out.sqrt() / probe.amplitude;
        let g_t = dqd.g_c;
        let k = sys.cavity.kappa_total();
        let wq = 2.0 * dqd.t_c / HBAR;
        let t = sys.cavity.kappa_in.sqrt() * sys.cavity.kappa_out.sqrt()
            / (C64::new(k / 2.0, omega_r - probe_w)
                + g_t * g_t / C64::new(dqd.gamma_1 / 2.0 + dqd.gamma_phi, wq - probe_w));
        assert!((lab - t.norm()).abs() < 0.02 * t.norm(), "lab {lab} vs rwa {}", t.norm());
        let n = out.final_state.expectation(&fock_number(3).map(|f| qm.space.cavity(&f).unwrap()).unwrap());
        assert!(n.re < 0.5);
    }
}
