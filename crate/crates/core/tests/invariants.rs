// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use sapa_core::fitting::{fit_coupled, CoupledParams, CoupledSample, Method, MinimizeOptions};
use sapa_core::meanfield::{integrate_periodic, MeanFieldState, PeriodicOptions};
use sapa_core::model::{build_rwa_model, presets, DriveTone};
use sapa_core::scans::{linear_response_transmission, pumped_response, EngineOptions};
use sapa_core::units::{hz_to_rad, uev_to_joule};
use sapa_core::C64;

fn drives(wr: f64, offset_hz: f64, beat_hz: f64, pump: f64, probe: f64, phase: f64) -> (DriveTone, DriveTone) {
    let ws = wr + hz_to_rad(offset_hz);
    (
        DriveTone::new(ws + hz_to_rad(beat_hz), pump, 0.0).unwrap(),
        DriveTone::new(ws, probe, phase).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_stay_in_bloch_ball(
        pump in 0.0f64..6e4,
        offset in -15e6f64..10e6,
        beat in prop_oneof![50e3f64..400e3, -400e3f64..-50e3],
        eps in -30.0f64..30.0,
    ) {
        let sys = presets::single_dot().with_detuning(0, uev_to_joule(eps));
        let (p, s) = drives(sys.cavity.omega_r, offset, beat, pump, 540.0, 0.0);
        let model = build_rwa_model(&sys, &p, &s).unwrap();
        let run = integrate_periodic(&model, &MeanFieldState::ground(1), &PeriodicOptions::default()).unwrap();
        prop_assert!(run.max_bloch_excess <= 1e-9, "excess {}", run.max_bloch_excess);
    }

    #[test]
    fn pump_off_response_is_linear_in_probe(scale in 0.1f64..10.0, offset in -20e6f64..20e6) {
        let sys = presets::single_dot();
        let opts = EngineOptions::default();
        let (p, s) = drives(sys.cavity.omega_r, offset, 100e3, 0.0, 10.0, 0.0);
        let (_, s2) = drives(sys.cavity.omega_r, offset, 100e3, 0.0, 10.0 * scale, 0.0);
        let t1 = pumped_response(&sys, &p, &s, None, &opts).unwrap();
        let t2 = pumped_response(&sys, &p, &s2, None, &opts).unwrap();
        prop_assert!((t1.transmission - t2.transmission).norm() < 1e-5 * t1.transmission.norm());
        prop_assert!((t2.harmonics.signal() / t1.harmonics.signal() - scale).norm() < 1e-5 * scale);
    }

    #[test]
    fn probe_phase_rotates_signal_and_conjugates_idler(phi in 0.0f64..std::f64::consts::TAU) {
        let sys = presets::single_dot();
        let opts = EngineOptions::default();
        let wr = sys.cavity.omega_r;
        let (p, s0) = drives(wr, -4.8e6, 100e3, 1.9e4, 540.0, 0.0);
        let (_, s1) = drives(wr, -4.8e6, 100e3, 1.9e4, 540.0, phi);
        let r0 = pumped_response(&sys, &p, &s0, None, &opts).unwrap();
        let r1 = pumped_response(&sys, &p, &s1, None, &opts).unwrap();
        // drive carries e^{−iφ}: signal follows it, the idler takes the conjugate phase
        let sig = C64::from_polar(1.0, -phi);
        let idl = C64::from_polar(1.0, phi);
        let tol = 1e-5;
        prop_assert!((r1.harmonics.signal() - r0.harmonics.signal() * sig).norm() < tol * r0.harmonics.signal().norm());
        prop_assert!((r1.harmonics.idler() - r0.harmonics.idler() * idl).norm() < tol * r0.harmonics.idler().norm());
        prop_assert!((r1.transmission - r0.transmission).norm() < tol * r0.transmission.norm());
    }
}

#[test]
fn weak_pump_matches_linear_response_across_detuning() {
    let opts = EngineOptions::default();
    for eps in [-20.0, 0.0, 20.0] {
        let sys = presets::single_dot().with_detuning(0, uev_to_joule(eps));
        for off in [-10e6, 0.0, 10e6] {
            let (p, s) = drives(sys.cavity.omega_r, off, 100e3, 0.0, 540.0, 0.0);
            let t = pumped_response(&sys, &p, &s, None, &opts).unwrap().transmission;
            let lin = linear_response_transmission(s.frequency, &sys).unwrap();
            assert!((t - lin).norm() < 1e-3 * lin.norm(), "eps {eps} off {off}: {t} vs {lin}");
        }
    }
}

#[test]
fn zero_coupling_fit_drives_g_to_zero() {
    let sys = presets::single_dot();
    let truth = CoupledParams {
        g_c: 0.0,
        gamma_2: sys.dqds[0].gamma_2(),
        t_c: sys.dqds[0].t_c,
        omega_r: sys.cavity.omega_r,
        kappa: sys.cavity.kappa_total(),
        scale: 1.0,
    };
    let mut data = Vec::new();
    for i in 0..=10 {
        let eps = uev_to_joule(-30.0 + 6.0 * i as f64);
        for k in 0..=30 {
            let w = truth.omega_r + hz_to_rad(-30e6 + 2e6 * k as f64);
            let a = truth.amplitude(w, eps) * (1.0 + 1e-3 * (((i * 31 + k) * 7919) % 13) as f64 / 13.0);
            data.push(CoupledSample { omega: w, epsilon: eps, amplitude: a });
        }
    }
    let init = CoupledParams { g_c: hz_to_rad(30e6), ..truth };
    let fit = fit_coupled(&data, &init, &["gamma_2", "t_c"], Method::GaussNewton, &MinimizeOptions::default()).unwrap();
    let g = fit.get("g_c").unwrap();
    assert!(g < hz_to_rad(3e6), "g/2π = {} Hz", g / hz_to_rad(1.0));
}

#[test]
fn fit_rejects_nan_data() {
    let s = CoupledSample { omega: 1.0, epsilon: 0.0, amplitude: f64::NAN };
    let p = CoupledParams { g_c: 1.0, gamma_2: 1.0, t_c: 1e-24, omega_r: 1.0, kappa: 1.0, scale: 1.0 };
    assert!(fit_coupled(&[s; 10], &p, &[], Method::Simplex, &MinimizeOptions::default()).is_err());
}
