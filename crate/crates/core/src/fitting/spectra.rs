// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::minimize::Problem;
use super::{FitResult, Method, MinimizeOptions};
use crate::units::PLANCK;
use crate::{Error, Result, C64};

const MHZ: f64 = 2.0 * std::f64::consts::PI * 1e6;

/// Bare-cavity amplitude model `s (κ/2) / √((ω_r − ω)² + (κ/2)²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzianParams {
    pub omega_r: f64,
    pub kappa: f64,
    pub scale: f64,
}

pub fn lorentzian_amplitude(omega: f64, p: &LorentzianParams) -> f64 {
    let h = p.kappa / 2.0;
    p.scale * h / ((p.omega_r - omega).powi(2) + h * h).sqrt()
}

fn check_data(omega: &[f64], amplitude: &[f64], min_points: usize) -> Result<()> {
    if omega.len() != amplitude.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} frequencies, {} amplitudes",
            omega.len(),
            amplitude.len()
        )));
    }
    if omega.len() < min_points {
        return Err(Error::param("data", format!("at least {min_points} points required")));
    }
    if omega.iter().chain(amplitude).any(|v| !v.is_finite()) {
        return Err(Error::param("data", "values must be finite"));
    }
    Ok(())
}

fn span(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Fits `(ω_r, κ, s)` to a transmission amplitude cut.
///
/// Without `init` the fit starts from the tallest sample and its half-power
/// width.
pub fn fit_lorentzian(
    omega: &[f64],
    amplitude: &[f64],
    init: Option<LorentzianParams>,
    method: Method,
    opts: &MinimizeOptions,
) -> Result<FitResult> {
    check_data(omega, amplitude, 5)?;
    let (lo, hi) = span(omega);
    let center = 0.5 * (lo + hi);
    let width = (hi - lo) / MHZ;
    if !(width > 0.0) {
        return Err(Error::param("data", "frequencies must not all coincide"));
    }
    let u: Vec<f64> = omega.iter().map(|w| (w - center) / MHZ).collect();
    let start = match init {
        Some(p) => [(p.omega_r - center) / MHZ, p.kappa / MHZ, p.scale],
        None => {
            let ipk = (0..u.len()).max_by(|&i, &j| amplitude[i].total_cmp(&amplitude[j])).unwrap_or(0);
            let peak = amplitude[ipk];
            let above = u
                .iter()
                .zip(amplitude)
                .filter(|(_, a)| **a >= peak / std::f64::consts::SQRT_2)
                .map(|(x, _)| *x);
            let (l, r) = above.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, r), x| (l.min(x), r.max(x)));
            [u[ipk], (r - l).max(width / u.len() as f64), peak]
        }
    };
    let residuals = |p: &[f64]| -> Vec<f64> {
        let h = p[1] / 2.0;
        u.iter()
            .zip(amplitude)
            .map(|(x, a)| p[2] * h / ((p[0] - x).powi(2) + h * h).sqrt() - a)
            .collect()
    };
    let names: Vec<String> = ["omega_r", "kappa", "scale"].iter().map(|s| s.to_string()).collect();
    let bounds = [(-2.0 * width, 2.0 * width), (1e-9, 100.0 * width), (0.0, f64::INFINITY)];
    let problem = Problem {
        residuals: &residuals,
        bounds: &bounds,
        fixed: &[false; 3],
        names: &names,
    };
    let mut fit = problem.solve(&start, method, opts)?;
    let kappa_mhz = fit.params[1];
    fit.params[0] = center + MHZ * fit.params[0];
    fit.params[1] *= MHZ;
    fit.std_errors[0] *= MHZ;
    fit.std_errors[1] *= MHZ;
    fit.units = vec!["rad/s".into(), "rad/s".into(), String::new()];
    if width < 2.0 * kappa_mhz {
        fit.warnings.push(format!(
            "data span {:.3} MHz covers less than two linewidths ({:.3} MHz); parameters are weakly constrained",
            width / (2.0 * std::f64::consts::PI),
            kappa_mhz / (2.0 * std::f64::consts::PI)
        ));
    }
    Ok(fit)
}

/// Parameter names of [`fit_coupled`], in order.
pub const COUPLED_PARAMS: [&str; 6] = ["g_c", "gamma_2", "t_c", "omega_r", "kappa", "scale"];

/// Cavity and single-dot parameters of the coupled-transmission model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledParams {
    /// Bare charge coupling (rad/s).
    pub g_c: f64,
    /// Qubit decoherence rate (rad/s).
    pub gamma_2: f64,
    /// Tunnel coupling (J).
    pub t_c: f64,
    pub omega_r: f64,
    pub kappa: f64,
    pub scale: f64,
}

impl CoupledParams {
    fn to_vec(self) -> [f64; 6] {
        [self.g_c, self.gamma_2, self.t_c, self.omega_r, self.kappa, self.scale]
    }

    /// Model amplitude
    /// `s |(κ/2) / (i(ω_r − ω) + κ/2 + g_t² / (i(ω_q − ω) + γ₂))|`.
    pub fn amplitude(&self, omega: f64, epsilon: f64) -> f64 {
        let e = (epsilon * epsilon + 4.0 * self.t_c * self.t_c).sqrt();
        let omega_q = e / crate::units::HBAR;
        let g_t = self.g_c * 2.0 * self.t_c / e;
        let den = C64::new(self.kappa / 2.0, self.omega_r - omega)
            + g_t * g_t / C64::new(self.gamma_2, omega_q - omega);
        self.scale * (self.kappa / 2.0) / den.norm()
    }
}

/// One point of a (probe frequency, detuning) amplitude map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledSample {
    pub omega: f64,
    /// Detuning (J).
    pub epsilon: f64,
    pub amplitude: f64,
}

/// Fits the coupled-transmission model to map data, holding the parameters
/// named in `fixed` at their `init` values.
pub fn fit_coupled(
    data: &[CoupledSample],
    init: &CoupledParams,
    fixed: &[&str],
    method: Method,
    opts: &MinimizeOptions,
) -> Result<FitResult> {
    if data.len() < 6 {
        return Err(Error::param("data", "at least 6 samples required"));
    }
    if data.iter().any(|s| !(s.omega.is_finite() && s.epsilon.is_finite() && s.amplitude.is_finite())) {
        return Err(Error::param("data", "values must be finite"));
    }
    let mut mask = [false; 6];
    for name in fixed {
        let i = COUPLED_PARAMS
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::param("fixed", format!("unknown parameter `{name}`; expected one of {COUPLED_PARAMS:?}")))?;
        mask[i] = true;
    }
    let raw = init.to_vec();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("init", "values must be finite"));
    }
    let (lo, hi) = span(&data.iter().map(|s| s.omega).collect::<Vec<_>>());
    let reference = 0.5 * (lo + hi);
    let ref_mhz = reference / MHZ;
    let to_mhz = |e: f64| e / PLANCK / 1e6;
    // internal units: cyclic MHz, with ω_r as an offset from the data centre
    let u: Vec<f64> = data.iter().map(|s| (s.omega - reference) / MHZ).collect();
    let e: Vec<f64> = data.iter().map(|s| to_mhz(s.epsilon)).collect();
    let start = [
        raw[0] / MHZ,
        raw[1] / MHZ,
        to_mhz(2.0 * raw[2]),
        (raw[3] - reference) / MHZ,
        raw[4] / MHZ,
        raw[5],
    ];
    let residuals = |p: &[f64]| -> Vec<f64> {
        let h = p[4] / 2.0;
        u.iter()
            .zip(&e)
            .zip(data)
            .map(|((&x, &eps), s)| {
                let en = (eps * eps + p[2] * p[2]).sqrt();
                let g_t = p[0] * p[2] / en;
                let den = C64::new(h, p[3] - x) + g_t * g_t / C64::new(p[1], en - ref_mhz - x);
                p[5] * h / den.norm() - s.amplitude
            })
            .collect()
    };
    let names: Vec<String> = COUPLED_PARAMS.iter().map(|s| s.to_string()).collect();
    let bounds = [
        (0.0, 1e5),
        (1e-9, 1e6),
        (1e-9, 1e7),
        (-1e5, 1e5),
        (1e-9, 1e6),
        (0.0, f64::INFINITY),
    ];
    let problem = Problem {
        residuals: &residuals,
        bounds: &bounds,
        fixed: &mask,
        names: &names,
    };
    let mut fit = problem.solve(&start, method, opts)?;
    let gap_to_tc = 1e6 * PLANCK / 2.0;
    let scales = [MHZ, MHZ, gap_to_tc, MHZ, MHZ, 1.0];
    for (i, s) in scales.iter().enumerate() {
        fit.params[i] *= s;
        fit.std_errors[i] *= s;
    }
    fit.params[3] += reference;
    for (i, &m) in mask.iter().enumerate() {
        if m {
            fit.params[i] = raw[i];
        }
    }
    fit.units = ["rad/s", "rad/s", "J", "rad/s", "rad/s", ""].iter().map(|s| s.to_string()).collect();
    Ok(fit)
}

/// Noisy samples of [`CoupledParams::amplitude`] on a (frequency, detuning)
/// grid, with Gaussian noise of deviation `noise_rel` times the peak
/// amplitude drawn from a ChaCha8 stream seeded by `seed`.
pub fn synthetic_coupled_data(
    truth: &CoupledParams,
    omegas: &[f64],
    epsilons: &[f64],
    noise_rel: f64,
    seed: u64,
) -> Result<Vec<CoupledSample>> {
    if !(noise_rel >= 0.0) {
        return Err(Error::param("noise_rel", "must be non-negative"));
    }
    let clean: Vec<CoupledSample> = epsilons
        .iter()
        .flat_map(|&epsilon| {
            omegas.iter().map(move |&omega| CoupledSample {
                omega,
                epsilon,
                amplitude: truth.amplitude(omega, epsilon),
            })
        })
        .collect();
    let peak = clean.iter().map(|s| s.amplitude).fold(0.0, f64::max);
    let normal = Normal::new(0.0, noise_rel * peak).map_err(|e| Error::param("noise_rel", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(clean
        .into_iter()
        .map(|s| CoupledSample {
            amplitude: s.amplitude + normal.sample(&mut rng),
            ..s
        })
        .collect())
}

/// Result of [`fit_two_stage`].
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStageFit {
    /// Lorentzian fit of the cut farthest from the anticrossing.
    pub cavity: FitResult,
    pub coupled: FitResult,
}

/// Fits the cavity on the largest-|ε| cut, then the coupled model on the
/// whole map starting from that cavity and the dot values in `init`.
pub fn fit_two_stage(
    data: &[CoupledSample],
    init: &CoupledParams,
    fixed: &[&str],
    method: Method,
    opts: &MinimizeOptions,
) -> Result<TwoStageFit> {
    let far = data
        .iter()
        .map(|s| s.epsilon.abs())
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))))
        .ok_or_else(|| Error::param("data", "no samples"))?;
    let (omega, amp): (Vec<f64>, Vec<f64>) = data
        .iter()
        .filter(|s| s.epsilon.abs() == far)
        .map(|s| (s.omega, s.amplitude))
        .unzip();
    let cavity = fit_lorentzian(&omega, &amp, None, method, opts)?;
    let start = CoupledParams {
        omega_r: cavity.params[0],
        kappa: cavity.params[1],
        scale: cavity.params[2],
        ..*init
    };
    let coupled = fit_coupled(data, &start, fixed, method, opts)?;
    Ok(TwoStageFit { cavity, coupled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::scans::linear_response_transmission;
    use crate::units::{hz_to_rad, uev_to_joule};

    fn truth() -> LorentzianParams {
        LorentzianParams {
            omega_r: hz_to_rad(5.198e9),
            kappa: hz_to_rad(14e6),
            scale: 0.93,
        }
    }

    fn grid(p: &LorentzianParams, half_span_hz: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let w: Vec<f64> = (0..n)
            .map(|k| p.omega_r + hz_to_rad(-half_span_hz + 2.0 * half_span_hz * k as f64 / (n - 1) as f64))
            .collect();
        let a = w.iter().map(|&x| lorentzian_amplitude(x, p)).collect();
        (w, a)
    }

    #[test]
    fn lorentzian_round_trip() {
        let p = truth();
        let (w, a) = grid(&p, 40e6, 81);
        for m in [Method::GaussNewton, Method::Simplex] {
            let fit = fit_lorentzian(&w, &a, None, m, &MinimizeOptions::default()).unwrap();
            assert!(fit.converged, "{m:?} {:?}", fit.warnings);
            assert!((fit.params[0] - p.omega_r).abs() / p.kappa < 1e-6, "{m:?}");
            assert!((fit.params[1] / p.kappa - 1.0).abs() < 1e-6, "{m:?}");
            assert!((fit.params[2] / p.scale - 1.0).abs() < 1e-6, "{m:?}");
        }
    }

    fn alternating_noise(a: &[f64]) -> Vec<f64> {
        a.iter().enumerate().map(|(k, v)| v + if k % 2 == 0 { 1e-3 } else { -1e-3 }).collect()
    }

    #[test]
    fn narrow_data_is_flagged() {
        let p = truth();
        let opts = MinimizeOptions::default();
        let (w, a) = grid(&p, 1.5e6, 11);
        let narrow = fit_lorentzian(&w, &alternating_noise(&a), Some(p), Method::GaussNewton, &opts).unwrap();
        assert!(narrow.warnings.iter().any(|w| w.contains("two linewidths")));
        let (w, a) = grid(&p, 40e6, 11);
        let wide = fit_lorentzian(&w, &alternating_noise(&a), Some(p), Method::GaussNewton, &opts).unwrap();
        assert!(wide.warnings.is_empty(), "{:?}", wide.warnings);
        assert!(narrow.std_errors[1] > 10.0 * wide.std_errors[1], "{} {}", narrow.std_errors[1], wide.std_errors[1]);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_lorentzian(&[1.0; 4], &[1.0; 4], None, Method::Simplex, &MinimizeOptions::default()).is_err());
    }

    fn coupled_truth() -> (CoupledParams, Vec<CoupledSample>) {
        let sys = presets::single_dot();
        let d = &sys.dqds[0];
        let p = CoupledParams {
            g_c: d.g_c,
            gamma_2: d.gamma_2(),
            t_c: d.t_c,
            omega_r: sys.cavity.omega_r,
            kappa: sys.cavity.kappa_total(),
            scale: 1.0,
        };
        let mut data = Vec::new();
        for i in 0..=20 {
            let eps = uev_to_joule(-40.0 + 4.0 * i as f64);
            let s = sys.with_detuning(0, eps);
            for k in 0..=30 {
                let w = p.omega_r + hz_to_rad(-45e6 + 3e6 * k as f64);
                let a = linear_response_transmission(w, &s).unwrap().norm();
                data.push(CoupledSample { omega: w, epsilon: eps, amplitude: a });
            }
        }
        (p, data)
    }

    #[test]
    fn coupled_model_matches_linear_response() {
        let (p, data) = coupled_truth();
        for s in &data {
            assert!((p.amplitude(s.omega, s.epsilon) - s.amplitude).abs() < 1e-10);
        }
    }

    #[test]
    fn coupled_round_trip() {
        let (p, data) = coupled_truth();
        let start = CoupledParams {
            g_c: p.g_c * 0.8,
            gamma_2: p.gamma_2 * 1.3,
            t_c: p.t_c * 1.01,
            ..p
        };
        let fit = fit_coupled(&data, &start, &["omega_r", "kappa", "scale"], Method::GaussNewton, &MinimizeOptions::default()).unwrap();
        assert!(fit.converged, "{:?}", fit.warnings);
        for (name, v) in [("g_c", p.g_c), ("gamma_2", p.gamma_2), ("t_c", p.t_c)] {
            assert!((fit.get(name).unwrap() / v - 1.0).abs() < 1e-6, "{name}");
        }
        assert_eq!(fit.get("kappa"), Some(p.kappa));
        assert!(fit.std_error("kappa").unwrap().is_nan());
    }

    #[test]
    fn scale_only_is_linear_least_squares() {
        let (p, data) = coupled_truth();
        let y: Vec<f64> = data.iter().enumerate().map(|(k, s)| s.amplitude * (1.1 + 0.01 * ((k * 7) % 5) as f64)).collect();
        let noisy: Vec<CoupledSample> = data.iter().zip(&y).map(|(s, &a)| CoupledSample { amplitude: a, ..*s }).collect();
        let fixed = ["g_c", "gamma_2", "t_c", "omega_r", "kappa"];
        let fit = fit_coupled(&noisy, &p, &fixed, Method::GaussNewton, &MinimizeOptions::default()).unwrap();
        let m: Vec<f64> = data.iter().map(|s| p.amplitude(s.omega, s.epsilon)).collect();
        let exact = m.iter().zip(&y).map(|(m, y)| m * y).sum::<f64>() / m.iter().map(|m| m * m).sum::<f64>();
        assert!((fit.get("scale").unwrap() / exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unknown_fixed_name() {
        let (p, data) = coupled_truth();
        let err = fit_coupled(&data, &p, &["kapa"], Method::GaussNewton, &MinimizeOptions::default()).unwrap_err();
        assert!(err.to_string().contains("kapa"));
    }

    #[test]
    fn two_stage_recovers_noiseless_truth() {
        let (p, _) = coupled_truth();
        let w: Vec<f64> = (0..=40).map(|k| p.omega_r + hz_to_rad(-40e6 + 2e6 * k as f64)).collect();
        let e: Vec<f64> = (0..=30).map(|i| uev_to_joule(-60.0 + 4.0 * i as f64)).collect();
        let data = synthetic_coupled_data(&p, &w, &e, 0.0, 1).unwrap();
        let init = CoupledParams { g_c: 0.8 * p.g_c, gamma_2: 0.8 * p.gamma_2, t_c: 0.99 * p.t_c, ..p };
        let fit = fit_two_stage(&data, &init, &[], Method::GaussNewton, &MinimizeOptions::default()).unwrap();
        for (name, v) in COUPLED_PARAMS.iter().zip(p.to_vec()) {
            let got = fit.coupled.get(name).unwrap();
            assert!((got / v - 1.0).abs() < 1e-6, "{name}: {got} vs {v}");
        }
    }
}
