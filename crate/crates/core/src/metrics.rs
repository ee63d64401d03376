// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Scalar figures of merit and the amplifier noise chain.

use crate::units::{BOLTZMANN, HBAR};
use crate::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

fn amplitude_ratio_db(num: f64, den: f64) -> Result<f64> {
    positive("numerator amplitude", num)?;
    positive("reference amplitude", den)?;
    Ok(20.0 * (num / den).log10())
}

/// `G_p = 20 log₁₀(A_on,max / A_off)`.
pub fn parametric_gain(a_on_max: f64, a_off: f64) -> Result<f64> {
    amplitude_ratio_db(a_on_max, a_off)
}

/// `G_e = 20 log₁₀(A_on,max / A₀)`.
pub fn effective_gain(a_on_max: f64, a_0: f64) -> Result<f64> {
    amplitude_ratio_db(a_on_max, a_0)
}

/// dB power gain to a linear power ratio.
pub fn db_to_power_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `C = 4g²/(γκ)`.
pub fn cooperativity(g: f64, gamma: f64, kappa: f64) -> Result<f64> {
    positive("gamma", gamma)?;
    positive("kappa", kappa)?;
    Ok(4.0 * g * g / (gamma * kappa))
}

/// `C > 1` with `g` above both `γ/2` and `κ/2`.
pub fn is_strong_coupling(g: f64, gamma: f64, kappa: f64) -> Result<bool> {
    Ok(cooperativity(g, gamma, kappa)? > 1.0 && g > gamma / 2.0 && g > kappa / 2.0)
}

/// Reference level for [`fwhm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    /// Half maximum of the raw peak.
    Zero,
    /// Half of `(peak − min)` above the minimum of the cut.
    Minimum,
}

/// Full width at half maximum of the dominant peak of `y(x)`, with linear
/// interpolation of both crossings. `x` must be increasing.
pub fn fwhm(x: &[f64], y: &[f64], baseline: Baseline) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::DimensionMismatch(format!(
            "fwhm needs matching cuts of at least 3 points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("x", "must be strictly increasing"));
    }
    let (ip, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let base = match baseline {
        Baseline::Zero => 0.0,
        Baseline::Minimum => y.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let half = base + (peak - base) / 2.0;
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let left = (1..=ip).rev().find(|&i| y[i - 1] <= half).map(|i| cross(i - 1, i));
    let right = (ip..y.len() - 1).find(|&i| y[i + 1] <= half).map(|i| cross(i, i + 1));
    match (left, right) {
        (Some(l), Some(r)) => Ok(r - l),
        _ => Err(Error::NoHalfCrossing),
    }
}

/// Repeated amplitude measurements with their mean and unbiased deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    repeats: Vec<f64>,
    mean: f64,
    std: f64,
}

impl MeasurementEnsemble {
    pub fn new(repeats: Vec<f64>) -> Result<Self> {
        if repeats.len() < 2 {
            return Err(Error::param("repeats", "an ensemble needs at least 2 repeats"));
        }
        if repeats.iter().any(|r| !r.is_finite()) {
            return Err(Error::param("repeats", "non-finite sample"));
        }
        let m = repeats.len() as f64;
        let mean = repeats.iter().sum::<f64>() / m;
        let var = repeats.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Ok(Self {
            repeats,
            mean,
            std: var.sqrt(),
        })
    }

    pub fn repeats(&self) -> &[f64] {
        &self.repeats
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased (`M − 1`) standard deviation.
    pub fn std(&self) -> f64 {
        self.std
    }
}

/// `SNR = (Ā₁ − Ā₀) / √(ΔA₁² + ΔA₀²)`.
pub fn snr(a1: &MeasurementEnsemble, a0: &MeasurementEnsemble) -> Result<f64> {
    let spread = a1.std.hypot(a0.std);
    if spread == 0.0 {
        return Err(Error::param("ensembles", "combined standard deviation is zero"));
    }
    Ok((a1.mean - a0.mean) / spread)
}

/// Input-referred noise of the SAPA followed by the cryogenic chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseChain {
    /// SAPA added noise (quanta).
    pub n_sapa: f64,
    /// Downstream chain noise (quanta).
    pub n_hemt: f64,
    /// SAPA power gain.
    pub g_sapa_linear: f64,
}

impl NoiseChain {
    pub fn new(n_sapa: f64, n_hemt: f64, g_sapa_linear: f64) -> Result<Self> {
        let c = Self {
            n_sapa,
            n_hemt,
            g_sapa_linear,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n_sapa", self.n_sapa), ("n_hemt", self.n_hemt)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        if !(self.g_sapa_linear >= 1.0 && self.g_sapa_linear.is_finite()) {
            return Err(Error::param("g_sapa_linear", "must be at least 1"));
        }
        Ok(())
    }

    /// Output noise quanta referred to the chain input:
    /// `g·n_sapa + n_hemt` with the SAPA on, `n_hemt` with it off.
    pub fn output_noise(&self, sapa_on: bool) -> f64 {
        if sapa_on {
            self.g_sapa_linear * self.n_sapa + self.n_hemt
        } else {
            self.n_hemt
        }
    }

    /// Noise-floor rise `N_on / N_off`.
    pub fn noise_rise(&self) -> f64 {
        self.output_noise(true) / self.n_hemt
    }

    /// Inverts a measured noise-floor rise into the SAPA added noise.
    pub fn n_sapa_from_rise(rise: f64, g_sapa_linear: f64, n_hemt: f64) -> Result<f64> {
        positive("g_sapa_linear", g_sapa_linear)?;
        if !(rise >= 1.0) {
            return Err(Error::param("rise", "noise floor cannot fall with the SAPA on"));
        }
        Ok((rise - 1.0) * n_hemt / g_sapa_linear)
    }
}

/// Converts chain noise to a per-quadrature amplitude deviation in units of
/// the normalised transmission `A/A₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseScale {
    /// Measurement bandwidth (Hz).
    pub bandwidth_hz: f64,
    /// Probe amplitude at the device input, √(photons/s).
    pub probe_amplitude: f64,
    /// Normalisation constant `A₀`.
    pub a0: f64,
}

/// Per-quadrature standard deviation `√(N_out·B/2) / (A_s·A₀)`, with noise
/// quanta counted as photons per second per hertz.
pub fn chain_noise_std(chain: &NoiseChain, scale: &NoiseScale, sapa_on: bool) -> Result<f64> {
    chain.validate()?;
    positive("bandwidth_hz", scale.bandwidth_hz)?;
    positive("probe_amplitude", scale.probe_amplitude)?;
    positive("a0", scale.a0)?;
    let n_out = chain.output_noise(sapa_on);
    Ok((n_out * scale.bandwidth_hz / 2.0).sqrt() / (scale.probe_amplitude * scale.a0))
}

/// `√(g·n_hemt / (g·n_sapa + n_hemt))`.
pub fn snr_improvement(chain: &NoiseChain) -> Result<f64> {
    chain.validate()?;
    let g = chain.g_sapa_linear;
    let den = g * chain.n_sapa + chain.n_hemt;
    if den == 0.0 {
        return Err(Error::param("noise chain", "noiseless chain has no finite improvement"));
    }
    Ok((g * chain.n_hemt / den).sqrt())
}

/// `T = n·ħω/k_B`.
pub fn effective_temperature(n_add: f64, omega: f64) -> Result<f64> {
    if !(n_add >= 0.0) {
        return Err(Error::param("n_add", "must be non-negative"));
    }
    positive("omega", omega)?;
    Ok(n_add * HBAR * omega / BOLTZMANN)
}

/// Power at which the gain first falls 1 dB below its maximum, linearly
/// interpolated in (dBm, dB).
pub fn compression_point(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::NotBracketed("compression curve needs at least 2 points".into()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::param("curve", "powers must be strictly increasing"));
    }
    let (imax, &(_, gmax)) = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    let target = gmax - 1.0;
    for i in imax + 1..curve.len() {
        let (p1, g1) = curve[i];
        if g1 <= target {
            let (p0, g0) = curve[i - 1];
            return Ok(p0 + (target - g0) * (p1 - p0) / (g1 - g0));
        }
    }
    Err(Error::NotBracketed(
        "gain never drops 1 dB below its maximum; extend the power grid".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gains() {
        assert_eq!(parametric_gain(1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(parametric_gain(10.0, 1.0).unwrap(), 20.0);
        assert_eq!(effective_gain(0.7, 0.7).unwrap(), 0.0);
        assert!(parametric_gain(0.0, 1.0).is_err());
        assert!(effective_gain(1.0, -1.0).is_err());
    }

    #[test]
    fn cooperativity_paper_values() {
        let c = cooperativity(hz_to_rad(60e6), hz_to_rad(100e6), hz_to_rad(14e6)).unwrap();
        assert!((c - 10.2857).abs() < 1e-3);
        let c2 = cooperativity(hz_to_rad(120e6), hz_to_rad(100e6), hz_to_rad(14e6)).unwrap();
        assert_relative_eq!(c2, 4.0 * c, max_relative = 1e-12);
        assert!(is_strong_coupling(hz_to_rad(60e6), hz_to_rad(100e6), hz_to_rad(14e6)).unwrap());
        assert!(cooperativity(1.0, 0.0, 1.0).is_err());
    }

    fn lorentzian_cut(kappa: f64) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..=400).map(|k| -40.0 + 0.2 * k as f64).collect();
        let y = x.iter().map(|w| (kappa / 2.0).powi(2) / (w * w + (kappa / 2.0).powi(2))).collect();
        (x, y)
    }

    #[test]
    fn fwhm_of_lorentzian() {
        let (x, y) = lorentzian_cut(14.0);
        assert!((fwhm(&x, &y, Baseline::Zero).unwrap() - 14.0).abs() < 0.02 * 14.0);
        let (x, y2) = lorentzian_cut(28.0);
        let ratio = fwhm(&x, &y2, Baseline::Zero).unwrap() / fwhm(&x, &y, Baseline::Zero).unwrap();
        assert!((ratio - 2.0).abs() < 0.02);
    }

    #[test]
    fn fwhm_without_crossing() {
        let x = [0.0, 1.0, 2.0];
        assert!(matches!(fwhm(&x, &[1.0, 2.0, 3.0], Baseline::Zero), Err(Error::NoHalfCrossing)));
    }

    #[test]
    fn snr_cases() {
        let a = MeasurementEnsemble::new(vec![1.0, 1.2, 0.8]).unwrap();
        assert_eq!(snr(&a, &a).unwrap(), 0.0);
        // two samples at ±d have unbiased std d·√2 = 0.1
        let d = 0.1 / 2f64.sqrt();
        let on = MeasurementEnsemble::new(vec![1.0 - d, 1.0 + d]).unwrap();
        let off = MeasurementEnsemble::new(vec![-d, d]).unwrap();
        let s = snr(&on, &off).unwrap();
        assert!((s - 1.0 / (0.1 * 2f64.sqrt())).abs() < 1e-12);
        assert!(MeasurementEnsemble::new(vec![1.0]).is_err());
        let flat = MeasurementEnsemble::new(vec![1.0, 1.0]).unwrap();
        assert!(snr(&flat, &flat).is_err());
    }

    #[test]
    fn noise_chain_cases() {
        let off = NoiseChain::new(1.5, 10.0, 1.0).unwrap();
        assert_eq!(off.output_noise(false), 10.0);
        let on = NoiseChain::new(1.5, 10.0, 13.4).unwrap();
        assert!((on.output_noise(true) - 30.1).abs() < 1e-12);
        assert!((on.noise_rise() - 3.01).abs() < 1e-12);
        assert!((NoiseChain::n_sapa_from_rise(3.01, 13.4, 10.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((snr_improvement(&on).unwrap() - 2.11).abs() < 0.01);
        let ideal = NoiseChain::new(0.0, 10.0, 13.4).unwrap();
        assert!((snr_improvement(&ideal).unwrap() - 13.4f64.sqrt()).abs() < 1e-12);
        assert!(snr_improvement(&NoiseChain::new(1.5, 10.0, 1.0).unwrap()).unwrap() <= 1.0);
        assert!(NoiseChain::new(1.0, 10.0, 0.5).is_err());
    }

    #[test]
    fn chain_noise_scaling() {
        let chain = NoiseChain::new(1.5, 10.0, 13.4).unwrap();
        let scale = NoiseScale {
            bandwidth_hz: 1e3,
            probe_amplitude: 1e3,
            a0: 1.0,
        };
        let on = chain_noise_std(&chain, &scale, true).unwrap();
        let off = chain_noise_std(&chain, &scale, false).unwrap();
        assert!((on / off - 3.01f64.sqrt()).abs() < 1e-12);
        assert!((off - (10.0f64 * 1e3 / 2.0).sqrt() / 1e3).abs() < 1e-15);
    }

    #[test]
    fn effective_temperature_cases() {
        let w = hz_to_rad(5.198e9);
        assert!((effective_temperature(1.0, w).unwrap() - 0.2495).abs() < 1e-3);
        assert!((effective_temperature(1.5, w).unwrap() - 0.374).abs() < 1e-3);
        assert_eq!(effective_temperature(0.0, w).unwrap(), 0.0);
    }

    #[test]
    fn compression_point_cases() {
        let curve: Vec<(f64, f64)> = (0..=40)
            .map(|k| {
                let p = -140.0 + k as f64;
                (p, 11.28 - (0.2 * (p + 125.0)).max(0.0))
            })
            .collect();
        assert!((compression_point(&curve).unwrap() + 120.0).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 3.0)).collect();
        assert!(matches!(compression_point(&flat), Err(Error::NotBracketed(_))));
    }

    proptest! {
        #[test]
        fn gain_scale_invariant(x in 1e-6f64..1e6, r in 1e-3f64..1e3) {
            let a = parametric_gain(x * r, x).unwrap();
            let b = parametric_gain(r, 1.0).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn snr_shift_and_scale(
            on in prop::collection::vec(-1.0f64..1.0, 5),
            off in prop::collection::vec(-1.0f64..1.0, 5),
            c in -10.0f64..10.0,
            s in 0.1f64..10.0,
        ) {
            let base_on = MeasurementEnsemble::new(on.clone()).unwrap();
            let base_off = MeasurementEnsemble::new(off.clone()).unwrap();
            prop_assume!(base_on.std().hypot(base_off.std()) > 1e-6);
            let base = snr(&base_on, &base_off).unwrap();
            let shift = |v: &[f64]| MeasurementEnsemble::new(v.iter().map(|x| x + c).collect()).unwrap();
            let shifted = snr(&shift(&on), &shift(&off)).unwrap();
            prop_assert!((shifted - base).abs() < 1e-9 * base.abs().max(1.0));
            // spreading both ensembles about their means by s scales SNR by 1/s
            let spread = |e: &MeasurementEnsemble| {
                MeasurementEnsemble::new(e.repeats().iter().map(|x| e.mean() + s * (x - e.mean())).collect()).unwrap()
            };
            let spread_snr = snr(&spread(&base_on), &spread(&base_off)).unwrap();
            prop_assert!((spread_snr * s - base).abs() < 1e-9 * base.abs().max(1.0));
        }

        #[test]
        fn snr_improvement_monotone(
            g in 1.0f64..100.0,
            n_sapa in 0.01f64..10.0,
            n_hemt in 0.1f64..100.0,
            d in 0.01f64..1.0,
        ) {
            let f = |g, s, h| snr_improvement(&NoiseChain::new(s, h, g).unwrap()).unwrap();
            prop_assert!(f(g * (1.0 + d), n_sapa, n_hemt) > f(g, n_sapa, n_hemt));
            prop_assert!(f(g, n_sapa, n_hemt * (1.0 + d)) > f(g, n_sapa, n_hemt));
            prop_assert!(f(g, n_sapa * (1.0 + d), n_hemt) < f(g, n_sapa, n_hemt));
        }

        #[test]
        fn fwhm_amplitude_invariant(k in 2.0f64..30.0, s in 1e-3f64..1e3) {
            let (x, y) = lorentzian_cut(k);
            let ys: Vec<f64> = y.iter().map(|v| v * s).collect();
            let a = fwhm(&x, &y, Baseline::Minimum).unwrap();
            let b = fwhm(&x, &ys, Baseline::Minimum).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a);
        }
    }
}
