// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants (CODATA 2018, exact SI values where defined) and the
//! conversions between configuration units and internal SI units.
//!
//! Internally every frequency is an angular frequency in rad/s and every
//! energy is in joules.

use std::f64::consts::PI;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Joules per micro-electronvolt.
pub const MICRO_EV: f64 = ELEMENTARY_CHARGE * 1e-6;

#[inline]
pub fn hz_to_rad(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[inline]
pub fn uev_to_joule(e_uev: f64) -> f64 {
    e_uev * MICRO_EV
}

#[inline]
pub fn joule_to_uev(e: f64) -> f64 {
    e / MICRO_EV
}

/// Energy `h·f` of a frequency given in Hz.
#[inline]
pub fn hz_to_joule(f_hz: f64) -> f64 {
    PLANCK * f_hz
}

#[inline]
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

#[inline]
pub fn watts_to_dbm(p_w: f64) -> f64 {
    10.0 * p_w.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_watts(-30.0) - 1e-6).abs() < 1e-18);
        assert!((watts_to_dbm(dbm_to_watts(-120.0)) + 120.0).abs() < 1e-12);
    }

    #[test]
    fn gap_energy_in_uev() {
        // 5.32 GHz photon ~ 22.0 ueV
        let e = joule_to_uev(hz_to_joule(5.32e9));
        assert!((e - 22.0020).abs() < 1e-3, "{e}");
    }
}
