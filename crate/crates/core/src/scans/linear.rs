// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use super::{parallel_map, Axis, SpectrumMap};
use crate::model::SystemParams;
use crate::{Result, C64};

/// Weak-probe transmission
/// `t(ω) = √(κ_in κ_out) / (i(ω_r − ω) + κ/2 + Σ_j g_j² / (i(ω_q,j − ω) + γ₂,j))`.
pub fn linear_response_transmission(omega_s: f64, system: &SystemParams) -> Result<C64> {
    system.validate()?;
    let c = &system.cavity;
    let mut den = C64::new(c.kappa_total() / 2.0, c.omega_r - omega_s);
    for d in &system.dqds {
        let (g_t, _) = d.couplings()?;
        den += g_t * g_t / C64::new(d.gamma_2(), d.omega_q() - omega_s);
    }
    Ok((c.kappa_in * c.kappa_out).sqrt() / den)
}

/// `A₀ = |t(ω_r)|` with every dot decoupled and the pump off.
pub fn normalization_a0(system: &SystemParams) -> Result<f64> {
    Ok(linear_response_transmission(system.cavity.omega_r, &system.uncoupled())?.norm())
}

/// Pump-off transmission over (probe frequency, detuning of dot `dqd`).
pub fn rabi_map(
    system: &SystemParams,
    probe_freqs: &[f64],
    eps_grid: &[f64],
    dqd: usize,
) -> Result<SpectrumMap> {
    system.validate()?;
    if dqd >= system.dqds.len() {
        return Err(crate::Error::param("dqd", format!("no dot with index {dqd}")));
    }
    let a0 = normalization_a0(system)?;
    let n1 = probe_freqs.len();
    let points = parallel_map(n1 * eps_grid.len(), |k| {
        let sys = system.with_detuning(dqd, eps_grid[k / n1]);
        linear_response_transmission(probe_freqs[k % n1], &sys)
    });
    SpectrumMap::new(
        "rabi-map",
        Axis::new("probe_frequency", "rad/s", probe_freqs.to_vec()),
        Some(Axis::new("epsilon", "J", eps_grid.to_vec())),
        points,
        a0,
    )
}
