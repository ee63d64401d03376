// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Bounded least-squares minimisers and transmission-spectrum fits.
//!
//! Both minimisers accept only improving steps, so the objective
//! `Σ rᵢ²` never increases along the accepted iterates, and both are
//! deterministic in their inputs.
//!
//! ```
//! use sapa_core::fitting::{minimize, Method, MinimizeOptions};
//!
//! // Rosenbrock as residuals (10(y − x²), 1 − x)
//! let res = |p: &[f64]| vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]];
//! let fit = minimize(&res, &[-1.2, 1.0], &[(-5.0, 5.0); 2], Method::GaussNewton,
//!                    &MinimizeOptions::default()).unwrap();
//! assert!((fit.params[0] - 1.0).abs() < 1e-4 && (fit.params[1] - 1.0).abs() < 1e-4);
//! ```

mod minimize;
mod spectra;

pub use minimize::{minimize, Method, MinimizeOptions};
pub use spectra::{
    fit_coupled, fit_lorentzian, fit_two_stage, lorentzian_amplitude, synthetic_coupled_data,
    CoupledParams, CoupledSample, LorentzianParams, TwoStageFit, COUPLED_PARAMS,
};

/// Outcome of a fit, in the caller's units.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub units: Vec<String>,
    pub params: Vec<f64>,
    /// Finite-difference standard errors; `NaN` for fixed parameters or when
    /// the normal matrix is singular.
    pub std_errors: Vec<f64>,
    /// Parameters held at a bound by the final step.
    pub active_bounds: Vec<bool>,
    pub fixed: Vec<bool>,
    /// `√(Σ rᵢ² / m)`.
    pub residual_rms: f64,
    /// `Σ rᵢ²`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Condition number of `JᵀJ` over the free parameters.
    pub condition_number: f64,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.std_errors[i])
    }
}

/// Condition numbers above this trigger a warning on the fit.
pub const CONDITION_WARNING: f64 = 1e10;
