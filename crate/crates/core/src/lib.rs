// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation and analysis toolkit for a microwave cavity coupled to one or
//! two double-quantum-dot charge qubits.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: dense complex operator algebra and Lindblad superoperators.
//! * [`model`]: physical parameters plus the pump-frame (rotating-wave) and
//!   lab-frame model builders.
//! * [`ode`]: adaptive Dormand–Prince integrator shared by both engines.
//! * [`meanfield`]: semiclassical equations of motion, periodic steady-state
//!   integration and harmonic demodulation.
//! * [`lindblad`]: truncated master-equation oracle.
//! * [`scans`]: the experiment protocols (Rabi map, gain map, tunability map,
//!   tone spectrum, readout sweep, compression sweep, pump calibration).
//! * [`metrics`]: gains, cooperativity, linewidth, SNR and the noise chain.
//! * [`fitting`]: bounded least-squares minimisers and spectrum fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fitting;
pub mod hilbert;
pub mod lindblad;
pub mod meanfield;
pub mod metrics;
pub mod model;
pub mod ode;
pub mod scans;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
