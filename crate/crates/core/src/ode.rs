// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Dormand–Prince 5(4) integrator with PI step-size control.
//!
//! States are flat `f64` slices; complex quantities are stored as
//! interleaved real/imaginary pairs by the callers. The integrator keeps its
//! step-size estimate between calls, so advancing a trajectory through a
//! sequence of output times costs no more than one long call.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    /// PI-controller memory exponent.
    pub beta: f64,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            beta: 0.04,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error coefficients (5th minus 4th order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive explicit Runge–Kutta integrator for `y' = f(t, y)`.
#[derive(Clone, Debug)]
pub struct Dopri5 {
    opts: Dopri5Options,
    h: Option<f64>,
    err_old: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    stats: Stats,
}

impl Dopri5 {
    pub fn new(dim: usize, opts: Dopri5Options) -> Self {
        Self {
            opts,
            h: None,
            err_old: 1e-4,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
            stats: Stats::default(),
        }
    }

    pub fn options(&self) -> &Dopri5Options {
        &self.opts
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Advances `y` from `t0` to `t1` (either direction).
    pub fn integrate<F>(&mut self, f: F, t0: f64, t1: f64, y: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        self.integrate_observed(f, t0, t1, y, |_, _| {})
    }

    /// As [`integrate`](Self::integrate), calling `observe(t, y)` after every
    /// accepted step.
    pub fn integrate_observed<F, O>(
        &mut self,
        mut f: F,
        t0: f64,
        t1: f64,
        y: &mut [f64],
        mut observe: O,
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(f64, &[f64]),
    {
        let n = y.len();
        if n != self.y_new.len() {
            return Err(Error::DimensionMismatch(format!(
                "integrator sized for {} components, state has {n}",
                self.y_new.len()
            )));
        }
        if t1 == t0 {
            return Ok(());
        }
        let dir = (t1 - t0).signum();
        let mut t = t0;
        f(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        check_finite(t, &self.k[0])?;

        let mut h = match self.h {
            Some(h) => h.abs(),
            None => self.initial_step(&mut f, t, y, dir)?,
        };
        h = h.min(self.opts.h_max);
        let mut steps = 0usize;

        loop {
            let remaining = (t1 - t).abs();
            if remaining <= 1e-14 * t1.abs().max(t0.abs()).max(f64::MIN_POSITIVE) {
                break;
            }
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let hs = dir * h_try;

            self.stages(&mut f, t, y, hs);
            let err = self.error_norm(y, hs);
            if !err.is_finite() {
                return Err(Error::Integration {
                    t,
                    reason: "non-finite state or derivative".into(),
                });
            }
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: format!("exceeded {} steps", self.opts.max_steps),
                });
            }

            if err <= 1.0 {
                self.stats.accepted += 1;
                t = if last { t1 } else { t + hs };
                y.copy_from_slice(&self.y_new);
                // FSAL: k7 is f(t_new, y_new)
                self.k.swap(0, 6);
                observe(t, y);
                let expo = 0.2 - 0.75 * self.opts.beta;
                let fac = if err == 0.0 {
                    self.opts.fac_max
                } else {
                    (self.opts.safety * err.powf(-expo) * self.err_old.powf(self.opts.beta))
                        .clamp(self.opts.fac_min, self.opts.fac_max)
                };
                self.err_old = err.max(1e-4);
                // keep the natural step size when the last step was clipped
                let h_next = (h_try.max(if last { h } else { 0.0 }) * fac).min(self.opts.h_max);
                h = h_next;
                if last {
                    break;
                }
            } else {
                self.stats.rejected += 1;
                let fac = (self.opts.safety * err.powf(-0.2)).max(self.opts.fac_min);
                h = h_try * fac;
                if h < 1e-15 * t.abs().max(1e-300) {
                    return Err(Error::Integration {
                        t,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn stages<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;
        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, ys, k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, ys, k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, ys, k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, ys, k5);
        for i in 0..n {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, ys, k6);
        let yn = &mut self.y_new;
        for i in 0..n {
            yn[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, yn, k7);
        self.stats.evaluations += 6;
    }

    fn error_norm(&self, y: &[f64], h: f64) -> f64 {
        let [k1, _k2, k3, k4, k5, k6, k7] = &self.k;
        let n = y.len();
        let mut acc = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(self.y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        (acc / n as f64).sqrt()
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[f64], dir: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let sc = |yi: f64| self.opts.atol + self.opts.rtol * yi.abs();
        let d0 = (y.iter().map(|&v| (v / sc(v)).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(&v, &dv)| (dv / sc(v)).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(self.opts.h_max);
        for ((ys, &yi), &ki) in self.y_stage.iter_mut().zip(y).zip(&self.k[0]) {
            *ys = yi + dir * h0 * ki;
        }
        f(t + dir * h0, &self.y_stage, &mut self.k[1]);
        self.stats.evaluations += 1;
        let d2 = (y
            .iter()
            .zip(self.k[1].iter().zip(&self.k[0]))
            .map(|(&v, (&a, &b))| ((a - b) / sc(v)).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1))
    }
}

fn check_finite(t: f64, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration {
            t,
            reason: "non-finite derivative".into(),
        })
    }
}
