// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};

use super::{FitResult, CONDITION_WARNING};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Nelder–Mead with restarts from the best vertex.
    Simplex,
    /// Damped Gauss–Newton (Levenberg–Marquardt).
    GaussNewton,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Bound on the scaled gradient `max |∂f/∂xⱼ| max(|xⱼ|, 1) / max(f, 1)`.
    pub gtol: f64,
    pub ftol: f64,
    pub xtol: f64,
    /// Residual RMS treated as an exact fit.
    pub rms_floor: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub max_restarts: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            gtol: 1e-8,
            ftol: 1e-15,
            xtol: 1e-12,
            rms_floor: 1e-13,
            fd_step: 1e-6,
            max_restarts: 3,
        }
    }
}

/// Minimises `Σ rᵢ(p)²` within `bounds`, starting from `init`.
pub fn minimize(
    residuals: &dyn Fn(&[f64]) -> Vec<f64>,
    init: &[f64],
    bounds: &[(f64, f64)],
    method: Method,
    opts: &MinimizeOptions,
) -> Result<FitResult> {
    let names: Vec<String> = (0..init.len()).map(|i| format!("p{i}")).collect();
    let problem = Problem {
        residuals,
        bounds,
        fixed: &vec![false; init.len()],
        names: &names,
    };
    let units = vec![String::new(); init.len()];
    problem.solve(init, method, opts).map(|mut r| {
        r.units = units;
        r
    })
}

/// A bounded residual function. Fixed parameters keep their start values.
pub(crate) struct Problem<'a> {
    pub residuals: &'a dyn Fn(&[f64]) -> Vec<f64>,
    pub bounds: &'a [(f64, f64)],
    pub fixed: &'a [bool],
    pub names: &'a [String],
}

impl Problem<'_> {
    fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let r = (self.residuals)(x);
        let f: f64 = r.iter().map(|v| v * v).sum();
        if !f.is_finite() {
            return Err(Error::NonFiniteObjective { params: x.to_vec() });
        }
        Ok((r, f))
    }

    fn clip(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    fn free(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| !self.fixed[i]).collect()
    }

    fn validate(&self, init: &[f64]) -> Result<()> {
        let n = init.len();
        if self.bounds.len() != n || self.fixed.len() != n || self.names.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} parameters, {} bounds, {} fixed flags, {} names",
                self.bounds.len(),
                self.fixed.len(),
                self.names.len()
            )));
        }
        for (i, (&v, &(lo, hi))) in init.iter().zip(self.bounds).enumerate() {
            if !v.is_finite() {
                return Err(Error::param(&self.names[i], "initial value must be finite"));
            }
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::param(&self.names[i], format!("invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Central-difference Jacobian columns for `cols`, stepping inward at bounds.
    fn jacobian(&self, x: &[f64], cols: &[usize], m: usize, h_rel: f64) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(m, cols.len());
        let mut xp = x.to_vec();
        for (c, &j) in cols.iter().enumerate() {
            let (lo, hi) = self.bounds[j];
            let h = h_rel * x[j].abs().max(1.0);
            let (a, b) = if x[j] - h < lo {
                (x[j], (x[j] + h).min(hi))
            } else if x[j] + h > hi {
                ((x[j] - h).max(lo), x[j])
            } else {
                (x[j] - h, x[j] + h)
            };
            if b <= a {
                continue;
            }
            xp[j] = b;
            let rb = self.eval(&xp)?.0;
            xp[j] = a;
            let ra = self.eval(&xp)?.0;
            xp[j] = x[j];
            for i in 0..m {
                jac[(i, c)] = (rb[i] - ra[i]) / (b - a);
            }
        }
        Ok(jac)
    }

    /// Free parameters pinned at a bound with the gradient pushing outward.
    fn active(&self, x: &[f64], cols: &[usize], grad: &DVector<f64>) -> Vec<bool> {
        cols.iter()
            .enumerate()
            .map(|(c, &j)| {
                let (lo, hi) = self.bounds[j];
                (x[j] <= lo && grad[c] > 0.0) || (x[j] >= hi && grad[c] < 0.0)
            })
            .collect()
    }

    /// `max |∂f/∂xⱼ| max(|xⱼ|, 1) / max(f, 1)` over the free, inactive parameters.
    fn gradient_measure(x: &[f64], cols: &[usize], grad: &DVector<f64>, f: f64, active: &[bool]) -> f64 {
        cols.iter()
            .enumerate()
            .filter(|&(c, _)| !active[c])
            .map(|(c, &j)| 2.0 * grad[c].abs() * x[j].abs().max(1.0) / f.max(1.0))
            .fold(0.0, f64::max)
    }

    pub(crate) fn solve(&self, init: &[f64], method: Method, opts: &MinimizeOptions) -> Result<FitResult> {
        self.validate(init)?;
        let mut x = init.to_vec();
        self.clip(&mut x);
        let (x, iterations, stalled) = match method {
            Method::Simplex => self.nelder_mead(x, opts)?,
            Method::GaussNewton => self.levenberg_marquardt(x, opts)?,
        };
        self.summarize(x, iterations, stalled, opts)
    }

    fn summarize(&self, x: Vec<f64>, iterations: usize, stalled: bool, opts: &MinimizeOptions) -> Result<FitResult> {
        let n = x.len();
        let cols = self.free();
        let (r, f) = self.eval(&x)?;
        let m = r.len();
        let rv = DVector::from_vec(r);
        let jac = self.jacobian(&x, &cols, m, opts.fd_step)?;
        let grad = jac.transpose() * &rv;
        let active_free = self.active(&x, &cols, &grad);
        let rms = (f / m.max(1) as f64).sqrt();
        let gmeasure = Self::gradient_measure(&x, &cols, &grad, f, &active_free);
        let converged = !stalled && (rms <= opts.rms_floor || gmeasure <= opts.gtol);

        let mut warnings = Vec::new();
        let mut std_errors = vec![f64::NAN; n];
        let mut condition_number = f64::NAN;
        if !cols.is_empty() {
            let jtj = jac.transpose() * &jac;
            let sv = jtj.clone().svd(false, false).singular_values;
            let smax = sv.max();
            let smin = sv.min();
            condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            if condition_number > CONDITION_WARNING {
                warnings.push(format!(
                    "ill-conditioned normal matrix (condition number {condition_number:.3e}); some parameter combinations are not determined"
                ));
            }
            if m > cols.len() {
                let s2 = f / (m - cols.len()) as f64;
                if let Ok(inv) = jtj.pseudo_inverse(smax * 1e-15) {
                    for (c, &j) in cols.iter().enumerate() {
                        std_errors[j] = (s2 * inv[(c, c)]).max(0.0).sqrt();
                    }
                }
            } else {
                warnings.push(format!("{m} residuals for {} free parameters; standard errors undefined", cols.len()));
            }
        }
        if !converged {
            warnings.push(format!("not converged (gradient measure {gmeasure:.3e}, {iterations} iterations)"));
        }
        let mut active_bounds = vec![false; n];
        for (c, &j) in cols.iter().enumerate() {
            active_bounds[j] = active_free[c];
        }
        Ok(FitResult {
            names: self.names.to_vec(),
            units: vec![String::new(); n],
            params: x,
            std_errors,
            active_bounds,
            fixed: self.fixed.to_vec(),
            residual_rms: rms,
            objective: f,
            iterations,
            converged,
            condition_number,
            warnings,
        })
    }

    /// Final point and iteration count; the flag is set when the budget ran out.
    fn levenberg_marquardt(&self, mut x: Vec<f64>, opts: &MinimizeOptions) -> Result<(Vec<f64>, usize, bool)> {
        let cols = self.free();
        let (r0, mut f) = self.eval(&x)?;
        let m = r0.len();
        let mut r = DVector::from_vec(r0);
        if cols.is_empty() {
            return Ok((x, 0, false));
        }
        let mut lambda = 1e-3;
        let mut iter = 0;
        while iter < opts.max_iterations {
            iter += 1;
            let jac = self.jacobian(&x, &cols, m, opts.fd_step)?;
            let grad = jac.transpose() * &r;
            let active = self.active(&x, &cols, &grad);
            if (f / m as f64).sqrt() <= opts.rms_floor || Self::gradient_measure(&x, &cols, &grad, f, &active) <= opts.gtol {
                return Ok((x, iter, false));
            }
            let jtj = jac.transpose() * &jac;
            let mut accepted = false;
            while lambda < 1e20 {
                let mut a = jtj.clone();
                for c in 0..cols.len() {
                    if active[c] {
                        a.row_mut(c).fill(0.0);
                        a.column_mut(c).fill(0.0);
                        a[(c, c)] = 1.0;
                    } else {
                        a[(c, c)] += lambda * jtj[(c, c)].max(1e-30);
                    }
                }
                let mut b = -&grad;
                for c in 0..cols.len() {
                    if active[c] {
                        b[c] = 0.0;
                    }
                }
                let Some(step) = a.cholesky().map(|ch| ch.solve(&b)) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut trial = x.clone();
                for (c, &j) in cols.iter().enumerate() {
                    trial[j] += step[c];
                }
                self.clip(&mut trial);
                let (rt, ft) = self.eval(&trial)?;
                if ft < f {
                    let small = cols
                        .iter()
                        .all(|&j| (trial[j] - x[j]).abs() <= opts.xtol * x[j].abs().max(1.0));
                    let rel = (f - ft) / f;
                    x = trial;
                    r = DVector::from_vec(rt);
                    f = ft;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if small || rel <= opts.ftol {
                        return Ok((x, iter, false));
                    }
                    break;
                }
                lambda *= 4.0;
            }
            if !accepted {
                // no improving step at any damping: a numerical minimum
                return Ok((x, iter, false));
            }
        }
        Ok((x, iter, true))
    }

    fn nelder_mead(&self, mut x: Vec<f64>, opts: &MinimizeOptions) -> Result<(Vec<f64>, usize, bool)> {
        let cols = self.free();
        if cols.is_empty() {
            self.eval(&x)?;
            return Ok((x, 0, false));
        }
        let mut f = self.eval(&x)?.1;
        let mut total = 0;
        for _ in 0..=opts.max_restarts {
            let budget = opts.max_iterations.saturating_sub(total);
            if budget == 0 {
                return Ok((x, total, true));
            }
            let (xn, fn_, iters, done) = self.simplex_run(&x, &cols, budget, opts)?;
            total += iters;
            let improved = fn_ < f && (f - fn_) > opts.ftol * f.abs().max(f64::MIN_POSITIVE);
            if fn_ < f {
                x = xn;
                f = fn_;
            }
            if !done {
                return Ok((x, total, true));
            }
            if !improved {
                break;
            }
        }
        Ok((x, total, false))
    }

    /// One Nelder–Mead run on the free coordinates.
    fn simplex_run(
        &self,
        x0: &[f64],
        cols: &[usize],
        budget: usize,
        opts: &MinimizeOptions,
    ) -> Result<(Vec<f64>, f64, usize, bool)> {
        let n = cols.len();
        let embed = |v: &[f64]| {
            let mut full = x0.to_vec();
            for (c, &j) in cols.iter().enumerate() {
                full[j] = v[c];
            }
            self.clip(&mut full);
            full
        };
        let project = |full: &[f64]| cols.iter().map(|&j| full[j]).collect::<Vec<_>>();
        let objective = |v: &[f64]| -> Result<(Vec<f64>, f64)> {
            let full = embed(v);
            let f = self.eval(&full)?.1;
            Ok((project(&full), f))
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push(objective(&project(x0))?);
        for c in 0..n {
            let mut v = simplex[0].0.clone();
            let j = cols[c];
            let step = if v[c] != 0.0 { 0.05 * v[c].abs() } else { 2.5e-4 };
            let (lo, hi) = self.bounds[j];
            v[c] = if v[c] + step <= hi { v[c] + step } else { (v[c] - step).max(lo) };
            simplex.push(objective(&v)?);
        }

        let mut iter = 0;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, fbest) = (&simplex[0].0, simplex[0].1);
            let fspread = simplex.iter().map(|s| (s.1 - fbest).abs()).fold(0.0, f64::max);
            let xspread = simplex
                .iter()
                .flat_map(|s| s.0.iter().zip(best).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)))
                .fold(0.0, f64::max);
            if xspread <= opts.xtol || (fspread == 0.0 && xspread <= opts.xtol.sqrt()) {
                return Ok((embed(best), fbest, iter, true));
            }
            if iter >= budget {
                return Ok((embed(best), fbest, iter, false));
            }
            iter += 1;

            let centroid: Vec<f64> = (0..n)
                .map(|c| simplex[..n].iter().map(|s| s.0[c]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
            };
            let reflected = objective(&along(-1.0))?;
            if reflected.1 < simplex[0].1 {
                let expanded = objective(&along(-2.0))?;
                simplex[n] = if expanded.1 < reflected.1 { expanded } else { reflected };
                continue;
            }
            if reflected.1 < simplex[n - 1].1 {
                simplex[n] = reflected;
                continue;
            }
            let contracted = if reflected.1 < simplex[n].1 {
                objective(&along(-0.5))?
            } else {
                objective(&along(0.5))?
            };
            if contracted.1 < simplex[n].1.min(reflected.1) {
                simplex[n] = contracted;
                continue;
            }
            let anchor = simplex[0].0.clone();
            for s in simplex.iter_mut().skip(1) {
                let v: Vec<f64> = anchor.iter().zip(&s.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                *s = objective(&v)?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(p: &[f64]) -> Vec<f64> {
        vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]
    }

    #[test]
    fn quadratic_both_methods() {
        let c = [1.5, -2.0, 0.25];
        let res = |p: &[f64]| p.iter().zip(&c).enumerate().map(|(i, (x, c))| (i + 1) as f64 * (x - c)).collect();
        for m in [Method::Simplex, Method::GaussNewton] {
            let fit = minimize(&res, &[0.0; 3], &[(-10.0, 10.0); 3], m, &MinimizeOptions::default()).unwrap();
            assert!(fit.converged, "{m:?} {:?}", fit.warnings);
            for (x, c) in fit.params.iter().zip(&c) {
                assert!((x - c).abs() < 1e-6, "{m:?}: {x} vs {c}");
            }
        }
    }

    #[test]
    fn rosenbrock_both_methods() {
        for m in [Method::Simplex, Method::GaussNewton] {
            let fit = minimize(&rosenbrock, &[-1.2, 1.0], &[(-5.0, 5.0); 2], m, &MinimizeOptions::default()).unwrap();
            assert!(fit.converged, "{m:?} {:?}", fit.warnings);
            assert!((fit.params[0] - 1.0).abs() < 1e-4 && (fit.params[1] - 1.0).abs() < 1e-4, "{m:?} {:?}", fit.params);
        }
    }

    #[test]
    fn bound_becomes_active() {
        let res = |p: &[f64]| vec![p[0] - 3.0, p[1] + 1.0];
        for m in [Method::Simplex, Method::GaussNewton] {
            let fit = minimize(&res, &[0.5, 0.5], &[(0.0, 2.0), (-5.0, 5.0)], m, &MinimizeOptions::default()).unwrap();
            assert!((fit.params[0] - 2.0).abs() < 1e-9, "{m:?} {:?}", fit.params);
            assert!((fit.params[1] + 1.0).abs() < 1e-6);
            assert_eq!(fit.active_bounds, vec![true, false]);
            assert!(fit.converged, "{m:?} {:?}", fit.warnings);
        }
    }

    #[test]
    fn nan_objective_is_reported() {
        let res = |p: &[f64]| vec![p[0].ln()];
        let err = minimize(&res, &[-1.0], &[(-2.0, 2.0)], Method::GaussNewton, &MinimizeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { ref params } if params == &vec![-1.0]));
    }

    #[test]
    fn singular_combination_warns() {
        // only p0 + p1 is determined
        let res = |p: &[f64]| vec![p[0] + p[1] - 1.0, 2.0 * (p[0] + p[1]) - 2.1];
        let fit = minimize(&res, &[0.2, 0.3], &[(-5.0, 5.0); 2], Method::GaussNewton, &MinimizeOptions::default()).unwrap();
        assert!(fit.condition_number > CONDITION_WARNING);
        assert!(fit.warnings.iter().any(|w| w.contains("ill-conditioned")));
    }

    #[test]
    fn deterministic() {
        let a = minimize(&rosenbrock, &[-1.2, 1.0], &[(-5.0, 5.0); 2], Method::Simplex, &MinimizeOptions::default()).unwrap();
        let b = minimize(&rosenbrock, &[-1.2, 1.0], &[(-5.0, 5.0); 2], Method::Simplex, &MinimizeOptions::default()).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn standard_errors_of_linear_fit() {
        // y = a x + b with known residual pattern
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0 + if (*x as i32) % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let res = |p: &[f64]| xs.iter().zip(&ys).map(|(x, y)| p[0] * x + p[1] - y).collect();
        let fit = minimize(&res, &[0.0, 0.0], &[(-10.0, 10.0); 2], Method::GaussNewton, &MinimizeOptions::default()).unwrap();
        let sxx: f64 = xs.iter().map(|x| (x - 4.5).powi(2)).sum();
        let s2 = fit.objective / 8.0;
        assert!((fit.std_errors[0] / (s2 / sxx).sqrt() - 1.0).abs() < 1e-4);
    }
}
