//! Root finding and finite differences shared by the physics modules.
//!
//! Everything here takes an explicit [`SolverConfig`]; there are no global
//! tolerances.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Iteration cap for one-dimensional root finding.
    pub max_iter_1d: usize,
    /// Iteration cap for the two-dimensional (and n-dimensional) Newton solver.
    pub max_iter_2d: usize,
    /// Relative step for finite-difference Jacobians.
    pub fd_step: f64,
    /// Relative radius around poles and band edges inside which evaluation is refused.
    pub edge_exclusion: f64,
    /// Bracket width at which bisection hands over to Newton.
    pub bisect_width: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_iter_1d: 200,
            max_iter_2d: 100,
            fd_step: 1e-7,
            edge_exclusion: 1e-9,
            bisect_width: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("solver.abs_tol", self.abs_tol),
            ("solver.rel_tol", self.rel_tol),
            ("solver.fd_step", self.fd_step),
            ("solver.edge_exclusion", self.edge_exclusion),
            ("solver.bisect_width", self.bisect_width),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.max_iter_1d == 0 {
            return Err(Error::invalid("solver.max_iter_1d", "must be at least 1"));
        }
        if self.max_iter_2d == 0 {
            return Err(Error::invalid("solver.max_iter_2d", "must be at least 1"));
        }
        Ok(())
    }
}

/// Centered difference `(f(x+step) - f(x-step)) / (2 step)`.
pub fn fd_derivative<F>(f: F, x: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok((f(x + step)? - f(x - step)?) / (2.0 * step))
}

/// Bisection until the bracket is narrower than `cfg.bisect_width` (relative
/// to the bracket scale), then safeguarded Newton with a finite-difference
/// slope. Newton steps that leave the current bracket fall back to bisection.
///
/// Converges when `|f(x)| < cfg.abs_tol`. If the bracket collapses to
/// adjacent floats first, the endpoint with the smaller residual is returned.
pub fn bisect_then_newton<F>(f: F, bracket: (f64, f64), cfg: &SolverConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }

    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x)?;
    let mut newton = false;

    for _ in 0..cfg.max_iter_1d {
        if fx.abs() < cfg.abs_tol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if hi - lo <= 2.0 * f64::EPSILON * scale {
            return Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi });
        }
        if !newton && hi - lo < cfg.bisect_width * scale {
            newton = true;
        }

        let mut next = 0.5 * (lo + hi);
        if newton {
            let step = (cfg.fd_step * x.abs())
                .max(cfg.fd_step * scale)
                .min(0.25 * (hi - lo));
            let slope = match fd_derivative(&f, x, step) {
                Ok(s) => s,
                Err(_) => (f_hi - f_lo) / (hi - lo),
            };
            if slope != 0.0 && slope.is_finite() {
                let candidate = x - fx / slope;
                if candidate > lo && candidate < hi {
                    next = candidate;
                }
            }
        }
        x = next;
        fx = f(x)?;
    }
    if fx.abs() < cfg.abs_tol {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter_1d,
        residual: fx.abs(),
    })
}

/// Outcome of a multidimensional Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution<X> {
    pub x: X,
    /// Max-norm of the residual at `x`.
    pub residual: f64,
    pub iterations: usize,
    /// Every iterate, starting with the seed.
    pub history: Vec<X>,
}

/// Newton's method for `F: R^2 -> R^2` with a finite-difference Jacobian.
pub fn newton2d<F>(f: F, seed: [f64; 2], cfg: &SolverConfig) -> Result<NewtonSolution<[f64; 2]>>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let sol = newton(
        |x: &[f64]| f([x[0], x[1]]).map(|v| v.to_vec()),
        seed.to_vec(),
        cfg,
    )?;
    let arr = |v: &Vec<f64>| [v[0], v[1]];
    Ok(NewtonSolution {
        x: arr(&sol.x),
        residual: sol.residual,
        iterations: sol.iterations,
        history: sol.history.iter().map(arr).collect(),
    })
}

/// Newton's method for `F: R^N -> R^N` with a forward-difference Jacobian
/// (step `cfg.fd_step * max(|x_i|, 1)`).
///
/// Once `max |F| < cfg.abs_tol` one further step is taken and kept if it does
/// not increase the residual; this polishes the root to working precision.
pub fn newton<F>(f: F, seed: Vec<f64>, cfg: &SolverConfig) -> Result<NewtonSolution<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut x = seed;
    let mut fx = f(&x)?;
    if fx.len() != x.len() {
        return Err(Error::invalid("newton", "system must be square"));
    }
    let mut history = vec![x.clone()];

    for it in 0..cfg.max_iter_2d {
        let converged = norm(&fx) < cfg.abs_tol;
        let done = |x: Vec<f64>, fx: &[f64], iterations, history| NewtonSolution {
            x,
            residual: norm(fx),
            iterations,
            history,
        };
        let step = match newton_step(&f, &x, &fx, cfg) {
            Ok(s) => s,
            Err(_) if converged => return Ok(done(x, &fx, it, history)),
            Err(e) => return Err(e),
        };
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - s).collect();
        let f_trial = match f(&trial) {
            Ok(v) => v,
            Err(_) if converged => return Ok(done(x, &fx, it, history)),
            Err(e) => return Err(e),
        };
        if converged {
            if norm(&f_trial) <= norm(&fx) {
                history.push(trial.clone());
                return Ok(done(trial, &f_trial, it + 1, history));
            }
            return Ok(done(x, &fx, it + 1, history));
        }
        x = trial;
        fx = f_trial;
        history.push(x.clone());
        if x.iter().chain(&fx).any(|v| !v.is_finite()) {
            break;
        }
    }
    if norm(&fx) < cfg.abs_tol {
        return Ok(NewtonSolution {
            x,
            residual: norm(&fx),
            iterations: cfg.max_iter_2d,
            history,
        });
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter_2d,
        residual: norm(&fx),
    })
}

fn newton_step<F>(f: &F, x: &[f64], fx: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    let mut xp = x.to_vec();
    for col in 0..n {
        let h = cfg.fd_step * x[col].abs().max(1.0);
        xp[col] = x[col] + h;
        let fp = f(&xp)?;
        xp[col] = x[col];
        for row in 0..n {
            jac[(row, col)] = (fp[row] - fx[row]) / h;
        }
    }
    let singular = || Error::SingularJacobian { at: x.to_vec() };
    let lu = jac.lu();
    if !lu.is_invertible() {
        return Err(singular());
    }
    let sol = lu
        .solve(&DVector::from_column_slice(fx))
        .ok_or_else(singular)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok(sol.as_slice().to_vec())
}

/// `points` equally spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let dx = (stop - start) / (points - 1) as f64;
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        stop
                    } else {
                        start + dx * i as f64
                    }
                })
                .collect()
        }
    }
}
