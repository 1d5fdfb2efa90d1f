use alloc::vec::Vec;

use super::linalg::{solve_linear, Matrix};
use super::vector::{all_finite, axpy, norm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Number of iterations that fell back to a gradient step because the
    /// Jacobian was singular or the Newton direction failed.
    pub fallback_steps: usize,
}

/// Damped Newton iteration for `F(x) = 0` with a halving line search on
/// `‖F‖`. A trial point where `F` is not finite counts as a failed trial,
/// which keeps iterates inside the domain of `F`.
pub fn newton_solve(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    jac: &dyn Fn(&[f64]) -> Matrix,
    x0: &[f64],
    opts: NewtonOptions,
) -> Result<NewtonReport> {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !all_finite(&fx) {
        return Err(Error::NonFinite("residual at the starting point"));
    }
    let mut r = norm(&fx);
    let mut fallback_steps = 0;
    for it in 0..=opts.max_iter {
        if r <= opts.tol {
            return Ok(NewtonReport {
                x,
                residual: r,
                iterations: it,
                fallback_steps,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let j = jac(&x);
        let minus_f: Vec<f64> = fx.iter().map(|v| -v).collect();
        let newton_dir = if j.is_finite() {
            solve_linear(&j, &minus_f).ok().filter(|d| all_finite(d))
        } else {
            None
        };
        let mut accepted = None;
        if let Some(d) = &newton_dir {
            accepted = line_search(f, &x, d, r);
        }
        if accepted.is_none() && j.is_finite() {
            let g = j.tr_mul_vec(&minus_f);
            let gn = norm(&g);
            if gn > 0.0 {
                fallback_steps += 1;
                // Scale the descent direction of ½‖F‖² to the Newton length.
                let d: Vec<f64> = g.iter().map(|v| v * r / gn).collect();
                accepted = line_search(f, &x, &d, r);
            }
        }
        match accepted {
            Some((xn, fxn, rn)) => {
                x = xn;
                fx = fxn;
                r = rn;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: r,
                    last: x,
                })
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: r,
        last: x,
    })
}

fn line_search(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    d: &[f64],
    r: f64,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let mut t = 1.0;
    for _ in 0..60 {
        let xn = axpy(x, t, d);
        let fxn = f(&xn);
        if all_finite(&fxn) {
            let rn = norm(&fxn);
            if rn <= (1.0 - 1e-4 * t) * r {
                return Some((xn, fxn, rn));
            }
        }
        t *= 0.5;
    }
    None
}
