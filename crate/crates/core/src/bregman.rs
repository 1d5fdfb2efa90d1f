//! Bregman divergences of Legendre generators and Bregman projections.

use alloc::vec::Vec;

use crate::constraint::{minimize_over, ConstraintSet, SetMinimum, SolveOptions, Start};
use crate::expfam::ExpFamily;
use crate::numerics::vector::{dot, norm, sub};
use crate::numerics::{Objective, SymMatrix};
use crate::{Error, Result};

/// A convex function of Legendre type, described by its value, first two
/// derivatives and the interior of its domain.
///
/// `domain_margin` is positive exactly on the interior. Outside the domain
/// `value` returns `+∞` and `gradient` non-finite entries.
pub trait LegendreGenerator: Send + Sync {
    fn dim(&self) -> usize;
    fn domain_margin(&self, x: &[f64]) -> f64;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> SymMatrix;

    /// Closed-form inverse of the gradient map, when known.
    fn gradient_inverse(&self, _eta: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Positive exactly on the interior of the dual domain, when known.
    fn dual_margin(&self, _eta: &[f64]) -> Option<f64> {
        None
    }

    /// An interior point used to start iterative inversions.
    fn anchor(&self) -> Vec<f64>;
}

/// Checks dimension, finiteness and interior membership.
pub fn check_interior<G: LegendreGenerator + ?Sized>(gen: &G, x: &[f64]) -> Result<()> {
    if x.len() != gen.dim() {
        return Err(Error::Dimension {
            expected: gen.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("parameter"));
    }
    let margin = gen.domain_margin(x);
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::Domain { margin });
    }
    Ok(())
}

/// `D(x, y) = ψ(x) − ψ(y) − ∇ψ(y)·(x − y)`.
///
/// Returns `+∞` when `y` is not interior or `ψ(x)` is infinite. Errors are
/// reserved for malformed input.
pub fn bregman_div<G: LegendreGenerator + ?Sized>(gen: &G, x: &[f64], y: &[f64]) -> Result<f64> {
    for v in [x, y] {
        if v.len() != gen.dim() {
            return Err(Error::Dimension {
                expected: gen.dim(),
                got: v.len(),
            });
        }
        if v.iter().any(|a| a.is_nan()) {
            return Err(Error::NonFinite("divergence argument"));
        }
    }
    if !(gen.domain_margin(y) > 0.0) {
        return Ok(f64::INFINITY);
    }
    let px = gen.value(x);
    if !px.is_finite() {
        return Ok(f64::INFINITY);
    }
    let d = px - gen.value(y) - dot(&gen.gradient(y), &sub(x, y));
    Ok(d)
}

/// `K(θ‖θ⁺) = D(θ⁺, θ)`: KL divergence between family members.
pub fn kl_divergence<F: ExpFamily + ?Sized>(
    fam: &F,
    theta: &[f64],
    theta_plus: &[f64],
) -> Result<f64> {
    check_interior(fam, theta)?;
    check_interior(fam, theta_plus)?;
    bregman_div(fam, theta_plus, theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOptions {
    pub start: Start,
    pub solve: SolveOptions,
    /// Maximum accepted norm of the first-order residual.
    pub tol: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            start: Start::Auto,
            solve: SolveOptions::default(),
            tol: 1e-8,
        }
    }
}

struct LeftObjective<'a, G: ?Sized> {
    gen: &'a G,
    target: &'a [f64],
    grad_target: Vec<f64>,
    value_target: f64,
}

impl<G: LegendreGenerator + ?Sized> Objective for LeftObjective<'_, G> {
    fn value(&self, x: &[f64]) -> f64 {
        if !(self.gen.domain_margin(x) > 0.0) {
            return f64::INFINITY;
        }
        self.gen.value(x) - self.value_target - dot(&self.grad_target, &sub(x, self.target))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        sub(&self.gen.gradient(x), &self.grad_target)
    }
}

struct RightObjective<'a, G: ?Sized> {
    gen: &'a G,
    source: &'a [f64],
    value_source: f64,
}

impl<G: LegendreGenerator + ?Sized> Objective for RightObjective<'_, G> {
    fn value(&self, x: &[f64]) -> f64 {
        if !(self.gen.domain_margin(x) > 0.0) {
            return f64::INFINITY;
        }
        self.value_source - self.gen.value(x) - dot(&self.gen.gradient(x), &sub(self.source, x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gen.hessian(x).mul_vec(&sub(x, self.source))
    }
}

fn finish(m: SetMinimum, tol: f64, iterations: usize) -> Result<SetMinimum> {
    let r = norm(&m.residual);
    if !m.converged || !(r <= tol) {
        return Err(Error::NoConvergence {
            iterations,
            residual: r,
            last: m.theta,
        });
    }
    Ok(m)
}

/// Minimizes `θ ↦ D(θ, ϑ)` over `set`.
pub fn left_projection<G: LegendreGenerator + ?Sized>(
    gen: &G,
    set: &ConstraintSet,
    target: &[f64],
    opts: &ProjectionOptions,
) -> Result<SetMinimum> {
    check_interior(gen, target)?;
    let obj = LeftObjective {
        gen,
        target,
        grad_target: gen.gradient(target),
        value_target: gen.value(target),
    };
    let m = minimize_over(set, &obj, target, &opts.start, &opts.solve)?;
    finish(m, opts.tol, opts.solve.minimize.max_iter)
}

/// Minimizes `ϑ ↦ D(θ, ϑ)` over `set`.
pub fn right_projection<G: LegendreGenerator + ?Sized>(
    gen: &G,
    set: &ConstraintSet,
    source: &[f64],
    opts: &ProjectionOptions,
) -> Result<SetMinimum> {
    check_interior(gen, source)?;
    let obj = RightObjective {
        gen,
        source,
        value_source: gen.value(source),
    };
    let m = minimize_over(set, &obj, source, &opts.start, &opts.solve)?;
    finish(m, opts.tol, opts.solve.minimize.max_iter)
}
