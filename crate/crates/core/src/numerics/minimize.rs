use alloc::boxed::Box;
use alloc::vec::Vec;

use super::eig::sym_eig;
use super::fd::fd_jacobian;
use super::linalg::SymMatrix;
use super::vector::{dot, norm_inf};
use crate::{Error, Result};

/// A smooth objective with an analytic gradient. Values outside the domain
/// are reported as non-finite.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
}

/// Objective assembled from a value closure and a gradient closure.
pub struct FnObjective<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> FnObjective<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(value: V, gradient: G) -> Self {
        FnObjective { value, gradient }
    }
}

impl<V, G> Objective for FnObjective<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Stop once the projected gradient sup-norm falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Relative step of the finite-difference Hessian.
    pub fd_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            grad_tol: 1e-12,
            max_iter: 200,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Projected gradient at `x` (zero components on active bounds).
    pub projected_gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (v, (lo, hi)) in x.iter_mut().zip(b) {
            *v = v.max(*lo).min(*hi);
        }
    }
}

fn projected_gradient(
    x: &[f64],
    g: &[f64],
    bounds: Option<&[(f64, f64)]>,
) -> (Vec<f64>, Vec<bool>) {
    let mut pg = g.to_vec();
    let mut active = alloc::vec![false; x.len()];
    if let Some(b) = bounds {
        for i in 0..x.len() {
            let (lo, hi) = b[i];
            if (x[i] <= lo && g[i] > 0.0) || (x[i] >= hi && g[i] < 0.0) {
                pg[i] = 0.0;
                active[i] = true;
            }
        }
    }
    (pg, active)
}

/// Projected Newton minimization over an optional box.
///
/// The Hessian comes from central differences of the analytic gradient and
/// is regularized through its spectrum; the step is accepted by an Armijo
/// rule along the projected arc, so the objective never increases.
pub fn minimize_box(
    obj: &dyn Objective,
    x0: &[f64],
    bounds: Option<&[(f64, f64)]>,
    opts: MinimizeOptions,
) -> Result<Minimum> {
    let n = x0.len();
    if let Some(b) = bounds {
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.len(),
            });
        }
    }
    let mut x = x0.to_vec();
    clamp(&mut x, bounds);
    let mut fx = obj.value(&x);
    if !fx.is_finite() {
        return Err(Error::Domain { margin: f64::NAN });
    }
    let mut g = obj.gradient(&x);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let mut stalled = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let (pg, active) = projected_gradient(&x, &g, bounds);
        if norm_inf(&pg) <= opts.grad_tol {
            return Ok(Minimum {
                x,
                value: fx,
                projected_gradient: pg,
                iterations: it,
                converged: true,
            });
        }
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let dir = newton_direction(obj, &x, &g, &free, opts.fd_step);
        let mut d = alloc::vec![0.0; n];
        for (k, &i) in free.iter().enumerate() {
            d[i] = dir[k];
        }
        if dot(&d, &pg) >= 0.0 {
            d = pg.iter().map(|v| -v).collect();
        }
        match arc_search(obj, &x, fx, &g, &d, bounds) {
            Some((xn, fxn)) => {
                let moved = x.iter().zip(&xn).any(|(a, b)| a != b);
                x = xn;
                fx = fxn;
                g = obj.gradient(&x);
                if !moved {
                    stalled = true;
                    break;
                }
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    let (pg, _) = projected_gradient(&x, &g, bounds);
    // Rounding can stop progress before the nominal tolerance; accept a
    // small multiple of it in that case.
    let converged = norm_inf(&pg) <= opts.grad_tol
        || (stalled && norm_inf(&pg) <= 1e4 * opts.grad_tol.max(1e-14));
    Ok(Minimum {
        x,
        value: fx,
        projected_gradient: pg,
        iterations,
        converged,
    })
}

fn newton_direction(
    obj: &dyn Objective,
    x: &[f64],
    g: &[f64],
    free: &[usize],
    fd_step: f64,
) -> Vec<f64> {
    let m = free.len();
    let gf: Vec<f64> = free.iter().map(|&i| g[i]).collect();
    let steepest = || gf.iter().map(|v| -v).collect::<Vec<f64>>();
    if m == 0 {
        return Vec::new();
    }
    let h = fd_step * (1.0 + norm_inf(x));
    let grad_free = |z: &[f64]| {
        let mut y = x.to_vec();
        for (k, &i) in free.iter().enumerate() {
            y[i] = z[k];
        }
        let gz = obj.gradient(&y);
        free.iter().map(|&i| gz[i]).collect::<Vec<f64>>()
    };
    let xf: Vec<f64> = free.iter().map(|&i| x[i]).collect();
    let jac = match fd_jacobian(&grad_free, &xf, h) {
        Ok(j) => j,
        Err(_) => return steepest(),
    };
    let hess = SymMatrix::symmetric_part(&jac);
    let eig = match sym_eig(&hess) {
        Ok(e) => e,
        Err(_) => return steepest(),
    };
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-300);
    let floor = 1e-10 * scale;
    let mut d = alloc::vec![0.0; m];
    for k in 0..m {
        let v = eig.vector(k);
        let c = dot(&v, &gf);
        let lam = eig.values[k];
        // Curvature-free or negative directions take a unit-scaled gradient step.
        let coef = if lam > floor { -c / lam } else { -c };
        for (di, vi) in d.iter_mut().zip(&v) {
            *di += coef * vi;
        }
    }
    d
}

fn arc_search(
    obj: &dyn Objective,
    x: &[f64],
    fx: f64,
    g: &[f64],
    d: &[f64],
    bounds: Option<&[(f64, f64)]>,
) -> Option<(Vec<f64>, f64)> {
    let mut t = 1.0;
    let tiny = 8.0 * f64::EPSILON * fx.abs().max(1.0);
    let g_norm = norm_inf(g);
    for _ in 0..80 {
        let mut xn: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
        clamp(&mut xn, bounds);
        let fxn = obj.value(&xn);
        if fxn.is_finite() {
            let dec: f64 = g
                .iter()
                .zip(xn.iter().zip(x))
                .map(|(gi, (a, b))| gi * (a - b))
                .sum();
            if fxn <= fx + 1e-4 * dec {
                return Some((xn, fxn));
            }
            // Within rounding of the current value the Armijo test is noise;
            // accept the longest step that clearly shrinks the gradient.
            if fxn <= fx + tiny && norm_inf(&obj.gradient(&xn)) < 0.5 * g_norm {
                return Some((xn, fxn));
            }
        }
        t *= 0.5;
    }
    None
}
