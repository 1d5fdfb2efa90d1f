use alloc::vec::Vec;

use super::linalg::{Matrix, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FdGradient {
    pub value: Vec<f64>,
    /// Set when some coordinate used a one-sided stencil because the central
    /// one left the domain of `f`.
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdHessian {
    pub value: SymMatrix,
    pub one_sided: bool,
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

/// Central-difference gradient with a second-order one-sided fallback.
pub fn finite_diff_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<FdGradient> {
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(Error::Domain { margin: f64::NAN });
    }
    let mut one_sided = false;
    let mut value = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let fp = f(&shifted(x, &[(i, h)]));
        let fm = f(&shifted(x, &[(i, -h)]));
        if fp.is_finite() && fm.is_finite() {
            value.push((fp - fm) / (2.0 * h));
            continue;
        }
        one_sided = true;
        let s = if fp.is_finite() { 1.0 } else { -1.0 };
        let f1 = if s > 0.0 { fp } else { fm };
        let f2 = f(&shifted(x, &[(i, 2.0 * s * h)]));
        if !f1.is_finite() || !f2.is_finite() {
            return Err(Error::Domain { margin: f64::NAN });
        }
        value.push(s * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h));
    }
    Ok(FdGradient { value, one_sided })
}

/// Second differences of `f`; central when the full stencil is finite,
/// forward (flagged, first order) otherwise.
pub fn finite_diff_hess(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<FdHessian> {
    let n = x.len();
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(Error::Domain { margin: f64::NAN });
    }
    let central_stencil = || {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            let fp = f(&shifted(x, &[(i, h)]));
            let fm = f(&shifted(x, &[(i, -h)]));
            m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in i + 1..n {
                let fpp = f(&shifted(x, &[(i, h), (j, h)]));
                let fpm = f(&shifted(x, &[(i, h), (j, -h)]));
                let fmp = f(&shifted(x, &[(i, -h), (j, h)]));
                let fmm = f(&shifted(x, &[(i, -h), (j, -h)]));
                m[(i, j)] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                m[(j, i)] = m[(i, j)];
            }
        }
        m.is_finite().then_some(m)
    };
    let central = central_stencil();
    if let Some(m) = central {
        return Ok(FdHessian {
            value: SymMatrix::symmetric_part(&m),
            one_sided: false,
        });
    }
    let mut sign = Vec::with_capacity(n);
    for i in 0..n {
        let ok = |s: f64| {
            f(&shifted(x, &[(i, s * h)])).is_finite()
                && f(&shifted(x, &[(i, 2.0 * s * h)])).is_finite()
        };
        if ok(1.0) {
            sign.push(1.0);
        } else if ok(-1.0) {
            sign.push(-1.0);
        } else {
            return Err(Error::Domain { margin: f64::NAN });
        }
    }
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let si = sign[i] * h;
        let f1 = f(&shifted(x, &[(i, si)]));
        let f2 = f(&shifted(x, &[(i, 2.0 * si)]));
        m[(i, i)] = (f0 - 2.0 * f1 + f2) / (h * h);
        for j in i + 1..n {
            let sj = sign[j] * h;
            let fij = f(&shifted(x, &[(i, si), (j, sj)]));
            let fj = f(&shifted(x, &[(j, sj)]));
            m[(i, j)] = (fij - f1 - fj + f0) / (si * sj);
            m[(j, i)] = m[(i, j)];
        }
    }
    if !m.is_finite() {
        return Err(Error::Domain { margin: f64::NAN });
    }
    Ok(FdHessian {
        value: SymMatrix::symmetric_part(&m),
        one_sided: true,
    })
}

/// Jacobian of a vector map by central differences, falling back to forward
/// or backward differences per coordinate when the stencil leaves the domain.
pub fn fd_jacobian(g: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Result<Matrix> {
    let g0 = g(x);
    let finite = |v: &[f64]| v.iter().all(|a| a.is_finite());
    if !finite(&g0) {
        return Err(Error::Domain { margin: f64::NAN });
    }
    let mut jac = Matrix::zeros(g0.len(), x.len());
    for j in 0..x.len() {
        let gp = g(&shifted(x, &[(j, h)]));
        let gm = g(&shifted(x, &[(j, -h)]));
        let col: Vec<f64> = match (finite(&gp), finite(&gm)) {
            (true, true) => gp
                .iter()
                .zip(&gm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect(),
            (true, false) => gp.iter().zip(&g0).map(|(a, b)| (a - b) / h).collect(),
            (false, true) => g0.iter().zip(&gm).map(|(a, b)| (a - b) / h).collect(),
            (false, false) => return Err(Error::Domain { margin: f64::NAN }),
        };
        for (i, v) in col.into_iter().enumerate() {
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}
