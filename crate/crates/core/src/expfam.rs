//! Exponential families described by their log-normalizer.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bregman::{check_interior, LegendreGenerator};
use crate::numerics::vector::{all_finite, dot, norm, sub};
use crate::numerics::{newton_solve, rank_with_tol, sym_eig, Matrix, NewtonOptions, SymMatrix};
use crate::{Error, Result};

/// An exponential family `p(x, θ) = exp(θ·T(x) − ψ(θ))`, given through its
/// log-normalizer `ψ` (the generator) and a description of `T`.
pub trait ExpFamily: LegendreGenerator {
    fn name(&self) -> String;
    fn statistic_label(&self) -> String;
}

/// `ψ(θ)`, failing outside the natural domain.
pub fn log_normalizer<F: LegendreGenerator + ?Sized>(fam: &F, theta: &[f64]) -> Result<f64> {
    check_interior(fam, theta)?;
    Ok(fam.value(theta))
}

/// Expectation parameter `η = ∇ψ(θ)`.
pub fn mean_param<F: LegendreGenerator + ?Sized>(fam: &F, theta: &[f64]) -> Result<Vec<f64>> {
    check_interior(fam, theta)?;
    Ok(fam.gradient(theta))
}

/// Inverse of the gradient map: the `θ` with `∇ψ(θ) = η`.
pub fn dual_param<F: LegendreGenerator + ?Sized>(fam: &F, eta: &[f64]) -> Result<Vec<f64>> {
    if eta.len() != fam.dim() {
        return Err(Error::Dimension {
            expected: fam.dim(),
            got: eta.len(),
        });
    }
    if !all_finite(eta) {
        return Err(Error::NonFinite("expectation parameter"));
    }
    if let Some(m) = fam.dual_margin(eta) {
        if !(m > 0.0) {
            return Err(Error::DualDomain);
        }
    }
    let tol = 1e-9 * norm(eta).max(1.0);
    if let Some(theta) = fam.gradient_inverse(eta) {
        if !(fam.domain_margin(&theta) > 0.0) || !all_finite(&theta) {
            return Err(Error::DualDomain);
        }
        return Ok(theta);
    }
    let residual = |x: &[f64]| {
        if fam.domain_margin(x) > 0.0 {
            sub(&fam.gradient(x), eta)
        } else {
            alloc::vec![f64::NAN; x.len()]
        }
    };
    let jac = |x: &[f64]| fam.hessian(x).into_matrix();
    let opts = NewtonOptions {
        tol: 1e-12 * norm(eta).max(1.0),
        max_iter: 200,
    };
    let rep = newton_solve(&residual, &jac, &fam.anchor(), opts).or_else(|e| match e {
        Error::NoConvergence { residual, last, .. } if residual <= tol => {
            Ok(crate::numerics::NewtonReport {
                x: last,
                residual,
                iterations: 0,
                fallback_steps: 0,
            })
        }
        _ => Err(Error::DualDomain),
    })?;
    Ok(rep.x)
}

/// `ψ*(η) = θ·η − ψ(θ)` with `θ = dual_param(η)`.
pub fn legendre_conjugate<F: LegendreGenerator + ?Sized>(fam: &F, eta: &[f64]) -> Result<f64> {
    let theta = dual_param(fam, eta)?;
    Ok(dot(&theta, eta) - fam.value(&theta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityReport {
    /// Smallest Hessian eigenvalue at each sample point.
    pub min_eigenvalues: Vec<f64>,
    pub pass: bool,
}

/// Tests positive definiteness of `∇²ψ` at the sample points.
pub fn check_minimality<F: LegendreGenerator + ?Sized>(
    fam: &F,
    points: &[Vec<f64>],
) -> Result<MinimalityReport> {
    let mut min_eigenvalues = Vec::with_capacity(points.len());
    let mut pass = !points.is_empty();
    for p in points {
        check_interior(fam, p)?;
        let e = sym_eig(&fam.hessian(p))?;
        let lmin = e.min_value();
        if !(lmin > 1e-12 * e.max_value().abs().max(1.0)) {
            pass = false;
        }
        min_eigenvalues.push(lmin);
    }
    Ok(MinimalityReport {
        min_eigenvalues,
        pass,
    })
}

/// The generator `u ↦ ψ(L u + c)` for a base generator `ψ`.
#[derive(Clone)]
pub struct AffinePullback {
    base: Arc<dyn LegendreGenerator>,
    map: Matrix,
    offset: Vec<f64>,
    name: String,
    statistic: String,
}

impl core::fmt::Debug for AffinePullback {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("AffinePullback")
            .field("map", &self.map)
            .field("offset", &self.offset)
            .field("name", &self.name)
            .finish()
    }
}

impl AffinePullback {
    pub fn new(
        base: Arc<dyn LegendreGenerator>,
        map: Matrix,
        offset: Vec<f64>,
        name: impl Into<String>,
        statistic: impl Into<String>,
    ) -> Result<Self> {
        if map.rows() != base.dim() {
            return Err(Error::Dimension {
                expected: base.dim(),
                got: map.rows(),
            });
        }
        if offset.len() != base.dim() {
            return Err(Error::Dimension {
                expected: base.dim(),
                got: offset.len(),
            });
        }
        if !map.is_finite() || !all_finite(&offset) {
            return Err(Error::NonFinite("affine map"));
        }
        Ok(AffinePullback {
            base,
            map,
            offset,
            name: name.into(),
            statistic: statistic.into(),
        })
    }

    pub fn map(&self) -> &Matrix {
        &self.map
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `L u + c`
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        self.map
            .mul_vec(u)
            .iter()
            .zip(&self.offset)
            .map(|(a, b)| a + b)
            .collect()
    }
}

impl LegendreGenerator for AffinePullback {
    fn dim(&self) -> usize {
        self.map.cols()
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        self.base.domain_margin(&self.lift(x))
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(&self.lift(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.map.tr_mul_vec(&self.base.gradient(&self.lift(x)))
    }

    fn hessian(&self, x: &[f64]) -> SymMatrix {
        self.base
            .hessian(&self.lift(x))
            .congruence(&self.map.transpose())
    }

    fn anchor(&self) -> Vec<f64> {
        // Least-squares preimage of the base anchor.
        let target = sub(&self.base.anchor(), &self.offset);
        let gram = SymMatrix::symmetric_part(&self.map.transpose().matmul(&self.map));
        let rhs = self.map.tr_mul_vec(&target);
        let n = self.dim();
        let Ok(e) = sym_eig(&gram) else {
            return alloc::vec![0.0; n];
        };
        let cut = 1e-12 * e.max_value().max(1.0);
        let mut u = alloc::vec![0.0; n];
        for k in 0..n {
            if e.values[k] > cut {
                let v = e.vector(k);
                let c = dot(&v, &rhs) / e.values[k];
                for (ui, vi) in u.iter_mut().zip(&v) {
                    *ui += c * vi;
                }
            }
        }
        u
    }
}

impl ExpFamily for AffinePullback {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn statistic_label(&self) -> String {
        self.statistic.clone()
    }
}

/// Reduces a family under the parameter constraint `θ₂ = A θ₁ + a`, where
/// `θ₁` holds the leading `m` coordinates. The result has log-normalizer
/// `ψ'(θ₁) = ψ(θ₁, A θ₁ + a)` and statistic `T₁ + AᵀT₂`.
pub fn affine_reduce(
    fam: Arc<dyn ExpFamily>,
    a: &Matrix,
    offset: &[f64],
) -> Result<AffinePullback> {
    let n = fam.dim();
    let m = a.cols();
    if a.rows() + m != n {
        return Err(Error::Dimension {
            expected: n - m,
            got: a.rows(),
        });
    }
    if offset.len() != a.rows() {
        return Err(Error::Dimension {
            expected: a.rows(),
            got: offset.len(),
        });
    }
    let map = Matrix::from_fn(n, m, |i, j| {
        if i < m {
            (i == j) as u8 as f64
        } else {
            a[(i - m, j)]
        }
    });
    let mut c = alloc::vec![0.0; m];
    c.extend_from_slice(offset);
    let name = format!("{}|reduced:{}", fam.name(), m);
    let label = format!("T1 + A^T T2 of {}", fam.statistic_label());
    AffinePullback::new(fam, map, c, name, label)
}

/// Rank of `∇²ψ(θ)` at relative tolerance `rel_tol`.
pub fn hessian_rank<F: LegendreGenerator + ?Sized>(
    fam: &F,
    theta: &[f64],
    rel_tol: f64,
) -> Result<usize> {
    check_interior(fam, theta)?;
    let e = sym_eig(&fam.hessian(theta))?;
    rank_with_tol(&e.values, rel_tol)
}
