use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::linalg::{Matrix, SymMatrix};
use crate::{Error, Result};

/// Eigenvalues in non-increasing order with matching orthonormal
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigDecomposition {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.col(i)
    }

    /// `V Λ Vᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                .sum()
        })
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomposition> {
    let n = a.dim();
    let m = a.as_matrix();
    if !m.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let mut w = m.clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)] * w[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let wkp = w[(k, p)];
                    let wkq = w[(k, q)];
                    w[(k, p)] = c * wkp - s * wkq;
                    w[(k, q)] = s * wkp + c * wkq;
                }
                for k in 0..n {
                    let wpk = w[(p, k)];
                    let wqk = w[(q, k)];
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    // Fix signs so the largest-magnitude entry of each vector is positive.
    for j in 0..n {
        let mut k = 0;
        for i in 1..n {
            if vectors[(i, j)].abs() > vectors[(k, j)].abs() + 1e-12 {
                k = i;
            }
        }
        if vectors[(k, j)] < 0.0 {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    Ok(EigDecomposition { values, vectors })
}

/// Numerical rank of a positive semidefinite spectrum.
///
/// Counts eigenvalues above `rel_tol * max(λ_max, 1)`. An eigenvalue below
/// `-10 * rel_tol * max(λ_max, 1)` marks the input as not PSD.
pub fn rank_with_tol(values: &[f64], rel_tol: f64) -> Result<usize> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalues"));
    }
    let lmax = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let scale = lmax.max(1.0);
    if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -10.0 * rel_tol * scale {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
    }
    Ok(values.iter().filter(|&&v| v > rel_tol * scale).count())
}

/// Returns `(Q, P)` where the rows of `Q` are the eigenvectors (leading `m`
/// first) and `P = V_m V_mᵀ` projects onto the span of the leading `m`.
pub fn projection_from_eigvecs(decomp: &EigDecomposition, m: usize) -> Result<(Matrix, SymMatrix)> {
    let n = decomp.values.len();
    if m > n {
        return Err(Error::Dimension {
            expected: n,
            got: m,
        });
    }
    let q = decomp.vectors.transpose();
    let p = SymMatrix::from_fn(n, |i, j| {
        (0..m)
            .map(|k| decomp.vectors[(i, k)] * decomp.vectors[(j, k)])
            .sum()
    });
    Ok((q, p))
}
