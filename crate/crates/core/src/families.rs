//! Built-in generators and exponential families.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::bregman::LegendreGenerator;
use crate::expfam::ExpFamily;
use crate::numerics::{solve_linear, Matrix, SymMatrix};
use crate::{Error, Result};

fn nan_vec(n: usize) -> Vec<f64> {
    vec![f64::NAN; n]
}

/// Gaussian `N(μ, σ²)` observed through an i.i.d. sample of size `N`, with
/// statistic `T = (sample mean, sample mean of squares)` and natural
/// parameter `θ = (Nμ/σ², −N/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSample {
    n: f64,
}

impl GaussianSample {
    pub fn new(sample_size: u32) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::Invalid("sample size must be positive".into()));
        }
        Ok(GaussianSample {
            n: sample_size as f64,
        })
    }

    pub fn gaussian2() -> Self {
        GaussianSample { n: 2.0 }
    }

    pub fn sample_size(&self) -> f64 {
        self.n
    }

    /// `θ` for a given mean and variance.
    pub fn from_mean_variance(&self, mu: f64, var: f64) -> [f64; 2] {
        [self.n * mu / var, -self.n / (2.0 * var)]
    }

    /// `(μ, σ²)` for a natural parameter.
    pub fn mean_variance(&self, theta: &[f64]) -> (f64, f64) {
        (-theta[0] / (2.0 * theta[1]), -self.n / (2.0 * theta[1]))
    }
}

impl LegendreGenerator for GaussianSample {
    fn dim(&self) -> usize {
        2
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        -x[1]
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (t1, t2) = (x[0], x[1]);
        if !(t2 < 0.0) {
            return f64::INFINITY;
        }
        let h = 0.5 * self.n;
        -t1 * t1 / (4.0 * t2) - h * (-t2).ln() + h * h.ln()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (t1, t2) = (x[0], x[1]);
        if !(t2 < 0.0) {
            return nan_vec(2);
        }
        vec![
            -t1 / (2.0 * t2),
            t1 * t1 / (4.0 * t2 * t2) - self.n / (2.0 * t2),
        ]
    }

    fn hessian(&self, x: &[f64]) -> SymMatrix {
        let (t1, t2) = (x[0], x[1]);
        let t22 = t2 * t2;
        let h11 = -1.0 / (2.0 * t2);
        let h12 = t1 / (2.0 * t22);
        let h22 = -t1 * t1 / (2.0 * t22 * t2) + self.n / (2.0 * t22);
        SymMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => h11,
            (0, 1) => h12,
            _ => h22,
        })
    }

    fn gradient_inverse(&self, eta: &[f64]) -> Option<Vec<f64>> {
        let v = eta[1] - eta[0] * eta[0];
        if !(v > 0.0) {
            return None;
        }
        Some(vec![self.n * eta[0] / v, -self.n / (2.0 * v)])
    }

    fn dual_margin(&self, eta: &[f64]) -> Option<f64> {
        Some(eta[1] - eta[0] * eta[0])
    }

    fn anchor(&self) -> Vec<f64> {
        vec![0.0, -0.5 * self.n]
    }
}

impl ExpFamily for GaussianSample {
    fn name(&self) -> String {
        if self.n == 2.0 {
            "gaussian2".into()
        } else {
            format!("gaussianN:{}", self.n)
        }
    }

    fn statistic_label(&self) -> String {
        "(mean(x), mean(x^2))".into()
    }
}

/// Conditional log-normalizer of [`GaussianSample`] given the observed
/// sample mean `y`:
/// `ψ_y(θ) = θ₁y + θ₂y² − ((N−1)/2)·log(−θ₂) + ((N−1)/2)·log(N/2)`.
///
/// It is convex but flat along `θ₁`, so only the `θ₂` direction carries
/// missing information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSampleConditional {
    n: f64,
    y: f64,
}

impl GaussianSampleConditional {
    pub fn new(family: &GaussianSample, y: f64) -> Self {
        GaussianSampleConditional {
            n: family.sample_size(),
            y,
        }
    }

    pub fn observed(&self) -> f64 {
        self.y
    }
}

impl LegendreGenerator for GaussianSampleConditional {
    fn dim(&self) -> usize {
        2
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        -x[1]
    }

    fn value(&self, x: &[f64]) -> f64 {
        if !(x[1] < 0.0) {
            return f64::INFINITY;
        }
        let k = 0.5 * (self.n - 1.0);
        let c = if k == 0.0 {
            0.0
        } else {
            k * (0.5 * self.n).ln()
        };
        x[0] * self.y + x[1] * self.y * self.y - k * (-x[1]).ln() + c
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if !(x[1] < 0.0) {
            return nan_vec(2);
        }
        let k = 0.5 * (self.n - 1.0);
        vec![self.y, self.y * self.y - k / x[1]]
    }

    fn hessian(&self, x: &[f64]) -> SymMatrix {
        let k = 0.5 * (self.n - 1.0);
        SymMatrix::from_diag(&[0.0, k / (x[1] * x[1])])
    }

    fn anchor(&self) -> Vec<f64> {
        vec![0.0, -0.5 * self.n]
    }
}

/// `ψ(θ) = ½‖θ‖²`: the unit-covariance Gaussian location family, and the
/// generator of the squared Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    n: usize,
}

impl Quadratic {
    pub fn new(n: usize) -> Self {
        Quadratic { n }
    }
}

impl LegendreGenerator for Quadratic {
    fn dim(&self) -> usize {
        self.n
    }

    fn domain_margin(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn hessian(&self, _x: &[f64]) -> SymMatrix {
        SymMatrix::identity(self.n)
    }

    fn gradient_inverse(&self, eta: &[f64]) -> Option<Vec<f64>> {
        Some(eta.to_vec())
    }

    fn dual_margin(&self, _eta: &[f64]) -> Option<f64> {
        Some(f64::INFINITY)
    }

    fn anchor(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }
}

impl ExpFamily for Quadratic {
    fn name(&self) -> String {
        format!("quadratic:{}", self.n)
    }

    fn statistic_label(&self) -> String {
        "x".into()
    }
}

/// `ψ(x) = Σ xᵢ log xᵢ − xᵢ` on the positive orthant. Its Bregman divergence
/// is the generalized Kullback-Leibler distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegEntropy {
    n: usize,
}

impl NegEntropy {
    pub fn new(n: usize) -> Self {
        NegEntropy { n }
    }
}

impl LegendreGenerator for NegEntropy {
    fn dim(&self) -> usize {
        self.n
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        x.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for &v in x {
            if v > 0.0 {
                s += v * v.ln() - v;
            } else if v < 0.0 || v.is_nan() {
                return f64::INFINITY;
            }
        }
        s
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&v| if v > 0.0 { v.ln() } else { f64::NAN })
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> SymMatrix {
        let d: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
        SymMatrix::from_diag(&d)
    }

    fn gradient_inverse(&self, eta: &[f64]) -> Option<Vec<f64>> {
        Some(eta.iter().map(|v| v.exp()).collect())
    }

    fn dual_margin(&self, _eta: &[f64]) -> Option<f64> {
        Some(f64::INFINITY)
    }

    fn anchor(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
}

/// Gaussian with known covariance `Σ` and sufficient statistic `x`:
/// `ψ(θ) = ½ θᵀΣθ`, mean `Σθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKnownCovariance {
    cov: SymMatrix,
    cov_inv: Matrix,
}

impl GaussianKnownCovariance {
    pub fn new(cov: SymMatrix) -> Result<Self> {
        let n = cov.dim();
        let e = crate::numerics::sym_eig(&cov)?;
        if !(e.min_value() > 0.0) {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: e.min_value(),
            });
        }
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let mut ej = vec![0.0; n];
            ej[j] = 1.0;
            let c = solve_linear(cov.as_matrix(), &ej)?;
            for i in 0..n {
                inv[(i, j)] = c[i];
            }
        }
        Ok(GaussianKnownCovariance { cov, cov_inv: inv })
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.cov
    }
}

impl LegendreGenerator for GaussianKnownCovariance {
    fn dim(&self) -> usize {
        self.cov.dim()
    }

    fn domain_margin(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.cov.quad_form(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.cov.mul_vec(x)
    }

    fn hessian(&self, _x: &[f64]) -> SymMatrix {
        self.cov.clone()
    }

    fn gradient_inverse(&self, eta: &[f64]) -> Option<Vec<f64>> {
        Some(self.cov_inv.mul_vec(eta))
    }

    fn dual_margin(&self, _eta: &[f64]) -> Option<f64> {
        Some(f64::INFINITY)
    }

    fn anchor(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

impl ExpFamily for GaussianKnownCovariance {
    fn name(&self) -> String {
        format!("gaussian-known-cov:{}", self.dim())
    }

    fn statistic_label(&self) -> String {
        "x".into()
    }
}

/// Conditional log-normalizer of [`GaussianKnownCovariance`] when the
/// coordinates `observed` are seen with value `y` and the rest are missing:
/// `ψ_y(θ) = θ_o·y + θ_h·(C y) + ½ θ_hᵀ S θ_h` with `C = Σ_ho Σ_oo⁻¹` and
/// `S = Σ_hh − Σ_ho Σ_oo⁻¹ Σ_oh`.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingCoordinatesConditional {
    n: usize,
    observed: Vec<usize>,
    hidden: Vec<usize>,
    y: Vec<f64>,
    cy: Vec<f64>,
    schur: SymMatrix,
}

impl MissingCoordinatesConditional {
    pub fn new(family: &GaussianKnownCovariance, observed: &[usize], y: &[f64]) -> Result<Self> {
        let n = family.dim();
        if observed.len() != y.len() {
            return Err(Error::Dimension {
                expected: observed.len(),
                got: y.len(),
            });
        }
        if observed.iter().any(|&i| i >= n) {
            return Err(Error::Invalid("observed index out of range".into()));
        }
        let hidden: Vec<usize> = (0..n).filter(|i| !observed.contains(i)).collect();
        let cov = family.covariance().as_matrix();
        let s_oo = cov.select(observed, observed);
        let s_ho = cov.select(&hidden, observed);
        let s_hh = cov.select(&hidden, &hidden);
        // Columns of Σ_oo⁻¹ Σ_oh, one per hidden coordinate.
        let mut a = Matrix::zeros(observed.len(), hidden.len());
        for (j, _) in hidden.iter().enumerate() {
            let col = solve_linear(&s_oo, s_ho.row(j))?;
            for i in 0..observed.len() {
                a[(i, j)] = col[i];
            }
        }
        let schur = SymMatrix::symmetric_part(&s_hh.sub(&s_ho.matmul(&a)));
        let cy = a.tr_mul_vec(y);
        Ok(MissingCoordinatesConditional {
            n,
            observed: observed.to_vec(),
            hidden,
            y: y.to_vec(),
            cy,
            schur,
        })
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn schur_complement(&self) -> &SymMatrix {
        &self.schur
    }

    fn hidden_part(&self, x: &[f64]) -> Vec<f64> {
        self.hidden.iter().map(|&i| x[i]).collect()
    }
}

impl LegendreGenerator for MissingCoordinatesConditional {
    fn dim(&self) -> usize {
        self.n
    }

    fn domain_margin(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn value(&self, x: &[f64]) -> f64 {
        let th = self.hidden_part(x);
        let obs: f64 = self
            .observed
            .iter()
            .zip(&self.y)
            .map(|(&i, v)| x[i] * v)
            .sum();
        let hid: f64 = th.iter().zip(&self.cy).map(|(a, b)| a * b).sum();
        obs + hid + 0.5 * self.schur.quad_form(&th)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let th = self.hidden_part(x);
        let sth = self.schur.mul_vec(&th);
        let mut g = vec![0.0; self.n];
        for (&i, v) in self.observed.iter().zip(&self.y) {
            g[i] = *v;
        }
        for (k, &i) in self.hidden.iter().enumerate() {
            g[i] = self.cy[k] + sth[k];
        }
        g
    }

    fn hessian(&self, _x: &[f64]) -> SymMatrix {
        let pos = |i: usize| self.hidden.iter().position(|&h| h == i);
        SymMatrix::from_fn(self.n, |i, j| match (pos(i), pos(j)) {
            (Some(a), Some(b)) => self.schur[(a, b)],
            _ => 0.0,
        })
    }

    fn anchor(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }
}

/// Looks up an exponential family by configuration name:
/// `gaussian2`, `gaussianN:<N>`, `quadratic:<n>`.
pub fn family_by_name(name: &str) -> Result<alloc::sync::Arc<dyn ExpFamily>> {
    use alloc::sync::Arc;
    let parse = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| Error::Invalid(format!("bad size in family name {name:?}")))
    };
    match name.split_once(':') {
        None if name == "gaussian2" => Ok(Arc::new(GaussianSample::gaussian2())),
        Some(("gaussianN", n)) => Ok(Arc::new(GaussianSample::new(parse(n)?)?)),
        Some(("quadratic", n)) => Ok(Arc::new(Quadratic::new(parse(n)? as usize))),
        _ => Err(Error::Unsupported(format!("unknown family {name:?}"))),
    }
}

/// Looks up a generator by name; accepts every family name plus
/// `negentropy:<n>`.
pub fn generator_by_name(name: &str) -> Result<alloc::sync::Arc<dyn LegendreGenerator>> {
    if let Some(n) = name.strip_prefix("negentropy:") {
        let n = n
            .parse::<usize>()
            .map_err(|_| Error::Invalid(format!("bad size in generator name {name:?}")))?;
        return Ok(alloc::sync::Arc::new(NegEntropy::new(n)));
    }
    Ok(family_by_name(name)?)
}
