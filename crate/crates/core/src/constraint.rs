//! Constraint sets and minimization of smooth objectives over them.
//!
//! Affine sets are handled by eliminating onto a nullspace basis, parametric
//! sets by reduction to the parameter box (after a dense grid scan),
//! sublevel sets by an augmented Lagrangian and explicit sets by projected
//! gradient descent.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::vector::{add, dist, dot, norm, norm_inf, sub};
use crate::numerics::{
    fd_jacobian, minimize_box, solve_linear, sym_eig, Matrix, MinimizeOptions, Objective, SymMatrix,
};
use crate::{Error, Result};

pub type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// Where a minimization over a set starts.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Start {
    /// Grid scan for parametric sets, the caller's reference point otherwise.
    #[default]
    Auto,
    /// Start near this point of the ambient space.
    Point(Vec<f64>),
    /// Start at this parameter of a parametric set.
    Param(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub minimize: MinimizeOptions,
    /// Feasibility tolerance for sublevel sets.
    pub feas_tol: f64,
    /// Outer iterations of the augmented Lagrangian.
    pub max_outer: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            minimize: MinimizeOptions::default(),
            feas_tol: 1e-10,
            max_outer: 40,
        }
    }
}

/// Result of a minimization over a constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct SetMinimum {
    pub theta: Vec<f64>,
    /// Parameter of `theta` when the set is parametric.
    pub param: Option<Vec<f64>>,
    pub value: f64,
    /// First-order residual in the ambient space: the objective gradient
    /// projected onto the feasible directions.
    pub residual: Vec<f64>,
    pub converged: bool,
}

/// `{θ : Aθ = b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    a: Matrix,
    b: Vec<f64>,
    particular: Vec<f64>,
    basis: Matrix,
}

impl AffineSet {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::Dimension {
                expected: a.rows(),
                got: b.len(),
            });
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine constraint"));
        }
        let n = a.cols();
        let gram = SymMatrix::symmetric_part(&a.transpose().matmul(&a));
        let e = sym_eig(&gram)?;
        let cut = 1e-10 * e.max_value().max(1.0);
        let atb = a.tr_mul_vec(&b);
        let mut particular = vec![0.0; n];
        let mut null = Vec::new();
        for k in 0..n {
            let v = e.vector(k);
            if e.values[k] > cut {
                let c = dot(&v, &atb) / e.values[k];
                for (p, vi) in particular.iter_mut().zip(&v) {
                    *p += c * vi;
                }
            } else {
                null.push(v);
            }
        }
        let resid = norm(&sub(&a.mul_vec(&particular), &b));
        if resid > 1e-9 * (1.0 + norm(&b)) {
            return Err(Error::Infeasible("inconsistent affine constraint".into()));
        }
        let basis = Matrix::from_fn(n, null.len(), |i, j| null[j][i]);
        Ok(AffineSet {
            a,
            b,
            particular,
            basis,
        })
    }

    /// The singleton `{p}`.
    pub fn point(p: &[f64]) -> Self {
        let n = p.len();
        AffineSet {
            a: Matrix::identity(n),
            b: p.to_vec(),
            particular: p.to_vec(),
            basis: Matrix::zeros(n, 0),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn offset(&self) -> &[f64] {
        &self.b
    }

    /// Orthonormal basis of the direction space, as columns.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn embed(&self, z: &[f64]) -> Vec<f64> {
        add(&self.particular, &self.basis.mul_vec(z))
    }

    pub fn coords(&self, theta: &[f64]) -> Vec<f64> {
        self.basis.tr_mul_vec(&sub(theta, &self.particular))
    }

    pub fn violation(&self, theta: &[f64]) -> f64 {
        norm(&sub(&self.a.mul_vec(theta), &self.b))
    }
}

/// `{θ : g(θ) ≤ 0}` componentwise.
#[derive(Clone)]
pub struct SublevelSet {
    dim: usize,
    g: VecFn,
    jacobian: Option<MatFn>,
}

impl SublevelSet {
    pub fn new(dim: usize, g: VecFn) -> Self {
        SublevelSet {
            dim,
            g,
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, j: MatFn) -> Self {
        self.jacobian = Some(j);
        self
    }

    pub fn constraints(&self, theta: &[f64]) -> Vec<f64> {
        (self.g)(theta)
    }

    pub fn jacobian(&self, theta: &[f64]) -> Result<Matrix> {
        match &self.jacobian {
            Some(j) => Ok(j(theta)),
            None => fd_jacobian(&*self.g, theta, 1e-7 * (1.0 + norm_inf(theta))),
        }
    }

    pub fn violation(&self, theta: &[f64]) -> f64 {
        (self.g)(theta).iter().fold(0.0f64, |m, v| m.max(*v))
    }
}

/// Image `{θ(u) : u ∈ box}` of a smooth map over a closed parameter box.
#[derive(Clone)]
pub struct ParametricSet {
    dim: usize,
    bounds: Vec<(f64, f64)>,
    map: VecFn,
    jacobian: Option<MatFn>,
    grid: usize,
}

impl ParametricSet {
    pub fn new(dim: usize, bounds: Vec<(f64, f64)>, map: VecFn) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Invalid(
                "parametric set needs at least one parameter".into(),
            ));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Invalid(
                    "parameter bounds must be finite and ordered".into(),
                ));
            }
        }
        let grid = match bounds.len() {
            1 => 512,
            2 => 64,
            _ => 16,
        };
        Ok(ParametricSet {
            dim,
            bounds,
            map,
            jacobian: None,
            grid,
        })
    }

    pub fn with_jacobian(mut self, j: MatFn) -> Self {
        self.jacobian = Some(j);
        self
    }

    /// Grid points per parameter dimension used by global scans.
    pub fn with_grid(mut self, points: usize) -> Self {
        self.grid = points.max(2);
        self
    }

    pub fn param_dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn theta(&self, u: &[f64]) -> Vec<f64> {
        (self.map)(u)
    }

    /// `∂θ/∂u`, `dim × param_dim`.
    pub fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        match &self.jacobian {
            Some(j) => Ok(j(u)),
            None => fd_jacobian(&*self.map, u, 1e-7 * (1.0 + norm_inf(u))),
        }
    }

    /// Grid parameters in lexicographic increasing order.
    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        let p = self.bounds.len();
        let g = self.grid;
        let axis = |k: usize, i: usize| {
            let (lo, hi) = self.bounds[k];
            if g == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (g - 1) as f64
            }
        };
        let total = g.pow(p as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; p];
        for _ in 0..total {
            out.push((0..p).map(|k| axis(k, idx[k])).collect());
            for k in (0..p).rev() {
                idx[k] += 1;
                if idx[k] < g {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    /// Parameter of the point of the set closest to `theta`.
    pub fn locate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let obj = ParamObjective {
            set: self,
            obj: &SquaredDistance { target: theta },
        };
        let u0 = best_grid_point(self, &obj)
            .ok_or_else(|| Error::Infeasible("empty parametric set".into()))?;
        let m = minimize_box(&obj, &u0, Some(&self.bounds), MinimizeOptions::default())?;
        Ok(m.x)
    }

    pub fn violation(&self, theta: &[f64]) -> f64 {
        match self.locate(theta) {
            Ok(u) => dist(&self.theta(&u), theta),
            Err(_) => f64::INFINITY,
        }
    }
}

/// A closed set given only through a projection operator.
#[derive(Clone)]
pub struct ExplicitSet {
    dim: usize,
    project: VecFn,
}

impl ExplicitSet {
    pub fn new(dim: usize, project: VecFn) -> Self {
        ExplicitSet { dim, project }
    }

    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        (self.project)(theta)
    }
}

/// A constraint set in parameter space.
#[derive(Clone)]
pub enum ConstraintSet {
    Whole { dim: usize },
    Affine(AffineSet),
    Sublevel(SublevelSet),
    Parametric(ParametricSet),
    Explicit(ExplicitSet),
}

impl core::fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConstraintSet::Whole { dim } => write!(f, "Whole({dim})"),
            ConstraintSet::Affine(a) => write!(f, "Affine({:?})", a),
            ConstraintSet::Sublevel(s) => write!(f, "Sublevel(dim {})", s.dim),
            ConstraintSet::Parametric(p) => {
                write!(f, "Parametric(dim {}, bounds {:?})", p.dim, p.bounds)
            }
            ConstraintSet::Explicit(e) => write!(f, "Explicit(dim {})", e.dim),
        }
    }
}

impl ConstraintSet {
    pub fn whole(dim: usize) -> Self {
        ConstraintSet::Whole { dim }
    }

    pub fn point(p: &[f64]) -> Self {
        ConstraintSet::Affine(AffineSet::point(p))
    }

    pub fn affine(a: Matrix, b: Vec<f64>) -> Result<Self> {
        Ok(ConstraintSet::Affine(AffineSet::new(a, b)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Whole { dim } => *dim,
            ConstraintSet::Affine(a) => a.a.cols(),
            ConstraintSet::Sublevel(s) => s.dim,
            ConstraintSet::Parametric(p) => p.dim,
            ConstraintSet::Explicit(e) => e.dim,
        }
    }

    pub fn is_whole(&self) -> bool {
        matches!(self, ConstraintSet::Whole { .. })
    }

    /// Distance-like measure of infeasibility; zero on the set.
    pub fn violation(&self, theta: &[f64]) -> f64 {
        match self {
            ConstraintSet::Whole { .. } => 0.0,
            ConstraintSet::Affine(a) => a.violation(theta),
            ConstraintSet::Sublevel(s) => s.violation(theta),
            ConstraintSet::Parametric(p) => p.violation(theta),
            ConstraintSet::Explicit(e) => dist(&e.project(theta), theta),
        }
    }

    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        theta.len() == self.dim() && self.violation(theta) <= tol
    }

    /// Parameter of `theta` on a parametric set.
    pub fn locate(&self, theta: &[f64]) -> Option<Vec<f64>> {
        match self {
            ConstraintSet::Parametric(p) => p.locate(theta).ok(),
            _ => None,
        }
    }
}

struct SquaredDistance<'a> {
    target: &'a [f64],
}

impl Objective for SquaredDistance<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let d = dist(x, self.target);
        0.5 * d * d
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        sub(x, self.target)
    }
}

struct ParamObjective<'a> {
    set: &'a ParametricSet,
    obj: &'a dyn Objective,
}

impl Objective for ParamObjective<'_> {
    fn value(&self, u: &[f64]) -> f64 {
        let th = self.set.theta(u);
        if th.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        self.obj.value(&th)
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let th = self.set.theta(u);
        match self.set.jacobian(u) {
            Ok(j) => j.tr_mul_vec(&self.obj.gradient(&th)),
            Err(_) => vec![f64::NAN; u.len()],
        }
    }
}

struct AffineObjective<'a> {
    set: &'a AffineSet,
    obj: &'a dyn Objective,
}

impl Objective for AffineObjective<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        self.obj.value(&self.set.embed(z))
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        self.set
            .basis
            .tr_mul_vec(&self.obj.gradient(&self.set.embed(z)))
    }
}

fn best_grid_point(set: &ParametricSet, obj: &dyn Objective) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for u in set.grid_points() {
        let v = obj.value(&u);
        if !v.is_finite() {
            continue;
        }
        // Strict comparison keeps the first, i.e. smallest, parameter on ties.
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, u));
        }
    }
    best.map(|(_, u)| u)
}

/// Minimizes `obj` over `set`. `hint` is a reference point of the ambient
/// space used by [`Start::Auto`] for non-parametric sets.
pub fn minimize_over(
    set: &ConstraintSet,
    obj: &dyn Objective,
    hint: &[f64],
    start: &Start,
    opts: &SolveOptions,
) -> Result<SetMinimum> {
    let n = set.dim();
    if hint.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: hint.len(),
        });
    }
    let start_point = match start {
        Start::Point(p) => p.as_slice(),
        _ => hint,
    };
    match set {
        ConstraintSet::Whole { .. } => {
            let m = minimize_box(obj, start_point, None, opts.minimize)?;
            Ok(SetMinimum {
                residual: m.projected_gradient.clone(),
                theta: m.x,
                param: None,
                value: m.value,
                converged: m.converged,
            })
        }
        ConstraintSet::Affine(a) => {
            let red = AffineObjective { set: a, obj };
            let z0 = a.coords(start_point);
            if !red.value(&z0).is_finite() {
                return Err(Error::Infeasible(
                    "start point lies outside the objective domain".into(),
                ));
            }
            let m = minimize_box(&red, &z0, None, opts.minimize)?;
            let theta = a.embed(&m.x);
            let residual = a.basis.mul_vec(&m.projected_gradient);
            Ok(SetMinimum {
                theta,
                param: Some(m.x),
                value: m.value,
                residual,
                converged: m.converged,
            })
        }
        ConstraintSet::Parametric(p) => minimize_parametric(p, obj, start, opts),
        ConstraintSet::Sublevel(s) => minimize_sublevel(s, obj, start_point, opts),
        ConstraintSet::Explicit(e) => minimize_explicit(e, obj, start_point, opts),
    }
}

fn minimize_parametric(
    set: &ParametricSet,
    obj: &dyn Objective,
    start: &Start,
    opts: &SolveOptions,
) -> Result<SetMinimum> {
    let pobj = ParamObjective { set, obj };
    let u0 = match start {
        Start::Param(u) => {
            if u.len() != set.param_dim() {
                return Err(Error::Dimension {
                    expected: set.param_dim(),
                    got: u.len(),
                });
            }
            u.clone()
        }
        Start::Point(p) => set.locate(p)?,
        Start::Auto => best_grid_point(set, &pobj).ok_or_else(|| {
            Error::Infeasible("objective is infinite on the whole parameter grid".into())
        })?,
    };
    let m = minimize_box(&pobj, &u0, Some(&set.bounds), opts.minimize)?;
    let theta = set.theta(&m.x);
    let j = set.jacobian(&m.x)?;
    let jtj = j.transpose().matmul(&j);
    let residual = match solve_linear(&jtj, &m.projected_gradient) {
        Ok(c) => j.mul_vec(&c),
        Err(_) => j.mul_vec(&m.projected_gradient),
    };
    Ok(SetMinimum {
        theta,
        param: Some(m.x),
        value: m.value,
        residual,
        converged: m.converged,
    })
}

struct AugmentedLagrangian<'a> {
    set: &'a SublevelSet,
    obj: &'a dyn Objective,
    mult: &'a [f64],
    rho: f64,
}

impl AugmentedLagrangian<'_> {
    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        self.set
            .constraints(x)
            .iter()
            .zip(self.mult)
            .map(|(g, l)| (l + self.rho * g).max(0.0))
            .collect()
    }
}

impl Objective for AugmentedLagrangian<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let f = self.obj.value(x);
        let pen: f64 = self
            .shifted(x)
            .iter()
            .zip(self.mult)
            .map(|(s, l)| s * s - l * l)
            .sum();
        f + pen / (2.0 * self.rho)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.obj.gradient(x);
        let s = self.shifted(x);
        if s.iter().any(|v| *v != 0.0) {
            match self.set.jacobian(x) {
                Ok(j) => {
                    let add = j.tr_mul_vec(&s);
                    for (gi, ai) in g.iter_mut().zip(add) {
                        *gi += ai;
                    }
                }
                Err(_) => return vec![f64::NAN; x.len()],
            }
        }
        g
    }
}

fn minimize_sublevel(
    set: &SublevelSet,
    obj: &dyn Objective,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<SetMinimum> {
    let k = set.constraints(x0).len();
    let mut mult = vec![0.0; k];
    let mut rho = 10.0;
    let mut x = x0.to_vec();
    let mut last_violation = f64::INFINITY;
    for _ in 0..opts.max_outer {
        let al = AugmentedLagrangian {
            set,
            obj,
            mult: &mult,
            rho,
        };
        let m = minimize_box(&al, &x, None, opts.minimize)?;
        x = m.x;
        let g = set.constraints(&x);
        mult = g
            .iter()
            .zip(&mult)
            .map(|(gi, l)| (l + rho * gi).max(0.0))
            .collect();
        let violation = g.iter().fold(0.0f64, |a, v| a.max(*v));
        let kkt = {
            let mut r = obj.gradient(&x);
            if mult.iter().any(|v| *v != 0.0) {
                let add = set.jacobian(&x)?.tr_mul_vec(&mult);
                for (ri, ai) in r.iter_mut().zip(add) {
                    *ri += ai;
                }
            }
            r
        };
        let slack_ok = g
            .iter()
            .zip(&mult)
            .all(|(gi, l)| *l == 0.0 || gi.abs() <= opts.feas_tol);
        if violation <= opts.feas_tol
            && slack_ok
            && norm_inf(&kkt) <= opts.minimize.grad_tol.max(1e-10)
        {
            return Ok(SetMinimum {
                value: obj.value(&x),
                theta: x,
                param: None,
                residual: kkt,
                converged: true,
            });
        }
        if violation > 0.25 * last_violation {
            rho = (rho * 10.0).min(1e10);
        }
        last_violation = violation;
    }
    let kkt = obj.gradient(&x);
    Ok(SetMinimum {
        value: obj.value(&x),
        theta: x,
        param: None,
        residual: kkt,
        converged: false,
    })
}

fn minimize_explicit(
    set: &ExplicitSet,
    obj: &dyn Objective,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<SetMinimum> {
    let mut x = set.project(x0);
    let mut fx = obj.value(&x);
    if !fx.is_finite() {
        return Err(Error::Infeasible(
            "projected start lies outside the objective domain".into(),
        ));
    }
    let mut step = 1.0;
    let natural = |x: &[f64], g: &[f64]| sub(x, &set.project(&sub(x, g)));
    let iters = 20 * opts.minimize.max_iter;
    for _ in 0..iters {
        let g = obj.gradient(&x);
        let r = natural(&x, &g);
        if norm_inf(&r) <= opts.minimize.grad_tol {
            return Ok(SetMinimum {
                theta: x,
                param: None,
                value: fx,
                residual: r,
                converged: true,
            });
        }
        let mut accepted = false;
        for _ in 0..60 {
            let xn = set.project(
                &x.iter()
                    .zip(&g)
                    .map(|(a, b)| a - step * b)
                    .collect::<Vec<_>>(),
            );
            let fxn = obj.value(&xn);
            let d = dist(&xn, &x);
            if fxn.is_finite() && fxn <= fx - 1e-4 / step * d * d {
                let moved = d > 0.0;
                x = xn;
                fx = fxn;
                accepted = moved;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = obj.gradient(&x);
    let r = natural(&x, &g);
    let converged = norm_inf(&r) <= 1e4 * opts.minimize.grad_tol;
    Ok(SetMinimum {
        theta: x,
        param: None,
        value: fx,
        residual: r,
        converged,
    })
}

/// The curve `θ(u) = (u, −u²/4)`, on which the Gaussian mean equals its
/// standard deviation.
pub fn mean_equals_std_curve(u_range: (f64, f64)) -> Result<ConstraintSet> {
    let set = ParametricSet::new(
        2,
        vec![u_range],
        Arc::new(|u: &[f64]| vec![u[0], -u[0] * u[0] / 4.0]),
    )?
    .with_jacobian(Arc::new(|u: &[f64]| {
        Matrix::from_vec(2, 1, vec![1.0, -u[0] / 2.0]).expect("2x1")
    }));
    Ok(ConstraintSet::Parametric(set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::FnObjective;

    fn sq(target: Vec<f64>) -> impl Objective {
        let t2 = target.clone();
        FnObjective::new(
            move |x: &[f64]| 0.5 * dist(x, &target).powi(2),
            move |x: &[f64]| sub(x, &t2),
        )
    }

    #[test]
    fn affine_projection_is_euclidean() {
        // x + y = 1 from (1, 1): projection (0.5, 0.5).
        let set =
            ConstraintSet::affine(Matrix::from_rows(&[[1.0, 1.0]]).unwrap(), vec![1.0]).unwrap();
        let m = minimize_over(
            &set,
            &sq(vec![1.0, 1.0]),
            &[1.0, 1.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(m.converged);
        assert!(dist(&m.theta, &[0.5, 0.5]) < 1e-12);
        assert!(norm(&m.residual) < 1e-12);
    }

    #[test]
    fn inconsistent_affine_rejected() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert!(matches!(
            ConstraintSet::affine(a, vec![1.0, 3.0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn point_set_returns_point() {
        let set = ConstraintSet::point(&[0.3, -2.0]);
        let m = minimize_over(
            &set,
            &sq(vec![5.0, 5.0]),
            &[5.0, 5.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(m.theta, vec![0.3, -2.0]);
    }

    #[test]
    fn sublevel_disc() {
        // Unit disc, target (2, 0): projection (1, 0).
        let set = ConstraintSet::Sublevel(SublevelSet::new(
            2,
            Arc::new(|x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 1.0]),
        ));
        let m = minimize_over(
            &set,
            &sq(vec![2.0, 0.0]),
            &[0.0, 0.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(m.converged);
        assert!(dist(&m.theta, &[1.0, 0.0]) < 1e-8);
    }

    #[test]
    fn explicit_box_projection() {
        let set = ConstraintSet::Explicit(ExplicitSet::new(
            2,
            Arc::new(|x: &[f64]| x.iter().map(|v| v.clamp(0.0, 1.0)).collect()),
        ));
        let m = minimize_over(
            &set,
            &sq(vec![2.0, -3.0]),
            &[0.5, 0.5],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(m.converged);
        assert!(dist(&m.theta, &[1.0, 0.0]) < 1e-12);
    }

    #[test]
    fn curve_membership_and_location() {
        let c = mean_equals_std_curve((0.05, 10.0)).unwrap();
        assert!(c.contains(&[2.0, -1.0], 1e-10));
        assert!(!c.contains(&[2.0, -2.0], 1e-3));
        let u = c.locate(&[2.0, -1.0]).unwrap();
        assert!((u[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn grid_tie_prefers_smallest_parameter() {
        // |u|² has equal values at ±1; a symmetric double well picks −1.
        let set = ParametricSet::new(1, vec![(-2.0, 2.0)], Arc::new(|u: &[f64]| vec![u[0]]))
            .unwrap()
            .with_grid(5);
        let well = FnObjective::new(
            |x: &[f64]| (x[0] * x[0] - 1.0).powi(2),
            |x: &[f64]| vec![4.0 * x[0] * (x[0] * x[0] - 1.0)],
        );
        let m = minimize_over(
            &ConstraintSet::Parametric(set),
            &well,
            &[0.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((m.theta[0] + 1.0).abs() < 1e-12);
    }
}
