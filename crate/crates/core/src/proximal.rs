//! Generalized proximal scheme
//! `x_{k+1} ∈ argmin_{x ∈ M} f(x) + λ_k⁻¹ Ψ(x, x_k)`
//! with possibly partial regularizers and inexact inner solves.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bregman::{bregman_div, LegendreGenerator};
use crate::constraint::{minimize_over, ConstraintSet, SetMinimum, SolveOptions, Start};
use crate::numerics::vector::{dot, norm, sub};
use crate::numerics::{Objective, SymMatrix};
use crate::{Error, Result};

pub type PairFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type PairGradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    Quadratic,
    Bregman,
    KlConditional,
    Custom,
}

impl RegularizerKind {
    pub fn label(self) -> &'static str {
        match self {
            RegularizerKind::Quadratic => "quadratic",
            RegularizerKind::Bregman => "bregman",
            RegularizerKind::KlConditional => "kl-conditional",
            RegularizerKind::Custom => "custom",
        }
    }
}

/// A proximal penalty `Ψ(x⁺, x)` with its gradient in `x⁺` and an optional
/// projection `P` onto the subspace it controls.
#[derive(Clone)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    value: PairFn,
    grad1: PairGradFn,
    projection: Option<SymMatrix>,
}

impl core::fmt::Debug for RegularizerSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RegularizerSpec")
            .field("kind", &self.kind)
            .field("projection", &self.projection)
            .finish()
    }
}

impl RegularizerSpec {
    pub fn new(kind: RegularizerKind, value: PairFn, grad1: PairGradFn) -> Self {
        RegularizerSpec {
            kind,
            value,
            grad1,
            projection: None,
        }
    }

    pub fn with_projection(mut self, p: SymMatrix) -> Self {
        self.projection = Some(p);
        self
    }

    /// `Ψ(x⁺, x) = ½‖x⁺ − x‖²`.
    pub fn quadratic() -> Self {
        RegularizerSpec::new(
            RegularizerKind::Quadratic,
            Arc::new(|xp, x| {
                let d = norm(&sub(xp, x));
                0.5 * d * d
            }),
            Arc::new(sub),
        )
    }

    /// `Ψ(x⁺, x) = ½‖P(x⁺ − x)‖²` for an orthogonal projection `P`.
    pub fn partial_quadratic(p: SymMatrix) -> Self {
        let p1 = p.clone();
        let p2 = p.clone();
        RegularizerSpec::new(
            RegularizerKind::Quadratic,
            Arc::new(move |xp, x| {
                let d = norm(&p1.mul_vec(&sub(xp, x)));
                0.5 * d * d
            }),
            Arc::new(move |xp, x| p2.mul_vec(&sub(xp, x))),
        )
        .with_projection(p)
    }

    /// `Ψ(x⁺, x) = D_ψ(x⁺, x)`.
    pub fn bregman(gen: Arc<dyn LegendreGenerator>) -> Self {
        let g1 = gen.clone();
        RegularizerSpec::new(
            RegularizerKind::Bregman,
            Arc::new(move |xp, x| bregman_div(&*g1, xp, x).unwrap_or(f64::INFINITY)),
            Arc::new(move |xp, x| sub(&gen.gradient(xp), &gen.gradient(x))),
        )
    }

    pub fn value(&self, x_plus: &[f64], x: &[f64]) -> f64 {
        (self.value)(x_plus, x)
    }

    pub fn grad1(&self, x_plus: &[f64], x: &[f64]) -> Vec<f64> {
        (self.grad1)(x_plus, x)
    }

    pub fn projection(&self) -> Option<&SymMatrix> {
        self.projection.as_ref()
    }

    /// `P v`, or `v` when the regularizer is not partial.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match &self.projection {
            Some(p) => p.mul_vec(v),
            None => v.to_vec(),
        }
    }
}

/// How each inner minimization over a parametric set is started.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum StartPolicy {
    /// Fresh grid scan at every step.
    #[default]
    Global,
    /// Local refinement from the previous iterate.
    Previous,
    /// Step `k` uses `starts[(k − 1) mod len]`.
    Cycle(Vec<Start>),
}

impl StartPolicy {
    pub(crate) fn start_for(
        &self,
        k: usize,
        prev_point: &[f64],
        prev_param: Option<&[f64]>,
    ) -> Start {
        match self {
            StartPolicy::Global => Start::Auto,
            StartPolicy::Previous => match prev_param {
                Some(u) => Start::Param(u.to_vec()),
                None => Start::Point(prev_point.to_vec()),
            },
            StartPolicy::Cycle(starts) if !starts.is_empty() => {
                starts[(k - 1) % starts.len()].clone()
            }
            StartPolicy::Cycle(_) => Start::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSchedule {
    Constant(f64),
    /// `λ_0, λ_1, …`; the last entry repeats.
    Sequence(Vec<f64>),
}

impl LambdaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            LambdaSchedule::Constant(l) => *l,
            LambdaSchedule::Sequence(s) => s.get(k).or(s.last()).copied().unwrap_or(f64::NAN),
        }
    }
}

/// Inexactness condition imposed on the residual `e_k` of each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InexactMode {
    Exact,
    /// `Σ λ_{k−1}‖e_k‖ ≤ budget`.
    Summable {
        budget: f64,
    },
    /// `λ_{k−1}‖e_k‖ ≤ M'·‖∇₁Ψ(x_k, x_{k−1})‖`.
    RegularizerRelative {
        m: f64,
    },
    /// `‖e_k‖ ≤ M''·‖∇f(x_k)‖`.
    GradientRelative {
        m: f64,
    },
}

impl InexactMode {
    /// Default bound used for `M'` and `M''`.
    pub const DEFAULT_BOUND: f64 = 1e3;

    pub const fn regularizer_relative() -> Self {
        InexactMode::RegularizerRelative { m: Self::DEFAULT_BOUND }
    }

    pub const fn gradient_relative() -> Self {
        InexactMode::GradientRelative { m: Self::DEFAULT_BOUND }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxConfig {
    pub lambda: LambdaSchedule,
    /// Cap `r` on `λ_k / λ_{k−1}`.
    pub ratio_cap: f64,
    /// Cap `R` on `λ_k`.
    pub value_cap: f64,
    /// Floor on `λ_k`.
    pub floor: f64,
    pub max_iter: usize,
    /// Stop once `‖P(x_k − x_{k−1})‖` is at most this.
    pub step_tol: f64,
    pub inexact: InexactMode,
    pub boundary_threshold: f64,
    pub start: StartPolicy,
    pub solve: SolveOptions,
    /// Slack allowed in the descent inequality, relative to `max(1, |f|)`.
    pub descent_tol: f64,
}

impl Default for ProxConfig {
    fn default() -> Self {
        ProxConfig {
            lambda: LambdaSchedule::Constant(1.0),
            ratio_cap: 10.0,
            value_cap: 1e6,
            floor: 1e-8,
            max_iter: 500,
            step_tol: 1e-10,
            inexact: InexactMode::Exact,
            boundary_threshold: 1e-6,
            start: StartPolicy::Global,
            solve: SolveOptions::default(),
            descent_tol: 1e-12,
        }
    }
}

impl ProxConfig {
    /// Checks `λ_k > 0`, the floor, the cap and the ratio cap over the
    /// first `max_iter` steps.
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<f64> = None;
        for k in 0..self.max_iter.max(1) {
            let l = self.lambda.at(k);
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Invalid(alloc::format!(
                    "lambda_{k} must be positive and finite"
                )));
            }
            if l < self.floor || l > self.value_cap {
                return Err(Error::Invalid(alloc::format!(
                    "lambda_{k} = {l} outside [floor, cap]"
                )));
            }
            if let Some(p) = prev {
                if l / p > self.ratio_cap {
                    return Err(Error::Invalid(alloc::format!(
                        "lambda ratio at step {k} exceeds the cap"
                    )));
                }
            }
            if matches!(self.lambda, LambdaSchedule::Constant(_)) {
                break;
            }
            prev = Some(l);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Boundary,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f: f64,
    /// `Ψ(x_k, x_{k−1})`.
    pub psi_reg: f64,
    pub step_norm: f64,
    pub proj_step_norm: f64,
    /// `‖e_k‖`.
    pub residual: f64,
    /// `λ_{k−1}`.
    pub lambda: f64,
    pub domain_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
    pub projection: Option<SymMatrix>,
}

impl IterateTrace {
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.x.clone()).collect()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxStep {
    pub x_plus: Vec<f64>,
    pub param: Option<Vec<f64>>,
    /// First-order residual `e = ∇f(x⁺) + λ⁻¹∇₁Ψ(x⁺, x)`, projected on the
    /// feasible directions.
    pub residual: Vec<f64>,
    pub f_plus: f64,
    pub psi: f64,
}

struct ProxObjective<'a> {
    f: &'a dyn Objective,
    reg: &'a RegularizerSpec,
    x: &'a [f64],
    inv_lambda: f64,
}

impl Objective for ProxObjective<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let fz = self.f.value(z);
        if !fz.is_finite() {
            return f64::INFINITY;
        }
        let p = self.reg.value(z, self.x);
        if !p.is_finite() {
            return f64::INFINITY;
        }
        fz + self.inv_lambda * p
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let g = self.f.gradient(z);
        let r = self.reg.grad1(z, self.x);
        g.iter()
            .zip(r)
            .map(|(a, b)| a + self.inv_lambda * b)
            .collect()
    }
}

fn descent_ok(f_x: f64, m: &SetMinimum, tol: f64) -> bool {
    m.value <= f_x + tol * f_x.abs().max(1.0)
}

/// One proximal step from `x`. The descent inequality
/// `f(x⁺) + λ⁻¹Ψ(x⁺, x) ≤ f(x)` is enforced: a violating solution is
/// recomputed from `x` itself with a tighter inner tolerance.
#[allow(clippy::too_many_arguments)]
pub fn prox_step(
    f: &dyn Objective,
    set: &ConstraintSet,
    reg: &RegularizerSpec,
    lambda: f64,
    x: &[f64],
    start: &Start,
    solve: &SolveOptions,
    descent_tol: f64,
) -> Result<ProxStep> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid("lambda must be positive".into()));
    }
    let fx = f.value(x);
    if !fx.is_finite() {
        return Err(Error::Domain { margin: f64::NAN });
    }
    let obj = ProxObjective {
        f,
        reg,
        x,
        inv_lambda: 1.0 / lambda,
    };
    let mut m = minimize_over(set, &obj, x, start, solve)?;
    if !descent_ok(fx, &m, descent_tol) {
        let retry_start = match set.locate(x) {
            Some(u) => Start::Param(u),
            None => Start::Point(x.to_vec()),
        };
        let mut tight = *solve;
        tight.minimize.grad_tol = (solve.minimize.grad_tol * 1e-2).max(1e-15);
        tight.minimize.max_iter = solve.minimize.max_iter * 2;
        m = minimize_over(set, &obj, x, &retry_start, &tight)?;
        if !descent_ok(fx, &m, descent_tol) {
            return Err(Error::DescentViolation {
                excess: m.value - fx,
            });
        }
    }
    if !m.converged && norm(&m.residual) > 1e-6 {
        return Err(Error::NoConvergence {
            iterations: solve.minimize.max_iter,
            residual: norm(&m.residual),
            last: m.theta,
        });
    }
    let f_plus = f.value(&m.theta);
    let psi = reg.value(&m.theta, x);
    Ok(ProxStep {
        x_plus: m.theta,
        param: m.param,
        residual: m.residual,
        f_plus,
        psi,
    })
}

/// Runs the proximal scheme from `x0`. `margin` reports the distance-like
/// margin of a point to the boundary of the objective's domain.
pub fn prox_run(
    f: &dyn Objective,
    set: &ConstraintSet,
    reg: &RegularizerSpec,
    cfg: &ProxConfig,
    x0: &[f64],
    margin: &dyn Fn(&[f64]) -> f64,
) -> Result<IterateTrace> {
    cfg.validate()?;
    if !set.contains(x0, 1e-8) {
        return Err(Error::Infeasible(
            "starting point is not in the constraint set".into(),
        ));
    }
    let f0 = f.value(x0);
    if !f0.is_finite() {
        return Err(Error::Domain { margin: margin(x0) });
    }
    let mut records = alloc::vec![TraceRecord {
        k: 0,
        x: x0.to_vec(),
        f: f0,
        psi_reg: 0.0,
        step_norm: 0.0,
        proj_step_norm: 0.0,
        residual: f64::NAN,
        lambda: f64::NAN,
        domain_margin: margin(x0),
    }];
    let mut x = x0.to_vec();
    let mut param = set.locate(x0);
    let mut budget_used = 0.0;
    let mut termination = Termination::MaxIterations;
    for k in 1..=cfg.max_iter {
        let lambda = cfg.lambda.at(k - 1);
        let start = cfg.start.start_for(k, &x, param.as_deref());
        let step = prox_step(f, set, reg, lambda, &x, &start, &cfg.solve, cfg.descent_tol)
            .map_err(|e| e.at(k))?;
        let diff = sub(&step.x_plus, &x);
        let e_norm = norm(&step.residual);
        let slack = 1e-10;
        let ok = match cfg.inexact {
            InexactMode::Exact => true,
            InexactMode::Summable { budget } => {
                budget_used += lambda * e_norm;
                budget_used <= budget
            }
            InexactMode::RegularizerRelative { m } => {
                lambda * e_norm <= m * norm(&reg.grad1(&step.x_plus, &x)) + slack
            }
            InexactMode::GradientRelative { m } => {
                e_norm <= m * norm(&f.gradient(&step.x_plus)) + slack
            }
        };
        if !ok {
            return Err(Error::Inexact { step: k });
        }
        let rec = TraceRecord {
            k,
            f: step.f_plus,
            psi_reg: step.psi,
            step_norm: norm(&diff),
            proj_step_norm: norm(&reg.project(&diff)),
            residual: e_norm,
            lambda,
            domain_margin: margin(&step.x_plus),
            x: step.x_plus,
        };
        x = rec.x.clone();
        param = step.param;
        let (pstep, dm) = (rec.proj_step_norm, rec.domain_margin);
        records.push(rec);
        if dm <= cfg.boundary_threshold {
            termination = Termination::Boundary;
            break;
        }
        if pstep <= cfg.step_tol {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(IterateTrace {
        records,
        termination,
        projection: reg.projection().cloned(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormBounds {
    /// `min Ψ(y, z)/‖P(y − z)‖²` over the admissible pairs.
    pub m_est: f64,
    /// `max ‖∇₁Ψ(y, z)‖/‖P(y − z)‖` over the admissible pairs.
    pub big_m_est: f64,
    pub pairs: usize,
    /// Pairs skipped because `Ψ` was not finite there.
    pub skipped: usize,
    pub pass: bool,
}

/// Empirical lower and upper norm bounds of a regularizer over ordered
/// pairs of `points` at distance at most `delta`. Pairs with `P(y − z) = 0`
/// carry no information and are excluded.
pub fn check_norm_bounds(reg: &RegularizerSpec, points: &[Vec<f64>], delta: f64) -> NormBounds {
    let mut m_est = f64::INFINITY;
    let mut big_m_est: f64 = 0.0;
    let mut pairs = 0;
    let mut skipped = 0;
    for (i, y) in points.iter().enumerate() {
        for (j, z) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = sub(y, z);
            let nd = norm(&d);
            if nd > delta {
                continue;
            }
            let pd = norm(&reg.project(&d));
            if pd <= 1e-12 * (1.0 + nd) {
                continue;
            }
            let v = reg.value(y, z);
            let g = reg.grad1(y, z);
            if !v.is_finite() || g.iter().any(|a| !a.is_finite()) {
                skipped += 1;
                continue;
            }
            pairs += 1;
            m_est = m_est.min(v / (pd * pd));
            big_m_est = big_m_est.max(norm(&g) / pd);
        }
    }
    let pass = pairs > 0 && m_est > 0.0 && big_m_est.is_finite();
    NormBounds {
        m_est,
        big_m_est,
        pairs,
        skipped,
        pass,
    }
}

/// `½‖x‖²`-type objectives and other closures, as an [`Objective`].
pub fn quadratic_objective(center: Vec<f64>, scale: f64) -> impl Objective {
    let c2 = center.clone();
    crate::numerics::FnObjective::new(
        move |x: &[f64]| {
            let d = sub(x, &center);
            0.5 * scale * dot(&d, &d)
        },
        move |x: &[f64]| sub(x, &c2).iter().map(|v| scale * v).collect::<Vec<f64>>(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::GaussianSample;
    use crate::numerics::FnObjective;
    use alloc::vec;

    #[test]
    fn relative_inexact_modes_use_the_default_bound() {
        assert_eq!(
            InexactMode::regularizer_relative(),
            InexactMode::RegularizerRelative { m: 1e3 }
        );
        assert_eq!(
            InexactMode::gradient_relative(),
            InexactMode::GradientRelative { m: 1e3 }
        );
    }

    #[test]
    fn tikhonov_step_matches_linear_solve() {
        // f(x) = ½ xᵀAx − bᵀx, Ψ = ½‖x⁺ − x‖²: (A + I/λ) x⁺ = b + x/λ.
        let a = [[3.0, 1.0], [1.0, 2.0]];
        let b = [1.0, -1.0];
        let f = FnObjective::new(
            move |x: &[f64]| {
                0.5 * (a[0][0] * x[0] * x[0] + 2.0 * a[0][1] * x[0] * x[1] + a[1][1] * x[1] * x[1])
                    - b[0] * x[0]
                    - b[1] * x[1]
            },
            move |x: &[f64]| {
                vec![
                    a[0][0] * x[0] + a[0][1] * x[1] - b[0],
                    a[1][0] * x[0] + a[1][1] * x[1] - b[1],
                ]
            },
        );
        let lambda = 0.5;
        let x = [2.0, 2.0];
        let step = prox_step(
            &f,
            &ConstraintSet::whole(2),
            &RegularizerSpec::quadratic(),
            lambda,
            &x,
            &Start::Auto,
            &SolveOptions::default(),
            1e-12,
        )
        .unwrap();
        let m = crate::numerics::Matrix::from_rows(&[
            [a[0][0] + 2.0, a[0][1]],
            [a[1][0], a[1][1] + 2.0],
        ])
        .unwrap();
        let oracle =
            crate::numerics::solve_linear(&m, &[b[0] + 2.0 * x[0], b[1] + 2.0 * x[1]]).unwrap();
        assert!(crate::numerics::vector::dist(&step.x_plus, &oracle) < 1e-10);
    }

    #[test]
    fn zero_objective_does_not_move() {
        let f = FnObjective::new(|_: &[f64]| 0.0, |x: &[f64]| vec![0.0; x.len()]);
        let step = prox_step(
            &f,
            &ConstraintSet::whole(2),
            &RegularizerSpec::quadratic(),
            1.0,
            &[0.3, 0.4],
            &Start::Auto,
            &SolveOptions::default(),
            1e-12,
        )
        .unwrap();
        assert_eq!(step.x_plus, vec![0.3, 0.4]);
    }

    #[test]
    fn halving_resolvent() {
        let f = quadratic_objective(vec![0.0, 0.0], 1.0);
        let cfg = ProxConfig {
            max_iter: 30,
            step_tol: 0.0,
            ..Default::default()
        };
        let tr = prox_run(
            &f,
            &ConstraintSet::whole(2),
            &RegularizerSpec::quadratic(),
            &cfg,
            &[1.0, -2.0],
            &|_| f64::INFINITY,
        )
        .unwrap();
        for r in &tr.records {
            let s = 0.5f64.powi(r.k as i32);
            assert!((r.x[0] - s).abs() < 1e-9 && (r.x[1] + 2.0 * s).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_objective_stops_at_once() {
        let f = FnObjective::new(|_: &[f64]| 1.0, |x: &[f64]| vec![0.0; x.len()]);
        let tr = prox_run(
            &f,
            &ConstraintSet::whole(1),
            &RegularizerSpec::quadratic(),
            &ProxConfig::default(),
            &[3.0],
            &|_| f64::INFINITY,
        )
        .unwrap();
        assert_eq!(tr.records.len(), 2);
        assert_eq!(tr.termination, Termination::Converged);
    }

    #[test]
    fn partial_regularizer_leaves_free_coordinate() {
        let p = SymMatrix::from_diag(&[1.0, 0.0]);
        let f = FnObjective::new(|x: &[f64]| 0.5 * x[0] * x[0], |x: &[f64]| vec![x[0], 0.0]);
        let cfg = ProxConfig {
            max_iter: 60,
            step_tol: 1e-12,
            ..Default::default()
        };
        let tr = prox_run(
            &f,
            &ConstraintSet::whole(2),
            &RegularizerSpec::partial_quadratic(p),
            &cfg,
            &[1.0, 5.0],
            &|_| f64::INFINITY,
        )
        .unwrap();
        assert!(tr.records.iter().all(|r| r.x[1] == 5.0));
        assert!(tr.last().unwrap().x[0].abs() < 1e-10);
    }

    #[test]
    fn lambda_schedule_validation() {
        let mut cfg = ProxConfig {
            lambda: LambdaSchedule::Sequence(vec![1.0, 100.0]),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.lambda = LambdaSchedule::Sequence(vec![1.0, 2.0, 4.0]);
        assert!(cfg.validate().is_ok());
        cfg.lambda = LambdaSchedule::Constant(-1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn quadratic_norm_bounds() {
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64 * 0.1, 1.0 - i as f64 * 0.05])
            .collect();
        let nb = check_norm_bounds(&RegularizerSpec::quadratic(), &pts, 10.0);
        assert!((nb.m_est - 0.5).abs() < 1e-6 && (nb.big_m_est - 1.0).abs() < 1e-6);
        assert!(nb.pass);
    }

    #[test]
    fn bregman_norm_bounds_on_gaussian_grid() {
        let mut pts = Vec::new();
        for t1 in [-1.0, 0.0, 1.0] {
            for t2 in [-2.0, -1.5, -1.0] {
                pts.push(vec![t1, t2]);
            }
        }
        let reg = RegularizerSpec::bregman(Arc::new(GaussianSample::gaussian2()));
        let nb = check_norm_bounds(&reg, &pts, 10.0);
        assert!(nb.pass && nb.m_est > 0.0 && nb.m_est <= nb.big_m_est);
    }

    #[test]
    fn partial_norm_bounds_skip_kernel_pairs() {
        let reg = RegularizerSpec::partial_quadratic(SymMatrix::from_diag(&[1.0, 0.0]));
        let pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let nb = check_norm_bounds(&reg, &pts, 10.0);
        // The pair differing only in the second coordinate is excluded.
        assert_eq!(nb.pairs, 4);
        assert!((nb.m_est - 0.5).abs() < 1e-12);
    }
}
