//! EM over (constrained) exponential families, seen as the proximal scheme
//! with the conditional Kullback-Leibler regularizer.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::bregman::{bregman_div, check_interior, LegendreGenerator};
use crate::constraint::{
    minimize_over, AffineSet, ConstraintSet, SetMinimum, SolveOptions, Start, VecFn,
};
use crate::expfam::{dual_param, ExpFamily};
use crate::geometry::{DataSetSpec, HiddenStatistic};
use crate::numerics::vector::{dot, norm, sub};
use crate::numerics::{
    finite_diff_hess, projection_from_eigvecs, rank_with_tol, sym_eig, Matrix, Objective, SymMatrix,
};
use crate::proximal::{
    IterateTrace, PairFn, RegularizerKind, RegularizerSpec, StartPolicy, Termination, TraceRecord,
};
use crate::{Error, Result};

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Complete-data family, observed datum (baked into the oracles), and the
/// constraint set `M` of admissible parameters.
///
/// The conditional structure is given either by the conditional
/// log-normalizer `ψ_y` (from which `E_θ[T|y] = ∇ψ_y(θ)` and
/// `−log q(y, θ) = ψ(θ) − ψ_y(θ)` follow) or by explicit oracles.
#[derive(Clone)]
pub struct IncompleteModel {
    name: String,
    family: Arc<dyn ExpFamily>,
    conditional: Option<Arc<dyn LegendreGenerator>>,
    cond_expect: Option<VecFn>,
    neg_log_q: Option<(ValueFn, VecFn)>,
    cond_kl: Option<PairFn>,
    constraint: ConstraintSet,
    data: Option<DataSetSpec>,
    hidden: Option<Arc<dyn HiddenStatistic>>,
}

impl core::fmt::Debug for IncompleteModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("IncompleteModel")
            .field("name", &self.name)
            .field("family", &self.family.name())
            .field("constraint", &self.constraint)
            .finish()
    }
}

impl IncompleteModel {
    pub fn from_conditional_normalizer(
        name: impl Into<String>,
        family: Arc<dyn ExpFamily>,
        conditional: Arc<dyn LegendreGenerator>,
        constraint: ConstraintSet,
    ) -> Result<Self> {
        if conditional.dim() != family.dim() {
            return Err(Error::Dimension {
                expected: family.dim(),
                got: conditional.dim(),
            });
        }
        Self::base(name.into(), family, constraint).map(|mut m| {
            m.conditional = Some(conditional);
            m
        })
    }

    pub fn from_oracles(
        name: impl Into<String>,
        family: Arc<dyn ExpFamily>,
        cond_expect: VecFn,
        neg_log_q: ValueFn,
        neg_log_q_grad: VecFn,
        constraint: ConstraintSet,
    ) -> Result<Self> {
        Self::base(name.into(), family, constraint).map(|mut m| {
            m.cond_expect = Some(cond_expect);
            m.neg_log_q = Some((neg_log_q, neg_log_q_grad));
            m
        })
    }

    fn base(name: String, family: Arc<dyn ExpFamily>, constraint: ConstraintSet) -> Result<Self> {
        if constraint.dim() != family.dim() {
            return Err(Error::Dimension {
                expected: family.dim(),
                got: constraint.dim(),
            });
        }
        Ok(IncompleteModel {
            name,
            family,
            conditional: None,
            cond_expect: None,
            neg_log_q: None,
            cond_kl: None,
            constraint,
            data: None,
            hidden: None,
        })
    }

    pub fn with_constraint(mut self, constraint: ConstraintSet) -> Result<Self> {
        if constraint.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: constraint.dim(),
            });
        }
        self.constraint = constraint;
        Ok(self)
    }

    pub fn with_data_set(mut self, data: DataSetSpec) -> Self {
        self.data = Some(data);
        self
    }

    pub fn with_hidden_statistic(mut self, hidden: Arc<dyn HiddenStatistic>) -> Self {
        self.hidden = Some(hidden);
        self
    }

    /// Conditional KL oracle `(θ, θ⁺) ↦ K_y(θ‖θ⁺)`, used when `ψ_y` is absent.
    pub fn with_conditional_kl(mut self, kl: PairFn) -> Self {
        self.cond_kl = Some(kl);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &Arc<dyn ExpFamily> {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn constraint(&self) -> &ConstraintSet {
        &self.constraint
    }

    pub fn conditional(&self) -> Option<&Arc<dyn LegendreGenerator>> {
        self.conditional.as_ref()
    }

    pub fn data_set(&self) -> Option<&DataSetSpec> {
        self.data.as_ref()
    }

    pub fn hidden_statistic(&self) -> Option<&Arc<dyn HiddenStatistic>> {
        self.hidden.as_ref()
    }

    pub fn domain_margin(&self, theta: &[f64]) -> f64 {
        self.family.domain_margin(theta)
    }

    /// `E_θ[T(x) | y]`.
    pub fn cond_expect(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_interior(&*self.family, theta)?;
        let t = match (&self.conditional, &self.cond_expect) {
            (Some(c), _) => c.gradient(theta),
            (None, Some(f)) => f(theta),
            (None, None) => {
                return Err(Error::Unsupported(
                    "model has no conditional expectation".into(),
                ))
            }
        };
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("conditional expectation"));
        }
        Ok(t)
    }

    /// `−log q(y, θ)`; `+∞` outside the natural domain.
    pub fn neg_log_q(&self, theta: &[f64]) -> f64 {
        if !(self.family.domain_margin(theta) > 0.0) {
            return f64::INFINITY;
        }
        match (&self.conditional, &self.neg_log_q) {
            (_, Some((v, _))) => v(theta),
            (Some(c), None) => self.family.value(theta) - c.value(theta),
            (None, None) => f64::NAN,
        }
    }

    pub fn neg_log_q_grad(&self, theta: &[f64]) -> Vec<f64> {
        match (&self.conditional, &self.neg_log_q) {
            (_, Some((_, g))) => g(theta),
            (Some(c), None) => sub(&self.family.gradient(theta), &c.gradient(theta)),
            (None, None) => vec![f64::NAN; self.dim()],
        }
    }

    /// Checks the Fisher identity `∇(−log q) = ∇ψ − E_θ[T|y]` at the
    /// sample points, and, when `ψ_y` is given, that `−log q − (ψ − ψ_y)` is
    /// constant and `∇²ψ_y` is positive semidefinite.
    pub fn check_consistency(&self, points: &[Vec<f64>]) -> Result<ConsistencyReport> {
        let mut max_gradient_gap: f64 = 0.0;
        let mut offsets = Vec::new();
        let mut min_eig = f64::INFINITY;
        for p in points {
            check_interior(&*self.family, p)?;
            let lhs = self.neg_log_q_grad(p);
            let rhs = sub(&self.family.gradient(p), &self.cond_expect(p)?);
            max_gradient_gap = max_gradient_gap.max(norm(&sub(&lhs, &rhs)) / norm(&rhs).max(1.0));
            if let Some(c) = &self.conditional {
                offsets.push(self.neg_log_q(p) - (self.family.value(p) - c.value(p)));
                min_eig = min_eig.min(sym_eig(&c.hessian(p))?.min_value());
            }
        }
        let value_spread = match (
            offsets.iter().cloned().fold(f64::INFINITY, f64::min),
            offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ) {
            (lo, hi) if lo.is_finite() => hi - lo,
            _ => 0.0,
        };
        let pass = max_gradient_gap <= 1e-6 && value_spread <= 1e-9 && !(min_eig < -1e-10);
        Ok(ConsistencyReport {
            max_gradient_gap,
            value_spread,
            min_conditional_eigenvalue: min_eig,
            pass,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub max_gradient_gap: f64,
    pub value_spread: f64,
    pub min_conditional_eigenvalue: f64,
    pub pass: bool,
}

/// `−log q(y, ·)` as an [`Objective`].
pub struct NegLogLikelihood<'a>(pub &'a IncompleteModel);

impl Objective for NegLogLikelihood<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.neg_log_q(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.neg_log_q_grad(x)
    }
}

/// E step: `t⁺ = E_θ[T(x) | y]`.
pub fn e_step(model: &IncompleteModel, theta: &[f64]) -> Result<Vec<f64>> {
    model.cond_expect(theta)
}

/// `ψ(θ) − θ·t + λ⁻¹‖(I − P)(θ − θ_k)‖²`, the penalty being optional.
struct Surrogate<'a> {
    family: &'a dyn ExpFamily,
    t: &'a [f64],
    penalty: Option<(&'a SymMatrix, &'a [f64], f64)>,
}

impl Objective for Surrogate<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        if !(self.family.domain_margin(x) > 0.0) {
            return f64::INFINITY;
        }
        let mut v = self.family.value(x) - dot(x, self.t);
        if let Some((c, anchor, inv_l)) = self.penalty {
            let d = c.mul_vec(&sub(x, anchor));
            v += inv_l * dot(&d, &d);
        }
        v
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = sub(&self.family.gradient(x), self.t);
        if let Some((c, anchor, inv_l)) = self.penalty {
            let d = c.mul_vec(&sub(x, anchor));
            for (gi, di) in g.iter_mut().zip(d) {
                *gi += 2.0 * inv_l * di;
            }
        }
        g
    }
}

/// M step: minimizes `ψ(θ) − θ·t` over `M`. Without constraint this is the
/// dual parameter of `t`.
pub fn m_step(
    model: &IncompleteModel,
    t: &[f64],
    hint: &[f64],
    start: &Start,
    solve: &SolveOptions,
) -> Result<SetMinimum> {
    surrogate_step(model, t, None, hint, start, solve)
}

fn surrogate_step(
    model: &IncompleteModel,
    t: &[f64],
    penalty: Option<(&SymMatrix, &[f64], f64)>,
    hint: &[f64],
    start: &Start,
    solve: &SolveOptions,
) -> Result<SetMinimum> {
    if t.len() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: t.len(),
        });
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("completed statistic"));
    }
    let obj = Surrogate {
        family: &**model.family(),
        t,
        penalty,
    };
    if model.constraint().is_whole() && penalty.is_none() {
        let theta = dual_param(&**model.family(), t)?;
        let value = obj.value(&theta);
        let residual = obj.gradient(&theta);
        return Ok(SetMinimum {
            theta,
            param: None,
            value,
            residual,
            converged: true,
        });
    }
    minimize_over(model.constraint(), &obj, hint, start, solve)
}

/// Accurate/spare coordinates from the spectrum of `I_m(θ, y)`: the rows of
/// `q` are eigenvectors, the first `m` spanning the range `V` of `I_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCoordinates {
    pub q: Matrix,
    pub m: usize,
    pub p: SymMatrix,
    pub eigenvalues: Vec<f64>,
}

impl SplitCoordinates {
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// `θ'`: the leading `m` rotated coordinates.
    pub fn accurate(&self, theta: &[f64]) -> Vec<f64> {
        self.q.mul_vec(theta)[..self.m].to_vec()
    }

    /// `θ''`: the trailing `n − m` rotated coordinates.
    pub fn spare(&self, theta: &[f64]) -> Vec<f64> {
        self.q.mul_vec(theta)[self.m..].to_vec()
    }

    /// `I − P`.
    pub fn complement(&self) -> SymMatrix {
        SymMatrix::identity(self.dim()).sub(&self.p)
    }

    /// `Qᵀ(θ', θ'')`.
    pub fn compose(&self, accurate: &[f64], spare: &[f64]) -> Vec<f64> {
        let mut r = accurate.to_vec();
        r.extend_from_slice(spare);
        self.q.tr_mul_vec(&r)
    }

    /// Rows of `Q` spanning `V`.
    pub fn accurate_rows(&self) -> Matrix {
        Matrix::from_fn(self.m, self.dim(), |i, j| self.q[(i, j)])
    }
}

/// Conditional expected Fisher information of the missing data,
/// `I_m(θ, y) = ∇²ψ_y(θ)`, or the second-argument Hessian of the conditional
/// KL oracle on the diagonal.
pub fn conditional_fisher(model: &IncompleteModel, theta: &[f64]) -> Result<SymMatrix> {
    check_interior(&**model.family(), theta)?;
    let h = if let Some(c) = model.conditional() {
        c.hessian(theta)
    } else if let Some(kl) = &model.cond_kl {
        let base = theta.to_vec();
        let f = |x: &[f64]| kl(&base, x);
        finite_diff_hess(&f, theta, 1e-4)?.value
    } else {
        return Err(Error::Unsupported(
            "model has neither a conditional log-normalizer nor a conditional KL".into(),
        ));
    };
    if !h.as_matrix().is_finite() {
        return Err(Error::NonFinite("conditional Fisher information"));
    }
    let e = sym_eig(&h)?;
    if e.min_value() < -1e-8 * e.max_value().abs().max(1.0) {
        return Err(Error::ModelInconsistency(alloc::format!(
            "conditional Fisher information has eigenvalue {:e}",
            e.min_value()
        )));
    }
    Ok(h)
}

/// Eigendecomposes `I_m(θ, y)` and splits off its range.
pub fn split_parameters(
    model: &IncompleteModel,
    theta: &[f64],
    rel_tol: f64,
) -> Result<SplitCoordinates> {
    let im = conditional_fisher(model, theta)?;
    let e = sym_eig(&im)?;
    let m = rank_with_tol(&e.values, rel_tol)?;
    let (q, p) = projection_from_eigvecs(&e, m)?;
    Ok(SplitCoordinates {
        q,
        m,
        p,
        eigenvalues: e.values,
    })
}

/// `Ψ(θ⁺, θ) = K_y(θ‖θ⁺) = D_{ψ_y}(θ⁺, θ)`, with the projection onto the
/// accurate subspace computed at `at`.
pub fn kl_em_regularizer(model: &IncompleteModel, at: &[f64]) -> Result<RegularizerSpec> {
    let cond = model.conditional().cloned().ok_or_else(|| {
        Error::Unsupported("the KL regularizer needs a conditional log-normalizer".into())
    })?;
    let split = split_parameters(model, at, 1e-8)?;
    let c1 = cond.clone();
    Ok(RegularizerSpec::new(
        RegularizerKind::KlConditional,
        Arc::new(move |xp, x| bregman_div(&*c1, xp, x).unwrap_or(f64::INFINITY)),
        Arc::new(move |xp, x| sub(&cond.gradient(xp), &cond.gradient(x))),
    )
    .with_projection(split.p))
}

/// One step of EM with the extra penalty `λ⁻¹‖θ'' − θ''_k‖²` on the spare
/// coordinates.
pub fn regularized_em_step(
    model: &IncompleteModel,
    theta_k: &[f64],
    lambda: f64,
    split: &SplitCoordinates,
    start: &Start,
    solve: &SolveOptions,
) -> Result<SetMinimum> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid("lambda must be positive".into()));
    }
    let t = e_step(model, theta_k)?;
    let c = split.complement();
    surrogate_step(
        model,
        &t,
        Some((&c, theta_k, 1.0 / lambda)),
        theta_k,
        start,
        solve,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitPolicy {
    /// Split once at the starting point.
    #[default]
    AtStart,
    /// Recompute the split at every iterate.
    EveryIterate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    pub step_tol: f64,
    pub boundary_threshold: f64,
    pub start: StartPolicy,
    pub solve: SolveOptions,
    pub split: SplitPolicy,
    pub rank_tol: f64,
    /// `λ` of the spare-coordinate penalty; `None` runs plain EM.
    pub regularization: Option<f64>,
    /// Slack allowed in the monotonicity check, relative to `max(1, |−log q|)`.
    pub descent_tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 500,
            step_tol: 1e-10,
            boundary_threshold: 1e-6,
            start: StartPolicy::Global,
            solve: SolveOptions::default(),
            split: SplitPolicy::AtStart,
            rank_tol: 1e-8,
            regularization: None,
            descent_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmRecord {
    pub k: usize,
    pub theta: Vec<f64>,
    pub param: Option<Vec<f64>>,
    pub neg_log_q: f64,
    /// Completed statistic that produced this iterate (empty for `k = 0`).
    pub completed: Vec<f64>,
    pub step_norm: f64,
    /// `‖P(θ_k − θ_{k−1})‖`.
    pub accurate_step: f64,
    /// `‖(I − P)(θ_k − θ_{k−1})‖`.
    pub spare_step: f64,
    /// `K_y(θ_{k−1}‖θ_k)` when `ψ_y` is known.
    pub psi_reg: f64,
    /// First-order residual of the M step.
    pub residual: f64,
    pub domain_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    pub records: Vec<EmRecord>,
    pub split: Option<SplitCoordinates>,
    pub termination: Termination,
    pub lambda: f64,
    /// Largest observed increase of `−log q` (non-positive when monotone).
    pub max_increase: f64,
}

impl EmTrace {
    pub fn thetas(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.theta.clone()).collect()
    }

    pub fn last(&self) -> &EmRecord {
        self.records.last().expect("trace holds the starting point")
    }

    pub fn to_iterate_trace(&self) -> IterateTrace {
        let records = self
            .records
            .iter()
            .map(|r| TraceRecord {
                k: r.k,
                x: r.theta.clone(),
                f: r.neg_log_q,
                psi_reg: r.psi_reg,
                step_norm: r.step_norm,
                proj_step_norm: if self.split.is_some() {
                    r.accurate_step
                } else {
                    r.step_norm
                },
                residual: r.residual,
                lambda: if r.k == 0 { f64::NAN } else { self.lambda },
                domain_margin: r.domain_margin,
            })
            .collect();
        IterateTrace {
            records,
            termination: self.termination,
            projection: self.split.as_ref().map(|s| s.p.clone()),
        }
    }
}

fn split_if_available(
    model: &IncompleteModel,
    theta: &[f64],
    rel_tol: f64,
) -> Result<Option<SplitCoordinates>> {
    if model.conditional().is_none() && model.cond_kl.is_none() {
        return Ok(None);
    }
    split_parameters(model, theta, rel_tol).map(Some)
}

/// Runs EM (or regularized EM when `cfg.regularization` is set) from `θ0`.
///
/// Every M step is checked against the surrogate value at `θ_k` and re-solved
/// from `θ_k` if a start policy led to a worse local solution; an increase of
/// `−log q` beyond the tolerance is an error.
pub fn em_run(model: &IncompleteModel, theta0: &[f64], cfg: &EmConfig) -> Result<EmTrace> {
    check_interior(&**model.family(), theta0)?;
    if !model.constraint().contains(theta0, 1e-8) {
        return Err(Error::Infeasible(
            "starting point is not in the constraint set".into(),
        ));
    }
    let mut split = split_if_available(model, theta0, cfg.rank_tol)?;
    if cfg.regularization.is_some() && split.is_none() {
        return Err(Error::Unsupported(
            "regularized EM needs the parameter split".into(),
        ));
    }
    let f0 = model.neg_log_q(theta0);
    let mut records = vec![EmRecord {
        k: 0,
        theta: theta0.to_vec(),
        param: model.constraint().locate(theta0),
        neg_log_q: f0,
        completed: Vec::new(),
        step_norm: 0.0,
        accurate_step: 0.0,
        spare_step: 0.0,
        psi_reg: 0.0,
        residual: f64::NAN,
        domain_margin: model.domain_margin(theta0),
    }];
    let mut termination = Termination::MaxIterations;
    let mut max_increase = f64::NEG_INFINITY;
    for k in 1..=cfg.max_iter {
        let prev = records.last().expect("non-empty");
        let theta_k = prev.theta.clone();
        let f_k = prev.neg_log_q;
        if cfg.split == SplitPolicy::EveryIterate && k > 1 {
            split = split_if_available(model, &theta_k, cfg.rank_tol).map_err(|e| e.at(k))?;
        }
        let t = e_step(model, &theta_k).map_err(|e| e.at(k))?;
        let start = cfg.start.start_for(k, &theta_k, prev.param.as_deref());
        let complement = split.as_ref().map(|s| s.complement());
        let penalty = match (cfg.regularization, &complement) {
            (Some(l), Some(c)) => Some((c, theta_k.as_slice(), 1.0 / l)),
            _ => None,
        };
        let surrogate_k = Surrogate {
            family: &**model.family(),
            t: &t,
            penalty,
        }
        .value(&theta_k);
        let mut m = surrogate_step(model, &t, penalty, &theta_k, &start, &cfg.solve)
            .map_err(|e| e.at(k))?;
        if m.value > surrogate_k + cfg.descent_tol * surrogate_k.abs().max(1.0) {
            let retry = match &prev.param {
                Some(u) => Start::Param(u.clone()),
                None => Start::Point(theta_k.clone()),
            };
            m = surrogate_step(model, &t, penalty, &theta_k, &retry, &cfg.solve)
                .map_err(|e| e.at(k))?;
        }
        let f_new = model.neg_log_q(&m.theta);
        let increase = f_new - f_k;
        max_increase = max_increase.max(increase);
        if increase > cfg.descent_tol * f_k.abs().max(1.0) || !f_new.is_finite() {
            return Err(Error::DescentViolation { excess: increase }.at(k));
        }
        let diff = sub(&m.theta, &theta_k);
        let (acc, spare) = match &split {
            Some(s) => (
                norm(&s.p.mul_vec(&diff)),
                norm(&s.complement().mul_vec(&diff)),
            ),
            None => (norm(&diff), 0.0),
        };
        let psi_reg = match model.conditional() {
            Some(c) => bregman_div(&**c, &m.theta, &theta_k).unwrap_or(f64::INFINITY),
            None => f64::NAN,
        };
        let rec = EmRecord {
            k,
            domain_margin: model.domain_margin(&m.theta),
            neg_log_q: f_new,
            completed: t,
            step_norm: norm(&diff),
            accurate_step: acc,
            spare_step: spare,
            psi_reg,
            residual: norm(&m.residual),
            param: m.param,
            theta: m.theta,
        };
        let (step, margin) = (rec.step_norm, rec.domain_margin);
        records.push(rec);
        if margin <= cfg.boundary_threshold {
            termination = Termination::Boundary;
            break;
        }
        if step <= cfg.step_tol {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(EmTrace {
        records,
        split,
        termination,
        lambda: cfg.regularization.unwrap_or(1.0),
        max_increase,
    })
}

/// [`em_run`] with the spare-coordinate penalty `λ⁻¹‖θ'' − θ''_k‖²`.
pub fn regularized_em_run(
    model: &IncompleteModel,
    theta0: &[f64],
    lambda: f64,
    cfg: &EmConfig,
) -> Result<EmTrace> {
    let cfg = EmConfig {
        regularization: Some(lambda),
        ..cfg.clone()
    };
    em_run(model, theta0, &cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitProgramSolution {
    pub theta: Vec<f64>,
    /// `θ''` of the solution.
    pub spare: Vec<f64>,
    pub value: f64,
    /// Finite-difference Hessian of `−log q` in the section coordinates.
    pub hessian: SymMatrix,
    pub hessian_min_eigenvalue: f64,
    pub positive_definite: bool,
}

/// Solves `min −log q(y, θ', θ'')` over the section
/// `M(θ') = {θ'' : (θ', θ'') ∈ M}` for fixed accurate coordinates.
pub fn split_program_solve(
    model: &IncompleteModel,
    split: &SplitCoordinates,
    accurate: &[f64],
    hint: &[f64],
    solve: &SolveOptions,
) -> Result<SplitProgramSolution> {
    if accurate.len() != split.m {
        return Err(Error::Dimension {
            expected: split.m,
            got: accurate.len(),
        });
    }
    let rows = split.accurate_rows();
    let section = match model.constraint() {
        ConstraintSet::Whole { .. } => AffineSet::new(rows, accurate.to_vec()),
        ConstraintSet::Affine(a) => {
            let n = model.dim();
            let k = a.matrix().rows();
            let stacked = Matrix::from_fn(k + split.m, n, |i, j| {
                if i < k {
                    a.matrix()[(i, j)]
                } else {
                    rows[(i - k, j)]
                }
            });
            let mut b = a.offset().to_vec();
            b.extend_from_slice(accurate);
            AffineSet::new(stacked, b)
        }
        _ => {
            return Err(Error::Unsupported(
                "split programs are supported for affine constraint sets".into(),
            ))
        }
    }
    .map_err(|e| match e {
        Error::Infeasible(_) => Error::Infeasible("empty section of the constraint set".into()),
        e => e,
    })?;
    let set = ConstraintSet::Affine(section.clone());
    let obj = NegLogLikelihood(model);
    let m = minimize_over(&set, &obj, hint, &Start::Auto, solve)?;
    let z = section.coords(&m.theta);
    let hessian = if z.is_empty() {
        SymMatrix::zeros(0)
    } else {
        let f = |z: &[f64]| model.neg_log_q(&section.embed(z));
        finite_diff_hess(&f, &z, 1e-4)?.value
    };
    let hessian_min_eigenvalue = if z.is_empty() {
        f64::INFINITY
    } else {
        sym_eig(&hessian)?.min_value()
    };
    Ok(SplitProgramSolution {
        spare: split.spare(&m.theta),
        theta: m.theta,
        value: m.value,
        positive_definite: hessian_min_eigenvalue > 0.0,
        hessian_min_eigenvalue,
        hessian,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryStatus {
    InteriorSafe,
    ApproachingBoundary,
}

impl BoundaryStatus {
    pub fn label(self) -> &'static str {
        match self {
            BoundaryStatus::InteriorSafe => "interior-safe",
            BoundaryStatus::ApproachingBoundary => "approaching-boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub status: BoundaryStatus,
}

/// Flags a run whose domain margins fall to `threshold` or below on the
/// final tenth of the trace (at least the last iterate).
pub fn boundary_monitor(trace: &IterateTrace, threshold: f64) -> BoundaryReport {
    let margins: Vec<f64> = trace.records.iter().map(|r| r.domain_margin).collect();
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let tail = (margins.len() / 10).max(1).min(margins.len());
    let approaching = margins[margins.len() - tail..]
        .iter()
        .any(|m| *m <= threshold);
    BoundaryReport {
        margins,
        min_margin,
        status: if approaching {
            BoundaryStatus::ApproachingBoundary
        } else {
            BoundaryStatus::InteriorSafe
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::mean_equals_std_curve;
    use crate::models::{gaussian_curved, gaussian_missing, missing_coordinates};
    use crate::numerics::finite_diff_hess;
    use crate::numerics::vector::dist;

    fn g2(y: f64) -> IncompleteModel {
        gaussian_missing(2, y, None).unwrap()
    }

    #[test]
    fn e_step_completes_mean_of_squares() {
        let m = g2(1.0);
        assert!(dist(&e_step(&m, &[0.0, -1.0]).unwrap(), &[1.0, 1.5]) < 1e-14);
        assert!(dist(&e_step(&m, &[0.0, -0.5]).unwrap(), &[1.0, 2.0]) < 1e-14);
    }

    #[test]
    fn unconstrained_m_step_is_dual_parameter() {
        let m = g2(1.0);
        let s = m_step(
            &m,
            &[1.0, 1.5],
            &[0.0, -1.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(dist(&s.theta, &[4.0, -2.0]) < 1e-10);
    }

    #[test]
    fn m_step_on_point_set() {
        let m = g2(1.0)
            .with_constraint(ConstraintSet::point(&[0.5, -3.0]))
            .unwrap();
        let s = m_step(
            &m,
            &[1.0, 1.5],
            &[0.5, -3.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(dist(&s.theta, &[0.5, -3.0]) < 1e-12);
    }

    #[test]
    fn curved_m_step_matches_scan() {
        let m = gaussian_curved(1.0).unwrap();
        let s = m_step(
            &m,
            &[1.0, 1.5],
            &[2.0, -1.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        let fam = crate::families::GaussianSample::gaussian2();
        let obj = |u: f64| fam.value(&[u, -u * u / 4.0]) - (u * 1.0 - u * u / 4.0 * 1.5);
        let (mut best, mut bu) = (f64::INFINITY, 0.0);
        for i in 0..=200_000 {
            let u = 0.05 + 19.95 * i as f64 / 200_000.0;
            if obj(u) < best {
                best = obj(u);
                bu = u;
            }
        }
        assert!((s.theta[0] - bu).abs() < 2e-4);
        assert!(s.value <= best + 1e-12);
    }

    #[test]
    fn unconstrained_em_keeps_mean_at_observation() {
        let m = g2(1.0);
        let cfg = EmConfig {
            max_iter: 30,
            ..EmConfig::default()
        };
        let tr = em_run(&m, &[0.0, -1.0], &cfg).unwrap();
        for r in &tr.records[1..] {
            let mu = -r.theta[0] / (2.0 * r.theta[1]);
            assert!((mu - 1.0).abs() < 1e-10);
        }
        assert!(tr.max_increase <= 1e-12);
    }

    #[test]
    fn fixed_point_terminates_immediately() {
        // Σθ has observed component y: every such θ is a fixed point.
        let cov = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.5 });
        let m = missing_coordinates(cov, &[0], &[1.0], None).unwrap();
        let tr = em_run(&m, &[1.0, 0.0], &EmConfig::default()).unwrap();
        assert_eq!(tr.records.len(), 2);
        assert_eq!(tr.termination, Termination::Converged);
        assert!(tr.records[1].step_norm < 1e-12);
    }

    #[test]
    fn curved_em_converges_to_mle() {
        let m = gaussian_curved(1.0).unwrap();
        let tr = em_run(&m, &[2.0, -1.0], &EmConfig::default()).unwrap();
        assert_eq!(tr.termination, Termination::Converged);
        let u = 1.0 + 3f64.sqrt();
        assert!(dist(&tr.last().theta, &[u, -u * u / 4.0]) < 1e-7);
        assert!(tr.max_increase <= 1e-12);
    }

    #[test]
    fn split_of_gaussian2() {
        let m = g2(0.0);
        let im = conditional_fisher(&m, &[0.0, -1.0]).unwrap();
        assert!(
            im.as_matrix()
                .sub(&Matrix::from_diag(&[0.0, 0.5]))
                .max_abs()
                < 1e-12
        );
        let s = split_parameters(&m, &[0.0, -1.0], 1e-8).unwrap();
        assert_eq!(s.m, 1);
        assert!(
            s.p.as_matrix()
                .sub(&Matrix::from_diag(&[0.0, 1.0]))
                .max_abs()
                < 1e-12
        );
    }

    #[test]
    fn information_split() {
        let m = g2(0.7);
        for th in [[0.0, -1.0], [1.0, -0.5], [-2.0, -3.0]] {
            let f = |x: &[f64]| m.neg_log_q(x);
            let observed = finite_diff_hess(&f, &th, 1e-4).unwrap().value;
            let total = observed.add(&conditional_fisher(&m, &th).unwrap());
            let complete = m.family().hessian(&th);
            assert!(total.as_matrix().sub(complete.as_matrix()).max_abs() < 1e-5);
        }
    }

    #[test]
    fn kl_regularizer_vanishes_on_diagonal() {
        let m = g2(1.0);
        let reg = kl_em_regularizer(&m, &[0.0, -1.0]).unwrap();
        for th in [[0.0, -1.0], [3.0, -0.2]] {
            assert!(reg.value(&th, &th).abs() < 1e-14);
        }
        assert!(reg.value(&[1.0, -2.0], &[0.0, -1.0]) > 0.0);
    }

    #[test]
    fn weak_regularization_reproduces_m_step() {
        let m = g2(1.0);
        let split = split_parameters(&m, &[0.0, -1.0], 1e-8).unwrap();
        let plain = m_step(
            &m,
            &[1.0, 1.5],
            &[0.0, -1.0],
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        let reg = regularized_em_step(
            &m,
            &[0.0, -1.0],
            1e12,
            &split,
            &Start::Auto,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(dist(&plain.theta, &reg.theta) < 1e-6);
    }

    #[test]
    fn split_program_fixes_mean() {
        let m = g2(1.0);
        let split = split_parameters(&m, &[0.0, -1.0], 1e-8).unwrap();
        let acc = split.accurate(&[0.0, -2.0]);
        let sol =
            split_program_solve(&m, &split, &acc, &[0.0, -2.0], &SolveOptions::default()).unwrap();
        assert!((sol.theta[1] + 2.0).abs() < 1e-10);
        assert!((sol.theta[0] - 4.0).abs() < 1e-8);
        assert!(sol.positive_definite);
    }

    #[test]
    fn split_program_rejects_curves() {
        let m = g2(1.0)
            .with_constraint(mean_equals_std_curve((0.1, 5.0)).unwrap())
            .unwrap();
        let split = split_parameters(&m, &[2.0, -1.0], 1e-8).unwrap();
        assert!(matches!(
            split_program_solve(&m, &split, &[1.0], &[2.0, -1.0], &SolveOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    fn margin_trace(margins: &[f64]) -> IterateTrace {
        IterateTrace {
            records: margins
                .iter()
                .enumerate()
                .map(|(k, m)| TraceRecord {
                    k,
                    x: vec![0.0, -m],
                    f: 0.0,
                    psi_reg: 0.0,
                    step_norm: 0.0,
                    proj_step_norm: 0.0,
                    residual: 0.0,
                    lambda: 1.0,
                    domain_margin: *m,
                })
                .collect(),
            termination: Termination::MaxIterations,
            projection: None,
        }
    }

    #[test]
    fn boundary_classification() {
        let t: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(
            boundary_monitor(&margin_trace(&t), 1e-6).status,
            BoundaryStatus::ApproachingBoundary
        );
        assert_eq!(
            boundary_monitor(&margin_trace(&[1.0, 0.5, 0.4]), 1e-6).status,
            BoundaryStatus::InteriorSafe
        );
        assert_eq!(
            boundary_monitor(&margin_trace(&[1.0, 1e-6]), 1e-6).status,
            BoundaryStatus::ApproachingBoundary
        );
    }
}
