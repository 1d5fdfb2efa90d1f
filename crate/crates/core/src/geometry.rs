//! Alternating e/m-projections between the data set `D` and the model set
//! `M`, Amari's condition and gap pairs.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::bregman::{
    bregman_div, check_interior, left_projection, right_projection, LegendreGenerator,
    ProjectionOptions,
};
use crate::constraint::{ConstraintSet, ParametricSet, SetMinimum, Start, SublevelSet};
use crate::em::IncompleteModel;
use crate::expfam::ExpFamily;
use crate::numerics::vector::{dist, norm, sub};
use crate::numerics::{fd_jacobian, newton_solve, Matrix, NewtonOptions};
use crate::{Error, Result};

/// `D = {ϑ ∈ G : η_i(ϑ) = y_i for the observed indices i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSetSpec {
    observed: Vec<usize>,
    values: Vec<f64>,
}

impl DataSetSpec {
    pub fn new(observed: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if observed.len() != values.len() {
            return Err(Error::Dimension {
                expected: observed.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observed values"));
        }
        let mut sorted = observed.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != observed.len() {
            return Err(Error::Invalid("observed indices must be distinct".into()));
        }
        Ok(DataSetSpec { observed, values })
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn hidden(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.observed.contains(i)).collect()
    }

    /// `‖η_obs(ϑ) − y‖`.
    pub fn residual<G: LegendreGenerator + ?Sized>(&self, gen: &G, vartheta: &[f64]) -> f64 {
        let eta = gen.gradient(vartheta);
        let d: Vec<f64> = self
            .observed
            .iter()
            .zip(&self.values)
            .map(|(&i, y)| eta[i] - y)
            .collect();
        norm(&d)
    }

    /// The data set as a two-sided sublevel set, for generic projectors.
    pub fn to_constraint_set(&self, gen: Arc<dyn LegendreGenerator>) -> ConstraintSet {
        let obs = self.observed.clone();
        let vals = self.values.clone();
        let n = gen.dim();
        ConstraintSet::Sublevel(SublevelSet::new(
            n,
            Arc::new(move |x: &[f64]| {
                let eta = gen.gradient(x);
                let mut g = Vec::with_capacity(2 * obs.len());
                for (&i, y) in obs.iter().zip(&vals) {
                    g.push(eta[i] - y);
                    g.push(y - eta[i]);
                }
                g
            }),
        ))
    }
}

/// e-projection onto the data set: keeps the hidden natural coordinates
/// and solves `η_obs(ϑ) = y` for the observed ones by Newton's method.
pub fn e_projection<G: LegendreGenerator + ?Sized>(
    gen: &G,
    data: &DataSetSpec,
    theta: &[f64],
) -> Result<Vec<f64>> {
    check_interior(gen, theta)?;
    let obs = data.observed();
    let y = data.values();
    if obs.is_empty() {
        return Ok(theta.to_vec());
    }
    let embed = |v: &[f64]| {
        let mut x = theta.to_vec();
        for (k, &i) in obs.iter().enumerate() {
            x[i] = v[k];
        }
        x
    };
    let residual = |v: &[f64]| {
        let x = embed(v);
        if !(gen.domain_margin(&x) > 0.0) {
            return vec![f64::NAN; v.len()];
        }
        let eta = gen.gradient(&x);
        obs.iter()
            .zip(y)
            .map(|(&i, yi)| eta[i] - yi)
            .collect::<Vec<f64>>()
    };
    let jac = |v: &[f64]| gen.hessian(&embed(v)).as_matrix().select(obs, obs);
    let v0: Vec<f64> = obs.iter().map(|&i| theta[i]).collect();
    let opts = NewtonOptions {
        tol: 1e-12 * (1.0 + norm(y)),
        max_iter: 200,
    };
    let rep = newton_solve(&residual, &jac, &v0, opts).map_err(|e| match e {
        Error::NoConvergence { residual, .. } => Error::Infeasible(alloc::format!(
            "observed expectation unreachable with fixed hidden coordinates (residual {residual:e})"
        )),
        e => e,
    })?;
    Ok(embed(&rep.x))
}

/// m-projection onto the model set: the left Bregman projection.
pub fn m_projection<G: LegendreGenerator + ?Sized>(
    gen: &G,
    model_set: &ConstraintSet,
    vartheta: &[f64],
    opts: &ProjectionOptions,
) -> Result<SetMinimum> {
    left_projection(gen, model_set, vartheta, opts)
}

/// The hidden part `z` of the statistic used in Amari's condition
/// `E_ϑ[z | y] = E_ϑ[z]`.
pub trait HiddenStatistic: Send + Sync {
    fn label(&self) -> String;
    fn conditional_mean(&self, model: &IncompleteModel, theta: &[f64]) -> Result<Vec<f64>>;
    fn mean(&self, model: &IncompleteModel, theta: &[f64]) -> Result<Vec<f64>>;
}

/// The statistic coordinates not fixed by the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenBlock {
    pub indices: Vec<usize>,
}

impl HiddenStatistic for HiddenBlock {
    fn label(&self) -> String {
        alloc::format!("T{:?}", self.indices)
    }

    fn conditional_mean(&self, model: &IncompleteModel, theta: &[f64]) -> Result<Vec<f64>> {
        let t = model.cond_expect(theta)?;
        Ok(self.indices.iter().map(|&i| t[i]).collect())
    }

    fn mean(&self, model: &IncompleteModel, theta: &[f64]) -> Result<Vec<f64>> {
        let eta = model.family().gradient(theta);
        Ok(self.indices.iter().map(|&i| eta[i]).collect())
    }
}

/// Sample variance `s² = mean(x²) − mean(x)²` of a Gaussian sample of size
/// `N`. It is independent of the sample mean, so both expectations equal
/// `σ²(N − 1)/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleVariance {
    pub sample_size: f64,
}

impl SampleVariance {
    fn value(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if !(theta[1] < 0.0) {
            return Err(Error::Domain { margin: -theta[1] });
        }
        let var = -self.sample_size / (2.0 * theta[1]);
        Ok(vec![var * (self.sample_size - 1.0) / self.sample_size])
    }
}

impl HiddenStatistic for SampleVariance {
    fn label(&self) -> String {
        "sample variance".into()
    }

    fn conditional_mean(&self, _model: &IncompleteModel, theta: &[f64]) -> Result<Vec<f64>> {
        self.value(theta)
    }

    fn mean(&self, _model: &IncompleteModel, theta: &[f64]) -> Result<Vec<f64>> {
        self.value(theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmariReport {
    /// `ϑ_e`, the e-projection of `θ` onto the data set.
    pub vartheta: Vec<f64>,
    /// `E_{ϑ_e}[z | y]`.
    pub lhs: Vec<f64>,
    /// `E_{ϑ_e}[z]`.
    pub rhs: Vec<f64>,
    pub coincide: bool,
}

/// Checks whether the E step and the e-step from `θ` coincide.
pub fn amari_check(model: &IncompleteModel, theta: &[f64], tol: f64) -> Result<AmariReport> {
    let data = model
        .data_set()
        .ok_or_else(|| Error::Unsupported("model has no data set".into()))?;
    let vartheta = e_projection(&**model.family(), data, theta)?;
    let default;
    let hidden: &dyn HiddenStatistic = match model.hidden_statistic() {
        Some(h) => &**h,
        None => {
            default = HiddenBlock {
                indices: data.hidden(model.dim()),
            };
            &default
        }
    };
    let (lhs, rhs) = (
        hidden.conditional_mean(model, &vartheta)?,
        hidden.mean(model, &vartheta)?,
    );
    let coincide = lhs.len() == rhs.len() && dist(&lhs, &rhs) <= tol;
    Ok(AmariReport {
        vartheta,
        lhs,
        rhs,
        coincide,
    })
}

/// How the data-side projection is computed.
#[derive(Clone, Debug)]
pub enum DataSide {
    /// Observed expectation coordinates: closed-form e-projection.
    Observed(DataSetSpec),
    /// Generic right Bregman projection onto a set.
    Set(ConstraintSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingConfig {
    pub max_iter: usize,
    pub step_tol: f64,
    /// Divergences at or below this count as zero (common point).
    pub gap_tol: f64,
    pub projection: ProjectionOptions,
    /// Warm-start each projection from the previous solution after the
    /// first grid scan.
    pub warm_start: bool,
}

impl Default for AlternatingConfig {
    fn default() -> Self {
        AlternatingConfig {
            max_iter: 100_000,
            step_tol: 1e-10,
            gap_tol: 1e-12,
            projection: ProjectionOptions::default(),
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingRecord {
    pub k: usize,
    pub theta: Vec<f64>,
    pub theta_param: Option<Vec<f64>>,
    pub vartheta: Vec<f64>,
    pub vartheta_param: Option<Vec<f64>>,
    /// `D(θ_k, ϑ_k)`.
    pub divergence: f64,
    /// `D(θ_{k+1}, ϑ_k)`.
    pub divergence_next: f64,
    /// `‖θ_{k+1} − θ_k‖`.
    pub step_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlternatingVerdict {
    CommonPoint,
    GapPair,
    NonConvergence,
}

impl AlternatingVerdict {
    pub fn label(self) -> &'static str {
        match self {
            AlternatingVerdict::CommonPoint => "common-point",
            AlternatingVerdict::GapPair => "gap-pair",
            AlternatingVerdict::NonConvergence => "non-convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingTrace {
    pub records: Vec<AlternatingRecord>,
    pub verdict: AlternatingVerdict,
    /// Final `θ ∈ M`.
    pub theta: Vec<f64>,
    /// Final `ϑ ∈ D`.
    pub vartheta: Vec<f64>,
}

fn right_step<G: LegendreGenerator + ?Sized>(
    gen: &G,
    side: &DataSide,
    theta: &[f64],
    opts: &ProjectionOptions,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    match side {
        DataSide::Observed(d) => Ok((e_projection(gen, d, theta)?, None)),
        DataSide::Set(s) => {
            let m = right_projection(gen, s, theta, opts)?;
            Ok((m.theta, m.param))
        }
    }
}

/// Alternates `θ ↦ ϑ = e-proj(θ)` and `ϑ ↦ θ = m-proj(ϑ)` from `θ0 ∈ M`.
pub fn alternate_run<G: LegendreGenerator + ?Sized>(
    gen: &G,
    data: &DataSide,
    model_set: &ConstraintSet,
    theta0: &[f64],
    cfg: &AlternatingConfig,
) -> Result<AlternatingTrace> {
    check_interior(gen, theta0)?;
    if !model_set.contains(theta0, 1e-8) {
        return Err(Error::Infeasible(
            "starting point is not in the model set".into(),
        ));
    }
    let mut theta = theta0.to_vec();
    let mut theta_param = model_set.locate(theta0);
    let mut vartheta_param: Option<Vec<f64>> = None;
    let mut records = Vec::new();
    let mut verdict = AlternatingVerdict::NonConvergence;
    let mut vartheta = theta.clone();
    for k in 0..cfg.max_iter {
        let mut ropts = cfg.projection.clone();
        if cfg.warm_start {
            if let Some(v) = &vartheta_param {
                ropts.start = Start::Param(v.clone());
            }
        }
        let (vt, vparam) = right_step(gen, data, &theta, &ropts).map_err(|e| e.at(k))?;
        vartheta = vt;
        vartheta_param = vparam;
        let mut lopts = cfg.projection.clone();
        if cfg.warm_start {
            if let Some(u) = &theta_param {
                lopts.start = Start::Param(u.clone());
            }
        }
        let next = m_projection(gen, model_set, &vartheta, &lopts).map_err(|e| e.at(k))?;
        let divergence = bregman_div(gen, &theta, &vartheta)?;
        let divergence_next = bregman_div(gen, &next.theta, &vartheta)?;
        let step_norm = dist(&next.theta, &theta);
        records.push(AlternatingRecord {
            k,
            theta: theta.clone(),
            theta_param: theta_param.clone(),
            vartheta: vartheta.clone(),
            vartheta_param: vartheta_param.clone(),
            divergence,
            divergence_next,
            step_norm,
        });
        theta = next.theta;
        theta_param = next.param;
        if step_norm <= cfg.step_tol {
            verdict = if divergence_next <= cfg.gap_tol {
                AlternatingVerdict::CommonPoint
            } else {
                AlternatingVerdict::GapPair
            };
            break;
        }
    }
    Ok(AlternatingTrace {
        records,
        verdict,
        theta,
        vartheta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapPair {
    /// Point of the model set.
    pub theta: Vec<f64>,
    pub theta_param: Vec<f64>,
    /// Point of the data set.
    pub vartheta: Vec<f64>,
    pub vartheta_param: Vec<f64>,
    pub divergence: f64,
    /// Norm of the two-point stationarity system at the pair.
    pub residual: f64,
}

/// Two-point stationarity of `D(θ(u), ϑ(v))` in both parameters.
pub fn pair_stationarity<G: LegendreGenerator + ?Sized>(
    gen: &G,
    model_set: &ParametricSet,
    data_set: &ParametricSet,
    u: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    let th = model_set.theta(u);
    let vt = data_set.theta(v);
    if !(gen.domain_margin(&th) > 0.0) || !(gen.domain_margin(&vt) > 0.0) {
        return Ok(vec![f64::NAN; u.len() + v.len()]);
    }
    let g1 = sub(&gen.gradient(&th), &gen.gradient(&vt));
    let g2 = gen.hessian(&vt).mul_vec(&sub(&vt, &th));
    let mut r = model_set.jacobian(u)?.tr_mul_vec(&g1);
    r.extend(data_set.jacobian(v)?.tr_mul_vec(&g2));
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSearchOptions {
    /// Interior grid points of the model parameter scanned for fixed points.
    pub grid: usize,
    pub projection: ProjectionOptions,
    /// Divergence below which a fixed point is a common point, not a gap.
    pub gap_tol: f64,
    pub newton_tol: f64,
}

impl Default for GapSearchOptions {
    fn default() -> Self {
        GapSearchOptions {
            grid: 200,
            projection: ProjectionOptions::default(),
            gap_tol: 1e-12,
            newton_tol: 1e-10,
        }
    }
}

/// Finds gap pairs between two one-parameter sets.
///
/// The composite map `T(u)` = m-projection of the e-projection of `θ(u)` is
/// scanned for sign changes of `T(u) − u`; each bracket is bisected and the
/// pair is then polished by Newton's method on the two-point stationarity
/// system. Fixed points at zero divergence (common points) are dropped.
pub fn locate_gap_pairs<G: LegendreGenerator + ?Sized>(
    gen: &G,
    data_set: &ParametricSet,
    model_set: &ParametricSet,
    opts: &GapSearchOptions,
) -> Result<Vec<GapPair>> {
    if model_set.param_dim() != 1 || data_set.param_dim() != 1 {
        return Err(Error::Unsupported(
            "gap search scans one-parameter sets".into(),
        ));
    }
    let dset = ConstraintSet::Parametric(data_set.clone());
    let mset = ConstraintSet::Parametric(model_set.clone());
    let composite = |u: f64| -> Result<(f64, Vec<f64>)> {
        let th = model_set.theta(&[u]);
        let r = right_projection(gen, &dset, &th, &opts.projection)?;
        let l = left_projection(gen, &mset, &r.theta, &opts.projection)?;
        let lu = l.param.expect("parametric")[0];
        Ok((lu - u, r.param.expect("parametric")))
    };
    let (lo, hi) = model_set.bounds()[0];
    let n = opts.grid.max(3);
    let grid: Vec<f64> = (1..n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for &u in &grid {
        values.push(composite(u)?.0);
    }
    let mut pairs: Vec<GapPair> = Vec::new();
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (values[i], values[i + 1]);
        if fa.signum() == fb.signum() && fa != 0.0 {
            continue;
        }
        let (mut a, mut b, mut fa) = (a, b, fa);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let fm = composite(m)?.0;
            if fm == 0.0 || fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
            if b - a <= 1e-14 * (1.0 + a.abs()) {
                break;
            }
        }
        let u0 = 0.5 * (a + b);
        let (_, v0) = composite(u0)?;
        let f = |z: &[f64]| {
            pair_stationarity(gen, model_set, data_set, &z[..1], &z[1..])
                .unwrap_or(vec![f64::NAN; 2])
        };
        let jac = |z: &[f64]| {
            fd_jacobian(&f, z, 1e-7 * (1.0 + z[0].abs() + z[1].abs()))
                .unwrap_or(Matrix::zeros(2, 2))
        };
        let z0 = [u0, v0[0]];
        let z = match newton_solve(
            &f,
            &jac,
            &z0,
            NewtonOptions {
                tol: opts.newton_tol,
                max_iter: 50,
            },
        ) {
            Ok(rep) => rep.x,
            Err(Error::NoConvergence { last, .. }) => last,
            Err(e) => return Err(e),
        };
        let theta = model_set.theta(&z[..1]);
        let vartheta = data_set.theta(&z[1..]);
        let divergence = bregman_div(gen, &theta, &vartheta)?;
        if divergence <= opts.gap_tol {
            continue;
        }
        let residual = norm(&f(&z));
        if pairs.iter().any(|p| (p.theta_param[0] - z[0]).abs() < 1e-8) {
            continue;
        }
        pairs.push(GapPair {
            theta,
            theta_param: z[..1].to_vec(),
            vartheta,
            vartheta_param: z[1..].to_vec(),
            divergence,
            residual,
        });
    }
    Ok(pairs)
}

/// The data set of a model, with the family's own e-projection.
pub fn data_side_of(model: &IncompleteModel) -> Result<DataSide> {
    model
        .data_set()
        .cloned()
        .map(DataSide::Observed)
        .ok_or_else(|| Error::Unsupported("model has no data set".into()))
}

/// Alternating e/m-projections for a model, using its family as generator.
pub fn alternate_model(
    model: &IncompleteModel,
    theta0: &[f64],
    cfg: &AlternatingConfig,
) -> Result<AlternatingTrace> {
    let side = data_side_of(model)?;
    let fam: &dyn ExpFamily = &**model.family();
    alternate_run(fam, &side, model.constraint(), theta0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::mean_equals_std_curve;
    use crate::em::{em_run, EmConfig};
    use crate::families::{GaussianSample, NegEntropy, Quadratic};
    use crate::models::{gaussian_missing, kl_arc, missing_coordinates};
    use crate::numerics::SymMatrix;

    #[test]
    fn e_projection_keeps_hidden_coordinate() {
        let fam = GaussianSample::gaussian2();
        let d = DataSetSpec::new(vec![0], vec![1.0]).unwrap();
        let v = e_projection(&fam, &d, &[0.0, -1.0]).unwrap();
        assert!(dist(&v, &[2.0, -1.0]) < 1e-12);
        assert_eq!(v[1], -1.0);
        assert_eq!(e_projection(&fam, &d, &v).unwrap(), v);
    }

    #[test]
    fn e_projection_is_right_projection() {
        let fam = GaussianSample::gaussian2();
        let d = DataSetSpec::new(vec![0], vec![1.0]).unwrap();
        let theta = [0.5, -0.8];
        let v = e_projection(&fam, &d, &theta).unwrap();
        let set = d.to_constraint_set(Arc::new(fam));
        let opts = ProjectionOptions {
            start: Start::Point(v.clone()),
            ..ProjectionOptions::default()
        };
        let r = right_projection(&GaussianSample::gaussian2(), &set, &theta, &opts).unwrap();
        assert!(dist(&r.theta, &v) < 1e-8, "{:?} vs {:?}", r.theta, v);
    }

    #[test]
    fn e_projection_unreachable() {
        // η₁ = Σ₀₀θ₀ + Σ₀₁θ₁ is always reachable for a Gaussian; a generator
        // with bounded gradient is not.
        struct Bounded;
        impl LegendreGenerator for Bounded {
            fn dim(&self) -> usize {
                1
            }
            fn domain_margin(&self, _x: &[f64]) -> f64 {
                f64::INFINITY
            }
            fn value(&self, x: &[f64]) -> f64 {
                num_traits::Float::ln(1.0 + num_traits::Float::exp(x[0]))
            }
            fn gradient(&self, x: &[f64]) -> Vec<f64> {
                vec![1.0 / (1.0 + num_traits::Float::exp(-x[0]))]
            }
            fn hessian(&self, x: &[f64]) -> SymMatrix {
                let s = 1.0 / (1.0 + num_traits::Float::exp(-x[0]));
                SymMatrix::from_diag(&[s * (1.0 - s)])
            }
            fn anchor(&self) -> Vec<f64> {
                vec![0.0]
            }
        }
        let d = DataSetSpec::new(vec![0], vec![2.0]).unwrap();
        assert!(matches!(
            e_projection(&Bounded, &d, &[0.0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn m_projection_cases() {
        let fam = GaussianSample::gaussian2();
        let whole = ConstraintSet::whole(2);
        let opts = ProjectionOptions::default();
        let v = [2.0, -1.0];
        assert!(dist(&m_projection(&fam, &whole, &v, &opts).unwrap().theta, &v) < 1e-10);

        let q = Quadratic::new(2);
        let line =
            ConstraintSet::affine(Matrix::from_rows(&[[1.0, 1.0]]).unwrap(), vec![1.0]).unwrap();
        let p = m_projection(&q, &line, &[1.0, 1.0], &opts).unwrap();
        assert!(dist(&p.theta, &[0.5, 0.5]) < 1e-10);

        let curve = mean_equals_std_curve((0.05, 20.0)).unwrap();
        let p = m_projection(&fam, &curve, &v, &opts).unwrap();
        let (mut best, mut bu) = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let u = 0.05 + 19.95 * i as f64 / 100_000.0;
            let d = bregman_div(&fam, &[u, -u * u / 4.0], &v).unwrap();
            if d < best {
                best = d;
                bu = u;
            }
        }
        assert!((p.theta[0] - bu).abs() < 5e-4);
        assert!(bregman_div(&fam, &p.theta, &v).unwrap() <= best + 1e-12);
    }

    #[test]
    fn no_hidden_coordinates_coincide() {
        let cov = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.3 });
        let m = missing_coordinates(cov, &[0, 1], &[1.0, -1.0], None).unwrap();
        let r = amari_check(&m, &[0.2, 0.1], 1e-9).unwrap();
        assert!(r.coincide && r.lhs.is_empty());
    }

    fn arc_run(s0: f64) -> AlternatingTrace {
        let arc = kl_arc(&[-1.0, -2.0], &[-2.0, -1.0]).unwrap();
        let gen = NegEntropy::new(2);
        let theta0 = arc.model.theta(&[s0]);
        alternate_run(
            &gen,
            &DataSide::Set(ConstraintSet::Parametric(arc.data)),
            &ConstraintSet::Parametric(arc.model),
            &theta0,
            &AlternatingConfig {
                max_iter: 10_000,
                ..AlternatingConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn arc_has_two_attractors() {
        let arc = kl_arc(&[-1.0, -2.0], &[-2.0, -1.0]).unwrap();
        for (s0, target) in [(0.1, &arc.a), (0.9, &arc.b)] {
            let tr = arc_run(s0);
            assert_eq!(tr.verdict, AlternatingVerdict::CommonPoint);
            assert!(dist(&tr.theta, target) < 1e-6);
            for r in &tr.records {
                assert!(r.divergence_next <= r.divergence + 1e-12);
            }
            for w in tr.records.windows(2) {
                assert!(w[1].divergence <= w[0].divergence_next + 1e-12);
            }
        }
    }

    #[test]
    fn arc_gap_pair() {
        let arc = kl_arc(&[-1.0, -2.0], &[-2.0, -1.0]).unwrap();
        let pairs = locate_gap_pairs(
            &NegEntropy::new(2),
            &arc.data,
            &arc.model,
            &GapSearchOptions::default(),
        )
        .unwrap();
        assert_eq!(pairs.len(), 1);
        let g = &pairs[0];
        assert!(g.residual <= 1e-8);
        assert!(g.divergence > 1e-6);
        assert!((g.theta_param[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn degenerate_arc_is_fixed() {
        let arc = kl_arc(&[-1.0, -1.5], &[-1.0, -1.5]).unwrap();
        let gen = NegEntropy::new(2);
        let theta0 = arc.model.theta(&[0.3]);
        let tr = alternate_run(
            &gen,
            &DataSide::Set(ConstraintSet::Parametric(arc.data)),
            &ConstraintSet::Parametric(arc.model),
            &theta0,
            &AlternatingConfig::default(),
        )
        .unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.verdict, AlternatingVerdict::CommonPoint);
    }

    #[test]
    fn em_and_em_algorithm_agree_under_amari() {
        let cov = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.5 });
        let line =
            ConstraintSet::affine(Matrix::from_rows(&[[1.0, -2.0]]).unwrap(), vec![0.0]).unwrap();
        let m = missing_coordinates(cov, &[0], &[1.3], Some(line)).unwrap();
        let theta0 = [0.4, 0.2];
        let em = em_run(&m, &theta0, &EmConfig::default()).unwrap();
        let alt = alternate_model(&m, &theta0, &AlternatingConfig::default()).unwrap();
        for (r, e) in alt.records.iter().zip(&em.records) {
            assert!(amari_check(&m, &r.theta, 1e-9).unwrap().coincide);
            assert!(dist(&r.theta, &e.theta) < 1e-8);
        }
        assert!(alt.records.len() >= 3);
    }

    #[test]
    fn gaussian_em_differs_from_em_algorithm() {
        let m = gaussian_missing(2, 1.0, None).unwrap();
        let em = em_run(
            &m,
            &[0.0, -1.0],
            &EmConfig {
                max_iter: 3,
                ..EmConfig::default()
            },
        )
        .unwrap();
        let alt = alternate_model(
            &m,
            &[0.0, -1.0],
            &AlternatingConfig {
                max_iter: 3,
                ..AlternatingConfig::default()
            },
        )
        .unwrap();
        assert!(dist(&alt.records[1].theta, &em.records[1].theta) > 1e-3);
    }
}
