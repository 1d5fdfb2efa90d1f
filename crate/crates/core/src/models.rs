//! Built-in incomplete-data models with closed-form conditional structure.

use alloc::format;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::bregman::LegendreGenerator;
use crate::constraint::{mean_equals_std_curve, ConstraintSet, ParametricSet};
use crate::em::IncompleteModel;
use crate::expfam::{AffinePullback, ExpFamily};
use crate::families::{
    GaussianKnownCovariance, GaussianSample, GaussianSampleConditional,
    MissingCoordinatesConditional,
};
use crate::geometry::{DataSetSpec, SampleVariance};
use crate::numerics::{Matrix, SymMatrix};
use crate::{Error, Result};

/// Default parameter range of the mean-equals-deviation curve.
pub const CURVE_RANGE: (f64, f64) = (0.05, 20.0);

/// `N` Gaussian draws with unknown mean and variance of which only the
/// sample mean `y` is observed. The statistic is
/// `(mean, mean of squares)`.
pub fn gaussian_missing(
    sample_size: u32,
    y: f64,
    constraint: Option<ConstraintSet>,
) -> Result<IncompleteModel> {
    let fam = GaussianSample::new(sample_size)?;
    let cond = GaussianSampleConditional::new(&fam, y);
    let constraint = constraint.unwrap_or(ConstraintSet::whole(2));
    let name = if sample_size == 2 {
        "gaussian2-missing".into()
    } else {
        format!("gaussian{sample_size}-missing")
    };
    Ok(IncompleteModel::from_conditional_normalizer(
        name,
        Arc::new(fam),
        Arc::new(cond),
        constraint,
    )?
    .with_data_set(DataSetSpec::new(vec![0], vec![y])?))
}

/// [`gaussian_missing`] with the sample variance as the hidden statistic.
pub fn gaussian_missing_sample_variance(
    sample_size: u32,
    y: f64,
    constraint: Option<ConstraintSet>,
) -> Result<IncompleteModel> {
    Ok(
        gaussian_missing(sample_size, y, constraint)?.with_hidden_statistic(Arc::new(
            SampleVariance {
                sample_size: sample_size as f64,
            },
        )),
    )
}

/// Two draws with mean restricted to equal the standard deviation.
pub fn gaussian_curved(y: f64) -> Result<IncompleteModel> {
    gaussian_missing(2, y, Some(mean_equals_std_curve(CURVE_RANGE)?))
}

/// Gaussian with known covariance and natural parameter `θ = Σ⁻¹μ`, of
/// which the coordinates `observed` are seen.
pub fn missing_coordinates(
    cov: SymMatrix,
    observed: &[usize],
    y: &[f64],
    constraint: Option<ConstraintSet>,
) -> Result<IncompleteModel> {
    let fam = GaussianKnownCovariance::new(cov)?;
    let cond = MissingCoordinatesConditional::new(&fam, observed, y)?;
    let n = fam.dim();
    Ok(IncompleteModel::from_conditional_normalizer(
        "gaussian-missing-coordinates",
        Arc::new(fam),
        Arc::new(cond),
        constraint.unwrap_or(ConstraintSet::whole(n)),
    )?
    .with_data_set(DataSetSpec::new(observed.to_vec(), y.to_vec())?))
}

/// Map `(a, b, c) ↦ (a + c, b)` of the duplicated statistic.
fn duplication_map() -> Matrix {
    Matrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]).expect("2x3")
}

/// Surface `(u, d) ↦ ((u + d)/2, −u²/4, (u − d)/2)` of the duplicated
/// model: the curve constraint in `(a + c, b)`, free in `d = a − c`.
pub fn duplicated_surface(u_range: (f64, f64), d_range: (f64, f64)) -> Result<ConstraintSet> {
    let set = ParametricSet::new(
        3,
        vec![u_range, d_range],
        Arc::new(|p: &[f64]| vec![(p[0] + p[1]) / 2.0, -p[0] * p[0] / 4.0, (p[0] - p[1]) / 2.0]),
    )?
    .with_jacobian(Arc::new(|p: &[f64]| {
        Matrix::from_rows(&[[0.5, 0.5], [-p[0] / 2.0, 0.0], [0.5, -0.5]]).expect("3x2")
    }));
    Ok(ConstraintSet::Parametric(set))
}

/// Two-draw Gaussian model whose mean statistic is duplicated:
/// `T = (x̄, mean of squares, x̄)`, so `ψ(a, b, c) = ψ₂(a + c, b)`. The
/// direction `a − c` is invisible to the likelihood.
pub fn duplicated_statistic(y: f64, d_range: (f64, f64)) -> Result<IncompleteModel> {
    let base = GaussianSample::gaussian2();
    let cond = GaussianSampleConditional::new(&base, y);
    let base: Arc<dyn LegendreGenerator> = Arc::new(base);
    let cond: Arc<dyn LegendreGenerator> = Arc::new(cond);
    let fam = AffinePullback::new(
        base,
        duplication_map(),
        vec![0.0, 0.0],
        "gaussian2-duplicated",
        "(mean, mean of squares, mean)",
    )?;
    let cond = AffinePullback::new(cond, duplication_map(), vec![0.0, 0.0], "conditional", "")?;
    let fam: Arc<dyn ExpFamily> = Arc::new(fam);
    IncompleteModel::from_conditional_normalizer(
        "gaussian2-duplicated",
        fam,
        Arc::new(cond),
        duplicated_surface(CURVE_RANGE, d_range)?,
    )
}

/// The two one-parameter sets of the arc example, in the positive orthant
/// with the negative-entropy generator: the data side
/// `A = {exp(t p + (1 − t) q) : t ∈ [0, 1]}` and the model side, the
/// segment `B = {a + s (b − a) : s ∈ [0, 1]}` from `a = exp(p)` to
/// `b = exp(q)`.
#[derive(Clone)]
pub struct KlArc {
    pub data: ParametricSet,
    pub model: ParametricSet,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn kl_arc(p: &[f64], q: &[f64]) -> Result<KlArc> {
    if p.len() != q.len() {
        return Err(Error::Dimension {
            expected: p.len(),
            got: q.len(),
        });
    }
    let n = p.len();
    let a: Vec<f64> = p.iter().map(|v| v.exp()).collect();
    let b: Vec<f64> = q.iter().map(|v| v.exp()).collect();
    let (p1, q1, p2, q2) = (p.to_vec(), q.to_vec(), p.to_vec(), q.to_vec());
    let arc = move |t: f64| -> Vec<f64> {
        p1.iter()
            .zip(&q1)
            .map(|(p, q)| (t * p + (1.0 - t) * q).exp())
            .collect()
    };
    let arc2 = arc.clone();
    let data = ParametricSet::new(n, vec![(0.0, 1.0)], Arc::new(move |t: &[f64]| arc(t[0])))?
        .with_jacobian(Arc::new(move |t: &[f64]| {
            let x = arc2(t[0]);
            Matrix::from_fn(x.len(), 1, |i, _| x[i] * (p2[i] - q2[i]))
        }));
    let (a1, b1, a2, b2) = (a.clone(), b.clone(), a.clone(), b.clone());
    let model = ParametricSet::new(
        n,
        vec![(0.0, 1.0)],
        Arc::new(move |s: &[f64]| {
            a1.iter()
                .zip(&b1)
                .map(|(a, b)| a + s[0] * (b - a))
                .collect()
        }),
    )?
    .with_jacobian(Arc::new(move |_: &[f64]| {
        Matrix::from_fn(a2.len(), 1, |i, _| b2[i] - a2[i])
    }));
    Ok(KlArc { data, model, a, b })
}

/// Shape of a mexican-hat function on the unit disc: positive inside,
/// vanishing on the rim and outside, with a valley that spirals out towards
/// the rim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HatShape {
    /// `A (1 − r²)^α (1 − w r sin(φ − c L))` with `L = −log(1 − r²)`. The
    /// ripple factor `r sin(·)` is smooth at the origin. For `α > 1/2` the
    /// square `f²/2` is continuously differentiable across the rim.
    Spiral {
        amplitude: f64,
        exponent: f64,
        twist: f64,
        ripple: f64,
    },
    /// `e^{−1/(1−r²)} (1 − g(r) sin(φ − 1/(1−r²)))` with
    /// `g = 4r⁴/(4r⁴ + (1−r²)⁴)`.
    Bump,
}

impl HatShape {
    pub const fn default_spiral() -> Self {
        HatShape::Spiral {
            amplitude: 2.0,
            exponent: 0.75,
            twist: 4.5,
            ripple: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MexicanHat {
    pub shape: HatShape,
}

impl Default for MexicanHat {
    fn default() -> Self {
        MexicanHat {
            shape: HatShape::default_spiral(),
        }
    }
}

impl MexicanHat {
    pub fn new(shape: HatShape) -> Self {
        MexicanHat { shape }
    }

    /// Angle of the valley floor at radius `r`.
    pub fn valley_angle(&self, r: f64) -> f64 {
        let u = 1.0 - r * r;
        match self.shape {
            HatShape::Spiral { twist, .. } => twist * (-u.ln()) + core::f64::consts::FRAC_PI_2,
            HatShape::Bump => 1.0 / u + core::f64::consts::FRAC_PI_2,
        }
    }

    /// Point at radius `r` on the valley floor.
    pub fn valley_point(&self, r: f64) -> [f64; 2] {
        let a = self.valley_angle(r);
        [r * a.cos(), r * a.sin()]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - r2;
        match self.shape {
            HatShape::Spiral {
                amplitude,
                exponent,
                twist,
                ripple,
            } => {
                let cl = twist * (-u.ln());
                let s = x[1] * cl.cos() - x[0] * cl.sin();
                amplitude * u.powf(exponent) * (1.0 - ripple * s)
            }
            HatShape::Bump => {
                let (e, g) = ((-1.0 / u).exp(), bump_weight(r2, u));
                let phi = x[1].atan2(x[0]);
                e * (1.0 - g * (phi - 1.0 / u).sin())
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 >= 1.0 {
            return vec![0.0, 0.0];
        }
        let u = 1.0 - r2;
        match self.shape {
            HatShape::Spiral {
                amplitude,
                exponent,
                twist,
                ripple,
            } => {
                let cl = twist * (-u.ln());
                let (sn, cs) = (cl.sin(), cl.cos());
                let s = x[1] * cs - x[0] * sn;
                // ∇(cL) = 2c x / u.
                let k = -(x[1] * sn + x[0] * cs) * 2.0 * twist / u;
                let ds = [-sn + k * x[0], cs + k * x[1]];
                let up = u.powf(exponent);
                let du_coef = amplitude * exponent * u.powf(exponent - 1.0) * (1.0 - ripple * s);
                (0..2)
                    .map(|i| du_coef * (-2.0 * x[i]) - amplitude * up * ripple * ds[i])
                    .collect()
            }
            HatShape::Bump => {
                let r = r2.sqrt();
                if r == 0.0 {
                    return vec![0.0, 0.0];
                }
                let e = (-1.0 / u).exp();
                let g = bump_weight(r2, u);
                let d = 4.0 * r2 * r2 + u.powi(4);
                let dg = 16.0 * r2 * r * u.powi(3) * (u + 2.0 * r2) / (d * d);
                let phi = x[1].atan2(x[0]);
                let arg = phi - 1.0 / u;
                let (sn, cs) = (arg.sin(), arg.cos());
                let w = 2.0 * r / (u * u);
                let df_dr = -w * e * (1.0 - g * sn) + e * (-dg * sn + g * cs * w);
                let df_dphi = -e * g * cs;
                vec![
                    df_dr * x[0] / r - df_dphi * x[1] / r2,
                    df_dr * x[1] / r + df_dphi * x[0] / r2,
                ]
            }
        }
    }
}

fn bump_weight(r2: f64, u: f64) -> f64 {
    4.0 * r2 * r2 / (4.0 * r2 * r2 + u.powi(4))
}

impl crate::numerics::Objective for MexicanHat {
    fn value(&self, x: &[f64]) -> f64 {
        MexicanHat::value(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        MexicanHat::gradient(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{conditional_fisher, split_parameters};
    use crate::geometry::amari_check;
    use crate::numerics::vector::dist;

    #[test]
    fn hat_gradients_match_differences() {
        use crate::numerics::finite_diff_grad;
        for hat in [MexicanHat::default(), MexicanHat::new(HatShape::Bump)] {
            for x in [
                [0.3, -0.2],
                [0.0, 0.5],
                [-0.7, 0.1],
                [0.5, 0.6],
                [0.01, 0.0],
            ] {
                let fd = finite_diff_grad(&|z: &[f64]| hat.value(z), &x, 1e-6)
                    .unwrap()
                    .value;
                let g = hat.gradient(&x);
                assert!(
                    dist(&fd, &g) < 1e-6 * (1.0 + g[0].abs() + g[1].abs()),
                    "{x:?} {fd:?} {g:?}"
                );
            }
            assert_eq!(hat.value(&[1.0, 0.0]), 0.0);
        }
        assert_eq!(
            MexicanHat::new(HatShape::Bump).gradient(&[0.0, 0.0]),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn models_are_consistent() {
        let pts = vec![vec![0.3, -0.7], vec![-1.0, -2.0], vec![2.0, -0.4]];
        assert!(
            gaussian_missing(2, 1.0, None)
                .unwrap()
                .check_consistency(&pts)
                .unwrap()
                .pass
        );
        assert!(
            gaussian_missing(5, -0.5, None)
                .unwrap()
                .check_consistency(&pts)
                .unwrap()
                .pass
        );
        let cov = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 0.6 });
        let m = missing_coordinates(cov, &[0], &[1.5], None).unwrap();
        assert!(m.check_consistency(&pts).unwrap().pass);
        let d = duplicated_statistic(1.0, (-1.0, 1.0)).unwrap();
        let pts3 = vec![vec![1.0, -1.0, 0.5], vec![0.2, -0.3, -0.4]];
        assert!(d.check_consistency(&pts3).unwrap().pass);
    }

    #[test]
    fn amari_statistics() {
        let m = gaussian_missing(2, 1.0, None).unwrap();
        let r = amari_check(&m, &[0.0, -1.0], 1e-9).unwrap();
        assert!(dist(&r.vartheta, &[2.0, -1.0]) < 1e-10);
        assert!((r.lhs[0] - 1.5).abs() < 1e-10 && (r.rhs[0] - 2.0).abs() < 1e-10);
        assert!(!r.coincide);
        let s = gaussian_missing_sample_variance(2, 1.0, None).unwrap();
        assert!(amari_check(&s, &[0.0, -1.0], 1e-9).unwrap().coincide);
    }

    #[test]
    fn duplicated_split_is_deficient() {
        let d = duplicated_statistic(1.0, (-1.0, 1.0)).unwrap();
        let theta = [1.0, -1.0, 1.0];
        let split = split_parameters(&d, &theta, 1e-8).unwrap();
        assert_eq!(split.m, 1);
        let im = conditional_fisher(&d, &theta).unwrap();
        assert!(im[(0, 0)].abs() < 1e-12 && im[(2, 2)].abs() < 1e-12);
        assert!(im[(1, 1)] > 0.0);
    }

    #[test]
    fn missing_coordinates_accurate_parameter_is_hidden() {
        let cov = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.5 });
        let m = missing_coordinates(cov, &[0], &[1.0], None).unwrap();
        let split = split_parameters(&m, &[0.1, 0.2], 1e-8).unwrap();
        assert_eq!(split.m, 1);
        assert!((split.p[(1, 1)] - 1.0).abs() < 1e-12 && split.p[(0, 0)].abs() < 1e-12);
    }
}
