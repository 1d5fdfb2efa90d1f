//! JSON experiment configurations.
//!
//! A config is a single JSON object tagged by `"experiment"`. Every field
//! has a default, unknown keys are rejected and numeric fields must be
//! finite.

use emlab_core::constraint::{AffineSet, ConstraintSet, Start};
use emlab_core::em::{EmConfig, SplitPolicy};
use emlab_core::families::GaussianSample;
use emlab_core::geometry::DataSetSpec;
use emlab_core::models::HatShape;
use emlab_core::numerics::{Matrix, SymMatrix};
use emlab_core::proximal::StartPolicy;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError, Result};
use crate::expr::MapExpr;

pub const EXPERIMENTS: [&str; 7] = [
    "gaussian-curved",
    "gaussian-unconstrained",
    "missing-data",
    "kl-arc",
    "mexican-hat",
    "ppm-em",
    "spare-contrast",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    GaussianCurved(GaussianCurvedConfig),
    GaussianUnconstrained(GaussianUnconstrainedConfig),
    MissingData(MissingDataConfig),
    KlArc(KlArcConfig),
    MexicanHat(MexicanHatConfig),
    PpmEm(PpmEmConfig),
    SpareContrast(SpareContrastConfig),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::GaussianCurved(_) => "gaussian-curved",
            ExperimentConfig::GaussianUnconstrained(_) => "gaussian-unconstrained",
            ExperimentConfig::MissingData(_) => "missing-data",
            ExperimentConfig::KlArc(_) => "kl-arc",
            ExperimentConfig::MexicanHat(_) => "mexican-hat",
            ExperimentConfig::PpmEm(_) => "ppm-em",
            ExperimentConfig::SpareContrast(_) => "spare-contrast",
        }
    }

    pub fn default_for(experiment: &str) -> Result<Self> {
        Ok(match experiment {
            "gaussian-curved" => ExperimentConfig::GaussianCurved(Default::default()),
            "gaussian-unconstrained" => ExperimentConfig::GaussianUnconstrained(Default::default()),
            "missing-data" => ExperimentConfig::MissingData(Default::default()),
            "kl-arc" => ExperimentConfig::KlArc(Default::default()),
            "mexican-hat" => ExperimentConfig::MexicanHat(Default::default()),
            "ppm-em" => ExperimentConfig::PpmEm(Default::default()),
            "spare-contrast" => ExperimentConfig::SpareContrast(Default::default()),
            other => return Err(CliError::UnknownExperiment(other.to_string())),
        })
    }

    /// Parses a config for `experiment`. A missing `"experiment"` key is
    /// filled in; a different one is an error.
    pub fn from_json(experiment: &str, text: &str) -> Result<Self> {
        if !EXPERIMENTS.contains(&experiment) {
            return Err(CliError::UnknownExperiment(experiment.to_string()));
        }
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| config_err("the config must be a JSON object"))?;
        match obj.get("experiment") {
            None => {
                obj.insert("experiment".into(), experiment.into());
            }
            Some(serde_json::Value::String(s)) if s == experiment => {}
            Some(other) => {
                return Err(config_err(format!(
                    "config is for experiment {other}, but `{experiment}` was requested"
                )))
            }
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        // Everything numeric lives in the serialized form; scan it once.
        let value = serde_json::to_value(self)?;
        check_finite(&value, "")?;
        match self {
            ExperimentConfig::GaussianCurved(c) => {
                c.model.family()?;
                c.em.validate()?;
                check_len("theta0", &c.theta0, 2)
            }
            ExperimentConfig::GaussianUnconstrained(c) => {
                c.model.family()?;
                check_len("theta0", &c.theta0, 2)?;
                if c.max_iter == 0 {
                    return Err(config_err("max_iter must be positive"));
                }
                Ok(())
            }
            ExperimentConfig::MissingData(c) => {
                c.em.validate()?;
                let n = c.covariance.len();
                if n == 0 || c.covariance.iter().any(|r| r.len() != n) {
                    return Err(config_err("covariance must be a non-empty square matrix"));
                }
                check_len("theta0", &c.theta0, n)?;
                c.data_set(n).map(|_| ())
            }
            ExperimentConfig::KlArc(c) => {
                check_len("q", &c.q, c.p.len())?;
                if c.p.iter().chain(&c.q).any(|v| *v >= 0.0) {
                    return Err(config_err("p and q must have negative coordinates"));
                }
                if c.starts.iter().any(|s| !(0.0..=1.0).contains(s)) {
                    return Err(config_err("starts must lie in [0, 1]"));
                }
                Ok(())
            }
            ExperimentConfig::MexicanHat(c) => {
                if !(c.r0 >= 0.0 && c.r0 < 1.0) {
                    return Err(config_err("r0 must lie in [0, 1)"));
                }
                c.shape.to_shape().map(|_| ())
            }
            ExperimentConfig::PpmEm(c) => {
                check_len("x0", &c.x0, 2)?;
                if !(c.lambda > 0.0) {
                    return Err(config_err("lambda must be positive"));
                }
                if let PpmFunction::MexicanHat { shape } = &c.function {
                    shape.to_shape()?;
                }
                Ok(())
            }
            ExperimentConfig::SpareContrast(c) => {
                if !(c.lambda > 0.0) {
                    return Err(config_err("lambda must be positive"));
                }
                if !(c.d_range[0] < c.d_range[1]) {
                    return Err(config_err("d_range must be increasing"));
                }
                if c.iterations < 4 {
                    return Err(config_err("iterations must be at least 4"));
                }
                Ok(())
            }
        }
    }
}

fn check_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(config_err(format!(
            "{name} must have {n} components, got {}",
            v.len()
        )));
    }
    Ok(())
}

fn check_finite(v: &serde_json::Value, path: &str) -> Result<()> {
    match v {
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(x) if x.is_finite() => Ok(()),
            _ => Err(config_err(format!("{path} must be finite"))),
        },
        // Non-finite floats serialize as null.
        serde_json::Value::Null => Err(config_err(format!("{path} must be a finite number"))),
        serde_json::Value::Array(a) => a
            .iter()
            .enumerate()
            .try_for_each(|(i, x)| check_finite(x, &format!("{path}[{i}]"))),
        serde_json::Value::Object(o) => o
            .iter()
            .try_for_each(|(k, x)| check_finite(x, &format!("{path}.{k}"))),
        _ => Ok(()),
    }
}

/// Built-in Gaussian sample models, by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `gaussian<N>-missing` or `gaussian<N>-missing-sample-variance`.
    pub name: String,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            name: "gaussian2-missing".into(),
        }
    }
}

impl ModelSpec {
    /// Sample size and whether the sample-variance statistic is used.
    pub fn family(&self) -> Result<(u32, bool)> {
        let rest = self
            .name
            .strip_prefix("gaussian")
            .ok_or_else(|| config_err(format!("unknown model `{}`", self.name)))?;
        let (n, variance) = if let Some(n) = rest.strip_suffix("-missing-sample-variance") {
            (n, true)
        } else if let Some(n) = rest.strip_suffix("-missing") {
            (n, false)
        } else {
            return Err(config_err(format!("unknown model `{}`", self.name)));
        };
        let n: u32 = n
            .parse()
            .map_err(|_| config_err(format!("unknown model `{}`", self.name)))?;
        GaussianSample::new(n)?;
        Ok((n, variance))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstraintConfig {
    Whole,
    Point {
        point: Vec<f64>,
    },
    /// `{θ : A θ = b}`.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// One-parameter image of `theta`, an expression in `param`.
    Curve {
        theta: String,
        #[serde(default = "default_param")]
        param: String,
        u_range: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<usize>,
    },
    Surface {
        theta: String,
        params: Vec<String>,
        ranges: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<usize>,
    },
}

fn default_param() -> String {
    "u".into()
}

impl ConstraintConfig {
    pub fn mean_equals_std() -> Self {
        ConstraintConfig::Curve {
            theta: "(u, -u^2/4)".into(),
            param: default_param(),
            u_range: [0.05, 20.0],
            grid: None,
        }
    }

    pub fn build(&self, dim: usize) -> Result<ConstraintSet> {
        let ordered = |r: &[f64; 2]| -> Result<(f64, f64)> {
            if r[0] <= r[1] {
                Ok((r[0], r[1]))
            } else {
                Err(config_err(format!(
                    "range [{}, {}] is not ordered",
                    r[0], r[1]
                )))
            }
        };
        match self {
            ConstraintConfig::Whole => Ok(ConstraintSet::whole(dim)),
            ConstraintConfig::Point { point } => {
                check_len("point", point, dim)?;
                Ok(ConstraintSet::point(point))
            }
            ConstraintConfig::Affine { matrix, offset } => {
                if matrix.iter().any(|r| r.len() != dim) {
                    return Err(config_err(format!("affine rows must have {dim} entries")));
                }
                check_len("offset", offset, matrix.len())?;
                Ok(ConstraintSet::Affine(AffineSet::new(
                    Matrix::from_rows(matrix)?,
                    offset.clone(),
                )?))
            }
            ConstraintConfig::Curve {
                theta,
                param,
                u_range,
                grid,
            } => MapExpr::parse(theta, std::slice::from_ref(param))?.into_set(
                dim,
                vec![ordered(u_range)?],
                *grid,
            ),
            ConstraintConfig::Surface {
                theta,
                params,
                ranges,
                grid,
            } => {
                let bounds = ranges.iter().map(ordered).collect::<Result<Vec<_>>>()?;
                MapExpr::parse(theta, params)?.into_set(dim, bounds, *grid)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartChoice {
    /// Global grid scan at every M step.
    #[default]
    Global,
    /// Local refinement from the previous iterate.
    Previous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitChoice {
    #[default]
    AtStart,
    EveryIterate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmSettings {
    pub max_iter: usize,
    pub step_tol: f64,
    pub boundary_threshold: f64,
    pub start: StartChoice,
    pub split: SplitChoice,
    pub rank_tol: f64,
    pub descent_tol: f64,
    /// `λ` of the spare-coordinate penalty; absent for plain EM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
}

impl Default for EmSettings {
    fn default() -> Self {
        let d = EmConfig::default();
        EmSettings {
            max_iter: 200,
            step_tol: d.step_tol,
            boundary_threshold: d.boundary_threshold,
            start: StartChoice::Global,
            split: SplitChoice::AtStart,
            rank_tol: d.rank_tol,
            descent_tol: d.descent_tol,
            regularization: None,
        }
    }
}

impl EmSettings {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(config_err("em.max_iter must be positive"));
        }
        if self.step_tol < 0.0 || self.rank_tol <= 0.0 || self.descent_tol < 0.0 {
            return Err(config_err("em tolerances must be non-negative"));
        }
        if self.regularization.is_some_and(|l| l <= 0.0) {
            return Err(config_err("em.regularization must be positive"));
        }
        Ok(())
    }

    pub fn to_em_config(&self) -> EmConfig {
        EmConfig {
            max_iter: self.max_iter,
            step_tol: self.step_tol,
            boundary_threshold: self.boundary_threshold,
            start: match self.start {
                StartChoice::Global => StartPolicy::Global,
                StartChoice::Previous => StartPolicy::Previous,
            },
            split: match self.split {
                SplitChoice::AtStart => SplitPolicy::AtStart,
                SplitChoice::EveryIterate => SplitPolicy::EveryIterate,
            },
            rank_tol: self.rank_tol,
            descent_tol: self.descent_tol,
            regularization: self.regularization,
            ..EmConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianCurvedConfig {
    pub model: ModelSpec,
    pub y: f64,
    pub theta0: Vec<f64>,
    pub constraint: ConstraintConfig,
    pub em: EmSettings,
}

impl Default for GaussianCurvedConfig {
    fn default() -> Self {
        GaussianCurvedConfig {
            model: ModelSpec::default(),
            y: 1.0,
            theta0: vec![2.0, -1.0],
            constraint: ConstraintConfig::mean_equals_std(),
            em: EmSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianUnconstrainedConfig {
    pub model: ModelSpec,
    pub y: f64,
    pub theta0: Vec<f64>,
    pub max_iter: usize,
}

impl Default for GaussianUnconstrainedConfig {
    fn default() -> Self {
        GaussianUnconstrainedConfig {
            model: ModelSpec::default(),
            y: 1.0,
            theta0: vec![0.0, -1.0],
            max_iter: 30,
        }
    }
}

/// One observed expectation coordinate, e.g.
/// `{"observed": "eta[0]", "value": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub observed: String,
    pub value: f64,
}

impl Observation {
    pub fn index(&self) -> Result<usize> {
        self.observed
            .trim()
            .strip_prefix("eta[")
            .and_then(|s| s.strip_suffix(']'))
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| {
                config_err(format!(
                    "observed coordinate `{}` is not of the form eta[i]",
                    self.observed
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissingDataConfig {
    pub covariance: Vec<Vec<f64>>,
    pub data: Vec<Observation>,
    pub theta0: Vec<f64>,
    pub em: EmSettings,
}

impl Default for MissingDataConfig {
    fn default() -> Self {
        MissingDataConfig {
            covariance: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            data: vec![Observation {
                observed: "eta[0]".into(),
                value: 1.0,
            }],
            theta0: vec![0.0, 0.0],
            em: EmSettings {
                max_iter: 500,
                ..EmSettings::default()
            },
        }
    }
}

impl MissingDataConfig {
    pub fn covariance_matrix(&self) -> Result<SymMatrix> {
        Ok(SymMatrix::symmetrize(&Matrix::from_rows(
            &self.covariance,
        )?)?)
    }

    pub fn data_set(&self, n: usize) -> Result<DataSetSpec> {
        let mut observed = Vec::new();
        let mut values = Vec::new();
        for o in &self.data {
            let i = o.index()?;
            if i >= n {
                return Err(config_err(format!(
                    "{} is out of range for dimension {n}",
                    o.observed
                )));
            }
            observed.push(i);
            values.push(o.value);
        }
        Ok(DataSetSpec::new(observed, values)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlArcConfig {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Starting parameters on the segment from `exp(p)` to `exp(q)`.
    pub starts: Vec<f64>,
    pub max_iter: usize,
    pub step_tol: f64,
    /// Distance to `exp(p)` or `exp(q)` that identifies the limit.
    pub attractor_tol: f64,
    pub gap_grid: usize,
}

impl Default for KlArcConfig {
    fn default() -> Self {
        KlArcConfig {
            p: vec![-1.0, -2.0],
            q: vec![-2.0, -1.0],
            starts: vec![0.1, 0.9],
            max_iter: 10_000,
            step_tol: 1e-10,
            attractor_tol: 1e-6,
            gap_grid: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HatConfig {
    Spiral {
        amplitude: f64,
        exponent: f64,
        twist: f64,
        ripple: f64,
    },
    Bump,
}

impl Default for HatConfig {
    fn default() -> Self {
        match HatShape::default_spiral() {
            HatShape::Spiral {
                amplitude,
                exponent,
                twist,
                ripple,
            } => HatConfig::Spiral {
                amplitude,
                exponent,
                twist,
                ripple,
            },
            HatShape::Bump => HatConfig::Bump,
        }
    }
}

impl HatConfig {
    pub fn to_shape(&self) -> Result<HatShape> {
        match *self {
            HatConfig::Spiral {
                amplitude,
                exponent,
                twist,
                ripple,
            } => {
                if !(amplitude > 0.0 && exponent > 0.5 && (0.0..1.0).contains(&ripple)) {
                    return Err(config_err(
                        "hat needs amplitude > 0, exponent > 1/2 and ripple in [0, 1)",
                    ));
                }
                Ok(HatShape::Spiral {
                    amplitude,
                    exponent,
                    twist,
                    ripple,
                })
            }
            HatConfig::Bump => Ok(HatShape::Bump),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MexicanHatConfig {
    pub shape: HatConfig,
    /// Starting radius; the start lies on the valley floor.
    pub r0: f64,
    pub steps: usize,
    pub newton_tol: f64,
}

impl Default for MexicanHatConfig {
    fn default() -> Self {
        MexicanHatConfig {
            shape: HatConfig::default(),
            r0: 0.5,
            steps: 10_000,
            newton_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PpmFunction {
    /// `f(x) = ‖x‖`, so `f²/2 = ‖x‖²/2` is smooth.
    Norm,
    Zero,
    MexicanHat {
        #[serde(default)]
        shape: HatConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpmEmConfig {
    pub function: PpmFunction,
    pub x0: Vec<f64>,
    pub steps: usize,
    pub lambda: f64,
}

impl Default for PpmEmConfig {
    fn default() -> Self {
        PpmEmConfig {
            function: PpmFunction::Norm,
            x0: vec![0.6, -0.8],
            steps: 50,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpareContrastConfig {
    pub y: f64,
    /// Starting `(u, d)` on the duplicated surface.
    pub u0: f64,
    pub d0: f64,
    /// Plain EM alternates its M-step starts between `d = ±w`.
    pub w: f64,
    pub d_range: [f64; 2],
    pub lambda: f64,
    pub iterations: usize,
}

impl Default for SpareContrastConfig {
    fn default() -> Self {
        SpareContrastConfig {
            y: 1.0,
            u0: 2.0,
            d0: 0.5,
            w: 0.5,
            d_range: [-5.0, 5.0],
            lambda: 1.0,
            iterations: 200,
        }
    }
}

impl SpareContrastConfig {
    pub fn plain_starts(&self) -> StartPolicy {
        StartPolicy::Cycle(vec![
            Start::Param(vec![self.u0, self.w]),
            Start::Param(vec![self.u0, -self.w]),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for name in EXPERIMENTS {
            let cfg = ExperimentConfig::default_for(name).unwrap();
            assert_eq!(cfg.name(), name);
            let text = cfg.to_json_pretty();
            assert_eq!(ExperimentConfig::from_json(name, &text).unwrap(), cfg);
        }
    }

    #[test]
    fn missing_tag_is_filled_and_defaults_apply() {
        let cfg = ExperimentConfig::from_json("gaussian-curved", r#"{"y": 0.5}"#).unwrap();
        match cfg {
            ExperimentConfig::GaussianCurved(c) => {
                assert_eq!(c.y, 0.5);
                assert_eq!(c.theta0, vec![2.0, -1.0]);
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json("gaussian-curved", r#"{"yy": 0.5}"#).is_err());
        assert!(
            ExperimentConfig::from_json("gaussian-curved", r#"{"em": {"max_iters": 3}}"#).is_err()
        );
        let bad_constraint = r#"{"constraint": {"kind": "curve", "theta": "(u, -u^2/4)", "u_range": [0.1, 2], "bogus": 1}}"#;
        assert!(ExperimentConfig::from_json("gaussian-curved", bad_constraint).is_err());
    }

    #[test]
    fn mismatched_experiment_is_rejected() {
        assert!(ExperimentConfig::from_json("kl-arc", r#"{"experiment": "mexican-hat"}"#).is_err());
        assert!(ExperimentConfig::from_json("nope", "{}").is_err());
    }

    #[test]
    fn non_finite_numbers_are_rejected() {
        assert!(ExperimentConfig::from_json("gaussian-curved", r#"{"y": 1e999}"#).is_err());
        assert!(ExperimentConfig::from_json("gaussian-curved", r#"{"y": null}"#).is_err());
    }

    #[test]
    fn semantic_checks() {
        assert!(ExperimentConfig::from_json("kl-arc", r#"{"p": [1.0, -2.0]}"#).is_err());
        assert!(ExperimentConfig::from_json("mexican-hat", r#"{"r0": 1.5}"#).is_err());
        assert!(ExperimentConfig::from_json("gaussian-curved", r#"{"theta0": [1.0]}"#).is_err());
        assert!(ExperimentConfig::from_json(
            "gaussian-curved",
            r#"{"model": {"name": "poisson"}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            "missing-data",
            r#"{"data": [{"observed": "eta[5]", "value": 1}]}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            "missing-data",
            r#"{"data": [{"observed": "mu", "value": 1}]}"#
        )
        .is_err());
    }

    #[test]
    fn model_names() {
        let m = |s: &str| ModelSpec { name: s.into() }.family();
        assert_eq!(m("gaussian2-missing").unwrap(), (2, false));
        assert_eq!(m("gaussian5-missing-sample-variance").unwrap(), (5, true));
        assert!(m("gaussian0-missing").is_err());
        assert!(m("gaussianx-missing").is_err());
    }

    #[test]
    fn constraint_kinds_build() {
        let c: ConstraintConfig =
            serde_json::from_str(r#"{"kind": "affine", "matrix": [[1, -2]], "offset": [0]}"#)
                .unwrap();
        assert!(c.build(2).unwrap().contains(&[2.0, 1.0], 1e-12));
        let c: ConstraintConfig = serde_json::from_str(r#"{"kind": "whole"}"#).unwrap();
        assert!(c.build(3).unwrap().is_whole());
        let c: ConstraintConfig = serde_json::from_str(
            r#"{"kind": "surface", "theta": "((u + d)/2, -u^2/4, (u - d)/2)", "params": ["u", "d"], "ranges": [[0.05, 20], [-5, 5]]}"#,
        )
        .unwrap();
        assert!(c.build(3).unwrap().contains(&[1.5, -1.0, 0.5], 1e-8));
        assert!(ConstraintConfig::mean_equals_std().build(3).is_err());
    }
}
