//! The built-in experiments. Each returns its traces and a summary; nothing
//! here touches the filesystem.

use std::time::Instant;

use emlab_core::constraint::{ConstraintSet, SolveOptions};
use emlab_core::diagnostics::{
    cauchy_sums, classify_run, fit_rate, kl_exponent_estimate, winding_angle, ClassifyThresholds,
    RateFitOptions, Verdict,
};
use emlab_core::em::{em_run, split_program_solve, EmConfig, EmTrace, IncompleteModel};
use emlab_core::families::{GaussianSample, NegEntropy};
use emlab_core::geometry::{
    alternate_run, locate_gap_pairs, AlternatingConfig, DataSide, GapSearchOptions,
};
use emlab_core::models::{
    duplicated_statistic, gaussian_missing, gaussian_missing_sample_variance, kl_arc,
    missing_coordinates, MexicanHat,
};
use emlab_core::numerics::vector::{dist, norm};
use emlab_core::numerics::{
    fd_jacobian, minimize_box, newton_solve, solve_linear, FnObjective, Matrix, MinimizeOptions,
    NewtonOptions, Objective, SymMatrix,
};
use emlab_core::proximal::{
    prox_run, IterateTrace, LambdaSchedule, ProxConfig, RegularizerSpec, StartPolicy, Termination,
    TraceRecord,
};
use serde_json::json;

use crate::config::{
    ExperimentConfig, GaussianCurvedConfig, GaussianUnconstrainedConfig, KlArcConfig,
    MexicanHatConfig, MissingDataConfig, ModelSpec, PpmEmConfig, PpmFunction, SpareContrastConfig,
};
use crate::error::{config_err, CliError, Result};
use crate::output::{projection_rows, summarize_classification, RateFitSummary, RunTrace, Summary};

/// Traces and summary of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<RunTrace>,
    pub summary: Summary,
}

impl ExperimentOutput {
    pub fn run(&self, label: &str) -> Option<&RunTrace> {
        self.runs.iter().find(|r| r.label == label)
    }

    pub fn primary(&self) -> &RunTrace {
        self.run(&self.summary.primary_run)
            .expect("primary run is present")
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg {
        ExperimentConfig::GaussianCurved(c) => run_gaussian_curved(c),
        ExperimentConfig::GaussianUnconstrained(c) => run_gaussian_unconstrained(c),
        ExperimentConfig::MissingData(c) => run_missing_data(c),
        ExperimentConfig::KlArc(c) => run_kl_arc(c),
        ExperimentConfig::MexicanHat(c) => run_mexican_hat(c),
        ExperimentConfig::PpmEm(c) => run_ppm_em(c),
        ExperimentConfig::SpareContrast(c) => run_spare_contrast(c),
    }
}

struct SummaryParts<'a> {
    experiment: &'static str,
    primary: &'a RunTrace,
    projection: Option<SymMatrix>,
    kl_exponent: Option<f64>,
    constraint_residual: f64,
    started: Instant,
    details: serde_json::Value,
}

fn summarize(parts: SummaryParts<'_>) -> Summary {
    let trace = &parts.primary.trace;
    let p = parts.projection.as_ref();
    let c = classify_run(trace, p, &ClassifyThresholds::default());
    // Rates are fitted towards the final iterate, so only for runs that
    // settle; partially converging runs are fitted on the converging part.
    let rate_fit = match c.verdict {
        Verdict::Converged => {
            fit_rate(&trace.points(), None, None, &RateFitOptions::default()).ok()
        }
        Verdict::PartialOnly => fit_rate(&trace.points(), p, None, &RateFitOptions::default()).ok(),
        _ => None,
    }
    .map(|f| RateFitSummary::from(&f));
    let last = trace.last().expect("traces hold the starting point");
    Summary {
        experiment: parts.experiment.to_string(),
        verdict: c.verdict.label().to_string(),
        ambiguous: c.ambiguous,
        primary_run: parts.primary.label.clone(),
        termination: trace.termination.label().to_string(),
        iterations: last.k,
        projection: parts.projection.as_ref().map(projection_rows),
        rate_fit,
        kl_exponent: parts.kl_exponent,
        final_point: last.x.clone(),
        constraint_residual: parts.constraint_residual,
        wall_time_ms: parts.started.elapsed().as_secs_f64() * 1e3,
        classification: summarize_classification(&c),
        details: parts.details,
    }
}

fn invariant(experiment: &'static str, message: String) -> CliError {
    CliError::Invariant {
        experiment,
        message,
    }
}

fn gaussian_model(
    spec: &ModelSpec,
    y: f64,
    constraint: Option<ConstraintSet>,
) -> Result<IncompleteModel> {
    let (n, sample_variance) = spec.family()?;
    Ok(if sample_variance {
        gaussian_missing_sample_variance(n, y, constraint)?
    } else {
        gaussian_missing(n, y, constraint)?
    })
}

fn check_start(model: &IncompleteModel, theta0: &[f64]) -> Result<()> {
    if !(model.domain_margin(theta0) > 0.0) {
        return Err(config_err(format!(
            "theta0 = {theta0:?} is outside the natural domain"
        )));
    }
    if !model.constraint().contains(theta0, 1e-8) {
        return Err(config_err(format!(
            "theta0 = {theta0:?} does not lie in the constraint set"
        )));
    }
    Ok(())
}

/// Norm of the gradient of `−log q` restricted to the constraint set.
fn constrained_grad_norm(
    model: &IncompleteModel,
    theta: &[f64],
    param: Option<&[f64]>,
) -> Option<f64> {
    let g = model.neg_log_q_grad(theta);
    let along = |j: &Matrix| -> Option<f64> {
        if j.cols() == 0 {
            return Some(0.0);
        }
        let jtj = j.transpose().matmul(j);
        let coef = solve_linear(&jtj, &j.tr_mul_vec(&g)).ok()?;
        Some(norm(&j.mul_vec(&coef)))
    };
    match model.constraint() {
        ConstraintSet::Whole { .. } => Some(norm(&g)),
        ConstraintSet::Affine(a) => along(a.basis()),
        ConstraintSet::Parametric(s) => along(&s.jacobian(param?).ok()?),
        _ => None,
    }
}

fn em_kl_exponent(model: &IncompleteModel, trace: &EmTrace) -> Option<f64> {
    let recs = &trace.records;
    let f_star = trace.last().neg_log_q;
    let mut f = Vec::new();
    let mut g = Vec::new();
    for r in &recs[..recs.len().saturating_sub(1)] {
        f.push(r.neg_log_q);
        g.push(constrained_grad_norm(model, &r.theta, r.param.as_deref())?);
    }
    kl_exponent_estimate(&f, &g, f_star).ok().map(|k| k.theta)
}

fn em_run_trace(label: &str, model: &IncompleteModel, trace: &EmTrace) -> RunTrace {
    let recs = &trace.records;
    let param_dim = recs
        .iter()
        .find_map(|r| r.param.as_ref().map(Vec::len))
        .unwrap_or(0);
    let mut run = RunTrace::new(label, trace.to_iterate_trace())
        .with_extra(
            "accurate_step",
            recs.iter().map(|r| r.accurate_step).collect(),
        )
        .with_extra("spare_step", recs.iter().map(|r| r.spare_step).collect())
        .with_extra(
            "constraint_residual",
            recs.iter()
                .map(|r| model.constraint().violation(&r.theta))
                .collect(),
        );
    for i in 0..param_dim {
        let col = recs
            .iter()
            .map(|r| r.param.as_ref().map_or(f64::NAN, |u| u[i]))
            .collect();
        run = run.with_extra(format!("u{i}"), col);
    }
    run
}

fn em_details(model: &IncompleteModel, trace: &EmTrace) -> serde_json::Value {
    let last = trace.last();
    json!({
        "model": model.name(),
        "max_increase": trace.max_increase,
        "split_rank": trace.split.as_ref().map(|s| s.m),
        "final_param": last.param,
        "final_neg_log_q": last.neg_log_q,
    })
}

pub fn run_gaussian_curved(c: &GaussianCurvedConfig) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let constraint = c.constraint.build(2)?;
    let model = gaussian_model(&c.model, c.y, Some(constraint))?;
    check_start(&model, &c.theta0)?;
    let trace = em_run(&model, &c.theta0, &c.em.to_em_config())?;
    let run = em_run_trace("em", &model, &trace);
    let summary = summarize(SummaryParts {
        experiment: "gaussian-curved",
        primary: &run,
        projection: trace.split.as_ref().map(|s| s.p.clone()),
        kl_exponent: em_kl_exponent(&model, &trace),
        constraint_residual: model.constraint().violation(&trace.last().theta),
        started,
        details: em_details(&model, &trace),
    });
    Ok(ExperimentOutput {
        runs: vec![run],
        summary,
    })
}

pub fn run_gaussian_unconstrained(c: &GaussianUnconstrainedConfig) -> Result<ExperimentOutput> {
    const NAME: &str = "gaussian-unconstrained";
    let started = Instant::now();
    let model = gaussian_model(&c.model, c.y, None)?;
    check_start(&model, &c.theta0)?;
    let (n, _) = c.model.family()?;
    let fam = GaussianSample::new(n)?;
    let cfg = EmConfig {
        max_iter: c.max_iter,
        step_tol: 0.0,
        ..EmConfig::default()
    };
    let trace = em_run(&model, &c.theta0, &cfg)?;
    let mut means = Vec::new();
    let mut variances = Vec::new();
    let mut identity = Vec::new();
    for r in &trace.records {
        let (mu, var) = fam.mean_variance(&r.theta);
        means.push(mu);
        variances.push(var);
        identity.push((r.theta[0] + 2.0 * c.y * r.theta[1]).abs() / r.theta[1].abs().max(1.0));
    }
    let max_mean_error = means[1..]
        .iter()
        .map(|m| (m - c.y).abs())
        .fold(0.0, f64::max);
    let max_identity = identity[1..].iter().copied().fold(0.0, f64::max);
    if max_mean_error > 1e-10 {
        return Err(invariant(
            NAME,
            format!("EM mean deviates from y by {max_mean_error:e}"),
        ));
    }
    if max_identity > 1e-9 {
        return Err(invariant(
            NAME,
            format!("theta1 = -2 y theta2 violated by {max_identity:e}"),
        ));
    }
    let run = em_run_trace("em", &model, &trace)
        .with_extra("mean", means)
        .with_extra("variance", variances)
        .with_extra("identity_residual", identity);
    let mut details = em_details(&model, &trace);
    details["max_mean_error"] = json!(max_mean_error);
    details["max_identity_residual"] = json!(max_identity);
    let summary = summarize(SummaryParts {
        experiment: NAME,
        primary: &run,
        projection: None,
        kl_exponent: None,
        constraint_residual: 0.0,
        started,
        details,
    });
    Ok(ExperimentOutput {
        runs: vec![run],
        summary,
    })
}

pub fn run_missing_data(c: &MissingDataConfig) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let cov = c.covariance_matrix()?;
    let n = cov.dim();
    let data = c.data_set(n)?;
    let model = missing_coordinates(cov.clone(), data.observed(), data.values(), None)?;
    check_start(&model, &c.theta0)?;
    let trace = em_run(&model, &c.theta0, &c.em.to_em_config())?;
    let split = trace
        .split
        .clone()
        .ok_or_else(|| invariant("missing-data", "no parameter split was computed".into()))?;
    let hidden = data.hidden(n);
    let hidden_diag: Vec<f64> = (0..n)
        .map(|i| if hidden.contains(&i) { 1.0 } else { 0.0 })
        .collect();
    let alignment = split
        .p
        .sub(&SymMatrix::from_diag(&hidden_diag))
        .as_matrix()
        .max_abs();
    let accurate_sums = cauchy_sums(&trace.thetas(), Some(&split.p));
    let last = trace.last();
    let program = split_program_solve(
        &model,
        &split,
        &split.accurate(&last.theta),
        &last.theta,
        &SolveOptions::default(),
    )?;
    // At a likelihood maximum the observed mean block matches the data:
    // Σ_oo θ_o + Σ_oh θ_h = y.
    let obs = data.observed();
    let s = cov.as_matrix();
    let rhs: Vec<f64> = obs
        .iter()
        .zip(data.values())
        .map(|(&i, y)| {
            y - hidden
                .iter()
                .map(|&j| s[(i, j)] * program.theta[j])
                .sum::<f64>()
        })
        .collect();
    let theta_obs = solve_linear(&s.select(obs, obs), &rhs)?;
    let closed_form_gap = obs
        .iter()
        .zip(&theta_obs)
        .map(|(&i, t)| (program.theta[i] - t).abs())
        .fold(0.0, f64::max);
    let run = em_run_trace("em", &model, &trace)
        .with_extra("accurate_cauchy_tail", accurate_sums.clone());
    let mut details = em_details(&model, &trace);
    details["hidden"] = json!(hidden);
    let rows = split.accurate_rows();
    details["accurate_rows"] = json!((0..rows.rows())
        .map(|i| rows.row(i).to_vec())
        .collect::<Vec<_>>());
    details["projection_alignment_error"] = json!(alignment);
    details["accurate_cauchy_total"] = json!(accurate_sums[0]);
    details["accurate_cauchy_last_half"] = json!(accurate_sums[accurate_sums.len() / 2]);
    details["split_program"] = json!({
        "theta": program.theta,
        "value": program.value,
        "hessian_min_eigenvalue": program.hessian_min_eigenvalue,
        "positive_definite": program.positive_definite,
        "observed_block_closed_form": theta_obs,
        "closed_form_gap": closed_form_gap,
    });
    let summary = summarize(SummaryParts {
        experiment: "missing-data",
        primary: &run,
        projection: Some(split.p.clone()),
        kl_exponent: em_kl_exponent(&model, &trace),
        constraint_residual: 0.0,
        started,
        details,
    });
    Ok(ExperimentOutput {
        runs: vec![run],
        summary,
    })
}

pub fn run_kl_arc(c: &KlArcConfig) -> Result<ExperimentOutput> {
    const NAME: &str = "kl-arc";
    let started = Instant::now();
    let arc = kl_arc(&c.p, &c.q)?;
    let gen = NegEntropy::new(c.p.len());
    let data = DataSide::Set(ConstraintSet::Parametric(arc.data.clone()));
    let model_set = ConstraintSet::Parametric(arc.model.clone());
    let cfg = AlternatingConfig {
        max_iter: c.max_iter,
        step_tol: c.step_tol,
        ..AlternatingConfig::default()
    };
    let mut runs = Vec::new();
    let mut per_start = Vec::new();
    for (i, &s0) in c.starts.iter().enumerate() {
        let theta0 = arc.model.theta(&[s0]);
        let t = alternate_run(&gen, &data, &model_set, &theta0, &cfg)?;
        let mut thetas: Vec<Vec<f64>> = t.records.iter().map(|r| r.theta.clone()).collect();
        thetas.push(t.theta.clone());
        let mut records = Vec::with_capacity(thetas.len());
        let mut max_increase = 0.0_f64;
        for (k, th) in thetas.iter().enumerate() {
            // f: D(θ_k, ϑ_k), psi_reg: D(θ_k, ϑ_{k−1}). The final θ has no
            // data-side partner of its own.
            let psi = k
                .checked_sub(1)
                .map_or(0.0, |j| t.records[j].divergence_next);
            let div = t.records.get(k).map_or(psi, |r| r.divergence);
            let step = if k == 0 {
                0.0
            } else {
                dist(th, &thetas[k - 1])
            };
            records.push(TraceRecord {
                k,
                x: th.clone(),
                f: div,
                psi_reg: psi,
                step_norm: step,
                proj_step_norm: step,
                residual: f64::NAN,
                lambda: f64::NAN,
                domain_margin: emlab_core::bregman::LegendreGenerator::domain_margin(&gen, th),
            });
        }
        for r in &t.records {
            let tol = 1e-12 * r.divergence.abs().max(1.0);
            max_increase = max_increase.max(r.divergence_next - r.divergence - tol);
        }
        for w in t.records.windows(2) {
            let tol = 1e-12 * w[0].divergence_next.abs().max(1.0);
            max_increase = max_increase.max(w[1].divergence - w[0].divergence_next - tol);
        }
        if max_increase > 0.0 {
            return Err(invariant(
                NAME,
                format!("divergence increased by {max_increase:e} from start {s0}"),
            ));
        }
        let final_step = t.records.last().map_or(0.0, |r| r.step_norm);
        let converged = final_step <= c.step_tol;
        let termination = if converged {
            Termination::Converged
        } else {
            Termination::MaxIterations
        };
        let (da, db) = (dist(&t.theta, &arc.a), dist(&t.theta, &arc.b));
        let limit = if converged && da < c.attractor_tol {
            "a"
        } else if converged && db < c.attractor_tol {
            "b"
        } else if converged {
            "gap-pair"
        } else {
            "none"
        };
        let param = |r: Option<&Vec<f64>>| r.map_or(f64::NAN, |u| u[0]);
        let mut s_col: Vec<f64> = t
            .records
            .iter()
            .map(|r| param(r.theta_param.as_ref()))
            .collect();
        s_col.push(arc.model.locate(&t.theta).map_or(f64::NAN, |u| u[0]));
        let mut t_col: Vec<f64> = t
            .records
            .iter()
            .map(|r| param(r.vartheta_param.as_ref()))
            .collect();
        t_col.push(f64::NAN);
        let mut vt: Vec<Vec<f64>> = t.records.iter().map(|r| r.vartheta.clone()).collect();
        vt.push(vec![f64::NAN; c.p.len()]);
        let mut run = RunTrace::new(
            format!("start{i}"),
            IterateTrace {
                records,
                termination,
                projection: None,
            },
        )
        .with_extra("s", s_col)
        .with_extra("t", t_col);
        for j in 0..c.p.len() {
            run = run.with_extra(format!("vartheta{j}"), vt.iter().map(|v| v[j]).collect());
        }
        per_start.push(json!({
            "start": s0,
            "run": run.label,
            "limit": limit,
            "alternating_verdict": t.verdict.label(),
            "iterations": t.records.len(),
            "final_step": final_step,
            "distance_to_a": da,
            "distance_to_b": db,
            "final_theta": t.theta,
            "final_vartheta": t.vartheta,
        }));
        runs.push(run);
    }
    let gap_pairs = if dist(&arc.a, &arc.b) == 0.0 {
        Vec::new()
    } else {
        locate_gap_pairs(
            &gen,
            &arc.data,
            &arc.model,
            &GapSearchOptions {
                grid: c.gap_grid,
                ..GapSearchOptions::default()
            },
        )?
    };
    let pairs: Vec<_> = gap_pairs
        .iter()
        .map(|g| {
            json!({
                "theta": g.theta, "s": g.theta_param[0],
                "vartheta": g.vartheta, "t": g.vartheta_param[0],
                "divergence": g.divergence, "residual": g.residual,
            })
        })
        .collect();
    let details = json!({ "a": arc.a, "b": arc.b, "starts": per_start, "gap_pairs": pairs });
    let primary = runs
        .first()
        .ok_or_else(|| config_err("kl-arc needs at least one start"))?;
    let summary = summarize(SummaryParts {
        experiment: NAME,
        primary,
        projection: None,
        kl_exponent: None,
        constraint_residual: model_set.violation(&primary.trace.last().expect("non-empty").x),
        started,
        details,
    });
    Ok(ExperimentOutput { runs, summary })
}

/// `½ f²` for a mexican hat `f`.
struct HalfSquare(MexicanHat);

impl Objective for HalfSquare {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.0.value(x).powi(2)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let f = self.0.value(x);
        self.0.gradient(x).iter().map(|g| f * g).collect()
    }
}

/// `‖x + f(x)∇f(x) − x_prev‖`.
pub fn ap_residual(hat: &MexicanHat, x: &[f64], x_prev: &[f64]) -> f64 {
    let f = hat.value(x);
    let g = hat.gradient(x);
    norm(&[x[0] + f * g[0] - x_prev[0], x[1] + f * g[1] - x_prev[1]])
}

/// Forward alternating-projection step: the solution `x` of
/// `x + f(x)∇f(x) = x_prev` that minimizes `½f(x)² + ½‖x − x_prev‖²`
/// locally. Newton from `x_prev`; if that fails or lands on a worse point,
/// the proximal objective is minimized and the result polished by Newton.
/// Returns the point and whether the fallback was needed.
pub fn forward_ap_step(hat: &MexicanHat, x_prev: &[f64], tol: f64) -> Result<(Vec<f64>, bool)> {
    let xp = x_prev.to_vec();
    let h = *hat;
    let residual = move |z: &[f64]| -> Vec<f64> {
        let f = h.value(z);
        let g = h.gradient(z);
        vec![z[0] + f * g[0] - xp[0], z[1] + f * g[1] - xp[1]]
    };
    let jac = |z: &[f64]| -> Matrix {
        fd_jacobian(&residual, z, 1e-7).unwrap_or_else(|_| Matrix::identity(2))
    };
    let prox_value = |z: &[f64]| 0.5 * hat.value(z).powi(2) + 0.5 * dist(z, x_prev).powi(2);
    let opts = NewtonOptions { tol, max_iter: 100 };
    let base = prox_value(x_prev);
    if let Ok(r) = newton_solve(&residual, &jac, x_prev, opts) {
        if prox_value(&r.x) <= base {
            return Ok((r.x, false));
        }
    }
    let xp2 = x_prev.to_vec();
    let obj = FnObjective::new(prox_value, move |z: &[f64]| {
        let f = h.value(z);
        let g = h.gradient(z);
        vec![f * g[0] + z[0] - xp2[0], f * g[1] + z[1] - xp2[1]]
    });
    let m = minimize_box(&obj, x_prev, None, MinimizeOptions::default())?;
    let r = newton_solve(&residual, &jac, &m.x, opts)?;
    Ok((r.x, true))
}

pub fn run_mexican_hat(c: &MexicanHatConfig) -> Result<ExperimentOutput> {
    const NAME: &str = "mexican-hat";
    let started = Instant::now();
    let hat = MexicanHat::new(c.shape.to_shape()?);
    let mut x = hat.valley_point(c.r0).to_vec();
    let record = |k: usize, x: &[f64], prev: &[f64], residual: f64| TraceRecord {
        k,
        x: x.to_vec(),
        f: hat.value(x),
        psi_reg: 0.5 * dist(x, prev).powi(2),
        step_norm: dist(x, prev),
        proj_step_norm: dist(x, prev),
        residual,
        lambda: if k == 0 { f64::NAN } else { 1.0 },
        domain_margin: f64::INFINITY,
    };
    let mut records = vec![record(0, &x, &x, 0.0)];
    let mut winding = vec![0.0];
    let mut fallbacks = 0usize;
    let mut strictly_decreasing = true;
    let mut first_violation: Option<usize> = None;
    let mut termination = Termination::MaxIterations;
    for k in 1..=c.steps {
        let (next, fb) = forward_ap_step(&hat, &x, c.newton_tol).map_err(|e| match e {
            CliError::Core(e) => CliError::Invariant {
                experiment: NAME,
                message: format!("AP step {k} failed: {e}"),
            },
            e => e,
        })?;
        fallbacks += fb as usize;
        let rec = record(k, &next, &x, ap_residual(&hat, &next, &x));
        let prev_f = records.last().expect("non-empty").f;
        let stationary = rec.step_norm == 0.0;
        if !stationary && !(rec.f < prev_f) && first_violation.is_none() {
            strictly_decreasing = false;
            first_violation = Some(k);
        }
        winding.push(
            winding.last().expect("non-empty")
                + winding_angle(&[[x[0], x[1]], [next[0], next[1]]], [0.0, 0.0]),
        );
        records.push(rec);
        x = next;
        if stationary {
            termination = Termination::Converged;
            break;
        }
    }
    let trace = IterateTrace {
        records,
        termination,
        projection: None,
    };
    let sums = cauchy_sums(&trace.points(), None);
    let radius: Vec<f64> = trace.records.iter().map(|r| norm(&r.x)).collect();
    let max_residual = trace.records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let total = sums[0];
    let last_half = sums[sums.len() / 2];
    let details = json!({
        "shape": c.shape,
        "start": trace.records[0].x,
        "final_radius": radius.last(),
        "winding": winding.last(),
        "cauchy_total": total,
        "cauchy_last_half": last_half,
        "last_half_fraction": if total > 0.0 { last_half / total } else { 0.0 },
        "strictly_decreasing": strictly_decreasing,
        "first_non_decrease": first_violation,
        "max_ap_residual": max_residual,
        "newton_fallbacks": fallbacks,
    });
    let run = RunTrace::new("ap", trace)
        .with_extra("radius", radius)
        .with_extra("winding", winding)
        .with_extra("cauchy_tail", sums);
    let summary = summarize(SummaryParts {
        experiment: NAME,
        primary: &run,
        projection: None,
        kl_exponent: None,
        constraint_residual: 0.0,
        started,
        details,
    });
    Ok(ExperimentOutput {
        runs: vec![run],
        summary,
    })
}

pub fn run_ppm_em(c: &PpmEmConfig) -> Result<ExperimentOutput> {
    let started = Instant::now();
    // `½f²` and `f∇f` for the chosen `f`.
    let (obj, hat): (Box<dyn Objective>, Option<MexicanHat>) = match &c.function {
        PpmFunction::Norm => (
            Box::new(FnObjective::new(
                |x: &[f64]| 0.5 * norm(x).powi(2),
                |x: &[f64]| x.to_vec(),
            )),
            None,
        ),
        PpmFunction::Zero => (
            Box::new(FnObjective::new(
                |_: &[f64]| 0.0,
                |x: &[f64]| vec![0.0; x.len()],
            )),
            None,
        ),
        PpmFunction::MexicanHat { shape } => {
            let h = MexicanHat::new(shape.to_shape()?);
            (Box::new(HalfSquare(h)), Some(h))
        }
    };
    let cfg = ProxConfig {
        lambda: LambdaSchedule::Constant(c.lambda),
        value_cap: c.lambda.max(ProxConfig::default().value_cap),
        floor: c.lambda.min(ProxConfig::default().floor),
        max_iter: c.steps,
        step_tol: 0.0,
        start: StartPolicy::Global,
        ..ProxConfig::default()
    };
    let mut trace = prox_run(
        obj.as_ref(),
        &ConstraintSet::whole(2),
        &RegularizerSpec::quadratic(),
        &cfg,
        &c.x0,
        &|_: &[f64]| f64::INFINITY,
    )?;
    // Stationarity of the step: λ f∇f(x_k) + x_k − x_{k−1} = 0.
    let mut identity = vec![0.0];
    let mut closed_form = vec![0.0];
    for w in trace.records.windows(2) {
        let (prev, cur) = (&w[0].x, &w[1].x);
        let g = obj.gradient(cur);
        identity.push(norm(
            &(0..2)
                .map(|i| c.lambda * g[i] + cur[i] - prev[i])
                .collect::<Vec<_>>(),
        ));
        closed_form.push(match c.function {
            PpmFunction::Norm => dist(
                cur,
                &prev
                    .iter()
                    .map(|v| v / (1.0 + c.lambda))
                    .collect::<Vec<_>>(),
            ),
            PpmFunction::Zero => dist(cur, prev),
            PpmFunction::MexicanHat { .. } => f64::NAN,
        });
    }
    for (r, e) in trace.records.iter_mut().zip(&identity) {
        r.residual = *e;
    }
    let max_identity = identity.iter().copied().fold(0.0, f64::max);
    let max_closed = closed_form
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(0.0, f64::max);
    let radius: Vec<f64> = trace.records.iter().map(|r| norm(&r.x)).collect();
    let winding = hat.map(|_| {
        let pts: Vec<[f64; 2]> = trace.records.iter().map(|r| [r.x[0], r.x[1]]).collect();
        winding_angle(&pts, [0.0, 0.0])
    });
    let details = json!({
        "function": c.function,
        "lambda": c.lambda,
        "max_stationarity_residual": max_identity,
        "max_closed_form_error": if matches!(c.function, PpmFunction::MexicanHat { .. }) { None } else { Some(max_closed) },
        "winding": winding,
        "final_radius": radius.last(),
    });
    let run = RunTrace::new("prox", trace)
        .with_extra("stationarity_residual", identity)
        .with_extra("closed_form_error", closed_form)
        .with_extra("radius", radius);
    let summary = summarize(SummaryParts {
        experiment: "ppm-em",
        primary: &run,
        projection: None,
        kl_exponent: None,
        constraint_residual: 0.0,
        started,
        details,
    });
    Ok(ExperimentOutput {
        runs: vec![run],
        summary,
    })
}

pub fn run_spare_contrast(c: &SpareContrastConfig) -> Result<ExperimentOutput> {
    const NAME: &str = "spare-contrast";
    let started = Instant::now();
    let model = duplicated_statistic(c.y, (c.d_range[0], c.d_range[1]))?;
    let theta0 = match model.constraint() {
        ConstraintSet::Parametric(s) => s.theta(&[c.u0, c.d0]),
        _ => unreachable!("the duplicated model lives on a parametric surface"),
    };
    check_start(&model, &theta0)?;
    let base = EmConfig {
        max_iter: c.iterations,
        step_tol: 0.0,
        start: c.plain_starts(),
        ..EmConfig::default()
    };
    let plain = em_run(&model, &theta0, &base)?;
    let regularized = em_run(
        &model,
        &theta0,
        &EmConfig {
            regularization: Some(c.lambda),
            ..base.clone()
        },
    )?;
    let mut runs = Vec::new();
    let mut tails = Vec::new();
    for (label, t) in [("plain", &plain), ("regularized", &regularized)] {
        let split = t
            .split
            .as_ref()
            .ok_or_else(|| invariant(NAME, "no parameter split was computed".into()))?;
        let sums = cauchy_sums(&t.thetas(), Some(&split.complement()));
        tails.push(sums[sums.len() / 2]);
        runs.push(em_run_trace(label, &model, t).with_extra("spare_cauchy_tail", sums));
    }
    let plain_class = classify_run(
        &runs[0].trace,
        plain.split.as_ref().map(|s| &s.p),
        &ClassifyThresholds::default(),
    );
    let details = json!({
        "model": model.name(),
        "split_rank": regularized.split.as_ref().map(|s| s.m),
        "spare_tail_plain": tails[0],
        "spare_tail_regularized": tails[1],
        "plain_verdict": plain_class.verdict.label(),
        "max_increase_plain": plain.max_increase,
        "max_increase_regularized": regularized.max_increase,
    });
    let summary = summarize(SummaryParts {
        experiment: NAME,
        primary: &runs[1],
        projection: regularized.split.as_ref().map(|s| s.p.clone()),
        kl_exponent: em_kl_exponent(&model, &regularized),
        constraint_residual: model.constraint().violation(&regularized.last().theta),
        started,
        details,
    });
    Ok(ExperimentOutput { runs, summary })
}
