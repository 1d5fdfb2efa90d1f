//! Post-hoc analysis of iterate traces: Cauchy sums, rate fits, KŁ exponent
//! estimates and run classification.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::em::boundary_monitor;
use crate::em::BoundaryStatus;
use crate::numerics::vector::{dist, norm, sub};
use crate::numerics::{sym_eig, SymMatrix};
use crate::proximal::IterateTrace;
use crate::{Error, Result};

fn projected(p: Option<&SymMatrix>, v: &[f64]) -> Vec<f64> {
    match p {
        Some(p) => p.mul_vec(v),
        None => v.to_vec(),
    }
}

/// Projected step norms `‖P(x_{k+1} − x_k)‖`.
pub fn projected_steps(points: &[Vec<f64>], p: Option<&SymMatrix>) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| norm(&projected(p, &sub(&w[1], &w[0]))))
        .collect()
}

/// Tail sums `S_N = Σ_{k≥N} ‖P(x_{k+1} − x_k)‖`, one per point; the last is 0.
pub fn cauchy_sums(points: &[Vec<f64>], p: Option<&SymMatrix>) -> Vec<f64> {
    let steps = projected_steps(points, p);
    let mut sums = alloc::vec![0.0; points.len()];
    for n in (0..steps.len()).rev() {
        sums[n] = sums[n + 1] + steps[n];
    }
    sums
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateKind {
    /// `‖e_k‖ ≈ C k^{−ρ}`.
    Sublinear {
        rho: f64,
    },
    /// `‖e_k‖ ≈ C α^k`.
    Linear {
        alpha: f64,
    },
    None,
}

impl RateKind {
    pub fn label(&self) -> &'static str {
        match self {
            RateKind::Sublinear { .. } => "sublinear",
            RateKind::Linear { .. } => "linear",
            RateKind::None => "none",
        }
    }

    /// `ρ`, `α`, or NaN.
    pub fn param(&self) -> f64 {
        match *self {
            RateKind::Sublinear { rho } => rho,
            RateKind::Linear { alpha } => alpha,
            RateKind::None => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub kind: RateKind,
    /// R² of the reported fit (of the better fit when `kind` is none).
    pub r2: f64,
    /// Half-open index range of the points used.
    pub window: (usize, usize),
    /// Number of points with usable (nonzero) errors in the window.
    pub used: usize,
    /// Set when all errors vanish and the rate is reported by convention.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFitOptions {
    pub min_points: usize,
    pub r2_threshold: f64,
    /// Fraction of trailing points dropped from the window.
    pub drop_tail: f64,
    pub zero_tol: f64,
}

impl Default for RateFitOptions {
    fn default() -> Self {
        RateFitOptions {
            min_points: 20,
            r2_threshold: 0.98,
            drop_tail: 0.1,
            zero_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ a + b x`. `None` for fewer than two points or
/// constant `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Fits a rate to error norms `e_i`, indexed from `k = 1`.
pub fn fit_rate_errors(errors: &[f64], opts: &RateFitOptions) -> Result<RateFit> {
    let n = errors.len();
    let dropped = ((n as f64) * opts.drop_tail).ceil() as usize;
    let end = n.saturating_sub(dropped);
    let window = (0, end);
    if errors[..end].iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("rate-fit errors"));
    }
    if end > 0 && errors[..end].iter().all(|e| *e < opts.zero_tol) {
        return Ok(RateFit {
            kind: RateKind::Linear { alpha: 0.0 },
            r2: 1.0,
            window,
            used: end,
            exact: true,
        });
    }
    let (mut ks, mut logk, mut loge) = (Vec::new(), Vec::new(), Vec::new());
    for (i, e) in errors[..end].iter().enumerate() {
        if *e >= opts.zero_tol {
            let k = (i + 1) as f64;
            ks.push(k);
            logk.push(k.ln());
            loge.push(e.ln());
        }
    }
    if ks.len() < opts.min_points {
        return Err(Error::InsufficientData(alloc::format!(
            "{} usable points, need {}",
            ks.len(),
            opts.min_points
        )));
    }
    let power = fit_line(&logk, &loge)
        .ok_or_else(|| Error::InsufficientData("degenerate abscissa".into()))?;
    let geometric = fit_line(&ks, &loge)
        .ok_or_else(|| Error::InsufficientData("degenerate abscissa".into()))?;
    let sub_ok = power.slope < 0.0;
    let lin_ok = geometric.slope < 0.0;
    let (kind, r2) = if lin_ok && (!sub_ok || geometric.r2 >= power.r2) {
        (
            RateKind::Linear {
                alpha: geometric.slope.exp(),
            },
            geometric.r2,
        )
    } else if sub_ok {
        (RateKind::Sublinear { rho: -power.slope }, power.r2)
    } else {
        (RateKind::None, power.r2.max(geometric.r2))
    };
    let kind = if r2 >= opts.r2_threshold {
        kind
    } else {
        RateKind::None
    };
    Ok(RateFit {
        kind,
        r2,
        window,
        used: ks.len(),
        exact: false,
    })
}

/// Fits `‖P(x_k − x*)‖` for a trace. Without `x_ref` the last iterate is the
/// limit proxy, and errors below a multiple of the final step are treated as
/// zero since they are dominated by the proxy's own error.
pub fn fit_rate(
    points: &[Vec<f64>],
    p: Option<&SymMatrix>,
    x_ref: Option<&[f64]>,
    opts: &RateFitOptions,
) -> Result<RateFit> {
    let Some(last) = points.last() else {
        return Err(Error::InsufficientData("empty trace".into()));
    };
    let (reference, floor) = match x_ref {
        Some(r) => (r.to_vec(), opts.zero_tol),
        None => {
            let final_step = projected_steps(&points[points.len().saturating_sub(2)..], p)
                .first()
                .copied()
                .unwrap_or(0.0);
            (last.clone(), opts.zero_tol.max(1e3 * final_step))
        }
    };
    let errors: Vec<f64> = points
        .iter()
        .map(|x| {
            let e = norm(&projected(p, &sub(x, &reference)));
            if e < floor {
                0.0
            } else {
                e
            }
        })
        .collect();
    fit_rate_errors(&errors, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlExponent {
    /// Estimate clipped to `[1/2, 1)`.
    pub theta: f64,
    /// Unclipped regression slope.
    pub raw: f64,
    pub r2: f64,
    pub used: usize,
}

/// Largest value reported for the KŁ exponent.
pub const KL_EXPONENT_MAX: f64 = 1.0 - 1e-9;

/// Fits `‖∇f‖ ≈ c (f − f*)^θ` in log-log coordinates.
pub fn kl_exponent_estimate(
    f_values: &[f64],
    grad_norms: &[f64],
    f_star: f64,
) -> Result<KlExponent> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (f, g) in f_values.iter().zip(grad_norms) {
        let gap = f - f_star;
        if gap > 0.0 && *g > 0.0 && gap.is_finite() && g.is_finite() {
            x.push(gap.ln());
            y.push(g.ln());
        }
    }
    if x.len() < 10 {
        return Err(Error::InsufficientData(alloc::format!(
            "{} usable points, need 10",
            x.len()
        )));
    }
    let fit = fit_line(&x, &y)
        .ok_or_else(|| Error::InsufficientData("objective gaps are constant".into()))?;
    Ok(KlExponent {
        theta: fit.slope.clamp(0.5, KL_EXPONENT_MAX),
        raw: fit.slope,
        r2: fit.r2,
        used: x.len(),
    })
}

/// Cumulative signed angle swept by a planar path around `center`.
pub fn winding_angle(points: &[[f64; 2]], center: [f64; 2]) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for p in points {
        let a = (p[1] - center[1]).atan2(p[0] - center[0]);
        if let Some(q) = prev {
            let mut d = a - q;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            total += d;
        }
        prev = Some(a);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    PartialOnly,
    Cycling,
    Escaping,
    Boundary,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::PartialOnly => "partial-only",
            Verdict::Cycling => "cycling",
            Verdict::Escaping => "escaping",
            Verdict::Boundary => "boundary",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [
            Verdict::Converged,
            Verdict::PartialOnly,
            Verdict::Cycling,
            Verdict::Escaping,
            Verdict::Boundary,
        ]
        .into_iter()
        .find(|v| v.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyThresholds {
    /// Final step norm at or below which the run has converged.
    pub step_tol: f64,
    /// Domain margin at or below which the run is at the boundary.
    pub boundary: f64,
    /// Growth of `‖x‖` over `max(1, ‖x_0‖)` that counts as escaping.
    pub escape_factor: f64,
    /// Closest return, relative to the excursion in between, that counts
    /// as a recurrence.
    pub return_rel: f64,
    /// Winding angle of the principal planar projection that counts as
    /// cycling.
    pub min_winding: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        ClassifyThresholds {
            step_tol: 1e-8,
            boundary: 1e-6,
            escape_factor: 10.0,
            return_rel: 1e-3,
            min_winding: 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    /// Set when no rule fired and the verdict is the cycling fallback.
    pub ambiguous: bool,
    pub final_step: f64,
    pub final_proj_step: f64,
    pub norm_growth: f64,
    /// Smallest relative return to the final iterate, if any.
    pub closest_return: Option<f64>,
    /// Winding of the principal planar projection around the centroid of
    /// the trace's second half.
    pub winding: f64,
}

/// Smallest `‖x_i − x_N‖ / max_{i<j<N} ‖x_j − x_N‖` over the second half of
/// the trace, among points from which the path moved away and came back.
fn closest_return(points: &[Vec<f64>]) -> Option<f64> {
    let n = points.len();
    if n < 4 {
        return None;
    }
    let anchor = &points[n - 1];
    let d: Vec<f64> = points.iter().map(|x| dist(x, anchor)).collect();
    let mut excursion = 0.0_f64;
    let mut best: Option<f64> = None;
    for i in (n / 2..n - 2).rev() {
        excursion = excursion.max(d[i + 1]);
        if excursion > 0.0 && d[i] < excursion {
            let rel = d[i] / excursion;
            best = Some(best.map_or(rel, |b: f64| b.min(rel)));
        }
    }
    best
}

/// Coordinates of the trace on the two leading principal axes of its second
/// half, and the centroid's image.
fn principal_plane(points: &[Vec<f64>]) -> (Vec<[f64; 2]>, [f64; 2]) {
    let dim = points[0].len();
    let tail = &points[points.len() / 2..];
    let mut mean = alloc::vec![0.0; dim];
    for x in tail {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / tail.len() as f64;
        }
    }
    let axes: Vec<Vec<f64>> = if dim == 2 {
        alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]]
    } else {
        let cov = SymMatrix::from_fn(dim, |i, j| {
            tail.iter()
                .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                .sum::<f64>()
        });
        match sym_eig(&cov) {
            Ok(e) if dim >= 2 => alloc::vec![e.vector(0), e.vector(1)],
            _ => {
                let mut a = alloc::vec![0.0; dim];
                a[0] = 1.0;
                alloc::vec![a.clone(), alloc::vec![0.0; dim]]
            }
        }
    };
    let proj = |x: &[f64]| -> [f64; 2] {
        [
            axes[0].iter().zip(x).map(|(a, v)| a * v).sum(),
            axes[1].iter().zip(x).map(|(a, v)| a * v).sum(),
        ]
    };
    (points.iter().map(|x| proj(x)).collect(), proj(&mean))
}

/// Rule-based verdict on a finished trace, checked in the order boundary,
/// converged, partial-only, escaping, cycling. Depends only on the iterates
/// and domain margins.
pub fn classify_run(
    trace: &IterateTrace,
    p: Option<&SymMatrix>,
    th: &ClassifyThresholds,
) -> Classification {
    let points = trace.points();
    let n = points.len();
    let steps = projected_steps(&points, None);
    let proj_steps = projected_steps(&points, p);
    let final_step = steps.last().copied().unwrap_or(0.0);
    let final_proj_step = proj_steps.last().copied().unwrap_or(0.0);
    let norm0 = points.first().map_or(0.0, |x| norm(x));
    let norms: Vec<f64> = points.iter().map(|x| norm(x)).collect();
    let norm_growth = norms.last().copied().unwrap_or(0.0) / norm0.max(1.0);
    let closest = closest_return(&points);
    let winding = if n >= 3 && points[0].len() >= 2 {
        let (plane, c) = principal_plane(&points);
        winding_angle(&plane, c).abs()
    } else {
        0.0
    };
    let mut out = Classification {
        verdict: Verdict::Cycling,
        ambiguous: false,
        final_step,
        final_proj_step,
        norm_growth,
        closest_return: closest,
        winding,
    };
    if n == 0 {
        out.verdict = Verdict::Converged;
        return out;
    }
    if boundary_monitor(trace, th.boundary).status == BoundaryStatus::ApproachingBoundary {
        out.verdict = Verdict::Boundary;
    } else if final_step <= th.step_tol {
        out.verdict = Verdict::Converged;
    } else if p.is_some() && final_proj_step <= th.step_tol {
        out.verdict = Verdict::PartialOnly;
    } else if norm_growth >= th.escape_factor && norms[n / 2..].windows(2).all(|w| w[1] >= w[0]) {
        out.verdict = Verdict::Escaping;
    } else if closest.is_some_and(|c| c <= th.return_rel) || winding >= th.min_winding {
        out.verdict = Verdict::Cycling;
    } else {
        out.verdict = Verdict::Cycling;
        out.ambiguous = true;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proximal::{Termination, TraceRecord};
    use alloc::vec;

    fn trace(points: Vec<Vec<f64>>) -> IterateTrace {
        IterateTrace {
            records: points
                .into_iter()
                .enumerate()
                .map(|(k, x)| TraceRecord {
                    k,
                    x,
                    f: 0.0,
                    psi_reg: 0.0,
                    step_norm: 0.0,
                    proj_step_norm: 0.0,
                    residual: 0.0,
                    lambda: 1.0,
                    domain_margin: 1.0,
                })
                .collect(),
            termination: Termination::MaxIterations,
            projection: None,
        }
    }

    #[test]
    fn geometric_cauchy_sum() {
        let pts: Vec<Vec<f64>> = (0..60).map(|k| vec![0.5f64.powi(k), 0.0]).collect();
        let s = cauchy_sums(&pts, None);
        assert!((s[0] - 1.0).abs() < 1e-12);
        // Exact sum of ‖x_{k+1} − x_k‖ is 2^0 − 2^{-59}.
        assert!((s[0] - (1.0 - 0.5f64.powi(59))).abs() < 1e-15);
        for w in s.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn constant_trace_sums_vanish() {
        let pts = vec![vec![1.0, 2.0]; 10];
        assert!(cauchy_sums(&pts, None).iter().all(|s| *s == 0.0));
    }

    #[test]
    fn projection_filters_steps() {
        let p = SymMatrix::from_diag(&[1.0, 0.0]);
        let pts = vec![vec![0.0, 0.0], vec![1.0, 5.0], vec![1.0, -5.0]];
        assert_eq!(cauchy_sums(&pts, Some(&p)), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn power_law_recovered() {
        let e: Vec<f64> = (1..=200).map(|k| 1.0 / k as f64).collect();
        let fit = fit_rate_errors(&e, &RateFitOptions::default()).unwrap();
        assert_eq!(fit.kind.label(), "sublinear");
        assert!((fit.kind.param() - 1.0).abs() < 0.05);
    }

    #[test]
    fn geometric_recovered() {
        let e: Vec<f64> = (1..=40).map(|k| 0.5f64.powi(k)).collect();
        let fit = fit_rate_errors(&e, &RateFitOptions::default()).unwrap();
        assert_eq!(fit.kind.label(), "linear");
        assert!((fit.kind.param() - 0.5).abs() < 0.025);
    }

    #[test]
    fn vanishing_errors_are_exact() {
        let fit = fit_rate_errors(&[0.0; 30], &RateFitOptions::default()).unwrap();
        assert!(fit.exact);
        assert_eq!(fit.kind, RateKind::Linear { alpha: 0.0 });
    }

    #[test]
    fn short_window_rejected() {
        let e: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
        assert!(matches!(
            fit_rate_errors(&e, &RateFitOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn kl_exponents() {
        // f = ‖x‖², |∇f| = 2 f^{1/2}; f = ‖x‖⁴, |∇f| = 4 f^{3/4}.
        let r: Vec<f64> = (1..=30).map(|k| 0.9f64.powi(k)).collect();
        let f2: Vec<f64> = r.iter().map(|r| r * r).collect();
        let g2: Vec<f64> = r.iter().map(|r| 2.0 * r).collect();
        let f4: Vec<f64> = r.iter().map(|r| r.powi(4)).collect();
        let g4: Vec<f64> = r.iter().map(|r| 4.0 * r.powi(3)).collect();
        assert!((kl_exponent_estimate(&f2, &g2, 0.0).unwrap().theta - 0.5).abs() < 1e-9);
        assert!((kl_exponent_estimate(&f4, &g4, 0.0).unwrap().theta - 0.75).abs() < 1e-9);
        assert!(matches!(
            kl_exponent_estimate(&[1.0; 20], &[1.0; 20], 1.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn winding_of_circle() {
        let pts: Vec<[f64; 2]> = (0..=100)
            .map(|i| {
                let a = 4.0 * PI * i as f64 / 100.0;
                [a.cos(), a.sin()]
            })
            .collect();
        assert!((winding_angle(&pts, [0.0, 0.0]) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn verdicts() {
        let th = ClassifyThresholds::default();
        let conv = trace((0..50).map(|k| vec![0.5f64.powi(k), 1.0]).collect());
        assert_eq!(classify_run(&conv, None, &th).verdict, Verdict::Converged);

        let esc = trace((0..50).map(|k| vec![k as f64, 0.0]).collect());
        assert_eq!(classify_run(&esc, None, &th).verdict, Verdict::Escaping);

        let two = trace(
            (0..50)
                .map(|k| vec![1.0, if k % 2 == 0 { 1.0 } else { -1.0 }])
                .collect(),
        );
        let c = classify_run(&two, None, &th);
        assert_eq!(c.verdict, Verdict::Cycling);
        assert!(!c.ambiguous);
        let p = SymMatrix::from_diag(&[1.0, 0.0]);
        assert_eq!(
            classify_run(&two, Some(&p), &th).verdict,
            Verdict::PartialOnly
        );

        let circle = trace(
            (0..200)
                .map(|k| {
                    let a = 0.1 * k as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
        );
        assert_eq!(classify_run(&circle, None, &th).verdict, Verdict::Cycling);

        let mut edge = conv.clone();
        edge.records.last_mut().unwrap().domain_margin = 1e-7;
        assert_eq!(classify_run(&edge, None, &th).verdict, Verdict::Boundary);
    }

    #[test]
    fn slow_convergence_is_not_a_return() {
        let pts: Vec<Vec<f64>> = (1..100).map(|k| vec![1.0 / k as f64, 0.0]).collect();
        assert_eq!(closest_return(&pts), None);
    }
}
