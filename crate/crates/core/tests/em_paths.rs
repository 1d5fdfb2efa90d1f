use emlab_core::constraint::Start;
use emlab_core::diagnostics::cauchy_sums;
use emlab_core::em::{em_run, kl_em_regularizer, regularized_em_run, EmConfig, NegLogLikelihood};
use emlab_core::models::{duplicated_statistic, gaussian_curved};
use emlab_core::numerics::vector::dist;
use emlab_core::proximal::{prox_run, ProxConfig, StartPolicy};

#[test]
fn em_is_the_kl_proximal_scheme() {
    let model = gaussian_curved(1.0).unwrap();
    let theta0 = [2.0, -1.0];
    let em = em_run(
        &model,
        &theta0,
        &EmConfig {
            max_iter: 50,
            step_tol: 0.0,
            ..EmConfig::default()
        },
    )
    .unwrap();
    let reg = kl_em_regularizer(&model, &theta0).unwrap();
    let prox = prox_run(
        &NegLogLikelihood(&model),
        model.constraint(),
        &reg,
        &ProxConfig {
            max_iter: 50,
            step_tol: 0.0,
            ..ProxConfig::default()
        },
        &theta0,
        &|x: &[f64]| model.domain_margin(x),
    )
    .unwrap();
    assert_eq!(em.records.len(), prox.records.len());
    for (a, b) in em.records.iter().zip(&prox.records) {
        assert!(
            dist(&a.theta, &b.x) <= 1e-8,
            "k={} {:?} {:?}",
            a.k,
            a.theta,
            b.x
        );
    }
}

fn spare_tail(trace: &emlab_core::em::EmTrace) -> f64 {
    let split = trace.split.as_ref().unwrap();
    let sums = cauchy_sums(&trace.thetas(), Some(&split.complement()));
    sums[sums.len() / 2]
}

#[test]
fn regularization_stops_spare_wandering() {
    let w = 0.5;
    let model = duplicated_statistic(1.0, (-1.0, 1.0)).unwrap();
    // u = 2, d = 0.5 on the surface ((u + d)/2, −u²/4, (u − d)/2).
    let theta0 = [1.25, -1.0, 0.75];
    assert!(model.constraint().contains(&theta0, 1e-12));
    let cfg = EmConfig {
        max_iter: 200,
        step_tol: 0.0,
        start: StartPolicy::Cycle(vec![
            Start::Param(vec![2.0, w]),
            Start::Param(vec![2.0, -w]),
        ]),
        ..EmConfig::default()
    };
    let plain = em_run(&model, &theta0, &cfg).unwrap();
    let regd = regularized_em_run(&model, &theta0, 1.0, &cfg).unwrap();
    let (tp, tr) = (spare_tail(&plain), spare_tail(&regd));
    assert!(tr < 1e-6, "regularized tail {tr}");
    assert!(tp > 1e-5, "plain tail {tp}");
    for t in [&plain, &regd] {
        assert!(t.max_increase <= 1e-12);
    }
}
