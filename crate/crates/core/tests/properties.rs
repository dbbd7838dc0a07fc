use std::path::Path;

use rand::Rng;
use tarmac::config::Airport;
use tarmac::dynamics::{build_transition_model, BuildOptions, TransitionModel};
use tarmac::evaluator::{stationary_metrics, sweep_beta, sweep_threshold};
use tarmac::optimizer::{build_cost_vector, extract_policy, solve_average_cost};
use tarmac::policies::{belief_update, mls_decide, observe, Belief, Observer};
use tarmac::rng::stream;
use tarmac::topology::{Decision, FairnessMode};

fn laguardia() -> (Airport, TransitionModel) {
    let a = Airport::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/laguardia.json")).unwrap();
    let m = build_transition_model(&a.topology, &a.params, BuildOptions::default()).unwrap();
    (a, m)
}

#[test]
fn laguardia_threshold_and_beta_frontiers() {
    let (_, model) = laguardia();
    let th = sweep_threshold(&model, &(1..=10).collect::<Vec<_>>()).unwrap();
    let n: Vec<f64> = th.iter().map(|p| p.report.avg_taxiing).collect();
    assert!(n.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{n:?}");

    let betas: Vec<f64> = (0..7).map(|i| 10f64.powf(0.5 + 0.5 * i as f64)).collect();
    let opt = sweep_beta(&model, &betas, FairnessMode::None).unwrap();
    let rates: Vec<f64> = opt.iter().map(|p| p.report.avg_takeoff_rate).collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{rates:?}");
    let top = rates.last().unwrap();
    assert!((top - 0.6).abs() < 0.02, "saturation {top}");

    for p in opt.iter().filter(|p| p.report.avg_takeoff_rate > 0.05) {
        let r = &p.report.ramp_release_rates;
        assert!((r[0] - r[1]).abs() < 1e-9, "alternation keeps ramps balanced: {r:?}");
    }
}

#[test]
fn statistical_fairness_balances_release_rates() {
    let (a, _) = laguardia();
    let free = build_transition_model(&a.topology_for(FairnessMode::None), &a.params, BuildOptions::default()).unwrap();
    for beta in [8.0, 40.0] {
        let cost = build_cost_vector(&free, beta).unwrap();
        let fair = solve_average_cost(&free, &cost, FairnessMode::Statistical).unwrap();
        let unfair = solve_average_cost(&free, &cost, FairnessMode::None).unwrap();
        assert!(fair.objective >= unfair.objective - 1e-9);
        let r = stationary_metrics(&free, &extract_policy(&fair, &free)).unwrap().ramp_release_rates;
        assert!((r[0] - r[1]).abs() < 1e-6, "beta {beta}: {r:?}");
    }
}

#[test]
fn belief_keeps_the_true_state_under_mls_control() {
    let (a, model) = laguardia();
    let sol = solve_average_cost(&model, &build_cost_vector(&model, 20.0).unwrap(), FairnessMode::None).unwrap();
    let policy = extract_policy(&sol, &model);
    let scheme = a.observation_scheme("count_and_ramp_free", model.topology()).unwrap();
    let observer = Observer::new(&model, scheme.clone()).unwrap();
    let mut dynamics = stream(5, "dynamics");
    let mut control = stream(5, "controller");
    let mut truth = model.empty_state_id();
    let mut belief = Belief::point(truth);
    for _ in 0..5_000 {
        let mut k = mls_decide(&belief, &policy, &mut control);
        if model.row_for(truth, k).is_none() {
            k = Decision::NONE;
        }
        let (to, p) = model.row_for(truth, k).unwrap();
        let u: f64 = dynamics.random();
        let mut acc = 0.0;
        let mut next = *to.last().unwrap();
        for (&j, &q) in to.iter().zip(p) {
            acc += q;
            if u < acc {
                next = j;
                break;
            }
        }
        truth = next;
        let o = observe(&model.state_vector(truth), &scheme);
        belief = belief_update(&belief, k, &o, &model, &observer).unwrap();
        assert!((belief.total() - 1.0).abs() < 1e-9);
        assert!(belief.mass(truth) > 0.0, "true state dropped from the belief");
        assert!(belief.support().iter().all(|&(id, _)| observe(&model.state_vector(id), &scheme) == o));
    }
}
