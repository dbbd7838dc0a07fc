//! Solves for the cost-optimal release policy at one trade-off weight, with
//! and without a fairness constraint.
//!
//! cargo run --release --example optimal_policy -- [beta]

use tarmac::config::Airport;
use tarmac::dynamics::{build_transition_model, BuildOptions};
use tarmac::evaluator::stationary_metrics;
use tarmac::optimizer::{build_cost_vector, extract_policy, solve_average_cost};
use tarmac::topology::FairnessMode;

fn main() -> tarmac::Result<()> {
    let beta: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/laguardia.json");
    let airport = Airport::load(&path)?;

    for (label, topology, fairness) in [
        ("alternation", airport.topology_for(FairnessMode::Alternation), FairnessMode::None),
        ("unconstrained", airport.topology_for(FairnessMode::None), FairnessMode::None),
        ("statistical", airport.topology_for(FairnessMode::None), FairnessMode::Statistical),
    ] {
        let model = build_transition_model(&topology, &airport.params, BuildOptions::default())?;
        let cost = build_cost_vector(&model, beta)?;
        let sol = solve_average_cost(&model, &cost, fairness)?;
        let policy = extract_policy(&sol, &model);
        let m = stationary_metrics(&model, &policy)?;
        let releases: Vec<String> = m.ramp_release_rates.iter().map(|r| format!("{r:.4}")).collect();
        println!(
            "{label:>13}: cost {:.4}  rate {:.4}/min  taxiing {:.3}  releases [{}]  balance {:.1e}",
            sol.objective,
            m.avg_takeoff_rate,
            m.avg_taxiing,
            releases.join(", "),
            sol.balance_residual
        );
    }
    Ok(())
}
