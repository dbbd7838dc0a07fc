//! Runs the optimal policy from partial observations, tracking a belief over
//! the hidden state and acting on its most likely state.
//!
//! cargo run --release --example mls_control

use tarmac::config::Airport;
use tarmac::dynamics::{build_transition_model, BuildOptions};
use tarmac::evaluator::{simulate, stationary_metrics, SimOptions};
use tarmac::optimizer::{build_cost_vector, extract_policy, solve_average_cost};
use tarmac::policies::{MlsController, Observer};
use tarmac::topology::FairnessMode;

fn main() -> tarmac::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/laguardia.json");
    let airport = Airport::load(&path)?;
    let model = build_transition_model(&airport.topology, &airport.params, BuildOptions::default())?;
    let sol = solve_average_cost(&model, &build_cost_vector(&model, 20.0)?, FairnessMode::None)?;
    let policy = extract_policy(&sol, &model);
    let full = stationary_metrics(&model, &policy)?;

    let scheme = airport.observation_scheme("count_and_ramp_free", model.topology())?;
    let observer = Observer::new(&model, scheme)?;
    println!("{} distinct observations over {} states", observer.num_observations(), model.num_states());

    let mut mls = MlsController::new(&policy, &observer);
    let opts = SimOptions { steps: 60_000, warmup: 2_000, seed: 11, batches: 20 };
    let m = simulate(&mut mls, &model, &opts)?;
    let stats = mls.stats();
    println!("full state : rate {:.4}  taxiing {:.3}", full.avg_takeoff_rate, full.avg_taxiing);
    println!("observed   : rate {:.4}  taxiing {:.3}", m.avg_takeoff_rate, m.avg_taxiing);
    println!(
        "belief on the true state {:.3} on average, estimate exact in {:.1}% of steps, {} infeasible picks",
        stats.mean_truth_mass(),
        100.0 * stats.argmax_hits as f64 / stats.updates.max(1) as f64,
        m.mismatches
    );
    Ok(())
}
