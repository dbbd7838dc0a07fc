//! Evaluates the alternating threshold rule exactly and by simulation.
//!
//! cargo run --release --example threshold

use tarmac::config::Airport;
use tarmac::dynamics::{build_transition_model, BuildOptions};
use tarmac::evaluator::{simulate, stationary_metrics, SimOptions};
use tarmac::policies::{threshold_policy, ThresholdController};

fn main() -> tarmac::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/laguardia.json");
    let airport = Airport::load(&path)?;
    let model = build_transition_model(&airport.topology, &airport.params, BuildOptions::default())?;

    println!("Th   rate/min  taxiing");
    for th in [0, 2, 4, 6, 8, 10, 12] {
        let m = stationary_metrics(&model, &threshold_policy(&model, th))?;
        println!("{th:>2}   {:.4}    {:.3}", m.avg_takeoff_rate, m.avg_taxiing);
    }

    let opts = SimOptions { steps: 210_000, warmup: 10_000, seed: 7, batches: 50 };
    let m = simulate(&mut ThresholdController { threshold: 6 }, &model, &opts)?;
    println!(
        "simulated Th = 6: rate {:.4} +- {:.4}, taxiing {:.3} +- {:.3}",
        m.avg_takeoff_rate, m.rate_stderr, m.avg_taxiing, m.taxiing_stderr
    );
    Ok(())
}
