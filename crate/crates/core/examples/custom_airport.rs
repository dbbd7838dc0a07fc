//! Describes a small two-ramp airport in JSON and checks that the optimal
//! policy beats every threshold rule on it.
//!
//! cargo run --example custom_airport

use tarmac::config::Airport;
use tarmac::dynamics::{build_transition_model, BuildOptions};
use tarmac::evaluator::{compare_frontiers, sweep_beta, sweep_threshold};
use tarmac::topology::FairnessMode;

const AIRPORT: &str = r#"{
    "name": "two-gate field",
    "ramps": [{"name": "north", "entry_cell": 1}, {"name": "south", "entry_cell": 3}],
    "cells": [
        {"id": 1, "successor": 2},
        {"id": 2, "successor": 3},
        {"id": 3, "successor": 4},
        {"id": 4, "successor": "buffer"}
    ],
    "buffer_capacity": 3,
    "params": {"L_s": 200, "T_s": 60, "m": 0.9, "c1": 0.5, "c2": 0.1},
    "fairness_mode": "alternation"
}"#;

fn main() -> tarmac::Result<()> {
    let airport = Airport::from_json(AIRPORT)?;
    let t = &airport.topology;
    println!("{}: path lengths {:?}", airport.name(), (0..t.num_ramps()).map(|r| t.path_length(r)).collect::<Vec<_>>());
    let model = build_transition_model(t, &airport.params, BuildOptions::default())?;
    println!("{} states", model.num_states());

    let betas: Vec<f64> = (0..200).map(|i| 10f64.powf(0.3 + 2.5 * i as f64 / 199.0)).collect();
    let optimal = sweep_beta(&model, &betas, FairnessMode::None)?;
    let bench = sweep_threshold(&model, &(0..=8).collect::<Vec<u32>>())?;
    let curve = compare_frontiers(&optimal, &bench)?;
    let worst = curve.iter().map(|p| p.pct_reduction).fold(f64::INFINITY, f64::min);
    let best = curve.iter().map(|p| p.pct_reduction).fold(f64::NEG_INFINITY, f64::max);
    println!("taxiing reduction over thresholds: {worst:.2}% to {best:.2}%");
    Ok(())
}
