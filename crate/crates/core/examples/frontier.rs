//! Traces the optimal and threshold frontiers and the taxiing reduction
//! between them, writing both tables as CSV.
//!
//! cargo run --release --example frontier -- [out_dir]

use std::fs::File;

use tarmac::config::Airport;
use tarmac::dynamics::{build_transition_model, BuildOptions};
use tarmac::evaluator::{compare_frontiers, parse_grid, sweep_beta, sweep_threshold, write_frontier_csv, write_reduction_csv};
use tarmac::topology::FairnessMode;

fn main() -> tarmac::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/frontier".into()));
    std::fs::create_dir_all(&out).map_err(|e| tarmac::Error::io(&out, e))?;
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/laguardia.json");
    let airport = Airport::load(&path)?;
    let model = build_transition_model(&airport.topology, &airport.params, BuildOptions::default())?;

    let mut betas = parse_grid("log:3:1000:12")?;
    betas.extend(parse_grid("lin:4.5:7:6")?);
    let optimal = sweep_beta(&model, &betas, FairnessMode::None)?;
    let bench = sweep_threshold(&model, &(0..=12).collect::<Vec<u32>>())?;

    let hash = airport.config_hash();
    let names = airport.ramp_names();
    let create = |name: &str| File::create(out.join(name)).map_err(|e| tarmac::Error::io(out.join(name), e));
    write_frontier_csv(create("optimal.csv")?, &hash, &names, &optimal)?;
    write_frontier_csv(create("threshold.csv")?, &hash, &names, &bench)?;

    let curve = compare_frontiers(&optimal, &bench)?;
    write_reduction_csv(create("reduction.csv")?, &hash, &curve)?;
    for p in curve.iter().step_by(10) {
        println!("rate {:.3}/min  reduction {:5.2}%", p.rate, p.pct_reduction);
    }
    println!("tables written to {}", out.display());
    Ok(())
}
