//! Derives model parameters from ops records.
//!
//! cargo run --example calibrate

use tarmac::calibration::{calibrate, ingest_ops_records, CalibrationInputs, IngestOptions};

fn main() -> tarmac::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let opts = IngestOptions { saturation_threshold: 14, light_traffic_threshold: 4 };
    let stats = ingest_ops_records(&dir.join("lga_flights.csv"), &dir.join("lga_counts.csv"), &opts)?;
    println!(
        "saturated take-off rate {:.3} +- {:.3} per minute over {} minutes",
        stats.takeoff_rate_mean, stats.takeoff_rate_std, stats.saturated_minutes
    );
    for w in &stats.warnings {
        println!("warning: {w}");
    }
    let cal = calibrate(&stats, &CalibrationInputs::default())?;
    println!("m = {:.4}  c1 = {:.4}  c2 = {:.4}  B = {}", cal.m, cal.c1, cal.c2, cal.buffer_capacity);
    for r in &cal.ramps {
        println!("{}: AMA taxi {:.2} +- {:.2} min, {} steps", r.ramp_id, r.ama.mean, r.ama.std, r.path_length);
    }
    Ok(())
}
