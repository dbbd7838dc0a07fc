//! Writes synthetic ops records shaped like surface-movement data for LaGuardia.
//!
//! Per-minute counts come from simulating the shipped model under a threshold
//! that steps through 0..=16, plus a Poisson(3) number of aircraft still
//! pushing back on the ramps, so the data curve saturates about three aircraft
//! later than the model. Light-traffic flights draw their taxi-out times from
//! normal laws with the LaGuardia means and spreads.
//!
//! cargo run --example make_fixtures -- [out_dir]

use std::io::Write;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use tarmac::config::Airport;
use tarmac::dynamics::sample_step_with_takeoffs;
use tarmac::policies::threshold_decide;
use tarmac::rng::stream;
use tarmac::topology::count_taxiing;

const MINUTES: i64 = 20_000;
const EPOCH: i64 = 28_000_000;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or("crates/core/tests/fixtures".into()));
    std::fs::create_dir_all(&out)?;
    let airport = Airport::load("configs/laguardia.json".as_ref())?;
    let t = &airport.topology;
    let mut rng = stream(2012, "fixtures");
    let ramp_queue = Poisson::new(3.0)?;

    let mut counts = std::io::BufWriter::new(std::fs::File::create(out.join("lga_counts.csv"))?);
    writeln!(counts, "minute,n_taxiing,n_takeoffs")?;
    let mut s = t.empty_state();
    let mut light = Vec::new();
    for minute in 0..MINUTES {
        let th = ((minute / 500) % 17) as u32;
        let k = threshold_decide(&s, th, s.turn as usize);
        let on_ramp = ramp_queue.sample(&mut rng) as u32;
        let n = count_taxiing(&s) + on_ramp;
        let (next, takeoffs) = sample_step_with_takeoffs(&s, k, t, &airport.params, &mut rng)?;
        writeln!(counts, "{},{n},{takeoffs}", EPOCH + minute)?;
        if n <= 4 {
            light.push(minute);
        }
        s = next;
    }
    counts.flush()?;

    let taxi: [Normal<f64>; 2] = [Normal::new(13.56, 2.0)?, Normal::new(10.05, 1.9)?];
    let mut flights = std::io::BufWriter::new(std::fs::File::create(out.join("lga_flights.csv"))?);
    writeln!(flights, "flight_id,ramp_id,pushback_minute,wheels_off_minute")?;
    for (i, &minute) in light.iter().enumerate() {
        let r = rng.random_range(0..2);
        let taxi_out = taxi[r].sample(&mut rng).round().max(1.0) as i64;
        let push = EPOCH + minute;
        writeln!(flights, "SYN{i:05},ramp{},{push},{}", r + 1, push + taxi_out)?;
    }
    flights.flush()?;
    println!("wrote {} minutes and {} flights to {}", MINUTES, light.len(), out.display());
    Ok(())
}
