//! Loads an airport, builds its transition model and steps one state by hand.
//!
//! cargo run --release --example build_model

use tarmac::config::Airport;
use tarmac::dynamics::{build_transition_model, step_distribution, BuildOptions};
use tarmac::topology::Decision;

fn main() -> tarmac::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/laguardia.json");
    let airport = Airport::load(&path)?;
    let t = &airport.topology;
    println!("{}: {} ramps, {} cells, buffer {}", airport.name(), t.num_ramps(), t.num_cells(), t.buffer_capacity());
    println!("config hash {}", airport.config_hash());

    let start = std::time::Instant::now();
    let model = build_transition_model(t, &airport.params, BuildOptions::default())?;
    println!(
        "{} states, {} state-decision rows, {} nonzeros, max row error {:.1e}, {:.1?}",
        model.num_states(),
        model.num_choices(),
        model.nonzero_count(),
        model.max_row_error(),
        start.elapsed()
    );

    let s = t.empty_state();
    let index = t.encode_state(&s)?;
    assert_eq!(t.decode_state(index)?, s);
    for (next, p) in step_distribution(&s, Decision::single(0), t, &airport.params)? {
        println!("  p = {p:.4}  spots {:02b}  cells {:08b}  buffer {}", next.spots, next.cells, next.buffer);
    }
    Ok(())
}
