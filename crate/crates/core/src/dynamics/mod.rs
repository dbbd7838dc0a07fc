//! One-step surface dynamics.
//!
//! A step is composed of sub-transitions applied in a fixed order:
//!
//! 1. `d = Bern(c1) + Bern(c2)` clearances remove `min(d, buffer)` aircraft.
//! 2. Sites are visited from the runway backward. At each site the aircraft
//!    that may enter it (taxiway predecessors first, then spots) each move
//!    with probability `m` while the site has room. Under convoy motion a cell
//!    vacated earlier in the step can be entered again, so queues advance
//!    together; under blocking motion only cells free at the start count.
//! 3. The decision places an aircraft on every released spot.
//! 4. Under alternation the turn advances when the turn ramp released.
//!
//! [`step_distribution`] enumerates these outcomes exactly and
//! [`sample_step`] draws one of them; the two are written independently.

mod cache;
mod model;

pub use cache::{cache_path, load_cached, save_cached, CACHE_MAGIC, CACHE_VERSION};
pub use model::{build_transition_model, BuildOptions, Choice, StateId, TransitionModel};

use rand::Rng;

use crate::error::{Error, Result};
use crate::topology::{AirportTopology, Contender, Decision, MergeTiebreak, ModelParams, Site, StateVector, TaxiMotion};

fn check_feasible(s: &StateVector, k: Decision, t: &AirportTopology) -> Result<()> {
    t.check_state(s)?;
    if !t.is_feasible(s, k) {
        return Err(Error::InfeasibleDecision {
            decision: k.mask(),
            state: t.encode_unchecked(s),
        });
    }
    Ok(())
}

fn occupied(s: &StateVector, c: Contender) -> bool {
    match c {
        Contender::Cell(i) => s.cell_occupied(i),
        Contender::Spot(r) => s.spot_occupied(r),
    }
}

fn move_into(mut s: StateVector, from: Contender, to: Site) -> StateVector {
    match from {
        Contender::Cell(i) => s.cells &= !(1u64 << i),
        Contender::Spot(r) => s.spots &= !(1u32 << r),
    }
    match to {
        Site::Cell(i) => s.cells |= 1u64 << i,
        Site::Buffer => s.buffer += 1,
    }
    s
}

fn room(s: &StateVector, start: &StateVector, site: Site, t: &AirportTopology) -> u32 {
    match site {
        Site::Cell(i) if t.motion() == TaxiMotion::Blocking && start.cell_occupied(i) => 0,
        Site::Cell(i) => u32::from(!s.cell_occupied(i)),
        Site::Buffer => t.buffer_capacity() - s.buffer,
    }
}

fn finish(mut s: StateVector, start: &StateVector, k: Decision, t: &AirportTopology) -> StateVector {
    s.spots |= k.mask();
    s.turn = t.next_turn(start, k);
    s
}

/// Exact distribution of the next state, merged by state and sorted by state index.
pub fn step_distribution(
    s: &StateVector,
    k: Decision,
    t: &AirportTopology,
    p: &ModelParams,
) -> Result<Vec<(StateVector, f64)>> {
    check_feasible(s, k, t)?;
    let mut partial: Vec<(StateVector, f64)> = Vec::with_capacity(4);
    for (d, &pd) in p.clearance_distribution().iter().enumerate() {
        if pd == 0.0 {
            continue;
        }
        let after = StateVector {
            buffer: s.buffer - (d as u32).min(s.buffer),
            ..*s
        };
        match partial.iter_mut().find(|(st, _)| *st == after) {
            Some((_, q)) => *q += pd,
            None => partial.push((after, pd)),
        }
    }

    let m = p.m;
    let mut next = Vec::new();
    let mut present = Vec::with_capacity(4);
    for stage in t.stages() {
        next.clear();
        for &(st, pr) in &partial {
            present.clear();
            present.extend(stage.contenders.iter().copied().filter(|&c| occupied(&st, c)));
            let cap = room(&st, s, stage.site, t);
            if present.is_empty() || cap == 0 || m == 0.0 {
                next.push((st, pr));
                continue;
            }
            let coin = t.merge_tiebreak() == MergeTiebreak::CoinFlip && matches!(stage.site, Site::Cell(_));
            if coin {
                let none = (1.0 - m).powi(present.len() as i32);
                if none > 0.0 {
                    next.push((st, pr * none));
                }
                let each = (1.0 - none) / present.len() as f64;
                for &c in &present {
                    next.push((move_into(st, c, stage.site), pr * each));
                }
            } else {
                expand_in_order(&present, 0, st, pr, cap, m, stage.site, &mut next);
            }
        }
        std::mem::swap(&mut partial, &mut next);
    }

    let mut out: Vec<(u64, StateVector, f64)> = partial
        .into_iter()
        .map(|(st, pr)| {
            let st = finish(st, s, k, t);
            (t.encode_unchecked(&st), st, pr)
        })
        .collect();
    out.sort_by_key(|e| e.0);
    let mut merged: Vec<(StateVector, f64)> = Vec::with_capacity(out.len());
    let mut last = None;
    for (idx, st, pr) in out {
        if last == Some(idx) {
            merged.last_mut().unwrap().1 += pr;
        } else {
            merged.push((st, pr));
            last = Some(idx);
        }
    }
    Ok(merged)
}

#[allow(clippy::too_many_arguments)]
fn expand_in_order(
    present: &[Contender],
    at: usize,
    st: StateVector,
    pr: f64,
    cap: u32,
    m: f64,
    site: Site,
    out: &mut Vec<(StateVector, f64)>,
) {
    if at == present.len() || cap == 0 {
        out.push((st, pr));
        return;
    }
    if m > 0.0 {
        expand_in_order(present, at + 1, move_into(st, present[at], site), pr * m, cap - 1, m, site, out);
    }
    if m < 1.0 {
        expand_in_order(present, at + 1, st, pr * (1.0 - m), cap, m, site, out);
    }
}

/// Draws the next state by simulating each Bernoulli trial of the step.
pub fn sample_step<R: Rng + ?Sized>(
    s: &StateVector,
    k: Decision,
    t: &AirportTopology,
    p: &ModelParams,
    rng: &mut R,
) -> Result<StateVector> {
    check_feasible(s, k, t)?;
    Ok(sample_step_unchecked(s, k, t, p, rng).0)
}

/// Like [`sample_step`], also returning the number of take-offs in the step.
pub fn sample_step_with_takeoffs<R: Rng + ?Sized>(
    s: &StateVector,
    k: Decision,
    t: &AirportTopology,
    p: &ModelParams,
    rng: &mut R,
) -> Result<(StateVector, u32)> {
    check_feasible(s, k, t)?;
    Ok(sample_step_unchecked(s, k, t, p, rng))
}

pub(crate) fn sample_step_unchecked<R: Rng + ?Sized>(
    s: &StateVector,
    k: Decision,
    t: &AirportTopology,
    p: &ModelParams,
    rng: &mut R,
) -> (StateVector, u32) {
    let clearances = u32::from(rng.random_bool(p.c1)) + u32::from(rng.random_bool(p.c2));
    let mut st = *s;
    let takeoffs = clearances.min(st.buffer);
    st.buffer -= takeoffs;

    let coin_flip = t.merge_tiebreak() == MergeTiebreak::CoinFlip;
    let mut tryers: Vec<Contender> = Vec::with_capacity(4);
    for stage in t.stages() {
        let mut cap = room(&st, s, stage.site, t);
        if coin_flip && matches!(stage.site, Site::Cell(_)) {
            tryers.clear();
            for &c in &stage.contenders {
                if occupied(&st, c) && rng.random_bool(p.m) {
                    tryers.push(c);
                }
            }
            if cap > 0 && !tryers.is_empty() {
                let winner = tryers[rng.random_range(0..tryers.len())];
                st = move_into(st, winner, stage.site);
            }
            continue;
        }
        for &c in &stage.contenders {
            if cap == 0 {
                break;
            }
            if occupied(&st, c) && rng.random_bool(p.m) {
                st = move_into(st, c, stage.site);
                cap -= 1;
            }
        }
    }
    (finish(st, s, k, t), takeoffs)
}

/// Number of take-offs in a step from a buffer holding `buffer` aircraft:
/// returns `(P(one), P(two))`.
pub fn takeoff_probabilities(buffer: u32, p: &ModelParams) -> (f64, f64) {
    let [_, one, two] = p.clearance_distribution();
    match buffer {
        0 => (0.0, 0.0),
        1 => (one + two, 0.0),
        _ => (one, two),
    }
}
