//! Relative value iteration for the average-cost criterion.

use rayon::prelude::*;

use crate::dynamics::{StateId, TransitionModel};
use crate::error::{Error, Result};
use crate::topology::Decision;

/// Self-loop weight of the aperiodicity transform `P~ = tau I + (1 - tau) P`.
const TAU: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
pub struct RviOptions {
    /// Stop once the span of `T h - h` falls below `tol * (1 + max |cost|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RviOptions {
    fn default() -> Self {
        RviOptions { tol: 1e-11, max_iter: 1_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct RviOutcome {
    pub h: Vec<f64>,
    /// Lower and upper bounds on the optimal gain.
    pub gain: (f64, f64),
    pub decisions: Vec<Decision>,
    pub iterations: usize,
}

fn q_values<'a>(
    model: &'a TransitionModel,
    cost: &'a [f64],
    h: &'a [f64],
    i: StateId,
) -> impl Iterator<Item = (usize, f64)> + 'a {
    model.choice_range(i).map(move |pos| {
        let (next, prob) = model.row(model.choice_at(pos));
        let ev: f64 = next.iter().zip(prob).map(|(&j, &q)| q * h[j as usize]).sum();
        (pos, cost[pos] + ev)
    })
}

/// Greedy decision of every state for relative values `h`; near-ties go to
/// the earliest choice, i.e. the smallest release mask.
pub fn greedy(model: &TransitionModel, cost: &[f64], h: &[f64]) -> Vec<Decision> {
    (0..model.num_states() as StateId)
        .into_par_iter()
        .map(|i| {
            let q: Vec<(usize, f64)> = q_values(model, cost, h, i).collect();
            let best = q.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
            let slack = 1e-12 * (1.0 + best.abs());
            let pos = q.iter().find(|e| e.1 <= best + slack).expect("every state has a choice").0;
            model.choice_at(pos).decision
        })
        .collect()
}

/// Minimises the long-run average of per-choice costs `cost` (indexed like
/// the model's choices).
pub fn relative_value_iteration(
    model: &TransitionModel,
    cost: &[f64],
    warm: Option<&[f64]>,
    opts: RviOptions,
) -> Result<RviOutcome> {
    let n = model.num_states();
    let anchor = model.empty_state_id() as usize;
    let scale = 1.0 + cost.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut h = warm.map_or_else(|| vec![0.0; n], |w| w.iter().map(|v| v / (1.0 - TAU)).collect());
    let mut span = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next: Vec<f64> = (0..n as StateId)
            .into_par_iter()
            .map(|i| {
                let own = h[i as usize];
                let best = model
                    .choice_range(i)
                    .map(|pos| {
                        let (cols, prob) = model.row(model.choice_at(pos));
                        let ev: f64 = cols.iter().zip(prob).map(|(&j, &q)| q * h[j as usize]).sum();
                        cost[pos] + (1.0 - TAU) * ev
                    })
                    .fold(f64::INFINITY, f64::min);
                best + TAU * own
            })
            .collect();
        let (lo, hi) = next
            .iter()
            .zip(&h)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let base = next[anchor];
        h = next.into_iter().map(|v| v - base).collect();
        span = hi - lo;
        if span <= opts.tol * scale {
            // Undo the transform's scaling so that g + h = c + P h.
            h.iter_mut().for_each(|v| *v *= 1.0 - TAU);
            let decisions = greedy(model, cost, &h);
            return Ok(RviOutcome { h, gain: (lo, hi), decisions, iterations: it });
        }
    }
    Err(Error::SolverFailure {
        reason: format!("relative value iteration did not converge in {} iterations", opts.max_iter),
        residual: span,
    })
}
