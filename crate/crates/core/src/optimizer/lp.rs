use super::simplex::minimize;
use super::{balance_residual, CostModel, SolutionEntry, StationarySolution};
use crate::dynamics::{StateId, TransitionModel};
use crate::error::{Error, Result};
use crate::topology::FairnessMode;

/// Largest number of state-decision variables accepted by the dense LP route.
pub const DENSE_LP_LIMIT: usize = 3000;

/// Solves the state-decision linear program directly with a dense simplex.
/// Meant for small models and as a reference for the iterative solver.
pub fn solve_average_cost_lp(
    model: &TransitionModel,
    cost: &CostModel,
    fairness: FairnessMode,
) -> Result<StationarySolution> {
    let n = model.num_choices();
    if n > DENSE_LP_LIMIT {
        return Err(Error::Parameter(format!(
            "dense LP supports at most {DENSE_LP_LIMIT} state-decision pairs, model has {n}"
        )));
    }
    let states = model.num_states();
    let mut owner = vec![0 as StateId; n];
    let mut c = vec![0.0; n];
    for i in 0..states as StateId {
        for pos in model.choice_range(i) {
            owner[pos] = i;
            c[pos] = cost.cost(i);
        }
    }
    let mut a = vec![vec![1.0; n]];
    let mut b = vec![1.0];
    let mut balance = vec![vec![0.0; n]; states];
    for pos in 0..n {
        balance[owner[pos] as usize][pos] += 1.0;
        let (next, prob) = model.row(model.choice_at(pos));
        for (&j, &q) in next.iter().zip(prob) {
            balance[j as usize][pos] -= q;
        }
    }
    // The balance rows sum to zero, so the last one is implied by the others.
    balance.pop();
    b.extend(std::iter::repeat_n(0.0, balance.len()));
    a.extend(balance);
    let ramps = model.topology().num_ramps();
    if fairness == FairnessMode::Statistical {
        for r in 1..ramps {
            a.push(
                (0..n)
                    .map(|pos| {
                        let k = model.choice_at(pos).decision;
                        f64::from(u8::from(k.releases(r))) - f64::from(u8::from(k.releases(0)))
                    })
                    .collect(),
            );
            b.push(0.0);
        }
    }
    let sol = minimize(&c, &a, &b)?;
    let entries: Vec<SolutionEntry> = (0..n)
        .filter(|&pos| sol.x[pos] > 0.0)
        .map(|pos| SolutionEntry {
            state: owner[pos],
            decision: model.choice_at(pos).decision,
            y: sol.x[pos],
        })
        .collect();
    let residual = balance_residual(model, &entries);
    Ok(StationarySolution {
        entries,
        objective: sol.objective,
        beta: cost.beta,
        fairness,
        balance_residual: residual,
        fallback: None,
        columns: 0,
        optimality_gap: 0.0,
    })
}
