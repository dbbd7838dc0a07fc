//! Average-cost optimal release policies.
//!
//! The normative problem is the linear program over stationary state-decision
//! frequencies `y_ik`. Without fairness constraints it is solved by relative
//! value iteration followed by an exact stationary evaluation of the greedy
//! policy. With statistical fairness, deterministic policies are generated as
//! columns of a restricted master program whose duals price the per-ramp
//! release balance.

mod lp;
mod policy;
mod rvi;
pub mod simplex;

use std::collections::BTreeMap;
use std::io::Write;

pub use lp::{solve_average_cost_lp, DENSE_LP_LIMIT};
pub use policy::Policy;
pub use rvi::{greedy, relative_value_iteration, RviOptions, RviOutcome};

use crate::dynamics::{StateId, TransitionModel};
use crate::error::{Error, Result};
use crate::markov::ClosedLoopChain;
use crate::topology::{count_taxiing, runway_idle_indicator, Decision, FairnessMode, StateVector};

/// `C_i = N_ac(i) + beta * idle(i)`.
pub fn state_cost(s: &StateVector, beta: f64) -> f64 {
    f64::from(count_taxiing(s)) + beta * f64::from(runway_idle_indicator(s))
}

#[derive(Clone, Debug)]
pub struct CostModel {
    pub beta: f64,
    costs: Vec<f64>,
}

impl CostModel {
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn cost(&self, id: StateId) -> f64 {
        self.costs[id as usize]
    }

    /// Recomputes every entry from the model's states.
    pub fn is_consistent(&self, model: &TransitionModel) -> bool {
        self.costs.len() == model.num_states()
            && (0..model.num_states() as StateId)
                .all(|i| self.costs[i as usize] == state_cost(&model.state_vector(i), self.beta))
    }

    fn per_choice(&self, model: &TransitionModel) -> Vec<f64> {
        let mut out = vec![0.0; model.num_choices()];
        for i in 0..model.num_states() as StateId {
            for pos in model.choice_range(i) {
                out[pos] = self.costs[i as usize];
            }
        }
        out
    }
}

pub fn build_cost_vector(model: &TransitionModel, beta: f64) -> Result<CostModel> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be finite and non-negative, got {beta}")));
    }
    let costs = (0..model.num_states() as StateId)
        .map(|i| state_cost(&model.state_vector(i), beta))
        .collect();
    Ok(CostModel { beta, costs })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionEntry {
    pub state: StateId,
    pub decision: Decision,
    pub y: f64,
}

/// Stationary state-decision frequencies `y_ik` and the cost they achieve.
#[derive(Clone, Debug)]
pub struct StationarySolution {
    /// Nonzero `y_ik`, sorted by state then decision.
    pub entries: Vec<SolutionEntry>,
    pub objective: f64,
    pub beta: f64,
    pub fairness: FairnessMode,
    pub balance_residual: f64,
    /// Greedy decisions of the iterative solver, used where `y` has no mass.
    pub fallback: Option<Vec<Decision>>,
    /// Policies generated for the fairness master program.
    pub columns: usize,
    /// Upper bound on `objective - optimum` certified by the solver.
    pub optimality_gap: f64,
}

impl StationarySolution {
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.y).sum()
    }

    pub fn state_mass(&self, num_states: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_states];
        for e in &self.entries {
            out[e.state as usize] += e.y;
        }
        out
    }

    /// Long-run fraction of steps in which each ramp releases.
    pub fn release_frequencies(&self, ramps: usize) -> Vec<f64> {
        (0..ramps)
            .map(|r| self.entries.iter().filter(|e| e.decision.releases(r)).map(|e| e.y).sum())
            .collect()
    }

    pub fn recompute_objective(&self, cost: &CostModel) -> f64 {
        self.entries.iter().map(|e| cost.cost(e.state) * e.y).sum()
    }
}

/// Largest per-state violation of `sum_k y_jk = sum_ik y_ik p(j | i, k)`.
pub fn balance_residual(model: &TransitionModel, entries: &[SolutionEntry]) -> f64 {
    let mut net = vec![0.0; model.num_states()];
    for e in entries {
        net[e.state as usize] += e.y;
        let (next, prob) = model.row_for(e.state, e.decision).expect("solution uses feasible decisions");
        for (&j, &q) in next.iter().zip(prob) {
            net[j as usize] -= e.y * q;
        }
    }
    net.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub rvi: RviOptions,
    pub max_columns: usize,
    /// Relative reduced-cost threshold that ends column generation.
    pub column_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rvi: RviOptions::default(), max_columns: 200, column_tol: 1e-9 }
    }
}

struct Column {
    decisions: Vec<Decision>,
    dist: Vec<f64>,
    z: f64,
    freq: Vec<f64>,
}

fn evaluate_column(model: &TransitionModel, cost: &CostModel, decisions: Vec<Decision>) -> Result<Column> {
    let chain = ClosedLoopChain::deterministic(model, &decisions);
    let dist = chain.long_run_from(model.empty_state_id())?;
    let z = dist.iter().zip(cost.costs()).map(|(p, c)| p * c).sum();
    let freq = (0..model.topology().num_ramps())
        .map(|r| {
            dist.iter()
                .zip(&decisions)
                .filter(|(_, k)| k.releases(r))
                .map(|(p, _)| p)
                .sum()
        })
        .collect();
    Ok(Column { decisions, dist, z, freq })
}

fn entries_from(mix: &[(f64, &Column)]) -> Vec<SolutionEntry> {
    let mut acc: BTreeMap<(StateId, Decision), f64> = BTreeMap::new();
    for &(w, col) in mix {
        for (i, &p) in col.dist.iter().enumerate() {
            if p > 0.0 {
                *acc.entry((i as StateId, col.decisions[i])).or_default() += w * p;
            }
        }
    }
    acc.into_iter()
        .filter(|e| e.1 > 0.0)
        .map(|((state, decision), y)| SolutionEntry { state, decision, y })
        .collect()
}

pub fn solve_average_cost(
    model: &TransitionModel,
    cost: &CostModel,
    fairness: FairnessMode,
) -> Result<StationarySolution> {
    solve_average_cost_with(model, cost, fairness, &SolveOptions::default())
}

pub fn solve_average_cost_with(
    model: &TransitionModel,
    cost: &CostModel,
    fairness: FairnessMode,
    opts: &SolveOptions,
) -> Result<StationarySolution> {
    if cost.costs.len() != model.num_states() {
        return Err(Error::Structural(format!(
            "cost vector has {} entries, model has {} states",
            cost.costs.len(),
            model.num_states()
        )));
    }
    let base = cost.per_choice(model);
    let first = relative_value_iteration(model, &base, None, opts.rvi)?;
    log::debug!("beta {}: value iteration converged in {} iterations", cost.beta, first.iterations);
    let ramps = model.topology().num_ramps();
    if fairness != FairnessMode::Statistical || ramps < 2 {
        let col = evaluate_column(model, cost, first.decisions.clone())?;
        let entries = entries_from(&[(1.0, &col)]);
        return Ok(StationarySolution {
            balance_residual: balance_residual(model, &entries),
            entries,
            objective: col.z,
            beta: cost.beta,
            fairness,
            fallback: Some(first.decisions),
            columns: 1,
            optimality_gap: (col.z - first.gain.0).max(0.0),
        });
    }
    fair_column_generation(model, cost, &base, first, opts)
}

fn fair_column_generation(
    model: &TransitionModel,
    cost: &CostModel,
    base: &[f64],
    first: RviOutcome,
    opts: &SolveOptions,
) -> Result<StationarySolution> {
    let ramps = model.topology().num_ramps();
    let never = vec![Decision::NONE; model.num_states()];
    let mut columns = vec![evaluate_column(model, cost, never)?];
    if first.decisions != columns[0].decisions {
        columns.push(evaluate_column(model, cost, first.decisions.clone())?);
    }
    let mut warm = first.h;
    let mut fallback = first.decisions;
    let scale = 1.0 + cost.costs().iter().map(|c| c.abs()).fold(0.0, f64::max);
    loop {
        let c: Vec<f64> = columns.iter().map(|col| col.z).collect();
        let mut a = vec![vec![1.0; columns.len()]];
        for r in 1..ramps {
            a.push(columns.iter().map(|col| col.freq[r] - col.freq[0]).collect());
        }
        let mut b = vec![0.0; ramps];
        b[0] = 1.0;
        let master = simplex::minimize(&c, &a, &b)?;
        let sigma = &master.duals;

        let priced: Vec<f64> = (0..model.num_choices())
            .map(|pos| {
                let k = model.choice_at(pos).decision;
                let shift: f64 = (1..ramps)
                    .map(|r| sigma[r] * (f64::from(u8::from(k.releases(r))) - f64::from(u8::from(k.releases(0)))))
                    .sum();
                base[pos] - shift
            })
            .collect();
        let out = relative_value_iteration(model, &priced, Some(&warm), opts.rvi)?;
        let lower_bound = sigma[0].min(out.gain.0);
        let gap = (master.objective - lower_bound).max(0.0);
        let known = columns.iter().any(|col| col.decisions == out.decisions);
        let done = known || out.gain.0 >= sigma[0] - opts.column_tol * scale || columns.len() >= opts.max_columns;
        if done {
            if columns.len() >= opts.max_columns && !known {
                log::warn!("column generation stopped at {} columns, gap {gap:.3e}", columns.len());
            }
            let mix: Vec<(f64, &Column)> = master
                .x
                .iter()
                .zip(&columns)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, col)| (*w, col))
                .collect();
            if let Some(&(_, col)) = mix.iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
                fallback = col.decisions.clone();
            }
            let entries = entries_from(&mix);
            return Ok(StationarySolution {
                balance_residual: balance_residual(model, &entries),
                entries,
                objective: master.objective,
                beta: cost.beta,
                fairness: FairnessMode::Statistical,
                fallback: Some(fallback),
                columns: columns.len(),
                optimality_gap: if known { 0.0 } else { gap },
            });
        }
        log::debug!("column {}: priced gain {:.6} vs dual {:.6}", columns.len(), out.gain.0, sigma[0]);
        warm = out.h;
        columns.push(evaluate_column(model, cost, out.decisions)?);
    }
}

/// Turns `y_ik` into per-state decision probabilities `y_ik / sum_k y_ik`.
/// States without mass take the solver's greedy decision when the solution
/// carries one and release nothing otherwise.
pub fn extract_policy(sol: &StationarySolution, model: &TransitionModel) -> Policy {
    let n = model.num_states();
    let mut rules: Vec<Vec<(Decision, f64)>> = vec![Vec::new(); n];
    for e in &sol.entries {
        if e.y > 0.0 {
            rules[e.state as usize].push((e.decision, e.y));
        }
    }
    let mut defaulted = vec![false; n];
    for (i, r) in rules.iter_mut().enumerate() {
        if r.is_empty() {
            defaulted[i] = true;
            let k = sol.fallback.as_ref().map_or(Decision::NONE, |f| f[i]);
            r.push((k, 1.0));
        }
    }
    Policy::from_rules(rules).with_defaulted(defaulted)
}

/// Writes `state_index, decision_mask, y, policy_probability` rows.
pub fn write_solution_csv<W: Write>(
    w: &mut csv::Writer<W>,
    sol: &StationarySolution,
    model: &TransitionModel,
    policy: &Policy,
) -> Result<()> {
    w.write_record(["state_index", "decision_mask", "y", "policy_probability"])?;
    for e in &sol.entries {
        let prob = policy
            .rule(e.state)
            .iter()
            .find(|r| r.0 == e.decision)
            .map_or(0.0, |r| r.1);
        w.write_record([
            model.state_index(e.state).to_string(),
            e.decision.mask().to_string(),
            format!("{:e}", e.y),
            format!("{prob}"),
        ])?;
    }
    w.flush().map_err(|e| Error::io("solution csv", e))?;
    Ok(())
}
