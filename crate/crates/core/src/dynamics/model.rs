use std::collections::HashMap;

use rayon::prelude::*;

use super::step_distribution;
use crate::error::{Error, Result};
use crate::topology::{AirportTopology, Decision, ModelParams, StateIndex, StateVector};

/// Dense identifier of a reachable state; ids follow increasing state index.
pub type StateId = u32;

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Largest number of reachable states the builder accepts.
    pub max_states: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_states: 2_000_000 }
    }
}

/// One feasible decision of a state and the span of its transition row.
#[derive(Clone, Copy, Debug)]
pub struct Choice {
    pub decision: Decision,
    start: u32,
    end: u32,
}

/// Sparse `p(j | i, k)` over the states reachable from the empty airport.
#[derive(Clone, Debug)]
pub struct TransitionModel {
    topology: AirportTopology,
    params: ModelParams,
    states: Vec<StateIndex>,
    lookup: HashMap<StateIndex, StateId>,
    choice_offsets: Vec<u32>,
    choices: Vec<Choice>,
    next: Vec<StateId>,
    prob: Vec<f64>,
}

type RawRows = Vec<(Decision, Vec<(StateIndex, f64)>)>;

fn rows_for(s: &StateVector, t: &AirportTopology, p: &ModelParams) -> RawRows {
    t.feasible_decisions(s)
        .into_iter()
        .map(|k| {
            let dist = step_distribution(s, k, t, p).expect("feasible decision");
            (k, dist.into_iter().map(|(n, q)| (t.encode_unchecked(&n), q)).collect())
        })
        .collect()
}

/// Enumerates every state reachable from the empty airport under any decision
/// sequence, with all of its feasible-decision rows.
pub fn build_transition_model(
    t: &AirportTopology,
    p: &ModelParams,
    opts: BuildOptions,
) -> Result<TransitionModel> {
    p.validate()?;
    let empty = t.encode_unchecked(&t.empty_state());
    let mut rows: HashMap<StateIndex, RawRows> = HashMap::new();
    let mut seen: HashMap<StateIndex, ()> = HashMap::from([(empty, ())]);
    let mut frontier = vec![empty];
    while !frontier.is_empty() {
        let level: Vec<(StateIndex, RawRows)> = frontier
            .par_iter()
            .map(|&idx| {
                let s = t.decode_state(idx).expect("encoded by the builder");
                (idx, rows_for(&s, t, p))
            })
            .collect();
        let mut next = Vec::new();
        for (idx, r) in level {
            for (_, dist) in &r {
                for &(j, _) in dist {
                    if seen.insert(j, ()).is_none() {
                        if seen.len() > opts.max_states {
                            return Err(Error::StateSpaceCap { cap: opts.max_states });
                        }
                        next.push(j);
                    }
                }
            }
            rows.insert(idx, r);
        }
        next.sort_unstable();
        frontier = next;
    }
    Ok(TransitionModel::from_rows(t.clone(), *p, rows))
}

impl TransitionModel {
    pub(crate) fn from_rows(
        topology: AirportTopology,
        params: ModelParams,
        rows: HashMap<StateIndex, RawRows>,
    ) -> TransitionModel {
        let mut states: Vec<StateIndex> = rows.keys().copied().collect();
        states.sort_unstable();
        let lookup: HashMap<StateIndex, StateId> =
            states.iter().enumerate().map(|(i, &s)| (s, i as StateId)).collect();
        let mut choice_offsets = Vec::with_capacity(states.len() + 1);
        let mut choices = Vec::new();
        let mut next = Vec::new();
        let mut prob = Vec::new();
        for s in &states {
            choice_offsets.push(choices.len() as u32);
            for (k, dist) in &rows[s] {
                let start = next.len() as u32;
                for &(j, q) in dist {
                    next.push(lookup[&j]);
                    prob.push(q);
                }
                choices.push(Choice {
                    decision: *k,
                    start,
                    end: next.len() as u32,
                });
            }
        }
        choice_offsets.push(choices.len() as u32);
        TransitionModel {
            topology,
            params,
            states,
            lookup,
            choice_offsets,
            choices,
            next,
            prob,
        }
    }

    pub fn topology(&self) -> &AirportTopology {
        &self.topology
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Size of the decision space `K = 2^R`.
    pub fn num_decisions(&self) -> usize {
        self.topology.num_decisions()
    }

    pub fn num_choices(&self) -> usize {
        self.choices.len()
    }

    pub fn nonzero_count(&self) -> usize {
        self.prob.len()
    }

    pub fn state_index(&self, id: StateId) -> StateIndex {
        self.states[id as usize]
    }

    pub fn state_id(&self, index: StateIndex) -> Option<StateId> {
        self.lookup.get(&index).copied()
    }

    pub fn state_vector(&self, id: StateId) -> StateVector {
        self.topology
            .decode_state(self.states[id as usize])
            .expect("model states are valid")
    }

    pub fn empty_state_id(&self) -> StateId {
        self.lookup[&0]
    }

    pub fn choices(&self, id: StateId) -> &[Choice] {
        let lo = self.choice_offsets[id as usize] as usize;
        let hi = self.choice_offsets[id as usize + 1] as usize;
        &self.choices[lo..hi]
    }

    /// Global positions of a state's choices, for per-choice arrays.
    pub fn choice_range(&self, id: StateId) -> std::ops::Range<usize> {
        self.choice_offsets[id as usize] as usize..self.choice_offsets[id as usize + 1] as usize
    }

    pub fn choice_at(&self, pos: usize) -> &Choice {
        &self.choices[pos]
    }

    pub fn row(&self, c: &Choice) -> (&[StateId], &[f64]) {
        let (lo, hi) = (c.start as usize, c.end as usize);
        (&self.next[lo..hi], &self.prob[lo..hi])
    }

    /// Transition row of decision `k` in state `id`, if `k` is feasible there.
    pub fn row_for(&self, id: StateId, k: Decision) -> Option<(&[StateId], &[f64])> {
        self.choices(id).iter().find(|c| c.decision == k).map(|c| self.row(c))
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.choices
            .iter()
            .map(|c| {
                let (_, p) = self.row(c);
                (p.iter().sum::<f64>() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{count_taxiing, FairnessMode};

    fn params(m: f64, c1: f64, c2: f64) -> ModelParams {
        ModelParams { ls_meters: 200.0, ts_seconds: 60.0, m, c1, c2 }
    }

    /// Hand enumeration of the one-ramp, one-cell, B = 1 airport with
    /// m = 0.9, c1 = 0.5, c2 = 0. States are written (spot, cell, buffer).
    #[test]
    fn toy_model_matches_hand_table() {
        let t = AirportTopology::main_line(1, &[Some(0)], 1, FairnessMode::None).unwrap();
        let model = build_transition_model(&t, &params(0.9, 0.5, 0.0), BuildOptions::default()).unwrap();
        assert_eq!(model.num_states(), 8);
        let idx = |spot: u64, cell: u64, buf: u64| spot << 2 | cell << 1 | buf;
        #[rustfmt::skip]
        let table: Vec<((u64, u64, u64), u32, Vec<((u64, u64, u64), f64)>)> = vec![
            ((0, 0, 0), 0, vec![((0, 0, 0), 1.0)]),
            ((0, 0, 0), 1, vec![((1, 0, 0), 1.0)]),
            ((0, 0, 1), 0, vec![((0, 0, 0), 0.5), ((0, 0, 1), 0.5)]),
            ((0, 0, 1), 1, vec![((1, 0, 0), 0.5), ((1, 0, 1), 0.5)]),
            // Take-off first frees the buffer slot the cell aircraft then moves into.
            ((0, 1, 0), 0, vec![((0, 0, 1), 0.9), ((0, 1, 0), 0.1)]),
            ((0, 1, 0), 1, vec![((1, 0, 1), 0.9), ((1, 1, 0), 0.1)]),
            ((0, 1, 1), 0, vec![((0, 0, 1), 0.45), ((0, 1, 0), 0.05), ((0, 1, 1), 0.5)]),
            ((0, 1, 1), 1, vec![((1, 0, 1), 0.45), ((1, 1, 0), 0.05), ((1, 1, 1), 0.5)]),
            ((1, 0, 0), 0, vec![((0, 1, 0), 0.9), ((1, 0, 0), 0.1)]),
            ((1, 0, 1), 0, vec![((0, 1, 0), 0.45), ((0, 1, 1), 0.45), ((1, 0, 0), 0.05), ((1, 0, 1), 0.05)]),
            ((1, 1, 0), 0, vec![((0, 1, 1), 0.81), ((1, 0, 1), 0.09), ((1, 1, 0), 0.1)]),
            ((1, 1, 1), 0, vec![((0, 1, 1), 0.405), ((1, 0, 1), 0.045), ((1, 1, 0), 0.05), ((1, 1, 1), 0.5)]),
        ];
        assert_eq!(model.num_choices(), table.len());
        for ((a, b, c), k, expected) in table {
            let id = model.state_id(idx(a, b, c)).unwrap();
            let (next, prob) = model.row_for(id, Decision::from_mask(k)).unwrap();
            assert_eq!(next.len(), expected.len(), "row ({a},{b},{c}) k={k}");
            for ((ea, eb, ec), ep) in expected {
                let pos = next
                    .iter()
                    .position(|&j| model.state_index(j) == idx(ea, eb, ec))
                    .unwrap_or_else(|| panic!("missing ({ea},{eb},{ec}) from ({a},{b},{c}) k={k}"));
                assert!((prob[pos] - ep).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rows_are_stochastic_and_conserve_aircraft() {
        let t = AirportTopology::main_line(5, &[Some(0), Some(3)], 3, FairnessMode::Alternation).unwrap();
        let model = build_transition_model(&t, &params(0.85, 0.5, 0.1), BuildOptions::default()).unwrap();
        assert!(model.max_row_error() <= 1e-12);
        for id in 0..model.num_states() as StateId {
            let s = model.state_vector(id);
            for c in model.choices(id) {
                let (next, prob) = model.row(c);
                for (&j, &q) in next.iter().zip(prob) {
                    assert!((0.0..=1.0).contains(&q));
                    let n = model.state_vector(j);
                    let before = count_taxiing(&s) + c.decision.release_count();
                    let lost = before - count_taxiing(&n);
                    assert!(lost <= 2.min(s.buffer));
                }
            }
        }
    }

    #[test]
    fn state_cap_is_reported() {
        let t = AirportTopology::main_line(6, &[Some(0)], 3, FairnessMode::None).unwrap();
        let err = build_transition_model(&t, &params(0.9, 0.5, 0.1), BuildOptions { max_states: 10 });
        assert!(matches!(err, Err(Error::StateSpaceCap { cap: 10 })));
    }
}
