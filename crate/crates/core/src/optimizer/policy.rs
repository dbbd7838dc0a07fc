use rand::Rng;

use crate::dynamics::{StateId, TransitionModel};
use crate::markov::ClosedLoopChain;
use crate::topology::Decision;

/// Stationary randomised policy: a distribution over feasible decisions per state.
#[derive(Clone, Debug)]
pub struct Policy {
    rules: Vec<Vec<(Decision, f64)>>,
    defaulted: Vec<bool>,
}

impl Policy {
    pub fn deterministic(decisions: &[Decision]) -> Policy {
        Policy {
            rules: decisions.iter().map(|&k| vec![(k, 1.0)]).collect(),
            defaulted: vec![false; decisions.len()],
        }
    }

    /// Per-state rules; weights are normalised and zero weights dropped.
    pub fn from_rules(rules: Vec<Vec<(Decision, f64)>>) -> Policy {
        let n = rules.len();
        let rules = rules
            .into_iter()
            .map(|r| {
                let total: f64 = r.iter().map(|e| e.1).sum();
                let mut r: Vec<(Decision, f64)> = r.into_iter().filter(|e| e.1 > 0.0).map(|(k, w)| (k, w / total)).collect();
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        Policy { rules, defaulted: vec![false; n] }
    }

    pub(crate) fn with_defaulted(mut self, defaulted: Vec<bool>) -> Policy {
        self.defaulted = defaulted;
        self
    }

    pub fn num_states(&self) -> usize {
        self.rules.len()
    }

    pub fn rule(&self, id: StateId) -> &[(Decision, f64)] {
        &self.rules[id as usize]
    }

    /// True when the state carried no stationary mass and got the default decision.
    pub fn is_defaulted(&self, id: StateId) -> bool {
        self.defaulted[id as usize]
    }

    pub fn is_deterministic(&self) -> bool {
        self.rules.iter().all(|r| r.len() == 1)
    }

    /// Most probable decision; ties go to the smaller mask.
    pub fn most_likely(&self, id: StateId) -> Decision {
        let r = self.rule(id);
        let best = r.iter().map(|e| e.1).fold(0.0, f64::max);
        r.iter().find(|e| e.1 == best).map_or(Decision::NONE, |e| e.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, id: StateId, rng: &mut R) -> Decision {
        let r = self.rule(id);
        if r.len() == 1 {
            return r[0].0;
        }
        let mut u: f64 = rng.random();
        for &(k, w) in r {
            if u < w {
                return k;
            }
            u -= w;
        }
        r.last().map_or(Decision::NONE, |e| e.0)
    }

    pub fn chain(&self, model: &TransitionModel) -> ClosedLoopChain {
        ClosedLoopChain::new(model, |i| self.rules[i as usize].clone())
    }
}
