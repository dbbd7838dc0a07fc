//! Release controllers: the threshold benchmark, full-state feedback from an
//! optimal policy, and most-likely-state control under partial observation.

mod belief;
mod observation;

pub use belief::{belief_update, mls_decide, Belief};
pub use observation::{observation_index, observe, Observation, ObservationScheme, Observer, SpotField};

use rand_chacha::ChaCha8Rng;

use crate::dynamics::{StateId, TransitionModel};
use crate::optimizer::Policy;
use crate::topology::{count_taxiing, Decision, StateVector};

/// Releases one aircraft from the `turn` ramp when at most `th` aircraft taxi
/// and its spot is free.
pub fn threshold_decide(s: &StateVector, th: u32, turn: usize) -> Decision {
    if count_taxiing(s) <= th && !s.spot_occupied(turn) {
        Decision::single(turn)
    } else {
        Decision::NONE
    }
}

/// The threshold rule as a stationary policy over the model's states, using
/// each state's own turn field.
pub fn threshold_policy(model: &TransitionModel, th: u32) -> Policy {
    let decisions: Vec<Decision> = (0..model.num_states() as StateId)
        .map(|i| {
            let s = model.state_vector(i);
            threshold_decide(&s, th, s.turn as usize)
        })
        .collect();
    Policy::deterministic(&decisions)
}

/// A decision maker driven by the closed-loop simulator.
pub trait Controller {
    fn reset(&mut self, model: &TransitionModel, start: StateId);

    /// Chooses a decision; `state` is the true state, which partially
    /// informed controllers must not read.
    fn decide(&mut self, model: &TransitionModel, state: StateId, rng: &mut ChaCha8Rng) -> Decision;

    /// Reports the decision actually executed and the resulting state.
    fn after_step(&mut self, model: &TransitionModel, executed: Decision, next: StateId);
}

/// Applies a stationary policy to the true state.
#[derive(Clone, Debug)]
pub struct PolicyController {
    policy: Policy,
}

impl PolicyController {
    pub fn new(policy: Policy) -> Self {
        PolicyController { policy }
    }
}

impl Controller for PolicyController {
    fn reset(&mut self, _: &TransitionModel, _: StateId) {}

    fn decide(&mut self, _: &TransitionModel, state: StateId, rng: &mut ChaCha8Rng) -> Decision {
        self.policy.sample(state, rng)
    }

    fn after_step(&mut self, _: &TransitionModel, _: Decision, _: StateId) {}
}

#[derive(Clone, Copy, Debug)]
pub struct ThresholdController {
    pub threshold: u32,
}

impl Controller for ThresholdController {
    fn reset(&mut self, _: &TransitionModel, _: StateId) {}

    fn decide(&mut self, model: &TransitionModel, state: StateId, _: &mut ChaCha8Rng) -> Decision {
        let s = model.state_vector(state);
        threshold_decide(&s, self.threshold, s.turn as usize)
    }

    fn after_step(&mut self, _: &TransitionModel, _: Decision, _: StateId) {}
}

/// Filter diagnostics accumulated by [`MlsController`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MlsStats {
    pub updates: u64,
    pub resets: u64,
    /// Steps whose true state had zero belief mass after the update.
    pub truth_excluded: u64,
    pub max_normalization_error: f64,
    /// Running sum of the belief mass on the true state.
    pub truth_mass_sum: f64,
    /// Steps where the estimated state was the true state.
    pub argmax_hits: u64,
}

impl MlsStats {
    pub fn mean_truth_mass(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.truth_mass_sum / self.updates as f64
        }
    }
}

/// Most-likely-state controller: tracks a belief from observations and plays
/// the full-state policy at its argmax.
#[derive(Clone, Debug)]
pub struct MlsController<'a> {
    policy: &'a Policy,
    observer: &'a Observer,
    belief: Belief,
    stats: MlsStats,
}

impl<'a> MlsController<'a> {
    pub fn new(policy: &'a Policy, observer: &'a Observer) -> Self {
        MlsController {
            policy,
            observer,
            belief: Belief::point(0),
            stats: MlsStats::default(),
        }
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn stats(&self) -> MlsStats {
        self.stats
    }
}

impl Controller for MlsController<'_> {
    fn reset(&mut self, _: &TransitionModel, start: StateId) {
        self.belief = Belief::point(start);
        self.stats = MlsStats::default();
    }

    fn decide(&mut self, _: &TransitionModel, _: StateId, rng: &mut ChaCha8Rng) -> Decision {
        mls_decide(&self.belief, self.policy, rng)
    }

    fn after_step(&mut self, model: &TransitionModel, executed: Decision, next: StateId) {
        let o = self.observer.index_of(next);
        self.belief = match belief::update_with_index(&self.belief, executed, o, model, self.observer) {
            Ok(b) => b,
            Err(_) => {
                self.stats.resets += 1;
                Belief::uniform(self.observer.consistent(o))
            }
        };
        let truth = self.belief.mass(next);
        self.stats.updates += 1;
        self.stats.truth_mass_sum += truth;
        if truth == 0.0 {
            self.stats.truth_excluded += 1;
        }
        if self.belief.argmax() == next {
            self.stats.argmax_hits += 1;
        }
        let err = (self.belief.total() - 1.0).abs();
        self.stats.max_normalization_error = self.stats.max_normalization_error.max(err);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let s = StateVector { spots: 0, cells: 0b11111, buffer: 0, turn: 0 };
        assert_eq!(threshold_decide(&s, 4, 0), Decision::NONE);
        let s = StateVector { spots: 0, cells: 0b1111, buffer: 0, turn: 1 };
        assert_eq!(threshold_decide(&s, 4, 1), Decision::single(1));
        let s = StateVector { spots: 0b10, cells: 0b11, buffer: 0, turn: 1 };
        assert_eq!(threshold_decide(&s, 4, 1), Decision::NONE);
    }
}
