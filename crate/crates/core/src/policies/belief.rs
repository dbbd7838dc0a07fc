use rand::Rng;

use super::observation::{observation_index, Observation, Observer};
use crate::dynamics::{StateId, TransitionModel};
use crate::error::{Error, Result};
use crate::optimizer::Policy;
use crate::topology::Decision;

/// Sparse probability vector over model states, sorted by state id.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    support: Vec<(StateId, f64)>,
}

impl Belief {
    pub fn point(id: StateId) -> Belief {
        Belief { support: vec![(id, 1.0)] }
    }

    pub fn uniform(ids: &[StateId]) -> Belief {
        let w = 1.0 / ids.len() as f64;
        let mut support: Vec<(StateId, f64)> = ids.iter().map(|&i| (i, w)).collect();
        support.sort_unstable_by_key(|e| e.0);
        Belief { support }
    }

    /// Normalises nonnegative weights; duplicates are summed.
    pub fn from_weights(mut weights: Vec<(StateId, f64)>) -> Result<Belief> {
        weights.retain(|e| e.1 > 0.0);
        weights.sort_unstable_by_key(|e| e.0);
        weights.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let total: f64 = weights.iter().map(|e| e.1).sum();
        if !(total > 0.0) {
            return Err(Error::Parameter("belief weights have no positive mass".into()));
        }
        weights.iter_mut().for_each(|e| e.1 /= total);
        Ok(Belief { support: weights })
    }

    pub fn support(&self) -> &[(StateId, f64)] {
        &self.support
    }

    pub fn mass(&self, id: StateId) -> f64 {
        self.support
            .binary_search_by_key(&id, |e| e.0)
            .map_or(0.0, |p| self.support[p].1)
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|e| e.1).sum()
    }

    /// Most likely state; ties go to the lowest id.
    pub fn argmax(&self) -> StateId {
        let mut best = self.support[0];
        for &e in &self.support[1..] {
            if e.1 > best.1 {
                best = e;
            }
        }
        best.0
    }
}

/// Bayes update with a deterministic observation: predict with decision `k`
/// (no-release for support states where `k` is infeasible), keep the states
/// that produce `o`, and normalise.
pub fn belief_update(b: &Belief, k: Decision, o: &Observation, model: &TransitionModel, observer: &Observer) -> Result<Belief> {
    let idx = observation_index(o, observer.scheme())?;
    update_with_index(b, k, idx, model, observer)
}

pub(crate) fn update_with_index(
    b: &Belief,
    k: Decision,
    o: u64,
    model: &TransitionModel,
    observer: &Observer,
) -> Result<Belief> {
    let mut next: Vec<(StateId, f64)> = Vec::new();
    for &(i, w) in &b.support {
        let (cols, prob) = model
            .row_for(i, k)
            .or_else(|| model.row_for(i, Decision::NONE))
            .expect("no-release is always feasible");
        for (&j, &q) in cols.iter().zip(prob) {
            if observer.index_of(j) == o {
                next.push((j, w * q));
            }
        }
    }
    let total: f64 = next.iter().map(|e| e.1).sum();
    if !(total > 0.0) {
        return Err(Error::BeliefReset(o));
    }
    next.sort_unstable_by_key(|e| e.0);
    next.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    next.iter_mut().for_each(|e| e.1 /= total);
    Ok(Belief { support: next })
}

/// Full-state policy decision at the most likely state.
pub fn mls_decide<R: Rng + ?Sized>(b: &Belief, policy: &Policy, rng: &mut R) -> Decision {
    policy.sample(b.argmax(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_transition_model, BuildOptions};
    use crate::policies::observation::{observe, ObservationScheme};
    use crate::topology::{AirportTopology, FairnessMode, ModelParams, StateVector};

    fn toy() -> (TransitionModel, Observer) {
        let t = AirportTopology::main_line(1, &[Some(0)], 1, FairnessMode::None).unwrap();
        let p = ModelParams { ls_meters: 200.0, ts_seconds: 60.0, m: 0.9, c1: 0.5, c2: 0.0 };
        let model = build_transition_model(&t, &p, BuildOptions::default()).unwrap();
        let scheme = ObservationScheme::count_and_ramp_free(&t).unwrap();
        let observer = Observer::new(&model, scheme).unwrap();
        (model, observer)
    }

    fn id(model: &TransitionModel, spot: u32, cell: u64, buffer: u32) -> StateId {
        let t = model.topology();
        let s = StateVector { spots: spot, cells: cell, buffer, turn: 0 };
        model.state_id(t.encode_state(&s).unwrap()).unwrap()
    }

    #[test]
    fn point_mass_follows_deterministic_move() {
        // m = 1 makes the spot aircraft's move certain.
        let t = AirportTopology::main_line(1, &[Some(0)], 1, FairnessMode::None).unwrap();
        let p = ModelParams { ls_meters: 200.0, ts_seconds: 60.0, m: 1.0, c1: 0.0, c2: 0.0 };
        let model = build_transition_model(&t, &p, BuildOptions::default()).unwrap();
        let observer = Observer::new(&model, ObservationScheme::count_and_ramp_free(&t).unwrap()).unwrap();
        let from = id(&model, 1, 0, 0);
        let to = id(&model, 0, 1, 0);
        let o = observe(&model.state_vector(to), observer.scheme());
        let b = belief_update(&Belief::point(from), Decision::NONE, &o, &model, &observer).unwrap();
        assert_eq!(b, Belief::point(to));
    }

    #[test]
    fn observation_selects_consistent_state() {
        let (model, observer) = toy();
        // Only the empty state yields a zero count, so all predicted mass lands there.
        let empty = id(&model, 0, 0, 0);
        let other = id(&model, 0, 0, 1);
        let b = Belief::uniform(&[empty, other]);
        let o = observe(&model.state_vector(empty), observer.scheme());
        let post = belief_update(&b, Decision::NONE, &o, &model, &observer).unwrap();
        assert_eq!(post, Belief::point(empty));
    }

    #[test]
    fn hand_computed_bayes_update() {
        let (model, observer) = toy();
        // Uniform over (0,1,0), (1,0,0), (0,0,1); no release; observe count 1 with the spot free.
        let a = id(&model, 0, 1, 0);
        let b_ = id(&model, 1, 0, 0);
        let c = id(&model, 0, 0, 1);
        let prior = Belief::uniform(&[a, b_, c]);
        let o = Observation(vec![1, 1]);
        let post = belief_update(&prior, Decision::NONE, &o, &model, &observer).unwrap();
        // Predicted mass on count-1, spot-free states:
        //   (0,0,1): a 0.9 + c 0.5 = 1.4;  (0,1,0): a 0.1 + b 0.9 = 1.0  (each times 1/3).
        let total = 1.4 + 1.0;
        assert!((post.mass(id(&model, 0, 0, 1)) - 1.4 / total).abs() < 1e-12);
        assert!((post.mass(id(&model, 0, 1, 0)) - 1.0 / total).abs() < 1e-12);
        assert!((post.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_observation_requests_reset() {
        let (model, observer) = toy();
        let b = Belief::point(id(&model, 0, 0, 0));
        let o = Observation(vec![2, 1]);
        assert!(matches!(
            belief_update(&b, Decision::NONE, &o, &model, &observer),
            Err(Error::BeliefReset(_))
        ));
    }

    #[test]
    fn argmax_prefers_lowest_id() {
        let b = Belief::uniform(&[7, 3]);
        assert_eq!(b.argmax(), 3);
        let policy = Policy::deterministic(&[Decision::NONE; 8]);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        assert_eq!(mls_decide(&Belief::point(2), &policy, &mut rng), Decision::NONE);
    }
}
