//! Closed-loop performance: exact stationary analysis of Markov policies,
//! Monte Carlo simulation of any controller, sweeps and frontier comparison.

mod frontier;
mod sweep;

pub use frontier::{
    compare_frontiers, pareto_front, read_frontier_csv, FrontierTable, write_frontier_csv, write_reduction_csv, ReductionPoint,
    REDUCTION_SAMPLES,
};
pub use sweep::{
    model_throughput_curve, parse_grid, sweep, sweep_beta, sweep_mls, sweep_threshold, FrontierPoint, SweepKind, SweepRequest,
};

use serde::Serialize;

use crate::dynamics::{sample_step_unchecked, takeoff_probabilities, StateId, TransitionModel};
use crate::error::{Error, Result};
use crate::optimizer::Policy;
use crate::policies::Controller;
use crate::rng::stream;
use crate::topology::{count_taxiing, Decision};

/// Take-off statistics of the steps that start with a given taxiing count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountStats {
    pub count: u32,
    /// Fraction of steps spent at this count.
    pub weight: f64,
    /// Take-offs per minute.
    pub mean_rate: f64,
    pub rate_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub label: String,
    /// Beta or threshold of the policy that produced the report.
    pub param: f64,
    /// Take-offs per minute.
    pub avg_takeoff_rate: f64,
    pub avg_taxiing: f64,
    /// Standard deviation of the per-minute take-off count.
    pub takeoff_rate_std: f64,
    /// Releases per minute, by ramp.
    pub ramp_release_rates: Vec<f64>,
    /// Batch-means standard errors; zero for exact reports.
    pub rate_stderr: f64,
    pub taxiing_stderr: f64,
    /// Expected cost per step reported by the optimizer, if any.
    pub objective: Option<f64>,
    pub exact: bool,
    pub steps: u64,
    pub warmup: u64,
    pub seed: Option<u64>,
    /// Steps where the controller chose a decision infeasible in the true state.
    pub mismatches: u64,
    pub by_count: Vec<CountStats>,
}

impl MetricsReport {
    /// Pooled take-off rate mean and std over steps starting with at least
    /// `min_count` taxiing aircraft, with the fraction of such steps.
    pub fn saturated(&self, min_count: u32) -> (f64, f64, f64) {
        let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for c in self.by_count.iter().filter(|c| c.count >= min_count) {
            w += c.weight;
            m1 += c.weight * c.mean_rate;
            m2 += c.weight * (c.rate_std * c.rate_std + c.mean_rate * c.mean_rate);
        }
        if w == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let mean = m1 / w;
        (w, mean, (m2 / w - mean * mean).max(0.0).sqrt())
    }
}

#[derive(Default)]
struct CountAcc {
    w: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
}

impl CountAcc {
    fn add(&mut self, n: u32, w: f64, d1: f64, d2: f64) {
        let n = n as usize;
        if self.w.len() <= n {
            self.w.resize(n + 1, 0.0);
            self.m1.resize(n + 1, 0.0);
            self.m2.resize(n + 1, 0.0);
        }
        self.w[n] += w;
        self.m1[n] += w * d1;
        self.m2[n] += w * d2;
    }

    fn finish(self, total: f64, minutes: f64) -> Vec<CountStats> {
        (0..self.w.len())
            .filter(|&n| self.w[n] > 0.0)
            .map(|n| {
                let mean = self.m1[n] / self.w[n];
                let var = (self.m2[n] / self.w[n] - mean * mean).max(0.0);
                CountStats {
                    count: n as u32,
                    weight: self.w[n] / total,
                    mean_rate: mean / minutes,
                    rate_std: var.sqrt() / minutes,
                }
            })
            .collect()
    }
}

/// Exact stationary metrics of a Markov policy started from the empty airport.
pub fn stationary_metrics(model: &TransitionModel, policy: &Policy) -> Result<MetricsReport> {
    let chain = policy.chain(model);
    let pi = chain.stationary(model.empty_state_id())?;
    let p = model.params();
    let minutes = p.ts_minutes();
    let ramps = model.topology().num_ramps();
    let (mut e1, mut e2, mut taxiing) = (0.0, 0.0, 0.0);
    let mut releases = vec![0.0; ramps];
    let mut acc = CountAcc::default();
    for (i, &w) in pi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let s = model.state_vector(i as StateId);
        let (p1, p2) = takeoff_probabilities(s.buffer, p);
        let (d1, d2) = (p1 + 2.0 * p2, p1 + 4.0 * p2);
        e1 += w * d1;
        e2 += w * d2;
        let n = count_taxiing(&s);
        taxiing += w * f64::from(n);
        acc.add(n, w, d1, d2);
        for &(k, q) in policy.rule(i as StateId) {
            let k = if model.row_for(i as StateId, k).is_some() { k } else { Decision::NONE };
            for (r, rel) in releases.iter_mut().enumerate() {
                if k.releases(r) {
                    *rel += w * q;
                }
            }
        }
    }
    Ok(MetricsReport {
        label: "exact".into(),
        param: f64::NAN,
        avg_takeoff_rate: e1 / minutes,
        avg_taxiing: taxiing,
        takeoff_rate_std: (e2 - e1 * e1).max(0.0).sqrt() / minutes,
        ramp_release_rates: releases.into_iter().map(|r| r / minutes).collect(),
        rate_stderr: 0.0,
        taxiing_stderr: 0.0,
        objective: None,
        exact: true,
        steps: 0,
        warmup: 0,
        seed: None,
        mismatches: 0,
        by_count: acc.finish(1.0, minutes),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimOptions {
    /// Total steps, warmup included.
    pub steps: u64,
    pub warmup: u64,
    pub seed: u64,
    pub batches: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { steps: 1_010_000, warmup: 10_000, seed: 0, batches: 100 }
    }
}

fn mean_and_stderr(batches: &[f64]) -> f64 {
    let n = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / n;
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Runs `controller` in closed loop from the empty airport. Dynamics and
/// controller draw from separate streams of `opts.seed`, so controllers
/// compared under one seed see the same clearance and motion draws.
pub fn simulate<C: Controller + ?Sized>(controller: &mut C, model: &TransitionModel, opts: &SimOptions) -> Result<MetricsReport> {
    if opts.steps <= opts.warmup || opts.batches < 2 || opts.steps - opts.warmup < opts.batches {
        return Err(Error::Parameter(format!(
            "need steps > warmup and at least one measured step in each of 2 or more batches, got {} steps, {} warmup, {} batches",
            opts.steps, opts.warmup, opts.batches
        )));
    }
    let measured_steps = opts.steps - opts.warmup;
    let t = model.topology();
    let p = model.params();
    let minutes = p.ts_minutes();
    let mut dyn_rng = stream(opts.seed, "dynamics");
    let mut ctl_rng = stream(opts.seed, "controller");
    let mut s = model.empty_state_id();
    controller.reset(model, s);

    let ramps = t.num_ramps();
    let mut releases = vec![0u64; ramps];
    let (mut sum_d, mut sum_d2, mut sum_n) = (0u64, 0u64, 0u64);
    let mut batch_d = vec![0.0; opts.batches as usize];
    let mut batch_n = vec![0.0; opts.batches as usize];
    let mut acc = CountAcc::default();
    let mut mismatches = 0;
    for step in 0..opts.steps {
        let mut k = controller.decide(model, s, &mut ctl_rng);
        let measured = step >= opts.warmup;
        if model.row_for(s, k).is_none() {
            k = Decision::NONE;
            if measured {
                mismatches += 1;
            }
        }
        let sv = model.state_vector(s);
        let (next, d) = sample_step_unchecked(&sv, k, t, p, &mut dyn_rng);
        let id = model
            .state_id(t.encode_unchecked(&next))
            .ok_or_else(|| Error::Structural("simulation left the model's state set".into()))?;
        if measured {
            let n = count_taxiing(&sv);
            let b = ((step - opts.warmup) * opts.batches / measured_steps) as usize;
            sum_d += u64::from(d);
            sum_d2 += u64::from(d * d);
            sum_n += u64::from(n);
            batch_d[b] += f64::from(d);
            batch_n[b] += f64::from(n);
            acc.add(n, 1.0, f64::from(d), f64::from(d * d));
            for (r, rel) in releases.iter_mut().enumerate() {
                if k.releases(r) {
                    *rel += 1;
                }
            }
        }
        controller.after_step(model, k, id);
        s = id;
    }
    let steps = measured_steps as f64;
    for b in 0..opts.batches as usize {
        let size = ((b as u64 + 1) * measured_steps).div_ceil(opts.batches) - (b as u64 * measured_steps).div_ceil(opts.batches);
        batch_d[b] /= size as f64;
        batch_n[b] /= size as f64;
    }
    let e1 = sum_d as f64 / steps;
    let e2 = sum_d2 as f64 / steps;
    Ok(MetricsReport {
        label: "simulated".into(),
        param: f64::NAN,
        avg_takeoff_rate: e1 / minutes,
        avg_taxiing: sum_n as f64 / steps,
        takeoff_rate_std: (e2 - e1 * e1).max(0.0).sqrt() / minutes,
        ramp_release_rates: releases.iter().map(|&r| r as f64 / steps / minutes).collect(),
        rate_stderr: mean_and_stderr(&batch_d) / minutes,
        taxiing_stderr: mean_and_stderr(&batch_n),
        objective: None,
        exact: false,
        steps: opts.steps,
        warmup: opts.warmup,
        seed: Some(opts.seed),
        mismatches,
        by_count: acc.finish(steps, minutes),
    })
}
