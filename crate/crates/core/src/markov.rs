//! Closed-loop chains of a transition model under a fixed policy.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;

use crate::dynamics::{StateId, TransitionModel};
use crate::error::{Error, Result};
use crate::topology::Decision;

/// Chains at most this large are solved with a dense LU factorisation.
pub const DENSE_LIMIT: usize = 600;

const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 2_000_000;
const LAZY: f64 = 0.1;

/// Row-stochastic sparse matrix `P_ij = sum_k w(k | i) p(j | i, k)`.
#[derive(Clone, Debug)]
pub struct ClosedLoopChain {
    offsets: Vec<usize>,
    cols: Vec<StateId>,
    vals: Vec<f64>,
}

impl ClosedLoopChain {
    /// Builds the chain for a randomised policy given as per-state decision
    /// weights. Decisions infeasible in a state are executed as no-release.
    pub fn new<F>(model: &TransitionModel, weights: F) -> ClosedLoopChain
    where
        F: Fn(StateId) -> Vec<(Decision, f64)> + Sync,
    {
        let rows: Vec<Vec<(StateId, f64)>> = (0..model.num_states() as StateId)
            .into_par_iter()
            .map(|i| {
                let mut row: Vec<(StateId, f64)> = Vec::new();
                for (k, w) in weights(i) {
                    if w <= 0.0 {
                        continue;
                    }
                    let (next, prob) = model
                        .row_for(i, k)
                        .or_else(|| model.row_for(i, Decision::NONE))
                        .expect("no-release is always feasible");
                    row.extend(next.iter().zip(prob).map(|(&j, &q)| (j, w * q)));
                }
                row.sort_unstable_by_key(|e| e.0);
                row.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                row
            })
            .collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        offsets.push(0);
        for row in rows {
            for (j, q) in row {
                cols.push(j);
                vals.push(q);
            }
            offsets.push(cols.len());
        }
        ClosedLoopChain { offsets, cols, vals }
    }

    /// Chain of a deterministic policy.
    pub fn deterministic(model: &TransitionModel, decisions: &[Decision]) -> ClosedLoopChain {
        ClosedLoopChain::new(model, |i| vec![(decisions[i as usize], 1.0)])
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: StateId) -> (&[StateId], &[f64]) {
        let (lo, hi) = (self.offsets[i as usize], self.offsets[i as usize + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    fn reachable_from(&self, start: StateId) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![start];
        seen[start as usize] = true;
        while let Some(i) = stack.pop() {
            let (next, prob) = self.row(i);
            for (&j, &q) in next.iter().zip(prob) {
                if q > 0.0 && !seen[j as usize] {
                    seen[j as usize] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Closed communicating classes reachable from `start`, each sorted.
    pub fn recurrent_classes(&self, start: StateId) -> Vec<Vec<StateId>> {
        let seen = self.reachable_from(start);
        let nodes: Vec<StateId> = (0..self.num_states() as StateId).filter(|&i| seen[i as usize]).collect();
        let mut local = vec![u32::MAX; self.num_states()];
        for (n, &i) in nodes.iter().enumerate() {
            local[i as usize] = n as u32;
        }
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(nodes.len(), 0);
        for _ in &nodes {
            g.add_node(());
        }
        for &i in &nodes {
            let (next, prob) = self.row(i);
            for (&j, &q) in next.iter().zip(prob) {
                if q > 0.0 {
                    g.add_edge(local[i as usize].into(), local[j as usize].into(), ());
                }
            }
        }
        let mut classes = Vec::new();
        for scc in kosaraju_scc(&g) {
            let mut members: Vec<StateId> = scc.iter().map(|n| nodes[n.index()]).collect();
            members.sort_unstable();
            let closed = members.iter().all(|&i| {
                let (next, prob) = self.row(i);
                next.iter()
                    .zip(prob)
                    .all(|(j, &q)| q <= 0.0 || members.binary_search(j).is_ok())
            });
            if closed {
                classes.push(members);
            }
        }
        classes.sort();
        classes
    }

    /// Stationary distribution of the unique recurrent class reachable from
    /// `start`, as a vector over all states.
    pub fn stationary(&self, start: StateId) -> Result<Vec<f64>> {
        let classes = self.recurrent_classes(start);
        if classes.len() > 1 {
            return Err(Error::MultipleRecurrentClasses(classes[0][0] as u64, classes[1][0] as u64));
        }
        self.class_distribution(&classes[0])
    }

    /// Long-run occupation starting from `start`: the stationary laws of the
    /// reachable recurrent classes weighted by their absorption probabilities.
    pub fn long_run_from(&self, start: StateId) -> Result<Vec<f64>> {
        let classes = self.recurrent_classes(start);
        if classes.len() == 1 {
            return self.class_distribution(&classes[0]);
        }
        let absorb = self.absorption(start, &classes)?;
        let mut out = vec![0.0; self.num_states()];
        for (class, w) in classes.iter().zip(absorb) {
            let pi = self.class_distribution(class)?;
            for (o, p) in out.iter_mut().zip(pi) {
                *o += w * p;
            }
        }
        Ok(out)
    }

    fn absorption(&self, start: StateId, classes: &[Vec<StateId>]) -> Result<Vec<f64>> {
        let n = self.num_states();
        let mut label = vec![usize::MAX; n];
        for (c, class) in classes.iter().enumerate() {
            for &i in class {
                label[i as usize] = c;
            }
        }
        let mut mass = vec![0.0; n];
        mass[start as usize] = 1.0;
        let mut absorbed = vec![0.0; classes.len()];
        for _ in 0..POWER_MAX_ITER {
            let mut next = vec![0.0; n];
            let mut remaining = 0.0;
            for i in 0..n {
                let w = mass[i];
                if w == 0.0 {
                    continue;
                }
                if label[i] != usize::MAX {
                    absorbed[label[i]] += w;
                    continue;
                }
                let (cols, vals) = self.row(i as StateId);
                for (&j, &q) in cols.iter().zip(vals) {
                    next[j as usize] += w * q;
                }
                remaining += w;
            }
            mass = next;
            if remaining < POWER_TOL {
                return Ok(absorbed);
            }
        }
        Err(Error::SolverFailure {
            reason: "absorption probabilities did not converge".into(),
            residual: f64::NAN,
        })
    }

    fn class_distribution(&self, class: &[StateId]) -> Result<Vec<f64>> {
        let local = if class.len() <= DENSE_LIMIT {
            self.dense_stationary(class)?
        } else {
            self.power_stationary(class)?
        };
        let mut out = vec![0.0; self.num_states()];
        for (&i, p) in class.iter().zip(local) {
            out[i as usize] = p;
        }
        Ok(out)
    }

    fn dense_stationary(&self, class: &[StateId]) -> Result<Vec<f64>> {
        let n = class.len();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let pos = |j: StateId| class.binary_search(&j).expect("class is closed");
        // pi (P - I) = 0 with the last equation replaced by sum(pi) = 1.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (r, &i) in class.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &q) in cols.iter().zip(vals) {
                a[(pos(j), r)] += q;
            }
            a[(r, r)] -= 1.0;
        }
        for c in 0..n {
            a[(n - 1, c)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let x = a.lu().solve(&b).ok_or_else(|| Error::SolverFailure {
            reason: "singular stationary system".into(),
            residual: f64::NAN,
        })?;
        let mut pi: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= s);
        Ok(pi)
    }

    fn power_stationary(&self, class: &[StateId]) -> Result<Vec<f64>> {
        let n = class.len();
        let pos = |j: StateId| class.binary_search(&j).expect("class is closed");
        let local: Vec<Vec<(usize, f64)>> = class
            .iter()
            .map(|&i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &q)| (pos(j), q)).collect()
            })
            .collect();
        let mut x = vec![1.0 / n as f64; n];
        let mut change = f64::INFINITY;
        for _ in 0..POWER_MAX_ITER {
            let mut y: Vec<f64> = x.iter().map(|v| LAZY * v).collect();
            for (r, row) in local.iter().enumerate() {
                let w = (1.0 - LAZY) * x[r];
                for &(c, q) in row {
                    y[c] += w * q;
                }
            }
            let s: f64 = y.iter().sum();
            y.iter_mut().for_each(|v| *v /= s);
            change = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            x = y;
            if change < POWER_TOL {
                return Ok(x);
            }
        }
        Err(Error::SolverFailure {
            reason: "power iteration did not converge".into(),
            residual: change,
        })
    }

    /// `max_j |sum_i pi_i P_ij - pi_j|`.
    pub fn balance_residual(&self, pi: &[f64]) -> f64 {
        let mut flow = vec![0.0; self.num_states()];
        for (i, &w) in pi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i as StateId);
            for (&j, &q) in cols.iter().zip(vals) {
                flow[j as usize] += w * q;
            }
        }
        flow.iter().zip(pi).map(|(f, p)| (f - p).abs()).fold(0.0, f64::max)
    }
}
