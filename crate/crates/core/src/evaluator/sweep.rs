use rayon::prelude::*;
use serde::Serialize;

use super::{simulate, stationary_metrics, MetricsReport, SimOptions};
use crate::dynamics::TransitionModel;
use crate::error::{Error, Result};
use crate::optimizer::{build_cost_vector, extract_policy, solve_average_cost_with, Policy, SolveOptions};
use crate::policies::{threshold_policy, MlsController, Observer, PolicyController};
use crate::topology::FairnessMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Full-state optimal policies over a grid of beta.
    Beta,
    /// Threshold policies over integer thresholds.
    Threshold,
    /// Most-likely-state control with the beta-indexed full-state policies.
    Mls,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Beta => "beta",
            SweepKind::Threshold => "threshold",
            SweepKind::Mls => "mls",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(SweepKind::Beta),
            "threshold" => Ok(SweepKind::Threshold),
            "mls" => Ok(SweepKind::Mls),
            other => Err(Error::Parse(format!("unknown sweep kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepRequest<'a> {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    /// Statistical fairness adds the equal-release constraint to beta and
    /// MLS sweeps; alternation is carried by the model itself.
    pub fairness: FairnessMode,
    /// Required for MLS sweeps.
    pub observer: Option<&'a Observer>,
    pub sim: SimOptions,
    pub solve: SolveOptions,
    /// Simulate Markov policies instead of analysing them exactly.
    pub simulate_markov: bool,
}

impl<'a> SweepRequest<'a> {
    pub fn new(kind: SweepKind, grid: Vec<f64>) -> Self {
        SweepRequest {
            kind,
            grid,
            fairness: FairnessMode::None,
            observer: None,
            sim: SimOptions::default(),
            solve: SolveOptions::default(),
            simulate_markov: false,
        }
    }
}

/// One row of a frontier table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub kind: String,
    pub param: f64,
    pub report: MetricsReport,
    /// `ok`, `simulated` when exact analysis was replaced by simulation, or
    /// `failed: <reason>`.
    pub status: String,
}

impl FrontierPoint {
    pub fn is_ok(&self) -> bool {
        !self.status.starts_with("failed")
    }
}

pub(crate) fn failed_report(ramps: usize) -> MetricsReport {
    MetricsReport {
        label: "failed".into(),
        param: f64::NAN,
        avg_takeoff_rate: f64::NAN,
        avg_taxiing: f64::NAN,
        takeoff_rate_std: f64::NAN,
        ramp_release_rates: vec![f64::NAN; ramps],
        rate_stderr: f64::NAN,
        taxiing_stderr: f64::NAN,
        objective: None,
        exact: false,
        steps: 0,
        warmup: 0,
        seed: None,
        mismatches: 0,
        by_count: Vec::new(),
    }
}

fn evaluate_markov(model: &TransitionModel, policy: Policy, req: &SweepRequest) -> Result<(MetricsReport, &'static str)> {
    if req.simulate_markov {
        return Ok((simulate(&mut PolicyController::new(policy), model, &req.sim)?, "ok"));
    }
    match stationary_metrics(model, &policy) {
        Ok(r) => Ok((r, "ok")),
        Err(Error::MultipleRecurrentClasses(a, b)) => {
            log::warn!("closed loop has recurrent classes through states {a} and {b}; simulating from the empty state");
            Ok((simulate(&mut PolicyController::new(policy), model, &req.sim)?, "simulated"))
        }
        Err(e) => Err(e),
    }
}

fn optimal_policy(model: &TransitionModel, beta: f64, req: &SweepRequest) -> Result<(Policy, f64)> {
    let cost = build_cost_vector(model, beta)?;
    let sol = solve_average_cost_with(model, &cost, req.fairness, &req.solve)?;
    Ok((extract_policy(&sol, model), sol.objective))
}

fn threshold_of(param: f64) -> Result<u32> {
    if param >= 0.0 && param.fract() == 0.0 && param <= f64::from(u32::MAX) {
        Ok(param as u32)
    } else {
        Err(Error::Parameter(format!("threshold {param} is not a nonnegative integer")))
    }
}

fn point(model: &TransitionModel, param: f64, req: &SweepRequest) -> Result<(MetricsReport, &'static str)> {
    match req.kind {
        SweepKind::Threshold => evaluate_markov(model, threshold_policy(model, threshold_of(param)?), req),
        SweepKind::Beta => {
            let (policy, objective) = optimal_policy(model, param, req)?;
            let (mut r, status) = evaluate_markov(model, policy, req)?;
            r.objective = Some(objective);
            Ok((r, status))
        }
        SweepKind::Mls => {
            let observer = req
                .observer
                .ok_or_else(|| Error::Parameter("an MLS sweep needs an observation scheme".into()))?;
            let (policy, objective) = optimal_policy(model, param, req)?;
            let mut ctl = MlsController::new(&policy, observer);
            let mut r = simulate(&mut ctl, model, &req.sim)?;
            r.objective = Some(objective);
            let stats = ctl.stats();
            log::info!(
                "mls beta {param}: {} resets, mean truth mass {:.3}, argmax hit rate {:.3}",
                stats.resets,
                stats.mean_truth_mass(),
                stats.argmax_hits as f64 / stats.updates.max(1) as f64
            );
            Ok((r, "ok"))
        }
    }
}

/// Evaluates every grid point in parallel; a failing point is flagged in its
/// row and the sweep carries on. Rows follow grid order.
pub fn sweep(model: &TransitionModel, req: &SweepRequest) -> Result<Vec<FrontierPoint>> {
    if req.grid.is_empty() {
        return Err(Error::Parameter("sweep grid is empty".into()));
    }
    let kind = req.kind.name();
    Ok(req
        .grid
        .par_iter()
        .map(|&param| {
            let (mut report, status) = match point(model, param, req) {
                Ok((r, s)) => (r, s.to_string()),
                Err(e) => {
                    log::warn!("{kind} point {param} failed: {e}");
                    (failed_report(model.topology().num_ramps()), format!("failed: {e}"))
                }
            };
            report.label = kind.to_string();
            report.param = param;
            FrontierPoint { kind: kind.to_string(), param, report, status }
        })
        .collect())
}

pub fn sweep_beta(model: &TransitionModel, betas: &[f64], fairness: FairnessMode) -> Result<Vec<FrontierPoint>> {
    let mut req = SweepRequest::new(SweepKind::Beta, betas.to_vec());
    req.fairness = fairness;
    sweep(model, &req)
}

pub fn sweep_threshold(model: &TransitionModel, thresholds: &[u32]) -> Result<Vec<FrontierPoint>> {
    let grid = thresholds.iter().map(|&t| f64::from(t)).collect();
    sweep(model, &SweepRequest::new(SweepKind::Threshold, grid))
}

pub fn sweep_mls(
    model: &TransitionModel,
    betas: &[f64],
    fairness: FairnessMode,
    observer: &Observer,
    sim: SimOptions,
) -> Result<Vec<FrontierPoint>> {
    let mut req = SweepRequest::new(SweepKind::Mls, betas.to_vec());
    req.fairness = fairness;
    req.observer = Some(observer);
    req.sim = sim;
    sweep(model, &req)
}

/// Parses `log:lo:hi:n` (geometric), `lin:lo:hi:n` (arithmetic), both with
/// endpoints included, or an explicit comma-separated list. Segments joined
/// by `+` are merged into one sorted grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    if spec.contains('+') {
        let mut grid = Vec::new();
        for part in spec.split('+') {
            grid.extend(parse_grid(part)?);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        return Ok(grid);
    }
    let bad = || Error::Parse(format!("bad grid `{spec}`: expected log:lo:hi:n, lin:lo:hi:n or a comma list"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [kind @ ("log" | "lin"), lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 || lo > hi || (*kind == "log" && lo <= 0.0) {
                return Err(bad());
            }
            let at = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            (0..n)
                .map(|i| match *kind {
                    "log" => (lo.ln() + (hi.ln() - lo.ln()) * at(i)).exp(),
                    _ => lo + (hi - lo) * at(i),
                })
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<f64>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

/// Mean take-off rate per taxiing count, pooled over reports by the time
/// each spends at that count.
pub fn model_throughput_curve(reports: &[MetricsReport]) -> Vec<(u32, f64)> {
    let mut acc: std::collections::BTreeMap<u32, (f64, f64)> = Default::default();
    for r in reports {
        for c in &r.by_count {
            let e = acc.entry(c.count).or_default();
            e.0 += c.weight;
            e.1 += c.weight * c.mean_rate;
        }
    }
    acc.into_iter().filter(|(_, (w, _))| *w > 0.0).map(|(n, (w, m))| (n, m / w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_transition_model, BuildOptions};
    use crate::topology::{AirportTopology, ModelParams};

    fn toy() -> TransitionModel {
        let t = AirportTopology::main_line(3, &[Some(0)], 2, FairnessMode::None).unwrap();
        let p = ModelParams { ls_meters: 200.0, ts_seconds: 60.0, m: 0.8, c1: 0.5, c2: 0.1 };
        build_transition_model(&t, &p, BuildOptions::default()).unwrap()
    }

    #[test]
    fn single_point_grid() {
        let rows = sweep_threshold(&toy(), &[2]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, "ok");
    }

    #[test]
    fn bad_points_are_flagged() {
        let model = toy();
        let rows = sweep(&model, &SweepRequest::new(SweepKind::Threshold, vec![1.0, 1.5, 3.0])).unwrap();
        assert!(rows[0].is_ok() && !rows[1].is_ok() && rows[2].is_ok());
        assert!(sweep(&model, &SweepRequest::new(SweepKind::Beta, vec![])).is_err());
        let mls = sweep(&model, &SweepRequest::new(SweepKind::Mls, vec![1.0])).unwrap();
        assert!(!mls[0].is_ok());
    }

    #[test]
    fn beta_frontier_is_monotone() {
        let rows = sweep_beta(&toy(), &[0.5, 2.0, 10.0, 100.0], FairnessMode::None).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].report.avg_takeoff_rate >= w[0].report.avg_takeoff_rate - 1e-12);
            assert!(w[1].report.avg_taxiing >= w[0].report.avg_taxiing - 1e-12);
        }
    }

    #[test]
    fn grid_grammar() {
        let g = parse_grid("log:0.1:100:4").unwrap();
        let want = [0.1, 1.0, 10.0, 100.0];
        assert!(g.iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-12 * b));
        assert_eq!(parse_grid("lin:1:10:10").unwrap(), (1..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(parse_grid("1,2.5, 4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert_eq!(parse_grid("lin:3:3:1").unwrap(), vec![3.0]);
        assert_eq!(parse_grid("lin:4:5:3+1,4.5,10").unwrap(), vec![1.0, 4.0, 4.5, 5.0, 10.0]);
        for bad in ["", "1+", "log:0:1:3", "lin:2:1:3", "lin:1:2:0", "cubic:1:2:3", "1,,2", "a"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn pooled_curve_weights_by_occupancy() {
        let rows = sweep_threshold(&toy(), &[1, 3]).unwrap();
        let reports: Vec<MetricsReport> = rows.into_iter().map(|r| r.report).collect();
        let curve = model_throughput_curve(&reports);
        assert_eq!(curve[0], (0, 0.0));
        assert!(curve.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
