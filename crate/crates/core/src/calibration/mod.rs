//! Model parameters from operational statistics.
//!
//! The take-off process, the taxiway motion and the buffer size each have a
//! closed-form calibration rule; [`ingest_ops_records`] produces the input
//! statistics from flight and surface-count records.

mod ingest;
mod shift;

pub use ingest::{ingest_ops_records, ingest_ops_readers, CurvePoint, IngestOptions, OpsStatistics, RampTaxiStats, RowDiagnostic};
pub use shift::align_saturation_shift;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A mean and standard deviation, in minutes unless noted otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn new(mean: f64, std: f64) -> Self {
        MeanStd { mean, std }
    }
}

impl From<(f64, f64)> for MeanStd {
    fn from((mean, std): (f64, f64)) -> Self {
        MeanStd { mean, std }
    }
}

/// Bernoulli parameters `(c1, c2)`, `c1 >= c2`, whose sum has the given mean
/// and standard deviation (aircraft per step).
pub fn solve_bernoulli_pair(mean: f64, std: f64) -> Result<(f64, f64)> {
    if !(0.0..=2.0).contains(&mean) || !(std >= 0.0) {
        return Err(Error::InfeasibleStatistics(format!(
            "take-off mean {mean} must lie in [0, 2] and std {std} must be nonnegative"
        )));
    }
    // c1 + c2 = mean and c1^2 + c2^2 = mean - std^2.
    let var = std * std;
    let disc = 2.0 * mean - mean * mean - 2.0 * var;
    let min_var = if mean <= 1.0 { mean * (1.0 - mean) } else { (mean - 1.0) * (2.0 - mean) };
    let max_var = (2.0 * mean - mean * mean) / 2.0;
    let tol = 1e-12;
    if disc < -tol || var < min_var - tol {
        return Err(Error::InfeasibleStatistics(format!(
            "std {std} cannot be produced by two Bernoulli clearances with mean {mean}; feasible std range is [{:.6}, {:.6}]",
            min_var.max(0.0).sqrt(),
            max_var.max(0.0).sqrt()
        )));
    }
    let root = disc.max(0.0).sqrt();
    let c1 = ((mean + root) / 2.0).min(1.0);
    let c2 = (mean - c1).max(0.0);
    Ok((c1, c2))
}

/// Taxi time on the movement area: taxi-out statistics minus pushback and
/// take-off clearance wait, subtracting variances of independent components.
pub fn derive_ama_taxi_stats(taxiout: MeanStd, pushback: MeanStd, clearance: MeanStd) -> Result<MeanStd> {
    let var = taxiout.std.powi(2) - pushback.std.powi(2) - clearance.std.powi(2);
    if var < 0.0 {
        return Err(Error::InfeasibleStatistics(format!(
            "taxi-out variance {:.4} is smaller than pushback plus clearance variance {:.4}",
            taxiout.std.powi(2),
            pushback.std.powi(2) + clearance.std.powi(2)
        )));
    }
    Ok(MeanStd {
        mean: taxiout.mean - pushback.mean - clearance.mean,
        std: var.sqrt(),
    })
}

/// Taxiway calibration result for one ramp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaxiwayFit {
    /// Moves from spot to buffer after rounding.
    pub steps: u32,
    /// Forward-move probability matching the mean exactly for `steps`.
    pub m: f64,
    /// Real-valued solution before rounding.
    pub steps_exact: f64,
    pub m_exact: f64,
}

/// Solves `mean = N/m * Ts` and `std = N/m * sqrt((1-m)/N) * Ts`, rounds `N`
/// to the nearest integer and recomputes `m = N * Ts / mean`.
pub fn solve_taxiway_params(ama_mean: f64, ama_std: f64, ts_minutes: f64) -> Result<TaxiwayFit> {
    if !(ama_mean > 0.0) || !(ama_std >= 0.0) || ama_std >= ama_mean || !(ts_minutes > 0.0) {
        return Err(Error::InfeasibleStatistics(format!(
            "taxi statistics need 0 <= std < mean and a positive sampling time (mean {ama_mean}, std {ama_std}, Ts {ts_minutes})"
        )));
    }
    let a = ama_mean / ts_minutes;
    let s2 = (ama_std / ts_minutes).powi(2);
    let m_exact = a / (s2 + a);
    let steps_exact = m_exact * a;
    let steps = steps_exact.round().max(1.0) as u32;
    let m = f64::from(steps) * ts_minutes / ama_mean;
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::InfeasibleStatistics(format!(
            "rounded fit N = {steps} gives m = {m:.4}, outside (0, 1]"
        )));
    }
    Ok(TaxiwayFit { steps, m, steps_exact, m_exact })
}

/// Path length of a further ramp sharing an already calibrated `m`.
pub fn steps_for_mean(ama_mean: f64, m: f64, ts_minutes: f64) -> u32 {
    (ama_mean * m / ts_minutes).round().max(1.0) as u32
}

/// Buffer large enough to feed the runway for three standard deviations of
/// the combined taxi and clearance-wait uncertainty.
pub fn size_runway_buffer(ama_std: f64, clearance_std: f64, takeoff_rate: f64) -> Result<u32> {
    if !(takeoff_rate > 0.0) {
        return Err(Error::InfeasibleStatistics(format!("take-off rate {takeoff_rate} must be positive")));
    }
    let cover = 3.0 * ama_std.hypot(clearance_std);
    Ok((cover / takeoff_rate).round() as u32)
}

/// Inputs of the full calibration chain that do not come from the records.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CalibrationInputs {
    pub pushback: MeanStd,
    /// Standard deviation of the wait for take-off clearance, in minutes.
    pub clearance_wait_std: f64,
    pub ts_seconds: f64,
    pub ls_meters: f64,
}

impl Default for CalibrationInputs {
    fn default() -> Self {
        CalibrationInputs {
            pushback: MeanStd::new(2.0, 1.33),
            clearance_wait_std: 1.04,
            ts_seconds: 60.0,
            ls_meters: 200.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RampCalibration {
    pub ramp_id: String,
    pub ama: MeanStd,
    pub path_length: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(rename = "L_s")]
    pub ls_meters: f64,
    #[serde(rename = "T_s")]
    pub ts_seconds: f64,
    pub m: f64,
    pub c1: f64,
    pub c2: f64,
    pub buffer_capacity: u32,
    pub ramps: Vec<RampCalibration>,
}

/// Runs every calibration rule. The first ramp sets `m`; the others reuse it.
pub fn calibrate(stats: &OpsStatistics, inputs: &CalibrationInputs) -> Result<Calibration> {
    let ts = inputs.ts_seconds / 60.0;
    let (c1, c2) = solve_bernoulli_pair(stats.takeoff_rate_mean * ts, stats.takeoff_rate_std * ts)?;
    let first = stats
        .ramps
        .first()
        .ok_or_else(|| Error::InfeasibleStatistics("no light-traffic flights for any ramp".into()))?;
    let clearance = MeanStd::new(1.0 / stats.takeoff_rate_mean, inputs.clearance_wait_std);
    let ama_first = derive_ama_taxi_stats(first.taxi_out, inputs.pushback, clearance)?;
    let fit = solve_taxiway_params(ama_first.mean, ama_first.std, ts)?;
    let buffer_capacity = size_runway_buffer(ama_first.std, clearance.std, stats.takeoff_rate_mean)?;
    if buffer_capacity < 1 {
        return Err(Error::InfeasibleStatistics("calibrated buffer capacity is zero".into()));
    }
    let mut ramps = Vec::new();
    for r in &stats.ramps {
        let ama = derive_ama_taxi_stats(r.taxi_out, inputs.pushback, clearance)?;
        ramps.push(RampCalibration {
            ramp_id: r.ramp_id.clone(),
            ama,
            path_length: steps_for_mean(ama.mean, fit.m, ts),
        });
    }
    Ok(Calibration {
        ls_meters: inputs.ls_meters,
        ts_seconds: inputs.ts_seconds,
        m: fit.m,
        c1,
        c2,
        buffer_capacity,
        ramps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn laguardia_clearance_pair() {
        let (c1, c2) = solve_bernoulli_pair(0.605, 0.578).unwrap();
        assert!((c1 - 0.5140).abs() <= 5e-3 && (c2 - 0.0929).abs() <= 5e-3, "{c1} {c2}");
    }

    #[test]
    fn deterministic_clearance_pair() {
        let (c1, c2) = solve_bernoulli_pair(1.0, 0.0).unwrap();
        assert!((c1 - 1.0).abs() < 1e-12 && c2.abs() < 1e-12);
    }

    #[test]
    fn seattle_clearance_pair() {
        let (c1, c2) = solve_bernoulli_pair(0.712, 0.603).unwrap();
        assert!((c1 - 0.5739).abs() <= 1e-4 && (c2 - 0.1381).abs() <= 1e-4, "{c1} {c2}");
    }

    #[test]
    fn infeasible_pair_reports_range() {
        let err = solve_bernoulli_pair(0.605, 0.9).unwrap_err().to_string();
        assert!(err.contains("feasible std range"), "{err}");
        assert!(solve_bernoulli_pair(0.5, 0.1).is_err());
    }

    #[test]
    fn ama_stats() {
        let r = derive_ama_taxi_stats((13.56, 2.00).into(), (2.0, 1.33).into(), (1.65, 1.04).into()).unwrap();
        assert!((r.mean - 9.91).abs() <= 0.01 && (r.std - 1.07).abs() <= 0.01);
        let r = derive_ama_taxi_stats((10.0, 1.0).into(), (0.0, 0.0).into(), (0.0, 0.0).into()).unwrap();
        assert_eq!((r.mean, r.std), (10.0, 1.0));
        let r = derive_ama_taxi_stats((8.0, 2.0).into(), (1.0, 1.0).into(), (1.0, 1.0).into()).unwrap();
        assert!((r.mean - 6.0).abs() < 1e-12 && (r.std - 1.4142).abs() <= 1e-4);
        assert!(derive_ama_taxi_stats((8.0, 1.0).into(), (1.0, 1.0).into(), (1.0, 1.0).into()).is_err());
    }

    #[test]
    fn taxiway_fit() {
        let fit = solve_taxiway_params(9.91, 1.07, 1.0).unwrap();
        assert_eq!(fit.steps, 9);
        assert!((fit.m - 0.9084).abs() <= 1e-3);
        assert!((fit.steps_exact - 8.88).abs() <= 0.02);
        assert!((fit.m_exact - 0.896).abs() <= 0.002);
        let fit = solve_taxiway_params(5.0, 1e-9, 1.0).unwrap();
        assert_eq!(fit.steps, 5);
        assert!((fit.m - 1.0).abs() < 1e-12);
        assert!(solve_taxiway_params(5.0, 6.0, 1.0).is_err());
    }

    #[test]
    fn buffer_rule() {
        assert_eq!(size_runway_buffer(1.07, 1.04, 0.605).unwrap(), 7);
        assert_eq!(size_runway_buffer(0.0, 0.0, 0.5).unwrap(), 0);
        assert_eq!(size_runway_buffer(1.0, 1.0, 0.5).unwrap(), 8);
        assert!(size_runway_buffer(1.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn bernoulli_pair_roundtrip(c1 in 0.0f64..=1.0, c2 in 0.0f64..=1.0) {
            let (hi, lo) = if c1 >= c2 { (c1, c2) } else { (c2, c1) };
            let mean = hi + lo;
            let std = (hi * (1.0 - hi) + lo * (1.0 - lo)).sqrt();
            let (a, b) = solve_bernoulli_pair(mean, std).unwrap();
            prop_assert!(a >= b);
            prop_assert!((a + b - mean).abs() <= 1e-10);
            let back = (a * (1.0 - a) + b * (1.0 - b)).sqrt();
            prop_assert!((back * back - std * std).abs() <= 1e-10);
        }

        #[test]
        fn taxiway_fit_matches_mean(mean in 1.0f64..30.0, frac in 0.01f64..0.3) {
            let std = mean * frac;
            if let Ok(fit) = solve_taxiway_params(mean, std, 1.0) {
                prop_assert!((f64::from(fit.steps) / fit.m - mean).abs() <= 1e-10);
            }
        }

        #[test]
        fn ama_stats_invert_variance_sum(t in 0.0f64..5.0, p in 0.0f64..2.0, c in 0.0f64..2.0) {
            let total = MeanStd::new(20.0, (t * t + p * p + c * c).sqrt());
            let r = derive_ama_taxi_stats(total, MeanStd::new(2.0, p), MeanStd::new(1.5, c)).unwrap();
            prop_assert!((r.std - t).abs() <= 1e-9);
            prop_assert!((r.mean + 2.0 + 1.5 - 20.0).abs() <= 1e-12);
        }
    }
}
