//! Flight and surface-count records to operational statistics.
//!
//! `flights.csv`: `flight_id,ramp_id,pushback_minute,wheels_off_minute`
//! `counts.csv`: `minute,n_taxiing,n_takeoffs`
//!
//! Header rows are required; lines starting with `#` are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MeanStd;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Minutes with at least this many taxiing aircraft count as saturated.
    pub saturation_threshold: u32,
    /// Flights pushing back when at most this many aircraft taxi are unimpeded.
    pub light_traffic_threshold: u32,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            saturation_threshold: 14,
            light_traffic_threshold: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampTaxiStats {
    pub ramp_id: String,
    /// Unimpeded taxi-out time (pushback to wheels-off), minutes.
    pub taxi_out: MeanStd,
    pub flights: usize,
}

/// Take-off rate distribution at one taxiing count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub count: u32,
    pub mean_rate: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub minutes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub file: String,
    pub line: u64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OpsStatistics {
    /// Take-offs per minute over saturated minutes.
    pub takeoff_rate_mean: f64,
    pub takeoff_rate_std: f64,
    pub saturated_minutes: usize,
    pub ramps: Vec<RampTaxiStats>,
    pub throughput_curve: Vec<CurvePoint>,
    pub diagnostics: Vec<RowDiagnostic>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct FlightRow {
    flight_id: String,
    ramp_id: String,
    pushback_minute: i64,
    wheels_off_minute: i64,
}

#[derive(Debug, Deserialize)]
struct CountRow {
    minute: i64,
    n_taxiing: u32,
    n_takeoffs: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(
    reader: R,
    file: &str,
    diagnostics: &mut Vec<RowDiagnostic>,
) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    rdr.headers()?;
    let mut out = Vec::new();
    for rec in rdr.deserialize::<T>() {
        match rec {
            Ok(row) => out.push(row),
            Err(e) => diagnostics.push(RowDiagnostic {
                file: file.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

fn mean_std(sorted: &[f64]) -> MeanStd {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = if sorted.len() > 1 {
        sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MeanStd::new(mean, var.sqrt())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn ingest_ops_records(flights_csv: &Path, counts_csv: &Path, opts: &IngestOptions) -> Result<OpsStatistics> {
    let flights = File::open(flights_csv).map_err(|e| Error::io(flights_csv, e))?;
    let counts = File::open(counts_csv).map_err(|e| Error::io(counts_csv, e))?;
    ingest_ops_readers(
        flights,
        &flights_csv.display().to_string(),
        counts,
        &counts_csv.display().to_string(),
        opts,
    )
}

/// Statistics are computed from sorted data, so they do not depend on row order.
pub fn ingest_ops_readers<F: Read, C: Read>(
    flights: F,
    flights_name: &str,
    counts: C,
    counts_name: &str,
    opts: &IngestOptions,
) -> Result<OpsStatistics> {
    let mut stats = OpsStatistics::default();
    let flight_rows: Vec<FlightRow> = read_rows(flights, flights_name, &mut stats.diagnostics)?;
    let count_rows: Vec<CountRow> = read_rows(counts, counts_name, &mut stats.diagnostics)?;

    let mut by_minute: HashMap<i64, u32> = HashMap::new();
    let mut saturated = Vec::new();
    let mut bins: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for row in &count_rows {
        if !(row.n_takeoffs >= 0.0) {
            stats.warnings.push(format!("minute {}: negative take-off count ignored", row.minute));
            continue;
        }
        let n = by_minute.entry(row.minute).or_insert(row.n_taxiing);
        *n = (*n).max(row.n_taxiing);
        if row.n_taxiing >= opts.saturation_threshold {
            saturated.push(row.n_takeoffs);
        }
        bins.entry(row.n_taxiing).or_default().push(row.n_takeoffs);
    }
    if saturated.is_empty() {
        stats.warnings.push(format!(
            "no minute reaches the saturation threshold of {} taxiing aircraft",
            opts.saturation_threshold
        ));
    } else {
        saturated.sort_by(f64::total_cmp);
        let ms = mean_std(&saturated);
        stats.takeoff_rate_mean = ms.mean;
        stats.takeoff_rate_std = ms.std;
        stats.saturated_minutes = saturated.len();
    }

    let max_count = bins.keys().next_back().copied().unwrap_or(0);
    for count in 0..=max_count {
        match bins.get_mut(&count) {
            Some(v) => {
                v.sort_by(f64::total_cmp);
                stats.throughput_curve.push(CurvePoint {
                    count,
                    mean_rate: v.iter().sum::<f64>() / v.len() as f64,
                    q1: quantile(v, 0.25),
                    median: quantile(v, 0.5),
                    q3: quantile(v, 0.75),
                    minutes: v.len(),
                });
            }
            None => stats.warnings.push(format!("no minutes with {count} taxiing aircraft; bin omitted")),
        }
    }

    let mut per_ramp: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for f in &flight_rows {
        let taxi = (f.wheels_off_minute - f.pushback_minute) as f64;
        if taxi < 0.0 {
            stats.warnings.push(format!("flight {}: wheels-off before pushback ignored", f.flight_id));
            continue;
        }
        match by_minute.get(&f.pushback_minute) {
            Some(&n) if n <= opts.light_traffic_threshold => {
                per_ramp.entry(f.ramp_id.clone()).or_default().push(taxi)
            }
            _ => {}
        }
    }
    for (ramp_id, mut times) in per_ramp {
        times.sort_by(f64::total_cmp);
        stats.ramps.push(RampTaxiStats {
            ramp_id,
            taxi_out: mean_std(&times),
            flights: times.len(),
        });
    }
    stats.warnings.sort();
    for d in &stats.diagnostics {
        log::warn!("{}:{}: {}", d.file, d.line, d.message);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FLIGHTS_HEADER: &str = "flight_id,ramp_id,pushback_minute,wheels_off_minute\n";

    fn ingest(flights: &str, counts: &str) -> OpsStatistics {
        ingest_ops_readers(flights.as_bytes(), "flights", counts.as_bytes(), "counts", &IngestOptions::default()).unwrap()
    }

    fn poisson(rng: &mut impl Rng, lambda: f64) -> u32 {
        let l = (-lambda).exp();
        let mut k = 0;
        let mut p = 1.0;
        loop {
            p *= rng.random::<f64>();
            if p <= l {
                return k;
            }
            k += 1;
        }
    }

    #[test]
    fn constant_rate_at_saturation() {
        let mut counts = String::from("minute,n_taxiing,n_takeoffs\n");
        for m in 0..100 {
            counts.push_str(&format!("{m},15,0.6\n"));
        }
        let s = ingest(FLIGHTS_HEADER, &counts);
        assert!((s.takeoff_rate_mean - 0.6).abs() < 1e-12);
        assert_eq!(s.saturated_minutes, 100);
    }

    #[test]
    fn poisson_takeoffs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = String::from("minute,n_taxiing,n_takeoffs\n");
        for m in 0..10_000 {
            counts.push_str(&format!("{m},16,{}\n", poisson(&mut rng, 0.605)));
        }
        let s = ingest(FLIGHTS_HEADER, &counts);
        assert!((s.takeoff_rate_mean - 0.605).abs() <= 0.01, "{}", s.takeoff_rate_mean);
        assert!((s.takeoff_rate_std - 0.605f64.sqrt()).abs() <= 0.02, "{}", s.takeoff_rate_std);
    }

    #[test]
    fn bad_row_yields_one_diagnostic() {
        let counts = "minute,n_taxiing,n_takeoffs\n0,15,1\n1,fifteen,1\n2,15,0\n";
        let s = ingest(FLIGHTS_HEADER, counts);
        assert_eq!(s.diagnostics.len(), 1);
        assert_eq!(s.diagnostics[0].line, 3);
        assert_eq!(s.saturated_minutes, 2);
        assert_eq!(s.takeoff_rate_mean, 0.5);
    }

    #[test]
    fn light_traffic_taxi_times_per_ramp() {
        let counts = "minute,n_taxiing,n_takeoffs\n0,2,0\n10,3,1\n20,9,1\n";
        let flights = format!("{FLIGHTS_HEADER}a,r1,0,14\nb,r1,10,22\nc,r1,20,40\nd,r2,0,7\n");
        let s = ingest(&flights, counts);
        assert_eq!(s.ramps.len(), 2);
        let r1 = &s.ramps[0];
        assert_eq!((r1.ramp_id.as_str(), r1.flights), ("r1", 2));
        assert!((r1.taxi_out.mean - 13.0).abs() < 1e-12);
        assert!((r1.taxi_out.std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.ramps[1].taxi_out.mean, 7.0);
    }

    #[test]
    fn curve_has_quartiles_and_skips_empty_bins() {
        let counts = "minute,n_taxiing,n_takeoffs\n0,0,0\n1,2,0\n2,2,1\n3,2,1\n4,2,2\n";
        let s = ingest(FLIGHTS_HEADER, counts);
        let counts: Vec<u32> = s.throughput_curve.iter().map(|p| p.count).collect();
        assert_eq!(counts, vec![0, 2]);
        let p = &s.throughput_curve[1];
        assert_eq!((p.mean_rate, p.q1, p.median, p.q3), (1.0, 0.75, 1.0, 1.25));
        assert!(s.warnings.iter().any(|w| w.contains("1 taxiing")));
    }

    #[test]
    fn order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<String> = (0..500)
            .map(|m| format!("{m},{},{}\n", rng.random_range(0..20), rng.random::<f64>() * 2.0))
            .collect();
        let forward = format!("minute,n_taxiing,n_takeoffs\n{}", rows.concat());
        let mut rev = rows.clone();
        rev.reverse();
        let backward = format!("minute,n_taxiing,n_takeoffs\n{}", rev.concat());
        assert_eq!(ingest(FLIGHTS_HEADER, &forward), ingest(FLIGHTS_HEADER, &backward));
    }
}
