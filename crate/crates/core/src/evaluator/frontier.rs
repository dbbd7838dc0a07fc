use std::io::{BufRead, Write};

use serde::Serialize;

use super::sweep::FrontierPoint;
use super::MetricsReport;
use crate::error::{Error, Result};

/// Number of evenly spaced rates, endpoints included, at which two frontiers
/// are compared.
pub const REDUCTION_SAMPLES: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReductionPoint {
    pub rate: f64,
    pub pct_reduction: f64,
}

/// Non-dominated `(rate, taxiing)` pairs of the usable rows, sorted by
/// increasing taxiing and strictly increasing rate.
pub fn pareto_front(points: &[FrontierPoint]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.is_ok())
        .map(|p| (p.report.avg_takeoff_rate, p.report.avg_taxiing))
        .filter(|(r, n)| r.is_finite() && n.is_finite())
        .collect();
    pts.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)));
    let mut front: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if front.last().is_none_or(|last| p.0 > last.0) {
            front.push(p);
        }
    }
    front
}

/// Taxiing count at `rate` by linear interpolation along the front.
fn taxiing_at(front: &[(f64, f64)], rate: f64) -> f64 {
    let j = front.partition_point(|p| p.0 < rate);
    if j == 0 {
        return front[0].1;
    }
    if j == front.len() {
        return front[j - 1].1;
    }
    let (a, b) = (front[j - 1], front[j]);
    a.1 + (b.1 - a.1) * (rate - a.0) / (b.0 - a.0)
}

/// Percent reduction in average taxiing of `optimal` against `benchmark`
/// along their common take-off rate range.
pub fn compare_frontiers(optimal: &[FrontierPoint], benchmark: &[FrontierPoint]) -> Result<Vec<ReductionPoint>> {
    let opt = pareto_front(optimal);
    let bench = pareto_front(benchmark);
    if opt.is_empty() || bench.is_empty() {
        return Err(Error::ComparisonUndefined("a frontier has no usable points".into()));
    }
    let lo = opt[0].0.max(bench[0].0);
    let hi = opt[opt.len() - 1].0.min(bench[bench.len() - 1].0);
    if !(lo <= hi) {
        return Err(Error::ComparisonUndefined(format!(
            "take-off rate ranges do not overlap ({lo:.4} > {hi:.4})"
        )));
    }
    Ok((0..REDUCTION_SAMPLES)
        .map(|i| {
            let rate = if i + 1 == REDUCTION_SAMPLES { hi } else { lo + (hi - lo) * i as f64 / (REDUCTION_SAMPLES - 1) as f64 };
            let b = taxiing_at(&bench, rate);
            let o = taxiing_at(&opt, rate);
            let pct_reduction = if b > 0.0 { (b - o) / b * 100.0 } else { 0.0 };
            ReductionPoint { rate, pct_reduction }
        })
        .collect())
}

fn hash_line<W: Write>(w: &mut W, config_hash: &str) -> Result<()> {
    writeln!(w, "# config_hash={config_hash}").map_err(|e| Error::io("<output>", e))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_frontier_csv<W: Write>(
    mut w: W,
    config_hash: &str,
    ramp_names: &[String],
    rows: &[FrontierPoint],
) -> Result<()> {
    hash_line(&mut w, config_hash)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["kind", "param", "avg_rate", "avg_taxiing", "rate_std"].map(String::from).to_vec();
    header.extend(ramp_names.iter().map(|n| format!("release_rate_{n}")));
    header.extend(["rate_stderr", "taxiing_stderr", "status"].map(String::from));
    out.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let r = &row.report;
        let mut rec = vec![
            row.kind.clone(),
            row.param.to_string(),
            r.avg_takeoff_rate.to_string(),
            r.avg_taxiing.to_string(),
            r.takeoff_rate_std.to_string(),
        ];
        rec.extend(r.ramp_release_rates.iter().map(f64::to_string));
        rec.extend([r.rate_stderr.to_string(), r.taxiing_stderr.to_string(), row.status.clone()]);
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<output>", e))
}

#[derive(Clone, Debug)]
pub struct FrontierTable {
    pub config_hash: Option<String>,
    pub ramp_names: Vec<String>,
    pub points: Vec<FrontierPoint>,
}

pub fn read_frontier_csv<R: BufRead>(mut r: R) -> Result<FrontierTable> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| Error::io("<input>", e))?;
    let config_hash = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config_hash=").map(str::to_string));
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("frontier table has no `{name}` column")))
    };
    let [kind, param, rate, taxiing, std, rate_se, taxi_se, status] =
        ["kind", "param", "avg_rate", "avg_taxiing", "rate_std", "rate_stderr", "taxiing_stderr", "status"].map(col);
    let (kind, param, rate, taxiing, std, rate_se, taxi_se, status) =
        (kind?, param?, rate?, taxiing?, std?, rate_se?, taxi_se?, status?);
    let release: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("release_rate_").map(|n| (i, n.to_string())))
        .collect();
    let mut points = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: `{}` is not a number", line + 1, &rec[i])))
        };
        let p = num(param)?;
        let report = MetricsReport {
            label: rec[kind].to_string(),
            param: p,
            avg_takeoff_rate: num(rate)?,
            avg_taxiing: num(taxiing)?,
            takeoff_rate_std: num(std)?,
            ramp_release_rates: release.iter().map(|(i, _)| num(*i)).collect::<Result<_>>()?,
            rate_stderr: num(rate_se)?,
            taxiing_stderr: num(taxi_se)?,
            objective: None,
            exact: num(rate_se)? == 0.0,
            steps: 0,
            warmup: 0,
            seed: None,
            mismatches: 0,
            by_count: Vec::new(),
        };
        points.push(FrontierPoint { kind: rec[kind].to_string(), param: p, report, status: rec[status].to_string() });
    }
    Ok(FrontierTable { config_hash, ramp_names: release.into_iter().map(|(_, n)| n).collect(), points })
}

pub fn write_reduction_csv<W: Write>(mut w: W, config_hash: &str, curve: &[ReductionPoint]) -> Result<()> {
    hash_line(&mut w, config_hash)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rate", "pct_reduction"]).map_err(csv_err)?;
    for p in curve {
        out.write_record([p.rate.to_string(), p.pct_reduction.to_string()]).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<output>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rate: f64, taxiing: f64) -> FrontierPoint {
        let mut report = super::super::sweep::failed_report(0);
        report.avg_takeoff_rate = rate;
        report.avg_taxiing = taxiing;
        FrontierPoint { kind: "t".into(), param: rate, report, status: "ok".into() }
    }

    #[test]
    fn identical_frontiers_give_zero() {
        let f = vec![row(0.1, 1.0), row(0.3, 2.0), row(0.5, 4.0)];
        let red = compare_frontiers(&f, &f).unwrap();
        assert_eq!(red.len(), REDUCTION_SAMPLES);
        assert!(red.iter().all(|p| p.pct_reduction.abs() < 1e-12));
    }

    #[test]
    fn interpolated_reduction() {
        let opt = vec![row(0.0, 0.0), row(0.6, 3.0)];
        let bench = vec![row(0.0, 0.0), row(0.6, 4.0)];
        let red = compare_frontiers(&opt, &bench).unwrap();
        assert!((red[50].rate - 0.3).abs() < 1e-12);
        assert!((red[50].pct_reduction - 25.0).abs() < 1e-9);
        assert_eq!(red[0].pct_reduction, 0.0);
    }

    #[test]
    fn disjoint_ranges_are_rejected() {
        let a = vec![row(0.1, 1.0), row(0.2, 2.0)];
        let b = vec![row(0.3, 1.0), row(0.4, 2.0)];
        assert!(matches!(compare_frontiers(&a, &b), Err(Error::ComparisonUndefined(_))));
    }

    #[test]
    fn dominated_points_are_dropped() {
        let f = vec![row(0.3, 2.0), row(0.2, 3.0), row(0.5, 4.0)];
        assert_eq!(pareto_front(&f), vec![(0.3, 2.0), (0.5, 4.0)]);
    }

    #[test]
    fn csv_round_trip() {
        let mut r = row(0.25, 1.5);
        r.report.ramp_release_rates = vec![0.125, 0.125];
        let mut buf = Vec::new();
        write_frontier_csv(&mut buf, "abc", &["a".into(), "b".into()], &[r.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config_hash=abc\n"));
        let t = read_frontier_csv(buf.as_slice()).unwrap();
        assert_eq!(t.config_hash.as_deref(), Some("abc"));
        assert_eq!(t.ramp_names, vec!["a", "b"]);
        assert_eq!(t.points[0].report.avg_takeoff_rate, 0.25);
        assert_eq!(t.points[0].report.ramp_release_rates, vec![0.125, 0.125]);
    }
}
