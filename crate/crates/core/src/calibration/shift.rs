use crate::error::{Error, Result};

/// Relative band around the saturation level in which consecutive bins count as a plateau.
const PLATEAU_BAND: f64 = 0.05;
/// Only bins at or above this fraction of the saturation rate are compared.
const UTILIZATION_FLOOR: f64 = 0.30;

fn check_plateau(curve: &[(u32, f64)], name: &str) -> Result<f64> {
    let peak = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::AlignmentUndefined(format!("{name} curve has no positive take-off rate")));
    }
    // Saturation level: best mean over three adjacent bins, so a single noisy bin cannot set it.
    let max = curve
        .windows(3)
        .filter(|w| w[2].0 == w[0].0 + 2)
        .map(|w| (w[0].1 + w[1].1 + w[2].1) / 3.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let max = if max.is_finite() { max } else { peak };
    let near = |r: f64| (r - max).abs() <= PLATEAU_BAND * max;
    let plateau = curve
        .windows(2)
        .any(|w| w[1].0 == w[0].0 + 1 && near(w[0].1) && near(w[1].1));
    if !plateau {
        return Err(Error::AlignmentUndefined(format!("{name} curve does not saturate")));
    }
    Ok(max)
}

/// Integer shift `s` such that `data(count + s)` best matches `model(count)`
/// (least mean squared error) over model bins with utilization of at least
/// 30% of saturation. Curves are `(taxiing count, mean take-off rate)`.
pub fn align_saturation_shift(model_curve: &[(u32, f64)], data_curve: &[(u32, f64)]) -> Result<i32> {
    let mut model = model_curve.to_vec();
    let mut data = data_curve.to_vec();
    model.sort_by_key(|p| p.0);
    data.sort_by_key(|p| p.0);
    let sat = check_plateau(&model, "model")?;
    check_plateau(&data, "data")?;

    let region: Vec<(u32, f64)> = model.iter().copied().filter(|p| p.1 >= UTILIZATION_FLOOR * sat).collect();
    let max_data = data.last().map_or(0, |p| p.0) as i64;
    let max_model = model.last().map_or(0, |p| p.0) as i64;
    let min_overlap = region.len().min(3).max(1);

    let mut best: Option<(f64, i32)> = None;
    for s in -max_model..=max_data {
        let mut sse = 0.0;
        let mut n = 0usize;
        for &(x, r) in &region {
            let target = x as i64 + s;
            if target < 0 {
                continue;
            }
            if let Ok(pos) = data.binary_search_by_key(&(target as u32), |p| p.0) {
                sse += (data[pos].1 - r).powi(2);
                n += 1;
            }
        }
        if n < min_overlap {
            continue;
        }
        let mse = sse / n as f64;
        let s = s as i32;
        let better = match best {
            None => true,
            Some((b, bs)) => mse < b - 1e-15 || ((mse - b).abs() <= 1e-15 && s.abs() < bs.abs()),
        };
        if better {
            best = Some((mse, s));
        }
    }
    best.map(|b| b.1)
        .ok_or_else(|| Error::AlignmentUndefined("curves do not overlap in the utilization region".into()))
}
