//! Trace post-processing: envelopes, decay-rate fits and zero crossings.

/// Local maxima of `values` (interior points not smaller than both
/// neighbours), always including the first point.
pub fn local_maxima(times: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(times.len(), values.len());
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for i in 0..values.len() {
        let left = i == 0 || values[i] >= values[i - 1];
        let right = i + 1 == values.len() || values[i] > values[i + 1];
        if i == 0 || (left && right && i + 1 < values.len()) {
            ts.push(times[i]);
            vs.push(values[i]);
        }
    }
    (ts, vs)
}

/// Maximum of `values` over a centred window of `half_width` samples on each
/// side.
pub fn running_max(values: &[f64], half_width: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width + 1).min(values.len());
            values[lo..hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Least-squares fit `ln v = c - rate t`; returns `(rate, c)`. Points with
/// `v <= 0` are skipped. `None` with fewer than two usable points.
pub fn fit_log_linear(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((-slope, my - slope * mt))
}

/// Decay rate of the envelope: local maxima are fitted log-linearly over the
/// first `e_folds` e-foldings of the initial value.
pub fn envelope_decay_rate(times: &[f64], values: &[f64], e_folds: f64) -> Option<f64> {
    let (ts, vs) = local_maxima(times, values);
    let floor = vs.first()? * (-e_folds).exp();
    let end = vs.iter().position(|v| *v < floor).unwrap_or(vs.len());
    fit_log_linear(&ts[..end], &vs[..end]).map(|(rate, _)| rate)
}

/// Sign changes of `values`, located by linear interpolation.
pub fn zero_crossings(times: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(times.len(), values.len());
    let mut out = Vec::new();
    for i in 1..values.len() {
        let (a, b) = (values[i - 1], values[i]);
        if a == 0.0 && i > 1 {
            continue;
        }
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            let frac = if b == a { 0.0 } else { a / (a - b) };
            out.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    out
}

/// Angular frequency `ω` of a `cos(ωt + φ)` signal from its zero crossings,
/// which are spaced `π/ω` apart.
pub fn crossing_frequency(crossings: &[f64]) -> Option<f64> {
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
}
