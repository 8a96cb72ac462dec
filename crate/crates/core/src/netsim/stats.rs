use rand::Rng;

use crate::netsim::SimError;

/// Empirical quantile of already sorted data, linear interpolation at
/// position `(N - 1) * q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn fifth_percentile(samples: &[f64]) -> Result<f64, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, 0.05))
}

/// Fifth percentile via partial selection; reorders `buf`.
fn fifth_percentile_select(buf: &mut [f64]) -> f64 {
    let pos = (buf.len() - 1) as f64 * 0.05;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let (_, &mut at_lo, right) = buf.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || right.is_empty() {
        return at_lo;
    }
    let at_hi = right.iter().copied().fold(f64::INFINITY, f64::min);
    at_lo + frac * (at_hi - at_lo)
}

/// Percentile-bootstrap confidence interval of the fifth-percentile statistic.
pub fn bootstrap_ci<R: Rng + ?Sized>(
    samples: &[f64],
    level: f64,
    resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64), SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySample);
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(SimError::InvalidBootstrap { level, resamples });
    }
    let n = samples.len();
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = samples[rng.random_range(0..n)];
            }
            fifth_percentile_select(&mut buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail)))
}
