use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{HarnessError, MetricSeries};
use crate::learning::EpisodeSummary;

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
pub const SMOOTHING_WINDOW: usize = 10;
const BOOTSTRAP_SEED: u64 = 0x5eed;

/// `Σ_{i<n} γ^i`, one term per accepting visit.
pub fn eventually_discounted_return(n: usize, gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut g = 1.0;
    for _ in 0..n {
        total += g;
        g *= gamma;
    }
    total
}

/// Fraction of episodes that entered a sink; `None` without episodes.
pub fn violation_rate(episodes: &[EpisodeSummary]) -> Option<f64> {
    if episodes.is_empty() {
        return None;
    }
    Some(episodes.iter().filter(|e| e.violated).count() as f64 / episodes.len() as f64)
}

pub fn satisfaction_within_episode(accept_visits: usize) -> bool {
    accept_visits > 0
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_ci<R: Rng + ?Sized>(values: &[f64], resamples: usize, level: f64, rng: &mut R) -> (f64, f64) {
    let n = values.len();
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let last = (resamples - 1) as f64;
    let lo = means[(tail * last).floor() as usize];
    let hi = means[((1.0 - tail) * last).ceil() as usize];
    (lo, hi)
}

/// Trailing moving average; the first entries average what is available.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let from = (i + 1).saturating_sub(window);
            xs[from..=i].iter().sum::<f64>() / (i + 1 - from) as f64
        })
        .collect()
}

pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub step: usize,
    pub mean_edr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Per evaluation step: mean over seeds and a 95% bootstrap interval, then
/// smoothing of all three with a trailing window.
pub fn aggregate(series: &[&MetricSeries]) -> Result<Vec<AggregateRow>, HarnessError> {
    if series.len() < 2 {
        return Err(HarnessError::Config("aggregation needs at least two seeds".into()));
    }
    let steps = series[0].steps();
    if series.iter().any(|s| s.steps() != steps) {
        return Err(HarnessError::Config("seeds were evaluated at different steps".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let edr: Vec<Vec<f64>> = series.iter().map(|s| s.edr()).collect();
    let mut mean = Vec::with_capacity(steps.len());
    let mut lo = Vec::with_capacity(steps.len());
    let mut hi = Vec::with_capacity(steps.len());
    for i in 0..steps.len() {
        let column: Vec<f64> = edr.iter().map(|s| s[i]).collect();
        mean.push(column.iter().sum::<f64>() / column.len() as f64);
        let (l, h) = bootstrap_ci(&column, BOOTSTRAP_RESAMPLES, 0.95, &mut rng);
        lo.push(l);
        hi.push(h);
    }
    let (mean, lo, hi) = (
        moving_average(&mean, SMOOTHING_WINDOW),
        moving_average(&lo, SMOOTHING_WINDOW),
        moving_average(&hi, SMOOTHING_WINDOW),
    );
    Ok((0..steps.len())
        .map(|i| AggregateRow { step: steps[i], mean_edr: mean[i], ci_low: lo[i], ci_high: hi[i] })
        .collect())
}
