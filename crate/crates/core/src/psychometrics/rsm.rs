//! Andrich rating scale model category probabilities.

/// Category probabilities `P(x = 0..=m)` for ability `theta`, item
/// difficulty `delta` and shared thresholds `tau_1..tau_m`.
pub fn rsm_category_prob(theta: f64, delta: f64, thresholds: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; thresholds.len() + 1];
    category_prob_into(theta - delta, thresholds, &mut out);
    out
}

/// Writes category probabilities for location `eta = theta - delta` into
/// `out`, which must hold `thresholds.len() + 1` entries.
pub fn category_prob_into(eta: f64, thresholds: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), thresholds.len() + 1);
    out[0] = 0.0;
    let mut acc = 0.0;
    for (k, tau) in thresholds.iter().enumerate() {
        acc += eta - tau;
        out[k + 1] = acc;
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in out.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in out.iter_mut() {
        *v /= total;
    }
}

/// Expected score and its variance for location `eta`.
pub fn expected_and_variance(eta: f64, thresholds: &[f64], scratch: &mut [f64]) -> (f64, f64) {
    category_prob_into(eta, thresholds, scratch);
    let mut mean = 0.0;
    let mut second = 0.0;
    for (x, p) in scratch.iter().enumerate() {
        let x = x as f64;
        mean += x * p;
        second += x * x * p;
    }
    (mean, (second - mean * mean).max(0.0))
}

pub fn expected_score(theta: f64, delta: f64, thresholds: &[f64]) -> f64 {
    let mut scratch = vec![0.0; thresholds.len() + 1];
    expected_and_variance(theta - delta, thresholds, &mut scratch).0
}

/// Log-probability of observing category `x`.
pub fn log_prob(eta: f64, thresholds: &[f64], x: usize) -> f64 {
    let mut cum = Vec::with_capacity(thresholds.len() + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for tau in thresholds {
        acc += eta - tau;
        cum.push(acc);
    }
    let max = cum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + cum.iter().map(|c| (c - max).exp()).sum::<f64>().ln();
    cum[x] - lse
}
