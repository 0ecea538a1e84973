//! Scalar special functions shared across modules.

use std::f64::consts::PI;

pub use statrs::function::beta::ln_beta;
pub use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    let tail = 0.5 * libm::erfc(x.abs() / std::f64::consts::SQRT_2);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Standard normal log-density.
pub fn normal_ln_pdf(x: f64) -> f64 {
    -0.5 * (LN_2PI + x * x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `ln Σ exp(v_i)`; `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalizes log-weights into probabilities via log-sum-exp.
///
/// If every entry is `-inf` the result is uniform rather than NaN.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        let n = log_weights.len() as f64;
        return vec![1.0 / n; log_weights.len()];
    }
    log_weights.iter().map(|v| (v - lse).exp()).collect()
}

/// Beta log-density at `x ∈ (0, 1)`.
pub fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Half-normal mean `√(2/π)`.
pub fn half_normal_mean() -> f64 {
    (2.0 / PI).sqrt()
}
