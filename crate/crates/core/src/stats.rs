//! Small statistical checks used to test validity.

use crate::error::{Error, Result};

/// One-sample Kolmogorov-Smirnov test against U[0,1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    pub fn passes(&self, threshold: f64) -> bool {
        self.p_value >= threshold
    }
}

/// Kolmogorov distribution tail Prob(K > λ).
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Uses the asymptotic distribution with the small-sample correction
/// λ = (√n + 0.12 + 0.11/√n)·D.
pub fn ks_uniform(samples: &[f64]) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if let Some(v) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("sample {v} outside [0, 1]")));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok(KsResult { statistic: d, p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d) })
}

/// `mean ± sigmas·sd` for the rate of `n` Bernoulli(p) trials.
pub fn binomial_band(n: usize, p: f64, sigmas: f64) -> (f64, f64) {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    (p - sigmas * sd, p + sigmas * sd)
}
