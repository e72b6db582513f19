//! Min-entropy of quantised Gaussian sources and the Toeplitz extraction
//! error bound used to pick the number of output bits per sample.

use log::warn;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    #[serde(rename = "h_min_bits")]
    pub h_min: f64,
    pub m: usize,
    pub s: usize,
    pub epsilon: f64,
}

impl EntropyReport {
    pub fn new(h_min: f64, m: usize, s: usize) -> Self {
        Self {
            h_min,
            m,
            s,
            epsilon: extraction_error_bound(s, m, h_min),
        }
    }
}

/// Quantum standard deviation from total output variance and SNC (dB):
/// `σ_q² = σ_total² R / (1 + R)` with `R = 10^(SNC/10)`.
pub fn sigma_q_from_total(sigma_total_sq: f64, snc_db: f64) -> f64 {
    let r = 10f64.powf(snc_db / 10.0);
    (sigma_total_sq * r / (1.0 + r)).sqrt()
}

/// Min-entropy per sample of a Gaussian with standard deviation `sigma_q`
/// digitised with bin width `w_bin`, taking the peak bin probability as
/// `w_bin × peak density`. The approximation is only good when the bin is
/// much narrower than the distribution; a warning is logged otherwise.
pub fn min_entropy_gaussian(sigma_q: f64, w_bin: f64) -> Result<f64> {
    if !(sigma_q > 0.0 && w_bin > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "min-entropy needs sigma_q > 0 and w_bin > 0, got {sigma_q}, {w_bin}"
        )));
    }
    if w_bin > sigma_q / 10.0 {
        warn!("bin width {w_bin} V is not small against sigma_q {sigma_q} V; peak-bin approximation degrades");
    }
    Ok(-(w_bin / (sigma_q * (2.0 * PI).sqrt())).log2())
}

/// Empirical min-entropy, `-log2(max count / total)`.
pub fn min_entropy_discrete<K>(histogram: &HashMap<K, u64>) -> Result<f64> {
    min_entropy_of_counts(histogram.values().copied())
}

pub fn min_entropy_of_counts<I: IntoIterator<Item = u64>>(counts: I) -> Result<f64> {
    let (total, max) = counts
        .into_iter()
        .fold((0u64, 0u64), |(t, m), c| (t + c, m.max(c)));
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(-(max as f64 / total as f64).log2())
}

pub fn histogram<K: Hash + Eq + Copy>(values: &[K]) -> HashMap<K, u64> {
    let mut h = HashMap::new();
    for &v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h
}

/// Statistical distance bound for an `s·m × s·n` Toeplitz hash applied to
/// `s` concatenated samples: `min(1, 2^(s (m - h_min) / 2))`.
pub fn extraction_error_bound(s: usize, m: usize, h_min: f64) -> f64 {
    let exponent = s as f64 * (m as f64 - h_min) / 2.0;
    2f64.powf(exponent).min(1.0)
}

/// Largest `m` whose error bound does not exceed `epsilon_target`.
/// Only `m <= h_min` is considered; beyond that the bound is vacuous.
pub fn choose_m(h_min: f64, s: usize, epsilon_target: f64) -> usize {
    if !(h_min > 0.0) || s == 0 {
        return 0;
    }
    let ceiling = h_min.floor() as usize;
    (0..=ceiling)
        .rev()
        .find(|&m| extraction_error_bound(s, m, h_min) <= epsilon_target)
        .unwrap_or(0)
}
