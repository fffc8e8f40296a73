use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const MIN_TREND_LEN: usize = 10;
pub const MIN_CORRECTED_LEN: usize = 20;
pub const DEFAULT_MAX_LAG: usize = 20;
const Z_975: f64 = 1.959963984540054;

/// Mann-Kendall score `Σ_{i<j} sign(x_j - x_i)`.
pub fn kendall_s(x: &[f64]) -> i64 {
    let mut s = 0i64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += match x[j].partial_cmp(&x[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s
}

/// Sizes of groups of equal values.
fn tie_groups(x: &[f64]) -> Vec<u64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            groups.push((j - i) as u64);
        }
        i = j;
    }
    groups
}

/// Kendall's tau-b of the series against time (0 when all values tie).
pub fn kendall_tau(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let n0 = n * (n - 1.0) / 2.0;
    let n1: f64 = tie_groups(x).iter().map(|&t| (t * (t - 1)) as f64 / 2.0).sum();
    let denom = (n0 * (n0 - n1)).sqrt();
    if denom > 0.0 {
        kendall_s(x) as f64 / denom
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    /// Variance inflation factor from significant rank autocorrelations.
    pub factor: f64,
    pub variance: f64,
    pub z: f64,
    pub p_value: f64,
    pub significant_lags: usize,
    /// The factor came out non-positive and the classical variance was kept.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub n: usize,
    pub s: i64,
    pub tau: f64,
    pub variance: f64,
    pub z: f64,
    pub p_value: f64,
    /// Every value ties, so no trend can be measured.
    pub degenerate: bool,
    pub corrected: Option<Correction>,
}

impl TrendResult {
    /// Corrected p-value when available, classical otherwise.
    pub fn p_final(&self) -> f64 {
        self.corrected.map_or(self.p_value, |c| c.p_value)
    }
}

fn z_and_p(s: i64, variance: f64) -> (f64, f64) {
    if variance <= 0.0 || s == 0 {
        return (0.0, 1.0);
    }
    let num = s as f64 - s.signum() as f64;
    let z = num / variance.sqrt();
    (z, erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0))
}

/// Classical Mann-Kendall test with tie-corrected variance and continuity
/// correction; two-sided p-value from the normal approximation.
pub fn mk_test(x: &[f64]) -> Result<TrendResult> {
    if x.len() < MIN_TREND_LEN {
        return Err(Error::invalid(format!(
            "trend test needs at least {MIN_TREND_LEN} values, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("trend series must be finite"));
    }
    let n = x.len() as f64;
    let s = kendall_s(x);
    let ties: f64 = tie_groups(x).iter().map(|&t| (t * (t - 1) * (2 * t + 5)) as f64).sum();
    let variance = (n * (n - 1.0) * (2.0 * n + 5.0) - ties) / 18.0;
    let (z, p_value) = z_and_p(s, variance);
    Ok(TrendResult {
        n: x.len(),
        s,
        tau: kendall_tau(x),
        variance,
        z,
        p_value,
        degenerate: variance <= 0.0,
        corrected: None,
    })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            r[k] = avg;
        }
        i = j;
    }
    r
}

/// Hamed-Rao variance factor from the rank autocorrelations at lags
/// `1..=max_lag` outside the ±1.96/√n band. Returns the factor and the number
/// of significant lags.
pub fn hamed_rao_factor(x: &[f64], max_lag: usize) -> (f64, usize) {
    let n = x.len();
    let r = ranks(x);
    let mean = r.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = r.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom <= 0.0 || n < 3 {
        return (1.0, 0);
    }
    let band = Z_975 / (n as f64).sqrt();
    let nf = n as f64;
    let mut sum = 0.0;
    let mut used = 0;
    for lag in 1..=max_lag.min(n - 1) {
        let rho = dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / denom;
        if rho.abs() > band {
            let m = (n - lag) as f64;
            sum += m * (m - 1.0) * (m - 2.0) * rho;
            used += 1;
        }
    }
    (1.0 + 2.0 * sum / (nf * (nf - 1.0) * (nf - 2.0)), used)
}

/// Mann-Kendall test with the Hamed-Rao autocorrelation correction.
pub fn mk_test_corrected(x: &[f64], max_lag: usize) -> Result<TrendResult> {
    if x.len() < MIN_CORRECTED_LEN {
        return Err(Error::invalid(format!(
            "corrected trend test needs at least {MIN_CORRECTED_LEN} values, got {}",
            x.len()
        )));
    }
    let mut res = mk_test(x)?;
    let (factor, significant_lags) = hamed_rao_factor(x, max_lag);
    let fallback = factor <= 0.0;
    let variance = res.variance * if fallback { 1.0 } else { factor };
    let (z, p_value) = z_and_p(res.s, variance);
    res.corrected = Some(Correction {
        factor,
        variance,
        z,
        p_value,
        significant_lags,
        fallback,
    });
    Ok(res)
}
