use serde::{Deserialize, Serialize};

use crate::distributions::SpellLaw;
use crate::error::{Error, Result};
use crate::sample::SpellSample;

pub const DEFAULT_MIN_COUNT: usize = 10;

/// Which count must reach the minimum for a ratio to be reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioCutoff {
    /// Spells of length at least `r`.
    AtLeast,
    /// Spells of length exactly `r`.
    Exactly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub r: u32,
    /// Number of spells of length at least `r`.
    pub at_risk: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub points: Vec<RatioPoint>,
}

impl RatioSeries {
    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }
}

/// `S_{r+1} / S_r` with `S_r` the number of spells of length at least `r`.
pub fn survival_ratios(sample: &SpellSample, min_count: usize, cutoff: RatioCutoff) -> RatioSeries {
    let max = sample.max().unwrap_or(0) as usize;
    let mut exact = vec![0usize; max + 2];
    for &v in sample.values() {
        exact[v as usize] += 1;
    }
    let mut at_least = vec![0usize; max + 2];
    for r in (1..=max).rev() {
        at_least[r] = at_least[r + 1] + exact[r];
    }
    let points = (1..=max)
        .filter(|&r| {
            let count = match cutoff {
                RatioCutoff::AtLeast => at_least[r],
                RatioCutoff::Exactly => exact[r],
            };
            at_least[r] > 0 && count >= min_count.max(1)
        })
        .map(|r| RatioPoint {
            r: r as u32,
            at_risk: at_least[r] as f64,
            ratio: at_least[r + 1] as f64 / at_least[r] as f64,
        })
        .collect();
    RatioSeries { points }
}

/// Theoretical counterpart: `P(X > r) / P(X > r - 1)` for `r = 1..=r_max`,
/// with `at_risk` holding `P(X ≥ r)`.
pub fn survival_ratios_law(law: &dyn SpellLaw, r_max: u32) -> Result<RatioSeries> {
    let mut points = Vec::new();
    let mut prev = 1.0;
    for r in 1..=r_max {
        let next = law.survival(r as u64)?;
        if prev <= 0.0 {
            break;
        }
        points.push(RatioPoint {
            r,
            at_risk: prev,
            ratio: next / prev,
        });
        prev = next;
    }
    Ok(RatioSeries { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileComparison {
    pub q: f64,
    pub empirical: u64,
    pub theoretical: u64,
    /// Fewer observations than the level can resolve.
    pub small_sample: bool,
}

/// Smallest observed value with empirical cdf at least `q`, against the
/// model quantile.
pub fn quantile_compare(sample: &SpellSample, law: &dyn SpellLaw, q: f64) -> Result<QuantileComparison> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {q}")));
    }
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let n = sample.len();
    let mut cum = 0usize;
    let mut empirical = sample.max().unwrap_or(0) as u64;
    for (v, c) in sample.frequencies() {
        cum += c;
        if cum as f64 >= q * n as f64 - 1e-9 {
            empirical = v as u64;
            break;
        }
    }
    Ok(QuantileComparison {
        q,
        empirical,
        theoretical: law.quantile(q)?,
        small_sample: (n as f64) * (1.0 - q) < 1.0 - 1e-9,
    })
}

/// Standard error of estimate: root-mean-square of empirical minus
/// theoretical quantiles.
pub fn see(comparisons: &[QuantileComparison]) -> Option<f64> {
    if comparisons.is_empty() {
        return None;
    }
    let ss: f64 = comparisons
        .iter()
        .map(|c| (c.empirical as f64 - c.theoretical as f64).powi(2))
        .sum();
    Some((ss / comparisons.len() as f64).sqrt())
}

/// `(k, F_spell(k) / F_chain(k))` wherever the chain cdf is positive.
pub fn cumfreq_ratio(spell: &SpellSample, chain: &SpellSample) -> Result<Vec<(u32, f64)>> {
    if spell.is_empty() || chain.is_empty() {
        return Err(Error::invalid("cumulative frequency ratio needs non-empty samples"));
    }
    let top = spell.max().unwrap_or(0).max(chain.max().unwrap_or(0));
    Ok((1..=top)
        .filter_map(|k| {
            let fc = chain.ecdf(k);
            (fc > 0.0).then(|| (k, spell.ecdf(k) / fc))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub min: u32,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: u32,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: Option<f64>,
    /// Adjusted Fisher-Pearson skewness; absent for fewer than three values
    /// or zero spread.
    pub skewness: Option<f64>,
}

/// Quartiles by linear interpolation at position `(n - 1) p` of the sorted
/// values.
pub fn summary_stats(sample: &SpellSample) -> Result<SummaryStats> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let mut v: Vec<f64> = sample.values().iter().map(|&x| x as f64).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let quartile = |p: f64| {
        let pos = (n - 1) as f64 * p;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    let nf = n as f64;
    let mean = v.iter().sum::<f64>() / nf;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>();
    let std = (n > 1).then(|| (m2 / (nf - 1.0)).sqrt());
    let skewness = (n > 2 && m2 > 0.0).then(|| {
        let g1 = (m3 / nf) / (m2 / nf).powf(1.5);
        g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
    });
    Ok(SummaryStats {
        n,
        min: v[0] as u32,
        q1: quartile(0.25),
        median: quartile(0.5),
        q3: quartile(0.75),
        max: v[n - 1] as u32,
        mean,
        std,
        skewness,
    })
}
