//! Simulated χ² goodness-of-fit: the null distribution of the Pearson
//! statistic is rebuilt from replicate samples of the hypothesised law.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{FamilyId, SpellLaw};
use crate::error::{Error, Result};
use crate::inference::{fit_mle, FitOptions};
use crate::rng::substream;
use crate::sample::SpellSample;

pub const DEFAULT_REPLICATES: usize = 3000;
pub const MIN_REPLICATES: usize = 100;
pub const DEFAULT_GAP_THRESHOLD: usize = 5;
/// Largest count an isolated value may carry and still be smoothed.
pub const OUTLIER_MAX_COUNT: f64 = 2.0;

/// Observed counts per value `k = 1..=k_max`. Counts are real so smoothing
/// can spread them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    counts: Vec<f64>,
    total: f64,
}

impl FrequencyTable {
    /// `counts[i]` belongs to value `i + 1`.
    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("frequency counts must be finite and non-negative"));
        }
        let total = counts.iter().sum();
        Ok(FrequencyTable { counts, total })
    }

    pub fn from_sample(sample: &SpellSample) -> Self {
        let mut counts = vec![0.0; sample.max().unwrap_or(0) as usize];
        for &v in sample.values() {
            counts[v as usize - 1] += 1.0;
        }
        let total = sample.len() as f64;
        FrequencyTable { counts, total }
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn count(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.counts.get(k as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Largest value with a non-zero count.
    pub fn max_value(&self) -> u64 {
        self.counts.iter().rposition(|&c| c > 0.0).map_or(0, |i| i as u64 + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.total <= 0.0
    }
}

/// Contiguous classes partitioning `{1, 2, ...}`: class `i` is
/// `(uppers[i-1], uppers[i]]` and a final open class `(last, ∞)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classes {
    uppers: Vec<u64>,
}

impl Classes {
    pub fn from_uppers(uppers: Vec<u64>) -> Result<Self> {
        if uppers.first().is_some_and(|&u| u == 0) || uppers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("class upper bounds must be positive and strictly increasing"));
        }
        Ok(Classes { uppers })
    }

    /// One class per value `1..=max_value` plus the open tail.
    pub fn per_value(max_value: u64) -> Self {
        Classes {
            uppers: (1..=max_value).collect(),
        }
    }

    pub fn uppers(&self) -> &[u64] {
        &self.uppers
    }

    /// Number of classes, including the open tail.
    pub fn len(&self) -> usize {
        self.uppers.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn bounds(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.uppers
            .iter()
            .scan(0u64, |lo, &hi| {
                let b = (*lo + 1, hi);
                *lo = hi;
                Some(b)
            })
    }

    pub fn probabilities(&self, law: &dyn SpellLaw) -> Result<Vec<f64>> {
        let mut probs: Vec<f64> = self.bounds().map(|(lo, hi)| (lo..=hi).map(|k| law.pmf(k)).sum()).collect();
        probs.push(law.survival(self.uppers.last().copied().unwrap_or(0))?);
        Ok(probs)
    }

    pub fn observed(&self, table: &FrequencyTable) -> Vec<f64> {
        let mut obs: Vec<f64> = self.bounds().map(|(lo, hi)| (lo..=hi).map(|k| table.count(k)).sum()).collect();
        let last = self.uppers.last().copied().unwrap_or(0) as usize;
        obs.push(table.counts().iter().skip(last).sum());
        obs
    }
}

fn pearson(observed: &[f64], probs: &[f64], n: f64) -> f64 {
    observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = n * p;
            if e > 0.0 {
                (o - e) * (o - e) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum()
}

/// Pearson statistic `Σ (O_c - E_c)² / E_c` over `classes`.
pub fn chi2_statistic(observed: &FrequencyTable, law: &dyn SpellLaw, classes: &Classes) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::invalid("cannot test an empty frequency table"));
    }
    let probs = classes.probabilities(law)?;
    Ok(pearson(&classes.observed(observed), &probs, observed.total()))
}

/// Spreads isolated low-count values uniformly back to the nearest non-zero
/// value below them, scanning from the largest value down.
///
/// A value is smoothed when its count is at most [`OUTLIER_MAX_COUNT`] and at
/// least `gap_threshold` zero-count values separate it from that anchor.
pub fn smooth_outliers(table: &FrequencyTable, gap_threshold: usize) -> FrequencyTable {
    let gap_threshold = gap_threshold.max(1);
    let mut counts = table.counts.clone();
    let mut v = counts.len();
    while v > 0 {
        let idx = v - 1;
        let c = counts[idx];
        if c > 0.0 && c <= OUTLIER_MAX_COUNT {
            if let Some(anchor) = counts[..idx].iter().rposition(|&x| x > 0.0) {
                let gap = idx - anchor - 1;
                if gap >= gap_threshold {
                    let share = c / (idx - anchor) as f64;
                    counts[anchor + 1..=idx].iter_mut().for_each(|x| *x = share);
                    v = anchor + 1;
                    continue;
                }
            }
        }
        v -= 1;
    }
    FrequencyTable {
        counts,
        total: table.total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GofConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Gap threshold for outlier smoothing of the observed table, if enabled.
    pub smoothing: Option<usize>,
}

impl Default for GofConfig {
    fn default() -> Self {
        GofConfig {
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            smoothing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub chi2_ref: f64,
    #[serde(skip_serializing, default)]
    pub replicate_stats: Vec<f64>,
    pub replicates: usize,
    /// Fraction of replicate statistics strictly greater than `chi2_ref`.
    pub p_value: f64,
    pub classes: usize,
    pub smoothed: bool,
}

impl GofResult {
    fn from_stats(chi2_ref: f64, replicate_stats: Vec<f64>, classes: usize, smoothed: bool) -> Self {
        let exceed = replicate_stats.iter().filter(|&&x| x > chi2_ref).count();
        let replicates = replicate_stats.len();
        GofResult {
            chi2_ref,
            p_value: exceed as f64 / replicates as f64,
            replicate_stats,
            replicates,
            classes,
            smoothed,
        }
    }
}

/// Class counts of `n` draws from the class probabilities, by sequential
/// conditional binomials.
fn multinomial<R: rand::Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64], suffix: &[f64]) -> Vec<f64> {
    let mut left = n;
    let mut out = vec![0.0; probs.len()];
    for i in 0..probs.len() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = left as f64;
            break;
        }
        let rest = suffix[i];
        let p = if rest > 0.0 { (probs[i] / rest).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, p).map(|b| b.sample(rng)).unwrap_or(0);
        out[i] = k as f64;
        left -= k;
    }
    out
}

/// Values tabulated for replicate draws under the per-value class rule stop
/// once the expected count beyond them falls below this.
const GRID_TAIL_COUNT: f64 = 1e-6;
const GRID_MAX_LEN: usize = 1_000_000;

fn suffix_sums(probs: &[f64]) -> Vec<f64> {
    let mut suffix = vec![0.0; probs.len()];
    let mut acc = 0.0;
    for i in (0..probs.len()).rev() {
        acc += probs[i];
        suffix[i] = acc;
    }
    suffix
}

/// Pearson statistic of one replicate under the per-value rule: classes
/// `1..=m` for the replicate's own maximum `m`, plus the open tail.
fn per_value_stat(counts: &[f64], probs: &[f64], suffix: &[f64], n: f64, smoothing: Option<usize>) -> f64 {
    let grid = probs.len() - 1;
    let beyond = counts[grid];
    let m = if beyond > 0.0 {
        grid
    } else {
        counts[..grid].iter().rposition(|&c| c > 0.0).map_or(0, |i| i + 1)
    };
    let smoothed;
    let observed: &[f64] = match smoothing {
        Some(gap) => {
            let table = FrequencyTable {
                counts: counts[..m].to_vec(),
                total: counts[..m].iter().sum(),
            };
            smoothed = smooth_outliers(&table, gap);
            &smoothed.counts
        }
        None => &counts[..m],
    };
    let tail_p = if m < suffix.len() { suffix[m] } else { 0.0 };
    pearson(observed, &probs[..m], n) + pearson(&[beyond], &[tail_p], n)
}

/// Monte-Carlo χ² test of `sample` against a fixed `law` (no refitting).
///
/// With `classes = None` the per-value rule is applied to every sample,
/// replicates included, so each statistic uses classes up to its own
/// maximum. Explicit classes are held fixed across replicates.
///
/// Replicate `j` uses substream `j` of `config.seed`, so the result does not
/// depend on thread count.
pub fn mc_gof(
    sample: &SpellSample,
    law: &dyn SpellLaw,
    classes: Option<&Classes>,
    config: &GofConfig,
) -> Result<GofResult> {
    if config.replicates < MIN_REPLICATES {
        return Err(Error::invalid(format!(
            "at least {MIN_REPLICATES} replicates required, got {}",
            config.replicates
        )));
    }
    if sample.is_empty() {
        return Err(Error::invalid("cannot test an empty sample"));
    }
    let raw = FrequencyTable::from_sample(sample);
    let observed = match config.smoothing {
        Some(gap) => smooth_outliers(&raw, gap),
        None => raw.clone(),
    };
    let smoothed = config.smoothing.is_some() && observed != raw;
    let n = sample.len() as u64;
    let nf = n as f64;
    if let Some(classes) = classes {
        let probs = classes.probabilities(law)?;
        let suffix = suffix_sums(&probs);
        let chi2_ref = pearson(&classes.observed(&observed), &probs, nf);
        let stats: Vec<f64> = (0..config.replicates as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = substream(config.seed, j);
                let counts = multinomial(&mut rng, n, &probs, &suffix);
                pearson(&counts, &probs, nf)
            })
            .collect();
        return Ok(GofResult::from_stats(chi2_ref, stats, classes.len(), smoothed));
    }

    let classes = Classes::per_value(raw.max_value());
    let chi2_ref = pearson(&classes.observed(&observed), &classes.probabilities(law)?, nf);
    let mut probs = Vec::new();
    let mut cum = 0.0;
    while probs.len() < GRID_MAX_LEN {
        let k = probs.len() as u64 + 1;
        let p = law.pmf(k);
        probs.push(p);
        cum += p;
        if k >= raw.max_value() && ((1.0 - cum) * nf < GRID_TAIL_COUNT || 1.0 - cum < 1e-13) {
            break;
        }
    }
    probs.push(law.survival(probs.len() as u64)?);
    let suffix = suffix_sums(&probs);
    let stats: Vec<f64> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(config.seed, j);
            let counts = multinomial(&mut rng, n, &probs, &suffix);
            per_value_stat(&counts, &probs, &suffix, nf, config.smoothing)
        })
        .collect();
    Ok(GofResult::from_stats(chi2_ref, stats, classes.len(), smoothed))
}

/// Parametric-bootstrap variant: every replicate is refitted within `family`
/// before its statistic is computed.
pub fn mc_gof_refit(
    sample: &SpellSample,
    family: FamilyId,
    fit_options: &FitOptions,
    config: &GofConfig,
) -> Result<GofResult> {
    if config.replicates < MIN_REPLICATES {
        return Err(Error::invalid(format!(
            "at least {MIN_REPLICATES} replicates required, got {}",
            config.replicates
        )));
    }
    let fit = fit_mle(sample, family, fit_options)?;
    let law = fit.model().law()?;
    let sampler = law.sampler()?;
    let raw = FrequencyTable::from_sample(sample);
    let observed = match config.smoothing {
        Some(gap) => smooth_outliers(&raw, gap),
        None => raw.clone(),
    };
    let classes = Classes::per_value(raw.max_value());
    let chi2_ref = chi2_statistic(&observed, &law, &classes)?;
    let stats: Result<Vec<f64>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(config.seed, j);
            let draws = SpellSample::new(sampler.draw_n(&mut rng, sample.len()))?;
            let refit = fit_mle(&draws, family, fit_options)?;
            let table = FrequencyTable::from_sample(&draws);
            let table = match config.smoothing {
                Some(gap) => smooth_outliers(&table, gap),
                None => table,
            };
            chi2_statistic(&table, &refit.model().law()?, &Classes::per_value(draws.max().unwrap_or(1).into()))
        })
        .collect();
    Ok(GofResult::from_stats(
        chi2_ref,
        stats?,
        classes.len(),
        config.smoothing.is_some() && observed != raw,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Lerch, LerchParams, PmfTable};
    use approx::assert_relative_eq;

    fn geom(theta: f64) -> Lerch {
        Lerch::new(LerchParams::new(theta, 0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn proportional_counts_give_zero() {
        let law = PmfTable::new(vec![0.5, 0.25, 0.25], 0.0).unwrap();
        let t = FrequencyTable::from_counts(vec![50.0, 25.0, 25.0]).unwrap();
        let x = chi2_statistic(&t, &law, &Classes::per_value(3)).unwrap();
        assert!(x.abs() < 1e-12);
    }

    #[test]
    fn hand_computed_statistic() {
        let t = FrequencyTable::from_counts(vec![60.0, 40.0]).unwrap();
        let classes = Classes::from_uppers(vec![1, 2]).unwrap();
        let x = chi2_statistic(&t, &geom(0.5), &classes).unwrap();
        assert_relative_eq!(x, 36.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_classes_merge_freely() {
        let law = PmfTable::new(vec![0.5, 0.5, 0.0, 0.0], 0.0).unwrap();
        let t = FrequencyTable::from_counts(vec![40.0, 60.0]).unwrap();
        let split = chi2_statistic(&t, &law, &Classes::from_uppers(vec![1, 2, 3, 4]).unwrap()).unwrap();
        let merged = chi2_statistic(&t, &law, &Classes::from_uppers(vec![1, 2, 4]).unwrap()).unwrap();
        assert_relative_eq!(split, merged);
        let impossible = FrequencyTable::from_counts(vec![40.0, 50.0, 10.0]).unwrap();
        assert!(chi2_statistic(&impossible, &law, &Classes::per_value(4)).unwrap().is_infinite());
        assert!(chi2_statistic(&FrequencyTable::from_counts(vec![]).unwrap(), &law, &Classes::per_value(1)).is_err());
    }

    #[test]
    fn bad_classes() {
        assert!(Classes::from_uppers(vec![0, 1]).is_err());
        assert!(Classes::from_uppers(vec![2, 2]).is_err());
    }

    #[test]
    fn smoothing_single_outlier() {
        let mut counts = vec![5.0; 10];
        counts.extend(vec![0.0; 9]);
        counts.push(1.0);
        let t = FrequencyTable::from_counts(counts).unwrap();
        let s = smooth_outliers(&t, 5);
        for k in 11..=20 {
            assert_relative_eq!(s.count(k), 0.1, max_relative = 1e-12);
        }
        assert_relative_eq!(s.counts().iter().sum::<f64>(), t.total(), max_relative = 1e-12);
    }

    #[test]
    fn smoothing_without_gaps_is_identity() {
        let t = FrequencyTable::from_counts(vec![5.0, 3.0, 0.0, 1.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(smooth_outliers(&t, 3), t);
    }

    #[test]
    fn smoothing_two_outliers() {
        let t = FrequencyTable::from_counts(vec![5.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let s = smooth_outliers(&t, 3);
        assert_eq!(s.count(1), 5.0);
        for k in 2..=9 {
            assert_relative_eq!(s.count(k), 0.25);
        }
    }

    #[test]
    fn perfect_fit_has_unit_p() {
        let law = PmfTable::new(vec![1.0], 0.0).unwrap();
        let sample = SpellSample::new(vec![1; 50]).unwrap();
        let r = mc_gof(&sample, &law, None, &GofConfig { replicates: 200, ..Default::default() }).unwrap();
        assert_eq!(r.chi2_ref, 0.0);
        // Every replicate is also exactly proportional, so nothing exceeds 0.
        assert_eq!(r.p_value, 0.0);
        let law = geom(0.5);
        let sample = SpellSample::new([vec![1; 40], vec![2; 20], vec![3; 20]].concat()).unwrap();
        let r = mc_gof(
            &sample,
            &law,
            Some(&Classes::from_uppers(vec![1, 2]).unwrap()),
            &GofConfig { replicates: 500, ..Default::default() },
        )
        .unwrap();
        assert!(r.chi2_ref < 1e-12);
        assert!(r.p_value > 0.9);
    }

    #[test]
    fn replicate_count_checked() {
        let sample = SpellSample::new(vec![1, 2, 3]).unwrap();
        let cfg = GofConfig { replicates: 99, ..Default::default() };
        assert!(mc_gof(&sample, &geom(0.5), None, &cfg).is_err());
    }

    #[test]
    fn deterministic_and_p_on_grid() {
        let sample = SpellSample::new(vec![1, 1, 2, 1, 3, 5, 1, 2, 2, 1, 1, 4]).unwrap();
        let cfg = GofConfig { replicates: 300, seed: 17, smoothing: None };
        let a = mc_gof(&sample, &geom(0.5), None, &cfg).unwrap();
        let b = mc_gof(&sample, &geom(0.5), None, &cfg).unwrap();
        assert_eq!(a, b);
        let scaled = a.p_value * 300.0;
        assert!((scaled - scaled.round()).abs() < 1e-9);
        // Larger references can only lower the exceedance fraction.
        let mut sorted = a.replicate_stats.clone();
        sorted.sort_by(f64::total_cmp);
        let p_at = |x: f64| a.replicate_stats.iter().filter(|&&s| s > x).count();
        for w in sorted.windows(2) {
            assert!(p_at(w[0]) >= p_at(w[1]));
        }
    }

    #[test]
    fn refit_bootstrap_runs() {
        let p = LerchParams::new(0.5, 0.0, 1.0).unwrap();
        let draws = crate::distributions::sample(p, &mut substream(5, 0), 400).unwrap();
        let sample = SpellSample::new(draws).unwrap();
        let cfg = GofConfig { replicates: 100, seed: 3, smoothing: None };
        let r = mc_gof_refit(&sample, FamilyId::Geometric, &FitOptions::default(), &cfg).unwrap();
        assert!(r.p_value > 0.01);
    }
}
