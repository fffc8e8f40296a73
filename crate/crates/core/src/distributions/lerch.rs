//! Evaluation of a single Lerch law: pmf, survival, hazard, quantiles,
//! moments, tabulation and sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{LerchModel, LerchParams};
use super::phi::{ln_phi, log_weighted_mean};
use super::table::PmfTable;
use crate::error::{Error, Result};

/// Longest table any Lerch law is expanded into.
pub const MAX_TABLE_LEN: usize = 10_000_000;

/// Expectations matched by the likelihood equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    /// `E[X]`
    Mean,
    /// `E[ln(a + X)]`
    LogShiftedMean,
    /// `E[1 / (a + X)]`
    InverseShiftedMean,
}

/// A Lerch law with its normalising constant `ln Φ(θ, s, a+1)` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lerch {
    params: LerchParams,
    ln_norm: f64,
    ln_theta: f64,
}

impl Lerch {
    pub fn new(params: LerchParams) -> Result<Self> {
        params.validate()?;
        let ln_norm = ln_phi(params.theta, params.s, params.a + 1.0)?;
        Ok(Lerch {
            params,
            ln_norm,
            ln_theta: params.theta.ln(),
        })
    }

    pub fn params(&self) -> LerchParams {
        self.params
    }

    /// `ln Φ(θ, s, a+1)`.
    pub fn ln_norm(&self) -> f64 {
        self.ln_norm
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        let LerchParams { theta, s, a } = self.params;
        let geometric_part = if k == 1 {
            0.0
        } else if theta == 0.0 {
            return f64::NEG_INFINITY;
        } else {
            (k - 1) as f64 * self.ln_theta
        };
        geometric_part - s * (k as f64 + a).ln() - self.ln_norm
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// `P(X > r) = θ^r Φ(θ, s, a+r+1) / Φ(θ, s, a+1)`.
    pub fn survival(&self, r: u64) -> Result<f64> {
        if r == 0 {
            return Ok(1.0);
        }
        let LerchParams { theta, s, a } = self.params;
        if theta == 0.0 {
            return Ok(0.0);
        }
        let ln_tail = ln_phi(theta, s, a + r as f64 + 1.0)?;
        Ok((r as f64 * self.ln_theta + ln_tail - self.ln_norm).exp().min(1.0))
    }

    /// `P(X = r | X ≥ r) = 1 / ((a+r)^s Φ(θ, s, a+r))` for `r ≥ 1`.
    pub fn hazard(&self, r: u64) -> Result<f64> {
        if r == 0 {
            return Err(Error::invalid("hazard is defined for r >= 1"));
        }
        let LerchParams { theta, s, a } = self.params;
        let x = a + r as f64;
        Ok((-s * x.ln() - ln_phi(theta, s, x)?).exp().min(1.0))
    }

    /// `P(X > r+1) / P(X > r) = θ Φ(θ, s, a+r+2) / Φ(θ, s, a+r+1)`, the
    /// continuation probability past length `r + 1` given `X > r`.
    pub fn survival_ratio(&self, r: u64) -> Result<f64> {
        let LerchParams { theta, s, a } = self.params;
        if theta == 0.0 {
            return Ok(0.0);
        }
        let x = a + r as f64 + 1.0;
        Ok((self.ln_theta + ln_phi(theta, s, x + 1.0)? - ln_phi(theta, s, x)?).exp())
    }

    /// Smallest `k` with `P(X ≤ k) ≥ q`.
    pub fn quantile(&self, q: f64) -> Result<u64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {q}")));
        }
        let mut cum = 0.0;
        for k in 1..=MAX_TABLE_LEN as u64 {
            cum += self.pmf(k);
            if cum >= q {
                return Ok(k);
            }
            // Accumulated rounding can leave `cum` just short of q deep in the
            // tail; confirm against the exact survival function.
            if 1.0 - cum < 1e-9 && self.survival(k)? <= 1.0 - q {
                return Ok(k);
            }
        }
        Err(Error::NumericalDegeneracy(format!(
            "quantile {q} lies beyond {MAX_TABLE_LEN}"
        )))
    }

    pub fn moment(&self, kind: MomentKind) -> Result<f64> {
        let LerchParams { theta, s, a } = self.params;
        let x = a + 1.0;
        match kind {
            MomentKind::Mean => Ok((ln_phi(theta, s - 1.0, x)? - self.ln_norm).exp() - a),
            MomentKind::LogShiftedMean => log_weighted_mean(theta, s, x),
            MomentKind::InverseShiftedMean => Ok((ln_phi(theta, s + 1.0, x)? - self.ln_norm).exp()),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(MomentKind::Mean)
    }

    /// Tabulates the pmf up to the first `K` with `P(X > K) < tail_eps`.
    pub fn to_pmf_table(&self, tail_eps: f64) -> Result<PmfTable> {
        if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
            return Err(Error::invalid(format!("tail_eps must lie in (0, 1e-6], got {tail_eps}")));
        }
        let mut probs = Vec::new();
        let mut cum = 0.0;
        for k in 1..=MAX_TABLE_LEN as u64 {
            let p = self.pmf(k);
            probs.push(p);
            cum += p;
            if 1.0 - cum < 10.0 * tail_eps {
                let tail = self.survival(k)?;
                if tail < tail_eps {
                    return PmfTable::new(probs, tail);
                }
            }
        }
        Err(Error::NumericalDegeneracy(format!(
            "table would exceed {MAX_TABLE_LEN} entries for {:?}",
            self.params
        )))
    }

    /// Inverse-cdf sampler over a precomputed table.
    pub fn sampler(&self) -> Result<LerchSampler> {
        LerchSampler::new(*self)
    }
}

impl LerchModel {
    pub fn law(&self) -> Result<Lerch> {
        Lerch::new(self.params)
    }
}

/// Draws by inverse cdf: a binary search over the tabulated cdf, then an
/// exact walk of the survival function for the rare draws past the table.
#[derive(Debug, Clone)]
pub struct LerchSampler {
    law: Lerch,
    cdf: Vec<f64>,
}

impl LerchSampler {
    pub fn new(law: Lerch) -> Result<Self> {
        let table = law.to_pmf_table(super::table::DEFAULT_TAIL_EPS)?;
        let mut cum = 0.0;
        let cdf = table
            .probs()
            .iter()
            .map(|p| {
                cum += p;
                cum
            })
            .collect();
        Ok(LerchSampler { law, cdf })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return idx as u32 + 1;
        }
        let limit = 1.0 - u;
        let mut k = self.cdf.len() as u64 + 1;
        loop {
            match self.law.survival(k) {
                Ok(sf) if sf > limit && k < u32::MAX as u64 => k += 1,
                _ => return k as u32,
            }
        }
    }

    pub fn draw_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u32> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// `p(k)` of the Lerch law with `params`.
pub fn pmf(params: LerchParams, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("support starts at k = 1"));
    }
    Ok(Lerch::new(params)?.pmf(k))
}

pub fn survival(params: LerchParams, r: u64) -> Result<f64> {
    Lerch::new(params)?.survival(r)
}

pub fn hazard(params: LerchParams, r: u64) -> Result<f64> {
    Lerch::new(params)?.hazard(r)
}

pub fn quantile(params: LerchParams, q: f64) -> Result<u64> {
    Lerch::new(params)?.quantile(q)
}

pub fn moment(params: LerchParams, kind: MomentKind) -> Result<f64> {
    Lerch::new(params)?.moment(kind)
}

pub fn to_pmf_table(params: LerchParams, tail_eps: f64) -> Result<PmfTable> {
    Lerch::new(params)?.to_pmf_table(tail_eps)
}

/// `n` i.i.d. draws; identical for identical rng state.
pub fn sample<R: Rng + ?Sized>(params: LerchParams, rng: &mut R, n: usize) -> Result<Vec<u32>> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    Ok(Lerch::new(params)?.sampler()?.draw_n(rng, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn geom(theta: f64) -> LerchParams {
        LerchParams::new(theta, 0.0, 1.0).unwrap()
    }

    fn logser(theta: f64) -> LerchParams {
        LerchParams::new(theta, 1.0, 0.0).unwrap()
    }

    const CEV_IT: (f64, f64, f64) = (0.913, 0.442, -0.953);

    fn cev_it() -> LerchParams {
        LerchParams::new(CEV_IT.0, CEV_IT.1, CEV_IT.2).unwrap()
    }

    #[test]
    fn geometric_pmf_values() {
        let p = geom(0.446);
        assert_relative_eq!(pmf(p, 1).unwrap(), 0.554, max_relative = 1e-12);
        assert_relative_eq!(pmf(p, 2).unwrap(), 0.247084, max_relative = 1e-12);
    }

    #[test]
    fn logarithmic_pmf_one() {
        assert_relative_eq!(pmf(logser(0.5), 1).unwrap(), 0.5 / 2f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(pmf(logser(0.5), 1).unwrap(), 0.7213475, max_relative = 1e-7);
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival(cev_it(), 0).unwrap(), 1.0);
        assert_relative_eq!(survival(geom(0.5), 3).unwrap(), 0.125, max_relative = 1e-13);
        let law = Lerch::new(cev_it()).unwrap();
        let mut cum = 0.0;
        for r in 1..=50 {
            cum += law.pmf(r);
            assert!((law.survival(r).unwrap() - (1.0 - cum)).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn hazard_examples() {
        let g = Lerch::new(geom(0.446)).unwrap();
        for r in 1..=100 {
            assert_relative_eq!(g.hazard(r).unwrap(), 0.554, max_relative = 1e-12);
        }
        assert_relative_eq!(hazard(logser(0.5), 1).unwrap(), 0.5 / 2f64.ln(), max_relative = 1e-12);
        let law = Lerch::new(cev_it()).unwrap();
        for r in 1..=40 {
            let direct = law.pmf(r) / law.survival(r - 1).unwrap();
            assert!((law.hazard(r).unwrap() - direct).abs() < 1e-12);
        }
        assert!(law.hazard(0).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(geom(0.5), 0.99).unwrap(), 7);
        assert_eq!(quantile(geom(0.5), 1e-9).unwrap(), 1);
        assert_eq!(quantile(cev_it(), 1e-12).unwrap(), 1);
        // cdf(1) = 0.554 already exceeds one half
        assert_eq!(quantile(geom(0.446), 0.5).unwrap(), 1);
        assert!(quantile(geom(0.5), 1.0).is_err());
        assert!(quantile(geom(0.5), 0.0).is_err());
    }

    #[test]
    fn moment_examples() {
        assert_relative_eq!(moment(geom(0.446), MomentKind::Mean).unwrap(), 1.0 / 0.554, max_relative = 1e-12);
        assert_relative_eq!(moment(geom(0.446), MomentKind::Mean).unwrap(), 1.8050542, max_relative = 1e-7);
        let degenerate = LerchParams { theta: 0.0, s: 0.0, a: 1.0 };
        assert_relative_eq!(moment(degenerate, MomentKind::Mean).unwrap(), 1.0, max_relative = 1e-15);
        let log_mean = -0.5 / (0.5 * (0.5f64).ln());
        assert_relative_eq!(moment(logser(0.5), MomentKind::Mean).unwrap(), log_mean, max_relative = 1e-12);
        assert_relative_eq!(log_mean, 1.4426950, max_relative = 1e-7);
    }

    #[test]
    fn moments_match_direct_sums() {
        let law = Lerch::new(cev_it()).unwrap();
        let a = CEV_IT.2;
        let (mut m, mut l, mut h) = (0.0, 0.0, 0.0);
        for k in 1..=3000u64 {
            let p = law.pmf(k);
            m += k as f64 * p;
            l += (a + k as f64).ln() * p;
            h += p / (a + k as f64);
        }
        assert_relative_eq!(law.moment(MomentKind::Mean).unwrap(), m, max_relative = 1e-9);
        assert_relative_eq!(law.moment(MomentKind::LogShiftedMean).unwrap(), l, max_relative = 1e-9);
        assert_relative_eq!(law.moment(MomentKind::InverseShiftedMean).unwrap(), h, max_relative = 1e-9);
    }

    #[test]
    fn table_length_and_mass() {
        let t = to_pmf_table(geom(0.5), 1e-10).unwrap();
        assert_eq!(t.len(), 34);
        assert!((t.probs().iter().sum::<f64>() + t.tail() - 1.0).abs() < 1e-12);
        let t = to_pmf_table(geom(0.446), 1e-10).unwrap();
        let k = t.len() as i32;
        assert!(0.446f64.powi(k) < 1e-10 && 0.446f64.powi(k - 1) >= 1e-10);
        let t = to_pmf_table(cev_it(), 1e-10).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-12);
        assert!(to_pmf_table(geom(0.5), 1e-3).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_positive() {
        let a = sample(cev_it(), &mut substream(3, 0), 500).unwrap();
        let b = sample(cev_it(), &mut substream(3, 0), 500).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v >= 1));
        assert!(sample(cev_it(), &mut substream(3, 0), 0).is_err());
    }

    #[test]
    fn geometric_sample_mean() {
        let draws = sample(geom(0.5), &mut substream(11, 0), 100_000).unwrap();
        let mean = draws.iter().map(|&v| v as f64).sum::<f64>() / draws.len() as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn sampler_reaches_past_table() {
        struct Top;
        impl rand::RngCore for Top {
            fn next_u32(&mut self) -> u32 {
                u32::MAX
            }
            fn next_u64(&mut self) -> u64 {
                u64::MAX
            }
            fn fill_bytes(&mut self, dst: &mut [u8]) {
                dst.fill(0xff)
            }
        }
        let law = Lerch::new(geom(0.5)).unwrap();
        let s = law.sampler().unwrap();
        let v = s.draw(&mut Top);
        assert!(v as usize > 34, "drew {v}");
    }
}
