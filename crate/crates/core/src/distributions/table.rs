use serde::Serialize;

use crate::error::{Error, Result};

/// Default tail mass left beyond the last tabulated value.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;

/// A pmf on `{1, 2, ...}` tabulated up to `K` with explicit tail mass
/// `P(X > K)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfTable {
    probs: Vec<f64>,
    tail: f64,
    /// `sf[r] = P(X > r)` for `r = 0..=K`, accumulated from the tail inward.
    #[serde(skip)]
    sf: Vec<f64>,
}

impl PmfTable {
    /// `probs[i]` is `P(X = i + 1)`.
    pub fn new(probs: Vec<f64>, tail: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("pmf table needs at least one value"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("pmf table probabilities must be finite and non-negative"));
        }
        if !(tail.is_finite() && tail >= 0.0) {
            return Err(Error::invalid(format!("tail mass must be non-negative, got {tail}")));
        }
        let mut sf = vec![0.0; probs.len() + 1];
        sf[probs.len()] = tail;
        for r in (0..probs.len()).rev() {
            sf[r] = sf[r + 1] + probs[r];
        }
        Ok(PmfTable { probs, tail, sf })
    }

    /// Builds a table whose tail is whatever mass `probs` leaves unaccounted.
    pub fn with_residual_tail(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        PmfTable::new(probs, (1.0 - total).max(0.0))
    }

    /// Largest tabulated value `K`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Total mass, which should be 1.
    pub fn total(&self) -> f64 {
        self.sf[0]
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.probs.get(k as usize - 1).copied().unwrap_or(0.0)
    }

    /// `P(X > r)`; beyond `K` only the undistributed tail mass is known.
    pub fn survival(&self, r: u64) -> f64 {
        let r = r as usize;
        if r < self.sf.len() {
            self.sf[r]
        } else {
            self.tail
        }
    }

    pub fn cdf(&self, k: u64) -> f64 {
        1.0 - self.survival(k)
    }

    /// Mean, with any tail mass placed at `K + 1`.
    pub fn mean(&self) -> f64 {
        self.sf.iter().sum()
    }

    /// Smallest `k` with `P(X ≤ k) ≥ q`; `K + 1` if only the tail reaches it.
    pub fn quantile(&self, q: f64) -> Result<u64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {q}")));
        }
        let mut cum = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            cum += p;
            if cum >= q {
                return Ok(i as u64 + 1);
            }
        }
        Ok(self.probs.len() as u64 + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn survival_and_total() {
        let t = PmfTable::new(vec![0.5, 0.25, 0.125], 0.125).unwrap();
        assert_relative_eq!(t.total(), 1.0);
        assert_eq!(t.survival(0), 1.0);
        assert_eq!(t.survival(2), 0.25);
        assert_eq!(t.survival(10), 0.125);
        assert_eq!(t.pmf(4), 0.0);
        assert_eq!(t.quantile(0.7).unwrap(), 2);
        assert_eq!(t.quantile(0.95).unwrap(), 4);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(PmfTable::new(vec![], 1.0).is_err());
        assert!(PmfTable::new(vec![-0.1, 1.1], 0.0).is_err());
        assert!(PmfTable::new(vec![1.0], f64::NAN).is_err());
    }
}
