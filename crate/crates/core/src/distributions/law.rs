use super::lerch::Lerch;
use super::table::PmfTable;
use crate::error::Result;

/// Any pmf on `{1, 2, ...}` that the tests and derivations can consume.
pub trait SpellLaw: Send + Sync {
    fn pmf(&self, k: u64) -> f64;

    /// `P(X > r)`.
    fn survival(&self, r: u64) -> Result<f64>;

    fn mean(&self) -> Result<f64>;

    fn quantile(&self, q: f64) -> Result<u64>;

    /// `P(X = r | X ≥ r)`.
    fn hazard(&self, r: u64) -> Result<f64> {
        let at_risk = self.survival(r.saturating_sub(1))?;
        Ok(if at_risk > 0.0 { self.pmf(r) / at_risk } else { 1.0 })
    }
}

impl SpellLaw for Lerch {
    fn pmf(&self, k: u64) -> f64 {
        Lerch::pmf(self, k)
    }
    fn survival(&self, r: u64) -> Result<f64> {
        Lerch::survival(self, r)
    }
    fn mean(&self) -> Result<f64> {
        Lerch::mean(self)
    }
    fn quantile(&self, q: f64) -> Result<u64> {
        Lerch::quantile(self, q)
    }
    fn hazard(&self, r: u64) -> Result<f64> {
        Lerch::hazard(self, r)
    }
}

impl SpellLaw for PmfTable {
    fn pmf(&self, k: u64) -> f64 {
        PmfTable::pmf(self, k)
    }
    fn survival(&self, r: u64) -> Result<f64> {
        Ok(PmfTable::survival(self, r))
    }
    fn mean(&self) -> Result<f64> {
        Ok(PmfTable::mean(self))
    }
    fn quantile(&self, q: f64) -> Result<u64> {
        PmfTable::quantile(self, q)
    }
}
