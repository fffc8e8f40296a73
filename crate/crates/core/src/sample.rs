use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five rainfall time variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// Inter-arrival time between consecutive rainy days.
    It,
    /// Wet spell.
    Ws,
    /// Dry spell.
    Ds,
    /// Wet chain.
    Wch,
    /// Dry chain.
    Dch,
}

impl Variable {
    pub const ALL: [Variable; 5] = [Variable::It, Variable::Ws, Variable::Ds, Variable::Wch, Variable::Dch];

    pub fn name(self) -> &'static str {
        match self {
            Variable::It => "it",
            Variable::Ws => "ws",
            Variable::Ds => "ds",
            Variable::Wch => "wch",
            Variable::Dch => "dch",
        }
    }

    pub fn parse(s: &str) -> Result<Variable> {
        Variable::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown variable '{s}'")))
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Analysis period: the whole year, one of the two half-year seasons, or an
/// arbitrary month set (bit `m - 1` set for month `m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Year,
    /// April to September.
    S1,
    /// October to March.
    S2,
    Months(u16),
}

impl Period {
    pub fn contains_month(self, month: u32) -> bool {
        debug_assert!((1..=12).contains(&month));
        match self {
            Period::Year => true,
            Period::S1 => (4..=9).contains(&month),
            Period::S2 => !(4..=9).contains(&month),
            Period::Months(mask) => mask & (1 << (month - 1)) != 0,
        }
    }

    pub fn name(self) -> String {
        match self {
            Period::Year => "year".into(),
            Period::S1 => "s1".into(),
            Period::S2 => "s2".into(),
            Period::Months(mask) => {
                let months: Vec<String> =
                    (1..=12).filter(|m| mask & (1 << (m - 1)) != 0).map(|m| m.to_string()).collect();
                format!("months-{}", months.join("-"))
            }
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Positive integer durations of one time variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpellSample {
    pub variable: Option<Variable>,
    pub period: Option<Period>,
    pub station: String,
    values: Vec<u32>,
}

impl SpellSample {
    /// Sample without extraction metadata (synthetic draws, ad-hoc data).
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&v| v == 0) {
            return Err(Error::invalid(format!("durations must be >= 1 (index {pos} is 0)")));
        }
        Ok(SpellSample {
            variable: None,
            period: None,
            station: String::new(),
            values,
        })
    }

    pub fn labelled(values: Vec<u32>, variable: Variable, period: Period, station: &str) -> Result<Self> {
        let mut s = SpellSample::new(values)?;
        s.variable = Some(variable);
        s.period = Some(period);
        s.station = station.to_string();
        Ok(s)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> Option<u32> {
        self.values.iter().copied().max()
    }

    pub fn sum(&self) -> u64 {
        self.values.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() as f64 / self.values.len() as f64
    }

    /// Distinct values with their counts, ascending.
    pub fn frequencies(&self) -> Vec<(u32, usize)> {
        let mut map = BTreeMap::new();
        for &v in &self.values {
            *map.entry(v).or_insert(0usize) += 1;
        }
        map.into_iter().collect()
    }

    /// Empirical `P(X ≤ k)`.
    pub fn ecdf(&self, k: u32) -> f64 {
        self.values.iter().filter(|&&v| v <= k).count() as f64 / self.values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_durations() {
        assert!(SpellSample::new(vec![1, 0, 2]).is_err());
    }

    #[test]
    fn frequencies_sorted() {
        let s = SpellSample::new(vec![3, 1, 3, 2, 1, 3]).unwrap();
        assert_eq!(s.frequencies(), vec![(1, 2), (2, 1), (3, 3)]);
        assert_eq!(s.ecdf(2), 0.5);
    }

    #[test]
    fn seasons_partition_the_year() {
        for m in 1..=12 {
            assert!(Period::S1.contains_month(m) != Period::S2.contains_month(m));
        }
        assert!(Period::Months(0b1).contains_month(1));
        assert_eq!(Period::Months(0b101).name(), "months-1-3");
    }
}
