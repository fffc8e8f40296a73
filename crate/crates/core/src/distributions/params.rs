use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Members of the Lerch family, from the general three-parameter law down to
/// its one-parameter special cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    /// Free θ, s, a.
    Lerch3,
    /// a = 0.
    Polylog,
    /// s = 1, a = 0.
    Logarithmic,
    /// s = 0 (a is irrelevant and pinned to 1).
    Geometric,
    /// s = 1.
    ExtendedLog,
}

impl FamilyId {
    pub const ALL: [FamilyId; 5] = [
        FamilyId::Lerch3,
        FamilyId::Polylog,
        FamilyId::Logarithmic,
        FamilyId::Geometric,
        FamilyId::ExtendedLog,
    ];

    /// Identifier 1..=5 in the conventional table ordering.
    pub fn id(self) -> u8 {
        match self {
            FamilyId::Lerch3 => 1,
            FamilyId::Polylog => 2,
            FamilyId::Logarithmic => 3,
            FamilyId::Geometric => 4,
            FamilyId::ExtendedLog => 5,
        }
    }

    pub fn free_params(self) -> usize {
        match self {
            FamilyId::Lerch3 => 3,
            FamilyId::Polylog | FamilyId::ExtendedLog => 2,
            FamilyId::Logarithmic | FamilyId::Geometric => 1,
        }
    }

    pub fn has_free_s(self) -> bool {
        matches!(self, FamilyId::Lerch3 | FamilyId::Polylog)
    }

    pub fn has_free_a(self) -> bool {
        matches!(self, FamilyId::Lerch3 | FamilyId::ExtendedLog)
    }

    /// Value of `s` when the family pins it.
    pub fn fixed_s(self) -> Option<f64> {
        match self {
            FamilyId::Logarithmic | FamilyId::ExtendedLog => Some(1.0),
            FamilyId::Geometric => Some(0.0),
            _ => None,
        }
    }

    /// Value of `a` when the family pins it.
    pub fn fixed_a(self) -> Option<f64> {
        match self {
            FamilyId::Polylog | FamilyId::Logarithmic => Some(0.0),
            FamilyId::Geometric => Some(1.0),
            _ => None,
        }
    }

    /// Whether every law of `self` is also a law of `other` (reflexive).
    pub fn is_nested_in(self, other: FamilyId) -> bool {
        use FamilyId::*;
        self == other
            || other == Lerch3
            || matches!(
                (self, other),
                (Logarithmic, Polylog) | (Geometric, Polylog) | (Logarithmic, ExtendedLog)
            )
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::Lerch3 => "lerch3",
            FamilyId::Polylog => "polylog",
            FamilyId::Logarithmic => "logarithmic",
            FamilyId::Geometric => "geometric",
            FamilyId::ExtendedLog => "extended_log",
        }
    }

    pub fn parse(name: &str) -> Result<FamilyId> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.name() == name || f.id().to_string() == name)
            .ok_or_else(|| Error::invalid(format!("unknown family '{name}'")))
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters `{θ, s, a}` of `p(k) = θ^{k-1} / ((k+a)^s Φ(θ, s, a+1))`.
///
/// `θ = 0` is accepted as the degenerate limit with all mass at `k = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LerchParams {
    pub theta: f64,
    pub s: f64,
    pub a: f64,
}

impl LerchParams {
    pub fn new(theta: f64, s: f64, a: f64) -> Result<Self> {
        let p = LerchParams { theta, s, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && (0.0..1.0).contains(&self.theta)) {
            return Err(Error::invalid(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if !self.s.is_finite() {
            return Err(Error::invalid(format!("s must be finite, got {}", self.s)));
        }
        if !(self.a.is_finite() && self.a > -1.0) {
            return Err(Error::invalid(format!("a must exceed -1, got {}", self.a)));
        }
        Ok(())
    }
}

/// A family member together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LerchModel {
    pub family: FamilyId,
    pub params: LerchParams,
}

impl LerchModel {
    /// Builds a model, checking that pinned parameters hold exactly.
    pub fn new(family: FamilyId, params: LerchParams) -> Result<Self> {
        params.validate()?;
        if let Some(s) = family.fixed_s() {
            if params.s != s {
                return Err(Error::invalid(format!("{family} requires s = {s}, got {}", params.s)));
            }
        }
        if let Some(a) = family.fixed_a() {
            if params.a != a {
                return Err(Error::invalid(format!("{family} requires a = {a}, got {}", params.a)));
            }
        }
        Ok(LerchModel { family, params })
    }

    pub fn lerch3(theta: f64, s: f64, a: f64) -> Result<Self> {
        Self::new(FamilyId::Lerch3, LerchParams::new(theta, s, a)?)
    }

    pub fn polylog(theta: f64, s: f64) -> Result<Self> {
        Self::new(FamilyId::Polylog, LerchParams::new(theta, s, 0.0)?)
    }

    pub fn logarithmic(theta: f64) -> Result<Self> {
        Self::new(FamilyId::Logarithmic, LerchParams::new(theta, 1.0, 0.0)?)
    }

    /// Geometric law `(1-θ) θ^{k-1}`; θ is the continuation probability.
    pub fn geometric(theta: f64) -> Result<Self> {
        Self::new(FamilyId::Geometric, LerchParams::new(theta, 0.0, 1.0)?)
    }

    pub fn extended_log(theta: f64, a: f64) -> Result<Self> {
        Self::new(FamilyId::ExtendedLog, LerchParams::new(theta, 1.0, a)?)
    }

    /// Model with the family's pinned values filled in around free values.
    pub fn from_free(family: FamilyId, theta: f64, s: f64, a: f64) -> Result<Self> {
        let s = family.fixed_s().unwrap_or(s);
        let a = family.fixed_a().unwrap_or(a);
        Self::new(family, LerchParams::new(theta, s, a)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_parameter_counts() {
        let counts: Vec<usize> = FamilyId::ALL.iter().map(|f| f.free_params()).collect();
        assert_eq!(counts, vec![3, 2, 1, 1, 2]);
    }

    #[test]
    fn nesting_order() {
        use FamilyId::*;
        for f in FamilyId::ALL {
            assert!(f.is_nested_in(Lerch3));
            assert!(f.is_nested_in(f));
        }
        assert!(Logarithmic.is_nested_in(Polylog));
        assert!(Geometric.is_nested_in(Polylog));
        assert!(!Polylog.is_nested_in(ExtendedLog));
        assert!(!Geometric.is_nested_in(ExtendedLog));
        assert!(!Lerch3.is_nested_in(Polylog));
    }

    #[test]
    fn pinned_values_enforced() {
        assert!(LerchModel::new(FamilyId::Geometric, LerchParams::new(0.5, 0.1, 1.0).unwrap()).is_err());
        assert!(LerchModel::polylog(0.5, 0.4).unwrap().params.a == 0.0);
        assert!(LerchParams::new(0.5, 1.0, -1.0).is_err());
        assert!(LerchParams::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn parse_names_and_ids() {
        assert_eq!(FamilyId::parse("extended_log").unwrap(), FamilyId::ExtendedLog);
        assert_eq!(FamilyId::parse("4").unwrap(), FamilyId::Geometric);
        assert!(FamilyId::parse("zipf").is_err());
    }
}
