//! The Lerch (Hurwitz-Lerch-Zeta) family of distributions on `{1, 2, ...}`.

mod law;
mod lerch;
mod params;
mod phi;
mod table;

pub use law::SpellLaw;
pub use lerch::{
    hazard, moment, pmf, quantile, sample, survival, to_pmf_table, Lerch, LerchSampler,
    MomentKind, MAX_TABLE_LEN,
};
pub use params::{FamilyId, LerchModel, LerchParams};
pub use phi::{ln_phi, log_weighted_mean, phi, TERM_CAP};
pub use table::{PmfTable, DEFAULT_TAIL_EPS};
