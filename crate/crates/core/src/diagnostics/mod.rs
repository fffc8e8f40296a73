//! Trend tests and spell diagnostics.

mod spells;
mod trend;

pub use spells::{
    cumfreq_ratio, quantile_compare, see, summary_stats, survival_ratios, survival_ratios_law, QuantileComparison,
    RatioCutoff, RatioPoint, RatioSeries, SummaryStats, DEFAULT_MIN_COUNT,
};
pub use trend::{
    hamed_rao_factor, kendall_s, kendall_tau, mk_test, mk_test_corrected, Correction, TrendResult,
    DEFAULT_MAX_LAG, MIN_CORRECTED_LEN, MIN_TREND_LEN,
};
