//! Synthetic stations: an alternating renewal of wet and dry spells with
//! season-dependent Lerch laws.

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::distributions::{LerchModel, LerchSampler};
use crate::error::{Error, Result};
use crate::extraction::RainfallSeries;
use crate::rng::task_stream;
use crate::sample::Period;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonLaws {
    pub wet: LerchModel,
    pub dry: LerchModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticStation {
    pub name: String,
    pub start: NaiveDate,
    pub days: usize,
    /// Laws for spells starting April to September.
    pub warm: SeasonLaws,
    /// Laws for spells starting October to March.
    pub cold: SeasonLaws,
    /// Mean depth above the threshold on rainy days, in millimetres.
    pub mean_excess_mm: f64,
    pub threshold_mm: f64,
    /// Probability that a dry day records a trace below the threshold.
    pub drizzle_prob: f64,
    /// Expected number of missing-data gaps per year.
    pub gaps_per_year: f64,
    pub max_gap_days: usize,
}

impl SyntheticStation {
    /// A thirty-year station with a wetter cold season.
    pub fn example() -> Self {
        SyntheticStation {
            name: "SYN".into(),
            start: NaiveDate::from_ymd_opt(1971, 1, 1).expect("valid date"),
            days: 10_957,
            warm: SeasonLaws {
                wet: LerchModel::polylog(0.35, 0.6).expect("valid law"),
                dry: LerchModel::lerch3(0.93, 0.45, -0.5).expect("valid law"),
            },
            cold: SeasonLaws {
                wet: LerchModel::geometric(0.5).expect("valid law"),
                dry: LerchModel::polylog(0.88, 0.5).expect("valid law"),
            },
            mean_excess_mm: 6.0,
            threshold_mm: 1.0,
            drizzle_prob: 0.25,
            gaps_per_year: 0.3,
            max_gap_days: 6,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::invalid("synthetic station needs at least one day"));
        }
        if !(self.mean_excess_mm > 0.0 && self.threshold_mm > 0.0) {
            return Err(Error::invalid("depth scale and threshold must be positive"));
        }
        if !(0.0..=1.0).contains(&self.drizzle_prob) || !(self.gaps_per_year >= 0.0) {
            return Err(Error::invalid("drizzle probability or gap rate out of range"));
        }
        Ok(())
    }

    /// Generates the daily series from the `"<name>/synthetic"` stream of `seed`.
    pub fn generate(&self, seed: u64) -> Result<RainfallSeries> {
        self.validate()?;
        let samplers = |laws: &SeasonLaws| -> Result<(LerchSampler, LerchSampler)> {
            Ok((laws.wet.law()?.sampler()?, laws.dry.law()?.sampler()?))
        };
        let warm = samplers(&self.warm)?;
        let cold = samplers(&self.cold)?;
        let excess = Exp::new(1.0 / self.mean_excess_mm).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = task_stream(seed, &format!("{}/synthetic", self.name));
        let mut wet_flags = Vec::with_capacity(self.days);
        let mut wet = rng.random_bool(0.5);
        while wet_flags.len() < self.days {
            let date = self.start + Days::new(wet_flags.len() as u64);
            let (w, d) = if Period::S1.contains_month(date.month()) { &warm } else { &cold };
            let len = if wet { w.draw(&mut rng) } else { d.draw(&mut rng) } as usize;
            let take = len.min(self.days - wet_flags.len());
            wet_flags.extend(std::iter::repeat_n(wet, take));
            wet = !wet;
        }
        // Whole tenths of a millimetre: wet days round up, drizzle rounds down.
        let tenths = |x: f64, up: bool| if up { (x * 10.0).ceil() / 10.0 } else { (x * 10.0).floor() / 10.0 };
        let mut depths: Vec<Option<f64>> = wet_flags
            .iter()
            .map(|&w| {
                Some(if w {
                    tenths(self.threshold_mm + excess.sample(&mut rng), true)
                } else if rng.random_bool(self.drizzle_prob) {
                    let d = tenths(rng.random_range(0.0..self.threshold_mm), false);
                    if d < self.threshold_mm { d } else { 0.0 }
                } else {
                    0.0
                })
            })
            .collect();
        let gap_prob = self.gaps_per_year / 365.25;
        let mut day = 0;
        while day < depths.len() {
            if gap_prob > 0.0 && rng.random_bool(gap_prob.min(1.0)) {
                let len = rng.random_range(1..=self.max_gap_days.max(1));
                for d in depths.iter_mut().skip(day).take(len) {
                    *d = None;
                }
                day += len;
            }
            day += 1;
        }
        RainfallSeries::new(self.start, depths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{events, mark_rainy};

    #[test]
    fn generated_series_is_reproducible() {
        let st = SyntheticStation {
            days: 2000,
            ..SyntheticStation::example()
        };
        let a = st.generate(1).unwrap();
        assert_eq!(a, st.generate(1).unwrap());
        assert_ne!(a, st.generate(2).unwrap());
        assert_eq!(a.len(), 2000);
        let ind = mark_rainy(&a, st.threshold_mm).unwrap();
        let ev = events(&ind);
        assert!(ev.ws.len() > 100);
    }

    #[test]
    fn gap_free_station_has_no_missing_days() {
        let st = SyntheticStation {
            days: 500,
            gaps_per_year: 0.0,
            ..SyntheticStation::example()
        };
        assert!(st.generate(3).unwrap().depths().iter().all(Option::is_some));
    }
}
