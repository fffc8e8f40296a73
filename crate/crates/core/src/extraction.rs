//! Daily rainfall series to spell samples.

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Period, SpellSample, Variable};

pub const DEFAULT_THRESHOLD_MM: f64 = 1.0;

/// Daily depths in millimetres from `start`, one entry per calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct RainfallSeries {
    start: NaiveDate,
    depths: Vec<Option<f64>>,
}

impl RainfallSeries {
    pub fn new(start: NaiveDate, depths: Vec<Option<f64>>) -> Result<Self> {
        if let Some(i) = depths.iter().position(|d| d.is_some_and(|x| !(x.is_finite() && x >= 0.0))) {
            return Err(Error::invalid(format!("depth at day {i} is negative or not finite")));
        }
        Ok(RainfallSeries { start, depths })
    }

    /// Builds a series from dated records. Dates must be strictly increasing;
    /// skipped calendar days become missing. Returns the number of filled days.
    pub fn from_records(records: &[(NaiveDate, Option<f64>)]) -> Result<(Self, usize)> {
        let Some(&(start, _)) = records.first() else {
            return Err(Error::invalid("no records"));
        };
        let mut depths = Vec::with_capacity(records.len());
        let mut filled = 0;
        let mut prev: Option<NaiveDate> = None;
        for &(date, depth) in records {
            if let Some(p) = prev {
                let step = (date - p).num_days();
                if step <= 0 {
                    return Err(Error::invalid(format!("dates not strictly increasing at {date}")));
                }
                let skipped = step as usize - 1;
                depths.extend(std::iter::repeat_n(None, skipped));
                filled += skipped;
            }
            depths.push(depth);
            prev = Some(date);
        }
        Ok((RainfallSeries::new(start, depths)?, filled))
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn depths(&self) -> &[Option<f64>] {
        &self.depths
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start + Days::new(day as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayState {
    Rainy,
    Dry,
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RainyIndicator {
    start: NaiveDate,
    states: Vec<DayState>,
    threshold: f64,
}

impl RainyIndicator {
    pub fn from_states(start: NaiveDate, states: Vec<DayState>, threshold: f64) -> Self {
        RainyIndicator {
            start,
            states,
            threshold,
        }
    }

    /// Parses `R`, `D` and `M` characters (whitespace ignored), starting on
    /// 1 January 2000.
    pub fn from_pattern(pattern: &str) -> Result<Self> {
        let states = pattern
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'R' => Ok(DayState::Rainy),
                'D' => Ok(DayState::Dry),
                'M' => Ok(DayState::Missing),
                other => Err(Error::invalid(format!("unknown day marker {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        Ok(RainyIndicator::from_states(start, states, DEFAULT_THRESHOLD_MM))
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn states(&self) -> &[DayState] {
        &self.states
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start + Days::new(day as u64)
    }

    pub fn count(&self, state: DayState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }
}

/// A day is rainy when its depth is at least `h_star`.
pub fn mark_rainy(series: &RainfallSeries, h_star: f64) -> Result<RainyIndicator> {
    if !(h_star.is_finite() && h_star > 0.0) {
        return Err(Error::invalid(format!("threshold must be positive, got {h_star}")));
    }
    if series.is_empty() {
        return Err(Error::invalid("empty rainfall series"));
    }
    let states = series
        .depths
        .iter()
        .map(|d| match d {
            None => DayState::Missing,
            Some(x) if *x >= h_star => DayState::Rainy,
            Some(_) => DayState::Dry,
        })
        .collect();
    Ok(RainyIndicator::from_states(series.start, states, h_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorPolicy {
    Include,
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeasonRule {
    ByStart,
    ByEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub threshold: f64,
    pub periods: Vec<Period>,
    pub rule: SeasonRule,
    pub censored: CensorPolicy,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            threshold: DEFAULT_THRESHOLD_MM,
            periods: vec![Period::Year],
            rule: SeasonRule::ByStart,
            censored: CensorPolicy::Include,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::invalid("threshold must be positive"));
        }
        if self.periods.is_empty() {
            return Err(Error::invalid("at least one period required"));
        }
        if let Some(Period::Months(0)) = self.periods.iter().find(|p| matches!(p, Period::Months(0))) {
            return Err(Error::invalid("custom season has no months"));
        }
        Ok(())
    }
}

/// One extracted duration with its calendar footprint (day indices,
/// inclusive). An inter-arrival time spans the days after the previous rainy
/// day up to and including the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellEvent {
    pub value: u32,
    pub start: usize,
    pub end: usize,
    /// True when a record edge or missing day may have truncated the event.
    pub censored: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellEvents {
    pub it: Vec<SpellEvent>,
    pub ws: Vec<SpellEvent>,
    pub ds: Vec<SpellEvent>,
    pub wch: Vec<SpellEvent>,
    pub dch: Vec<SpellEvent>,
}

impl SpellEvents {
    pub fn get(&self, variable: Variable) -> &[SpellEvent] {
        match variable {
            Variable::It => &self.it,
            Variable::Ws => &self.ws,
            Variable::Ds => &self.ds,
            Variable::Wch => &self.wch,
            Variable::Dch => &self.dch,
        }
    }

    /// Durations in chronological order under `policy`.
    pub fn values(&self, variable: Variable, policy: CensorPolicy) -> Vec<u32> {
        self.get(variable)
            .iter()
            .filter(|e| policy == CensorPolicy::Include || !e.censored)
            .map(|e| e.value)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: usize,
    len: usize,
}

impl Run {
    fn end(&self) -> usize {
        self.start + self.len - 1
    }
}

fn event(value: usize, start: usize, end: usize, censored: bool) -> SpellEvent {
    SpellEvent {
        value: u32::try_from(value).expect("duration fits in u32"),
        start,
        end,
        censored,
    }
}

fn segment_events(states: &[DayState], lo: usize, hi: usize, out: &mut SpellEvents) {
    let mut wet: Vec<Run> = Vec::new();
    let mut dry: Vec<Run> = Vec::new();
    let mut day = lo;
    while day <= hi {
        let rainy = states[day] == DayState::Rainy;
        let start = day;
        while day <= hi && (states[day] == DayState::Rainy) == rainy {
            day += 1;
        }
        let run = Run { start, len: day - start };
        if rainy {
            wet.push(run);
        } else {
            dry.push(run);
        }
    }
    if wet.is_empty() {
        return;
    }
    let lead = dry.first().filter(|d| d.start == lo).map_or(0, |d| d.len);
    let trail = dry.last().filter(|d| d.end() == hi).map_or(0, |d| d.len);
    // Interior dry runs: gaps[i] separates wet[i] and wet[i + 1].
    let gaps: Vec<Run> = wet
        .windows(2)
        .map(|w| Run {
            start: w[0].end() + 1,
            len: w[1].start - w[0].end() - 1,
        })
        .collect();

    let mut prev_rainy: Option<usize> = None;
    for w in &wet {
        for d in w.start..=w.end() {
            if let Some(p) = prev_rainy {
                out.it.push(event(d - p, p + 1, d, false));
            }
            prev_rainy = Some(d);
        }
    }

    for w in &wet {
        out.ws.push(event(w.len, w.start, w.end(), w.start == lo || w.end() == hi));
    }
    for g in &gaps {
        out.ds.push(event(g.len, g.start, g.end(), false));
    }

    let last = wet.len() - 1;
    let mut i = 0;
    while i <= last {
        let mut j = i;
        while j < last && gaps[j].len == 1 {
            j += 1;
        }
        let head_open = i == 0 && (wet[0].start == lo || lead == 1);
        let tail_open = j == last && (wet[last].end() == hi || trail == 1);
        let len = wet[i..=j].iter().map(|w| w.len).sum();
        out.wch.push(event(len, wet[i].start, wet[j].end(), head_open || tail_open));
        i = j + 1;
    }

    let mut i = 0;
    while i < gaps.len() {
        let mut j = i;
        while j + 1 < gaps.len() && wet[j + 1].len == 1 {
            j += 1;
        }
        let head_open = i == 0 && wet[0].len == 1;
        let tail_open = j + 1 == last && wet[last].len == 1;
        let len = gaps[i..=j].iter().map(|g| g.len).sum();
        out.dch.push(event(len, gaps[i].start, gaps[j].end(), head_open || tail_open));
        i = j + 1;
    }
}

/// All events of the five variables. Missing days split the record into
/// independent segments; nothing spans a missing day.
pub fn events(ind: &RainyIndicator) -> SpellEvents {
    let mut out = SpellEvents::default();
    let states = &ind.states;
    let mut day = 0;
    while day < states.len() {
        if states[day] == DayState::Missing {
            day += 1;
            continue;
        }
        let lo = day;
        while day < states.len() && states[day] != DayState::Missing {
            day += 1;
        }
        segment_events(states, lo, day - 1, &mut out);
    }
    out
}

fn sample_of(values: Vec<u32>) -> SpellSample {
    SpellSample::new(values).expect("extracted durations are positive")
}

/// Inter-arrival times between consecutive rainy days. Empty when fewer than
/// two rainy days share a segment.
pub fn extract_it(ind: &RainyIndicator) -> SpellSample {
    sample_of(events(ind).values(Variable::It, CensorPolicy::Include))
}

pub fn derive_spells(ind: &RainyIndicator) -> (SpellSample, SpellSample) {
    let ev = events(ind);
    (
        sample_of(ev.values(Variable::Ws, CensorPolicy::Include)),
        sample_of(ev.values(Variable::Ds, CensorPolicy::Include)),
    )
}

/// Wet chains (wet spells joined across single dry days) and dry chains (dry
/// spells joined across single rainy days). Lengths count rainy or dry days
/// only.
pub fn derive_chains(ind: &RainyIndicator) -> (SpellSample, SpellSample) {
    let ev = events(ind);
    (
        sample_of(ev.values(Variable::Wch, CensorPolicy::Include)),
        sample_of(ev.values(Variable::Dch, CensorPolicy::Include)),
    )
}

/// Whether `event` belongs to `period` under `rule`.
pub fn in_period(ind: &RainyIndicator, event: &SpellEvent, period: Period, rule: SeasonRule) -> bool {
    let day = match rule {
        SeasonRule::ByStart => event.start,
        SeasonRule::ByEnd => event.end,
    };
    period.contains_month(ind.date(day).month())
}

/// Events restricted to one period. Events keep their full length.
pub fn split_seasons(ind: &RainyIndicator, all: &SpellEvents, period: Period, rule: SeasonRule) -> SpellEvents {
    let pick = |v: &[SpellEvent]| -> Vec<SpellEvent> {
        v.iter().copied().filter(|e| in_period(ind, e, period, rule)).collect()
    };
    SpellEvents {
        it: pick(&all.it),
        ws: pick(&all.ws),
        ds: pick(&all.ds),
        wch: pick(&all.wch),
        dch: pick(&all.dch),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSamples {
    pub period: Period,
    pub samples: Vec<SpellSample>,
    pub censored: Vec<usize>,
}

impl PeriodSamples {
    pub fn get(&self, variable: Variable) -> &SpellSample {
        &self.samples[Variable::ALL.iter().position(|&v| v == variable).expect("known variable")]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub days: usize,
    pub rainy_days: usize,
    pub dry_days: usize,
    pub missing_days: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub summary: ExtractionSummary,
    pub periods: Vec<PeriodSamples>,
}

impl Extraction {
    pub fn period(&self, period: Period) -> Option<&PeriodSamples> {
        self.periods.iter().find(|p| p.period == period)
    }
}

/// Thresholds `series` and builds the five labelled samples for each
/// configured period.
pub fn extract(series: &RainfallSeries, cfg: &ExtractionConfig, station: &str) -> Result<Extraction> {
    cfg.validate()?;
    let ind = mark_rainy(series, cfg.threshold)?;
    Ok(extract_indicator(&ind, cfg, station))
}

pub fn extract_indicator(ind: &RainyIndicator, cfg: &ExtractionConfig, station: &str) -> Extraction {
    let all = events(ind);
    let periods = cfg
        .periods
        .iter()
        .map(|&period| {
            let ev = split_seasons(ind, &all, period, cfg.rule);
            let samples = Variable::ALL
                .iter()
                .map(|&v| {
                    SpellSample::labelled(ev.values(v, cfg.censored), v, period, station)
                        .expect("extracted durations are positive")
                })
                .collect();
            let censored = Variable::ALL
                .iter()
                .map(|&v| ev.get(v).iter().filter(|e| e.censored).count())
                .collect();
            PeriodSamples {
                period,
                samples,
                censored,
            }
        })
        .collect();
    Extraction {
        summary: ExtractionSummary {
            days: ind.len(),
            rainy_days: ind.count(DayState::Rainy),
            dry_days: ind.count(DayState::Dry),
            missing_days: ind.count(DayState::Missing),
            threshold: ind.threshold(),
        },
        periods,
    }
}
