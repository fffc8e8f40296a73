//! Extraction, fitting, testing and diagnostics for one station.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    cumfreq_ratio, mk_test, mk_test_corrected, quantile_compare, see, summary_stats, survival_ratios,
    QuantileComparison, RatioCutoff, RatioSeries, SummaryStats, TrendResult, DEFAULT_MAX_LAG, DEFAULT_MIN_COUNT,
    MIN_CORRECTED_LEN, MIN_TREND_LEN,
};
use crate::distributions::{FamilyId, LerchParams, SpellLaw};
use crate::error::{Error, Result};
use crate::extraction::{extract, CensorPolicy, Extraction, ExtractionConfig, RainfallSeries, SeasonRule};
use crate::gof::{mc_gof, mc_gof_refit, GofConfig, GofResult, DEFAULT_GAP_THRESHOLD, MIN_REPLICATES};
use crate::inference::{standard_errors, FitConstraints, FitOptions, FittedModel, ParamErrors, SelectionTrace};
use crate::methods::{dm_bundle, im_bundle, select, FittedVariable, Method, MethodOptions, ModelBundle, Provenance, VariableLaw};
use crate::rng::task_seed;
use crate::sample::{Period, SpellSample, Variable};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Dm,
    Im,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Dm => vec![Method::Dm],
            MethodChoice::Im => vec![Method::Im],
            MethodChoice::Both => vec![Method::Dm, Method::Im],
        }
    }
}

/// Which parts of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    pub fit: bool,
    pub gof: bool,
    pub trend: bool,
    pub methods: bool,
}

impl Stages {
    pub const EXTRACT: Stages = Stages { fit: false, gof: false, trend: false, methods: false };
    pub const FIT: Stages = Stages { fit: true, gof: false, trend: false, methods: false };
    pub const GOF: Stages = Stages { fit: true, gof: true, trend: false, methods: false };
    pub const TREND: Stages = Stages { fit: false, gof: false, trend: true, methods: false };
    pub const ALL: Stages = Stages { fit: true, gof: true, trend: true, methods: true };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub threshold: f64,
    pub periods: Vec<Period>,
    pub season_rule: SeasonRule,
    pub censored: CensorPolicy,
    pub method: MethodChoice,
    pub seed: u64,
    pub replicates: usize,
    pub alpha: f64,
    pub smooth_outliers: bool,
    pub gap_threshold: usize,
    pub allow_negative_s: bool,
    pub bootstrap_refit: bool,
    pub fit_starts: usize,
    pub quantile: f64,
    pub ratio_min_count: usize,
    pub max_lag: usize,
    pub stages: Stages,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            threshold: 1.0,
            periods: vec![Period::Year, Period::S1, Period::S2],
            season_rule: SeasonRule::ByStart,
            censored: CensorPolicy::Include,
            method: MethodChoice::Both,
            seed: 1,
            replicates: crate::gof::DEFAULT_REPLICATES,
            alpha: 0.05,
            smooth_outliers: false,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            allow_negative_s: false,
            bootstrap_refit: false,
            fit_starts: FitOptions::default().starts,
            quantile: 0.99,
            ratio_min_count: DEFAULT_MIN_COUNT,
            max_lag: DEFAULT_MAX_LAG,
            stages: Stages::ALL,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.extraction().validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.stages.gof && self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(format!("at least {MIN_REPLICATES} replicates required")));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::invalid("quantile level must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            threshold: self.threshold,
            periods: self.periods.clone(),
            rule: self.season_rule,
            censored: self.censored,
        }
    }

    fn fit_options(&self, seed: u64) -> FitOptions {
        FitOptions {
            constraints: FitConstraints {
                s_nonneg: !self.allow_negative_s,
            },
            starts: self.fit_starts,
            seed,
        }
    }

    fn gof_config(&self, seed: u64) -> GofConfig {
        GofConfig {
            replicates: self.replicates,
            seed,
            smoothing: self.smooth_outliers.then_some(self.gap_threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub days: usize,
    pub rainy_days: usize,
    pub dry_days: usize,
    pub missing_days: usize,
    pub filled_days: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskError {
    pub period: Period,
    pub variable: Option<Variable>,
    pub method: Option<Method>,
    pub task: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub fit: FittedModel,
    pub standard_errors: Option<ParamErrors>,
    pub trace: SelectionTrace,
    pub gof: Option<GofResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableReport {
    pub variable: Variable,
    pub n: usize,
    pub censored: usize,
    pub frequencies: Vec<(u32, usize)>,
    pub summary: Option<SummaryStats>,
    pub trend: Option<TrendResult>,
    pub selection: Option<SelectionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub variable: Variable,
    pub provenance: Provenance,
    pub family: Option<FamilyId>,
    pub params: Option<LerchParams>,
    pub table_len: Option<usize>,
    pub tail_mass: Option<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofEntry {
    pub variable: Variable,
    pub result: GofResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileEntry {
    pub variable: Variable,
    pub comparison: QuantileComparison,
}

/// Observed relative frequency and fitted probability at one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub variable: Variable,
    pub k: u32,
    pub observed_freq: f64,
    pub fitted_prob: f64,
    pub observed_cdf: f64,
    pub fitted_cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub laws: Vec<LawReport>,
    pub gof: Vec<GofEntry>,
    pub quantiles: Vec<QuantileEntry>,
    pub see: Option<f64>,
    pub curves: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEntry {
    pub variable: Variable,
    pub series: RatioSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumfreqEntry {
    pub spell: Variable,
    pub chain: Variable,
    pub points: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodReport {
    pub period: Period,
    pub variables: Vec<VariableReport>,
    pub methods: Vec<MethodReport>,
    pub survival_ratios: Vec<RatioEntry>,
    pub cumfreq_ratios: Vec<CumfreqEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationReport {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub station: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub input: InputSummary,
    pub complete: bool,
    pub errors: Vec<TaskError>,
    pub periods: Vec<PeriodReport>,
}

impl StationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// Exit code of the first failed task, 0 when complete.
    pub fn exit_code(&self) -> i32 {
        self.errors.first().map_or(0, |e| e.exit_code)
    }
}

pub struct PipelineOutput {
    pub report: StationReport,
    pub extraction: Extraction,
}

/// 1 usage, 2 data, 3 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => 1,
        Error::Data { .. } | Error::Io(_) | Error::SampleTooSmall { .. } => 2,
        Error::NonConvergence { .. } | Error::InconsistentFits { .. } | Error::NumericalDegeneracy(_) => 3,
    }
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    station: &'a str,
    period: Period,
}

impl Ctx<'_> {
    fn seed(&self, parts: &[&str]) -> u64 {
        let label = format!("{}/{}/{}", self.station, self.period, parts.join("/"));
        task_seed(self.cfg.seed, &label)
    }

    fn error(&self, variable: Option<Variable>, method: Option<Method>, task: &str, err: &Error) -> TaskError {
        TaskError {
            period: self.period,
            variable,
            method,
            task: task.into(),
            message: err.to_string(),
            exit_code: exit_code(err),
        }
    }
}

fn trend_of(sample: &SpellSample, max_lag: usize) -> Option<TrendResult> {
    let x: Vec<f64> = sample.values().iter().map(|&v| f64::from(v)).collect();
    if x.len() >= MIN_CORRECTED_LEN {
        mk_test_corrected(&x, max_lag).ok()
    } else if x.len() >= MIN_TREND_LEN {
        mk_test(&x).ok()
    } else {
        None
    }
}

fn curves(variable: Variable, sample: &SpellSample, law: &dyn SpellLaw) -> Vec<CurvePoint> {
    let n = sample.len() as f64;
    let Some(max) = sample.max() else {
        return Vec::new();
    };
    let mut counts = vec![0usize; max as usize + 1];
    for &v in sample.values() {
        counts[v as usize] += 1;
    }
    let (mut oc, mut fc) = (0.0, 0.0);
    (1..=max)
        .map(|k| {
            let observed_freq = counts[k as usize] as f64 / n;
            let fitted_prob = law.pmf(u64::from(k));
            oc += observed_freq;
            fc += fitted_prob;
            CurvePoint {
                variable,
                k,
                observed_freq,
                fitted_prob,
                observed_cdf: oc.min(1.0),
                fitted_cdf: fc.min(1.0),
            }
        })
        .collect()
}

fn gof_for(ctx: &Ctx, sample: &SpellSample, law: &dyn SpellLaw, family: Option<FamilyId>, label: &[&str]) -> Result<GofResult> {
    let cfg = ctx.cfg.gof_config(ctx.seed(label));
    match family {
        Some(fam) if ctx.cfg.bootstrap_refit => {
            mc_gof_refit(sample, fam, &ctx.cfg.fit_options(ctx.seed(&[label, &["refit"]].concat())), &cfg)
        }
        _ => mc_gof(sample, law, None, &cfg),
    }
}

fn law_report(variable: Variable, provenance: Provenance, law: &VariableLaw) -> LawReport {
    let (family, params, table_len, tail_mass) = match law {
        VariableLaw::Lerch { model, .. } => (Some(model.family), Some(model.params), None, None),
        VariableLaw::Table { table } => (None, None, Some(table.len()), Some(table.tail())),
    };
    LawReport {
        variable,
        provenance,
        family,
        params,
        table_len,
        tail_mass,
        mean: law.mean().unwrap_or(f64::NAN),
    }
}

fn method_report(ctx: &Ctx, bundle: &ModelBundle, samples: &[&SpellSample], selections: &[Option<SelectionReport>]) -> (MethodReport, Vec<TaskError>) {
    let method = bundle.method;
    let mut errors = Vec::new();
    let laws = Variable::ALL
        .iter()
        .map(|&v| law_report(v, bundle.provenance(v), bundle.law(v)))
        .collect();
    let mut gof = Vec::new();
    if ctx.cfg.stages.gof {
        let results: Vec<(Variable, Result<GofResult>)> = Variable::ALL
            .par_iter()
            .enumerate()
            .filter(|(i, _)| !samples[*i].is_empty())
            .map(|(i, &v)| {
                let reused = (bundle.provenance(v) == Provenance::Fitted)
                    .then(|| selections[i].as_ref().and_then(|s| s.gof.clone()))
                    .flatten();
                let res = match reused {
                    Some(g) => Ok(g),
                    None => gof_for(ctx, samples[i], bundle.law(v), None, &[v.name(), "gof", method.name()]),
                };
                (v, res)
            })
            .collect();
        for (variable, res) in results {
            match res {
                Ok(result) => gof.push(GofEntry { variable, result }),
                Err(e) => errors.push(ctx.error(Some(variable), Some(method), "gof", &e)),
            }
        }
    }
    let mut quantiles = Vec::new();
    let mut curve_points = Vec::new();
    for (i, &v) in Variable::ALL.iter().enumerate() {
        if samples[i].is_empty() {
            continue;
        }
        match quantile_compare(samples[i], bundle.law(v), ctx.cfg.quantile) {
            Ok(comparison) => quantiles.push(QuantileEntry { variable: v, comparison }),
            Err(e) => errors.push(ctx.error(Some(v), Some(method), "quantile", &e)),
        }
        curve_points.extend(curves(v, samples[i], bundle.law(v)));
    }
    let comps: Vec<QuantileComparison> = quantiles.iter().map(|q| q.comparison).collect();
    (
        MethodReport {
            method,
            laws,
            gof,
            quantiles,
            see: see(&comps),
            curves: curve_points,
        },
        errors,
    )
}

fn period_report(ctx: &Ctx, extraction: &Extraction) -> (PeriodReport, Vec<TaskError>) {
    let cfg = ctx.cfg;
    let ps = extraction.period(ctx.period).expect("extracted period");
    let samples: Vec<&SpellSample> = Variable::ALL.iter().map(|&v| ps.get(v)).collect();
    let mut errors = Vec::new();

    let fitted: Vec<(Option<FittedVariable>, Option<SelectionReport>, Vec<TaskError>)> = Variable::ALL
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            if !cfg.stages.fit {
                return (None, None, Vec::new());
            }
            let sample = samples[i];
            let opts = MethodOptions {
                alpha: cfg.alpha,
                fit: cfg.fit_options(ctx.seed(&[v.name(), "fit"])),
            };
            let fv = match select(sample, v, &opts) {
                Ok(fv) => fv,
                Err(e) => return (None, None, vec![ctx.error(Some(v), None, "fit", &e)]),
            };
            let mut errs = Vec::new();
            let gof = if cfg.stages.gof {
                let law = fv.fit.model().law();
                let res = law.and_then(|law| gof_for(ctx, sample, &law, Some(fv.fit.family), &[v.name(), "gof"]));
                res.map_err(|e| errs.push(ctx.error(Some(v), None, "gof", &e))).ok()
            } else {
                None
            };
            let report = SelectionReport {
                fit: fv.fit.clone(),
                standard_errors: standard_errors(&fv.fit, sample).ok(),
                trace: fv.trace.clone(),
                gof,
            };
            (Some(fv), Some(report), errs)
        })
        .collect();

    let mut fits = Vec::new();
    let mut selections = Vec::new();
    for (fv, sel, errs) in fitted {
        fits.push(fv);
        selections.push(sel);
        errors.extend(errs);
    }

    let variables = Variable::ALL
        .iter()
        .enumerate()
        .map(|(i, &v)| VariableReport {
            variable: v,
            n: samples[i].len(),
            censored: ps.censored[i],
            frequencies: samples[i].frequencies(),
            summary: summary_stats(samples[i]).ok(),
            trend: if cfg.stages.trend { trend_of(samples[i], cfg.max_lag) } else { None },
            selection: selections[i].clone(),
        })
        .collect();

    let mut methods = Vec::new();
    if cfg.stages.methods {
        let idx = |v: Variable| Variable::ALL.iter().position(|&x| x == v).expect("known variable");
        for method in cfg.method.methods() {
            let bundle = match method {
                Method::Dm => fits[idx(Variable::It)].clone().map(dm_bundle),
                Method::Im => match (&fits[idx(Variable::Ws)], &fits[idx(Variable::Ds)]) {
                    (Some(ws), Some(ds)) => Some(im_bundle(ws.clone(), ds.clone())),
                    _ => None,
                },
            };
            match bundle {
                Some(Ok(b)) => {
                    let (report, errs) = method_report(ctx, &b, &samples, &selections);
                    methods.push(report);
                    errors.extend(errs);
                }
                Some(Err(e)) => errors.push(ctx.error(None, Some(method), "method", &e)),
                // The missing fit was already reported.
                None => {}
            }
        }
    }

    let (mut survival, mut cumfreq) = (Vec::new(), Vec::new());
    if cfg.stages.trend || cfg.stages.methods {
        for v in [Variable::Ws, Variable::Ds] {
            survival.push(RatioEntry {
                variable: v,
                series: survival_ratios(ps.get(v), cfg.ratio_min_count, RatioCutoff::AtLeast),
            });
        }
        for (spell, chain) in [(Variable::Ws, Variable::Wch), (Variable::Ds, Variable::Dch)] {
            if let Ok(points) = cumfreq_ratio(ps.get(spell), ps.get(chain)) {
                cumfreq.push(CumfreqEntry { spell, chain, points });
            }
        }
    }

    (
        PeriodReport {
            period: ctx.period,
            variables,
            methods,
            survival_ratios: survival,
            cumfreq_ratios: cumfreq,
        },
        errors,
    )
}

/// Runs the configured stages on one station's series.
pub fn run_pipeline(series: &RainfallSeries, filled_days: usize, station: &str, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let extraction = extract(series, &cfg.extraction(), station)?;
    let results: Vec<(PeriodReport, Vec<TaskError>)> = cfg
        .periods
        .par_iter()
        .map(|&period| period_report(&Ctx { cfg, station, period }, &extraction))
        .collect();
    let mut periods = Vec::new();
    let mut errors = Vec::new();
    for (p, e) in results {
        periods.push(p);
        errors.extend(e);
    }
    let s = &extraction.summary;
    let report = StationReport {
        schema_version: SCHEMA_VERSION.into(),
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        station: station.into(),
        seed: cfg.seed,
        config: cfg.clone(),
        input: InputSummary {
            first_date: series.start(),
            last_date: series.date(series.len() - 1),
            days: s.days,
            rainy_days: s.rainy_days,
            dry_days: s.dry_days,
            missing_days: s.missing_days,
            filled_days,
            threshold: s.threshold,
        },
        complete: errors.is_empty(),
        errors,
        periods,
    };
    Ok(PipelineOutput { report, extraction })
}
