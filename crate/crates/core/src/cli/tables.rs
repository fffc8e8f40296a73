//! Flat CSV tables behind the standard figures: one row per plotted point.

use std::collections::BTreeMap;

use super::pipeline::StationReport;
use crate::methods::Method;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotTable {
    pub name: &'static str,
    pub csv: String,
}

fn table(name: &'static str, header: &[&str], rows: Vec<Vec<String>>) -> PlotTable {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header).expect("in-memory write");
    for row in rows {
        wtr.write_record(row).expect("in-memory write");
    }
    PlotTable {
        name,
        csv: String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 output"),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Fitted-vs-observed frequencies, absolute differences by method, survival
/// ratios, spell/chain cumulative frequency ratios and upper quantiles.
pub fn emit_plot_tables(report: &StationReport) -> Vec<PlotTable> {
    let mut freq = Vec::new();
    let mut diff = Vec::new();
    let mut ratios = Vec::new();
    let mut cumfreq = Vec::new();
    let mut quant = Vec::new();
    for p in &report.periods {
        let period = p.period.name();
        let mut by_point: BTreeMap<(crate::sample::Variable, u32), (f64, Option<f64>, Option<f64>)> = BTreeMap::new();
        for m in &p.methods {
            for c in &m.curves {
                freq.push(vec![
                    period.clone(),
                    c.variable.name().into(),
                    m.method.name().into(),
                    c.k.to_string(),
                    c.observed_freq.to_string(),
                    c.fitted_prob.to_string(),
                    c.observed_cdf.to_string(),
                    c.fitted_cdf.to_string(),
                ]);
                let key = (c.variable, c.k);
                let e = by_point.entry(key).or_insert((c.observed_freq, None, None));
                let d = Some((c.observed_freq - c.fitted_prob).abs());
                match m.method {
                    Method::Dm => e.1 = d,
                    Method::Im => e.2 = d,
                }
            }
            for q in &m.quantiles {
                quant.push(vec![
                    period.clone(),
                    q.variable.name().into(),
                    m.method.name().into(),
                    q.comparison.q.to_string(),
                    q.comparison.empirical.to_string(),
                    q.comparison.theoretical.to_string(),
                    String::new(),
                ]);
            }
            quant.push(vec![
                period.clone(),
                "SEE".into(),
                m.method.name().into(),
                String::new(),
                String::new(),
                String::new(),
                opt(m.see),
            ]);
        }
        for ((v, k), (obs, dm, im)) in by_point {
            diff.push(vec![
                period.clone(),
                v.name().into(),
                k.to_string(),
                obs.to_string(),
                opt(dm),
                opt(im),
            ]);
        }
        for r in &p.survival_ratios {
            for pt in &r.series.points {
                ratios.push(vec![
                    period.clone(),
                    r.variable.name().into(),
                    pt.r.to_string(),
                    pt.at_risk.to_string(),
                    pt.ratio.to_string(),
                ]);
            }
        }
        for c in &p.cumfreq_ratios {
            for &(k, ratio) in &c.points {
                cumfreq.push(vec![
                    period.clone(),
                    c.spell.name().into(),
                    c.chain.name().into(),
                    k.to_string(),
                    ratio.to_string(),
                ]);
            }
        }
    }
    vec![
        table(
            "frequencies.csv",
            &["period", "variable", "method", "k", "observed_freq", "fitted_prob", "observed_cdf", "fitted_cdf"],
            freq,
        ),
        table("abs_diff.csv", &["period", "variable", "k", "observed_freq", "abs_diff_dm", "abs_diff_im"], diff),
        table("survival_ratios.csv", &["period", "variable", "r", "at_risk", "ratio"], ratios),
        table("cumfreq_ratios.csv", &["period", "spell", "chain", "k", "ratio"], cumfreq),
        table(
            "quantiles.csv",
            &["period", "variable", "method", "q", "empirical", "theoretical", "see"],
            quant,
        ),
    ]
}
