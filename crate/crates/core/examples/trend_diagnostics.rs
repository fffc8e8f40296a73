//! Mann-Kendall tests with and without the autocorrelation correction, the
//! S(r+1)/S(r) memorylessness check and spell/chain cumulative frequency
//! ratios.
//!
//! cargo run --release --example trend_diagnostics -- [INPUT.csv]

use std::path::PathBuf;

use rand_distr::{Distribution, StandardNormal};
use spellkit::cli::parse_series;
use spellkit::diagnostics::{cumfreq_ratio, mk_test, mk_test_corrected, survival_ratios, RatioCutoff, DEFAULT_MAX_LAG};
use spellkit::extraction::{extract, ExtractionConfig};
use spellkit::rng::substream;
use spellkit::{Period, Variable};

fn main() -> spellkit::Result<()> {
    let input = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_station.csv"), PathBuf::from);

    let mut rng = substream(3, 0);
    let mut x = 0.0;
    let ar: Vec<f64> = (0..500)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = 0.6 * x + e;
            x
        })
        .collect();
    let res = mk_test_corrected(&ar, DEFAULT_MAX_LAG)?;
    let c = res.corrected.expect("long enough for the correction");
    println!("AR(1) 0.6, n = 500: tau {:.4}, classical p {:.4}, variance factor {:.2}, corrected p {:.4}", res.tau, res.p_value, c.factor, c.p_value);
    let ramp: Vec<f64> = (0..50).map(f64::from).collect();
    println!("monotone ramp: tau {}, p {:.2e}", mk_test(&ramp)?.tau, mk_test(&ramp)?.p_value);
    println!();

    let parsed = parse_series(&input)?;
    let cfg = ExtractionConfig { periods: vec![Period::Year, Period::S1, Period::S2], ..ExtractionConfig::default() };
    let ex = extract(&parsed.series, &cfg, "station")?;

    let year = ex.period(Period::Year).expect("configured");
    for v in [Variable::It, Variable::Ws, Variable::Ds] {
        let values: Vec<f64> = year.get(v).values().iter().map(|&k| f64::from(k)).collect();
        let r = mk_test_corrected(&values, DEFAULT_MAX_LAG)?;
        println!("{v:<3} n={:<5} tau {:>7.4}  p {:.4}  corrected p {:.4}", r.n, r.tau, r.p_value, r.p_final());
    }
    println!();

    for p in &ex.periods {
        let ratios = survival_ratios(p.get(Variable::Ws), 10, RatioCutoff::AtLeast);
        let shown: Vec<String> = ratios.points.iter().map(|pt| format!("{:.2}", pt.ratio)).collect();
        println!("{:<4} ws S(r+1)/S(r): {}", p.period, shown.join(" "));
    }
    println!();

    for p in ex.periods.iter().filter(|p| p.period != Period::Year) {
        let wet = cumfreq_ratio(p.get(Variable::Ws), p.get(Variable::Wch))?;
        let dry = cumfreq_ratio(p.get(Variable::Ds), p.get(Variable::Dch))?;
        let head = |r: &[(u32, f64)]| r.iter().take(6).map(|(k, x)| format!("{k}:{x:.2}")).collect::<Vec<_>>().join(" ");
        println!("{:<4} F_ws/F_wch {}", p.period, head(&wet));
        println!("{:<4} F_ds/F_dch {}", p.period, head(&dry));
    }
    Ok(())
}
