//! Reads a daily rainfall CSV and prints the sample sizes and summary
//! statistics of it, ws, ds, wch and dch for the year and both seasons.
//!
//! cargo run --release --example extract_spells -- [INPUT.csv] [THRESHOLD_MM]

use std::path::PathBuf;

use spellkit::cli::parse_series;
use spellkit::diagnostics::summary_stats;
use spellkit::extraction::{derive_chains, derive_spells, extract, extract_it, ExtractionConfig, RainyIndicator};
use spellkit::{Period, Variable};

fn main() -> spellkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_station.csv"), PathBuf::from);
    let threshold: f64 = args.next().map_or(Ok(1.0), |s| s.parse()).expect("threshold must be a number");

    let ind = RainyIndicator::from_pattern("RRDRDDDRRRDRDD")?;
    let (ws, ds) = derive_spells(&ind);
    let (wch, dch) = derive_chains(&ind);
    println!("RRDRDDDRRRDRDD");
    println!("  it  {:?}", extract_it(&ind).values());
    println!("  ws  {:?}  ds  {:?}", ws.values(), ds.values());
    println!("  wch {:?}  dch {:?}", wch.values(), dch.values());
    println!();

    let parsed = parse_series(&input)?;
    let cfg = ExtractionConfig {
        threshold,
        periods: vec![Period::Year, Period::S1, Period::S2],
        ..ExtractionConfig::default()
    };
    let ex = extract(&parsed.series, &cfg, "station")?;
    let s = &ex.summary;
    println!(
        "{}: {} days, {} rainy, {} dry, {} missing (threshold {} mm)",
        input.display(),
        s.days,
        s.rainy_days,
        s.dry_days,
        s.missing_days,
        s.threshold
    );
    println!();
    println!("{:<6} {:<4} {:>6} {:>5} {:>7} {:>5} {:>7} {:>7}", "period", "var", "n", "cens", "median", "max", "mean", "skew");
    for p in &ex.periods {
        for (i, &v) in Variable::ALL.iter().enumerate() {
            let sample = p.get(v);
            let Ok(st) = summary_stats(sample) else {
                println!("{:<6} {:<4} {:>6}", p.period, v, 0);
                continue;
            };
            println!(
                "{:<6} {:<4} {:>6} {:>5} {:>7.1} {:>5} {:>7.2} {:>7}",
                p.period,
                v,
                st.n,
                p.censored[i],
                st.median,
                st.max,
                st.mean,
                st.skewness.map_or("-".into(), |x| format!("{x:.2}"))
            );
        }
    }
    Ok(())
}
