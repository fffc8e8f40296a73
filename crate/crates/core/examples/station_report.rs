//! Full station pipeline: extraction, selection, goodness of fit, both
//! methods and diagnostics, written as a JSON report plus plot tables.
//!
//! cargo run --release --example station_report -- [INPUT.csv] [OUT_DIR] [REPLICATES]

use std::path::PathBuf;

use spellkit::cli::{emit_plot_tables, parse_series, run_pipeline, PipelineConfig};

fn main() -> spellkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_station.csv"), PathBuf::from);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "station_report".into()));
    let replicates: usize = args.next().map_or(Ok(500), |s| s.parse()).expect("replicates must be an integer");

    let parsed = parse_series(&input)?;
    let cfg = PipelineConfig { replicates, ..PipelineConfig::default() };
    let output = run_pipeline(&parsed.series, parsed.filled_days, "station", &cfg)?;
    let report = &output.report;

    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("report.json"), report.to_json())?;
    for t in emit_plot_tables(report) {
        std::fs::write(out.join(t.name), &t.csv)?;
    }

    for p in &report.periods {
        println!("{}", p.period);
        for v in &p.variables {
            let Some(sel) = &v.selection else { continue };
            let gof = sel.gof.as_ref().map_or("-".into(), |g| format!("{:.3}", g.p_value));
            println!("  {:<3} n={:<5} {:<13} gof p {gof}", v.variable, v.n, sel.fit.family.name());
        }
    }
    for e in &report.errors {
        println!("error: {} {}: {}", e.period, e.task, e.message);
    }
    println!("wrote {}", out.display());
    std::process::exit(report.exit_code());
}
