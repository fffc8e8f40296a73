//! Generates a synthetic station and writes it as `date,depth_mm` CSV.
//!
//! cargo run --release --example synthetic_station -- [OUT.csv] [SEED]

use spellkit::cli::{write_series_csv, SyntheticStation};

fn main() -> spellkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "synthetic_station.csv".into());
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse()).expect("seed must be an integer");

    let station = SyntheticStation::example();
    let series = station.generate(seed)?;
    let missing = series.depths().iter().filter(|d| d.is_none()).count();
    std::fs::write(&out, write_series_csv(&series))?;
    println!(
        "{}: {} days from {} ({} missing) -> {out}",
        station.name,
        series.len(),
        series.start(),
        missing
    );
    Ok(())
}
