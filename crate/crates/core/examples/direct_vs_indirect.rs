//! Direct method (one inter-arrival fit, everything else derived) against
//! the indirect method (separate wet and dry spell fits) on one period of a
//! station record.
//!
//! cargo run --release --example direct_vs_indirect -- [INPUT.csv] [year|s1|s2]

use std::path::PathBuf;

use spellkit::cli::parse_series;
use spellkit::diagnostics::{quantile_compare, see};
use spellkit::distributions::SpellLaw;
use spellkit::extraction::{extract, ExtractionConfig};
use spellkit::methods::{run_dm, run_im, MethodOptions, Provenance};
use spellkit::{Period, Variable};

fn main() -> spellkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_station.csv"), PathBuf::from);
    let period = match args.next().as_deref() {
        None | Some("year") => Period::Year,
        Some("s1") => Period::S1,
        Some("s2") => Period::S2,
        Some(other) => panic!("unknown period {other}"),
    };

    let parsed = parse_series(&input)?;
    let cfg = ExtractionConfig { periods: vec![period], ..ExtractionConfig::default() };
    let ex = extract(&parsed.series, &cfg, "station")?;
    let samples = ex.period(period).expect("configured period");
    let options = MethodOptions::default();

    let dm = run_dm(samples.get(Variable::It), &options)?;
    let im = run_im(samples.get(Variable::Ws), samples.get(Variable::Ds), &options)?;

    for bundle in [&dm, &im] {
        println!("{} ({period})", bundle.method.name());
        for f in &bundle.fits {
            let p = f.fit.params;
            println!("  fitted {:<3} {:<13} θ={:.3} s={:.3} a={:.3}", f.variable, f.fit.family.name(), p.theta, p.s, p.a);
        }
        let mut q = Vec::new();
        for v in Variable::ALL {
            let law = bundle.law(v).as_law();
            let sample = samples.get(v);
            let tag = match bundle.provenance(v) {
                Provenance::Fitted => "fitted ",
                Provenance::Derived => "derived",
            };
            let worst = sample
                .frequencies()
                .iter()
                .map(|&(k, c)| (c as f64 / sample.len() as f64 - law.pmf(u64::from(k))).abs())
                .fold(0.0, f64::max);
            let cmp = quantile_compare(sample, law, 0.99)?;
            println!(
                "  {v:<3} {tag}  max |obs - p| = {worst:.4}   Q0.99 empirical {:>3} model {:>3}",
                cmp.empirical, cmp.theoretical
            );
            q.push(cmp);
        }
        println!("  SEE of Q0.99 over the five variables: {:.3}", see(&q).unwrap_or(f64::NAN));
        println!();
    }

    let p1 = dm.law(Variable::It).pmf(1);
    let e_ws = im.law(Variable::Ws).mean()?;
    println!("P(it = 1) direct {p1:.4}, from the wet spell mean {:.4}", (e_ws - 1.0) / e_ws);
    Ok(())
}
