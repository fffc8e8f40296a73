//! Monte-Carlo χ² tests: a sample against its own law, against a wrong law,
//! with explicit pooled classes, and with tail-outlier smoothing.
//!
//! cargo run --release --example goodness_of_fit

use spellkit::distributions::{sample, LerchModel};
use spellkit::gof::{chi2_statistic, mc_gof, smooth_outliers, Classes, FrequencyTable, GofConfig};
use spellkit::rng::substream;
use spellkit::SpellSample;

fn main() -> spellkit::Result<()> {
    let truth = LerchModel::geometric(0.5)?;
    let data = SpellSample::new(sample(truth.params, &mut substream(5, 0), 1000)?)?;
    let config = GofConfig { seed: 11, ..GofConfig::default() };

    for (label, model) in [("true law", truth), ("geometric(0.9)", LerchModel::geometric(0.9)?)] {
        let res = mc_gof(&data, &model.law()?, None, &config)?;
        println!(
            "{label:<16} χ² = {:>10.2}  p = {:.4}  ({} classes, {} replicates)",
            res.chi2_ref, res.p_value, res.classes, res.replicates
        );
    }

    let pooled = Classes::from_uppers(vec![1, 2, 3, 5])?;
    let res = mc_gof(&data, &truth.law()?, Some(&pooled), &config)?;
    println!("{:<16} χ² = {:>10.2}  p = {:.4}", "pooled classes", res.chi2_ref, res.p_value);

    // A long-tailed table with one isolated value far beyond the rest.
    let mut counts = vec![40.0, 22.0, 12.0, 7.0, 4.0, 2.0];
    counts.extend([0.0; 8]);
    counts.push(1.0);
    let table = FrequencyTable::from_counts(counts)?;
    let smoothed = smooth_outliers(&table, 5);
    println!();
    println!("raw      {:?}", table.counts());
    println!("smoothed {:?}", smoothed.counts().iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    let law = LerchModel::logarithmic(0.75)?.law()?;
    let classes = Classes::per_value(table.max_value());
    println!(
        "χ² against logarithmic(0.75): raw {:.2}, smoothed {:.2}",
        chi2_statistic(&table, &law, &classes)?,
        chi2_statistic(&smoothed, &law, &classes)?
    );
    Ok(())
}
