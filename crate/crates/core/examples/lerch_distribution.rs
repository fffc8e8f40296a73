//! The five Lerch families side by side: pmf, survival, hazard, moments,
//! quantiles and seeded sampling.
//!
//! cargo run --release --example lerch_distribution

use spellkit::distributions::{phi, LerchModel};
use spellkit::rng::substream;

fn main() -> spellkit::Result<()> {
    let models = [
        LerchModel::geometric(0.45)?,
        LerchModel::logarithmic(0.8)?,
        LerchModel::polylog(0.91, 0.43)?,
        LerchModel::extended_log(0.6, 1.9)?,
        LerchModel::lerch3(0.913, 0.442, -0.953)?,
    ];

    println!("Φ(0.5, 1, 1) = {:.15}  (2 ln 2 = {:.15})", phi(0.5, 1.0, 1.0)?, 2.0 * 2f64.ln());
    println!();
    println!("{:<13} {:>7} {:>7} {:>7} {:>8} {:>8} {:>6} {:>6}", "family", "p(1)", "p(2)", "P(X>5)", "h(1)", "h(5)", "mean", "q.99");
    for m in &models {
        let law = m.law()?;
        println!(
            "{:<13} {:>7.4} {:>7.4} {:>7.4} {:>8.4} {:>8.4} {:>6.2} {:>6}",
            m.family.name(),
            law.pmf(1),
            law.pmf(2),
            law.survival(5)?,
            law.hazard(1)?,
            law.hazard(5)?,
            law.mean()?,
            law.quantile(0.99)?
        );
    }

    let mut rng = substream(2024, 0);
    let it = models[4].law()?.sampler()?;
    let draws = it.draw_n(&mut rng, 20);
    println!();
    println!("20 draws from the three-parameter law: {draws:?}");
    Ok(())
}
