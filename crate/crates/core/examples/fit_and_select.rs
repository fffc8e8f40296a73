//! Maximum-likelihood fits of every family to a simulated sample, then
//! likelihood-ratio selection of the most parsimonious adequate one.
//!
//! cargo run --release --example fit_and_select -- [N] [SEED]

use spellkit::distributions::{sample, FamilyId, LerchModel};
use spellkit::inference::{fit_mle, select_model, standard_errors, FitOptions};
use spellkit::rng::substream;
use spellkit::SpellSample;

fn main() -> spellkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(2000), |s| s.parse()).expect("N must be an integer");
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse()).expect("seed must be an integer");

    let truth = LerchModel::polylog(0.9, 0.45)?;
    let data = SpellSample::new(sample(truth.params, &mut substream(seed, 0), n)?)?;
    println!("{n} draws from polylog(θ=0.9, s=0.45), mean {:.3}", data.mean());
    println!();

    let options = FitOptions::default();
    println!("{:<13} {:>12} {:>8} {:>8} {:>8}  standard errors", "family", "loglik", "θ", "s", "a");
    for family in FamilyId::ALL {
        let fit = fit_mle(&data, family, &options)?;
        let se = standard_errors(&fit, &data).ok();
        println!(
            "{:<13} {:>12.3} {:>8.4} {:>8.4} {:>8.4}  {}",
            family.name(),
            fit.loglik,
            fit.params.theta,
            fit.params.s,
            fit.params.a,
            se.map_or("-".into(), |e| format!("θ ±{:.4} s ±{} a ±{}", e.theta, fmt(e.s), fmt(e.a)))
        );
    }

    let selection = select_model(&data, 0.05, &options)?;
    println!();
    for c in &selection.trace.candidates {
        let test = c.test.as_ref().map_or(String::new(), |t| format!("LLR {:.3}, p {:.4}", t.statistic, t.p_value));
        println!("{:<13} {:?} {test}", c.family.name(), c.decision);
    }
    println!("selected: {}", selection.trace.chosen.name());
    Ok(())
}

fn fmt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}
