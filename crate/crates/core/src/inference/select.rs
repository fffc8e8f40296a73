//! Likelihood-ratio tests and parsimonious selection within the family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::fit::{fit_mle_with_starts, FitOptions, FittedModel};
use crate::distributions::{FamilyId, LerchParams};
use crate::error::{Error, Result};
use crate::sample::SpellSample;

/// Statistics below `-NEGATIVE_SLACK` signal an optimiser failure.
const NEGATIVE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrTest {
    /// `D = -2 (ln L_null - ln L_alt)`.
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Upper tail of the χ² distribution with `df` degrees of freedom.
pub(crate) fn chi2_sf(x: f64, df: usize) -> f64 {
    if df == 0 || x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}

/// Likelihood-ratio test of `null_fit` against the larger `alt_fit`.
pub fn llr_test(null_fit: &FittedModel, alt_fit: &FittedModel) -> Result<LlrTest> {
    if !null_fit.family.is_nested_in(alt_fit.family) {
        return Err(Error::invalid(format!(
            "{} is not nested in {}",
            null_fit.family, alt_fit.family
        )));
    }
    if null_fit.n != alt_fit.n {
        return Err(Error::invalid("fits come from samples of different sizes"));
    }
    let statistic = -2.0 * (null_fit.loglik - alt_fit.loglik);
    if statistic < -NEGATIVE_SLACK {
        return Err(Error::InconsistentFits { statistic });
    }
    let statistic = statistic.max(0.0);
    let df = alt_fit.family.free_params() - null_fit.family.free_params();
    Ok(LlrTest {
        statistic,
        df,
        p_value: chi2_sf(statistic, df),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// The three-parameter alternative every candidate is tested against.
    Reference,
    Retained,
    Rejected,
    /// Fit failed or did not converge; not eligible.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub family: FamilyId,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub test: Option<LlrTest>,
    pub decision: Decision,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub alpha: f64,
    pub candidates: Vec<CandidateRecord>,
    pub chosen: FamilyId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub fit: FittedModel,
    pub trace: SelectionTrace,
    /// Every successful family fit, in family order.
    pub fits: Vec<FittedModel>,
}

fn eligible(fit: &FittedModel) -> bool {
    fit.loglik.is_finite() && (fit.converged || fit.is_boundary())
}

/// Fits all five families and returns the most parsimonious one that the
/// likelihood-ratio test against the three-parameter law does not reject at
/// level `alpha`. Equal parameter counts are broken by log-likelihood.
pub fn select_model(sample: &SpellSample, alpha: f64, options: &FitOptions) -> Result<Selection> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    super::fit::check_sample(sample)?;
    // One-parameter fits seed the two-parameter ones, and all of them seed
    // the full law, so nested optima are always reachable.
    let fit_tier = |families: &[FamilyId], seeds: &[LerchParams]| -> Vec<(FamilyId, Result<FittedModel>)> {
        families
            .par_iter()
            .map(|&fam| (fam, fit_mle_with_starts(sample, fam, options, seeds)))
            .collect()
    };
    let seeds_of = |fits: &[(FamilyId, Result<FittedModel>)], into: FamilyId| -> Vec<LerchParams> {
        fits.iter()
            .filter_map(|(f, r)| r.as_ref().ok().filter(|_| f.is_nested_in(into)).map(|m| m.params))
            .filter(|p| p.theta > 0.0)
            .collect()
    };

    let mut results = fit_tier(&[FamilyId::Geometric, FamilyId::Logarithmic], &[]);
    let polylog_seeds = seeds_of(&results, FamilyId::Polylog);
    let extlog_seeds = seeds_of(&results, FamilyId::ExtendedLog);
    let (polylog, extlog) = rayon::join(
        || fit_tier(&[FamilyId::Polylog], &polylog_seeds),
        || fit_tier(&[FamilyId::ExtendedLog], &extlog_seeds),
    );
    results.extend(polylog);
    results.extend(extlog);
    let lerch_seeds = seeds_of(&results, FamilyId::Lerch3);
    results.extend(fit_tier(&[FamilyId::Lerch3], &lerch_seeds));
    results.sort_by_key(|(f, _)| *f);

    let reference = results
        .iter()
        .find(|(f, _)| *f == FamilyId::Lerch3)
        .and_then(|(_, r)| r.as_ref().ok())
        .filter(|r| r.loglik.is_finite())
        .cloned();

    let mut candidates = Vec::new();
    let mut pool: Vec<&FittedModel> = Vec::new();
    for (family, result) in &results {
        let record = match result {
            Err(e) => CandidateRecord {
                family: *family,
                loglik: None,
                converged: false,
                test: None,
                decision: Decision::Excluded,
                note: Some(e.to_string()),
            },
            Ok(fit) if *family == FamilyId::Lerch3 => {
                if eligible(fit) {
                    pool.push(fit);
                }
                CandidateRecord {
                    family: *family,
                    loglik: Some(fit.loglik),
                    converged: fit.converged,
                    test: None,
                    decision: if eligible(fit) { Decision::Reference } else { Decision::Excluded },
                    note: (!eligible(fit)).then(|| "reference fit did not converge; used as best-found alternative".into()),
                }
            }
            Ok(fit) => {
                let (test, note) = match &reference {
                    Some(alt) => match llr_test(fit, alt) {
                        Ok(t) => (Some(t), None),
                        Err(e) => (None, Some(e.to_string())),
                    },
                    None => (None, Some("no reference fit".into())),
                };
                let decision = if !eligible(fit) || (reference.is_some() && test.is_none()) {
                    Decision::Excluded
                } else if test.is_some_and(|t| t.p_value < alpha) {
                    Decision::Rejected
                } else {
                    pool.push(fit);
                    Decision::Retained
                };
                CandidateRecord {
                    family: *family,
                    loglik: Some(fit.loglik),
                    converged: fit.converged,
                    test,
                    decision,
                    note,
                }
            }
        };
        candidates.push(record);
    }

    let chosen = pool
        .iter()
        .min_by(|x, y| {
            x.family
                .free_params()
                .cmp(&y.family.free_params())
                .then(y.loglik.total_cmp(&x.loglik))
        })
        .map(|f| (*f).clone())
        .or_else(|| reference.clone())
        .ok_or_else(|| Error::NumericalDegeneracy("no family could be fitted".into()))?;

    Ok(Selection {
        trace: SelectionTrace {
            alpha,
            candidates,
            chosen: chosen.family,
        },
        fit: chosen,
        fits: results.into_iter().filter_map(|(_, r)| r.ok()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample as draw;
    use crate::inference::{fit_mle, FitWarning, SampleMoments};
    use crate::rng::substream;

    fn fake(family: FamilyId, loglik: f64) -> FittedModel {
        FittedModel {
            family,
            params: LerchParams { theta: 0.5, s: 1.0, a: 0.0 },
            loglik,
            n: 100,
            converged: true,
            grad_norm: 0.0,
            constraints: Default::default(),
            sample_moments: SampleMoments {
                mean: 1.0,
                mean_log_shifted: 0.0,
                mean_inverse_shifted: 1.0,
            },
            warnings: Vec::<FitWarning>::new(),
        }
    }

    #[test]
    fn same_model_gives_unit_p() {
        let f = fake(FamilyId::Lerch3, -100.0);
        let t = llr_test(&f, &f).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.df, 0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn polylog_vs_lerch_has_one_df() {
        let t = llr_test(&fake(FamilyId::Polylog, -101.0), &fake(FamilyId::Lerch3, -100.0)).unwrap();
        assert_eq!(t.df, 1);
        assert!((t.statistic - 2.0).abs() < 1e-12);
    }

    #[test]
    fn critical_value_gives_five_percent() {
        let t = llr_test(&fake(FamilyId::Polylog, -100.0 - 3.841 / 2.0), &fake(FamilyId::Lerch3, -100.0)).unwrap();
        assert!((t.p_value - 0.05).abs() < 5e-4, "{}", t.p_value);
    }

    #[test]
    fn rejects_non_nested_and_negative() {
        assert!(matches!(
            llr_test(&fake(FamilyId::Polylog, -1.0), &fake(FamilyId::ExtendedLog, -1.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            llr_test(&fake(FamilyId::Geometric, -90.0), &fake(FamilyId::Lerch3, -100.0)),
            Err(Error::InconsistentFits { .. })
        ));
    }

    #[test]
    fn selects_geometric_on_geometric_data() {
        let p = LerchParams::new(0.446, 0.0, 1.0).unwrap();
        let s = SpellSample::new(draw(p, &mut substream(21, 0), 2500).unwrap()).unwrap();
        let sel = select_model(&s, 0.05, &FitOptions::default()).unwrap();
        assert_eq!(sel.trace.chosen, FamilyId::Geometric, "{:#?}", sel.trace);
        let l3 = sel.fits.iter().find(|f| f.family == FamilyId::Lerch3).unwrap();
        for f in &sel.fits {
            assert!(l3.loglik >= f.loglik - 1e-6);
        }
        let direct = fit_mle(&s, FamilyId::Geometric, &FitOptions::default()).unwrap();
        assert_eq!(direct.params, sel.fit.params);
    }

    #[test]
    fn bad_alpha() {
        let s = SpellSample::new(vec![1, 2, 3, 1, 2, 1, 1, 4, 2, 1]).unwrap();
        assert!(select_model(&s, 0.0, &FitOptions::default()).is_err());
    }
}
