//! Maximum-likelihood fitting of one Lerch family member.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::optimize::{bfgs, hessian, invert};
use crate::distributions::{ln_phi, FamilyId, Lerch, LerchModel, LerchParams, MomentKind};
use crate::error::{Error, Result};
use crate::rng::{substream, stream_id};
use crate::sample::SpellSample;

/// Fitting refuses samples smaller than this.
pub const MIN_FIT_SIZE: usize = 10;
/// Below this size a small-sample warning is attached.
pub const SMALL_SAMPLE_SIZE: usize = 30;
/// Gradient norm (per-observation log-likelihood, transformed coordinates)
/// under which a fit counts as converged.
pub const GRAD_TOL: f64 = 1e-6;

const THETA_MIN: f64 = 1e-10;
const THETA_MAX: f64 = 0.9999;
const S_MAX: f64 = 50.0;
const LOG1P_A_MIN: f64 = -25.0;
const LOG1P_A_MAX: f64 = 14.0;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitConstraints {
    /// Restrict `s ≥ 0`, which keeps the pmf non-increasing with mode 1.
    pub s_nonneg: bool,
}

impl Default for FitConstraints {
    fn default() -> Self {
        FitConstraints { s_nonneg: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    pub constraints: FitConstraints,
    /// Number of optimiser starts (one moment-based, the rest jittered).
    pub starts: usize,
    /// Seed for the jittered starts.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            constraints: FitConstraints::default(),
            starts: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    SmallSample,
    /// The optimum sits on the edge of the parameter domain.
    Boundary,
    NotConverged,
}

/// Sample analogues of the moments matched by the likelihood equations,
/// evaluated at the fitted `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub mean: f64,
    pub mean_log_shifted: f64,
    pub mean_inverse_shifted: f64,
}

impl SampleMoments {
    pub fn of(sample: &SpellSample, a: f64) -> SampleMoments {
        let n = sample.len() as f64;
        let (mut l, mut h) = (0.0, 0.0);
        for (v, c) in sample.frequencies() {
            let x = v as f64 + a;
            l += c as f64 * x.ln();
            h += c as f64 / x;
        }
        SampleMoments {
            mean: sample.mean(),
            mean_log_shifted: l / n,
            mean_inverse_shifted: h / n,
        }
    }

    pub fn get(&self, kind: MomentKind) -> f64 {
        match kind {
            MomentKind::Mean => self.mean,
            MomentKind::LogShiftedMean => self.mean_log_shifted,
            MomentKind::InverseShiftedMean => self.mean_inverse_shifted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: FamilyId,
    pub params: LerchParams,
    pub loglik: f64,
    pub n: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub constraints: FitConstraints,
    pub sample_moments: SampleMoments,
    pub warnings: Vec<FitWarning>,
}

impl FittedModel {
    pub fn model(&self) -> LerchModel {
        LerchModel {
            family: self.family,
            params: self.params,
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.warnings.contains(&FitWarning::Boundary)
    }

    /// Moments whose equality with the sample holds at an interior optimum.
    pub fn matched_moments(&self) -> Vec<MomentKind> {
        let mut kinds = vec![MomentKind::Mean];
        if matches!(self.family, FamilyId::Lerch3 | FamilyId::Polylog) {
            kinds.push(MomentKind::LogShiftedMean);
        }
        if matches!(self.family, FamilyId::Lerch3 | FamilyId::ExtendedLog) {
            kinds.push(MomentKind::InverseShiftedMean);
        }
        kinds
    }
}

/// `Σ ln p(v_i)` under `params`.
pub fn log_likelihood(params: LerchParams, sample: &SpellSample) -> Result<f64> {
    let law = Lerch::new(params)?;
    Ok(sample
        .frequencies()
        .into_iter()
        .map(|(v, c)| c as f64 * law.ln_pmf(u64::from(v)))
        .sum())
}

/// Negative mean log-likelihood of one family over transformed coordinates
/// `(logit θ, √s or s, ln(1+a))`, free coordinates only.
pub(crate) struct Objective {
    family: FamilyId,
    constraints: FitConstraints,
    freqs: Vec<(f64, f64)>,
    n: f64,
    sum_minus_one: f64,
}

impl Objective {
    pub(crate) fn new(family: FamilyId, constraints: FitConstraints, sample: &SpellSample) -> Self {
        let freqs: Vec<(f64, f64)> = sample.frequencies().into_iter().map(|(v, c)| (v as f64, c as f64)).collect();
        let sum_minus_one = freqs.iter().map(|(v, c)| (v - 1.0) * c).sum();
        Objective {
            family,
            constraints,
            freqs,
            n: sample.len() as f64,
            sum_minus_one,
        }
    }

    fn s_free_nonneg(&self) -> bool {
        self.family.has_free_s() && self.constraints.s_nonneg
    }

    pub(crate) fn decode(&self, z: &[f64]) -> Option<LerchParams> {
        let mut it = z.iter().copied();
        let theta = 1.0 / (1.0 + (-it.next()?).exp());
        if !(THETA_MIN..=THETA_MAX).contains(&theta) {
            return None;
        }
        let s = match self.family.fixed_s() {
            Some(s) => s,
            None => {
                let u = it.next()?;
                let s = if self.constraints.s_nonneg { u * u } else { u };
                if s.abs() > S_MAX {
                    return None;
                }
                s
            }
        };
        let a = match self.family.fixed_a() {
            Some(a) => a,
            None => {
                let w = it.next()?;
                if !(LOG1P_A_MIN..=LOG1P_A_MAX).contains(&w) {
                    return None;
                }
                w.exp() - 1.0
            }
        };
        Some(LerchParams { theta, s, a })
    }

    pub(crate) fn encode(&self, p: LerchParams) -> Vec<f64> {
        let theta = p.theta.clamp(THETA_MIN * 10.0, THETA_MAX - 1e-6);
        let mut z = vec![(theta / (1.0 - theta)).ln()];
        if self.family.has_free_s() {
            z.push(if self.constraints.s_nonneg { p.s.max(0.0).sqrt() } else { p.s });
        }
        if self.family.has_free_a() {
            z.push((1.0 + p.a).ln().clamp(LOG1P_A_MIN + 1e-6, LOG1P_A_MAX - 1e-6));
        }
        z
    }

    /// `d natural / d transformed` for each free coordinate.
    fn jacobian(&self, z: &[f64], p: LerchParams) -> Vec<f64> {
        let mut j = vec![p.theta * (1.0 - p.theta)];
        let mut idx = 1;
        if self.family.has_free_s() {
            j.push(if self.constraints.s_nonneg { 2.0 * z[idx] } else { 1.0 });
            idx += 1;
        }
        if self.family.has_free_a() {
            j.push(z[idx].exp());
        }
        j
    }

    pub(crate) fn loglik(&self, p: LerchParams) -> f64 {
        let Ok(ln_norm) = ln_phi(p.theta, p.s, p.a + 1.0) else {
            return f64::NEG_INFINITY;
        };
        let shifted: f64 = if p.s == 0.0 {
            0.0
        } else {
            self.freqs.iter().map(|(v, c)| c * (v + p.a).ln()).sum()
        };
        self.sum_minus_one * p.theta.ln() - p.s * shifted - self.n * ln_norm
    }

    pub(crate) fn value(&self, z: &[f64]) -> f64 {
        match self.decode(z) {
            Some(p) => {
                let ll = self.loglik(p);
                if ll.is_finite() {
                    -ll / self.n
                } else {
                    f64::INFINITY
                }
            }
            None => f64::INFINITY,
        }
    }

    fn on_boundary(&self, z: &[f64], p: LerchParams) -> bool {
        let edge = |v: f64, lo: f64, hi: f64| (v - lo).abs() < 1e-3 || (hi - v).abs() < 1e-3;
        let logit = z[0];
        let theta_edge = edge(
            logit,
            (THETA_MIN / (1.0 - THETA_MIN)).ln(),
            (THETA_MAX / (1.0 - THETA_MAX)).ln(),
        );
        let s_edge = self.family.has_free_s()
            && ((self.s_free_nonneg() && p.s < 1e-8) || S_MAX - p.s.abs() < 1e-3);
        let a_edge = self.family.has_free_a() && edge(z[z.len() - 1], LOG1P_A_MIN, LOG1P_A_MAX);
        theta_edge || s_edge || a_edge
    }
}

pub(crate) fn check_sample(sample: &SpellSample) -> Result<()> {
    if sample.len() < MIN_FIT_SIZE {
        return Err(Error::SampleTooSmall {
            got: sample.len(),
            need: MIN_FIT_SIZE,
        });
    }
    Ok(())
}

fn finish(
    family: FamilyId,
    params: LerchParams,
    sample: &SpellSample,
    constraints: FitConstraints,
    converged: bool,
    grad_norm: f64,
    mut warnings: Vec<FitWarning>,
) -> Result<FittedModel> {
    if sample.len() < SMALL_SAMPLE_SIZE {
        warnings.insert(0, FitWarning::SmallSample);
    }
    if !converged && !warnings.contains(&FitWarning::NotConverged) {
        warnings.push(FitWarning::NotConverged);
    }
    Ok(FittedModel {
        family,
        params,
        loglik: log_likelihood(params, sample)?,
        n: sample.len(),
        converged,
        grad_norm,
        constraints,
        sample_moments: SampleMoments::of(sample, params.a),
        warnings,
    })
}

/// Closed-form geometric MLE: `θ = (mean - 1) / mean`.
fn fit_geometric(sample: &SpellSample, constraints: FitConstraints) -> Result<FittedModel> {
    let mean = sample.mean();
    let theta = (mean - 1.0) / mean;
    let params = LerchParams { theta, s: 0.0, a: 1.0 };
    let warnings = if theta == 0.0 { vec![FitWarning::Boundary] } else { vec![] };
    finish(FamilyId::Geometric, params, sample, constraints, true, 0.0, warnings)
}

/// Maximum-likelihood fit of `family` to `sample`.
pub fn fit_mle(sample: &SpellSample, family: FamilyId, options: &FitOptions) -> Result<FittedModel> {
    fit_mle_with_starts(sample, family, options, &[])
}

/// As [`fit_mle`], with additional caller-supplied starting points (for
/// example the fits of nested sub-families).
pub fn fit_mle_with_starts(
    sample: &SpellSample,
    family: FamilyId,
    options: &FitOptions,
    extra_starts: &[LerchParams],
) -> Result<FittedModel> {
    check_sample(sample)?;
    let constraints = options.constraints;
    if family == FamilyId::Geometric {
        return fit_geometric(sample, constraints);
    }
    let mean = sample.mean();
    if sample.values().iter().all(|&v| v == 1) {
        // All mass at 1: the likelihood increases towards θ → 0.
        let params = LerchParams {
            theta: 0.0,
            s: family.fixed_s().unwrap_or(1.0),
            a: family.fixed_a().unwrap_or(0.0),
        };
        return finish(family, params, sample, constraints, false, 0.0, vec![FitWarning::Boundary]);
    }

    let objective = Objective::new(family, constraints, sample);
    let f = |z: &[f64]| objective.value(z);

    let theta0 = ((mean - 1.0) / mean).clamp(0.02, 0.98);
    let base = objective.encode(LerchParams {
        theta: theta0,
        s: family.fixed_s().unwrap_or(0.5),
        a: family.fixed_a().unwrap_or(0.0),
    });
    let mut starts = vec![base.clone()];
    let mut rng = substream(options.seed, stream_id(family.name()));
    for _ in 1..options.starts.max(1) {
        let jitter: Vec<f64> = base
            .iter()
            .map(|b| {
                let e: f64 = StandardNormal.sample(&mut rng);
                b + e
            })
            .collect();
        starts.push(jitter);
    }
    starts.extend(extra_starts.iter().map(|p| objective.encode(*p)));

    let best = starts
        .iter()
        .filter(|z| f(z).is_finite())
        .map(|z| bfgs(&f, z, GRAD_TOL, MAX_ITER))
        .filter(|m| m.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::NumericalDegeneracy(format!("no feasible start for {family}")))?;

    let params = objective
        .decode(&best.x)
        .ok_or_else(|| Error::NumericalDegeneracy(format!("optimiser left the domain for {family}")))?;
    let params = LerchModel::from_free(family, params.theta, params.s, params.a)?.params;
    let boundary = objective.on_boundary(&best.x, params);
    let converged = best.grad_norm < GRAD_TOL;
    let warnings = if boundary { vec![FitWarning::Boundary] } else { vec![] };
    finish(family, params, sample, constraints, converged, best.grad_norm, warnings)
}

/// Parameter estimates with standard errors from the observed information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub theta: f64,
    pub s: Option<f64>,
    pub a: Option<f64>,
}

/// Standard errors by central-difference observed information (step `1e-4` in
/// transformed coordinates), mapped to natural parameters by the delta method.
pub fn standard_errors(fit: &FittedModel, sample: &SpellSample) -> Result<ParamErrors> {
    let objective = Objective::new(fit.family, fit.constraints, sample);
    let z = objective.encode(fit.params);
    let n = sample.len() as f64;
    let total = |z: &[f64]| objective.value(z) * n;
    let info = hessian(&total, &z, 1e-4);
    let cov = invert(&info).ok_or_else(|| Error::NumericalDegeneracy("singular information matrix".into()))?;
    let jac = objective.jacobian(&z, fit.params);
    let se: Vec<f64> = (0..z.len()).map(|i| jac[i].abs() * cov[i][i].max(0.0).sqrt()).collect();
    let mut idx = 1;
    let s = fit.family.has_free_s().then(|| {
        idx += 1;
        se[idx - 1]
    });
    let a = fit.family.has_free_a().then(|| se[idx]);
    Ok(ParamErrors { theta: se[0], s, a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample as draw;
    use approx::assert_relative_eq;

    fn synthetic(params: LerchParams, n: usize, seed: u64) -> SpellSample {
        SpellSample::new(draw(params, &mut substream(seed, 0), n).unwrap()).unwrap()
    }

    #[test]
    fn loglik_examples() {
        let g = LerchParams::new(0.5, 0.0, 1.0).unwrap();
        let one = SpellSample::new(vec![1]).unwrap();
        assert_relative_eq!(log_likelihood(g, &one).unwrap(), 0.5f64.ln(), max_relative = 1e-14);
        let s = SpellSample::new(vec![1, 1, 2]).unwrap();
        // (1-θ)^2 · (1-θ)θ = 0.5^4
        assert_relative_eq!(log_likelihood(g, &s).unwrap(), 4.0 * 0.5f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn loglik_matches_sum_of_ln_pmf() {
        let p = LerchParams::new(0.913, 0.442, -0.953).unwrap();
        let s = synthetic(p, 300, 1);
        let law = Lerch::new(p).unwrap();
        let direct: f64 = s.values().iter().map(|&v| law.pmf(v as u64).ln()).sum();
        assert!((log_likelihood(p, &s).unwrap() - direct).abs() < 1e-10);
        let obj = Objective::new(FamilyId::Lerch3, FitConstraints::default(), &s);
        assert!((obj.loglik(p) - direct).abs() < 1e-8);
    }

    #[test]
    fn refuses_tiny_samples() {
        let s = SpellSample::new(vec![1, 2, 3]).unwrap();
        assert!(matches!(
            fit_mle(&s, FamilyId::Polylog, &FitOptions::default()),
            Err(Error::SampleTooSmall { got: 3, need: 10 })
        ));
    }

    #[test]
    fn geometric_closed_form() {
        let s = synthetic(LerchParams::new(0.446, 0.0, 1.0).unwrap(), 100_000, 2);
        let fit = fit_mle(&s, FamilyId::Geometric, &FitOptions::default()).unwrap();
        let m = s.mean();
        assert!((fit.params.theta - (m - 1.0) / m).abs() < 1e-12);
        assert!((fit.params.theta - 0.446).abs() < 0.005);
    }

    #[test]
    fn all_ones_is_boundary() {
        let s = SpellSample::new(vec![1; 40]).unwrap();
        for fam in FamilyId::ALL {
            let fit = fit_mle(&s, fam, &FitOptions::default()).unwrap();
            assert_eq!(fit.params.theta, 0.0);
            assert!(fit.is_boundary(), "{fam}");
            assert_eq!(fit.loglik, 0.0);
        }
    }

    #[test]
    fn small_sample_warning() {
        let s = SpellSample::new(vec![1, 2, 1, 3, 1, 1, 2, 5, 1, 2, 1, 1]).unwrap();
        let fit = fit_mle(&s, FamilyId::Logarithmic, &FitOptions::default()).unwrap();
        assert!(fit.warnings.contains(&FitWarning::SmallSample));
    }

    #[test]
    fn moment_conditions_at_optimum() {
        let p = LerchParams::new(0.87, 1.3, -0.5).unwrap();
        let s = synthetic(p, 20_000, 5);
        for fam in [FamilyId::Lerch3, FamilyId::Polylog, FamilyId::Logarithmic, FamilyId::ExtendedLog] {
            let fit = fit_mle(&s, fam, &FitOptions::default()).unwrap();
            assert!(fit.converged, "{fam}: grad {}", fit.grad_norm);
            if fit.is_boundary() {
                continue;
            }
            let law = Lerch::new(fit.params).unwrap();
            for kind in fit.matched_moments() {
                let theo = law.moment(kind).unwrap();
                let emp = fit.sample_moments.get(kind);
                assert!(((theo - emp) / emp).abs() < 1e-4, "{fam} {kind:?}: {theo} vs {emp}");
            }
        }
    }

    #[test]
    fn recovers_lerch3() {
        let p = LerchParams::new(0.913, 0.442, -0.953).unwrap();
        let s = synthetic(p, 50_000, 9);
        let fit = fit_mle(&s, FamilyId::Lerch3, &FitOptions::default()).unwrap();
        let se = standard_errors(&fit, &s).unwrap();
        assert!((fit.params.theta - p.theta).abs() < 3.0 * se.theta, "{fit:?} {se:?}");
        assert!((fit.params.s - p.s).abs() < 3.0 * se.s.unwrap());
        assert!((fit.params.a - p.a).abs() < 3.0 * se.a.unwrap());
    }

    #[test]
    fn negative_s_allowed_when_unconstrained() {
        // An increasing-then-decreasing pmf needs s < 0.
        let p = LerchParams::new(0.5, -2.0, 0.0).unwrap();
        let s = synthetic(p, 20_000, 4);
        let opts = FitOptions {
            constraints: FitConstraints { s_nonneg: false },
            ..FitOptions::default()
        };
        let free = fit_mle(&s, FamilyId::Polylog, &opts).unwrap();
        assert!(free.params.s < -1.5, "{free:?}");
        let constrained = fit_mle(&s, FamilyId::Polylog, &FitOptions::default()).unwrap();
        assert!(constrained.params.s >= 0.0);
        assert!(free.loglik > constrained.loglik);
    }
}
