//! The direct method (fit inter-arrival times, derive the rest) and the
//! indirect method (fit wet and dry spells, recover the rest), with the
//! chain pmf shared by both.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::distributions::{Lerch, LerchModel, PmfTable, SpellLaw, MAX_TABLE_LEN};
use crate::error::{Error, Result};
use crate::inference::{select_model, FitOptions, FittedModel, SelectionTrace};
use crate::sample::{SpellSample, Variable};

/// Tail mass left by tables that feed further derivations.
pub const INNER_TAIL_EPS: f64 = 1e-13;
/// Tail mass of derived geometric tables.
pub const GEOMETRIC_TAIL_EPS: f64 = 1e-16;
/// Longest derived geometric table; the remainder is kept as tail mass.
pub const GEOMETRIC_MAX_LEN: usize = 1_000_000;
/// Chain mass left beyond the last tabulated length, on top of what the
/// inner table's own tail removes.
pub const CHAIN_TAIL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dm,
    Im,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dm => "dm",
            Method::Im => "im",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Fitted,
    Derived,
}

/// A fitted parametric law or a derived table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableLaw {
    Lerch {
        model: LerchModel,
        #[serde(skip)]
        law: Lerch,
    },
    Table {
        table: PmfTable,
    },
}

impl VariableLaw {
    pub fn lerch(model: LerchModel) -> Result<Self> {
        Ok(VariableLaw::Lerch {
            law: model.law()?,
            model,
        })
    }

    pub fn as_law(&self) -> &dyn SpellLaw {
        match self {
            VariableLaw::Lerch { law, .. } => law,
            VariableLaw::Table { table } => table,
        }
    }

    /// Tabulated form; fitted laws are cut where the tail drops below `tail_eps`.
    pub fn table(&self, tail_eps: f64) -> Result<PmfTable> {
        match self {
            VariableLaw::Lerch { law, .. } => law.to_pmf_table(tail_eps),
            VariableLaw::Table { table } => Ok(table.clone()),
        }
    }
}

impl SpellLaw for VariableLaw {
    fn pmf(&self, k: u64) -> f64 {
        self.as_law().pmf(k)
    }
    fn survival(&self, r: u64) -> Result<f64> {
        self.as_law().survival(r)
    }
    fn mean(&self) -> Result<f64> {
        self.as_law().mean()
    }
    fn quantile(&self, q: f64) -> Result<u64> {
        self.as_law().quantile(q)
    }
    fn hazard(&self, r: u64) -> Result<f64> {
        self.as_law().hazard(r)
    }
}

/// Geometric pmf `(1 - c) c^(k-1)` tabulated until `c^K < tail_eps`.
pub fn geometric_table(continuation: f64, tail_eps: f64) -> Result<PmfTable> {
    if !(0.0..1.0).contains(&continuation) {
        return Err(Error::NumericalDegeneracy(format!(
            "geometric continuation probability {continuation} is not below 1"
        )));
    }
    let stop = 1.0 - continuation;
    let mut probs = Vec::new();
    let mut sf = 1.0;
    while sf >= tail_eps && probs.len() < GEOMETRIC_MAX_LEN {
        probs.push(sf * stop);
        sf *= continuation;
    }
    PmfTable::new(probs, sf)
}

/// Wet spells implied by i.i.d. inter-arrival times: geometric with
/// continuation probability `p_it(1)`.
pub fn dm_derive_ws(it_model: &LerchModel) -> Result<PmfTable> {
    geometric_table(it_model.law()?.pmf(1), GEOMETRIC_TAIL_EPS)
}

/// Dry spells implied by i.i.d. inter-arrival times:
/// `p_ds(k) = p_it(k + 1) / P(it > 1)`.
pub fn dm_derive_ds(it_model: &LerchModel) -> Result<PmfTable> {
    let law = it_model.law()?;
    let beyond_one = law.survival(1)?;
    if beyond_one < 1e-12 {
        return Err(Error::NumericalDegeneracy(format!(
            "P(it > 1) = {beyond_one:e} leaves no dry spells"
        )));
    }
    let it = law.to_pmf_table((INNER_TAIL_EPS * beyond_one).clamp(1e-300, 1e-6))?;
    let mut probs: Vec<f64> = it.probs()[1..].iter().map(|p| p / beyond_one).collect();
    if probs.is_empty() {
        probs.push(0.0);
    }
    PmfTable::new(probs, it.tail() / beyond_one)
}

/// Pmf of a chain: a sum of i.i.d. `inner` spells, each followed by a
/// one-step interruption with probability `p_break`.
///
/// Uses `C(m) = (1 - b) I(m) + b Σ_j I(j) C(m - j)`, which equals the
/// geometric mixture of convolution powers of `I`. With `m_max = None` the
/// table runs past `inner` until the tail falls below [`CHAIN_TAIL_EPS`].
pub fn chain_pmf(inner: &PmfTable, p_break: f64, m_max: Option<usize>) -> Result<PmfTable> {
    if !(0.0..1.0).contains(&p_break) {
        return Err(Error::invalid(format!("interruption probability must lie in [0, 1), got {p_break}")));
    }
    if m_max == Some(0) {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    let inner_p = inner.probs();
    let keep = 1.0 - p_break;
    let inner_mass: f64 = inner_p.iter().sum();
    let reachable = keep * inner_mass / (1.0 - p_break * inner_mass);
    let mut chain: Vec<f64> = Vec::new();
    let mut cum = 0.0;
    for m in 1..=m_max.unwrap_or(MAX_TABLE_LEN) {
        let direct = inner_p.get(m - 1).copied().unwrap_or(0.0);
        let reach = (m - 1).min(inner_p.len());
        let conv: f64 = (1..=reach).map(|j| inner_p[j - 1] * chain[m - j - 1]).sum();
        let c = keep * direct + p_break * conv;
        chain.push(c);
        cum += c;
        if m_max.is_none() && m >= inner_p.len() && reachable - cum < CHAIN_TAIL_EPS {
            break;
        }
    }
    PmfTable::with_residual_tail(chain)
}

fn pow(p: f64, n: u64) -> f64 {
    if n == 0 {
        1.0
    } else {
        p.powf(n as f64)
    }
}

/// Wet chain pmf under the direct method as a binomial count of one-day
/// interruptions: `P(it > 2) Σ_j C(k-1, j) p1^(k-1-j) p2^j`.
pub fn dm_wch_binomial(it_model: &LerchModel, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("chain length must be at least 1"));
    }
    let law = it_model.law()?;
    let (p1, p2) = (law.pmf(1), law.pmf(2));
    let end = law.survival(2)?;
    let n = k - 1;
    let sum: f64 = (0..=n)
        .map(|j| {
            let ln_c = ln_binomial(n, j);
            let (a, b) = (pow(p1, n - j), pow(p2, j));
            if a == 0.0 || b == 0.0 {
                0.0
            } else {
                (ln_c + a.ln() + b.ln()).exp()
            }
        })
        .sum();
    Ok(end * sum)
}

/// Inter-arrival times recovered from separately modelled spells:
/// `p_it(1) = (E[ws] - 1) / E[ws]`, `p_it(k) = p_ds(k - 1) (1 - p_it(1))`.
pub fn im_recover_it(ws: &VariableLaw, ds: &VariableLaw) -> Result<PmfTable> {
    let mean_ws = ws.mean()?;
    if !(mean_ws.is_finite() && mean_ws >= 1.0 - 1e-12) {
        return Err(Error::invalid(format!("mean wet spell must be finite and at least 1, got {mean_ws}")));
    }
    let p1 = ((mean_ws - 1.0) / mean_ws).max(0.0);
    let stop = 1.0 / mean_ws;
    let ds_table = ds.table(INNER_TAIL_EPS)?;
    let mut probs = Vec::with_capacity(ds_table.len() + 1);
    probs.push(p1);
    probs.extend(ds_table.probs().iter().map(|p| p * stop));
    PmfTable::new(probs, ds_table.tail() * stop)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleEntry {
    pub variable: Variable,
    pub provenance: Provenance,
    pub law: VariableLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedVariable {
    pub variable: Variable,
    pub fit: FittedModel,
    pub trace: SelectionTrace,
}

/// Laws for all five variables produced by one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelBundle {
    pub method: Method,
    pub entries: Vec<BundleEntry>,
    pub fits: Vec<FittedVariable>,
}

impl ModelBundle {
    fn entry(&self, variable: Variable) -> &BundleEntry {
        self.entries
            .iter()
            .find(|e| e.variable == variable)
            .expect("bundles hold all five variables")
    }

    pub fn law(&self, variable: Variable) -> &VariableLaw {
        &self.entry(variable).law
    }

    pub fn provenance(&self, variable: Variable) -> Provenance {
        self.entry(variable).provenance
    }

    pub fn fit(&self, variable: Variable) -> Option<&FittedVariable> {
        self.fits.iter().find(|f| f.variable == variable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodOptions {
    pub alpha: f64,
    pub fit: FitOptions,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            alpha: 0.05,
            fit: FitOptions::default(),
        }
    }
}

/// Model selection on one variable's sample.
pub fn select(sample: &SpellSample, variable: Variable, options: &MethodOptions) -> Result<FittedVariable> {
    let sel = select_model(sample, options.alpha, &options.fit)?;
    Ok(FittedVariable {
        variable,
        fit: sel.fit,
        trace: sel.trace,
    })
}

fn entry(variable: Variable, provenance: Provenance, law: VariableLaw) -> BundleEntry {
    BundleEntry {
        variable,
        provenance,
        law,
    }
}

/// Direct method: one model selection on inter-arrival times, everything
/// else derived from it.
pub fn run_dm(it_sample: &SpellSample, options: &MethodOptions) -> Result<ModelBundle> {
    dm_bundle(select(it_sample, Variable::It, options)?)
}

/// Direct-method bundle from an existing inter-arrival selection.
pub fn dm_bundle(it: FittedVariable) -> Result<ModelBundle> {
    let model = it.fit.model();
    let ws = dm_derive_ws(&model)?;
    let ds = dm_derive_ds(&model)?;
    let wch = chain_pmf(&ws, ds.pmf(1), None)?;
    let dch = chain_pmf(&ds, ws.pmf(1), None)?;
    Ok(ModelBundle {
        method: Method::Dm,
        entries: vec![
            entry(Variable::It, Provenance::Fitted, VariableLaw::lerch(model)?),
            entry(Variable::Ws, Provenance::Derived, VariableLaw::Table { table: ws }),
            entry(Variable::Ds, Provenance::Derived, VariableLaw::Table { table: ds }),
            entry(Variable::Wch, Provenance::Derived, VariableLaw::Table { table: wch }),
            entry(Variable::Dch, Provenance::Derived, VariableLaw::Table { table: dch }),
        ],
        fits: vec![it],
    })
}

/// Indirect method: separate model selections on wet and dry spells;
/// inter-arrival times and chains recovered from the two fits.
pub fn run_im(ws_sample: &SpellSample, ds_sample: &SpellSample, options: &MethodOptions) -> Result<ModelBundle> {
    let (ws, ds) = rayon::join(
        || select(ws_sample, Variable::Ws, options),
        || select(ds_sample, Variable::Ds, options),
    );
    im_bundle(ws?, ds?)
}

/// Indirect-method bundle from existing wet and dry spell selections.
pub fn im_bundle(ws: FittedVariable, ds: FittedVariable) -> Result<ModelBundle> {
    let ws_law = VariableLaw::lerch(ws.fit.model())?;
    let ds_law = VariableLaw::lerch(ds.fit.model())?;
    let it = im_recover_it(&ws_law, &ds_law)?;
    let wch = chain_pmf(&ws_law.table(INNER_TAIL_EPS)?, ds_law.pmf(1), None)?;
    let dch = chain_pmf(&ds_law.table(INNER_TAIL_EPS)?, ws_law.pmf(1), None)?;
    Ok(ModelBundle {
        method: Method::Im,
        entries: vec![
            entry(Variable::It, Provenance::Derived, VariableLaw::Table { table: it }),
            entry(Variable::Ws, Provenance::Fitted, ws_law),
            entry(Variable::Ds, Provenance::Fitted, ds_law),
            entry(Variable::Wch, Provenance::Derived, VariableLaw::Table { table: wch }),
            entry(Variable::Dch, Provenance::Derived, VariableLaw::Table { table: dch }),
        ],
        fits: vec![ws, ds],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{FamilyId, LerchParams};
    use crate::rng::substream;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn cev_it() -> LerchModel {
        LerchModel::lerch3(0.913, 0.442, -0.953).unwrap()
    }

    fn geometric(theta: f64) -> PmfTable {
        geometric_table(theta, INNER_TAIL_EPS).unwrap()
    }

    /// Sum over compositions of `m` into `k` positive parts.
    fn brute_chain(inner: &PmfTable, b: f64, m: usize) -> f64 {
        fn comps(inner: &PmfTable, left: usize, parts: usize) -> f64 {
            if parts == 0 {
                return if left == 0 { 1.0 } else { 0.0 };
            }
            (1..=left).map(|j| inner.pmf(j as u64) * comps(inner, left - j, parts - 1)).sum()
        }
        (1..=m).map(|k| b.powi(k as i32 - 1) * (1.0 - b) * comps(inner, m, k)).sum()
    }

    #[test]
    fn cev_ws_continuation() {
        let ws = dm_derive_ws(&cev_it()).unwrap();
        let p1 = 1.0 - ws.pmf(1);
        assert!((p1 - 0.446).abs() < 0.01, "{p1}");
        assert_relative_eq!(ws.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn derived_ws_memoryless() {
        let ws = dm_derive_ws(&cev_it()).unwrap();
        for k in 1..=20u64 {
            for m in 1..=20u64 {
                let lhs = ws.survival(k + m) / ws.survival(m);
                assert!((lhs - ws.survival(k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn near_degenerate_it() {
        let model = LerchModel::lerch3(1e-6, 0.5, 0.0).unwrap();
        let ws = dm_derive_ws(&model).unwrap();
        assert_relative_eq!(ws.total(), 1.0, epsilon = 1e-10);
        let all_ones = LerchModel::geometric(0.0).unwrap();
        assert!(dm_derive_ds(&all_ones).is_err());
    }

    #[test]
    fn derived_ds() {
        let ds = dm_derive_ds(&cev_it()).unwrap();
        assert_relative_eq!(ds.total(), 1.0, epsilon = 1e-12);
        let poly = LerchModel::polylog(0.913, 0.433).unwrap().law().unwrap();
        let dev = (1..=30).map(|k| (ds.pmf(k) - poly.pmf(k)).abs()).fold(0.0, f64::max);
        assert!(dev < 0.01, "{dev}");
        let geo = dm_derive_ds(&LerchModel::geometric(0.6).unwrap()).unwrap();
        for k in 1..=40 {
            assert_relative_eq!(geo.pmf(k), 0.4 * 0.6f64.powi(k as i32 - 1), max_relative = 1e-10);
        }
    }

    #[test]
    fn chain_edge_cases() {
        let inner = geometric(0.5);
        let c = chain_pmf(&inner, 0.3, None).unwrap();
        assert_relative_eq!(c.pmf(1), 0.7 * 0.5, max_relative = 1e-14);
        assert!(c.tail() < 1e-9);
        let same = chain_pmf(&inner, 0.0, None).unwrap();
        for k in 1..=inner.len() as u64 {
            assert_eq!(same.pmf(k), inner.pmf(k));
        }
        assert!(chain_pmf(&inner, 1.0, None).is_err());
        assert!(chain_pmf(&inner, 0.2, Some(0)).is_err());
        assert_eq!(chain_pmf(&inner, 0.2, Some(7)).unwrap().len(), 7);
    }

    #[test]
    fn chain_matches_compositions() {
        let inner = geometric(0.5);
        let c = chain_pmf(&inner, 0.3, None).unwrap();
        for m in 1..=15 {
            assert!((c.pmf(m as u64) - brute_chain(&inner, 0.3, m)).abs() < 1e-12);
        }
        let lumpy = PmfTable::new(vec![0.1, 0.5, 0.0, 0.4], 0.0).unwrap();
        let c = chain_pmf(&lumpy, 0.45, None).unwrap();
        for m in 1..=12 {
            assert!((c.pmf(m as u64) - brute_chain(&lumpy, 0.45, m)).abs() < 1e-12);
        }
    }

    #[test]
    fn binomial_forms_agree() {
        let model = cev_it();
        let law = model.law().unwrap();
        let (p1, p2) = (law.pmf(1), law.pmf(2));
        assert_relative_eq!(dm_wch_binomial(&model, 1).unwrap(), 1.0 - p1 - p2, max_relative = 1e-12);
        let ws = dm_derive_ws(&model).unwrap();
        let ds = dm_derive_ds(&model).unwrap();
        let chain = chain_pmf(&ws, ds.pmf(1), None).unwrap();
        for k in 1..=100u64 {
            let closed = (1.0 - p1 - p2) * (p1 + p2).powi(k as i32 - 1);
            let b = dm_wch_binomial(&model, k).unwrap();
            assert!((b - closed).abs() < 1e-14);
            assert!((b - chain.pmf(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn random_dm_equivalence() {
        let mut rng = substream(11, 0);
        for _ in 0..30 {
            let theta = rng.random_range(0.05..0.95);
            let s = rng.random_range(0.0..2.0);
            let a = rng.random_range(-0.9..3.0);
            let model = LerchModel::lerch3(theta, s, a).unwrap();
            let ws = dm_derive_ws(&model).unwrap();
            let ds = dm_derive_ds(&model).unwrap();
            let chain = chain_pmf(&ws, ds.pmf(1), None).unwrap();
            for k in 1..=100u64 {
                assert!((dm_wch_binomial(&model, k).unwrap() - chain.pmf(k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn recovered_it() {
        let ws = VariableLaw::lerch(LerchModel::geometric(0.446).unwrap()).unwrap();
        let ds = VariableLaw::lerch(LerchModel::polylog(0.913, 0.433).unwrap()).unwrap();
        let it = im_recover_it(&ws, &ds).unwrap();
        assert!((it.pmf(1) - 0.446).abs() < 1e-12);
        assert_relative_eq!(it.total(), 1.0, epsilon = 1e-12);
        let ones = VariableLaw::Table {
            table: PmfTable::new(vec![1.0], 0.0).unwrap(),
        };
        let it = im_recover_it(&ones, &ds).unwrap();
        assert_eq!(it.pmf(1), 0.0);
        assert_relative_eq!(it.pmf(3), ds.pmf(2), max_relative = 1e-12);
    }

    #[test]
    fn geometric_fixed_point() {
        let model = cev_it();
        let ws = VariableLaw::Table { table: dm_derive_ws(&model).unwrap() };
        let ds = VariableLaw::Table { table: dm_derive_ds(&model).unwrap() };
        let it = im_recover_it(&ws, &ds).unwrap();
        let law = model.law().unwrap();
        for k in 1..=200 {
            assert!((it.pmf(k) - law.pmf(k)).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn chains_dominate_spells() {
        let model = cev_it();
        let ws = dm_derive_ws(&model).unwrap();
        let ds = dm_derive_ds(&model).unwrap();
        let wch = chain_pmf(&ws, ds.pmf(1), None).unwrap();
        let dch = chain_pmf(&ds, ws.pmf(1), None).unwrap();
        for k in 0..200 {
            assert!(wch.survival(k) >= ws.survival(k) - 1e-12);
            assert!(dch.survival(k) >= ds.survival(k) - 1e-12);
        }
    }

    #[test]
    fn pipelines_provenance() {
        let p = LerchParams::new(0.8, 0.6, 0.2).unwrap();
        let it = SpellSample::new(crate::distributions::sample(p, &mut substream(2, 0), 3000).unwrap()).unwrap();
        let dm = run_dm(&it, &MethodOptions::default()).unwrap();
        assert_eq!(dm.provenance(Variable::It), Provenance::Fitted);
        for v in [Variable::Ws, Variable::Ds, Variable::Wch, Variable::Dch] {
            assert_eq!(dm.provenance(v), Provenance::Derived);
            assert!((dm.law(v).as_law().survival(0).unwrap() - 1.0).abs() < 1e-9);
        }

        let ws = SpellSample::new(
            crate::distributions::sample(LerchParams::new(0.5, 1.2, 0.0).unwrap(), &mut substream(2, 1), 3000)
                .unwrap(),
        )
        .unwrap();
        let ds = SpellSample::new(
            crate::distributions::sample(LerchParams::new(0.85, 0.4, 0.0).unwrap(), &mut substream(2, 2), 3000)
                .unwrap(),
        )
        .unwrap();
        let im = run_im(&ws, &ds, &MethodOptions::default()).unwrap();
        assert_eq!(im.provenance(Variable::Ws), Provenance::Fitted);
        assert_eq!(im.provenance(Variable::Ds), Provenance::Fitted);
        assert_eq!(im.provenance(Variable::It), Provenance::Derived);
        assert_ne!(im.fit(Variable::Ws).unwrap().fit.family, FamilyId::Geometric);
        let h1 = im.law(Variable::Ws).hazard(1).unwrap();
        let h5 = im.law(Variable::Ws).hazard(5).unwrap();
        assert!((h1 - h5).abs() > 1e-3);
        for v in Variable::ALL {
            let total = match im.law(v) {
                VariableLaw::Table { table } => table.total(),
                VariableLaw::Lerch { .. } => 1.0,
            };
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
        }
    }
}
