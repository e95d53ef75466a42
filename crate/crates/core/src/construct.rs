//! Rubio de Francia majorants `ℛh = Σ_k M^k h / (2A)^k` and the
//! factorisation `ω = ω₁ω₂^{1-p}` of an `A_p^{ρ,θ}` weight into `A₁` factors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{norm, GridFunction, NormMode};
use crate::maximal::{maximal, maximal_weighted, MaximalConfig};
use crate::potential::CriticalRadiusField;
use crate::report::extf64;
use crate::weights::{a1_constant, conjugate, Weight};

/// A (sub)linear, positivity-preserving operator on grid functions.
pub trait GridOperator: Sync {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction>;
    fn name(&self) -> String;
}

impl GridOperator for MaximalConfig {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        maximal(f, self)
    }

    fn name(&self) -> String {
        self.descriptor()
    }
}

pub struct Identity;

impl GridOperator for Identity {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        Ok(f.abs())
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// `M_ω` with `ω(5B)` normalisation.
pub struct WeightedMaximal {
    pub weight: Weight,
    pub sides: Vec<usize>,
}

impl GridOperator for WeightedMaximal {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        maximal_weighted(f, &self.weight, &self.sides, true)
    }

    fn name(&self) -> String {
        format!("weighted_maximal(sides={:?})", self.sides)
    }
}

/// The space `L^p(ω)` whose norm the iteration is measured in.
#[derive(Clone, Debug)]
pub struct NormSpace {
    pub p: f64,
    pub weight: Option<Weight>,
}

impl NormSpace {
    pub fn new(p: f64, weight: Option<Weight>) -> Self {
        Self { p, weight }
    }

    pub fn norm(&self, f: &GridFunction) -> Result<f64> {
        norm(f, self.p, self.weight.as_ref(), NormMode::Strong)
    }
}

/// Iterates `h, Mh, …, M^{k}h`.
pub fn iterates(op: &dyn GridOperator, h: &GridFunction, k: usize) -> Result<Vec<GridFunction>> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(h.clone());
    for _ in 0..k {
        let next = op.apply(out.last().unwrap())?;
        if next.samples().iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("{} produced non-finite values", op.name())));
        }
        out.push(next);
    }
    Ok(out)
}

/// `max_k ‖M^{k+1}h‖ / ‖M^k h‖` along the iterates (0/0 skipped).
pub fn iterate_growth(its: &[GridFunction], space: &NormSpace) -> Result<f64> {
    let norms = its.iter().map(|g| space.norm(g)).collect::<Result<Vec<_>>>()?;
    Ok(norms
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certification {
    /// Cells with `h > ℛh`.
    pub domination_violations: usize,
    pub pointwise_domination: bool,
    #[serde(with = "extf64")]
    pub norm_ratio: f64,
    pub norm_doubling: bool,
    /// `sup M(ℛh)/ℛh` over cells with `ℛh > 0`.
    #[serde(with = "extf64")]
    pub a1_ratio: f64,
    pub a1_factor: bool,
}

#[derive(Clone, Debug)]
pub struct RdFResult {
    pub majorant: GridFunction,
    pub base: GridFunction,
    pub operator_norm_a: f64,
    /// Largest one-step norm growth seen along the iterates.
    pub measured_growth: f64,
    pub truncation_k: usize,
    pub tol: f64,
    /// `2^{-K} · 2‖h‖`.
    pub tail_bound: f64,
    pub operator: String,
    pub norm_exponent: f64,
    pub certified: Certification,
}

impl RdFResult {
    pub fn majorant_weight(&self) -> Result<Weight> {
        Weight::new(self.majorant.clone())
    }
}

pub const DEFAULT_K: usize = 40;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Smallest admissible truncation: at least `k` and with `2^{-K} < tol`.
pub fn truncation_for(k: usize, tol: f64) -> usize {
    let need = (1.0 / tol).log2().floor() as usize + 1;
    k.max(need)
}

/// `ℛ_K h = Σ_{k=0}^{K} M^k h / (2A)^k` with certification of
/// `h ≤ ℛh`, `‖ℛh‖ ≤ 2‖h‖` and `M(ℛh) ≤ 2A ℛh`.
///
/// `a = None` takes `A` as the largest measured one-step growth of the
/// norm along the iterates (at least 1).
pub fn rdf_majorant(
    h: &GridFunction,
    op: &dyn GridOperator,
    a: Option<f64>,
    k: usize,
    tol: f64,
    space: &NormSpace,
) -> Result<RdFResult> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", format!("must lie in (0, 1), got {tol}")));
    }
    if h.min() < 0.0 {
        return Err(invalid("h", "must be nonnegative"));
    }
    let its = iterates(op, h, truncation_for(k, tol))?;
    rdf_from_iterates(&its, op, a, tol, space)
}

/// [`rdf_majorant`] from precomputed iterates `h, Th, T²h, …`, so that one
/// orbit can be certified in several norm spaces.
pub fn rdf_from_iterates(
    its: &[GridFunction],
    op: &dyn GridOperator,
    a: Option<f64>,
    tol: f64,
    space: &NormSpace,
) -> Result<RdFResult> {
    if let Some(a) = a {
        if !(a > 0.0) {
            return Err(invalid("A", format!("operator norm must be > 0, got {a}")));
        }
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", format!("must lie in (0, 1), got {tol}")));
    }
    let h = its.first().ok_or_else(|| invalid("iterates", "orbit is empty"))?;
    let k = its.len() - 1;
    let growth = iterate_growth(its, space)?;
    let a = a.unwrap_or(growth.max(1.0));
    let majorant = series(its, 2.0 * a);

    let violations = h
        .samples()
        .iter()
        .zip(majorant.samples())
        .filter(|(x, r)| x > r)
        .count();
    let nh = space.norm(h)?;
    let norm_ratio = crate::report::ratio(space.norm(&majorant)?, nh);
    let m = op.apply(&majorant)?;
    let a1_ratio = m
        .samples()
        .iter()
        .zip(majorant.samples())
        .filter(|(_, r)| **r > 0.0)
        .fold(0.0f64, |c, (x, r)| c.max(x / r));
    Ok(RdFResult {
        certified: Certification {
            domination_violations: violations,
            pointwise_domination: violations == 0,
            norm_ratio,
            norm_doubling: norm_ratio <= 2.0 + tol,
            a1_ratio,
            a1_factor: a1_ratio <= 2.0 * a * (1.0 + tol),
        },
        majorant,
        base: h.clone(),
        operator_norm_a: a,
        measured_growth: growth,
        truncation_k: k,
        tol,
        tail_bound: 2f64.powi(-(k as i32)) * 2.0 * nh,
        operator: op.name(),
        norm_exponent: space.p,
    })
}

/// `Σ_k g_k / c^k`, summed in order.
fn series(its: &[GridFunction], c: f64) -> GridFunction {
    let spec = *its[0].spec();
    let mut acc = vec![0.0; spec.len()];
    let mut scale = 1.0;
    for g in its {
        if scale == 0.0 {
            break;
        }
        for (a, v) in acc.iter_mut().zip(g.samples()) {
            *a += scale * v;
        }
        scale /= c;
    }
    GridFunction::from_raw(spec, acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "p>=2")]
    AtLeastTwo,
    #[serde(rename = "p<2")]
    BelowTwo,
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub omega: Weight,
    pub p: f64,
    pub theta: f64,
    pub w1: Weight,
    pub w2: Weight,
    /// `η = Σ_{k≥1} (2A)^{-k} T^k f`.
    pub eta: GridFunction,
    pub branch: Branch,
    pub operator_norm_a: f64,
    pub truncation_k: usize,
    /// Max relative deviation of `ω₁ω₂^{1-p}` from `ω`.
    pub identity_error: f64,
    /// Exponent `pθ` (p ≥ 2) or `p′θ` (p < 2) of the `A₁` class of the factors.
    pub a1_exponent: f64,
    pub a1_w1: f64,
    pub a1_w2: f64,
}

/// The sublinear operator of the factorisation argument, on `L^s` with
/// `s = p` for `p ≥ 2` and `s = p′` for `p < 2`:
///
/// * `p ≥ 2`: `Tf = [ω^{-1/p} M(f^{p/p′} ω^{1/p})]^{p′/p} + ω^{1/p} M(f ω^{-1/p})`, `M = M_{V,pθ}`
/// * `p < 2`: `Tf = [ω^{1/p} M(f^{p′/p} ω^{-1/p})]^{p/p′} + ω^{-1/p} M(f ω^{1/p})`, `M = M_{V,p′θ}`
pub struct FactorOperator {
    plus: GridFunction,  // ω^{1/p}
    minus: GridFunction, // ω^{-1/p}
    inner: f64,          // exponent applied to f inside the first term
    cfg: MaximalConfig,
    branch: Branch,
}

impl FactorOperator {
    pub fn new(w: &Weight, p: f64, theta: f64, rho: Arc<CriticalRadiusField>) -> Result<Self> {
        if !(p > 1.0) {
            return Err(invalid("p", format!("factorisation needs p > 1, got {p}")));
        }
        let pp = conjugate(p);
        let (branch, inner, exponent) = if p >= 2.0 {
            (Branch::AtLeastTwo, p / pp, p * theta)
        } else {
            (Branch::BelowTwo, pp / p, pp * theta)
        };
        Ok(Self {
            plus: w.values().map(|v| v.powf(1.0 / p)),
            minus: w.values().map(|v| v.powf(-1.0 / p)),
            inner,
            cfg: MaximalConfig::cube(rho, exponent),
            branch,
        })
    }

    pub fn norm_exponent(&self, p: f64) -> f64 {
        match self.branch {
            Branch::AtLeastTwo => p,
            Branch::BelowTwo => conjugate(p),
        }
    }
}

impl GridOperator for FactorOperator {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let (a, b) = match self.branch {
            Branch::AtLeastTwo => (&self.plus, &self.minus),
            Branch::BelowTwo => (&self.minus, &self.plus),
        };
        // first: [b · M(f^inner · a)]^{1/inner}; second: a · M(f · b)
        let g1 = f.zip_with(a, |x, w| x.abs().powf(self.inner) * w)?;
        let m1 = maximal(&g1, &self.cfg)?;
        let first = m1.zip_with(b, |m, w| (w * m).powf(1.0 / self.inner))?;
        let g2 = f.zip_with(b, |x, w| x.abs() * w)?;
        let m2 = maximal(&g2, &self.cfg)?;
        let second = m2.zip_with(a, |m, w| w * m)?;
        first.zip_with(&second, |x, y| x + y)
    }

    fn name(&self) -> String {
        format!("factor_operator({:?}, {})", self.branch, self.cfg.descriptor())
    }
}

/// Splits `ω ∈ A_p^{ρ,θ}` as `ω = ω₁ ω₂^{1-p}` with `ω₁, ω₂ ∈ A₁^{ρ,·}`.
///
/// `p ≥ 2`: `ω₁ = ω^{1/p} η^{p/p′}`, `ω₂ = ω^{-1/p} η`.
/// `p < 2`: `ω₁ = ω^{1/p} η`, `ω₂ = ω^{-1/p} η^{p′/p}`.
pub fn factorize(
    w: &Weight,
    p: f64,
    theta: f64,
    rho: &Arc<CriticalRadiusField>,
    k: usize,
    tol: f64,
) -> Result<Factorization> {
    let t = FactorOperator::new(w, p, theta, rho.clone())?;
    let s = t.norm_exponent(p);
    let spec = *w.spec();
    let space = NormSpace::new(s, None);
    let k = truncation_for(k, tol);
    // seed: the constant with unit L^s norm
    let seed = GridFunction::constant(spec, spec.domain_volume().powf(-1.0 / s));
    let its = iterates(&t, &seed, k)?;
    let norms = its.iter().map(|g| space.norm(g)).collect::<Result<Vec<_>>>()?;
    let a = iterate_growth(&its, &space)?.max(1.0);
    if norms.iter().any(|n| !n.is_finite()) {
        return Err(Error::Divergence(format!("iterate norms {norms:?}")));
    }
    let eta = {
        let s = series(&its, 2.0 * a);
        s.zip_with(&seed, |x, f| x - f)?
    };
    if !(eta.min() > 0.0) {
        return Err(Error::Divergence("auxiliary function is not positive".into()));
    }
    let pp = conjugate(p);
    let (w1, w2) = match t.branch {
        Branch::AtLeastTwo => (
            t.plus.zip_with(&eta, |a, e| a * e.powf(p / pp))?,
            t.minus.zip_with(&eta, |a, e| a * e)?,
        ),
        Branch::BelowTwo => (
            t.plus.zip_with(&eta, |a, e| a * e)?,
            t.minus.zip_with(&eta, |a, e| a * e.powf(pp / p))?,
        ),
    };
    let (w1, w2) = (Weight::new(w1)?, Weight::new(w2)?);
    let identity_error = w1
        .values()
        .samples()
        .iter()
        .zip(w2.values().samples())
        .zip(w.values().samples())
        .map(|((a, b), o)| ((a * b.powf(1.0 - p)) / o - 1.0).abs())
        .fold(0.0, f64::max);
    let a1_exponent = t.cfg.exponent;
    let cfg = MaximalConfig::cube(rho.clone(), a1_exponent);
    let a1_w1 = a1_constant(&w1, &cfg)?.constant;
    let a1_w2 = a1_constant(&w2, &cfg)?.constant;
    Ok(Factorization {
        omega: w.clone(),
        p,
        theta,
        w1,
        w2,
        eta,
        branch: t.branch,
        operator_norm_a: a,
        truncation_k: k,
        identity_error,
        a1_exponent,
        a1_w1,
        a1_w2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::potential::{critical_radius_field, Potential};

    fn setup() -> (GridSpec, Arc<CriticalRadiusField>) {
        let spec = GridSpec::new(2, 16, 2.0).unwrap();
        (spec, Arc::new(critical_radius_field(&Potential::one(spec))))
    }

    #[test]
    fn zero_input_gives_zero_majorant() {
        let (spec, rho) = setup();
        let cfg = MaximalConfig::cube(rho, 1.0);
        let r = rdf_majorant(&GridFunction::zeros(spec), &cfg, Some(2.0), 10, 1e-9, &NormSpace::new(2.0, None)).unwrap();
        assert_eq!(r.majorant.max(), 0.0);
        assert!(r.certified.pointwise_domination && r.certified.norm_doubling && r.certified.a1_factor);
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(truncation_for(40, 1e-9), 40);
        assert_eq!(truncation_for(5, 1e-3), 10);
        assert!(2f64.powi(-(truncation_for(1, 1e-6) as i32)) < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (spec, rho) = setup();
        let cfg = MaximalConfig::cube(rho.clone(), 1.0);
        let h = GridFunction::constant(spec, 1.0);
        let sp = NormSpace::new(2.0, None);
        assert!(rdf_majorant(&h, &cfg, Some(0.0), 10, 1e-9, &sp).is_err());
        assert!(rdf_majorant(&h.scale(-1.0), &cfg, None, 10, 1e-9, &sp).is_err());
        let w = Weight::constant(spec, 1.0).unwrap();
        assert!(factorize(&w, 1.0, 1.0, &rho, 10, 1e-9).is_err());
    }

    #[test]
    fn p_two_factors() {
        let (spec, rho) = setup();
        let w = Weight::radial_power(spec, -2.5);
        let f = factorize(&w, 2.0, 1.0, &rho, 12, 1e-3).unwrap();
        assert!(f.identity_error < 1e-10);
        for i in 0..spec.len() {
            let (o, e) = (w.values().get(i), f.eta.get(i));
            assert!((f.w1.values().get(i) / (o.sqrt() * e) - 1.0).abs() < 1e-12);
            assert!((f.w2.values().get(i) / (e / o.sqrt()) - 1.0).abs() < 1e-12);
        }
    }
}
