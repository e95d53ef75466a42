//! Weights and the `A_p^{ρ,θ}` classes: per-cube Muckenhoupt products damped
//! by `Ψ_θ`, `A_1` via maximal domination, duality, products, `BMO_θ(ρ)` and
//! the exponent bookkeeping of the vector-valued maximal theorem.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{sum_box_map, Cube, CubeDescriptor, CubeFamily, GridFunction, GridSpec, PrefixSum, RadiiLadder};
use crate::maximal::{maximal, maximal_weighted, MaximalConfig, Variant};
use crate::par;
use crate::potential::{penalty_inv, CriticalRadiusField};
use crate::report::{extf64, InequalityReport};

/// Strictly positive, finite grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight(GridFunction);

impl Weight {
    pub fn new(values: GridFunction) -> Result<Self> {
        if !(values.min() > 0.0) {
            return Err(invalid("weight", "weights must be strictly positive"));
        }
        Ok(Self(values))
    }

    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        Self::new(GridFunction::constant(spec, c))
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Result<Self> {
        Self::new(GridFunction::from_fn(spec, f))
    }

    /// `(1 + |x|)^a`.
    pub fn radial_power(spec: GridSpec, a: f64) -> Self {
        Self::from_fn(spec, |x| (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()).powf(a))
            .expect("positive")
    }

    pub fn values(&self) -> &GridFunction {
        &self.0
    }

    pub fn spec(&self) -> &GridSpec {
        self.0.spec()
    }

    pub fn into_function(self) -> GridFunction {
        self.0
    }

    /// `ω^e`; fails if the result leaves the finite positive range.
    pub fn pow(&self, e: f64) -> Result<Self> {
        let v = self.0.map(|x| x.powf(e));
        Self::new(GridFunction::new(*v.spec(), v.into_samples())?)
    }

    pub fn product(&self, other: &Weight) -> Result<Self> {
        let v = self.0.zip_with(&other.0, |a, b| a * b)?;
        Self::new(GridFunction::new(*v.spec(), v.into_samples())?)
    }
}

/// `σ = ω^{-1/(p-1)}`.
pub fn dual_weight(w: &Weight, p: f64) -> Result<Weight> {
    if p == 1.0 {
        return Err(Error::DualUndefined);
    }
    if !(p > 1.0) {
        return Err(invalid("p", format!("must be > 1, got {p}")));
    }
    w.pow(-1.0 / (p - 1.0))
}

/// Hölder conjugate `p/(p-1)` (∞ at `p = 1`).
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub theta: f64,
    #[serde(with = "extf64")]
    pub constant: f64,
    /// `None` when the supremum is the small-cube limit inside a cell.
    pub worst_cube: Option<CubeDescriptor>,
    pub family: String,
    pub cube_count: usize,
}

/// `Ψ_θ(Q)^{-1}` with the centre form `(1 + side/ρ(centre))^θ`.
pub fn psi_inv_center(q: &Cube, rho: &CriticalRadiusField, theta: f64) -> f64 {
    let spec = rho.spec();
    let c = spec.ravel(&q.center_cell(spec));
    penalty_inv(q.side(spec) / rho.at(c), theta)
}

/// Per-cube products `(Ψ⁻¹ avg ω)(Ψ⁻¹ avg ω^{-1/(p-1)})^{p-1}`, `p > 1`, in
/// family order. Cubes missing the box give `None`.
pub fn ap_products(w: &Weight, p: f64, theta: f64, rho: &CriticalRadiusField, family: &CubeFamily) -> Result<Vec<Option<f64>>> {
    let sigma = dual_weight(w, p)?;
    let spec = *w.spec();
    spec.check_same(rho.spec())?;
    let tw = PrefixSum::new(&spec, w.values().samples());
    let ts = PrefixSum::new(&spec, sigma.values().samples());
    Ok(par::map_slice(&family.cubes, |q| {
        let (lo, hi) = q.clipped(&spec)?;
        let count: usize = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let inv = psi_inv_center(q, rho, theta);
        let aw = inv * tw.box_sum(&lo, &hi) / count as f64;
        let asg = inv * ts.box_sum(&lo, &hi) / count as f64;
        Some(aw * asg.powf(p - 1.0))
    }))
}

/// `A_p^{ρ,θ}` constant over the family (`p > 1`), or for `p = 1` the
/// `sup M_{V,θ}ω / ω` with [`MaximalConfig::cube`].
pub fn ap_constant(
    w: &Weight,
    p: f64,
    theta: f64,
    rho: &Arc<CriticalRadiusField>,
    family: &CubeFamily,
) -> Result<ApReport> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    if !(theta >= 0.0) {
        return Err(invalid("theta", format!("must be >= 0, got {theta}")));
    }
    if p == 1.0 {
        return a1_constant(w, &MaximalConfig::cube(rho.clone(), theta));
    }
    let spec = *w.spec();
    let products = ap_products(w, p, theta, rho, family)?;
    let mut constant = if family.subcell { 1.0 } else { 0.0 };
    let mut worst = None;
    for (i, v) in products.iter().enumerate() {
        if let Some(v) = *v {
            if v > constant {
                constant = v;
                worst = Some(i);
            }
        }
    }
    Ok(ApReport {
        p,
        theta,
        constant,
        worst_cube: worst.map(|i| family.cubes[i].descriptor(&spec)),
        family: family.descriptor.clone(),
        cube_count: family.len(),
    })
}

/// `sup_x M ω(x)/ω(x)` for the given maximal configuration.
pub fn a1_constant(w: &Weight, cfg: &MaximalConfig) -> Result<ApReport> {
    let spec = *w.spec();
    let m = maximal(w.values(), cfg)?;
    let (mut best, mut at) = (0.0, 0);
    for (i, (a, b)) in m.samples().iter().zip(w.values().samples()).enumerate() {
        let r = a / b;
        if r > best {
            best = r;
            at = i;
        }
    }
    let worst = worst_cube_at(w.values(), cfg, at, m.get(at));
    Ok(ApReport {
        p: 1.0,
        theta: cfg.exponent,
        constant: best,
        worst_cube: worst.map(|q| q.descriptor(&spec)),
        family: cfg.descriptor(),
        cube_count: cfg.sides.len(),
    })
}

/// A family cube containing cell `at` whose penalised average reaches
/// `target`; `None` if the value comes from the small-cube limit.
fn worst_cube_at(f: &GridFunction, cfg: &MaximalConfig, at: usize, target: f64) -> Option<Cube> {
    let spec = *f.spec();
    let mut ix = vec![0; spec.dim];
    spec.unravel(at, &mut ix);
    if cfg.subcell && f.get(at).abs() >= target {
        return None;
    }
    let tol = 1e-12 * target.abs().max(f64::MIN_POSITIVE);
    let close = |q: &Cube| {
        let (lo, hi) = q.clipped(&spec)?;
        let count: usize = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let v = sum_box_map(f, &lo, &hi, f64::abs) / count as f64 * cfg.penalty_inv_for(q);
        ((v - target).abs() <= tol.max(1e-9 * target)).then(|| q.clone())
    };
    match cfg.variant {
        Variant::Dyadic => {
            let lat = cfg.lattice?;
            (0..=lat.depth()).find_map(|j| close(&lat.cube(j, lat.containing(j, &ix))))
        }
        Variant::Centered => cfg.sides.iter().find_map(|&k| close(&Cube::centered(&ix, k))),
        _ => cfg.sides.iter().find_map(|&k| {
            let mut off = vec![0usize; spec.dim];
            loop {
                let lo = ix.iter().zip(&off).map(|(&i, &o)| i as isize - o as isize).collect();
                if let Some(q) = close(&Cube::new(lo, k)) {
                    return Some(q);
                }
                let mut d = spec.dim;
                loop {
                    if d == 0 {
                        return None;
                    }
                    d -= 1;
                    off[d] += 1;
                    if off[d] < k {
                        break;
                    }
                    off[d] = 0;
                }
            }
        }),
    }
}

/// `sup_Q Ψ_θ(Q)^{-1} |Q|^{-1} ∫_Q |f − f_Q|` over the family.
pub fn bmo_norm(f: &GridFunction, theta: f64, rho: &CriticalRadiusField, family: &CubeFamily) -> Result<f64> {
    let spec = *f.spec();
    spec.check_same(rho.spec())?;
    let table = PrefixSum::new(&spec, f.samples());
    let vals = par::map_slice(&family.cubes, |q| {
        let Some((lo, hi)) = q.clipped(&spec) else {
            return 0.0;
        };
        let count: usize = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let mean = table.box_sum(&lo, &hi) / count as f64;
        let osc = sum_box_map(f, &lo, &hi, |v| (v - mean).abs()) / count as f64;
        osc * psi_inv_center(q, rho, theta)
    });
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Exponents of the vector-valued maximal theorem and its proof chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentBudget {
    pub l0: f64,
    pub theta: f64,
    pub p: f64,
    pub r: f64,
    pub n: usize,
    pub p0: f64,
    pub theta0: f64,
    pub eta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub eta_bar: f64,
    pub eta3: f64,
    pub eta2: f64,
    pub eta1: f64,
}

/// `p₀ = 4(l₀+1)⁵(p + ((r+1)/2)′)`, `θ₀ = p((3θ+n)p + (l₀+1)n)`, `η = p₀θ₀`,
/// `θ₁ = θ(l₀+1)`, `θ₂ = θ(l₀+1)²`, `η̄ = η/(2(l₀+1)²)`, `η₃ = η̄/(l₀+1)`,
/// `η₂ = η̄/(l₀+1)²`, `η₁ = η̄/(l₀+1)³`.
pub fn exponent_budget(l0: f64, theta: f64, p: f64, r: f64, n: usize) -> Result<ExponentBudget> {
    if !(l0 > 0.0) {
        return Err(invalid("l0", format!("must be > 0, got {l0}")));
    }
    if !(p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    if !(r > 1.0) {
        return Err(invalid("r", format!("must be > 1, got {r}")));
    }
    if !(theta >= 0.0) {
        return Err(invalid("theta", format!("must be >= 0, got {theta}")));
    }
    if n == 0 {
        return Err(invalid("n", "dimension must be >= 1"));
    }
    let a = l0 + 1.0;
    let nf = n as f64;
    let p0 = 4.0 * a.powi(5) * (p + conjugate((r + 1.0) / 2.0));
    let theta0 = p * ((3.0 * theta + nf) * p + a * nf);
    let eta = p0 * theta0;
    let eta_bar = eta / (2.0 * a * a);
    Ok(ExponentBudget {
        l0,
        theta,
        p,
        r,
        n,
        p0,
        theta0,
        eta,
        theta1: theta * a,
        theta2: theta * a * a,
        eta_bar,
        eta3: eta_bar / a,
        eta2: eta_bar / (a * a),
        eta1: eta_bar / (a * a * a),
    })
}

/// The chain `η̄ > η₃ > η₂ > η₁` of exponents, from a budget or from a
/// chosen `η̄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentChain {
    pub l0: f64,
    pub eta_bar: f64,
    pub eta3: f64,
    pub eta2: f64,
    pub eta1: f64,
}

impl ExponentChain {
    pub fn from_eta_bar(eta_bar: f64, l0: f64) -> Self {
        let a = l0 + 1.0;
        Self {
            l0,
            eta_bar,
            eta3: eta_bar / a,
            eta2: eta_bar / (a * a),
            eta1: eta_bar / (a * a * a),
        }
    }
}

impl From<&ExponentBudget> for ExponentChain {
    fn from(b: &ExponentBudget) -> Self {
        Self {
            l0: b.l0,
            eta_bar: b.eta_bar,
            eta3: b.eta3,
            eta2: b.eta2,
            eta1: b.eta1,
        }
    }
}

/// Product rule: certifies `M_{ω₁}ω₂ ≤ Cω₂` and reports the `A_p^{ρ,θp}`
/// constant of `ω₁ω₂`.
pub fn product_a1_check(
    w1: &Weight,
    w2: &Weight,
    p: f64,
    theta: f64,
    rho: &Arc<CriticalRadiusField>,
    family: &CubeFamily,
) -> Result<InequalityReport> {
    let spec = *w1.spec();
    let sides = RadiiLadder::standard(&spec).cube_sides(&spec);
    let m = maximal_weighted(w2.values(), w1, &sides, true)?;
    let cert = m
        .samples()
        .iter()
        .zip(w2.values().samples())
        .fold(0.0f64, |c, (a, b)| c.max(a / b));
    let prod = w1.product(w2)?;
    let ap = ap_constant(&prod, p, theta * p, rho, family)?;
    let worst = ap
        .worst_cube
        .as_ref()
        .map_or_else(|| "small-cube limit".to_string(), |q| format!("{q:?}"));
    Ok(InequalityReport::from_ratio("product_a1", ap.constant, f64::INFINITY)
        .worst(worst)
        .suite_size(family.len())
        .detail("a1_constant_w2_wrt_w1", cert)
        .detail("ap_constant_product", ap.constant)
        .detail("p", p)
        .detail("theta_p", theta * p)
        .require(cert.is_finite() && ap.constant.is_finite()))
}
