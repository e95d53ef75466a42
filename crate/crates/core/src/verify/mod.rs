//! Measurement harness for the weighted inequalities: operator norms,
//! weak-type constants, the duality inequality, Kolmogorov's estimate, the
//! Fefferman–Stein type bound, Rubio de Francia certification and the
//! extrapolation demonstrations.

pub mod suites;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::construct::{GridOperator, NormSpace, RdFResult};
use crate::error::{invalid, Error, Result};
use crate::grid::{
    norm, vector_norm_pointwise, Cube, GridFunction, GridSpec, NormMode, PrefixSum, VectorGridFunction,
};
use crate::maximal::{maximal, maximal_power, sharp_maximal, MaximalConfig};
use crate::par;
use crate::potential::{penalty, CriticalRadiusField};
use crate::report::{ratio, InequalityReport};
use crate::weights::{ExponentChain, Weight};

/// `∫ |f|^p ω`; `p = ∞` gives `max |f|`.
fn power_integral(f: &GridFunction, p: f64, w: Option<&Weight>) -> Result<f64> {
    let n = norm(f, p, w, NormMode::Strong)?;
    Ok(if p.is_infinite() { n } else { n.powf(p) })
}

/// `sup_f ‖Tf‖_{L^p(ω)} / ‖f‖_{L^p(ω)}` over the suite, skipping zero inputs.
pub fn measure_operator_norm(op: &dyn GridOperator, p: f64, w: Option<&Weight>, suite: &[GridFunction]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for f in suite {
        let d = norm(f, p, w, NormMode::Strong)?;
        if d == 0.0 {
            continue;
        }
        let n = norm(&op.apply(f)?, p, w, NormMode::Strong)?;
        best = Some(best.unwrap_or(0.0).max(n / d));
    }
    best.ok_or_else(|| invalid("suite", "every test function is zero"))
}

/// A map from vector data to a nonnegative scalar field, e.g. `|M f|_r`.
pub type VectorOp<'a> = dyn Fn(&VectorGridFunction) -> Result<GridFunction> + Sync + 'a;

/// `sup_{f,α} α^p ω({|Tf|_r > α}) / ∫|f|_r^p ω`, with the supremum over `α`
/// taken exactly. The strong-type ratio `∫|Tf|^p ω / ∫|f|_r^p ω` is
/// reported alongside as `strong`.
pub fn check_weak_type(
    op: &VectorOp<'_>,
    p: f64,
    r: f64,
    w: Option<&Weight>,
    suite: &[VectorGridFunction],
) -> Result<InequalityReport> {
    let ws: Vec<(String, Option<&Weight>)> = vec![(String::new(), w)];
    check_weak_type_weights(op, p, r, &ws, suite)
}

/// [`check_weak_type`] with the supremum also taken over several weights;
/// `Tf` is evaluated once per instance.
pub fn check_weak_type_weights(
    op: &VectorOp<'_>,
    p: f64,
    r: f64,
    weights: &[(String, Option<&Weight>)],
    suite: &[VectorGridFunction],
) -> Result<InequalityReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("must be finite and > 0, got {p}")));
    }
    let (mut weak, mut strong) = (0.0f64, 0.0f64);
    let (mut lhs, mut rhs, mut worst) = (0.0, 0.0, String::new());
    for (i, f) in suite.iter().enumerate() {
        let mag = vector_norm_pointwise(f, r)?;
        let tf = op(f)?;
        for (name, w) in weights {
            let den = power_integral(&mag, p, *w)?;
            let wk = norm(&tf, p, *w, NormMode::Weak)?.powf(p);
            let st = power_integral(&tf, p, *w)?;
            let q = ratio(wk, den);
            if q > weak || worst.is_empty() {
                (lhs, rhs) = (wk, den);
                worst = format!("instance {i} {name}").trim_end().to_string();
            }
            weak = weak.max(q);
            strong = strong.max(ratio(st, den));
        }
    }
    let mut rep = InequalityReport::new("weak_type", lhs, rhs, f64::INFINITY);
    rep.ratio = weak;
    rep.pass = weak.is_finite();
    Ok(rep
        .worst(worst)
        .suite_size(suite.len() * weights.len())
        .detail("strong", strong)
        .detail("p", p)
        .detail("r", r))
}

/// Both sides of
/// `∫(M_{V,η̄}f)^q g ≤ C∫f^q M_{V,η₁}g` and its dyadic form
/// `∫(M^△_{V,η₂}f)^q g ≤ C∫f^q M_{V,η₁}g`. The report ratio is the larger
/// of the two; the dyadic ratio is a detail.
pub fn check_duality_ineq(
    f: &GridFunction,
    g: &GridFunction,
    q: f64,
    chain: &ExponentChain,
    rho: &Arc<CriticalRadiusField>,
) -> Result<InequalityReport> {
    if !(q > 1.0) {
        return Err(invalid("q", format!("must be > 1, got {q}")));
    }
    if g.min() < 0.0 {
        return Err(invalid("g", "must be nonnegative"));
    }
    let spec = *f.spec();
    let mg = maximal(g, &MaximalConfig::cube(rho.clone(), chain.eta1))?;
    let rhs: f64 = f
        .samples()
        .iter()
        .zip(mg.samples())
        .map(|(a, m)| a.abs().powf(q) * m)
        .sum::<f64>()
        * spec.cell_volume();
    let side = |m: &GridFunction| -> f64 {
        m.samples().iter().zip(g.samples()).map(|(a, b)| a.powf(q) * b).sum::<f64>() * spec.cell_volume()
    };
    let lhs = side(&maximal(f, &MaximalConfig::cube(rho.clone(), chain.eta_bar))?);
    let lhs_d = side(&maximal(f, &MaximalConfig::dyadic(rho.clone(), chain.eta2))?);
    let r12 = ratio(lhs, rhs);
    let r13 = ratio(lhs_d, rhs);
    let mut rep = InequalityReport::new("duality_ineq", lhs, rhs, f64::INFINITY);
    rep.ratio = r12.max(r13);
    rep.pass = rep.ratio.is_finite();
    Ok(rep.detail("ratio_cube", r12).detail("ratio_dyadic", r13).detail("q", q))
}

/// `|Q|^{-1}∫_Q (M_{V,θ}f)^δ` against `|Q|^{-δ}‖f‖₁^δ` for `f` supported in `Q`.
pub fn kolmogorov_check(f: &GridFunction, delta: f64, q: &Cube, cfg: &MaximalConfig) -> Result<InequalityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let spec = *f.spec();
    let (lo, hi) = q.clipped(&spec).ok_or(Error::EmptyRegion)?;
    let mut ix = vec![0; spec.dim];
    let inside = |i: usize, ix: &mut Vec<usize>| {
        spec.unravel(i, ix);
        ix.iter().zip(lo.iter().zip(&hi)).all(|(&x, (&a, &b))| x >= a && x < b)
    };
    if (0..spec.len()).any(|i| f.get(i) != 0.0 && !inside(i, &mut ix)) {
        return Err(invalid("f", "must be supported in the cube"));
    }
    let m = maximal(f, cfg)?;
    let vol = q.clipped_cells(&spec) as f64 * spec.cell_volume();
    let mut acc = 0.0;
    for i in 0..spec.len() {
        if inside(i, &mut ix) {
            acc += m.get(i).powf(delta);
        }
    }
    let lhs = acc * spec.cell_volume() / vol;
    let l1: f64 = f.samples().iter().map(|v| v.abs()).sum::<f64>() * spec.cell_volume();
    let rhs = vol.powf(-delta) * l1.powf(delta);
    Ok(InequalityReport::new("kolmogorov", lhs, rhs, f64::INFINITY)
        .detail("delta", delta)
        .require(lhs.is_finite()))
}

/// `∫ M_{φ,δ,η}f^p ω` against `∫ M^♯_{φ,δ,η}f^p ω`.
pub fn check_fs(f: &GridFunction, p: f64, delta: f64, eta: f64, w: Option<&Weight>) -> Result<InequalityReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let spec = *f.spec();
    let m = maximal_power(f, delta, &MaximalConfig::phi(spec, eta))?;
    let s = sharp_maximal(f, eta, Some(delta))?;
    let lhs = power_integral(&m, p, w)?;
    let rhs = power_integral(&s, p, w)?;
    Ok(InequalityReport::new("fefferman_stein", lhs, rhs, f64::INFINITY)
        .detail("p", p)
        .detail("delta", delta)
        .detail("eta", eta))
}

/// `T_ρ f(x)`: mean of `|f|` over the cube centred at `x` with side `ρ(x)`,
/// snapped to the nearest odd number of cells.
pub struct RhoAverage {
    rho: Arc<CriticalRadiusField>,
    sides: Vec<usize>,
}

impl RhoAverage {
    pub fn new(rho: Arc<CriticalRadiusField>) -> Self {
        let spec = *rho.spec();
        let h = spec.spacing();
        let cap = 2 * spec.points_per_axis - 1;
        let sides = rho
            .rho()
            .samples()
            .iter()
            .map(|r| (2 * (((r / h - 1.0) / 2.0).round().max(0.0) as usize) + 1).min(cap))
            .collect();
        Self { rho, sides }
    }

    /// Distinct snapped sides, ascending.
    pub fn sides(&self) -> Vec<usize> {
        let mut s = self.sides.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// `(1 + side(x)/ρ(x))^η`, the penalty of the averaging cube at `x`.
    pub fn penalty_at(&self, flat: usize, eta: f64) -> f64 {
        let h = self.rho.spec().spacing();
        penalty(self.sides[flat] as f64 * h / self.rho.at(flat), eta)
    }

    /// `M_{V,η}` over centred cubes whose family includes every averaging cube.
    pub fn dominating_config(&self, eta: f64) -> MaximalConfig {
        let mut sides = MaximalConfig::centered(self.rho.clone(), eta).sides;
        sides.extend(self.sides());
        sides.sort_unstable();
        sides.dedup();
        MaximalConfig::centered(self.rho.clone(), eta).with_sides(sides)
    }

    /// Cells where `T_ρf > (1 + side/ρ)^η M_{V,η}f`, with relative slack `1e-12`.
    pub fn domination_violations(&self, f: &GridFunction, eta: f64) -> Result<usize> {
        let t = self.apply(f)?;
        let m = maximal(f, &self.dominating_config(eta))?;
        Ok((0..t.spec().len())
            .filter(|&i| t.get(i) > self.penalty_at(i, eta) * m.get(i) * (1.0 + 1e-12))
            .count())
    }
}

impl GridOperator for RhoAverage {
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let spec = *f.spec();
        spec.check_same(self.rho.spec())?;
        let a = f.abs();
        let table = PrefixSum::new(&spec, a.samples());
        let out = par::map_range(spec.len(), |i| {
            let mut ix = vec![0; spec.dim];
            spec.unravel(i, &mut ix);
            let (sum, count) = table.cube_sum(&spec, &Cube::centered(&ix, self.sides[i])).expect("contains x");
            sum / count as f64
        });
        Ok(GridFunction::from_raw(spec, out))
    }

    fn name(&self) -> String {
        "rho_average".into()
    }
}

/// Pairs `(f, g)` of nonnegative functions on one grid.
#[derive(Clone, Debug)]
pub struct PairFamily {
    pub pairs: Vec<(GridFunction, GridFunction)>,
    pub generator: String,
}

impl PairFamily {
    pub fn new(pairs: Vec<(GridFunction, GridFunction)>, generator: impl Into<String>) -> Result<Self> {
        let Some(spec) = pairs.first().map(|p| *p.0.spec()) else {
            return Err(invalid("pairs", "family must be nonempty"));
        };
        for (f, g) in &pairs {
            spec.check_same(f.spec())?;
            spec.check_same(g.spec())?;
            if f.min() < 0.0 || g.min() < 0.0 {
                return Err(invalid("pairs", "functions must be nonnegative"));
            }
        }
        Ok(Self {
            pairs,
            generator: generator.into(),
        })
    }

    /// `(g, g)` for each input.
    pub fn identical(gs: &[GridFunction]) -> Result<Self> {
        Self::new(gs.iter().map(|g| (g.abs(), g.abs())).collect(), "identical")
    }

    /// `(T_ρ f, M_{V,η} f)` for each input.
    pub fn rho_average(fs: &[GridFunction], rho: &Arc<CriticalRadiusField>, eta: f64) -> Result<Self> {
        let t = RhoAverage::new(rho.clone());
        let cfg = t.dominating_config(eta);
        let pairs = fs
            .iter()
            .map(|f| Ok((t.apply(f)?, maximal(f, &cfg)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs, format!("rho_average(eta={eta})"))
    }

    pub fn spec(&self) -> &GridSpec {
        self.pairs[0].0.spec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationMode {
    /// `‖f‖_{L^p(ω)} ≤ C‖g‖_{L^p(ω)}`.
    Strong,
    /// `‖f‖_{L^{p,∞}(ω)} ≤ C‖g‖_{L^{p,∞}(ω)}`.
    Weak,
    /// `‖(Σ f_j^q)^{1/q}‖_{L^p(ω)} ≤ C‖(Σ g_j^q)^{1/q}‖_{L^p(ω)}`.
    Vector { q: f64 },
    /// The vector bound in `L^{p,∞}(ω)`.
    WeakVector { q: f64 },
}

/// Components per vector instance in the vector modes.
pub const VECTOR_BLOCK: usize = 4;

fn pair_constant(f: &GridFunction, g: &GridFunction, p: f64, w: &Weight, mode: NormMode) -> Result<f64> {
    Ok(ratio(norm(f, p, Some(w), mode)?, norm(g, p, Some(w), mode)?))
}

/// Sup over the family and weights of the constant in the given mode.
pub fn family_constant(family: &PairFamily, p: f64, mode: ExtrapolationMode, weights: &[(String, Weight)]) -> Result<(f64, String)> {
    let mut best = (0.0f64, String::new());
    let blocks: Vec<(GridFunction, GridFunction)> = match mode {
        ExtrapolationMode::Strong | ExtrapolationMode::Weak => family.pairs.clone(),
        ExtrapolationMode::Vector { q } | ExtrapolationMode::WeakVector { q } => family
            .pairs
            .chunks(VECTOR_BLOCK)
            .map(|c| {
                let fs = VectorGridFunction::new(c.iter().map(|p| p.0.clone()).collect())?;
                let gs = VectorGridFunction::new(c.iter().map(|p| p.1.clone()).collect())?;
                Ok((vector_norm_pointwise(&fs, q)?, vector_norm_pointwise(&gs, q)?))
            })
            .collect::<Result<_>>()?,
    };
    let nm = match mode {
        ExtrapolationMode::Strong | ExtrapolationMode::Vector { .. } => NormMode::Strong,
        _ => NormMode::Weak,
    };
    for (name, w) in weights {
        for (i, (f, g)) in blocks.iter().enumerate() {
            let c = pair_constant(f, g, p, w, nm)?;
            if c > best.0 || best.1.is_empty() {
                best = (c.max(best.0), format!("{name}, instance {i}"));
            }
        }
    }
    Ok(best)
}

/// Measures the hypothesis constant at `p₀` and the conclusion constants
/// at each target exponent and mode, over the same weights.
pub fn extrapolation_suite(
    family: &PairFamily,
    p0: f64,
    targets: &[f64],
    weights: &[(String, Weight)],
    modes: &[ExtrapolationMode],
) -> Result<Vec<InequalityReport>> {
    let (base, at) = family_constant(family, p0, ExtrapolationMode::Strong, weights)?;
    if !base.is_finite() {
        return Err(Error::HypothesisFails(format!("constant at p0={p0} is infinite ({at})")));
    }
    let mut out = vec![InequalityReport::from_ratio(format!("hypothesis(p0={p0})"), base, f64::INFINITY)
        .worst(at)
        .suite_size(family.pairs.len() * weights.len())];
    for &mode in modes {
        for &p in targets {
            let (c, at) = family_constant(family, p, mode, weights)?;
            let label = match mode {
                ExtrapolationMode::Strong => format!("strong(p={p})"),
                ExtrapolationMode::Weak => format!("weak(p={p})"),
                ExtrapolationMode::Vector { q } => format!("vector(p={p},q={q})"),
                ExtrapolationMode::WeakVector { q } => format!("weak_vector(p={p},q={q})"),
            };
            out.push(
                InequalityReport::from_ratio(label, c, f64::INFINITY)
                    .worst(at)
                    .suite_size(family.pairs.len() * weights.len())
                    .detail("hypothesis", base)
                    .detail("p", p),
            );
        }
    }
    Ok(out)
}

/// `sup ‖Tf‖/‖f‖` in `L^p(ω)` for each target `p` over the weights.
pub fn operator_extrapolation(op: &dyn GridOperator, targets: &[f64], weights: &[(String, Weight)], suite: &[GridFunction]) -> Result<Vec<InequalityReport>> {
    targets
        .iter()
        .map(|&p| {
            let mut best = (0.0f64, String::new());
            for (name, w) in weights {
                let c = measure_operator_norm(op, p, Some(w), suite)?;
                if c > best.0 || best.1.is_empty() {
                    best = (c.max(best.0), name.clone());
                }
            }
            Ok(InequalityReport::from_ratio(format!("operator(p={p})"), best.0, f64::INFINITY)
                .worst(best.1)
                .suite_size(suite.len() * weights.len())
                .detail("p", p))
        })
        .collect()
}

/// Re-measures the three majorant properties of an RdF result: `h ≤ ℛh`
/// exactly, `‖ℛh‖ ≤ 2‖h‖` up to `tol`, `Tℛh ≤ 2Aℛh` up to a factor `1 + tol`.
/// The ratio is `sup Tℛh / ℛh` divided by `2A`.
pub fn rdf_properties_check(result: &RdFResult, op: &dyn GridOperator, space: &NormSpace) -> Result<InequalityReport> {
    let (h, rh) = (&result.base, &result.majorant);
    let a_viol = h.samples().iter().zip(rh.samples()).filter(|(x, r)| x > r).count();
    let nh = space.norm(h)?;
    let b = ratio(space.norm(rh)?, nh);
    let t = op.apply(rh)?;
    let c = t
        .samples()
        .iter()
        .zip(rh.samples())
        .filter(|(_, r)| **r > 0.0)
        .fold(0.0f64, |m, (x, r)| m.max(x / r));
    let two_a = 2.0 * result.operator_norm_a;
    let tol = result.tol;
    Ok(InequalityReport::from_ratio("rdf", c / two_a, 1.0 + tol)
        .worst(result.operator.clone())
        .detail("domination_violations", a_viol as f64)
        .detail("norm_ratio", b)
        .detail("a1_ratio", c)
        .detail("two_a", two_a)
        .require(a_viol == 0 && b <= 2.0 + tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{rdf_majorant, Identity};
    use crate::potential::{critical_radius_field, Potential};

    fn setup() -> (GridSpec, Arc<CriticalRadiusField>) {
        let spec = GridSpec::new(2, 16, 2.0).unwrap();
        (spec, Arc::new(critical_radius_field(&Potential::one(spec))))
    }

    fn bump(spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x| (-(x[0] * x[0] + x[1] * x[1])).exp())
    }

    #[test]
    fn identity_has_unit_norm() {
        let (spec, _) = setup();
        let c = measure_operator_norm(&Identity, 2.0, None, &[bump(spec), GridFunction::zeros(spec)]).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        assert!(measure_operator_norm(&Identity, 2.0, None, &[GridFunction::zeros(spec)]).is_err());
    }

    #[test]
    fn weak_never_exceeds_strong() {
        let (spec, rho) = setup();
        let cfg = MaximalConfig::cube(rho, 1.0);
        let op = |f: &VectorGridFunction| crate::maximal::maximal_vector(f, &cfg, 2.0);
        let f = VectorGridFunction::new(vec![bump(spec), bump(spec).scale(0.5)]).unwrap();
        let r = check_weak_type(&op, 2.0, 2.0, None, std::slice::from_ref(&f)).unwrap();
        assert!(r.ratio <= r.details["strong"] * (1.0 + 1e-12));
        // Tf ≥ |f|_r pointwise, so the ratio is at least that of |f|_r itself
        let mag = vector_norm_pointwise(&f, 2.0).unwrap();
        let floor = norm(&mag, 2.0, None, NormMode::Weak).unwrap().powi(2) / norm(&mag, 2.0, None, NormMode::Strong).unwrap().powi(2);
        assert!(r.ratio >= floor * (1.0 - 1e-12));
    }

    #[test]
    fn zero_inputs_are_trivial() {
        let (spec, rho) = setup();
        let z = GridFunction::zeros(spec);
        let chain = ExponentChain::from_eta_bar(4.0, 1.0);
        let r = check_duality_ineq(&z, &GridFunction::constant(spec, 1.0), 2.0, &chain, &rho).unwrap();
        assert_eq!(r.ratio, 0.0);
        let q = Cube::new(vec![4, 4], 8);
        let r = kolmogorov_check(&z, 0.5, &q, &MaximalConfig::cube(rho.clone(), 1.0)).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(kolmogorov_check(&z, 1.0, &q, &MaximalConfig::cube(rho, 1.0)).is_err());
        assert_eq!(check_fs(&z, 2.0, 0.5, 1.0, None).unwrap().ratio, 0.0);
    }

    #[test]
    fn rho_average_is_dominated() {
        let (spec, rho) = setup();
        let t = RhoAverage::new(rho);
        for eta in [0.5, 1.0, 3.0] {
            assert_eq!(t.domination_violations(&bump(spec), eta).unwrap(), 0);
        }
    }

    #[test]
    fn identical_pairs_give_unit_constants() {
        let (spec, _) = setup();
        let fam = PairFamily::identical(&[bump(spec), bump(spec).scale(2.0)]).unwrap();
        let ws = vec![("one".to_string(), Weight::constant(spec, 1.0).unwrap())];
        let reps = extrapolation_suite(&fam, 2.0, &[0.5, 3.0], &ws, &[ExtrapolationMode::Strong, ExtrapolationMode::Weak]).unwrap();
        for r in reps {
            assert!((r.ratio - 1.0).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn rdf_check_agrees_with_certification() {
        let (spec, rho) = setup();
        let cfg = MaximalConfig::cube(rho, 1.0);
        let space = NormSpace::new(2.0, None);
        let res = rdf_majorant(&bump(spec), &cfg, None, 40, 1e-9, &space).unwrap();
        let r = rdf_properties_check(&res, &cfg, &space).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.details["a1_ratio"], res.certified.a1_ratio);
    }
}
