//! Potentials `V ≥ 0`, the reverse Hölder class `B_q`, the critical radius
//! `ρ(x) = 1/m_V(x) = sup{r : r^{2-n} ∫_{B(x,r)} V ≤ 1}` and the penalisation
//! factors `Ψ_θ` (centre form) and `ψ_θ` (max-ρ form).
//!
//! Balls of radius `r` are realised as axis-parallel cubes of equal volume,
//! side `ω_n^{1/n} r`. For the built-in closed forms the cube integral is
//! exact on ℝⁿ; custom potentials integrate their piecewise-constant cell
//! values exactly over the clipped cube, including fractional cells.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{CubeDescriptor, CubeFamily, GridFunction, GridSpec, PrefixSum, RadiiLadder};
use crate::par;
use crate::report::extf64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    /// `V ≡ c`
    One,
    /// `V = c|x|²`
    SquareNorm,
    Custom,
}

#[derive(Clone, Debug)]
pub struct Potential {
    values: GridFunction,
    closed_form: ClosedForm,
    scale: f64,
    table: PrefixSum,
}

/// Volume of the Euclidean unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

/// Side of the cube with the volume of a ball of radius `r`.
pub fn equal_volume_side(n: usize, r: f64) -> f64 {
    unit_ball_volume(n).powf(1.0 / n as f64) * r
}

impl Potential {
    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("potential", "constant potential must be positive"));
        }
        Ok(Self::build(GridFunction::constant(spec, c), ClosedForm::One, c))
    }

    pub fn one(spec: GridSpec) -> Self {
        Self::constant(spec, 1.0).unwrap()
    }

    pub fn square_norm(spec: GridSpec, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("potential", "scale must be positive"));
        }
        let values = GridFunction::from_fn(spec, |x| c * x.iter().map(|v| v * v).sum::<f64>());
        Ok(Self::build(values, ClosedForm::SquareNorm, c))
    }

    pub fn custom(values: GridFunction) -> Result<Self> {
        if values.min() < 0.0 {
            return Err(invalid("potential", "samples must be nonnegative"));
        }
        if values.max() <= 0.0 {
            return Err(invalid("potential", "potential vanishes identically"));
        }
        Ok(Self::build(values, ClosedForm::Custom, 1.0))
    }

    fn build(values: GridFunction, closed_form: ClosedForm, scale: f64) -> Self {
        let table = PrefixSum::new(values.spec(), values.samples());
        Self {
            values,
            closed_form,
            scale,
            table,
        }
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn spec(&self) -> &GridSpec {
        self.values.spec()
    }

    pub fn closed_form(&self) -> ClosedForm {
        self.closed_form
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `∫ V` over the axis-parallel cube with centre `x` and side `s`.
    pub fn cube_integral(&self, x: &[f64], s: f64) -> f64 {
        let n = x.len();
        let half = s / 2.0;
        match self.closed_form {
            ClosedForm::One => self.scale * s.powi(n as i32),
            ClosedForm::SquareNorm => {
                // Σ_i ∫ y_i² over [a_i,b_i] × Π_{j≠i} (b_j − a_j)
                let others = s.powi(n as i32 - 1);
                let cubic: f64 = x
                    .iter()
                    .map(|&c| ((c + half).powi(3) - (c - half).powi(3)) / 3.0)
                    .sum();
                self.scale * cubic * others
            }
            ClosedForm::Custom => self.fractional_box_integral(x, half),
        }
    }

    /// `∫_{B(x,r)} V` with the ball realised as its equal-volume cube.
    pub fn ball_integral(&self, x: &[f64], r: f64) -> f64 {
        self.cube_integral(x, equal_volume_side(x.len(), r))
    }

    fn fractional_box_integral(&self, x: &[f64], half: f64) -> f64 {
        let spec = *self.spec();
        let h = spec.spacing();
        let n = spec.points_per_axis as f64;
        // per axis: up to three (lo, hi, weight) cell ranges
        let mut segments: Vec<Vec<(usize, usize, f64)>> = Vec::with_capacity(spec.dim);
        for &c in x {
            let a = ((c - half + spec.half_width) / h).clamp(0.0, n);
            let b = ((c + half + spec.half_width) / h).clamp(0.0, n);
            if b <= a {
                return 0.0;
            }
            let (ia, ib) = (a.floor(), b.floor());
            let mut seg = vec![];
            if ia == ib {
                seg.push((ia as usize, ia as usize + 1, b - a));
            } else {
                if a > ia {
                    seg.push((ia as usize, ia as usize + 1, ia + 1.0 - a));
                }
                let full_lo = a.ceil() as usize;
                let full_hi = ib as usize;
                if full_hi > full_lo {
                    seg.push((full_lo, full_hi, 1.0));
                }
                if b > ib {
                    seg.push((ib as usize, ib as usize + 1, b - ib));
                }
            }
            segments.push(seg);
        }
        let mut total = 0.0;
        let mut pick = vec![0usize; spec.dim];
        let (mut lo, mut hi) = (vec![0; spec.dim], vec![0; spec.dim]);
        'outer: loop {
            let mut w = 1.0;
            for d in 0..spec.dim {
                let (l, u, wt) = segments[d][pick[d]];
                lo[d] = l;
                hi[d] = u;
                w *= wt;
            }
            total += w * self.table.box_sum(&lo, &hi);
            for d in (0..spec.dim).rev() {
                pick[d] += 1;
                if pick[d] < segments[d].len() {
                    continue 'outer;
                }
                pick[d] = 0;
            }
            break;
        }
        total * spec.cell_volume()
    }

    /// `r^{2-n} ∫_{B(x,r)} V`.
    pub fn scaled_mass(&self, x: &[f64], r: f64) -> f64 {
        r.powi(2 - x.len() as i32) * self.ball_integral(x, r)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReverseHolderReport {
    #[serde(with = "extf64")]
    pub q: f64,
    #[serde(with = "extf64")]
    pub constant: f64,
    /// `None` when the supremum is the small-scale limit (ratio 1).
    pub worst_ball: Option<CubeDescriptor>,
    pub family: String,
}

/// Sup over the family of `(avg_Q V^q)^{1/q} / avg_Q V`; `q = ∞` uses the max.
/// Each cube stands for the ball it realises. The constant is at least 1:
/// the small-cube limit of the ratio is 1 wherever `V > 0`.
pub fn check_reverse_holder(v: &Potential, q: f64, family: &CubeFamily) -> Result<ReverseHolderReport> {
    if !(q > 1.0) {
        return Err(invalid("q", format!("reverse Hölder exponent must be > 1, got {q}")));
    }
    let spec = *v.spec();
    let vals = v.values().samples();
    let vq: Vec<f64> = if q.is_finite() {
        vals.iter().map(|x| x.powf(q)).collect()
    } else {
        vec![]
    };
    let tq = PrefixSum::new(&spec, if q.is_finite() { &vq } else { vals });
    let ratios = par::map_slice(&family.cubes, |cube| {
        let (lo, hi) = cube.clipped(&spec)?;
        let count: usize = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let avg = v.table.box_sum(&lo, &hi) / count as f64;
        let top = if q.is_finite() {
            (tq.box_sum(&lo, &hi) / count as f64).max(0.0).powf(1.0 / q)
        } else {
            crate::grid::box_max(v.values(), &lo, &hi)
        };
        Some(if avg > 0.0 {
            top / avg
        } else if top > 0.0 {
            f64::INFINITY
        } else {
            0.0
        })
    });
    let mut constant = 1.0;
    let mut worst = None;
    for (i, r) in ratios.iter().enumerate() {
        if let Some(r) = *r {
            if r > constant {
                constant = r;
                worst = Some(i);
            }
        }
    }
    Ok(ReverseHolderReport {
        q,
        constant,
        worst_ball: worst.map(|i| family.cubes[i].descriptor(&spec)),
        family: family.descriptor.clone(),
    })
}

/// Critical radius field `ρ` sampled at cell centres.
#[derive(Clone, Debug)]
pub struct CriticalRadiusField {
    rho: GridFunction,
    pub radii_ladder: RadiiLadder,
    pub tolerance: f64,
    /// Cells where every ladder radius satisfied the constraint; ρ was
    /// clamped to the box diameter there.
    pub clamped: usize,
}

impl CriticalRadiusField {
    /// Wraps an explicit positive field (e.g. loaded from a file).
    pub fn from_values(rho: GridFunction) -> Result<Self> {
        if rho.min() <= 0.0 {
            return Err(invalid("rho", "critical radius must be positive"));
        }
        let spec = *rho.spec();
        Ok(Self {
            rho,
            radii_ladder: RadiiLadder::standard(&spec),
            tolerance: 0.0,
            clamped: 0,
        })
    }

    pub fn rho(&self) -> &GridFunction {
        &self.rho
    }

    pub fn spec(&self) -> &GridSpec {
        self.rho().spec()
    }

    #[inline]
    pub fn at(&self, flat: usize) -> f64 {
        self.rho().get(flat)
    }

    /// `ρ` at the cell nearest to `x`.
    pub fn at_point(&self, x: &[f64]) -> f64 {
        let s = self.spec();
        self.at(s.ravel(&s.nearest_index(x)))
    }

    pub fn m_v(&self) -> GridFunction {
        self.rho().map(|r| 1.0 / r)
    }

    pub fn min(&self) -> f64 {
        self.rho().min()
    }

    pub fn max(&self) -> f64 {
        self.rho().max()
    }
}

pub const RHO_TOLERANCE: f64 = 1e-4;

/// `ρ(x)` for every cell: the largest ladder radius with
/// `r^{2-n}∫_{B(x,r)} V ≤ 1`, refined by bisection towards the next rung.
pub fn critical_radius_field(v: &Potential) -> CriticalRadiusField {
    critical_radius_field_with(v, &RadiiLadder::standard(v.spec()), RHO_TOLERANCE)
}

pub fn critical_radius_field_with(v: &Potential, ladder: &RadiiLadder, tol: f64) -> CriticalRadiusField {
    let spec = *v.spec();
    let diameter = spec.diameter();
    let out = par::map_range(spec.len(), |i| critical_radius_at(v, &spec.point(i), ladder, tol, diameter));
    let clamped = out.iter().filter(|(_, c)| *c).count();
    CriticalRadiusField {
        rho: GridFunction::from_raw(spec, out.into_iter().map(|(r, _)| r).collect()),
        radii_ladder: ladder.clone(),
        tolerance: tol,
        clamped,
    }
}

/// Returns `(ρ, clamped)` at the point `x`.
pub fn critical_radius_at(v: &Potential, x: &[f64], ladder: &RadiiLadder, tol: f64, diameter: f64) -> (f64, bool) {
    let ok = |r: f64| v.scaled_mass(x, r) <= 1.0;
    let radii = &ladder.radii;
    let Some(k) = radii.iter().rposition(|&r| ok(r)) else {
        // below the first rung: halve until satisfied, then refine
        let mut hi = radii[0];
        let mut lo = hi / 2.0;
        while !ok(lo) {
            hi = lo;
            lo /= 2.0;
            if lo < 1e-300 {
                return (lo, false);
            }
        }
        return (bisect(ok, lo, hi, tol), false);
    };
    if k + 1 == radii.len() {
        return (diameter, true);
    }
    (bisect(ok, radii[k], radii[k + 1], tol), false)
}

fn bisect(ok: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `Ψ_θ(B) = (1 + r/ρ(x₀))^θ`, with ρ read at the cell nearest the centre.
pub fn psi_ball(center: &[f64], r: f64, rho: &CriticalRadiusField, theta: f64) -> f64 {
    penalty(r / rho.at_point(center), theta)
}

/// `ψ_θ(Q) = (1 + side(Q)/max_Q ρ)^θ`.
pub fn psi_cube_dyadic(q: &crate::grid::Cube, rho: &CriticalRadiusField, theta: f64) -> f64 {
    let spec = rho.spec();
    let (lo, hi) = q.clipped(spec).expect("dyadic cube inside the box");
    let max = crate::grid::box_max(rho.rho(), &lo, &hi);
    penalty(q.side(spec) / max, theta)
}

/// `(1 + t)^θ`, exactly 1 at `θ = 0`.
#[inline]
pub fn penalty(t: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        1.0
    } else {
        (1.0 + t).powf(theta)
    }
}

/// `(1 + t)^{-θ}`; underflows to 0 rather than overflowing for huge θ.
#[inline]
pub fn penalty_inv(t: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        1.0
    } else {
        (-theta * t.ln_1p()).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    #[serde(rename = "C0")]
    pub c0: f64,
    pub l0: f64,
    pub max_violation: f64,
}

impl RegularityEstimate {
    pub fn certified(&self) -> bool {
        self.max_violation <= 0.0
    }
}

pub const L0_CANDIDATES: [f64; 16] = [
    0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0,
];
pub const C0_CANDIDATES: [f64; 14] = [
    1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 16.0,
];

/// Largest log-space violation of
/// `C₀⁻¹(1+|x−y|m(x))^{−l₀} ≤ m(x)/m(y) ≤ C₀(1+|x−y|m(x))^{l₀/(l₀+1)}`
/// over the pairs (flat cell indices).
pub fn regularity_check(rho: &CriticalRadiusField, c0: f64, l0: f64, pairs: &[(usize, usize)]) -> RegularityEstimate {
    let logs = pair_logs(rho, pairs);
    RegularityEstimate {
        c0,
        l0,
        max_violation: violation(&logs, c0, l0),
    }
}

/// Smallest certifying pair over the candidate grid, ordered by `l₀` first
/// and then `C₀`. If nothing certifies, the least-violating pair is returned.
pub fn regularity_fit(rho: &CriticalRadiusField, pairs: &[(usize, usize)]) -> RegularityEstimate {
    let logs = pair_logs(rho, pairs);
    let mut best: Option<RegularityEstimate> = None;
    for &l0 in &L0_CANDIDATES {
        for &c0 in &C0_CANDIDATES {
            let v = violation(&logs, c0, l0);
            let e = RegularityEstimate {
                c0,
                l0,
                max_violation: v,
            };
            if v <= 0.0 {
                return e;
            }
            if best.is_none_or(|b| v < b.max_violation) {
                best = Some(e);
            }
        }
    }
    best.expect("candidate grid is nonempty")
}

/// `(ln m(x)/m(y), ln(1 + |x−y| m(x)))` per pair.
fn pair_logs(rho: &CriticalRadiusField, pairs: &[(usize, usize)]) -> Vec<(f64, f64)> {
    let spec = rho.spec();
    pairs
        .iter()
        .map(|&(a, b)| {
            let (xa, xb) = (spec.point(a), spec.point(b));
            let d = xa.iter().zip(&xb).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            let (ma, mb) = (1.0 / rho.at(a), 1.0 / rho.at(b));
            ((ma / mb).ln(), (d * ma).ln_1p())
        })
        .collect()
}

fn violation(logs: &[(f64, f64)], c0: f64, l0: f64) -> f64 {
    let lc = c0.ln();
    logs.iter()
        .map(|&(lr, ld)| {
            let low = -lc - l0 * ld - lr;
            let high = lr - lc - l0 / (l0 + 1.0) * ld;
            low.max(high)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random cell pairs for the regularity check.
pub fn sample_pairs(spec: &GridSpec, count: usize, seed: u64) -> Vec<(usize, usize)> {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, 0x21);
    (0..count)
        .map(|_| (rng.gen_range(0..spec.len()), rng.gen_range(0..spec.len())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cube;

    fn spec3(n: usize, l: f64) -> GridSpec {
        GridSpec::new(3, n, l).unwrap()
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_potential_radius() {
        let v = Potential::one(spec3(8, 2.0));
        let f = critical_radius_field(&v);
        let exact = (3.0 / (4.0 * std::f64::consts::PI)).sqrt();
        for &r in f.rho().samples() {
            assert!((r - exact).abs() <= RHO_TOLERANCE * exact);
        }
        let v4 = Potential::constant(*v.spec(), 4.0).unwrap();
        let f4 = critical_radius_field(&v4);
        assert!((f4.at(0) - exact / 2.0).abs() <= 2.0 * RHO_TOLERANCE * exact);
    }

    #[test]
    fn custom_matches_closed_form_on_cell_aligned_boxes() {
        let spec = spec3(8, 2.0);
        let v = Potential::one(spec);
        let c = Potential::custom(v.values().clone()).unwrap();
        let h = spec.spacing();
        for (x, s) in [(vec![0.0, 0.0, 0.0], 4.0 * h), (vec![0.1, -0.3, 0.2], 1.3 * h)] {
            assert!((v.cube_integral(&x, s) - c.cube_integral(&x, s)).abs() < 1e-12);
        }
    }

    #[test]
    fn fractional_integral_of_square_norm_converges() {
        let spec = spec3(32, 1.0);
        let v = Potential::square_norm(spec, 1.0).unwrap();
        let c = Potential::custom(v.values().clone()).unwrap();
        let x = [0.1, 0.0, -0.2];
        let (a, b) = (v.cube_integral(&x, 0.77), c.cube_integral(&x, 0.77));
        assert!((a - b).abs() < 1e-2 * a);
    }

    #[test]
    fn rejects_invalid_potentials() {
        let spec = spec3(4, 1.0);
        assert!(Potential::custom(GridFunction::zeros(spec)).is_err());
        assert!(Potential::custom(GridFunction::constant(spec, -1.0)).is_err());
        assert!(Potential::constant(spec, 0.0).is_err());
    }

    #[test]
    fn reverse_holder_of_constant_is_one() {
        let spec = GridSpec::new(2, 16, 1.0).unwrap();
        let v = Potential::one(spec);
        let fam = CubeFamily::centered(&spec, &[1, 3, 5], 1);
        for q in [1.5, 2.0, f64::INFINITY] {
            let r = check_reverse_holder(&v, q, &fam).unwrap();
            assert_eq!(r.constant, 1.0);
        }
        assert!(check_reverse_holder(&v, 1.0, &fam).is_err());
    }

    #[test]
    fn psi_values() {
        let v = Potential::one(spec3(8, 2.0));
        let f = critical_radius_field(&v);
        let rho = f.at(0);
        assert_eq!(psi_ball(&[0.0; 3], 0.7, &f, 0.0), 1.0);
        assert!((psi_ball(&[0.0; 3], rho, &f, 3.0) - 8.0).abs() < 1e-6);
        let q = Cube::new(vec![0, 0, 0], 4);
        let side = q.side(f.spec());
        assert!((psi_cube_dyadic(&q, &f, 2.0) - psi_ball(&[0.0; 3], side, &f, 2.0)).abs() < 1e-12);
        assert_eq!(penalty_inv(1e9, 1e6), 0.0);
    }

    #[test]
    fn regularity_fit_for_constant_potential() {
        let v = Potential::one(GridSpec::new(2, 16, 2.0).unwrap());
        let f = critical_radius_field(&v);
        let pairs = sample_pairs(f.spec(), 50, 1);
        let e = regularity_fit(&f, &pairs);
        assert!(e.certified());
        assert_eq!((e.l0, e.c0), (0.25, 1.1));
        let j = serde_json::to_value(e).unwrap();
        assert!(j.get("C0").is_some() && j.get("max_violation").is_some());
    }
}
