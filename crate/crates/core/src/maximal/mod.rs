//! Penalised maximal operators on grids.
//!
//! * `Cube`: `M_{V,θ}f(x) = sup_{Q∋x} |Q|^{-1}∫_Q|f| / Ψ_θ(Q)` over all cubes
//!   with sides on a ladder (every corner position).
//! * `Centered`: the same over cubes centred at `x` (odd sides).
//! * `Dyadic`: over the dyadic cubes containing `x`, with `ψ_θ`.
//! * `Phi`: uncentred cubes penalised by `(1 + side)^η`, no potential.
//!
//! With `subcell` on, the family also contains the `r → 0` limit inside the
//! cell of `x`, whose penalised average is `|f(x)|`.

mod scan;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub(crate) use scan::{box_mean, corner_scan};

use crate::error::{invalid, Error, Result};
use crate::grid::{
    box_max, vector_norm_pointwise, window_max_padded, Cube, DyadicLattice, DyadicTree, GridFunction,
    GridSpec, PrefixSum, RadiiLadder, VectorGridFunction,
};
use crate::par;
use crate::potential::{penalty_inv, CriticalRadiusField};
use crate::weights::Weight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Cube,
    Dyadic,
    Centered,
    Phi,
}

/// Which ρ value enters `(1 + side/ρ)^θ` for non-dyadic cubes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyForm {
    Center,
    MaxOverCube,
}

#[derive(Clone, Debug)]
pub struct MaximalConfig {
    pub variant: Variant,
    pub exponent: f64,
    pub rho: Option<Arc<CriticalRadiusField>>,
    /// Cube sides in cells (odd for `Centered`); unused by `Dyadic`.
    pub sides: Vec<usize>,
    pub lattice: Option<DyadicLattice>,
    pub penalty: PenaltyForm,
    pub subcell: bool,
    spec: GridSpec,
}

impl MaximalConfig {
    /// `M_{V,θ}` over uncentred ladder cubes.
    pub fn cube(rho: Arc<CriticalRadiusField>, theta: f64) -> Self {
        let spec = *rho.spec();
        Self {
            variant: Variant::Cube,
            exponent: theta,
            sides: RadiiLadder::standard(&spec).cube_sides(&spec),
            rho: Some(rho),
            lattice: None,
            penalty: PenaltyForm::Center,
            subcell: true,
            spec,
        }
    }

    /// Unpenalised uncentred maximal function `M` on the same ladder.
    pub fn hardy_littlewood(spec: GridSpec) -> Self {
        Self {
            variant: Variant::Cube,
            exponent: 0.0,
            sides: RadiiLadder::standard(&spec).cube_sides(&spec),
            rho: None,
            lattice: None,
            penalty: PenaltyForm::Center,
            subcell: true,
            spec,
        }
    }

    /// `M′_{V,η}` over cubes centred at the evaluation point.
    pub fn centered(rho: Arc<CriticalRadiusField>, eta: f64) -> Self {
        let spec = *rho.spec();
        Self {
            variant: Variant::Centered,
            sides: RadiiLadder::standard(&spec).odd_cube_sides(&spec),
            ..Self::cube(rho, eta)
        }
    }

    /// `M^△_{V,θ}` over the deepest dyadic lattice the grid supports.
    pub fn dyadic(rho: Arc<CriticalRadiusField>, theta: f64) -> Self {
        let spec = *rho.spec();
        Self {
            variant: Variant::Dyadic,
            lattice: Some(DyadicLattice::new(spec)),
            sides: vec![],
            ..Self::cube(rho, theta)
        }
    }

    /// `M_{φ,η}` with `φ_η(Q) = (1 + side)^η`.
    pub fn phi(spec: GridSpec, eta: f64) -> Self {
        Self {
            variant: Variant::Phi,
            exponent: eta,
            ..Self::hardy_littlewood(spec)
        }
    }

    pub fn with_exponent(mut self, e: f64) -> Self {
        self.exponent = e;
        self
    }

    pub fn with_sides(mut self, sides: Vec<usize>) -> Self {
        self.sides = sides;
        self
    }

    pub fn with_lattice(mut self, lattice: DyadicLattice) -> Self {
        self.lattice = Some(lattice);
        self
    }

    pub fn with_penalty(mut self, form: PenaltyForm) -> Self {
        self.penalty = form;
        self
    }

    pub fn with_subcell(mut self, on: bool) -> Self {
        self.subcell = on;
        self
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent >= 0.0) || self.exponent.is_nan() {
            return Err(invalid("theta", format!("exponent must be >= 0, got {}", self.exponent)));
        }
        let needs_rho = self.variant != Variant::Phi && self.exponent > 0.0;
        if needs_rho && self.rho.is_none() {
            return Err(invalid("rho", "penalised operator needs a critical radius field"));
        }
        match self.variant {
            Variant::Dyadic => {
                let lat = self.lattice.ok_or_else(|| invalid("lattice", "dyadic variant needs a lattice"))?;
                self.spec.check_same(lat.spec())?;
            }
            _ => {
                if self.sides.is_empty() || self.sides.contains(&0) {
                    return Err(invalid("sides", "cube family must be nonempty with positive sides"));
                }
                if self.variant == Variant::Centered && self.sides.iter().any(|k| k % 2 == 0) {
                    return Err(invalid("sides", "centred cubes need odd sides"));
                }
            }
        }
        Ok(())
    }

    pub fn descriptor(&self) -> String {
        let fam = match self.variant {
            Variant::Dyadic => format!("depth={}", self.lattice.map_or(0, |l| l.depth())),
            _ => format!("sides={:?}", self.sides),
        };
        format!(
            "{:?}(exponent={}, {:?}, {fam}, subcell={})",
            self.variant, self.exponent, self.penalty, self.subcell
        )
    }

    fn rho_samples(&self) -> Option<&[f64]> {
        self.rho.as_ref().map(|r| r.rho().samples())
    }

    /// `1/Ψ` for an explicit cube of the configured kind.
    pub fn penalty_inv_for(&self, cube: &Cube) -> f64 {
        let spec = &self.spec;
        let side = cube.side(spec);
        if self.exponent == 0.0 {
            return 1.0;
        }
        let rho = || self.rho.as_ref().expect("validated");
        match (self.variant, self.penalty) {
            (Variant::Phi, _) => penalty_inv(side, self.exponent),
            (Variant::Dyadic, _) | (_, PenaltyForm::MaxOverCube) => {
                let (lo, hi) = cube.clipped(spec).expect("nonempty cube");
                penalty_inv(side / box_max(rho().rho(), &lo, &hi), self.exponent)
            }
            (_, PenaltyForm::Center) => {
                let c = spec.ravel(&cube.center_cell(spec));
                penalty_inv(side / rho().at(c), self.exponent)
            }
        }
    }
}

/// Pointwise sup of penalised averages of `|f|` over the configured family.
pub fn maximal(f: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    cfg.validate()?;
    f.spec().check_same(cfg.spec())?;
    let a = f.abs();
    let out = match cfg.variant {
        Variant::Cube | Variant::Phi => uncentered(&a, cfg),
        Variant::Centered => centered(&a, cfg),
        Variant::Dyadic => dyadic(&a, cfg),
    };
    Ok(GridFunction::from_raw(*f.spec(), out))
}

fn start(a: &GridFunction, cfg: &MaximalConfig) -> Vec<f64> {
    if cfg.subcell {
        a.samples().to_vec()
    } else {
        vec![0.0; a.spec().len()]
    }
}

fn merge_max(acc: &mut [f64], v: &[f64]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a = a.max(b);
    }
}

fn uncentered(a: &GridFunction, cfg: &MaximalConfig) -> Vec<f64> {
    let spec = *a.spec();
    let h = spec.spacing();
    let n = spec.points_per_axis as isize;
    let table = PrefixSum::new(&spec, a.samples());
    let theta = cfg.exponent;
    let mut out = start(a, cfg);
    for &k in &cfg.sides {
        let side = k as f64 * h;
        let rho_max = match (cfg.variant, cfg.penalty, cfg.rho_samples()) {
            (Variant::Cube, PenaltyForm::MaxOverCube, Some(r)) if theta > 0.0 => {
                Some(window_max_padded(r, spec.points_per_axis, spec.dim, k, f64::NEG_INFINITY))
            }
            _ => None,
        };
        let phi_inv = penalty_inv(side, theta);
        let vals = corner_scan(&spec, k, |e, corner, lo, hi| {
            let mean = box_mean(&table, lo, hi);
            if mean == 0.0 || theta == 0.0 {
                return mean;
            }
            let inv = match cfg.variant {
                Variant::Phi => phi_inv,
                _ => match &rho_max {
                    Some(m) => penalty_inv(side / m[e], theta),
                    None => {
                        let r = cfg.rho_samples().unwrap();
                        let c = corner
                            .iter()
                            .fold(0usize, |acc, &l| acc * spec.points_per_axis + (l + k as isize / 2).clamp(0, n - 1) as usize);
                        penalty_inv(side / r[c], theta)
                    }
                },
            };
            mean * inv
        });
        merge_max(&mut out, &vals);
    }
    out
}

fn centered(a: &GridFunction, cfg: &MaximalConfig) -> Vec<f64> {
    let spec = *a.spec();
    let h = spec.spacing();
    let np = spec.points_per_axis;
    let table = PrefixSum::new(&spec, a.samples());
    let theta = cfg.exponent;
    let mut out = start(a, cfg);
    for &k in &cfg.sides {
        let half = (k - 1) / 2;
        let side = k as f64 * h;
        let rho_max = match (cfg.penalty, cfg.rho_samples()) {
            (PenaltyForm::MaxOverCube, Some(r)) if theta > 0.0 => {
                Some(window_max_padded(r, np, spec.dim, k, f64::NEG_INFINITY))
            }
            _ => None,
        };
        let m = np + k - 1;
        let vals = par::map_range(spec.len(), |i| {
            let mut ix = [0usize; crate::grid::MAX_DIM];
            let ix = &mut ix[..spec.dim];
            spec.unravel(i, ix);
            let lo: Vec<usize> = ix.iter().map(|&x| x.saturating_sub(half)).collect();
            let hi: Vec<usize> = ix.iter().map(|&x| (x + half + 1).min(np)).collect();
            let mean = box_mean(&table, &lo, &hi);
            if mean == 0.0 || theta == 0.0 {
                return mean;
            }
            let r = match &rho_max {
                // corner x - half sits at extended index x - half + k - 1 = x + half
                Some(mx) => mx[ix.iter().fold(0, |acc, &x| acc * m + x + half)],
                None => cfg.rho_samples().unwrap()[i],
            };
            mean * penalty_inv(side / r, theta)
        });
        merge_max(&mut out, &vals);
    }
    out
}

/// Per-level `ψ`-penalised dyadic averages `(ψ_θ(Q)|Q|)^{-1}∫_Q|f|`.
pub(crate) fn dyadic_levels(a: &[f64], lattice: DyadicLattice, theta: f64, rho: Option<&[f64]>) -> Vec<Vec<f64>> {
    let tree = DyadicTree::build(lattice, a, if theta > 0.0 { rho } else { None });
    (0..=lattice.depth())
        .map(|j| {
            let side = lattice.side(j);
            (0..lattice.count(j))
                .map(|q| {
                    let mean = tree.mean(j, q);
                    match tree.max(j, q) {
                        Some(r) if mean > 0.0 => mean * penalty_inv(side / r, theta),
                        _ => mean,
                    }
                })
                .collect()
        })
        .collect()
}

fn dyadic(a: &GridFunction, cfg: &MaximalConfig) -> Vec<f64> {
    let spec = *a.spec();
    let lattice = cfg.lattice.expect("validated");
    let levels = dyadic_levels(a.samples(), lattice, cfg.exponent, cfg.rho_samples());
    let base = start(a, cfg);
    par::map_range(spec.len(), |i| {
        let mut ix = vec![0; spec.dim];
        spec.unravel(i, &mut ix);
        levels
            .iter()
            .enumerate()
            .fold(base[i], |m, (j, v)| m.max(v[lattice.containing(j, &ix)]))
    })
}

/// `M(|f|^δ)^{1/δ}`.
pub fn maximal_power(f: &GridFunction, delta: f64, cfg: &MaximalConfig) -> Result<GridFunction> {
    check_delta(delta)?;
    let g = f.map(|v| v.abs().powf(delta));
    Ok(maximal(&g, cfg)?.map(|v| v.powf(1.0 / delta)))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

/// `M_ω f(x) = sup_{B∋x} ω(5B)^{-1} ∫_B |f| ω`, `5B` clipped to the box.
/// The `r → 0` limit contributes `5^{-n}|f(x)|` when `subcell` is set.
pub fn maximal_weighted(f: &GridFunction, w: &Weight, sides: &[usize], subcell: bool) -> Result<GridFunction> {
    let spec = *f.spec();
    spec.check_same(w.spec())?;
    if sides.is_empty() || sides.contains(&0) {
        return Err(invalid("sides", "cube family must be nonempty with positive sides"));
    }
    let fw: Vec<f64> = f
        .samples()
        .iter()
        .zip(w.values().samples())
        .map(|(a, b)| a.abs() * b)
        .collect();
    let num = PrefixSum::new(&spec, &fw);
    let den = PrefixSum::new(&spec, w.values().samples());
    let shrink = 5f64.powi(-(spec.dim as i32));
    let mut out = if subcell {
        f.samples().iter().map(|v| v.abs() * shrink).collect()
    } else {
        vec![0.0; spec.len()]
    };
    for &k in sides {
        let vals = corner_scan(&spec, k, |_, corner, lo, hi| {
            let s = num.box_sum(lo, hi);
            if s == 0.0 {
                return 0.0;
            }
            let big = Cube::new(corner.to_vec(), k).dilate(5);
            let (blo, bhi) = big.clipped(&spec).expect("dilation contains the cube");
            s / den.box_sum(&blo, &bhi)
        });
        merge_max(&mut out, &vals);
    }
    Ok(GridFunction::from_raw(spec, out))
}

/// Sides used by the sharp maximal function: the standard ladder plus the
/// unit side, split into `side < 1` and `side ≥ 1`.
pub fn sharp_sides(spec: &GridSpec) -> (Vec<usize>, Vec<usize>) {
    let h = spec.spacing();
    let mut sides = RadiiLadder::standard(spec).cube_sides(spec);
    sides.push((1.0 / h - 1e-9).ceil() as usize);
    sides.sort_unstable();
    sides.dedup();
    sides.into_iter().partition(|&k| (k as f64) * h < 1.0 - 1e-12)
}

/// `M^♯_{φ,η}f = sup_{Q∋x, side<1} |Q|^{-1}∫_Q|f − f_Q| + sup_{Q∋x, side≥1} φ_η(Q)^{-1}|Q|^{-1}∫_Q|f|`;
/// with `δ` the composition `M^♯_{φ,η}(|f|^δ)^{1/δ}`.
pub fn sharp_maximal(f: &GridFunction, eta: f64, delta: Option<f64>) -> Result<GridFunction> {
    let spec = *f.spec();
    if spec.half_width <= 1.0 {
        return Err(Error::NoLargeScale(spec.half_width));
    }
    if !(eta >= 0.0) {
        return Err(invalid("eta", format!("must be >= 0, got {eta}")));
    }
    let g = match delta {
        Some(d) => {
            check_delta(d)?;
            f.map(|v| v.abs().powf(d))
        }
        None => f.clone(),
    };
    let (small, large) = sharp_sides(&spec);
    let table = PrefixSum::new(&spec, g.samples());
    let mut osc = vec![0.0; spec.len()];
    for &k in &small {
        let vals = corner_scan(&spec, k, |_, _, lo, hi| scan::box_oscillation(&g, &table, lo, hi));
        merge_max(&mut osc, &vals);
    }
    let abs = g.abs();
    let large_sup = uncentered(
        &abs,
        &MaximalConfig::phi(spec, eta).with_sides(large).with_subcell(false),
    );
    let out = osc
        .iter()
        .zip(&large_sup)
        .map(|(a, b)| {
            let s = a + b;
            match delta {
                Some(d) => s.powf(1.0 / d),
                None => s,
            }
        })
        .collect();
    Ok(GridFunction::from_raw(spec, out))
}

/// `|M f|_r` applied componentwise.
pub fn maximal_vector(f: &VectorGridFunction, cfg: &MaximalConfig, r: f64) -> Result<GridFunction> {
    if !(r > 1.0) {
        return Err(invalid("r", format!("vector exponent must be > 1, got {r}")));
    }
    let comps = f
        .components()
        .iter()
        .map(|c| maximal(c, cfg))
        .collect::<Result<Vec<_>>>()?;
    vector_norm_pointwise(&VectorGridFunction::new(comps)?, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{critical_radius_field, Potential};

    fn setup(n: usize, l: f64) -> (GridSpec, Arc<CriticalRadiusField>) {
        let spec = GridSpec::new(2, n, l).unwrap();
        let rho = Arc::new(critical_radius_field(&Potential::one(spec)));
        (spec, rho)
    }

    #[test]
    fn constant_input_is_fixed_with_subcell() {
        let (spec, rho) = setup(16, 2.0);
        let f = GridFunction::constant(spec, 3.0);
        for cfg in [
            MaximalConfig::cube(rho.clone(), 2.0),
            MaximalConfig::centered(rho.clone(), 2.0),
            MaximalConfig::dyadic(rho.clone(), 2.0),
            MaximalConfig::phi(spec, 1.0),
        ] {
            let m = maximal(&f, &cfg).unwrap();
            assert!(m.samples().iter().all(|&v| (v - 3.0).abs() < 1e-12), "{}", cfg.descriptor());
        }
    }

    #[test]
    fn without_subcell_constant_is_damped_by_smallest_cube() {
        let (spec, rho) = setup(16, 2.0);
        let f = GridFunction::constant(spec, 1.0);
        let cfg = MaximalConfig::cube(rho.clone(), 1.0).with_subcell(false);
        let m = maximal(&f, &cfg).unwrap();
        let bound = 1.0 / (1.0 + spec.spacing() / rho.min());
        for &v in m.samples() {
            assert!(v <= 1.0 && v >= bound - 1e-12);
        }
    }

    #[test]
    fn power_with_unit_delta_is_identity() {
        let (spec, rho) = setup(16, 2.0);
        let f = GridFunction::from_fn(spec, |x| (x[0] * 2.0).sin() + x[1]);
        let cfg = MaximalConfig::cube(rho, 1.0);
        assert_eq!(maximal_power(&f, 1.0, &cfg).unwrap(), maximal(&f, &cfg).unwrap());
        assert!(maximal_power(&f, 0.0, &cfg).is_err());
        assert!(maximal_power(&f, 1.5, &cfg).is_err());
    }

    #[test]
    fn sharp_of_constant() {
        let spec = GridSpec::new(2, 32, 2.0).unwrap();
        let f = GridFunction::constant(spec, 2.0);
        let m = sharp_maximal(&f, 1.5, None).unwrap();
        for &v in m.samples() {
            assert!((v - 2.0 / 2f64.powf(1.5)).abs() < 1e-12);
        }
        let z = sharp_maximal(&GridFunction::zeros(spec), 1.0, None).unwrap();
        assert_eq!(z.max(), 0.0);
        let small = GridSpec::new(2, 16, 1.0).unwrap();
        assert!(matches!(
            sharp_maximal(&GridFunction::zeros(small), 1.0, None),
            Err(Error::NoLargeScale(_))
        ));
    }

    #[test]
    fn weighted_with_unit_weight_shrinks_by_five_to_the_n() {
        let (spec, _) = setup(32, 2.0);
        let f = GridFunction::from_fn(spec, |x| (-(x[0] * x[0] + x[1] * x[1]) * 4.0).exp());
        let w = Weight::new(GridFunction::constant(spec, 1.0)).unwrap();
        let sides = [1usize, 2, 3];
        let mw = maximal_weighted(&f, &w, &sides, true).unwrap();
        let m = maximal(&f, &MaximalConfig::hardy_littlewood(spec).with_sides(sides.to_vec())).unwrap();
        let mut ix = [0usize; 2];
        for i in 0..spec.len() {
            spec.unravel(i, &mut ix);
            if ix.iter().all(|&c| (10..22).contains(&c)) {
                assert!((mw.get(i) - m.get(i) / 25.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vector_of_equal_components() {
        let (spec, rho) = setup(16, 2.0);
        let f = GridFunction::from_fn(spec, |x| x[0] * x[1]);
        let cfg = MaximalConfig::cube(rho, 1.0);
        let v = VectorGridFunction::new(vec![f.clone(); 3]).unwrap();
        let out = maximal_vector(&v, &cfg, 2.0).unwrap();
        let m = maximal(&f, &cfg).unwrap();
        for (a, b) in out.samples().iter().zip(m.samples()) {
            assert!((a - 3f64.sqrt() * b).abs() < 1e-12 * b.max(1.0));
        }
    }
}
