//! Stopping-time Calderón–Zygmund decomposition over the dyadic lattice with
//! `ψ_θ(Q) = (1 + side/max_Q ρ)^θ`-penalised averages, the good/bad split,
//! the averaged sequence `f̄`, and the covering check for the centred
//! maximal function.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{
    vector_norm_pointwise, Cube, DyadicLattice, GridFunction, GridSpec, VectorGridFunction,
};
use crate::maximal::{dyadic_levels, maximal, MaximalConfig};
use crate::potential::CriticalRadiusField;
use crate::report::InequalityReport;
use crate::weights::ExponentChain;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedCube {
    pub level: usize,
    pub index: usize,
    pub cube: Cube,
    /// `(ψ_θ(Q)|Q|)^{-1} ∫_Q |f|_r`.
    pub average: f64,
}

#[derive(Clone, Debug)]
pub struct CZDecomposition {
    pub lambda: f64,
    pub theta: f64,
    pub r: f64,
    pub lattice: DyadicLattice,
    pub cubes: Vec<SelectedCube>,
    /// `{M^△_{V,θ}|f|_r > λ}` over the lattice, per cell.
    pub omega_lambda: Vec<bool>,
    /// Cells covered by the selected cubes.
    pub covered: Vec<bool>,
    pub magnitude: GridFunction,
    pub good: VectorGridFunction,
    pub bad: VectorGridFunction,
    pub fbar: VectorGridFunction,
    /// ψ-penalised averages of `|f|_r` per level and cube.
    pub levels: Vec<Vec<f64>>,
}

impl CZDecomposition {
    pub fn omega_measure(&self) -> f64 {
        let spec = self.lattice.spec();
        self.omega_lambda.iter().filter(|&&b| b).count() as f64 * spec.cell_volume()
    }
}

/// Top-down stopping time: a dyadic cube is selected when its ψ-average of
/// `|f|_r` exceeds `λ` strictly; descendants of selected cubes are skipped.
pub fn decompose(
    f: &VectorGridFunction,
    r: f64,
    lambda: f64,
    theta: f64,
    rho: &CriticalRadiusField,
    lattice: DyadicLattice,
) -> Result<CZDecomposition> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    if !(theta >= 0.0) {
        return Err(invalid("theta", format!("must be >= 0, got {theta}")));
    }
    let spec = *f.spec();
    spec.check_same(rho.spec())?;
    spec.check_same(lattice.spec())?;
    let mag = vector_norm_pointwise(f, r)?;
    let levels = dyadic_levels(mag.samples(), lattice, theta, Some(rho.rho().samples()));

    let mut cubes = vec![];
    let mut active = vec![0usize];
    for (j, avgs) in levels.iter().enumerate() {
        let mut next = vec![];
        for &q in &active {
            if avgs[q] > lambda {
                cubes.push(SelectedCube {
                    level: j,
                    index: q,
                    cube: lattice.cube(j, q),
                    average: avgs[q],
                });
            } else if j < lattice.depth() {
                next.extend(lattice.children(j, q));
            }
        }
        active = next;
    }

    let mut covered = vec![false; spec.len()];
    let mut owner = vec![usize::MAX; spec.len()];
    let mut ix = vec![0; spec.dim];
    for (c, sel) in cubes.iter().enumerate() {
        let (lo, hi) = sel.cube.clipped(&spec).expect("lattice cube");
        for_each_cell(&spec, &lo, &hi, |flat| {
            covered[flat] = true;
            owner[flat] = c;
        });
    }
    let omega_lambda = (0..spec.len())
        .map(|i| {
            spec.unravel(i, &mut ix);
            (0..=lattice.depth()).any(|j| levels[j][lattice.containing(j, &ix)] > lambda)
        })
        .collect();

    let mut good = vec![];
    let mut bad = vec![];
    let mut fbar = vec![];
    let tree = crate::grid::DyadicTree::build(lattice, mag.samples(), None);
    // ψ^{-1}(Q) as the ratio of penalised to plain average
    let penalty: Vec<f64> = cubes
        .iter()
        .map(|s| {
            let mean = tree.mean(s.level, s.index);
            if mean > 0.0 {
                s.average / mean
            } else {
                1.0
            }
        })
        .collect();
    for comp in f.components() {
        let g: Vec<f64> = comp
            .samples()
            .iter()
            .zip(&covered)
            .map(|(&v, &c)| if c { 0.0 } else { v })
            .collect();
        let b: Vec<f64> = comp
            .samples()
            .iter()
            .zip(&covered)
            .map(|(&v, &c)| if c { v } else { 0.0 })
            .collect();
        let mut avg = vec![0.0; spec.len()];
        for (c, sel) in cubes.iter().enumerate() {
            let (lo, hi) = sel.cube.clipped(&spec).expect("lattice cube");
            let mut s = 0.0;
            let mut count = 0usize;
            for_each_cell(&spec, &lo, &hi, |flat| {
                s += comp.get(flat).abs();
                count += 1;
            });
            let v = s / count as f64 * penalty[c];
            for_each_cell(&spec, &lo, &hi, |flat| avg[flat] = v);
        }
        good.push(GridFunction::from_raw(spec, g));
        bad.push(GridFunction::from_raw(spec, b));
        fbar.push(GridFunction::from_raw(spec, avg));
    }
    Ok(CZDecomposition {
        lambda,
        theta,
        r,
        lattice,
        cubes,
        omega_lambda,
        covered,
        magnitude: mag,
        good: VectorGridFunction::new(good)?,
        bad: VectorGridFunction::new(bad)?,
        fbar: VectorGridFunction::new(fbar)?,
        levels,
    })
}

fn for_each_cell(spec: &GridSpec, lo: &[usize], hi: &[usize], mut f: impl FnMut(usize)) {
    let dim = spec.dim;
    let mut ix = lo.to_vec();
    loop {
        f(spec.ravel(&ix));
        let mut d = dim;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            ix[d] += 1;
            if ix[d] < hi[d] {
                break;
            }
            ix[d] = lo[d];
        }
    }
}

/// Checks the decomposition against its defining properties:
/// (i) `λ < avg_ψ(Q_j)`, (ii) `avg_ψ(Q_j) ≤ 2^n (4n)^θ λ`, (iii) in dyadic
/// form (every dyadic cube containing an uncovered cell has `avg_ψ ≤ λ`),
/// (iv) `|Ω_λ| ≤ λ^{-1} ∫|f|_r`, plus disjointness, maximality,
/// `f′ + f″ = f`, the bound on `|f̄|_r`, and `∪Q_j ⊆ Ω_λ`.
///
/// The ratio is the (iv) slack `|Ω_λ| λ / ‖f‖₁`.
pub fn verify_czd(d: &CZDecomposition, f: &VectorGridFunction) -> Result<InequalityReport> {
    let spec = *f.spec();
    spec.check_same(d.lattice.spec())?;
    if f.len() != d.good.len() {
        return Err(invalid("f", "component count differs from the decomposition"));
    }
    let mag = vector_norm_pointwise(f, d.r)?;
    if mag != d.magnitude {
        return Err(invalid("f", "function differs from the decomposed one"));
    }
    let lat = d.lattice;
    let n = spec.dim as f64;
    let upper = 2f64.powi(spec.dim as i32) * (4.0 * n).powf(d.theta) * d.lambda;

    let v_i = d.cubes.iter().filter(|c| !(c.average > d.lambda)).count();
    let v_ii = d.cubes.iter().filter(|c| c.average > upper).count();
    let maximality = d
        .cubes
        .iter()
        .filter(|c| {
            let mut q = c.index;
            (0..c.level).rev().any(|j| {
                q = lat.parent(j + 1, q);
                d.levels[j][q] > d.lambda
            })
        })
        .count();

    let mut hits = vec![0u32; spec.len()];
    for c in &d.cubes {
        let (lo, hi) = c.cube.clipped(&spec).expect("lattice cube");
        for_each_cell(&spec, &lo, &hi, |i| hits[i] += 1);
    }
    let overlaps = hits.iter().filter(|&&h| h > 1).count();

    let mut ix = vec![0; spec.dim];
    let mut v_iii = 0;
    let mut pointwise_exceed = 0;
    for i in 0..spec.len() {
        if d.covered[i] {
            continue;
        }
        spec.unravel(i, &mut ix);
        if (0..=lat.depth()).any(|j| d.levels[j][lat.containing(j, &ix)] > d.lambda) {
            v_iii += 1;
        }
        if mag.get(i) > d.lambda {
            pointwise_exceed += 1;
        }
    }
    let outside_omega = (0..spec.len()).filter(|&i| d.covered[i] && !d.omega_lambda[i]).count();

    let mut split = 0;
    for (k, c) in f.components().iter().enumerate() {
        let (g, b) = (&d.good.components()[k], &d.bad.components()[k]);
        split += (0..spec.len())
            .filter(|&i| g.get(i) + b.get(i) != c.get(i))
            .count();
    }
    let fbar = vector_norm_pointwise(&d.fbar, d.r)?;
    let fbar_excess = fbar.samples().iter().filter(|&&v| v > upper * (1.0 + 1e-12)).count();

    let l1 = mag.samples().iter().sum::<f64>() * spec.cell_volume();
    let slack = crate::report::ratio(d.omega_measure() * d.lambda, l1);
    let violations = v_i + v_ii + v_iii + maximality + overlaps + outside_omega + split + fbar_excess;
    Ok(InequalityReport::new("czd", d.omega_measure() * d.lambda, l1, 1.0)
        .worst(format!("lambda={}, cubes={}", d.lambda, d.cubes.len()))
        .detail("selected", d.cubes.len() as f64)
        .detail("violations_i", v_i as f64)
        .detail("violations_ii", v_ii as f64)
        .detail("violations_iii_dyadic", v_iii as f64)
        .detail("pointwise_exceed_iii", pointwise_exceed as f64)
        .detail("maximality_violations", maximality as f64)
        .detail("overlapping_cells", overlaps as f64)
        .detail("covered_outside_omega", outside_omega as f64)
        .detail("split_mismatch", split as f64)
        .detail("fbar_excess", fbar_excess as f64)
        .detail("iv_slack", slack)
        .detail("ii_bound", upper)
        .require(violations == 0))
}

/// `c₀ = C₀² 4^{l₀+1+n} (4n)^{η̄}`, as a natural logarithm.
pub fn covering_log_c0(c0: f64, l0: f64, n: usize, eta_bar: f64) -> f64 {
    let nf = n as f64;
    2.0 * c0.ln() + (l0 + 1.0 + nf) * 4f64.ln() + eta_bar * (4.0 * nf).ln()
}

/// Containment `{M′_{V,η₃}|f| > c₀λ} ⊆ ∪_j 2Q_j` where `Q_j` come from the
/// decomposition at exponent `η₂`. The ratio is the violating cell count.
pub fn covering_check(
    f: &GridFunction,
    lambda: f64,
    chain: &ExponentChain,
    rho: &Arc<CriticalRadiusField>,
    c0: f64,
    l0: f64,
) -> Result<InequalityReport> {
    let spec = *f.spec();
    let lattice = DyadicLattice::new(spec);
    let d = decompose(&f.clone().into(), 1.0, lambda, chain.eta2, rho, lattice)?;
    let mut right = vec![false; spec.len()];
    for c in &d.cubes {
        if let Some((lo, hi)) = c.cube.dilate(2).clipped(&spec) {
            for_each_cell(&spec, &lo, &hi, |i| right[i] = true);
        }
    }
    let m = maximal(f, &MaximalConfig::centered(rho.clone(), chain.eta3))?;
    let log_c0 = covering_log_c0(c0, l0, spec.dim, chain.eta_bar);
    let threshold = log_c0 + lambda.ln();
    let left: Vec<bool> = m.samples().iter().map(|&v| v > 0.0 && v.ln() > threshold).collect();
    let left_size = left.iter().filter(|&&b| b).count();
    let violations = left.iter().zip(&right).filter(|(l, r)| **l && !**r).count();
    Ok(InequalityReport::from_ratio("covering", violations as f64, 0.0)
        .worst(format!("lambda={lambda}"))
        .detail("left_set_cells", left_size as f64)
        .detail("right_set_cells", right.iter().filter(|&&b| b).count() as f64)
        .detail("log10_c0", log_c0 / std::f64::consts::LN_10)
        .detail("selected", d.cubes.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{critical_radius_field, Potential};

    fn setup() -> (GridSpec, Arc<CriticalRadiusField>) {
        let spec = GridSpec::new(2, 16, 2.0).unwrap();
        (spec, Arc::new(critical_radius_field(&Potential::one(spec))))
    }

    #[test]
    fn zero_function_has_no_cubes() {
        let (spec, rho) = setup();
        let f: VectorGridFunction = GridFunction::zeros(spec).into();
        let d = decompose(&f, 2.0, 1.0, 1.0, &rho, DyadicLattice::new(spec)).unwrap();
        assert!(d.cubes.is_empty());
        assert!(d.omega_lambda.iter().all(|b| !b));
        let r = verify_czd(&d, &f).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn indicator_of_level_two_cube() {
        let (spec, rho) = setup();
        let lat = DyadicLattice::new(spec);
        let q = lat.cube(2, 5);
        let f: VectorGridFunction = GridFunction::indicator(spec, &q).into();
        let d0 = decompose(&f, 2.0, 1e9, 1.0, &rho, lat).unwrap();
        let target = d0.levels[2][5];
        let d = decompose(&f, 2.0, target / 2.0, 1.0, &rho, lat).unwrap();
        assert!(!d.cubes.is_empty());
        for c in &d.cubes {
            assert!(c.cube == q || (c.level < 2 && {
                let mut k = 5;
                for j in (c.level..2).rev() {
                    k = lat.parent(j + 1, k);
                }
                k == c.index
            }));
        }
        let r = verify_czd(&d, &f).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn covering_with_zero_function() {
        let (spec, rho) = setup();
        let chain = ExponentChain::from_eta_bar(2.0, 1.0);
        let r = covering_check(&GridFunction::zeros(spec), 1.0, &chain, &rho, 2.0, 1.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.details["left_set_cells"], 0.0);
    }
}
