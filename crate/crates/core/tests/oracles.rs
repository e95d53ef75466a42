//! Library results against direct brute-force evaluation on small grids.

use std::sync::Arc;

use rand::Rng;
use swl::czd::{decompose, verify_czd};
use swl::grid::{gfd, Cube, CubeFamily, DyadicLattice};
use swl::maximal::{maximal, maximal_weighted, MaximalConfig};
use swl::potential::{critical_radius_field, penalty_inv};
use swl::rng::{stream, uniform_cells};
use swl::weights::{ap_products, dual_weight};
use swl::{GridFunction, GridSpec, Potential, VectorGridFunction, Weight};

fn cells_of(spec: &GridSpec, lo: &[usize], hi: &[usize]) -> Vec<usize> {
    (0..spec.len())
        .filter(|&i| {
            let mut ix = vec![0; spec.dim];
            spec.unravel(i, &mut ix);
            ix.iter().zip(lo.iter().zip(hi)).all(|(&x, (&a, &b))| x >= a && x < b)
        })
        .collect()
}

fn clip(spec: &GridSpec, corner: &[isize], k: usize) -> (Vec<usize>, Vec<usize>) {
    let n = spec.points_per_axis as isize;
    let lo = corner.iter().map(|&c| c.max(0) as usize).collect();
    let hi = corner.iter().map(|&c| (c + k as isize).min(n) as usize).collect();
    (lo, hi)
}

fn corners(dim: usize, k: usize, n: usize) -> Vec<Vec<isize>> {
    let range: Vec<isize> = (-(k as isize - 1)..n as isize).collect();
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|c| {
                range.iter().map(move |&r| {
                    let mut v = c.clone();
                    v.push(r);
                    v
                })
            })
            .collect();
    }
    out
}

/// Direct sup over every ladder cube containing each cell, centre-ρ penalty.
fn brute_cube_maximal(f: &GridFunction, cfg: &MaximalConfig) -> Vec<f64> {
    let spec = *f.spec();
    let h = spec.spacing();
    let np = spec.points_per_axis as isize;
    let mut out: Vec<f64> = f.samples().iter().map(|v| v.abs()).collect();
    for &k in &cfg.sides {
        for corner in corners(spec.dim, k, spec.points_per_axis) {
            let (lo, hi) = clip(&spec, &corner, k);
            let cells = cells_of(&spec, &lo, &hi);
            let mean = cells.iter().map(|&i| f.get(i).abs()).sum::<f64>() / cells.len() as f64;
            let inv = match &cfg.rho {
                Some(rho) if cfg.exponent > 0.0 => {
                    let c: Vec<usize> = corner.iter().map(|&l| (l + k as isize / 2).clamp(0, np - 1) as usize).collect();
                    penalty_inv(k as f64 * h / rho.at(spec.ravel(&c)), cfg.exponent)
                }
                _ => 1.0,
            };
            for &i in &cells {
                out[i] = out[i].max(mean * inv);
            }
        }
    }
    out
}

fn random_input(seed: u64, spec: GridSpec) -> GridFunction {
    let mut rng = stream(seed, 1);
    let u = uniform_cells(&mut rng, spec, -1.0, 1.0);
    let spike = rng.gen_range(0..spec.len());
    let mut s = u.into_samples();
    s[spike] = 25.0;
    GridFunction::new(spec, s).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> f64 {
    let worst = a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(1e-300)).fold(0.0, f64::max);
    assert!(worst <= tol, "relative deviation {worst:e}");
    worst
}

#[test]
fn penalised_cube_maximal_matches_direct_sup() {
    for dim in [1, 2] {
        let spec = GridSpec::new(dim, 12, 2.0).unwrap();
        let rho = Arc::new(critical_radius_field(&Potential::square_norm(spec, 1.0).unwrap()));
        let f = random_input(dim as u64, spec);
        for theta in [0.0, 1.0, 3.5] {
            let cfg = MaximalConfig::cube(rho.clone(), theta);
            let got = maximal(&f, &cfg).unwrap();
            close(got.samples(), &brute_cube_maximal(&f, &cfg), 1e-12);
        }
    }
}

#[test]
fn single_spike_hardy_littlewood() {
    // M of a unit spike at cell c is 1/|Q| for the smallest clipped ladder cube
    // holding both x and c; the clipped count factorises over axes
    let spec = GridSpec::new(2, 16, 2.0).unwrap();
    let c = [5usize, 9];
    let mut s = vec![0.0; spec.len()];
    s[spec.ravel(&c)] = 1.0;
    let f = GridFunction::new(spec, s).unwrap();
    let cfg = MaximalConfig::hardy_littlewood(spec);
    let got = maximal(&f, &cfg).unwrap();
    let mut ix = [0; 2];
    for i in 0..spec.len() {
        spec.unravel(i, &mut ix);
        let axis = |a: usize, b: usize, k: usize| -> Option<usize> {
            let (lo, hi) = (a.min(b) as isize, a.max(b) as isize);
            (hi - k as isize + 1..=lo)
                .map(|l| ((l + k as isize).min(16) - l.max(0)) as usize)
                .min()
        };
        let mut expect = if ix == c { 1.0 } else { 0.0 };
        for &k in &cfg.sides {
            if let (Some(a), Some(b)) = (axis(ix[0], c[0], k), axis(ix[1], c[1], k)) {
                expect = f64::max(expect, 1.0 / (a * b) as f64);
            }
        }
        assert!((got.get(i) - expect).abs() < 1e-14, "cell {ix:?}: {} vs {expect}", got.get(i));
    }
}

#[test]
fn dyadic_maximal_matches_nested_cubes() {
    let spec = GridSpec::new(2, 16, 2.0).unwrap();
    let rho = Arc::new(critical_radius_field(&Potential::square_norm(spec, 2.0).unwrap()));
    let f = random_input(3, spec);
    let theta = 2.0;
    let cfg = MaximalConfig::dyadic(rho.clone(), theta);
    let got = maximal(&f, &cfg).unwrap();
    let mut want: Vec<f64> = f.samples().iter().map(|v| v.abs()).collect();
    for j in 0..=4 {
        let b = 16 >> j;
        for qx in 0..(1 << j) {
            for qy in 0..(1 << j) {
                let cells = cells_of(&spec, &[qx * b, qy * b], &[(qx + 1) * b, (qy + 1) * b]);
                let mean = cells.iter().map(|&i| f.get(i).abs()).sum::<f64>() / cells.len() as f64;
                let rmax = cells.iter().map(|&i| rho.at(i)).fold(0.0, f64::max);
                let v = mean * penalty_inv(b as f64 * spec.spacing() / rmax, theta);
                for &i in &cells {
                    want[i] = want[i].max(v);
                }
            }
        }
    }
    close(got.samples(), &want, 1e-12);
}

#[test]
fn weighted_maximal_with_unit_weight() {
    let spec = GridSpec::new(2, 12, 1.0).unwrap();
    let f = random_input(4, spec);
    let sides = vec![1, 3, 4];
    let got = maximal_weighted(&f, &Weight::constant(spec, 1.0).unwrap(), &sides, true).unwrap();
    let mut want: Vec<f64> = f.samples().iter().map(|v| v.abs() / 25.0).collect();
    for &k in &sides {
        for corner in corners(2, k, 12) {
            let (lo, hi) = clip(&spec, &corner, k);
            let cells = cells_of(&spec, &lo, &hi);
            let s: f64 = cells.iter().map(|&i| f.get(i).abs()).sum();
            let big: Vec<isize> = corner.iter().map(|&c| c - 2 * k as isize).collect();
            let (blo, bhi) = clip(&spec, &big, 5 * k);
            let den = cells_of(&spec, &blo, &bhi).len() as f64;
            for &i in &cells {
                want[i] = want[i].max(s / den);
            }
        }
    }
    close(got.samples(), &want, 1e-12);
    // interior points of a constant function see exactly 5^{-n}
    let one = maximal_weighted(&GridFunction::constant(spec, 1.0), &Weight::constant(spec, 1.0).unwrap(), &[1, 2], true).unwrap();
    let mid = spec.ravel(&[6, 6]);
    assert!((one.get(mid) - 1.0 / 25.0).abs() < 1e-15);
}

#[test]
fn ap_products_by_direct_sums() {
    let spec = GridSpec::new(2, 8, 2.0).unwrap();
    let rho = critical_radius_field(&Potential::square_norm(spec, 1.0).unwrap());
    let w = Weight::from_fn(spec, |x| 1.0 + x[0] * x[0] + 0.5 * x[1].abs()).unwrap();
    let family = CubeFamily::centered(&spec, &[1, 3, 5], 1);
    for (p, theta) in [(2.0, 1.0), (1.5, 0.0), (3.0, 2.5)] {
        let got = ap_products(&w, p, theta, &rho, &family).unwrap();
        for (q, g) in family.cubes.iter().zip(&got) {
            let (lo, hi) = q.clipped(&spec).unwrap();
            let cells = cells_of(&spec, &lo, &hi);
            let m = cells.len() as f64;
            let aw = cells.iter().map(|&i| w.values().get(i)).sum::<f64>() / m;
            let asg = cells.iter().map(|&i| w.values().get(i).powf(-1.0 / (p - 1.0))).sum::<f64>() / m;
            let c = spec.ravel(&q.center_cell(&spec));
            let psi = (1.0 + q.side(&spec) / rho.at(c)).powf(theta);
            let want = aw / psi * (asg / psi).powf(p - 1.0);
            let g = g.unwrap();
            assert!((g - want).abs() <= 1e-12 * want, "{g} vs {want}");
        }
        let sigma = dual_weight(&w, p).unwrap();
        assert!((sigma.values().get(0) - w.values().get(0).powf(-1.0 / (p - 1.0))).abs() < 1e-14);
    }
}

/// Top-down selection with averages computed from scratch.
fn brute_czd(f: &GridFunction, lambda: f64, theta: f64, rho: &swl::CriticalRadiusField, depth: usize) -> Vec<(usize, usize)> {
    let spec = *f.spec();
    let n = spec.points_per_axis;
    let mut out = vec![];
    let mut stack = vec![(0usize, 0usize, 0usize)];
    while let Some((j, qx, qy)) = stack.pop() {
        let b = n >> j;
        let cells = cells_of(&spec, &[qx * b, qy * b], &[(qx + 1) * b, (qy + 1) * b]);
        let mean = cells.iter().map(|&i| f.get(i).abs()).sum::<f64>() / cells.len() as f64;
        let rmax = cells.iter().map(|&i| rho.at(i)).fold(0.0, f64::max);
        let avg = mean * penalty_inv(b as f64 * spec.spacing() / rmax, theta);
        if avg > lambda {
            out.push((j, qx * (1 << j) + qy));
        } else if j < depth {
            for (dx, dy) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                stack.push((j + 1, 2 * qx + dx, 2 * qy + dy));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn czd_selection_matches_recursion() {
    let spec = GridSpec::new(2, 16, 2.0).unwrap();
    let rho = critical_radius_field(&Potential::square_norm(spec, 1.0).unwrap());
    let lattice = DyadicLattice::new(spec);
    let ind = GridFunction::indicator(spec, &Cube::new(vec![4, 8], 4));
    let noisy = random_input(9, spec);
    for f in [ind, noisy] {
        for (scale, theta) in [(1.01, 0.0), (3.0, 1.0), (20.0, 2.0)] {
            // λ above the top-cube average, so the whole box is never selected
            let top = f.samples().iter().map(|v| v.abs()).sum::<f64>() / spec.len() as f64;
            let lambda = scale * top;
            let v = VectorGridFunction::new(vec![f.clone()]).unwrap();
            let d = decompose(&v, 2.0, lambda, theta, &rho, lattice).unwrap();
            let mut got: Vec<(usize, usize)> = d.cubes.iter().map(|c| (c.level, c.index)).collect();
            got.sort();
            assert_eq!(got, brute_czd(&f, lambda, theta, &rho, lattice.depth()));
            let report = verify_czd(&d, &v).unwrap();
            assert!(report.pass, "{report:?}");
        }
    }
}

#[test]
fn czd_indicator_selects_its_own_cube() {
    // |Q|=1/16 of the box; at θ=0 and λ just below 1 only Q itself qualifies
    let spec = GridSpec::new(2, 16, 2.0).unwrap();
    let rho = critical_radius_field(&Potential::one(spec));
    let q = Cube::new(vec![4, 8], 4);
    let f = VectorGridFunction::new(vec![GridFunction::indicator(spec, &q)]).unwrap();
    let d = decompose(&f, 2.0, 0.99, 0.0, &rho, DyadicLattice::new(spec)).unwrap();
    assert_eq!(d.cubes.len(), 1);
    assert_eq!(d.cubes[0].cube, q);
    assert!((d.omega_measure() - q.side(&spec).powi(2)).abs() < 1e-12);
    let bad_total: f64 = d.bad.components()[0].samples().iter().sum();
    assert_eq!(bad_total, 16.0);
}

#[test]
fn gfd_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(3, 6, 1.5).unwrap();
    let f = random_input(11, spec).map(|v| v * 1e-7 + 1.0 / 3.0);
    let path = dir.path().join("f.gfd.json");
    gfd::write(&f, &path).unwrap();
    let back = gfd::read(&path).unwrap();
    assert_eq!(back.spec(), f.spec());
    assert!(back.samples().iter().zip(f.samples()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let inline = dir.path().join("g.gfd.json");
    gfd::write_inline(&f, &inline).unwrap();
    assert_eq!(gfd::read(&inline).unwrap().samples(), f.samples());
}

#[test]
fn gfd_rejects_length_mismatch() {
    let bytes = gfd::encode(&[1.0, 2.0, 3.0]);
    assert!(gfd::decode(&bytes, 4).is_err());
    assert!(gfd::decode(&bytes[..20], 3).is_err());
    assert_eq!(gfd::decode(&bytes, 3).unwrap(), vec![1.0, 2.0, 3.0]);
}

mod cli {
    use std::process::Command;

    fn swl(args: &[&str]) -> (i32, String, String) {
        let dir = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_swl"))
            .args(args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        (
            out.status.code().unwrap(),
            String::from_utf8_lossy(&out.stdout).into(),
            String::from_utf8_lossy(&out.stderr).into(),
        )
    }

    #[test]
    fn budget_prints_the_chain() {
        let (code, out, _) = swl(&["budget", "--l0", "1", "--p", "2", "--r", "3", "--theta", "1", "--n", "3"]);
        assert_eq!(code, 0);
        assert!(out.contains("p0=512"), "{out}");
        assert!(out.contains("eta=18432"), "{out}");
    }

    #[test]
    fn invalid_parameter_names_the_field() {
        let (code, _, err) = swl(&["ap", "--p", "0"]);
        assert_eq!(code, 1);
        assert!(err.contains("`p`"), "{err}");
    }

    #[test]
    fn unknown_command_fails() {
        let (code, _, _) = swl(&["frobnicate"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn unknown_config_key_fails() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"n": 2, "bogus": 1}"#).unwrap();
        let (code, _, err) = swl(&["budget", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("bogus"), "{err}");
    }
}
