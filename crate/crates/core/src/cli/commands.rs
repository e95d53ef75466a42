use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::{Command, Outcome, RunConfig};
use crate::construct::{factorize, rdf_majorant, NormSpace, DEFAULT_K, DEFAULT_TOL};
use crate::czd::{decompose, verify_czd};
use crate::error::{invalid, Result};
use crate::grid::{gfd, CubeFamily, DyadicLattice, GridFunction, VectorGridFunction};
use crate::maximal::{maximal, MaximalConfig};
use crate::potential::{check_reverse_holder, critical_radius_field, CriticalRadiusField};
use crate::report::InequalityReport;
use crate::rng::{stream, RandomField};
use crate::verify::rdf_properties_check;
use crate::verify::suites::{run_all, run_suite, SuiteResult, SUITES};
use crate::weights::{ap_constant, bmo_norm, exponent_budget};

pub(super) fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::Rho => rho(cfg),
        Command::RhCheck => rh_check(cfg),
        Command::Maximal => maximal_cmd(cfg),
        Command::Ap => ap(cfg),
        Command::Bmo => bmo(cfg),
        Command::Czd => czd(cfg),
        Command::Factorize => factor(cfg),
        Command::Rdf => rdf(cfg),
        Command::Budget => budget(cfg),
        Command::Verify { suite } => verify(suite, cfg),
        Command::Report => report(cfg),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

fn write_json(cfg: &RunConfig, name: &str, result: impl Serialize) -> Result<()> {
    let v = json!({ "config": cfg, "result": result });
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    fs::write(out_dir(cfg)?.join(name), s)?;
    Ok(())
}

fn write_gfd(cfg: &RunConfig, stem: &str, f: &GridFunction) -> Result<()> {
    gfd::write(f, &out_dir(cfg)?.join(format!("{stem}.gfd.json")))
}

fn reports_csv(reports: &[InequalityReport]) -> String {
    let mut s = String::from("name,lhs,rhs,ratio,ceiling,pass,suite_size,worst\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},\"{}\"",
            r.name,
            r.lhs,
            r.rhs,
            r.ratio,
            r.ceiling,
            r.pass,
            r.suite_size,
            r.worst.replace('"', "'")
        );
    }
    s
}

fn rho_of(cfg: &RunConfig) -> Result<Arc<CriticalRadiusField>> {
    Ok(Arc::new(critical_radius_field(&cfg.potential()?)))
}

fn input(cfg: &RunConfig) -> Result<GridFunction> {
    let spec = cfg.spec()?;
    match &cfg.input {
        Some(p) => {
            let f = gfd::read(p)?;
            spec.check_same(f.spec())?;
            Ok(f)
        }
        None => {
            let mut rng = stream(cfg.seed, 100);
            Ok(RandomField::draw(&mut rng, spec.dim, spec.half_width, 3).with_offset(0.05).sample(spec))
        }
    }
}

fn maximal_config(cfg: &RunConfig, rho: Arc<CriticalRadiusField>) -> MaximalConfig {
    let e = cfg.eta.unwrap_or(cfg.theta);
    match cfg.variant.as_str() {
        "dyadic" => MaximalConfig::dyadic(rho, cfg.theta),
        "centered" => MaximalConfig::centered(rho, e),
        "phi" => MaximalConfig::phi(*rho.spec(), e),
        _ => MaximalConfig::cube(rho, cfg.theta),
    }
}

fn rho(cfg: &RunConfig) -> Result<Outcome> {
    let f = rho_of(cfg)?;
    write_gfd(cfg, "rho", f.rho())?;
    write_json(
        cfg,
        "rho.json",
        json!({
            "rho_min": f.min(),
            "rho_max": f.max(),
            "clamped": f.clamped,
            "tolerance": f.tolerance,
            "ladder": f.radii_ladder.radii,
        }),
    )?;
    Ok(Outcome {
        summary: format!("rho: min={:.6} max={:.6} clamped={}", f.min(), f.max(), f.clamped),
        pass: true,
    })
}

fn rh_check(cfg: &RunConfig) -> Result<Outcome> {
    let v = cfg.potential()?;
    let spec = *v.spec();
    let r = check_reverse_holder(&v, cfg.q, &CubeFamily::standard(&spec))?;
    write_json(cfg, "rh_check.json", &r)?;
    Ok(Outcome {
        summary: format!("rh-check: q={} constant={:.6}", cfg.q, r.constant),
        pass: r.constant.is_finite(),
    })
}

fn maximal_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let f = input(cfg)?;
    let mc = maximal_config(cfg, rho_of(cfg)?);
    let m = maximal(&f, &mc)?;
    write_gfd(cfg, "maximal", &m)?;
    write_json(cfg, "maximal.json", json!({ "operator": mc.descriptor(), "min": m.min(), "max": m.max() }))?;
    Ok(Outcome {
        summary: format!("maximal: {} min={:.6} max={:.6}", cfg.variant, m.min(), m.max()),
        pass: true,
    })
}

fn ap(cfg: &RunConfig) -> Result<Outcome> {
    let w = cfg.weight()?;
    let spec = *w.spec();
    let r = ap_constant(&w, cfg.p, cfg.theta, &rho_of(cfg)?, &CubeFamily::standard(&spec))?;
    write_json(cfg, "ap.json", &r)?;
    Ok(Outcome {
        summary: format!("ap: p={} theta={} constant={:.6}", cfg.p, cfg.theta, r.constant),
        pass: r.constant.is_finite(),
    })
}

fn bmo(cfg: &RunConfig) -> Result<Outcome> {
    let f = input(cfg)?;
    let spec = *f.spec();
    let v = bmo_norm(&f, cfg.theta, &*rho_of(cfg)?, &CubeFamily::standard(&spec))?;
    write_json(cfg, "bmo.json", json!({ "theta": cfg.theta, "norm": v }))?;
    Ok(Outcome {
        summary: format!("bmo: theta={} norm={v:.6}", cfg.theta),
        pass: v.is_finite(),
    })
}

fn czd(cfg: &RunConfig) -> Result<Outcome> {
    let f: VectorGridFunction = input(cfg)?.into();
    let spec = *f.spec();
    let rho = rho_of(cfg)?;
    let lat = DyadicLattice::new(spec);
    let theta1 = cfg.theta * (cfg.l0 + 1.0);
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => {
            let probe = decompose(&f, cfg.r, f64::MAX, theta1, &rho, lat)?;
            let top = probe.levels[0][0];
            let fine = probe.levels[lat.depth()].iter().cloned().fold(0.0, f64::max);
            if !(top > 0.0) {
                return Err(invalid("input", "function vanishes; pass --lambda"));
            }
            (top * fine).sqrt()
        }
    };
    let d = decompose(&f, cfg.r, lambda, theta1, &rho, lat)?;
    let rep = verify_czd(&d, &f)?;
    let mut csv = String::from("level,index,lo,cells,average\n");
    for c in &d.cubes {
        let lo: Vec<String> = c.cube.lo.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(csv, "{},{},{},{},{}", c.level, c.index, lo.join(" "), c.cube.cells, c.average);
    }
    fs::write(out_dir(cfg)?.join("czd_cubes.csv"), csv)?;
    let mask = GridFunction::new(spec, d.omega_lambda.iter().map(|&b| b as u8 as f64).collect())?;
    write_gfd(cfg, "czd_omega", &mask)?;
    write_gfd(cfg, "czd_fbar", &d.fbar.components()[0])?;
    write_json(cfg, "czd.json", json!({ "lambda": lambda, "theta": theta1, "cubes": d.cubes, "report": rep }))?;
    Ok(Outcome {
        summary: format!("czd: lambda={lambda:.6} cubes={} slack={:.6} pass={}", d.cubes.len(), rep.details["iv_slack"], rep.pass),
        pass: rep.pass,
    })
}

fn factor(cfg: &RunConfig) -> Result<Outcome> {
    let w = cfg.weight()?;
    let f = factorize(&w, cfg.p, cfg.theta, &rho_of(cfg)?, DEFAULT_K, DEFAULT_TOL)?;
    write_gfd(cfg, "w1", f.w1.values())?;
    write_gfd(cfg, "w2", f.w2.values())?;
    write_json(
        cfg,
        "factorize.json",
        json!({
            "branch": f.branch,
            "identity_error": f.identity_error,
            "a1_exponent": f.a1_exponent,
            "a1_w1": f.a1_w1,
            "a1_w2": f.a1_w2,
            "operator_norm_a": f.operator_norm_a,
            "truncation_k": f.truncation_k,
        }),
    )?;
    let pass = f.identity_error <= 1e-10 && f.a1_w1.is_finite() && f.a1_w2.is_finite();
    Ok(Outcome {
        summary: format!(
            "factorize: p={} identity_error={:.3e} a1(w1)={:.6} a1(w2)={:.6}",
            cfg.p, f.identity_error, f.a1_w1, f.a1_w2
        ),
        pass,
    })
}

fn rdf(cfg: &RunConfig) -> Result<Outcome> {
    let h = input(cfg)?.abs();
    let op = maximal_config(cfg, rho_of(cfg)?);
    let space = NormSpace::new(cfg.p, Some(cfg.weight()?));
    let res = rdf_majorant(&h, &op, None, DEFAULT_K, DEFAULT_TOL, &space)?;
    let rep = rdf_properties_check(&res, &op, &space)?;
    write_gfd(cfg, "rdf_majorant", &res.majorant)?;
    write_json(
        cfg,
        "rdf.json",
        json!({ "operator": res.operator, "A": res.operator_norm_a, "K": res.truncation_k, "certification": res.certified, "report": rep }),
    )?;
    Ok(Outcome {
        summary: format!(
            "rdf: A={:.6} norm_ratio={:.6} a1_ratio={:.6} pass={}",
            res.operator_norm_a, res.certified.norm_ratio, res.certified.a1_ratio, rep.pass
        ),
        pass: rep.pass,
    })
}

fn budget(cfg: &RunConfig) -> Result<Outcome> {
    let b = exponent_budget(cfg.l0, cfg.theta, cfg.p, cfg.r, cfg.n)?;
    write_json(cfg, "budget.json", &b)?;
    Ok(Outcome {
        summary: format!(
            "budget: p0={} theta0={} eta={} eta_bar={} eta3={} eta2={} eta1={}",
            b.p0, b.theta0, b.eta, b.eta_bar, b.eta3, b.eta2, b.eta1
        ),
        pass: true,
    })
}

fn regression_bytes(cfg: &RunConfig, suites: &[SuiteResult]) -> Result<Vec<u8>> {
    let v = json!({ "config": cfg, "suites": suites });
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn summary_lines(results: &[SuiteResult]) -> String {
    results
        .iter()
        .map(|r| {
            let failed = r.reports.iter().filter(|x| !x.pass).count();
            format!("{}: {} ({} reports, {failed} failed)", r.id, if r.pass { "PASS" } else { "FAIL" }, r.reports.len())
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub(super) fn verify_bytes(suite: &str, cfg: &RunConfig) -> Result<(Vec<u8>, bool)> {
    let ctx = cfg.suite_context();
    let results = if suite == "all" { run_all(&ctx)? } else { vec![run_suite(suite, &ctx)?] };
    let pass = results.iter().all(|r| r.pass);
    Ok((regression_bytes(cfg, &results)?, pass))
}

fn verify(suite: &str, cfg: &RunConfig) -> Result<Outcome> {
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(invalid("suite", format!("unknown suite `{suite}`; known: all, {}", SUITES.join(", "))));
    }
    let ctx = cfg.suite_context();
    let results = if suite == "all" { run_all(&ctx)? } else { vec![run_suite(suite, &ctx)?] };
    let dir = out_dir(cfg)?.join("suites");
    fs::create_dir_all(&dir)?;
    for r in &results {
        let mut s = serde_json::to_string_pretty(&json!({ "config": cfg, "suite": r }))?;
        s.push('\n');
        fs::write(dir.join(format!("{}.json", r.id)), s)?;
        fs::write(dir.join(format!("{}.csv", r.id)), reports_csv(&r.reports))?;
    }
    if suite == "all" {
        fs::write(out_dir(cfg)?.join("regression.json"), regression_bytes(cfg, &results)?)?;
    }
    Ok(Outcome {
        summary: summary_lines(&results),
        pass: results.iter().all(|r| r.pass),
    })
}

fn report(cfg: &RunConfig) -> Result<Outcome> {
    let dir = cfg.out.join("suites");
    let mut results = vec![];
    for id in SUITES {
        let p = dir.join(format!("{id}.json"));
        if !p.exists() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p)?)?;
        results.push(serde_json::from_value::<SuiteResult>(v["suite"].clone())?);
    }
    if results.is_empty() {
        return Err(invalid("out", format!("no suite results under {}", dir.display())));
    }
    fs::write(out_dir(cfg)?.join("regression.json"), regression_bytes(cfg, &results)?)?;
    Ok(Outcome {
        summary: summary_lines(&results),
        pass: results.iter().all(|r| r.pass),
    })
}
