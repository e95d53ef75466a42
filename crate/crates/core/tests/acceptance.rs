//! One PASS/FAIL line per acceptance criterion. Runs `swl verify all --seed 7`
//! twice through the binary, checks the two regression files are identical,
//! and reads criteria 1–12 from the suite reports, with independent oracles
//! where a closed form exists.

use std::process::{Command, ExitCode};
use std::time::Instant;

use serde_json::Value;
use swl::grid::GridSpec;
use swl::potential::{critical_radius_field, unit_ball_volume, Potential};

const DET_SEED: &str = "7";

fn run_verify(out: &std::path::Path) -> (Vec<u8>, i32) {
    let status = Command::new(env!("CARGO_BIN_EXE_swl"))
        .args(["verify", "all", "--seed", DET_SEED, "--out"])
        .arg(out)
        .status()
        .expect("run swl");
    let bytes = std::fs::read(out.join("regression.json")).unwrap_or_default();
    (bytes, status.code().unwrap_or(-1))
}

fn suite<'a>(reg: &'a Value, id: &str) -> &'a Value {
    reg["suites"]
        .as_array()
        .and_then(|s| s.iter().find(|x| x["id"] == id))
        .unwrap_or(&Value::Null)
}

fn reports<'a>(reg: &'a Value, id: &str) -> Vec<&'a Value> {
    suite(reg, id)["reports"].as_array().map(|v| v.iter().collect()).unwrap_or_default()
}

fn num(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap(),
        Value::String(s) if s == "inf" => f64::INFINITY,
        _ => f64::NAN,
    }
}

fn all_pass(reg: &Value, id: &str) -> bool {
    let r = reports(reg, id);
    !r.is_empty() && r.iter().all(|x| x["pass"] == true)
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_rho(reg: &Value) -> (bool, String) {
    let spec = GridSpec::new(3, 32, 2.0).unwrap();
    let h = spec.spacing();
    let w3 = unit_ball_volume(3);
    // r^{2-n} ∫_{B_r} V: V ≡ 1 gives ω₃ r², V = |y|² gives 4πr⁴/5
    let oracle_one = bisect(|r| w3 * r * r - 1.0, 1e-6, 10.0);
    let oracle_sq = bisect(|r| 4.0 * std::f64::consts::PI * r.powi(4) / 5.0 - 1.0, 1e-6, 10.0);
    let t = Instant::now();
    let one = critical_radius_field(&Potential::one(spec));
    let sq = critical_radius_field(&Potential::square_norm(spec, 1.0).unwrap());
    let secs = t.elapsed().as_secs_f64();
    let dev_one = one.rho().samples().iter().map(|r| (r - oracle_one).abs()).fold(0.0, f64::max);
    let dev_sq = (sq.at_point(&[0.0; 3]) - oracle_sq).abs();
    let r = reports(reg, "rho");
    let reported = r.iter().all(|x| x["pass"] == true) && r.len() == 2;
    (
        dev_one <= 2.0 * h && dev_sq <= 2.0 * h && secs < 5.0 && reported,
        format!("|rho-rho*| V=1: {dev_one:.2e}, V=|x|^2 at 0: {dev_sq:.2e} (2h={:.3}); {secs:.2}s", 2.0 * h),
    )
}

fn detail(r: &Value, k: &str) -> f64 {
    num(&r["details"][k])
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let (a, code_a) = run_verify(dir.path());
    let (b, code_b) = run_verify(dir.path());
    let reg: Value = serde_json::from_slice(&a).unwrap_or(Value::Null);

    let mut lines: Vec<(bool, &str, String)> = vec![];
    let (ok, msg) = criterion_rho(&reg);
    lines.push((ok, "critical radius closed forms", msg));

    let w = reports(&reg, "weights");
    let msg = match w.as_slice() {
        [pen, cls] => format!(
            "penalised A1 {:.4} -> {:.4} (drift {:.3}); classical growth {:.3}x",
            detail(pen, "constant"),
            detail(pen, "constant_refined"),
            num(&pen["ratio"]),
            detail(cls, "growth")
        ),
        _ => "missing".into(),
    };
    lines.push((all_pass(&reg, "weights"), "weight example dichotomy", msg));

    let s = reports(&reg, "sandwich");
    let v: f64 = s.iter().map(|x| num(&x["ratio"])).sum();
    let n: f64 = s.iter().map(|x| num(&x["suite_size"])).sum();
    lines.push((all_pass(&reg, "sandwich") && n >= 100.0, "pointwise sandwich", format!("{v} violations over {n} functions")));

    let c = reports(&reg, "czd");
    let msg = c
        .first()
        .map(|r| {
            format!(
                "{} property violations, {} brute-force mismatches, max (iv) slack {:.3}",
                detail(r, "property_violations"),
                detail(r, "bruteforce_mismatches"),
                num(&r["ratio"])
            )
        })
        .unwrap_or_default();
    lines.push((all_pass(&reg, "czd"), "CZ decomposition", msg));

    let cv = reports(&reg, "covering");
    let viol: f64 = cv.iter().map(|x| num(&x["ratio"])).sum();
    let left: f64 = cv.iter().map(|x| detail(x, "left_set_cells")).sum();
    lines.push((all_pass(&reg, "covering"), "covering", format!("{viol} violations, {left} cells in left sets")));

    let rd = reports(&reg, "rdf");
    let worst_b = rd.iter().map(|x| detail(x, "norm_ratio_max")).fold(0.0, f64::max);
    let worst_c = rd.iter().map(|x| num(&x["ratio"])).fold(0.0, f64::max);
    let ok = all_pass(&reg, "rdf") && worst_b <= 2.0 + 1e-6;
    lines.push((ok, "RdF properties", format!("(b) max {worst_b:.6}, (c)/2A max {worst_c:.6}")));

    let f = reports(&reg, "factorization");
    let err = f.iter().map(|x| num(&x["ratio"])).fold(0.0, f64::max);
    let a1 = f.iter().map(|x| detail(x, "a1_w1").max(detail(x, "a1_w2"))).fold(0.0, f64::max);
    lines.push((all_pass(&reg, "factorization"), "factorization", format!("{} cases, identity error {err:.2e}, max A1 {a1:.3}", f.len())));

    let d = reports(&reg, "duality");
    let msg = d.iter().map(|x| format!("{} {:.2e}", x["name"].as_str().unwrap_or(""), num(&x["ratio"]))).collect::<Vec<_>>().join(", ");
    lines.push((all_pass(&reg, "duality"), "duality identity", msg));

    let di = reports(&reg, "duality_ineq");
    let msg = di.iter().map(|x| format!("{} {:.3}", x["name"].as_str().unwrap_or(""), detail(x, "constant"))).collect::<Vec<_>>().join(", ");
    lines.push((all_pass(&reg, "duality_ineq"), "duality inequality and Kolmogorov", msg));

    let vv = reports(&reg, "vector");
    let drift = vv.iter().map(|x| num(&x["ratio"])).fold(0.0, f64::max);
    lines.push((all_pass(&reg, "vector") && vv.len() == 6, "vector-valued maximal theorem", format!("{} constants, max drift {drift:.3}", vv.len())));

    let ex = reports(&reg, "extrapolation");
    let big = ex.iter().map(|x| num(&x["ratio"])).fold(0.0, f64::max);
    lines.push((all_pass(&reg, "extrapolation"), "extrapolation demos", format!("{} reports, largest constant {big:.3}", ex.len())));

    let bu = reports(&reg, "budget");
    let msg = bu
        .first()
        .map(|r| {
            ["p0", "theta0", "eta", "eta_bar", "eta3", "eta1"]
                .iter()
                .map(|k| format!("{k}={}", detail(r, k)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default();
    lines.push((all_pass(&reg, "budget"), "exponent budget", msg));

    let same = !a.is_empty() && a == b;
    lines.push((
        same && code_a == 0 && code_b == 0,
        "determinism",
        format!("{} bytes, identical={same}, exit codes {code_a}/{code_b}", a.len()),
    ));

    let mut failed = 0;
    for (i, (ok, name, msg)) in lines.iter().enumerate() {
        println!("{} {:>2} {name}: {msg}", if *ok { "PASS" } else { "FAIL" }, i + 1);
        failed += !ok as usize;
    }
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
