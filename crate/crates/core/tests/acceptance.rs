//! The acceptance suite: every criterion on its canonical configuration, at
//! the stated tolerances and runtime limits. Prints one line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use kspde::field::{read_binary, Field};
use kspde::harness::{canonical_config, run_resolved, Report};
use kspde::model::FitSummary;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(dir: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(r: &'a Report, name: &str) -> &'a kspde::harness::Check {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("{} has no check {name}", r.name))
}

/// Runs `experiment` and returns its report together with the elapsed seconds.
fn run(experiment: &str, dir: &Path) -> (Report, f64) {
    let start = Instant::now();
    let record = run_resolved(&canonical_config(experiment).unwrap(), &dir.join(experiment)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert_eq!(record.report, report(&dir.join(experiment)));
    (record.report, secs)
}

fn verdict(pass: bool, secs: f64, limit: f64, detail: String) -> Outcome {
    let timely = secs < limit;
    Outcome { pass: pass && timely, detail: format!("{detail}; {secs:.2}s (limit {limit}s)") }
}

fn heat(dir: &Path) -> Outcome {
    let (r, secs) = run("heat-exact", dir);
    let u: Field<f64> = read_binary(dir.join("heat-exact/final.kspd")).unwrap();
    let h = 2.0 * PI / u.len() as f64;
    let err = (u.values().iter().enumerate().map(|(j, v)| (v - (-0.5f64).exp() * (j as f64 * h).cos()).powi(2)).sum::<f64>() * h).sqrt();
    verdict(r.pass && err < 1e-3, secs, 1.0, format!("L2 error {err:.3e} < 1e-3"))
}

fn shock(dir: &Path) -> Outcome {
    let (r, secs) = run("burgers-shock", dir);
    let u: Field<f64> = read_binary(dir.join("burgers-shock/final.kspd")).unwrap();
    let n = u.len();
    let h = 2.0 * PI / n as f64;
    let v = u.values();
    // the jump of the initial step sits between the nodes at π - h and π
    let predicted = PI - 0.5 * h + 0.5;
    let crossing = (0..n - 1)
        .filter(|&i| v[i] >= 0.5 && v[i + 1] < 0.5)
        .map(|i| (i as f64 + (v[i] - 0.5) / (v[i] - v[i + 1])) * h)
        .min_by(|a, b| (a - predicted).abs().total_cmp(&(b - predicted).abs()))
        .unwrap();
    let err = (crossing - predicted).abs();
    let entropy = check(&r, "entropy-violation-rate");
    verdict(
        r.pass && err <= 2.0 * h,
        secs,
        5.0,
        format!("shock error {err:.3e} <= 2dx = {:.3e}, entropy residual {:.3e} <= dx", 2.0 * h, entropy.measured),
    )
}

fn comparison(dir: &Path) -> Outcome {
    let (r, secs) = run("comparison-deterministic", dir);
    let m = check(&r, "max-order-violation").measured;
    verdict(r.pass && m == 0.0, secs, 10.0, format!("max order violation {m:e} over 3x3 (kappa, tau)"))
}

fn contraction(dir: &Path) -> Outcome {
    let (r, secs) = run("contraction-coupled", dir);
    let gap = check(&r, "mean-gap-at-T");
    let ratio = check(&r, "c-dt-halving-ratio").measured;
    verdict(
        r.pass && (1.4..=2.6).contains(&ratio),
        secs,
        120.0,
        format!("gap(T) {:.4} <= {:.4}, C_dt ratio {ratio:.3} in [1.4, 2.6]", gap.measured, gap.bound),
    )
}

fn moments(dir: &Path) -> Outcome {
    let (r, secs) = run("lp-moments", dir);
    let spread = check(&r, "ratio-spread-across-dt").measured;
    let oracle = check(&r, "additive-oracle-relative-error").measured;
    verdict(
        r.pass && spread <= 2.0 && oracle <= 0.25,
        secs,
        120.0,
        format!("ratio spread {spread:.3} <= 2, Gaussian oracle error {oracle:.3} <= 0.25"),
    )
}

fn decay(dir: &Path) -> Outcome {
    let (r, secs) = run("measure-decay", dir);
    let text = std::fs::read_to_string(dir.join("measure-decay/decay.csv")).unwrap();
    let scaled: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let k = scaled.len();
    let top_monotone = scaled[k - 3..].windows(2).all(|w| w[1] <= w[0]);
    let last = scaled[k - 1] / scaled[0];
    verdict(
        r.pass && top_monotone && last < 0.01,
        secs,
        60.0,
        format!("top-three shells nonincreasing, final/level-0 {last:.3e} < 1e-2, worst profile/envelope {:.3}", check(&r, "tail-domination").measured),
    )
}

fn exponents(dir: &Path) -> Outcome {
    let (r, secs) = run("nondegeneracy-fit", dir);
    let load = |stem: &str| -> FitSummary {
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("nondegeneracy-fit/{stem}.json"))).unwrap()).unwrap()
    };
    let pure = load("fit_pure-flux");
    let porous = load("fit_model");
    let close = |a: f64, b: f64| (a / b - 1.0).abs() <= 0.15;
    let ok = close(pure.alpha, 1.0) && close(pure.beta, 1.0) && close(porous.alpha, 0.5) && close(porous.beta, 2.0);
    verdict(
        r.pass && ok,
        secs,
        60.0,
        format!(
            "pure (alpha, beta) = ({:.3}, {:.3}) vs (1, 1); porous = ({:.3}, {:.3}) vs (0.5, 2)",
            pure.alpha, pure.beta, porous.alpha, porous.beta
        ),
    )
}

fn regularity(dir: &Path) -> Outcome {
    let (b, tb) = run("regularity-burgers", dir);
    let (p, tp) = run("regularity-porous", dir);
    let sb = check(&b, "s-emp");
    let sp = check(&p, "s-emp");
    let bounds_ok = (sb.bound - 0.9 / 18.0).abs() < 1e-12 && (sp.bound - 0.9 / 24.0).abs() < 1e-12;
    let pass = b.pass && p.pass && bounds_ok && tb < 300.0;
    verdict(
        pass,
        tp,
        300.0,
        format!("burgers s_emp {:.4} >= {:.4} ({tb:.2}s); porous s_emp {:.4} >= {:.4}", sb.measured, sb.bound, sp.measured, sp.bound),
    )
}

fn cauchy(dir: &Path) -> Outcome {
    let (r, secs) = run("vanishing-viscosity-cauchy", dir);
    let text = std::fs::read_to_string(dir.join("vanishing-viscosity-cauchy/cauchy.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let kappas: Vec<f64> = rows.iter().map(|r| r[0]).chain(rows.last().map(|r| r[1])).collect();
    let ladder_ok = kappas == [0.2, 0.1, 0.05, 0.025];
    let diffs: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let monotone = diffs.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    verdict(r.pass && ladder_ok && monotone, secs, 300.0, format!("consecutive L1 differences {:?}", diffs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()))
}

fn multiplier(dir: &Path) -> Outcome {
    let (r, secs) = run("multiplier-uniformity", dir);
    let table = check(&r, "kernel-norm-ratio").measured;
    let avg = check(&r, "l2-averaging-bound-ratio").measured;
    verdict(
        r.pass && table < 10.0 && avg <= 1.0 + 1e-12,
        secs,
        60.0,
        format!("kernel norm max/min {table:.3} < 10, worst |Mf|/(sqrt(Omega)|f|) {avg:.3}"),
    )
}

fn invariants(dir: &Path) -> Outcome {
    let (r, secs) = run("invariants", dir);
    let names: Vec<String> = r.checks.iter().map(|c| format!("{} {:.2e}", c.name, c.measured)).collect();
    verdict(r.pass, secs, 30.0, names.join(", "))
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: [(&str, fn(&Path) -> Outcome); 11] = [
        ("1 heat exact solution", heat),
        ("2 burgers shock", shock),
        ("3 discrete comparison", comparison),
        ("4 coupled L1 contraction", contraction),
        ("5 Lp moment bound", moments),
        ("6 kinetic measure decay", decay),
        ("7 nondegeneracy exponents", exponents),
        ("8 regularity gain", regularity),
        ("9 vanishing viscosity Cauchy", cauchy),
        ("10 multiplier uniformity", multiplier),
        ("11 structural invariants", invariants),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let o = f(dir.path());
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
