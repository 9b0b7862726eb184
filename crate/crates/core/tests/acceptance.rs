//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use annulus_extremal::closed_forms::{bound_power, bound_rho1, closed_form_for, compare_with_solver};
use annulus_extremal::nitsche::nitsche_bound;
use annulus_extremal::roots::brent;
use annulus_extremal::variation::{duality_report, perturbation_test_with, PerturbationOptions, PerturbationOutcome};
use annulus_extremal::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn wts(a: f64, b: f64) -> Weights {
    Weights::new(a, b).unwrap()
}

fn ann(r: f64, big_r: f64) -> AnnulusPair {
    AnnulusPair::new(r, big_r).unwrap()
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1.0)
}

struct Instance {
    metric: MetricSpec,
    w: Weights,
    ann: AnnulusPair,
}

fn table_metric(big_r: f64) -> MetricSpec {
    let n = 48;
    let s: Vec<f64> = (0..n).map(|i| (big_r.ln() * i as f64 / (n - 1) as f64).exp()).collect();
    MetricSpec::Tabulated(Table::sample(&s, |x| 1.0 / (1.0 + 0.5 * x * x)).unwrap())
}

/// Feasible instance away from the bound, drawn per family index `k` mod 3.
fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> Instance {
    loop {
        let a: f64 = rng.random_range(0.5..2.0);
        let b: f64 = rng.random_range(0.5..2.0);
        let big_r: f64 = rng.random_range(1.1..3.0);
        let metric = match k % 3 {
            0 => MetricSpec::Constant,
            1 => {
                let mut lambda: f64 = rng.random_range(0.3..3.5);
                while (lambda - 1.0).abs() < 0.2 {
                    lambda = rng.random_range(0.3..3.5);
                }
                MetricSpec::Power { lambda }
            }
            _ => table_metric(big_r),
        };
        let w = wts(a, b);
        let Ok(r_max) = nitsche_bound(&metric, &w, big_r) else { continue };
        let hi = r_max.min(6.0);
        let r = 1.0 + (hi - 1.0) * rng.random_range(0.05..0.95);
        if r > 1.0 + 1e-3 {
            return Instance { metric, w, ann: ann(r, big_r) };
        }
    }
}

fn cli_json(args: &[&str]) -> (i32, serde_json::Value) {
    let out = cli::run_cli(std::iter::once("annulus-extremal").chain(args.iter().copied()));
    (out.code, serde_json::from_str(&out.stdout).unwrap_or(serde_json::Value::Null))
}

fn c1() -> Outcome {
    let start = Instant::now();
    let (code, doc) = cli_json(&["bound", "--metric", "const", "--a", "1", "--b", "1", "--R", "1.25"]);
    let dt = start.elapsed();
    let r_max = if code == 0 { doc["r_max"].as_f64().unwrap_or(f64::NAN) } else { f64::NAN };
    let err = (r_max - 2.0).abs();
    outcome(err <= 1e-10 && dt < Duration::from_secs(1), format!("r_max={r_max:.15} err={err:.2e} time={dt:.2?}"))
}

fn c2() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a, b, r) in [(1.0, 2.0, 2.0), (2.0, 1.0, 4.0), (1.0, 1.0, 2.0)] {
        let w = wts(a, b);
        let expect = bound_rho1(a, b, r);
        let g = |big_r: f64| nitsche_bound(&MetricSpec::Constant, &w, big_r).map(|v| v.ln() - r.ln());
        let r_min = brent(g, 1.0 + 1e-9, 50.0, 1e-15, 1e-15, 200).unwrap();
        let analytic = (b / a * r.ln()).cosh();
        worst = worst.max((r_min - expect).abs()).max((r_min - analytic).abs());
    }
    outcome(worst <= 1e-8, format!("max |R_min - cosh((b/a) ln r)| = {worst:.2e}"))
}

fn c3() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for lambda in [2.0, 3.0, 0.5] {
        for big_r in [1.1, 1.5, 2.0, 5.0] {
            for ab in [0.5, 1.0, 2.0] {
                let w = wts(ab, 1.0);
                let numeric = nitsche_bound(&MetricSpec::Power { lambda }, &w, big_r).unwrap();
                let exact = bound_power(ab, 1.0, lambda, big_r).unwrap();
                worst = worst.max(rel(numeric, exact));
            }
        }
    }
    let dt = start.elapsed();
    outcome(worst <= 1e-8 && dt < Duration::from_secs(10), format!("max rel err = {worst:.2e} over 36 cases, time={dt:.2?}"))
}

fn c4() -> Outcome {
    let m = MetricSpec::Power { lambda: 1.0 };
    let sol = solve(&m, &wts(2.0, 1.0), &ann(5.0, 5.0), 512).unwrap();
    let mut sup: f64 = 0.0;
    for i in 0..=4000 {
        let t = 1.0 + 4.0 * i as f64 / 4000.0;
        sup = sup.max((sol.profile.eval(t).unwrap().0 - t).abs());
    }
    let da = (sol.alpha - 3.0).abs();
    outcome(da <= 1e-8 && sup <= 1e-8, format!("|alpha - 3| = {da:.2e}, sup|H - t| = {sup:.2e}"))
}

fn c5() -> Outcome {
    let mut worst_a: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    let cases: Vec<(MetricSpec, f64, f64, f64)> = vec![
        (MetricSpec::Constant, 1.0, 2.0, 1.5),
        (MetricSpec::Power { lambda: 2.0 }, 2.0, 1.0, 2.0),
        (MetricSpec::Power { lambda: 0.5 }, 1.0, 1.0, 1.7),
        (MetricSpec::Power { lambda: 3.0 }, 1.5, 1.0, 1.3),
        (table_metric(2.5), 1.0, 1.5, 2.5),
    ];
    for (m, a, b, big_r) in cases {
        let r = big_r.powf(a / b);
        let sol = solve(&m, &wts(a, b), &ann(r, big_r), 512).unwrap();
        worst_a = worst_a.max(sol.alpha.abs() / (1.0 + sol.alpha0.abs()));
        for i in 0..=4000 {
            let t = 1.0 + (r - 1.0) * i as f64 / 4000.0;
            let t = t.min(r);
            worst_h = worst_h.max((sol.profile.eval(t).unwrap().0 - t.powf(b / a)).abs());
        }
    }
    outcome(worst_a <= 1e-8 && worst_h <= 1e-8, format!("max |alpha|/(1+|alpha0|) = {worst_a:.2e}, sup|H - t^(b/a)| = {worst_h:.2e}"))
}

fn random_solutions() -> Vec<(Instance, ExtremalSolution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..20)
        .map(|k| {
            let inst = random_instance(&mut rng, k);
            let sol = solve(&inst.metric, &inst.w, &inst.ann, 512).unwrap_or_else(|e| panic!("{e:?} {:?} {:?} {:?} {:?}", inst.metric, inst.w, inst.ann, nitsche_bound(&inst.metric, &inst.w, inst.ann.big_r)));
            (inst, sol)
        })
        .collect()
}

fn c6(sols: &[(Instance, ExtremalSolution)]) -> Outcome {
    let worst = sols
        .iter()
        .map(|(i, s)| first_integral_deviation(&i.metric, &i.w, &s.profile, s.alpha).unwrap())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max |C - alpha|/(1+|alpha|) = {worst:.2e} over {} instances", sols.len()))
}

fn c7(sols: &[(Instance, ExtremalSolution)]) -> Outcome {
    let worst = sols.iter().map(|(i, s)| el_residual(&i.metric, &i.w, &s.profile).unwrap()).fold(0.0, f64::max);
    let r: f64 = 2.0;
    let t: Vec<f64> = (0..512).map(|i| 1.0 + (r - 1.0) * i as f64 / 511.0).collect();
    let k = PI / (r - 1.0);
    let bad = RadialProfile::from_fn(&t, |t| (t + 0.01 * (k * (t - 1.0)).sin(), 1.0 + 0.01 * k * (k * (t - 1.0)).cos())).unwrap();
    let control = el_residual(&MetricSpec::Constant, &wts(1.0, 1.0), &bad).unwrap();
    outcome(worst <= 1e-5 && control > 1e-3, format!("max residual = {worst:.2e}, corrupted control = {control:.2e}"))
}

fn c8(sols: &[(Instance, ExtremalSolution)]) -> Outcome {
    let worst = sols.iter().map(|(i, s)| duality_report(&i.metric, &i.w, s).unwrap().gap).fold(0.0, f64::max);
    let m = MetricSpec::Power { lambda: 1.0 };
    let w = wts(2.0, 1.0);
    let sol = solve(&m, &w, &ann(5.0, 5.0), 512).unwrap();
    let d = duality_report(&m, &w, &sol).unwrap();
    let exact = 10.0 * PI * 5f64.ln();
    let oracle = (d.energy - exact).abs().max((d.distortion - exact).abs()).max((d.closed_form - exact).abs());
    outcome(worst <= 1e-5 && oracle <= 1e-10, format!("max gap = {worst:.2e}, identity |E - 10 pi ln 5| = {oracle:.2e}"))
}

fn c9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sup: f64 = 0.0;
    let mut en: f64 = 0.0;
    for fam in 0..3 {
        let mut done = 0;
        while done < 10 {
            let a: f64 = rng.random_range(0.5..2.0);
            let b: f64 = rng.random_range(0.5..2.0);
            let big_r: f64 = rng.random_range(1.1..3.0);
            let m = match fam {
                0 => MetricSpec::Constant,
                1 => MetricSpec::Power { lambda: 2.0 },
                _ => {
                    let mut lambda: f64 = rng.random_range(0.3..3.5);
                    while (lambda - 1.0).abs() < 0.2 || (lambda - 2.0).abs() < 0.05 {
                        lambda = rng.random_range(0.3..3.5);
                    }
                    MetricSpec::Power { lambda }
                }
            };
            let w = wts(a, b);
            let r_max = match m {
                MetricSpec::Constant => (big_r.acosh() * a / b).exp(),
                MetricSpec::Power { lambda } => bound_power(a, b, lambda, big_r).unwrap(),
                _ => unreachable!(),
            };
            let r = 1.0 + (r_max.min(6.0) - 1.0) * rng.random_range(0.05..0.95);
            let Ok(case) = closed_form_for(&m, &w, &ann(r, big_r)) else { continue };
            let cmp = compare_with_solver(&case, 512).unwrap();
            sup = sup.max(cmp.sup_h_gap);
            en = en.max(cmp.energy_gap_rel);
            done += 1;
        }
    }
    let mut cd: f64 = 0.0;
    for (a, b, r, big_r) in [(1.0, 1.0, 1.5, 1.3), (1.0, 2.0, 1.3, 1.2), (2.0, 1.0, 2.0, 1.5)] {
        let c = theorem_c_profile(a, b, r, big_r).unwrap();
        let d = theorem_d_profile(a, b, 2.0, r, big_r).unwrap();
        for i in 0..=200 {
            let t = 1.0 + (r - 1.0) * i as f64 / 200.0;
            cd = cd.max(rel(c.h(t), d.h(t)));
        }
    }
    outcome(
        sup <= 1e-5 && en <= 1e-6 && cd <= 1e-12,
        format!("sup|H gap| = {sup:.2e}, energy rel gap = {en:.2e}, |C - D| at lambda=2 = {cd:.2e}"),
    )
}

fn min_ratio(res: &[PerturbationOutcome]) -> (f64, f64) {
    let r = variation::quadratic_ratios(res);
    (r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn c10() -> Outcome {
    let cases = [
        (MetricSpec::Constant, 1.0, 1.0, 1.6, 1.5),
        (MetricSpec::Power { lambda: 2.0 }, 1.0, 1.0, 1.9, 1.25),
        (MetricSpec::Power { lambda: 0.5 }, 2.0, 1.0, 1.8, 1.4),
        (MetricSpec::Power { lambda: 3.0 }, 1.0, 2.0, 1.3, 1.6),
        (table_metric(2.0), 1.0, 1.0, 1.5, 2.0),
    ];
    let mut min_de = f64::INFINITY;
    let mut rot: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (m, a, b, r, big_r) in cases {
        let w = wts(a, b);
        let sol = solve(&m, &w, &ann(r, big_r), 512).unwrap();
        let res = perturbation_test_with(&m, &w, &sol, &PerturbationFamily::standard(), &[0.005, -0.005, 0.01, -0.01, 0.02, -0.02], &PerturbationOptions::default()).unwrap();
        let e = sol.energy;
        for o in &res {
            if o.family.is_rotation() {
                rot = rot.max(o.delta_e.abs() / e);
            } else {
                min_de = min_de.min(o.delta_e / e);
            }
        }
        let (l, h) = min_ratio(&res);
        lo = lo.min(l);
        hi = hi.max(h);
    }
    outcome(
        min_de >= -1e-6 && rot <= 1e-10 && lo >= 3.0 && hi <= 5.0,
        format!("min dE/E = {min_de:.2e}, ratio range [{lo:.4}, {hi:.4}], rotation |dE|/E = {rot:.2e}"),
    )
}

fn c11() -> Outcome {
    let e1 = radial_energy(&MetricSpec::Constant, &wts(1.0, 1.0), &RadialProfile::identity(2.0, 512).unwrap()).unwrap().total;
    let e2 = radial_energy(&MetricSpec::Power { lambda: 1.0 }, &wts(2.0, 1.0), &RadialProfile::identity(2.0, 512).unwrap()).unwrap().total;
    let d1 = (e1 - 6.0 * PI).abs();
    let d2 = (e2 - 10.0 * PI * 2f64.ln()).abs();
    outcome(d1 <= 1e-9 && d2 <= 1e-9, format!("|E - 6 pi| = {d1:.2e}, |E - 10 pi ln 2| = {d2:.2e}"))
}

fn c12() -> Outcome {
    let start = Instant::now();
    let (code, doc) = cli_json(&["verify", "--metric", "power:2", "--a", "1", "--b", "1", "--r", "1.9", "--R", "1.25"]);
    let dt = start.elapsed();
    let checks = doc["checks"].as_array().cloned().unwrap_or_default();
    let failed: Vec<String> = checks.iter().filter(|c| c["pass"] != true).map(|c| c["name"].to_string()).collect();
    let passed = code == 0 && doc["passed"] == true && !checks.is_empty() && failed.is_empty();
    outcome(passed && dt < Duration::from_secs(30), format!("exit {code}, checks {}/{} passed {failed:?}, time={dt:.2?}", checks.len() - failed.len(), checks.len()))
}

use annulus_extremal::closed_forms::{theorem_c_profile, theorem_d_profile};
use annulus_extremal::variation;

fn main() -> ExitCode {
    let sols = random_solutions();
    let results: Vec<(&str, Outcome)> = vec![
        ("classical Nitsche bound", c1()),
        ("combined-energy bound inversion", c2()),
        ("power-metric bounds", c3()),
        ("identity recovery", c4()),
        ("conformal-exponent recovery", c5()),
        ("first integral", c6(&sols)),
        ("Euler-Lagrange residual", c7(&sols)),
        ("duality", c8(&sols)),
        ("closed-form oracles", c9()),
        ("minimality evidence", c10()),
        ("energy closed values", c11()),
        ("full verify pipeline", c12()),
    ];
    let mut all = true;
    for (k, (name, o)) in results.iter().enumerate() {
        all &= o.pass;
        println!("criterion {:>2} {}: {} ({})", k + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
