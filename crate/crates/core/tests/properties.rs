use std::f64::consts::PI;

use annulus_extremal::closed_forms::{bound_power, closed_form_for};
use annulus_extremal::energy::PolarGridMap;
use annulus_extremal::quadrature::integrate_with;
use annulus_extremal::variation::duality_report;
use annulus_extremal::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn wts(a: f64, b: f64) -> Weights {
    Weights::new(a, b).unwrap()
}

fn metric_strategy() -> impl Strategy<Value = MetricSpec> {
    prop_oneof![
        Just(MetricSpec::Constant),
        (0.2f64..3.5).prop_filter("λ near 1", |l| (l - 1.0).abs() > 0.15).prop_map(|lambda| MetricSpec::Power { lambda }),
        (0.1f64..1.0).prop_map(|k| {
            let s: Vec<f64> = (0..40).map(|i| 6f64.powf(i as f64 / 39.0)).collect();
            MetricSpec::Tabulated(Table::sample(&s, |x| (-k * x).exp()).unwrap())
        }),
    ]
}

/// Feasible instance strictly inside the admissible range.
fn instance_strategy() -> impl Strategy<Value = (MetricSpec, Weights, AnnulusPair)> {
    (metric_strategy(), 0.5f64..2.0, 0.5f64..2.0, 1.1f64..3.0, 0.05f64..0.95).prop_filter_map("infeasible", |(m, a, b, big_r, u)| {
        let w = wts(a, b);
        let r_max = nitsche_bound(&m, &w, big_r).ok()?;
        let r = 1.0 + (r_max.min(6.0) - 1.0) * u;
        (r > 1.0 + 1e-3).then(|| (m, w, AnnulusPair::new(r, big_r).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_metrics_are_exact(s in 1.0f64..50.0, lambda in -3.0f64..4.0) {
        prop_assert_eq!(eval_rho(&MetricSpec::Constant, s).unwrap(), 1.0);
        prop_assert_eq!(eval_rho(&MetricSpec::Power { lambda }, s).unwrap(), s.powf(-lambda));
    }

    #[test]
    fn tabulated_power_law(lambda in -2.0f64..3.0, big_r in 1.5f64..10.0, u in 0.0f64..1.0) {
        let s: Vec<f64> = (0..17).map(|i| big_r.powf(i as f64 / 16.0)).collect();
        let m = MetricSpec::Tabulated(Table::sample(&s, |x| x.powf(-lambda)).unwrap());
        for &x in &s {
            prop_assert!((eval_rho(&m, x).unwrap() - x.powf(-lambda)).abs() <= 1e-12 * x.powf(-lambda));
        }
        let x = big_r.powf(u);
        prop_assert!((eval_rho(&m, x).unwrap() - x.powf(-lambda)).abs() <= 1e-6 * x.powf(-lambda));
    }

    #[test]
    fn weight_minimum_is_a_lower_bound(m in metric_strategy(), a in 0.5f64..2.0, b in 0.5f64..2.0, big_r in 1.1f64..5.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let w = wts(a, b);
        let min = minimize_weight(&m, &w, big_r).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2048 {
            let s = rng.random_range(1.0..=big_r);
            prop_assert!(min.w_min <= weight(&m, &w, s).unwrap() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn quadrature_is_additive(k in 0.1f64..5.0, c in 1.1f64..3.0, mid in 0.05f64..0.95) {
        let f = |s: f64| (k * s).sin().powi(2) / (s - 1.0 + 1e-3).sqrt();
        let b = 1.0 + (c - 1.0) * mid;
        let opts = QuadOptions::rel(1e-12);
        let whole = integrate_with(f, 1.0, c, &[], &opts).unwrap();
        let left = integrate_with(f, 1.0, b, &[], &opts).unwrap();
        let right = integrate_with(f, b, c, &[], &opts).unwrap();
        let tol = whole.abs_error_estimate + left.abs_error_estimate + right.abs_error_estimate + 1e-13 * whole.value.abs();
        prop_assert!((whole.value - left.value - right.value).abs() <= tol.max(4e-12 * whole.value.abs()));
    }

    #[test]
    fn cumulative_is_nondecreasing(k in 0.5f64..20.0, n in 2usize..60) {
        let grid: Vec<f64> = (1..=n).map(|i| 1.0 + 2.0 * i as f64 / n as f64).collect();
        let c = cumulative(|s: f64| (k * s).cos().powi(2), 1.0, &grid, 1e-10).unwrap();
        prop_assert!(c.values[0] >= 0.0);
        prop_assert!(c.values.windows(2).all(|w| w[1] >= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_decreases_in_alpha(m in metric_strategy(), a in 0.5f64..2.0, b in 0.5f64..2.0, big_r in 1.1f64..3.0, u in 0.01f64..5.0, v in 0.01f64..5.0) {
        prop_assume!((u - v).abs() > 1e-3);
        let w = wts(a, b);
        let (a0, _) = alpha0(&m, &w, big_r).unwrap();
        let (lo, hi) = (a0 + u.min(v), a0 + u.max(v));
        prop_assert!(phi(&m, &w, big_r, lo).unwrap() > phi(&m, &w, big_r, hi).unwrap());
    }

    #[test]
    fn solved_instances_are_consistent((m, w, ann) in instance_strategy()) {
        let sol = solve(&m, &w, &ann, 256).unwrap();
        prop_assert!(sol.alpha >= sol.alpha0);
        prop_assert!((phi(&m, &w, ann.big_r, sol.alpha).unwrap() - ann.r).abs() <= 1e-10 * ann.r);
        let p = &sol.profile;
        for i in 0..p.len() {
            let (h, _) = eval_h(p, p.t_samples()[i]).unwrap();
            prop_assert!((h - p.h_samples()[i]).abs() <= 1e-12);
        }
        prop_assert!(first_integral_deviation(&m, &w, p, sol.alpha).unwrap() <= 1e-6);
        let d = duality_report(&m, &w, &sol).unwrap();
        prop_assert!(d.gap <= 1e-6, "gap {}", d.gap);
        prop_assert!(sol.energy > 0.0);
    }

    #[test]
    fn conformal_exponent_is_metric_independent(m in metric_strategy(), a in 0.5f64..2.0, b in 0.5f64..2.0, big_r in 1.1f64..3.0) {
        let w = wts(a, b);
        let r = big_r.powf(a / b);
        let sol = solve(&m, &w, &AnnulusPair::new(r, big_r).unwrap(), 256).unwrap();
        prop_assert!(sol.alpha.abs() <= 1e-8 * (1.0 + sol.alpha0.abs()));
        for i in 0..=200 {
            let t = (1.0 + (r - 1.0) * i as f64 / 200.0).min(r);
            prop_assert!((sol.profile.eval(t).unwrap().0 - t.powf(b / a)).abs() <= 1e-8);
        }
    }

    #[test]
    fn grid_energy_is_rotation_invariant(n in 16usize..64, r in 1.2f64..3.0, k in 0.05f64..0.5) {
        let t = PolarGridMap::uniform_t(r, n);
        let g = PolarGridMap::from_fn(t, n, |t, th| Complex64::from_polar(t, th) * (1.0 + k * (t - 1.0) * (r - t) * (1.0 + th.cos()))).unwrap();
        let m = MetricSpec::Power { lambda: 0.5 };
        let w = wts(1.0, 1.3);
        let e0 = grid_energy(&m, &w, &g).unwrap().total;
        prop_assert!(e0 > 0.0);
        for beta in [0.1, 1.0, PI] {
            let e = grid_energy(&m, &w, &g.rotated(beta)).unwrap().total;
            prop_assert!((e - e0).abs() <= 1e-12 * e0);
        }
    }

    #[test]
    fn closed_forms_meet_boundary_values(lambda in prop_oneof![Just(0.0), Just(2.0), 0.3f64..3.5], a in 0.5f64..2.0, b in 0.5f64..2.0, big_r in 1.1f64..3.0, u in 0.05f64..1.0) {
        prop_assume!((lambda - 1.0).abs() > 0.15);
        let m = if lambda == 0.0 { MetricSpec::Constant } else { MetricSpec::Power { lambda } };
        let r_max = if lambda == 0.0 { (big_r.acosh() * a / b).exp() } else { bound_power(a, b, lambda, big_r).unwrap() };
        let r = 1.0 + (r_max.min(6.0) - 1.0) * u;
        prop_assume!(r > 1.0 + 1e-3);
        let case = closed_form_for(&m, &wts(a, b), &AnnulusPair::new(r, big_r).unwrap()).unwrap();
        prop_assert!((case.h(1.0) - 1.0).abs() <= 1e-10);
        prop_assert!((case.h(r) - big_r).abs() <= 1e-10);
    }
}
