use angiodelay::besselkit::{gn, hn, pn};
use angiodelay::modes::{growth_rate, mu_n, mu_star};
use angiodelay::stationary::{lambda, solve_r0, solve_r1};
use angiodelay::tau1::{ln_solve, LnBvp};
use angiodelay::ModelParams;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (-1.3f64..1.7, 0.5f64..2.0, 0.05f64..0.95, -1.0f64..1.0).prop_map(|(la, sb, frac, lm)| ModelParams {
        alpha: 10f64.powf(la),
        sigma_bar: sb,
        sigma_tilde: sb * frac,
        mu: 10f64.powf(lm),
        tau: 0.0,
    })
}

proptest! {
    #[test]
    fn ratios_decrease_in_order(n in 1u32..40, r in 1e-3f64..30.0) {
        prop_assert!(pn(n, r).unwrap() < pn(n - 1, r).unwrap());
    }

    #[test]
    fn ratio_square_bound(r in 1e-3f64..30.0) {
        prop_assert!(pn(0, r).unwrap().powi(2) < 1.0 / (4.0 + r * r));
    }

    #[test]
    fn ratio_product_identity(r in 1e-3f64..30.0) {
        let (p0, p1) = (pn(0, r).unwrap(), pn(1, r).unwrap());
        prop_assert!((r * r * p0 * p1 + 2.0 * p0 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn g_is_increasing(n in 2u32..20, a in 0.05f64..29.0, gap in 1e-3f64..1.0) {
        prop_assert!(gn(n, a).unwrap() < gn(n, a + gap).unwrap());
    }

    #[test]
    fn positive_combination_stays_positive(
        n in 0u32..20,
        s2 in 0.1f64..10.0,
        slack in 1e-4f64..1.0,
        r in 1e-3f64..30.0,
    ) {
        let s1 = s2 * pn(n, 0.0).unwrap() / pn(n + 1, 0.0).unwrap() * (1.0 + slack);
        prop_assert!(s1 * pn(n + 1, r).unwrap() - s2 * pn(n, r).unwrap() > 0.0);
    }

    #[test]
    fn r0_grows_with_supply_rate(p in params(), factor in 1.01f64..5.0) {
        let a = solve_r0(&p).unwrap();
        let b = solve_r0(&p.with_alpha(p.alpha * factor)).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn r1_positive_and_grows_with_aggressiveness(p in params(), factor in 1.01f64..5.0) {
        let r0 = solve_r0(&p).unwrap();
        let a = solve_r1(&p, r0).unwrap();
        let b = solve_r1(&p.with_mu(p.mu * factor), r0).unwrap();
        prop_assert!(a > 0.0 && b > a);
    }

    #[test]
    fn mode1_lambda_identity(p in params()) {
        let r0 = solve_r0(&p).unwrap();
        let l = lambda(&p, r0).unwrap();
        let p0 = pn(0, r0).unwrap();
        let lhs = l / (p.alpha + hn(1, r0).unwrap());
        let rhs = p.alpha * p.sigma_bar * r0 * p0 / (p.alpha + r0 * p0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn thresholds_scale_inversely_with_supply(
        n in 2u32..64, r0 in 0.2f64..20.0, alpha in 0.05f64..50.0, k in 0.1f64..10.0,
    ) {
        let base = mu_n(n, r0, alpha, 1.0).finite().unwrap();
        let scaled = mu_n(n, r0, alpha, k).finite().unwrap();
        prop_assert!((scaled * k - base).abs() <= 1e-12 * base.abs());
    }

    #[test]
    fn mode2_flips_at_threshold(r0 in 0.2f64..20.0, alpha in 0.05f64..50.0, sb in 0.5f64..2.0) {
        let m = mu_star(r0, alpha, sb).unwrap();
        prop_assert!(growth_rate(2, m * (1.0 - 1e-6), r0, alpha, sb) < 0.0);
        prop_assert!(growth_rate(2, m * (1.0 + 1e-6), r0, alpha, sb) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_solver_is_linear(n in 0u32..6, a in -3.0f64..3.0, b in -3.0f64..3.0, radius in 0.5f64..5.0) {
        let f1 = move |r: f64| a * (r * 0.9).cos();
        let f2 = move |r: f64| b * r * r + 1.0;
        let solve = |f: &dyn Fn(f64) -> f64| {
            ln_solve(&LnBvp { n, radius, forcing: f, boundary_value: 0.0 }).unwrap()
        };
        let sum = solve(&|r| f1(r) + f2(r));
        let parts = solve(&f1).axpy(1.0, &solve(&f2));
        let scale = sum.max_abs().max(1e-12);
        for (x, y) in sum.values.iter().zip(&parts.values) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn green_solver_recovers_polynomials(
        n in 0u32..8, c in -2.0f64..2.0, a in -2.0f64..2.0, radius in 0.5f64..4.0,
    ) {
        // u = c r^n + a r^(n+2) gives forcing -4 a (n+1) r^n
        let nf = f64::from(n);
        let exact = |r: f64| c * r.powf(nf) + a * r.powf(nf + 2.0);
        let sol = ln_solve(&LnBvp {
            n,
            radius,
            forcing: move |r: f64| -4.0 * a * (nf + 1.0) * r.powf(nf),
            boundary_value: exact(radius),
        })
        .unwrap();
        let scale = (c.abs() + a.abs()) * radius.powf(nf + 2.0).max(1.0);
        for (r, u) in sol.nodes.iter().zip(&sol.values) {
            prop_assert!((u - exact(*r)).abs() <= 1e-7 * scale.max(1e-3));
        }
    }
}
