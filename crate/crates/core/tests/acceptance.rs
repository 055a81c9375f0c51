//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines appear in order. The
//! process fails on any unexpected FAIL. Criteria listed in
//! `KNOWN_FAILURES` are evaluated exactly as stated and still print FAIL;
//! they are left out of the exit status because the stated bound is
//! mathematically out of reach (see the README).

use std::time::{Duration, Instant};

use angiodelay::besselkit::{gn, identity_residuals, log_grid, pn, IdentityKind};
use angiodelay::modes::{critical_radius, decay_bound, growth_rate, mu_n, mu_star, q_functions, rho0_trajectory, MAX_MODE};
use angiodelay::radialsim::{run, run_with, RunOptions};
use angiodelay::stationary::{solve_r0, solve_stationary_delayed, StationaryFields};
use angiodelay::tau1::rho1_evolve;
use angiodelay::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_FAILURES: &[u32] = &[4];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn baseline() -> ModelParams {
    ModelParams::new(1.0, 1.0, 0.5, 1.0, 0.0).unwrap()
}

fn standard_grid() -> Vec<f64> {
    log_grid(0.1, 30.0, 50)
}

fn critical_radius_value() -> Outcome {
    let r = critical_radius();
    outcome((r - 2.412305).abs() <= 1e-5, format!("R# = {r:.9}"))
}

fn g2_at_4() -> Outcome {
    let g = gn(2, 4.0).unwrap();
    outcome((g - 0.553598).abs() <= 5e-6, format!("G_2(4) = {g:.9}"))
}

fn identity_battery() -> Outcome {
    let table = identity_residuals(&standard_grid(), 10).unwrap();
    let (mut exact, mut deriv, mut violations) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (info, max) in table.max_by_identity() {
        match info.kind {
            IdentityKind::Exact => exact = exact.max(max),
            IdentityKind::Derivative => deriv = deriv.max(max),
            IdentityKind::Inequality => violations = violations.max(max),
        }
    }
    outcome(
        exact <= 1e-9 && deriv <= 1e-6 && violations == 0.0,
        format!("exact {exact:.2e}, finite-difference {deriv:.2e}, inequality violation {violations:.1e}"),
    )
}

fn ratio_limits() -> Outcome {
    let origin = (0..=50u32)
        .map(|n| (pn(n, 0.0).unwrap() - 1.0 / (2.0 * f64::from(n) + 2.0)).abs())
        .fold(0.0, f64::max);
    let far: Vec<f64> = (0..=10u32).map(|n| (100.0 * pn(n, 100.0).unwrap() - 1.0).abs()).collect();
    let worst = far.iter().cloned().fold(0.0, f64::max);
    let bad: Vec<u32> = (0..=10u32).filter(|&n| far[n as usize] > 2e-2).collect();
    outcome(
        origin <= 1e-14 && bad.is_empty(),
        format!(
            "origin error {origin:.1e}; max |100 P_n(100) - 1| = {worst:.4} (n = 10), orders over 2e-2: {bad:?}"
        ),
    )
}

fn inequality_suites() -> Outcome {
    let grid = standard_grid();
    let mut violations = 0usize;
    for &r in &grid {
        if pn(0, r).unwrap().powi(2) >= 1.0 / (4.0 + r * r) {
            violations += 1;
        }
        for n in 2..=MAX_MODE {
            let q = q_functions(n, r).unwrap();
            if !(q.q1 > 0.0 && q.q2 > 0.0 && q.q3 > 0.0) {
                violations += 1;
            }
        }
        for alpha in [0.1, 1.0, 10.0] {
            for n in 2..MAX_MODE {
                let a = mu_n(n, r, alpha, 1.0).finite().unwrap();
                let b = mu_n(n + 1, r, alpha, 1.0).finite().unwrap();
                if !(a < b) {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations"))
}

fn threshold_monotone() -> Outcome {
    let alphas = log_grid(0.05, 50.0, 200);
    let mut bad = Vec::new();
    for r0 in [2.5, 3.0, 5.0] {
        let values: Vec<f64> = alphas.iter().map(|&a| mu_star(r0, a, 1.0).unwrap()).collect();
        if !values.windows(2).all(|w| w[1] < w[0]) {
            bad.push(r0);
        }
    }
    outcome(
        bad.is_empty(),
        format!("decreasing at r0 = 2.5, 3, 5 (non-monotone: {bad:?}); r0 = 1.5 lies below R# and is not asserted"),
    )
}

fn first_order_radius_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mus = log_grid(0.1, 10.0, 50);
    let mut bad = 0;
    for _ in 0..100 {
        let sb = rng.gen_range(0.2..5.0);
        let p = ModelParams {
            alpha: 10f64.powf(rng.gen_range(-2.0..2.0)),
            sigma_bar: sb,
            sigma_tilde: sb * rng.gen_range(0.01..0.99),
            mu: 1.0,
            tau: 0.0,
        };
        let r0 = solve_r0(&p).unwrap();
        let r1: Vec<f64> = mus
            .iter()
            .map(|&m| StationaryFields::new(&p.with_mu(m), r0).unwrap().r1)
            .collect();
        if !(r1[0] > 0.0 && r1.windows(2).all(|w| w[1] > w[0])) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} of 100 parameter sets fail"))
}

fn delayed_consistency() -> Outcome {
    let p = baseline();
    let f = StationaryFields::solve(&p).unwrap();
    let mut ratios = Vec::new();
    for tau in [0.04, 0.02, 0.01] {
        match solve_stationary_delayed(&p.with_tau(tau), 1e-13) {
            Ok(d) => ratios.push((d.radius - f.r0 - tau * f.r1).abs() / (tau * tau)),
            Err(e) => return outcome(false, format!("tau = {tau}: {e}")),
        }
    }
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    outcome(
        hi.is_finite() && hi / lo <= 2.0,
        format!("|R - r0 - tau R1| / tau^2 = {ratios:.6?}"),
    )
}

fn mode_one_neutral() -> Outcome {
    let p = baseline();
    let base = StationaryFields::solve(&p).unwrap();
    let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
    let z = rho0_trajectory(1, 0.3, p.mu, base.r0, p.alpha, p.sigma_bar, &t).unwrap();
    let exact = z.values.iter().all(|&v| v == 0.3);
    let traj = rho1_evolve(1, &base, 0.3, -0.2, &t).unwrap();
    let drift = traj.rho1.iter().map(|v| (v + 0.2).abs()).fold(0.0, f64::max);
    outcome(
        exact && drift <= 1e-8,
        format!("zeroth order constant: {exact}; first-order drift {drift:.2e}"),
    )
}

/// Largest `ln |v(t)| - ln C - s t` over `t` in `[1, t_max]`, with `C`
/// fitted on `[1, 4]`.
fn envelope_excess(t: &[f64], v: &[f64], s: f64) -> f64 {
    let logs: Vec<(f64, f64)> = t
        .iter()
        .zip(v)
        .filter(|(t, v)| **t >= 1.0 && v.abs() > 0.0)
        .map(|(t, v)| (*t, v.abs().ln() - s * t))
        .collect();
    let fit = logs
        .iter()
        .filter(|(t, _)| *t <= 4.0)
        .map(|p| p.1)
        .fold(f64::MIN, f64::max);
    logs.iter().map(|p| p.1 - fit).fold(f64::MIN, f64::max)
}

fn decay_envelopes() -> Outcome {
    let base_params = baseline();
    let r0 = solve_r0(&base_params).unwrap();
    let ms = mu_star(r0, base_params.alpha, base_params.sigma_bar).unwrap();
    let p = base_params.with_mu(0.5 * ms);
    let base = StationaryFields::new(&p, r0).unwrap();
    let delta2 = decay_bound(p.mu, r0, p.alpha, p.sigma_bar).unwrap();
    let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.01).collect();
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [0u32, 2, 3, 5, 10] {
        let rate = growth_rate(n, p.mu, r0, p.alpha, p.sigma_bar);
        let zeroth = if n == 0 { rate } else { -delta2 * f64::from(n).powi(3) };
        let z = rho0_trajectory(n, 1.0, p.mu, r0, p.alpha, p.sigma_bar, &t).unwrap();
        let first = rho1_evolve(n, &base, 1.0, 0.0, &t).unwrap();
        let e0 = envelope_excess(&t, &z.values, zeroth);
        let e1 = envelope_excess(&t, &first.rho1, 0.5 * zeroth);
        // a relative slack of 1e-9 absorbs rounding in the logarithms
        let pass = e0 <= 1e-9 && e1 <= 1e-9;
        ok &= pass;
        notes.push(format!("n={n}: rate {rate:.4}, excess {e0:.1e}/{e1:.1e}"));
    }
    let unstable = baseline().with_mu(2.0 * ms);
    let grow = growth_rate(2, unstable.mu, r0, unstable.alpha, unstable.sigma_bar);
    let z = rho0_trajectory(2, 1e-3, unstable.mu, r0, unstable.alpha, unstable.sigma_bar, &t).unwrap();
    let grows = grow > 0.0 && z.values.windows(2).all(|w| w[1] > w[0]);
    ok &= grows;
    notes.push(format!("mode 2 at 2 mu*: rate {grow:.4}"));
    outcome(ok, format!("delta2 = {delta2:.5}; {}", notes.join("; ")))
}

fn simulator_attractor() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for tau in [0.0, 0.02] {
        let p = baseline().with_mu(10.0).with_tau(tau);
        let target = solve_stationary_delayed(&p, 1e-13).unwrap().radius;
        for f in [0.5, 1.5] {
            let opts = RunOptions {
                stop_on_convergence: true,
                record_every: 1000,
            };
            let res = run_with(&p, f * target, 200.0, 0.005, opts).unwrap();
            let err = (res.summary.limit_radius - target).abs() / target;
            let pass = res.summary.converged && err <= 1e-5;
            ok &= pass;
            notes.push(format!("tau={tau} start {f}R*: converged {} err {err:.1e}", res.summary.converged));
        }
        let radii: Vec<f64> = [0.005, 0.0025, 0.00125]
            .iter()
            .map(|&dt| run(&p, 0.5 * target, 1.0, dt).unwrap().summary.limit_radius)
            .collect();
        let order = ((radii[0] - radii[1]) / (radii[1] - radii[2])).abs().log2();
        ok &= order >= 1.9;
        notes.push(format!("tau={tau} order {order:.3}"));
    }
    outcome(ok, notes.join("; "))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Option<Duration>, Check); 11] = [
        (1, "critical radius", Some(Duration::from_secs(1)), critical_radius_value),
        (2, "G_2(4)", Some(Duration::from_secs(1)), g2_at_4),
        (3, "identity battery", Some(Duration::from_secs(5)), identity_battery),
        (4, "ratio limits at 0 and 100", None, ratio_limits),
        (5, "inequality suites", Some(Duration::from_secs(30)), inequality_suites),
        (6, "threshold decreasing in alpha", None, threshold_monotone),
        (7, "first-order radius increasing in mu", None, first_order_radius_monotone),
        (8, "delayed stationary consistency", Some(Duration::from_secs(60)), delayed_consistency),
        (9, "mode-1 neutrality", None, mode_one_neutral),
        (10, "decay envelopes and instability", None, decay_envelopes),
        (11, "simulator attractor", Some(Duration::from_secs(300)), simulator_attractor),
    ];
    let mut unexpected = Vec::new();
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let in_time = budget.is_none_or(|b| took <= b);
        let passed = out.passed && in_time;
        let budget_note = budget.map_or(String::new(), |b| format!(" budget {:?}", b));
        println!(
            "{} criterion {id:>2} {name}: {} [{:.2?}{budget_note}]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            took
        );
        if !passed {
            failed.push(id);
            if !KNOWN_FAILURES.contains(&id) {
                unexpected.push(id);
            }
        }
    }
    println!(
        "acceptance: {} of 11 pass; failing {:?}; unexpected {:?}",
        11 - failed.len(),
        failed,
        unexpected
    );
    for id in KNOWN_FAILURES.iter().filter(|id| !failed.contains(id)) {
        println!("note: criterion {id} is listed as a known failure but passed; the list is stale");
    }
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
