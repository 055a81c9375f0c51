//! Property suites across all modules, collected into one report.
//!
//! Every property yields a pass flag and its largest residual. Equality
//! properties compare a residual against a tolerance; strict inequalities
//! report the largest normalized violation, which must be zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::besselkit::{h_ratio, i_n, identity_residuals_with, log_grid, IdentityInfo, IdentityKind, RatioRecurrence, IDENTITIES};
use crate::modes::{coeff_a, dmu_star_dalpha, dmu_star_dalpha_fd, growth_rate, mu_n, mu_star, q_functions, MAX_MODE};
use crate::params::ModelParams;
use crate::quad::{simpson, RadialProfile, PROFILE_NODES};
use crate::radialsim::{step, SimState};
use crate::stationary::{delayed_field, solve_r0, solve_r0_dirichlet, solve_stationary_delayed, StationaryFields};
use crate::tau1::{ln_solve, LnBvp, ModeFields};
use crate::Result;

/// Tolerance for algebraic identities on the Bessel grid.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for identities checked by finite differences.
pub const DERIVATIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub r_grid: Vec<f64>,
    pub n_max: u32,
    /// Ratio evaluator under test; swap in a faulty one to check that the
    /// suite notices.
    pub ratio: RatioRecurrence,
    pub seed: u64,
    /// Size of each randomized parameter sample.
    pub samples: usize,
    /// Include the delayed stationary and simulator properties.
    pub include_delay: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            r_grid: log_grid(0.1, 30.0, 50),
            n_max: 10,
            ratio: RatioRecurrence::default(),
            seed: 0,
            samples: 32,
            include_delay: true,
        }
    }
}

impl VerifyConfig {
    /// A ratio evaluator with a truncated tail and a wrong seed.
    pub fn faulty_ratio() -> RatioRecurrence {
        RatioRecurrence {
            extra_orders: 0,
            seed_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub id: String,
    pub module: &'static str,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub checks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub all_passed: bool,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
    /// The identity catalogue, so a reader can match `identity.*` ids.
    pub identities: Vec<IdentityInfo>,
}

impl VerifyReport {
    pub fn property(&self, id: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.id == id)
    }

    pub fn failures(&self) -> Vec<&PropertyResult> {
        self.properties.iter().filter(|p| !p.passed).collect()
    }
}

/// Running maximum of a residual against a tolerance.
struct Tally {
    max: f64,
    checks: usize,
    broken: bool,
}

impl Tally {
    fn new() -> Self {
        Self {
            max: 0.0,
            checks: 0,
            broken: false,
        }
    }

    fn add(&mut self, residual: f64) {
        self.checks += 1;
        if residual.is_nan() {
            self.broken = true;
        } else {
            self.max = self.max.max(residual);
        }
    }

    /// Records a strict inequality `margin > 0`, normalized by `scale`.
    fn strict(&mut self, margin: f64, scale: f64) {
        let v = if margin > 0.0 {
            0.0
        } else {
            (-margin / scale.abs().max(f64::MIN_POSITIVE)).max(f64::EPSILON)
        };
        self.add(v);
    }

    fn finish(self, id: impl Into<String>, module: &'static str, tolerance: f64) -> PropertyResult {
        PropertyResult {
            id: id.into(),
            module,
            passed: !self.broken && self.max <= tolerance,
            max_residual: self.max,
            tolerance,
            checks: self.checks,
        }
    }
}

fn failed(id: &str, module: &'static str, tolerance: f64) -> PropertyResult {
    PropertyResult {
        id: id.into(),
        module,
        passed: false,
        max_residual: f64::INFINITY,
        tolerance,
        checks: 0,
    }
}

/// Turns a fallible suite into a failed property rather than an error.
fn guard(id: &str, module: &'static str, tolerance: f64, body: impl FnOnce(&mut Tally) -> Result<()>) -> PropertyResult {
    let mut t = Tally::new();
    match body(&mut t) {
        Ok(()) => t.finish(id, module, tolerance),
        Err(_) => failed(id, module, tolerance),
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let alpha = 10f64.powf(rng.gen_range(-1.3..1.7));
    let sigma_bar = rng.gen_range(0.5..2.0);
    let sigma_tilde = sigma_bar * rng.gen_range(0.05..0.95);
    let mu = 10f64.powf(rng.gen_range(-1.0..1.0));
    ModelParams {
        alpha,
        sigma_bar,
        sigma_tilde,
        mu,
        tau: 0.0,
    }
}

pub fn run_suite(config: &VerifyConfig) -> Result<VerifyReport> {
    let mut props = Vec::new();
    bessel_suite(config, &mut props)?;
    stationary_suite(config, &mut props);
    modes_suite(config, &mut props);
    tau1_suite(config, &mut props);
    if config.include_delay {
        delay_suite(&mut props);
    }
    io_suite(&mut props);
    Ok(VerifyReport {
        all_passed: props.iter().all(|p| p.passed),
        seed: config.seed,
        properties: props,
        identities: IDENTITIES.to_vec(),
    })
}

fn bessel_suite(config: &VerifyConfig, out: &mut Vec<PropertyResult>) -> Result<()> {
    const M: &str = "besselkit";
    let ratio = &config.ratio;
    let p = |n: u32, r: f64| ratio.eval(n, r);
    let grid = &config.r_grid;

    let table = identity_residuals_with(ratio, grid, config.n_max)?;
    for (info, max) in table.max_by_identity() {
        let tol = match info.kind {
            IdentityKind::Exact => EXACT_TOL,
            IdentityKind::Derivative => DERIVATIVE_TOL,
            IdentityKind::Inequality => 0.0,
        };
        let checks = table.rows.iter().filter(|r| r.identity == info.id).count();
        let nan = table
            .rows
            .iter()
            .any(|r| r.identity == info.id && r.residual.is_nan());
        out.push(PropertyResult {
            id: format!("identity.{}", info.id),
            module: M,
            passed: !nan && max <= tol,
            max_residual: max,
            tolerance: tol,
            checks,
        });
    }

    let mut t = Tally::new();
    for n in 0..=config.n_max {
        for &r in grid {
            let direct = i_n(n + 1, r) / (r * i_n(n, r));
            t.add((p(n, r) - direct).abs() / direct);
        }
    }
    out.push(t.finish("ratio_matches_bessel", M, 1e-12));

    let mut t = Tally::new();
    for n in 0..=50 {
        t.add((p(n, 0.0) - 1.0 / (2.0 * f64::from(n) + 2.0)).abs());
    }
    out.push(t.finish("ratio_at_origin", M, 1e-14));

    let mut t = Tally::new();
    for &r in grid {
        let bound = 1.0 / (4.0 + r * r);
        t.strict(bound - p(0, r).powi(2), bound);
    }
    out.push(t.finish("ratio_square_bound", M, 0.0));

    let mut t = Tally::new();
    for n in 2..=config.n_max.max(2) {
        let g: Vec<f64> = grid.iter().map(|&r| r * r * (p(1, r) - p(n, r))).collect();
        for w in g.windows(2) {
            t.strict(w[1] - w[0], w[1]);
        }
    }
    out.push(t.finish("g_increasing", M, 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = Tally::new();
    for _ in 0..config.samples {
        let n = rng.gen_range(0..=config.n_max);
        let s2 = 10f64.powf(rng.gen_range(-1.0..1.0));
        // just above the smallest admissible first weight
        let s1 = s2 * p(n, 0.0) / p(n + 1, 0.0) * (1.0 + 10f64.powf(rng.gen_range(-3.0..0.0)));
        for &r in grid {
            let (a, b) = (s1 * p(n + 1, r), s2 * p(n, r));
            t.strict(a - b, a);
        }
    }
    out.push(t.finish("positive_combination", M, 0.0));

    let mut t = Tally::new();
    for &r in grid {
        let (p0, p1) = (p(0, r), p(1, r));
        t.add((r * r * p0 * p1 + 2.0 * p0 - 1.0).abs());
    }
    out.push(t.finish("ratio_product_identity", M, 1e-12));
    Ok(())
}

fn stationary_suite(config: &VerifyConfig, out: &mut Vec<PropertyResult>) {
    const M: &str = "stationary";
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5157);
    let sets: Vec<ModelParams> = (0..config.samples).map(|_| random_params(&mut rng)).collect();

    out.push(guard("r0_increasing_in_alpha", M, 0.0, |t| {
        for base in sets.iter().take(8) {
            let mut prev = None;
            for alpha in log_grid(0.05, 50.0, 40) {
                let r = solve_r0(&base.with_alpha(alpha))?;
                if let Some(q) = prev {
                    t.strict(r - q, r);
                }
                prev = Some(r);
            }
        }
        Ok(())
    }));

    out.push(guard("r0_dirichlet_limit", M, 1e-5, |t| {
        for base in sets.iter().take(8) {
            let far = solve_r0(&base.with_alpha(1e7))?;
            let limit = solve_r0_dirichlet(base.sigma_bar, base.sigma_tilde)?;
            t.add((far - limit).abs() / limit);
        }
        Ok(())
    }));

    out.push(guard("mass_balance", M, 1e-10, |t| {
        for p in &sets {
            let f = StationaryFields::solve(p)?;
            let h = f.r0 / (PROFILE_NODES - 1) as f64;
            let vals: Vec<f64> = (0..PROFILE_NODES)
                .map(|k| {
                    let r = k as f64 * h;
                    (f.sigma0(r) - p.sigma_tilde) * r
                })
                .collect();
            t.add(simpson(&vals, h).abs() / (p.sigma_bar * f.r0 * f.r0));
        }
        Ok(())
    }));

    out.push(guard("r1_increasing_in_mu", M, 0.0, |t| {
        for base in &sets {
            let r0 = solve_r0(base)?;
            let mut prev = None;
            for mu in log_grid(0.1, 10.0, 20) {
                let r1 = StationaryFields::new(&base.with_mu(mu), r0)?.r1;
                t.strict(r1, 1.0);
                if let Some(q) = prev {
                    t.strict(r1 - q, r1);
                }
                prev = Some(r1);
            }
        }
        Ok(())
    }));

    out.push(guard("first_order_nutrient_boundary", M, 1e-10, |t| {
        for p in &sets {
            let f = StationaryFields::solve(p)?;
            let bc = f.sigma1_prime(f.r0) + p.alpha * f.sigma1(f.r0) + f.lambda * f.r1;
            t.add(bc.abs() / (f.lambda * f.r1).abs().max(1e-300));
        }
        Ok(())
    }));

    let alpha_part = sets.iter().take(8).collect::<Vec<_>>();
    out.push(guard("mode1_lambda_identity", M, 1e-12, |t| {
        for p in alpha_part {
            let f = StationaryFields::solve(p)?;
            let (a, r0, p0) = (p.alpha, f.r0, f.p0_r0);
            let lhs = f.lambda / (a + h_ratio(1, r0));
            let rhs = a * p.sigma_bar * r0 * p0 / (a + r0 * p0);
            t.add((lhs - rhs).abs() / rhs.abs());
        }
        Ok(())
    }));
}

fn modes_suite(config: &VerifyConfig, out: &mut Vec<PropertyResult>) {
    const M: &str = "modes";
    let grid = &config.r_grid;

    out.push(guard("q_positivity", M, 0.0, |t| {
        for n in 2..=MAX_MODE {
            for &r in grid {
                let q = q_functions(n, r)?;
                let scale = q.q1.abs().max(q.q2.abs()).max(q.q3.abs());
                t.strict(q.q1, scale);
                t.strict(q.q2, scale);
                t.strict(q.q3, scale);
            }
        }
        Ok(())
    }));

    out.push(guard("threshold_ordering", M, 0.0, |t| {
        for alpha in [0.1, 1.0, 10.0] {
            for &r in grid {
                let mut prev = mu_n(2, r, alpha, 1.0).finite().unwrap_or(f64::NAN);
                for n in 3..=MAX_MODE {
                    let next = mu_n(n, r, alpha, 1.0).finite().unwrap_or(f64::NAN);
                    t.strict(next - prev, next);
                    prev = next;
                }
            }
        }
        Ok(())
    }));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7a11);
    out.push(guard("threshold_sign_flip", M, 0.0, |t| {
        for _ in 0..config.samples {
            let r0 = rng.gen_range(0.5..10.0);
            let alpha = 10f64.powf(rng.gen_range(-1.3..1.7));
            let sb = rng.gen_range(0.5..2.0);
            let ms = mu_star(r0, alpha, sb)?;
            let below = growth_rate(2, ms * (1.0 - 1e-6), r0, alpha, sb);
            let above = growth_rate(2, ms * (1.0 + 1e-6), r0, alpha, sb);
            let scale = coeff_a(2, r0);
            t.strict(-below, scale);
            t.strict(above, scale);
        }
        Ok(())
    }));

    out.push(guard("threshold_slope_sign", M, 0.0, |t| {
        for r0 in [1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
            for alpha in log_grid(0.05, 50.0, 25) {
                let exact = dmu_star_dalpha(r0, alpha, 1.0)?;
                let fd = dmu_star_dalpha_fd(r0, alpha, 1.0)?;
                t.strict(exact * fd, exact * exact);
            }
        }
        Ok(())
    }));

    out.push(guard("supply_scaling", M, 1e-12, |t| {
        for &r in grid {
            for n in [2, 3, 7, 20, MAX_MODE] {
                let base = mu_n(n, r, 1.0, 1.0).finite().unwrap_or(f64::NAN);
                for k in [0.3, 2.0, 7.5] {
                    let scaled = mu_n(n, r, 1.0, k).finite().unwrap_or(f64::NAN);
                    t.add((scaled * k - base).abs() / base.abs());
                }
            }
        }
        Ok(())
    }));
}

fn tau1_suite(config: &VerifyConfig, out: &mut Vec<PropertyResult>) {
    const M: &str = "tau1";
    out.push(guard("green_linearity", M, 1e-10, |t| {
        for n in [0, 1, 2, 5] {
            let f1 = |r: f64| (r * 1.3).sin() + r * r;
            let f2 = |r: f64| (0.7 * r).exp() - 1.0;
            let sum = |r: f64| f1(r) + f2(r);
            let solve = |f: &dyn Fn(f64) -> f64| {
                ln_solve(&LnBvp {
                    n,
                    radius: 2.0,
                    forcing: f,
                    boundary_value: 0.0,
                })
            };
            let (a, b, c) = (solve(&f1)?, solve(&f2)?, solve(&sum)?);
            let combined = a.axpy(1.0, &b);
            let scale = c.max_abs().max(1e-300);
            for (x, y) in combined.values.iter().zip(&c.values) {
                t.add((x - y).abs() / scale);
            }
        }
        Ok(())
    }));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7a01);
    out.push(guard("linear_coefficient_identity", M, 1e-10, |t| {
        for _ in 0..config.samples.min(16) {
            let p = random_params(&mut rng);
            let base = StationaryFields::solve(&p)?;
            for n in 2..=10 {
                let fields = ModeFields::new(n, &base);
                let nf = f64::from(n);
                let mun = mu_n(n, base.r0, p.alpha, p.sigma_bar).finite().unwrap_or(f64::NAN);
                let reduced = (1.0 - p.mu / mun) * nf * (nf * nf - 1.0) / base.r0.powi(3);
                let got = -fields.linear_coefficient();
                t.add((got - reduced).abs() / (nf * (nf * nf - 1.0) / base.r0.powi(3)));
            }
        }
        Ok(())
    }));
}

fn delay_suite(out: &mut Vec<PropertyResult>) {
    const M: &str = "radialsim";
    let params = ModelParams::default().with_tau(0.02);
    let dt = 0.005;

    out.push(guard("stationary_fixed_point", M, 1e-9, |t| {
        let star = solve_stationary_delayed(&params, 1e-13)?;
        let state = SimState::new(&params, star.radius)?;
        let next = step(&state, dt, &params)?;
        t.add((next.radius - star.radius).abs() / star.radius);
        Ok(())
    }));

    out.push(guard("boundary_characteristic", M, 1e-8, |t| {
        let star = solve_stationary_delayed(&params, 1e-13)?;
        t.add((star.boundary_foot - star.radius).abs() / star.radius);
        Ok(())
    }));

    out.push(guard("equilibrium_conservation", M, 1e-10, |t| {
        let star = solve_stationary_delayed(&params, 1e-13)?;
        let field = delayed_field(&params, star.radius, 1e-14)?;
        t.add(field.source_integral.abs() / params.sigma_bar);
        Ok(())
    }));

    out.push(guard("delayed_radius_second_order", "stationary", 1.0, |t| {
        let base = ModelParams::default();
        let f = StationaryFields::solve(&base)?;
        let ratios = [0.04, 0.02, 0.01]
            .iter()
            .map(|&tau| {
                let r = solve_stationary_delayed(&base.with_tau(tau), 1e-13)?.radius;
                Ok((r - f.r0 - tau * f.r1).abs() / (tau * tau))
            })
            .collect::<Result<Vec<f64>>>()?;
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        // residual is log2 of the spread; a factor of two is allowed
        t.add((hi / lo).log2());
        Ok(())
    }));
}

fn io_suite(out: &mut Vec<PropertyResult>) {
    const M: &str = "io";
    out.push(guard("csv_round_trip", M, 0.0, |t| {
        let params = ModelParams::default();
        let report = crate::stationary::stationary_report(&params)?;
        let text = report.profiles_csv();
        let (_, rows) = crate::io::parse_numeric_csv(&text)?;
        let originals: [&RadialProfile; 3] = [&report.sigma0, &report.p0, &report.sigma1];
        for (k, row) in rows.iter().enumerate() {
            for (value, prof) in row.iter().skip(1).zip(originals) {
                t.add(if value.to_bits() == prof.values[k].to_bits() { 0.0 } else { 1.0 });
            }
        }
        Ok(())
    }));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            samples: 8,
            include_delay: false,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn default_suite_passes() {
        let report = run_suite(&quick()).unwrap();
        let bad: Vec<_> = report.failures().into_iter().map(|p| (&p.id, p.max_residual)).collect();
        assert!(report.all_passed, "failures: {bad:?}");
    }

    #[test]
    fn every_identity_has_a_property() {
        let report = run_suite(&quick()).unwrap();
        for info in IDENTITIES {
            assert!(report.property(&format!("identity.{}", info.id)).is_some());
        }
        assert_eq!(report.identities.len(), IDENTITIES.len());
    }

    #[test]
    fn faulty_ratio_is_caught() {
        let config = VerifyConfig {
            ratio: VerifyConfig::faulty_ratio(),
            ..quick()
        };
        let report = run_suite(&config).unwrap();
        assert!(!report.all_passed);
        assert!(!report.property("identity.ratio_vs_bessel").unwrap().passed);
        assert!(!report.property("ratio_matches_bessel").unwrap().passed);
    }

    #[test]
    fn same_seed_same_report() {
        let a = run_suite(&quick()).unwrap();
        let b = run_suite(&quick()).unwrap();
        assert_eq!(a, b);
    }
}
