//! Radially symmetric stationary states.
//!
//! The delay-free state has closed forms built from `I_0` and the ratio
//! `P_0`; the first-order delay correction of the radius is explicit too.
//! The fully delayed state is found numerically on the unit disk by tracing
//! cell trajectories backward through the self-consistent pressure field.

use serde::Serialize;

use crate::besselkit::{i_n, p_ratio, p_ratio_prime};
use crate::error::{domain, Error, Result};
use crate::params::ModelParams;
use crate::quad::{cumulative_integral, interp_cubic, simpson, RadialProfile, PROFILE_NODES};
use crate::roots::{bisect, illinois};

/// Residual of the zeroth-order radius equation at `r`:
/// `alpha P_0(r) / (alpha + r P_0(r)) - sigma_tilde / (2 sigma_bar)`.
pub fn r0_residual(params: &ModelParams, r: f64) -> f64 {
    let p = p_ratio(0, r);
    params.alpha * p / (params.alpha + r * p) - params.sigma_tilde / (2.0 * params.sigma_bar)
}

fn r0_residual_prime(params: &ModelParams, r: f64) -> f64 {
    let a = params.alpha;
    let p = p_ratio(0, r);
    let dp = p_ratio_prime(0, r);
    let den = a + r * p;
    a * (a * dp - p * p) / (den * den)
}

/// Finds the root of a decreasing `f` with `f(0+) > 0` by doubling the
/// upper end, bisecting, then polishing with two Newton steps.
fn decreasing_root(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    let lo = 1e-8;
    if f(lo) <= 0.0 {
        return Err(Error::NoStationaryRadius(format!(
            "{what}: root lies below {lo:e}"
        )));
    }
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::NoStationaryRadius(format!("{what}: no sign change below 1e7")));
        }
    }
    let mut r = bisect(&f, lo, hi, 1e-13)?;
    for _ in 0..2 {
        let d = df(r);
        if d != 0.0 && d.is_finite() {
            let next = r - f(r) / d;
            if next > 0.0 && f(next).abs() <= f(r).abs() {
                r = next;
            }
        }
    }
    Ok(r)
}

/// Zeroth-order stationary radius.
pub fn solve_r0(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    decreasing_root(
        |r| r0_residual(params, r),
        |r| r0_residual_prime(params, r),
        "zeroth-order radius",
    )
}

/// Limit of the zeroth-order radius as the angiogenesis rate grows without
/// bound: the root of `P_0(R) = sigma_tilde / (2 sigma_bar)`.
pub fn solve_r0_dirichlet(sigma_bar: f64, sigma_tilde: f64) -> Result<f64> {
    if !(sigma_tilde > 0.0 && sigma_tilde < sigma_bar && sigma_bar.is_finite()) {
        return Err(Error::NoStationaryRadius(format!(
            "requires 0 < sigma_tilde < sigma_bar, got {sigma_tilde} and {sigma_bar}"
        )));
    }
    let target = sigma_tilde / (2.0 * sigma_bar);
    decreasing_root(|r| p_ratio(0, r) - target, |r| p_ratio_prime(0, r), "limiting radius")
}

/// Closed-form zeroth- and first-order stationary fields for a given radius.
///
/// All quantities follow from `r0` and the parameters; `r0` is normally the
/// output of [`solve_r0`], but any positive radius is accepted so the
/// formulas can be probed off the stationary branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryFields {
    pub params: ModelParams,
    pub r0: f64,
    /// `P_0(r0)`.
    pub p0_r0: f64,
    /// `P_1(r0)`.
    pub p1_r0: f64,
    /// Nutrient level on the boundary, `alpha sigma_bar / (alpha + r0 P_0(r0))`.
    pub sigma_boundary: f64,
    pub lambda: f64,
    pub r1: f64,
    i0_r0: f64,
}

impl StationaryFields {
    pub fn new(params: &ModelParams, r0: f64) -> Result<Self> {
        params.validate()?;
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(domain(format!("radius must be positive, got {r0}")));
        }
        let a = params.alpha;
        let p0 = p_ratio(0, r0);
        let p1 = p_ratio(1, r0);
        let c = a * params.sigma_bar / (a + r0 * p0);
        let lambda = c * (1.0 - p0 + a * r0 * p0);
        let r1 = 0.5 * params.mu * a * params.sigma_bar * (1.0 - (4.0 + r0 * r0) * p0 * p0)
            / ((p0 + a * r0 * (p0 - p1)) * p0);
        Ok(Self {
            params: *params,
            r0,
            p0_r0: p0,
            p1_r0: p1,
            sigma_boundary: c,
            lambda,
            r1,
            i0_r0: i_n(0, r0),
        })
    }

    /// Solves for the zeroth-order radius first.
    pub fn solve(params: &ModelParams) -> Result<Self> {
        Self::new(params, solve_r0(params)?)
    }

    fn shape(&self, r: f64) -> f64 {
        i_n(0, r) / self.i0_r0
    }

    pub fn sigma0(&self, r: f64) -> f64 {
        self.sigma_boundary * self.shape(r)
    }

    pub fn sigma0_prime(&self, r: f64) -> f64 {
        self.sigma_boundary * i_n(1, r) / self.i0_r0
    }

    pub fn sigma0_second(&self, r: f64) -> f64 {
        self.sigma_boundary * self.shape(r) * (1.0 - p_ratio(0, r))
    }

    pub fn sigma0_third(&self, r: f64) -> f64 {
        let p = p_ratio(0, r);
        self.sigma_boundary * self.shape(r) * (-1.0 / r + 2.0 * p / r + r * p)
    }

    pub fn p0(&self, r: f64) -> f64 {
        let ModelParams {
            mu, sigma_tilde, ..
        } = self.params;
        let c = self.sigma_boundary;
        mu * sigma_tilde * r * r / 4.0 - mu * c * self.shape(r) + mu * c + 1.0 / self.r0
            - mu * sigma_tilde * self.r0 * self.r0 / 4.0
    }

    pub fn p0_prime(&self, r: f64) -> f64 {
        let ModelParams {
            mu, sigma_tilde, ..
        } = self.params;
        mu * sigma_tilde * r / 2.0 - mu * self.sigma_boundary * i_n(1, r) / self.i0_r0
    }

    pub fn p0_second(&self, r: f64) -> f64 {
        let ModelParams {
            mu, sigma_tilde, ..
        } = self.params;
        mu * sigma_tilde / 2.0 - mu * self.sigma0_second(r)
    }

    /// `p0''(r0)` in its reduced closed form.
    pub fn p0_second_boundary(&self) -> f64 {
        -self.params.mu
            * self.sigma_boundary
            * self.r0
            * self.r0
            * self.p0_r0
            * self.p1_r0
    }

    /// `p0'''(r0)` in its reduced closed form.
    pub fn p0_third_boundary(&self) -> f64 {
        -self.params.mu * self.sigma_boundary * self.r0 * self.p0_r0 * (1.0 - self.p1_r0)
    }

    fn sigma1_scale(&self) -> f64 {
        -self.lambda * self.r1 / (self.params.alpha + self.r0 * self.p0_r0)
    }

    pub fn sigma1(&self, r: f64) -> f64 {
        self.sigma1_scale() * self.shape(r)
    }

    pub fn sigma1_prime(&self, r: f64) -> f64 {
        self.sigma1_scale() * i_n(1, r) / self.i0_r0
    }

    pub fn sigma1_second(&self, r: f64) -> f64 {
        self.sigma1_scale() * self.shape(r) * (1.0 - p_ratio(0, r))
    }

    /// `p1''(r0)` in its reduced closed form.
    pub fn p1_second_boundary(&self) -> f64 {
        let (a, r0, p0, p1) = (self.params.alpha, self.r0, self.p0_r0, self.p1_r0);
        self.params.mu * self.sigma_boundary * (2.0 * p0 + r0 * r0 * p1 + a * r0 * (1.0 - p1))
            / (a + r0 * p0)
            * p0
            * self.r1
    }

    /// Radius corrected to first order in the delay.
    pub fn r_star(&self) -> f64 {
        self.r0 + self.params.tau * self.r1
    }
}

pub fn sigma0(params: &ModelParams, r0: f64) -> Result<RadialProfile> {
    let f = StationaryFields::new(params, r0)?;
    RadialProfile::sample(r0, PROFILE_NODES, |r| f.sigma0(r), f.sigma0_prime(r0))
}

pub fn p0(params: &ModelParams, r0: f64) -> Result<RadialProfile> {
    let f = StationaryFields::new(params, r0)?;
    RadialProfile::sample(r0, PROFILE_NODES, |r| f.p0(r), f.p0_prime(r0))
}

pub fn sigma1(params: &ModelParams, r0: f64) -> Result<RadialProfile> {
    let f = StationaryFields::new(params, r0)?;
    RadialProfile::sample(r0, PROFILE_NODES, |r| f.sigma1(r), f.sigma1_prime(r0))
}

/// Boundary quantity `sigma0'' + alpha sigma0'` at `r0`.
pub fn lambda(params: &ModelParams, r0: f64) -> Result<f64> {
    Ok(StationaryFields::new(params, r0)?.lambda)
}

/// First-order delay correction of the stationary radius.
pub fn solve_r1(params: &ModelParams, r0: f64) -> Result<f64> {
    Ok(StationaryFields::new(params, r0)?.r1)
}

/// Scalars plus profiles of the delay-expanded stationary state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryReport {
    pub params: ModelParams,
    pub r0: f64,
    pub lambda: f64,
    pub r1: f64,
    pub r_star: f64,
    #[serde(skip)]
    pub sigma0: RadialProfile,
    #[serde(skip)]
    pub p0: RadialProfile,
    #[serde(skip)]
    pub sigma1: RadialProfile,
}

impl StationaryReport {
    pub fn fields(&self) -> StationaryFields {
        StationaryFields::new(&self.params, self.r0).expect("report holds validated parameters")
    }

    /// Profiles as CSV with columns `r, sigma0, p0, sigma1`.
    pub fn profiles_csv(&self) -> String {
        crate::io::columns_to_csv(
            &["r", "sigma0", "p0", "sigma1"],
            &[
                &self.sigma0.nodes,
                &self.sigma0.values,
                &self.p0.values,
                &self.sigma1.values,
            ],
        )
    }
}

pub fn stationary_report(params: &ModelParams) -> Result<StationaryReport> {
    let f = StationaryFields::solve(params)?;
    let r0 = f.r0;
    Ok(StationaryReport {
        params: *params,
        r0,
        lambda: f.lambda,
        r1: f.r1,
        r_star: f.r_star(),
        sigma0: RadialProfile::sample(r0, PROFILE_NODES, |r| f.sigma0(r), f.sigma0_prime(r0))?,
        p0: RadialProfile::sample(r0, PROFILE_NODES, |r| f.p0(r), f.p0_prime(r0))?,
        sigma1: RadialProfile::sample(r0, PROFILE_NODES, |r| f.sigma1(r), f.sigma1_prime(r0))?,
    })
}

// ---------------------------------------------------------------------------
// Fully delayed stationary state
// ---------------------------------------------------------------------------

/// Characteristic substeps per delay interval.
pub const CHARACTERISTIC_STEPS: usize = 64;
const MAX_INNER_ITERATIONS: usize = 200;

/// Self-consistent pressure field for a fixed radius, on the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedField {
    pub radius: f64,
    /// Pressure gradient divided by the radius, `p'(R x) / R`, on uniform
    /// nodes of `[0, 1]`. This is the velocity of the scaled coordinate.
    pub velocity: Vec<f64>,
    /// Scaled foot points `xi(-tau; x) / R`.
    pub foot: Vec<f64>,
    /// `∫_0^1 [sigma(foot) - sigma_tilde] x dx`.
    pub source_integral: f64,
    pub iterations: usize,
}

fn trace_back(velocity: &[f64], h: f64, x: f64, tau: f64, steps: usize) -> f64 {
    let ds = tau / steps as f64;
    let v = |z: f64| interp_cubic(velocity, h, z.clamp(0.0, 1.0));
    let mut z = x;
    for _ in 0..steps {
        let k1 = v(z);
        let k2 = v(z + 0.5 * ds * k1);
        let k3 = v(z + 0.5 * ds * k2);
        let k4 = v(z + ds * k3);
        z += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    z
}

/// Inner fixed-point iteration for the delayed pressure at radius `radius`.
///
/// Starting from zero velocity, repeatedly traces every node back over one
/// delay, evaluates the nutrient at the foot point and re-integrates the
/// pressure gradient. Fails with [`Error::DelayTooLarge`] if the updates do
/// not contract.
pub fn delayed_field(params: &ModelParams, radius: f64, tol: f64) -> Result<DelayedField> {
    params.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(domain(format!("radius must be positive, got {radius}")));
    }
    let f = StationaryFields::new(params, radius)?;
    let n = PROFILE_NODES;
    let h = 1.0 / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    let (tau, mu, st) = (params.tau, params.mu, params.sigma_tilde);
    let sigma = |z: f64| f.sigma0(radius * z.clamp(0.0, 1.0));

    let mut velocity = vec![0.0; n];
    let mut foot = xs.clone();
    let mut history: Vec<f64> = Vec::new();
    for iter in 1..=MAX_INNER_ITERATIONS {
        if tau > 0.0 {
            for (k, &x) in xs.iter().enumerate() {
                foot[k] = trace_back(&velocity, h, x, tau, CHARACTERISTIC_STEPS);
            }
        }
        let weighted: Vec<f64> = xs
            .iter()
            .zip(&foot)
            .map(|(&x, &z)| (sigma(z) - st) * x)
            .collect();
        let running = cumulative_integral(&weighted, h);
        let mut next = vec![0.0; n];
        for k in 1..n {
            next[k] = -mu * running[k] / xs[k];
        }
        let change = next
            .iter()
            .zip(&velocity)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        velocity = next;
        if !change.is_finite() {
            break;
        }
        history.push(change);
        let settled = change <= tol || tau == 0.0;
        if settled {
            return Ok(DelayedField {
                radius,
                velocity,
                foot,
                source_integral: simpson(&weighted, h),
                iterations: iter,
            });
        }
        // a contraction shrinks the change geometrically; a change that
        // keeps growing means the delay is beyond the contractive regime
        if history.len() > 8 && change > 4.0 * history[history.len() - 9] {
            break;
        }
    }
    Err(Error::DelayTooLarge {
        tau,
        detail: format!(
            "pressure iteration at radius {radius} did not settle; last update {:e}",
            history.last().copied().unwrap_or(f64::NAN)
        ),
    })
}

/// Result of the fully delayed stationary solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayedStationary {
    pub radius: f64,
    pub tau: f64,
    /// Zeroth-order radius for the same parameters.
    pub r0: f64,
    /// Remaining source integral at the returned radius.
    pub residual: f64,
    pub inner_iterations: usize,
    /// Foot point of the boundary characteristic, in physical units.
    pub boundary_foot: f64,
    /// Physical pressure gradient `p'(r)` on `[0, radius]`.
    #[serde(skip)]
    pub pressure_gradient: RadialProfile,
}

/// Solves the stationary problem with the full delay, to integral residual
/// `tol`. `tau = 0` returns the closed-form zeroth-order state.
pub fn solve_stationary_delayed(params: &ModelParams, tol: f64) -> Result<DelayedStationary> {
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let fields = StationaryFields::solve(params)?;
    let r0 = fields.r0;
    if params.tau == 0.0 {
        let gradient =
            RadialProfile::sample(r0, PROFILE_NODES, |r| fields.p0_prime(r), fields.p0_prime(r0))?;
        return Ok(DelayedStationary {
            radius: r0,
            tau: 0.0,
            r0,
            residual: 0.0,
            inner_iterations: 0,
            boundary_foot: r0,
            pressure_gradient: gradient,
        });
    }
    let inner_tol = (tol * 1e-2).max(1e-14);
    let residual = |r: f64| delayed_field(params, r, inner_tol).map(|d| d.source_integral);

    // the integral is decreasing in the radius, positive below the root
    let guess = fields.r_star().max(0.5 * r0);
    let mut step = (params.tau * fields.r1.abs()).max(1e-3 * r0);
    let mut lo = guess - step;
    let mut hi = guess + step;
    let mut f_lo = residual(lo)?;
    let mut f_hi = residual(hi)?;
    let mut expansions = 0;
    while f_lo.signum() == f_hi.signum() {
        expansions += 1;
        if expansions > 40 {
            return Err(Error::NonConvergence("could not bracket the delayed radius".into()));
        }
        step *= 2.0;
        if f_lo < 0.0 {
            hi = lo;
            f_hi = f_lo;
            lo = (guess - step).max(1e-6);
            f_lo = residual(lo)?;
        } else {
            lo = hi;
            f_lo = f_hi;
            hi = guess + step;
            f_hi = residual(hi)?;
        }
    }
    let radius = illinois(residual, lo, hi, 1e-13 * r0, 200)?;
    let field = delayed_field(params, radius, inner_tol)?;
    if field.source_integral.abs() > tol {
        return Err(Error::NonConvergence(format!(
            "delayed radius residual {:e} exceeds tolerance {tol:e}",
            field.source_integral
        )));
    }
    let n = field.velocity.len();
    let nodes: Vec<f64> = (0..n).map(|k| radius * k as f64 / (n - 1) as f64).collect();
    let mut nodes = nodes;
    nodes[n - 1] = radius;
    let values: Vec<f64> = field.velocity.iter().map(|v| v * radius).collect();
    let boundary = values[n - 1];
    Ok(DelayedStationary {
        radius,
        tau: params.tau,
        r0,
        residual: field.source_integral,
        inner_iterations: field.iterations,
        boundary_foot: radius * field.foot[n - 1],
        pressure_gradient: RadialProfile::from_parts(radius, nodes, values, boundary)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const R0_BASELINE: f64 = 1.490_067_302_322_944_2;
    const R0_LIMIT: f64 = 3.325_848_099_017_027_9;
    const R0_HIGH_ALPHA: f64 = 3.325_844_485_722_251_2;

    fn baseline() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn r0_reference_values() {
        let r0 = solve_r0(&baseline()).unwrap();
        assert_relative_eq!(r0, R0_BASELINE, max_relative = 1e-13);
        assert!(r0_residual(&baseline(), r0).abs() <= 1e-12);
        let limit = solve_r0_dirichlet(1.0, 0.5).unwrap();
        assert_relative_eq!(limit, R0_LIMIT, max_relative = 1e-13);
        let high = solve_r0(&baseline().with_alpha(1e6)).unwrap();
        assert_relative_eq!(high, R0_HIGH_ALPHA, max_relative = 1e-12);
        assert!((high - limit).abs() < 1e-3);
    }

    #[test]
    fn r0_shrinks_as_threshold_nears_supply() {
        let mut last = f64::INFINITY;
        for st in [0.9, 0.99, 0.999, 0.9999] {
            let p = ModelParams {
                sigma_tilde: st,
                ..baseline()
            };
            let r0 = solve_r0(&p).unwrap();
            assert!(r0 < last);
            last = r0;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn r0_rejects_inverted_nutrients() {
        let p = ModelParams {
            sigma_tilde: 1.5,
            ..baseline()
        };
        assert!(matches!(solve_r0(&p), Err(Error::NoStationaryRadius(_))));
    }

    #[test]
    fn sigma0_boundary_and_mass_balance() {
        let p = baseline();
        let r0 = solve_r0(&p).unwrap();
        let prof = sigma0(&p, r0).unwrap();
        let bc = prof.boundary_derivative + p.alpha * (prof.boundary_value() - p.sigma_bar);
        assert!(bc.abs() <= 1e-10);
        assert!(prof.values.windows(2).all(|w| w[0] < w[1]));
        let weighted: Vec<f64> = prof
            .nodes
            .iter()
            .zip(&prof.values)
            .map(|(r, s)| (s - p.sigma_tilde) * r)
            .collect();
        assert!(simpson(&weighted, prof.spacing()).abs() <= 1e-10);
    }

    #[test]
    fn p0_boundary_conditions() {
        let p = baseline().with_mu(1.7);
        let f = StationaryFields::solve(&p).unwrap();
        assert!((f.p0(f.r0) - 1.0 / f.r0).abs() <= 1e-12);
        assert!(f.p0_prime(f.r0).abs() <= 1e-10);
        assert_eq!(f.p0_prime(0.0), 0.0);
        let h = 1e-3 * f.r0;
        let fd = (-f.p0(f.r0 + 2.0 * h) + 16.0 * f.p0(f.r0 + h) - 30.0 * f.p0(f.r0)
            + 16.0 * f.p0(f.r0 - h)
            - f.p0(f.r0 - 2.0 * h))
            / (12.0 * h * h);
        assert_relative_eq!(fd, f.p0_second_boundary(), max_relative = 1e-8);
        assert_relative_eq!(f.p0_second(f.r0), f.p0_second_boundary(), max_relative = 1e-10);
    }

    #[test]
    fn lambda_matches_finite_differences() {
        let p = ModelParams {
            alpha: 2.5,
            ..baseline()
        };
        let f = StationaryFields::solve(&p).unwrap();
        let r = f.r0;
        let h = 1e-3;
        let s = |x: f64| f.sigma0(x);
        let d2 = (-s(r + 2.0 * h) + 16.0 * s(r + h) - 30.0 * s(r) + 16.0 * s(r - h) - s(r - 2.0 * h))
            / (12.0 * h * h);
        let h1 = 1e-5;
        let d1 = (s(r + h1) - s(r - h1)) / (2.0 * h1);
        assert!((d2 + p.alpha * d1 - f.lambda).abs() <= 1e-8);
        assert!(f.lambda > 0.0);
    }

    #[test]
    fn baseline_first_order_values() {
        let f = StationaryFields::solve(&baseline()).unwrap();
        assert_relative_eq!(f.lambda, 0.75, max_relative = 1e-12);
        assert_relative_eq!(f.r1, 0.024_358_056_235_962_253, max_relative = 1e-10);
    }

    #[test]
    fn r1_is_linear_in_mu() {
        let p = baseline();
        let r0 = solve_r0(&p).unwrap();
        let a = solve_r1(&p, r0).unwrap();
        let b = solve_r1(&p.with_mu(2.0), r0).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-14);
    }

    #[test]
    fn sigma1_boundary_condition() {
        let p = baseline().with_mu(1.3);
        let f = StationaryFields::solve(&p).unwrap();
        let bc = f.sigma1_prime(f.r0) + p.alpha * f.sigma1(f.r0) + f.lambda * f.r1;
        assert!(bc.abs() <= 1e-10);
    }

    #[test]
    fn delayed_solver_reduces_at_zero_delay() {
        let d = solve_stationary_delayed(&baseline(), 1e-12).unwrap();
        assert_eq!(d.radius, solve_r0(&baseline()).unwrap());
    }

    #[test]
    fn delayed_solver_first_order_slope() {
        let p = baseline().with_tau(0.02);
        let d = solve_stationary_delayed(&p, 1e-12).unwrap();
        let f = StationaryFields::solve(&p).unwrap();
        let slope = (d.radius - f.r0) / p.tau;
        assert!((slope - f.r1).abs() < 1e-3, "slope {slope} vs {}", f.r1);
        assert!((d.boundary_foot - d.radius).abs() < 1e-9);
    }

    #[test]
    fn delayed_solver_reports_large_delay() {
        let p = baseline().with_tau(64.0);
        let err = solve_stationary_delayed(&p, 1e-10).unwrap_err();
        assert!(matches!(err, Error::DelayTooLarge { .. }), "{err:?}");
    }
}
