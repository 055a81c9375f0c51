//! Zeroth-order linear stability of the stationary disk.
//!
//! A boundary perturbation `rho_n(t) cos(n theta)` evolves at the rate
//! `-A_n + mu B_n`. `A_n` is the stabilizing surface-tension part and
//! `B_n` the destabilizing growth part; their ratio is the mode threshold,
//! and the smallest threshold (always at `n = 2`) is the critical
//! aggressiveness `mu*`.

use serde::Serialize;

use crate::besselkit::{h_ratio, p_ratio};
use crate::error::{domain, Result};
use crate::roots::bisect;

/// Largest mode used by sweeps.
pub const MAX_MODE: u32 = 64;

fn check_radius(r0: f64) -> Result<()> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(domain(format!("radius must be positive, got {r0}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Surface-tension coefficient `n (n^2 - 1) / r0^3`.
pub fn coeff_a(n: u32, r0: f64) -> f64 {
    let n = f64::from(n);
    n * (n * n - 1.0) / (r0 * r0 * r0)
}

/// Growth coefficient; the mode rate is `-A_n + mu B_n`.
pub fn coeff_b(n: u32, r0: f64, alpha: f64, sigma_bar: f64) -> f64 {
    let nf = f64::from(n);
    let p0 = p_ratio(0, r0);
    let p1 = p_ratio(1, r0);
    let pn = p_ratio(n, r0);
    let c = alpha * sigma_bar / (alpha + r0 * p0);
    c * r0 * p0 * (nf * p1 - pn + alpha * r0 * (p1 - pn)) / (h_ratio(n, r0) + alpha)
}

/// A mode threshold. Modes 0 and 1 never destabilize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Finite(f64),
    Unbounded,
}

impl Threshold {
    pub fn finite(self) -> Option<f64> {
        match self {
            Threshold::Finite(v) => Some(v),
            Threshold::Unbounded => None,
        }
    }
}

/// Threshold of mode `n`, from its closed form.
pub fn mu_n(n: u32, r0: f64, alpha: f64, sigma_bar: f64) -> Threshold {
    if n < 2 {
        return Threshold::Unbounded;
    }
    let nf = f64::from(n);
    let p0 = p_ratio(0, r0);
    let p1 = p_ratio(1, r0);
    let pn = p_ratio(n, r0);
    let lead = (alpha + r0 * p0) / (alpha * sigma_bar * r0.powi(4) * p0);
    let num = nf * (nf * nf - 1.0) * (nf / r0 + alpha + r0 * pn);
    let den = (nf + alpha * r0) * p1 - (1.0 + alpha * r0) * pn;
    Threshold::Finite(lead * num / den)
}

/// Critical aggressiveness: the mode-2 threshold.
pub fn mu_star(r0: f64, alpha: f64, sigma_bar: f64) -> Result<f64> {
    check_radius(r0)?;
    check_positive("alpha", alpha)?;
    check_positive("sigma_bar", sigma_bar)?;
    Ok(mu_n(2, r0, alpha, sigma_bar)
        .finite()
        .expect("mode 2 has a finite threshold"))
}

/// Mode growth rate `-A_n + mu B_n`.
pub fn growth_rate(n: u32, mu: f64, r0: f64, alpha: f64, sigma_bar: f64) -> f64 {
    -coeff_a(n, r0) + mu * coeff_b(n, r0, alpha, sigma_bar)
}

/// Coefficients of the quadratic in `alpha` that carries the sign of
/// `d mu* / d alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EFunctions {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
}

impl EFunctions {
    pub fn at_alpha(&self, alpha: f64) -> f64 {
        self.e0 + self.e1 * alpha + self.e2 * alpha * alpha
    }
}

pub fn e_functions(x: f64) -> Result<EFunctions> {
    check_radius(x)?;
    let (p0, p1, p2) = (p_ratio(0, x), p_ratio(1, x), p_ratio(2, x));
    Ok(EFunctions {
        e0: -x * p0 * (x * p2 + 2.0 / x) * (2.0 * p1 - p2),
        e1: -2.0 * x * p0 * (2.0 + x * x * p2) * (p1 - p2),
        e2: p2 - x * x * (p0 + p2) * (p1 - p2),
    })
}

/// Radius above which `mu*` decreases in `alpha` for every `alpha`: the
/// root of the leading coefficient `e2` on `(1, 4)`.
pub fn critical_radius() -> f64 {
    let e2 = |x: f64| {
        let (p0, p1, p2) = (p_ratio(0, x), p_ratio(1, x), p_ratio(2, x));
        p2 - x * x * (p0 + p2) * (p1 - p2)
    };
    bisect(e2, 1.0, 4.0, 1e-10).expect("e2 changes sign on (1, 4)")
}

/// `d mu* / d alpha` from the closed-form quadratic.
pub fn dmu_star_dalpha(r0: f64, alpha: f64, sigma_bar: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("sigma_bar", sigma_bar)?;
    let e = e_functions(r0)?;
    let (p0, p1, p2) = (p_ratio(0, r0), p_ratio(1, r0), p_ratio(2, r0));
    let den = 2.0 * p1 - p2 + alpha * r0 * (p1 - p2);
    Ok(6.0 / (sigma_bar * r0.powi(4) * p0) * e.at_alpha(alpha) / (alpha * alpha * den * den))
}

/// `d mu* / d alpha` by central differences with step `1e-5 alpha`.
pub fn dmu_star_dalpha_fd(r0: f64, alpha: f64, sigma_bar: f64) -> Result<f64> {
    let h = 1e-5 * alpha;
    let up = mu_star(r0, alpha + h, sigma_bar)?;
    let down = mu_star(r0, alpha - h, sigma_bar)?;
    Ok((up - down) / (2.0 * h))
}

/// The three functions whose positivity makes the thresholds increase in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QFunctions {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

pub fn q_functions(n: u32, r: f64) -> Result<QFunctions> {
    if n < 2 {
        return Err(domain(format!("Q functions need n >= 2, got {n}")));
    }
    check_radius(r)?;
    let nf = f64::from(n);
    let p1 = p_ratio(1, r);
    let pn = p_ratio(n, r);
    let pm = p_ratio(n + 1, r);
    let r2 = r * r;
    Ok(QFunctions {
        q1: 3.0 * p1 - (nf + 2.0) * pn + (nf - 1.0) * pm,
        q2: (6.0 * nf + 3.0) * p1 - (nf + 2.0).powi(2) * pn + (nf * nf - 1.0) * pm
            - (nf - 1.0) * r2 * p1 * pn
            + (nf + 2.0) * r2 * p1 * pm
            - 3.0 * r2 * pn * pm,
        q3: 3.0 * nf * (nf + 1.0) * p1 - (nf + 1.0) * (nf + 2.0) * pn + nf * (nf - 1.0) * pm
            - (nf * nf - 1.0) * r2 * p1 * pn
            + nf * (nf + 2.0) * r2 * p1 * pm
            - 3.0 * r2 * pn * pm,
    })
}

/// Uniform decay constant: every mode `n >= 2` decays at least like
/// `exp(-delta2 n^3 t)` when `mu < mu*`.
pub fn decay_bound(mu: f64, r0: f64, alpha: f64, sigma_bar: f64) -> Result<f64> {
    check_positive("mu", mu)?;
    let ms = mu_star(r0, alpha, sigma_bar)?;
    if mu >= ms {
        return Err(domain(format!(
            "decay bound needs mu < mu* = {ms}, got mu = {mu}"
        )));
    }
    Ok(0.75 * (1.0 - mu / ms) / (r0 * r0 * r0))
}

/// Per-mode summary at a given aggressiveness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeReport {
    pub n: u32,
    pub a_n: f64,
    pub b_n: f64,
    pub mu_n: Threshold,
    pub rate: f64,
    /// Uniform decay constant, zero when `mu >= mu*`.
    pub delta2: f64,
}

pub fn mode_report(n: u32, mu: f64, r0: f64, alpha: f64, sigma_bar: f64) -> Result<ModeReport> {
    check_positive("mu", mu)?;
    let ms = mu_star(r0, alpha, sigma_bar)?;
    Ok(ModeReport {
        n,
        a_n: coeff_a(n, r0),
        b_n: coeff_b(n, r0, alpha, sigma_bar),
        mu_n: mu_n(n, r0, alpha, sigma_bar),
        rate: growth_rate(n, mu, r0, alpha, sigma_bar),
        delta2: (0.75 * (1.0 - mu / ms) / r0.powi(3)).max(0.0),
    })
}

/// Closed-form mode amplitudes, cross-checked against direct integration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rho0Trajectory {
    pub n: u32,
    pub rate: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Relative mismatch at `t = 1` between the closed form and a
    /// fourth-order integration of the mode equation.
    pub integration_mismatch: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn rho0_trajectory(
    n: u32,
    rho_init: f64,
    mu: f64,
    r0: f64,
    alpha: f64,
    sigma_bar: f64,
    t_grid: &[f64],
) -> Result<Rho0Trajectory> {
    check_radius(r0)?;
    if t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("time grid must be nonnegative and increasing"));
    }
    let rate = growth_rate(n, mu, r0, alpha, sigma_bar);
    let values = t_grid.iter().map(|t| rho_init * (rate * t).exp()).collect();

    let steps = ((rate.abs() * 100.0).ceil() as usize).max(100);
    let dt = 1.0 / steps as f64;
    let mut y = rho_init;
    for _ in 0..steps {
        let k1 = rate * y;
        let k2 = rate * (y + 0.5 * dt * k1);
        let k3 = rate * (y + 0.5 * dt * k2);
        let k4 = rate * (y + dt * k3);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let exact = rho_init * rate.exp();
    let mismatch = if exact == 0.0 {
        y.abs()
    } else {
        ((y - exact) / exact).abs()
    };
    if mismatch > 1e-2 {
        return Err(crate::Error::NonConvergence(format!(
            "mode {n} integration disagrees with the closed form by {mismatch:e}"
        )));
    }
    Ok(Rho0Trajectory {
        n,
        rate,
        t_grid: t_grid.to_vec(),
        values,
        integration_mismatch: mismatch,
    })
}

/// One row of a stability map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub alpha: f64,
    pub r0: f64,
    pub mu_star: f64,
    pub rate_n2: f64,
    pub delta2: f64,
}

pub fn threshold_row(alpha: f64, r0: f64, sigma_bar: f64, mu: f64) -> Result<ThresholdRow> {
    let ms = mu_star(r0, alpha, sigma_bar)?;
    Ok(ThresholdRow {
        alpha,
        r0,
        mu_star: ms,
        rate_n2: growth_rate(2, mu, r0, alpha, sigma_bar),
        delta2: (0.75 * (1.0 - mu / ms) / r0.powi(3)).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const B3_AT_2: f64 = 0.108_830_523_438_644_45;
    const MU2_AT_3: f64 = 2.761_392_515_218_304_4;
    const CRITICAL: f64 = 2.412_305_060_782_155_4;

    #[test]
    fn a_coefficients() {
        assert_eq!(coeff_a(0, 1.7), 0.0);
        assert_eq!(coeff_a(1, 1.7), 0.0);
        assert_eq!(coeff_a(2, 2.0), 0.75);
    }

    #[test]
    fn b_signs_and_values() {
        assert!(coeff_b(1, 2.0, 1.0, 1.0).abs() < 1e-16);
        assert!(coeff_b(0, 2.0, 1.0, 1.0) < 0.0);
        assert_relative_eq!(coeff_b(3, 2.0, 1.0, 1.0), B3_AT_2, max_relative = 1e-12);
    }

    #[test]
    fn threshold_forms_agree() {
        assert_relative_eq!(
            mu_n(2, 3.0, 1.0, 1.0).finite().unwrap(),
            MU2_AT_3,
            max_relative = 1e-12
        );
        for n in 2..=20 {
            let closed = mu_n(n, 1.3, 0.7, 2.0).finite().unwrap();
            let ratio = coeff_a(n, 1.3) / coeff_b(n, 1.3, 0.7, 2.0);
            assert_relative_eq!(closed, ratio, max_relative = 1e-12);
        }
        assert_eq!(mu_n(0, 1.0, 1.0, 1.0), Threshold::Unbounded);
        assert_eq!(mu_n(1, 1.0, 1.0, 1.0), Threshold::Unbounded);
    }

    #[test]
    fn critical_radius_value() {
        let r = critical_radius();
        assert!((r - CRITICAL).abs() < 1e-9);
        assert!(e_functions(r - 0.1).unwrap().e2 > 0.0);
        assert!(e_functions(r + 0.1).unwrap().e2 < 0.0);
        assert!(e_functions(1.0).unwrap().e2 > 0.0);
        assert!(e_functions(4.0).unwrap().e2 < 0.0);
    }

    #[test]
    fn alpha_derivative_routes_agree() {
        for &(r0, alpha) in &[(1.5, 0.3), (1.5, 2.0), (3.0, 0.3), (3.0, 2.0)] {
            let a = dmu_star_dalpha(r0, alpha, 1.0).unwrap();
            let b = dmu_star_dalpha_fd(r0, alpha, 1.0).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn decay_bound_values() {
        let ms = mu_star(2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(decay_bound(ms / 2.0, 2.0, 1.0, 1.0).unwrap(), 3.0 / 64.0, max_relative = 1e-14);
        assert!(decay_bound(ms, 2.0, 1.0, 1.0).is_err());
        assert!(decay_bound(ms * (1.0 - 1e-9), 2.0, 1.0, 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn mode_one_is_neutral() {
        let t: Vec<f64> = (0..11).map(f64::from).collect();
        let traj = rho0_trajectory(1, 0.3, 5.0, 2.0, 1.0, 1.0, &t).unwrap();
        assert!(traj.values.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn mode_two_grows_above_threshold() {
        let ms = mu_star(2.0, 1.0, 1.0).unwrap();
        let traj = rho0_trajectory(2, 1e-3, 2.0 * ms, 2.0, 1.0, 1.0, &[0.0, 1.0, 2.0]).unwrap();
        assert!(traj.rate > 0.0);
        assert!(traj.values[2] > traj.values[1] && traj.values[1] > traj.values[0]);
        assert!(traj.integration_mismatch < 1e-8);
    }

    #[test]
    fn trajectory_rejects_bad_grid() {
        assert!(rho0_trajectory(2, 1.0, 1.0, 2.0, 1.0, 1.0, &[1.0, 0.5]).is_err());
        assert!(rho0_trajectory(2, 1.0, 1.0, 2.0, 1.0, 1.0, &[-1.0, 0.5]).is_err());
    }

    #[test]
    fn q_functions_need_mode_two() {
        assert!(q_functions(1, 1.0).is_err());
        let q = q_functions(2, 1.0).unwrap();
        assert!(q.q1 > 0.0 && q.q2 > 0.0 && q.q3 > 0.0);
    }
}
