//! Browser bindings for the demo page in `www/`.
//!
//! Each export has a plain Rust twin returning `Result<_, String>` so the
//! logic is tested natively; the wasm layer only converts errors.

use angiodelay::besselkit::log_grid;
use angiodelay::modes::{critical_radius, mu_star};
use angiodelay::radialsim::{run_with, RunOptions};
use angiodelay::stationary::{solve_r0, stationary_report};
use angiodelay::ModelParams;
use wasm_bindgen::prelude::*;

/// Longest delayed run the page may request, in steps; keeps the tab responsive.
pub const MAX_STEPS: f64 = 4000.0;

fn params(alpha: f64, sigma_bar: f64, sigma_tilde: f64, mu: f64, tau: f64) -> Result<ModelParams, String> {
    ModelParams::new(alpha, sigma_bar, sigma_tilde, mu, tau).map_err(|e| e.to_string())
}

/// Instability threshold against supply rate at a fixed radius, as
/// interleaved `[alpha, threshold, ...]` pairs on a log grid.
pub fn threshold_curve_impl(r0: f64, sigma_bar: f64, alpha_min: f64, alpha_max: f64, count: usize) -> Result<Vec<f64>, String> {
    if !(alpha_min > 0.0 && alpha_min < alpha_max) || count < 2 || count > 2000 {
        return Err("need 0 < alpha_min < alpha_max and 2 <= count <= 2000".into());
    }
    let mut out = Vec::with_capacity(2 * count);
    for a in log_grid(alpha_min, alpha_max, count) {
        out.push(a);
        out.push(mu_star(r0, a, sigma_bar).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Stationary state and its radial profiles.
#[wasm_bindgen]
pub struct Stationary {
    r0: f64,
    r1: f64,
    nodes: Vec<f64>,
    nutrient: Vec<f64>,
    pressure: Vec<f64>,
    nutrient_correction: Vec<f64>,
}

#[wasm_bindgen]
impl Stationary {
    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn nodes(&self) -> Vec<f64> {
        self.nodes.clone()
    }
    pub fn nutrient(&self) -> Vec<f64> {
        self.nutrient.clone()
    }
    pub fn pressure(&self) -> Vec<f64> {
        self.pressure.clone()
    }
    /// First-order delay correction to the nutrient.
    pub fn nutrient_correction(&self) -> Vec<f64> {
        self.nutrient_correction.clone()
    }
}

pub fn stationary_impl(alpha: f64, sigma_bar: f64, sigma_tilde: f64, mu: f64) -> Result<Stationary, String> {
    let p = params(alpha, sigma_bar, sigma_tilde, mu, 0.0)?;
    let rep = stationary_report(&p).map_err(|e| e.to_string())?;
    Ok(Stationary {
        r0: rep.r0,
        r1: rep.r1,
        nodes: rep.sigma0.nodes.clone(),
        nutrient: rep.sigma0.values,
        pressure: rep.p0.values,
        nutrient_correction: rep.sigma1.values,
    })
}

/// Radius history from `start_factor` times the stationary radius, as
/// interleaved `[t, radius, ...]` pairs.
#[allow(clippy::too_many_arguments)]
pub fn simulate_impl(
    alpha: f64,
    sigma_bar: f64,
    sigma_tilde: f64,
    mu: f64,
    tau: f64,
    start_factor: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>, String> {
    let p = params(alpha, sigma_bar, sigma_tilde, mu, tau)?;
    if !(start_factor > 0.0) {
        return Err("start factor must be positive".into());
    }
    if !(t_end > 0.0 && dt > 0.0) || t_end / dt > MAX_STEPS {
        return Err(format!("need t_end / dt <= {MAX_STEPS}"));
    }
    let r0 = solve_r0(&p).map_err(|e| e.to_string())?;
    let options = RunOptions {
        stop_on_convergence: true,
        record_every: 1,
    };
    let res = run_with(&p, start_factor * r0, t_end, dt, options).map_err(|e| e.to_string())?;
    Ok(res.trajectory.iter().flat_map(|q| [q.t, q.radius]).collect())
}

#[wasm_bindgen]
pub fn critical_supply_radius() -> f64 {
    critical_radius()
}

#[wasm_bindgen]
pub fn threshold_curve(r0: f64, sigma_bar: f64, alpha_min: f64, alpha_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
    threshold_curve_impl(r0, sigma_bar, alpha_min, alpha_max, count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn stationary(alpha: f64, sigma_bar: f64, sigma_tilde: f64, mu: f64) -> Result<Stationary, JsError> {
    stationary_impl(alpha, sigma_bar, sigma_tilde, mu).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    alpha: f64,
    sigma_bar: f64,
    sigma_tilde: f64,
    mu: f64,
    tau: f64,
    start_factor: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>, JsError> {
    simulate_impl(alpha, sigma_bar, sigma_tilde, mu, tau, start_factor, t_end, dt).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_is_interleaved_and_decreasing_above_critical() {
        let c = threshold_curve_impl(3.0, 1.0, 0.1, 10.0, 20).unwrap();
        assert_eq!(c.len(), 40);
        assert!((c[0] - 0.1).abs() < 1e-12);
        assert!(c.chunks(2).collect::<Vec<_>>().windows(2).all(|w| w[1][1] < w[0][1]));
        assert!(threshold_curve_impl(3.0, 1.0, 10.0, 1.0, 20).is_err());
    }

    #[test]
    fn profiles_share_one_grid() {
        let s = stationary_impl(1.0, 1.0, 0.5, 1.0).unwrap();
        let n = s.nodes().len();
        assert!(n > 2 && s.nutrient().len() == n && s.pressure().len() == n && s.nutrient_correction().len() == n);
        assert!((s.nodes()[n - 1] - s.r0()).abs() < 1e-12);
        assert!(stationary_impl(1.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn simulation_relaxes_toward_stationary_radius() {
        let r0 = stationary_impl(1.0, 1.0, 0.5, 1.0).unwrap().r0();
        let tr = simulate_impl(1.0, 1.0, 0.5, 1.0, 0.0, 1.2, 20.0, 0.01).unwrap();
        let last = tr[tr.len() - 1];
        assert!((last - r0).abs() < (0.2 * r0) * 0.5);
        assert!(simulate_impl(1.0, 1.0, 0.5, 1.0, 0.0, 1.2, 1e3, 1e-3).is_err());
    }
}
