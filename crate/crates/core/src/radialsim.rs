//! Nonlinear radially symmetric evolution with delayed proliferation.
//!
//! The nutrient is quasi-steady, so at every instant it is the Bessel closed
//! form for the current radius. The pressure gradient at time `t` needs the
//! nutrient a delay `tau` earlier at the foot of each cell trajectory; feet
//! are found by tracing backward through stored pressure-gradient fields.
//! The boundary advances by Heun's method on `dR/dt = -p'(R)`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::besselkit::{i_n, p_ratio};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quad::{cumulative_integral, interp_cubic, PROFILE_NODES};
use crate::stationary::delayed_field;

/// Runs abort when the radius falls to this value.
pub const RADIUS_FLOOR: f64 = 1e-4;
/// Speed below which a step counts toward convergence.
pub const CONVERGED_SPEED: f64 = 1e-9;
/// Consecutive slow steps that declare convergence.
pub const CONVERGED_STEPS: usize = 100;
const MIN_SUBSTEPS: usize = 16;
/// Relative overshoot of a foot past the delayed domain tolerated before a
/// clamp is counted.
const ESCAPE_TOL: f64 = 1e-6;

/// Pressure gradient `p'(R x)` on uniform nodes `x` of `[0, 1]`, for the
/// domain radius `R` at time `t`.
#[derive(Debug, Clone, PartialEq)]
struct FieldSample {
    t: f64,
    radius: f64,
    gradient: Vec<f64>,
}

impl FieldSample {
    fn spacing(&self) -> f64 {
        1.0 / (self.gradient.len() - 1) as f64
    }

    /// Gradient at physical radius `r`, held constant past the boundary.
    fn at(&self, r: f64) -> f64 {
        interp_cubic(&self.gradient, self.spacing(), (r / self.radius).clamp(0.0, 1.0))
    }

    fn boundary_gradient(&self) -> f64 {
        *self.gradient.last().unwrap()
    }
}

/// Time-ordered pressure-gradient fields covering at least the trailing
/// delay window. Before the first sample the field is taken as constant,
/// which encodes time-independent initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayHistory {
    pub window: f64,
    samples: VecDeque<FieldSample>,
}

impl DelayHistory {
    fn new(window: f64, first: FieldSample) -> Self {
        let mut samples = VecDeque::new();
        samples.push_back(first);
        Self { window, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample times, oldest first.
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    fn latest(&self) -> &FieldSample {
        self.samples.back().expect("history is never empty")
    }

    fn push(&mut self, sample: FieldSample) {
        debug_assert!(sample.t > self.latest().t);
        self.samples.push_back(sample);
        let cutoff = self.latest().t - self.window;
        // keep one sample at or before the cutoff for interpolation
        while self.samples.len() > 2 && self.samples[1].t <= cutoff {
            self.samples.pop_front();
        }
    }

    /// Bracketing samples and the weight of the later one.
    fn locate<'a>(&'a self, top: Option<&'a FieldSample>, s: f64) -> (&'a FieldSample, &'a FieldSample, f64) {
        if let Some(top) = top {
            let last = self.latest();
            if s >= last.t {
                let w = ((s - last.t) / (top.t - last.t)).clamp(0.0, 1.0);
                return (last, top, w);
            }
        }
        let k = self.samples.partition_point(|x| x.t <= s);
        if k == 0 {
            let first = &self.samples[0];
            return (first, first, 0.0);
        }
        if k == self.samples.len() {
            let last = self.latest();
            return (last, last, 0.0);
        }
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        (a, b, (s - a.t) / (b.t - a.t))
    }

    fn radius_at(&self, top: Option<&FieldSample>, s: f64) -> f64 {
        let (a, b, w) = self.locate(top, s);
        (1.0 - w) * a.radius + w * b.radius
    }
}

/// A running simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub radius: f64,
    pub history: DelayHistory,
    /// Foot points that left their domain and were clamped.
    pub clamp_count: u64,
}

impl SimState {
    /// Starts from radius `radius_init` with time-independent data on
    /// `[-tau, 0]`: the pressure field is the self-consistent one for a
    /// frozen domain of that radius.
    pub fn new(params: &ModelParams, radius_init: f64) -> Result<Self> {
        params.validate()?;
        if !(radius_init > RADIUS_FLOOR && radius_init.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "initial radius must exceed {RADIUS_FLOOR}, got {radius_init}"
            )));
        }
        let field = delayed_field(params, radius_init, 1e-14)?;
        let gradient = field.velocity.iter().map(|v| v * radius_init).collect();
        Ok(Self {
            t: 0.0,
            radius: radius_init,
            history: DelayHistory::new(
                params.tau,
                FieldSample {
                    t: 0.0,
                    radius: radius_init,
                    gradient,
                },
            ),
            clamp_count: 0,
        })
    }

    /// Current `p'(R)`; the radius moves at minus this.
    pub fn boundary_gradient(&self) -> f64 {
        self.history.latest().boundary_gradient()
    }

    /// Pressure gradient at the current time on uniform nodes of `[0, R]`.
    pub fn gradient_profile(&self) -> Vec<f64> {
        self.history.latest().gradient.clone()
    }
}

fn substeps(tau: f64, dt: f64) -> usize {
    let per_sample = ((tau / dt).round() as usize).max(1);
    per_sample * MIN_SUBSTEPS.div_ceil(per_sample)
}

/// Computes the gradient field at time `t1` for radius `r1`, tracing feet
/// back through `history` with `top` as the field at `t1`.
fn solve_field(
    params: &ModelParams,
    history: &DelayHistory,
    top: &FieldSample,
    clamps: &mut u64,
) -> FieldSample {
    let n = PROFILE_NODES;
    let (t1, r1) = (top.t, top.radius);
    let tau = params.tau;
    let h = r1 / (n - 1) as f64;

    let mut feet: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    if tau > 0.0 {
        let m = substeps(tau, t1 - history.latest().t);
        let ds = tau / m as f64;
        // field at every stage time, resampled once onto its own uniform grid
        let stage: Vec<(f64, Vec<f64>)> = (0..=2 * m)
            .map(|j| {
                let (a, b, w) = history.locate(Some(top), t1 - 0.5 * ds * j as f64);
                if w == 0.0 {
                    return (a.radius, a.gradient.clone());
                }
                let radius = (1.0 - w) * a.radius + w * b.radius;
                let values = (0..n)
                    .map(|k| {
                        let r = radius * k as f64 / (n - 1) as f64;
                        (1.0 - w) * a.at(r) + w * b.at(r)
                    })
                    .collect();
                (radius, values)
            })
            .collect();
        let spacing = 1.0 / (n - 1) as f64;
        let eval = |j: usize, z: f64| {
            let (radius, values) = &stage[j];
            interp_cubic(values, spacing, (z / radius).clamp(0.0, 1.0))
        };
        for z in feet.iter_mut() {
            let mut x = *z;
            for k in 0..m {
                let j = 2 * k;
                let k1 = eval(j, x);
                let k2 = eval(j + 1, x + 0.5 * ds * k1);
                let k3 = eval(j + 1, x + 0.5 * ds * k2);
                let k4 = eval(j + 2, x + ds * k3);
                x += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            *z = x;
        }
    }

    let r_delay = if tau > 0.0 {
        history.radius_at(Some(top), t1 - tau)
    } else {
        r1
    };
    let (a, sb, st, mu) = (params.alpha, params.sigma_bar, params.sigma_tilde, params.mu);
    let c = a * sb / (a + r_delay * p_ratio(0, r_delay)) / i_n(0, r_delay);
    let weighted: Vec<f64> = feet
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let mut z = z;
            if !(0.0..=r_delay).contains(&z) {
                if z > r_delay * (1.0 + ESCAPE_TOL) || z < -ESCAPE_TOL * r_delay {
                    *clamps += 1;
                }
                z = z.clamp(0.0, r_delay);
            }
            (c * i_n(0, z) - st) * k as f64 * h
        })
        .collect();
    let running = cumulative_integral(&weighted, h);
    let mut gradient = vec![0.0; n];
    for k in 1..n {
        gradient[k] = -mu * running[k] / (k as f64 * h);
    }
    FieldSample {
        t: t1,
        radius: r1,
        gradient,
    }
}

fn check_step(params: &ModelParams, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if params.tau > 0.0 && dt > params.tau / 4.0 + 1e-15 {
        return Err(Error::InvalidParams(format!(
            "dt must not exceed tau/4 = {}, got {dt}",
            params.tau / 4.0
        )));
    }
    Ok(())
}

impl SimState {
    /// Advances one step in place.
    pub fn advance(&mut self, dt: f64, params: &ModelParams) -> Result<()> {
        check_step(params, dt)?;
        let current = self.history.latest().clone();
        let t1 = self.t + dt;
        let speed0 = -current.boundary_gradient();
        let predicted = self.radius + dt * speed0;
        if !(predicted > RADIUS_FLOOR) {
            return Err(Error::RadiusCollapse {
                t: t1,
                radius: predicted,
            });
        }

        // guess of the field at t1 by linear extrapolation in time
        let n = self.history.len();
        let guess_gradient = if n >= 2 {
            let prev = &self.history.samples[n - 2];
            let ratio = dt / (current.t - prev.t);
            current
                .gradient
                .iter()
                .zip(&prev.gradient)
                .map(|(g, p)| g + ratio * (g - p))
                .collect()
        } else {
            current.gradient.clone()
        };
        let guess = FieldSample {
            t: t1,
            radius: predicted,
            gradient: guess_gradient,
        };
        let mut clamps = 0;
        let trial = solve_field(params, &self.history, &guess, &mut clamps);
        let radius = self.radius + 0.5 * dt * (speed0 - trial.boundary_gradient());
        if !(radius > RADIUS_FLOOR) {
            return Err(Error::RadiusCollapse { t: t1, radius });
        }
        let top = FieldSample { radius, ..trial };
        let mut final_clamps = 0;
        let field = solve_field(params, &self.history, &top, &mut final_clamps);
        self.clamp_count += final_clamps;
        self.history.push(field);
        self.t = t1;
        self.radius = radius;
        Ok(())
    }
}

/// One step from `state`, returning the new state.
pub fn step(state: &SimState, dt: f64, params: &ModelParams) -> Result<SimState> {
    let mut next = state.clone();
    next.advance(dt, params)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub radius: f64,
    pub boundary_pressure_gradient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    /// Stop as soon as the convergence flag is set.
    pub stop_on_convergence: bool,
    /// Record every k-th step (the first and last are always kept).
    pub record_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            stop_on_convergence: false,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    /// Time at which the convergence flag was first set.
    pub converged_at: Option<f64>,
    pub limit_radius: f64,
    pub final_time: f64,
    pub steps: usize,
    pub clamp_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub summary: RunSummary,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl RunResult {
    /// CSV with columns `t, radius, boundary_pressure_gradient`.
    pub fn to_csv(&self) -> String {
        let t: Vec<f64> = self.trajectory.iter().map(|p| p.t).collect();
        let r: Vec<f64> = self.trajectory.iter().map(|p| p.radius).collect();
        let g: Vec<f64> = self
            .trajectory
            .iter()
            .map(|p| p.boundary_pressure_gradient)
            .collect();
        crate::io::columns_to_csv(&["t", "radius", "boundary_pressure_gradient"], &[&t, &r, &g])
    }
}

pub fn run(params: &ModelParams, radius_init: f64, t_end: f64, dt: f64) -> Result<RunResult> {
    run_with(params, radius_init, t_end, dt, RunOptions::default())
}

pub fn run_with(
    params: &ModelParams,
    radius_init: f64,
    t_end: f64,
    dt: f64,
    options: RunOptions,
) -> Result<RunResult> {
    check_step(params, dt)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("t_end must be nonnegative, got {t_end}")));
    }
    let mut state = SimState::new(params, radius_init)?;
    let point = |s: &SimState| TrajectoryPoint {
        t: s.t,
        radius: s.radius,
        boundary_pressure_gradient: s.boundary_gradient(),
    };
    let mut trajectory = vec![point(&state)];
    let total = (t_end / dt).round() as usize;
    let every = options.record_every.max(1);
    let mut slow = if state.boundary_gradient().abs() < CONVERGED_SPEED { 1 } else { 0 };
    let mut converged_at = None;
    let mut steps = 0;
    for k in 1..=total {
        state.advance(dt, params)?;
        steps = k;
        if state.boundary_gradient().abs() < CONVERGED_SPEED {
            slow += 1;
        } else {
            slow = 0;
        }
        if slow >= CONVERGED_STEPS && converged_at.is_none() {
            converged_at = Some(state.t);
        }
        let done = options.stop_on_convergence && converged_at.is_some();
        if k % every == 0 || k == total || done {
            trajectory.push(point(&state));
        }
        if done {
            break;
        }
    }
    Ok(RunResult {
        summary: RunSummary {
            converged: converged_at.is_some(),
            converged_at,
            limit_radius: state.radius,
            final_time: state.t,
            steps,
            clamp_count: state.clamp_count,
        },
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::{solve_r0, solve_stationary_delayed};

    #[test]
    fn rejects_bad_steps() {
        let p = ModelParams::default().with_tau(0.02);
        assert!(run(&p, 1.0, 1.0, 0.01).is_err());
        assert!(run(&p, 1.0, 1.0, -0.001).is_err());
        assert!(run(&p, 0.0, 1.0, 0.001).is_err());
    }

    #[test]
    fn substep_alignment() {
        assert_eq!(substeps(0.02, 0.005), 16);
        assert_eq!(substeps(0.02, 0.0025), 16);
        assert_eq!(substeps(0.02, 0.02 / 7.0), 21);
        assert_eq!(substeps(0.1, 0.001), 100);
    }

    #[test]
    fn undelayed_stationary_state_is_fixed() {
        let p = ModelParams::default();
        let r0 = solve_r0(&p).unwrap();
        let res = run(&p, r0, 5.0, 0.01).unwrap();
        let drift = res
            .trajectory
            .iter()
            .fold(0.0_f64, |m, q| m.max((q.radius - r0).abs()));
        assert!(drift < 1e-9, "drift {drift}");
    }

    #[test]
    fn delayed_stationary_state_is_fixed() {
        let p = ModelParams::default().with_tau(0.02);
        let target = solve_stationary_delayed(&p, 1e-12).unwrap().radius;
        let res = run(&p, target, 1.0, 0.005).unwrap();
        let drift = res
            .trajectory
            .iter()
            .fold(0.0_f64, |m, q| m.max((q.radius - target).abs()));
        assert!(drift < 1e-8, "drift {drift}");
        assert_eq!(res.summary.clamp_count, 0);
    }

    #[test]
    fn history_keeps_window() {
        let p = ModelParams::default().with_tau(0.02);
        let mut s = SimState::new(&p, 1.4).unwrap();
        for _ in 0..20 {
            s.advance(0.005, &p).unwrap();
        }
        let times = s.history.times();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times[0] <= s.t - 0.02 + 1e-12);
        assert!(times.len() <= 6);
    }

    #[test]
    fn undelayed_growth_toward_r0() {
        let p = ModelParams::default().with_mu(4.0);
        let r0 = solve_r0(&p).unwrap();
        let res = run(&p, 1.1 * r0, 3.0, 0.01).unwrap();
        let radii: Vec<f64> = res.trajectory.iter().map(|q| q.radius).collect();
        assert!(radii.windows(2).all(|w| w[1] <= w[0]));
        assert!(radii.last().unwrap() > &r0);
    }
}
