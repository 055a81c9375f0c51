//! First-order delay corrections to the linearized mode dynamics.
//!
//! Each angular mode carries a nutrient perturbation `omega`, a pressure
//! perturbation `q` and a boundary amplitude `rho`, all expanded as
//! zeroth order plus `tau` times first order. The zeroth-order pieces and
//! the first-order nutrient are Bessel closed forms; the first-order
//! pressure needs the Green's function of
//! `L_n = -d^2/dr^2 - (1/r) d/dr + n^2/r^2` on a disk.

use serde::Serialize;

use crate::besselkit::{h_ratio, i_n, i_n_prime, p_ratio};
use crate::error::{domain, Result};
use crate::modes::growth_rate;
use crate::quad::{gauss_legendre_points, RadialProfile};
use crate::stationary::StationaryFields;

/// Cells of the Green's-function quadrature; each gets an 8-point rule.
pub const GREEN_CELLS: usize = 2048;

/// `L_n u = f` on `(0, radius)`, `u(radius) = boundary_value`, `u` bounded
/// at the origin.
#[derive(Debug, Clone, Copy)]
pub struct LnBvp<F> {
    pub n: u32,
    pub radius: f64,
    pub forcing: F,
    pub boundary_value: f64,
}

fn check_forcing(radius: f64, f: &impl Fn(f64) -> f64) -> Result<()> {
    let mut scale = 0.0_f64;
    for k in 1..=16 {
        let v = f(radius * k as f64 / 16.0);
        if !v.is_finite() {
            return Err(domain(format!("forcing is not finite at r = {}", radius * k as f64 / 16.0)));
        }
        scale = scale.max(v.abs());
    }
    let near = f(radius * 1e-4);
    let origin = f(radius * 1e-10);
    if !near.is_finite() || !origin.is_finite() {
        return Err(domain("forcing is not finite near the origin"));
    }
    // a bounded forcing barely changes between these two radii; a 1/r
    // singularity grows by six orders of magnitude
    if origin.abs() > 1e4 * (scale + near.abs()) {
        return Err(domain("forcing is singular at the origin"));
    }
    Ok(())
}

/// Solves an [`LnBvp`] by variation of parameters.
///
/// Works in `x = r / radius`. With `A(x) = ∫_0^x y^{n+1} f` and
/// `B(x) = ∫_x^1 y^{1-n} f` the bounded solution is
/// `radius^2/(2n) [x^{-n} A + x^n B - x^n A(1)] + u(radius) x^n` for
/// `n >= 1`, and `radius^2 [ln(1/x) ∫_0^x y f + ∫_x^1 ln(1/y) y f] + u(radius)`
/// for `n = 0`. The running integrals are accumulated cell by cell in
/// scaled form so no power of `x` overflows.
pub fn ln_solve<F: Fn(f64) -> f64>(problem: &LnBvp<F>) -> Result<RadialProfile> {
    let LnBvp {
        n,
        radius,
        ref forcing,
        boundary_value,
    } = *problem;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(domain(format!("radius must be positive, got {radius}")));
    }
    check_forcing(radius, forcing)?;
    let m = GREEN_CELLS;
    let xs: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let f = |y: f64| forcing(radius * y);
    let r2 = radius * radius;
    let mut values = vec![0.0; m + 1];

    if n == 0 {
        // forward: A_i = ∫_0^{x_i} y f
        let mut a = vec![0.0; m + 1];
        // backward: C_i = ∫_{x_i}^1 ln(1/y) y f
        let mut c = vec![0.0; m + 1];
        for i in 0..m {
            let (mut sa, mut sc) = (0.0, 0.0);
            // the logarithm is not polynomial near the origin, so the
            // first cell is split geometrically toward 0
            let pieces: Vec<(f64, f64)> = if i == 0 {
                (0..48)
                    .map(|k| (xs[1] * 0.5f64.powi(k + 1), xs[1] * 0.5f64.powi(k)))
                    .collect()
            } else {
                vec![(xs[i], xs[i + 1])]
            };
            for (lo, hi) in pieces {
                for (y, w) in gauss_legendre_points(lo, hi) {
                    let fy = f(y);
                    sa += w * y * fy;
                    sc += w * (-y.ln()) * y * fy;
                }
            }
            a[i + 1] = a[i] + sa;
            c[i] = sc;
        }
        for i in (0..m).rev() {
            c[i] += c[i + 1];
        }
        for i in 0..=m {
            let log_term = if i == 0 { 0.0 } else { -xs[i].ln() * a[i] };
            values[i] = r2 * (log_term + c[i]) + boundary_value;
        }
        let flux = -radius * a[m];
        let nodes: Vec<f64> = xs.iter().map(|x| x * radius).collect();
        let mut nodes = nodes;
        nodes[m] = radius;
        return RadialProfile::from_parts(radius, nodes, values, flux);
    }

    let nf = n as i32;
    // a_i = ∫_0^{x_i} (y/x_i)^n y f ;  b_i = ∫_{x_i}^1 (x_i/y)^n y f
    let mut a = vec![0.0; m + 1];
    let mut b = vec![0.0; m + 1];
    let mut cell_b = vec![0.0; m];
    for i in 0..m {
        let (lo, hi) = (xs[i], xs[i + 1]);
        let (mut sa, mut sb) = (0.0, 0.0);
        for (y, w) in gauss_legendre_points(lo, hi) {
            let fy = f(y);
            sa += w * (y / hi).powi(nf) * y * fy;
            sb += w * (lo / y).powi(nf) * y * fy;
        }
        let shrink = (lo / hi).powi(nf);
        a[i + 1] = shrink * a[i] + sa;
        cell_b[i] = sb;
    }
    for i in (0..m).rev() {
        let shrink = (xs[i] / xs[i + 1]).powi(nf);
        b[i] = shrink * b[i + 1] + cell_b[i];
    }
    let a_total = a[m];
    let scale = r2 / (2.0 * f64::from(n));
    for i in 0..=m {
        let xn = xs[i].powi(nf);
        values[i] = scale * (a[i] + b[i] - xn * a_total) + boundary_value * xn;
    }
    let flux = (-r2 * a_total + f64::from(n) * boundary_value) / radius;
    let mut nodes: Vec<f64> = xs.iter().map(|x| x * radius).collect();
    nodes[m] = radius;
    RadialProfile::from_parts(radius, nodes, values, flux)
}

/// Boundary derivative `u'(radius)` of the solution with zero boundary
/// value: `-radius^{-n-1} ∫_0^radius s^{n+1} f(s) ds`.
pub fn ln_boundary_flux(n: u32, radius: f64, forcing: impl Fn(f64) -> f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(domain(format!("radius must be positive, got {radius}")));
    }
    check_forcing(radius, &forcing)?;
    let m = GREEN_CELLS;
    let nf = n as i32 + 1;
    let mut total = 0.0;
    for i in 0..m {
        let (lo, hi) = (i as f64 / m as f64, (i + 1) as f64 / m as f64);
        for (y, w) in gauss_legendre_points(lo, hi) {
            total += w * y.powi(nf) * forcing(radius * y);
        }
    }
    Ok(-radius * total)
}

/// Closed-form perturbation fields of one angular mode about a stationary
/// state. Amplitudes `rho0`, `rho1` enter linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeFields {
    pub n: u32,
    pub base: StationaryFields,
    /// `h_n(r0)`.
    pub h_n: f64,
    /// `P_n(r0)`.
    pub p_n: f64,
    /// Zeroth-order growth rate of the mode.
    pub rate: f64,
    /// Coefficient of the `(r/r0)^n` part of the zeroth-order pressure.
    pub q0_harmonic: f64,
    /// Mixing coefficient of the first-order nutrient.
    pub h_mix: f64,
    in_r0: f64,
}

impl ModeFields {
    pub fn new(n: u32, base: &StationaryFields) -> Self {
        let (a, r0) = (base.params.alpha, base.r0);
        let (p0, p1) = (base.p0_r0, base.p1_r0);
        let nf = f64::from(n);
        let h_n = h_ratio(n, r0);
        let p_n = p_ratio(n, r0);
        let lam = base.lambda;
        let mu = base.params.mu;
        let rate = growth_rate(n, mu, r0, a, base.params.sigma_bar);
        let q0_harmonic = (nf * nf - 1.0) / (r0 * r0) - mu * lam / (a + h_n);
        let d = a + r0 * p0;
        let h_mix = (1.0 - p0 + a * r0 * p0) / (a + h_n)
            * (1.0 - p_n + (nf * nf - nf) / (r0 * r0) + a * h_n)
            + ((1.0 - p0 - r0 * r0 * (p0 - p1) - a * r0 * (p0 - p1)) / d
                - a * a * (1.0 - r0 * r0 * (p0 - p1)) / d)
                * p0;
        Self {
            n,
            base: *base,
            h_n,
            p_n,
            rate,
            q0_harmonic,
            h_mix,
            in_r0: i_n(n, r0),
        }
    }

    fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    fn omega0_scale(&self) -> f64 {
        -self.base.lambda / (self.base.params.alpha + self.h_n)
    }

    pub fn omega0(&self, r: f64, rho0: f64) -> f64 {
        self.omega0_scale() * i_n(self.n, r) / self.in_r0 * rho0
    }

    pub fn omega0_prime(&self, r: f64, rho0: f64) -> f64 {
        self.omega0_scale() * i_n_prime(self.n, r) / self.in_r0 * rho0
    }

    /// `omega0''` from its closed form; valid for `r > 0`.
    pub fn omega0_second(&self, r: f64, rho0: f64) -> f64 {
        let nf = self.nf();
        self.omega0(r, rho0) * (1.0 + (nf * nf - nf) / (r * r) - p_ratio(self.n, r))
    }

    pub fn q0(&self, r: f64, rho0: f64) -> f64 {
        let mu = self.base.params.mu;
        -mu * self.omega0(r, rho0)
            + self.q0_harmonic * (r / self.base.r0).powi(self.n as i32) * rho0
    }

    pub fn q0_prime(&self, r: f64, rho0: f64) -> f64 {
        let mu = self.base.params.mu;
        let harmonic = if self.n == 0 {
            0.0
        } else {
            self.nf() * r.powi(self.n as i32 - 1) / self.base.r0.powi(self.n as i32)
        };
        -mu * self.omega0_prime(r, rho0) + self.q0_harmonic * harmonic * rho0
    }

    /// `q0''(r0)` in its reduced closed form.
    pub fn q0_second_boundary(&self, rho0: f64) -> f64 {
        let nf = self.nf();
        let r0 = self.base.r0;
        let mu = self.base.params.mu;
        ((nf * nf - 1.0) * (nf * nf - nf) / r0.powi(4)
            + mu * self.base.lambda / (self.base.params.alpha + self.h_n) * (1.0 - self.p_n))
            * rho0
    }

    fn omega1_scale(&self, rho0: f64, rho1: f64) -> f64 {
        let b = &self.base;
        (-b.lambda * rho1 + b.sigma_boundary * self.h_mix * b.r1 * rho0)
            / ((b.params.alpha + self.h_n) * self.in_r0)
    }

    /// First-order nutrient perturbation, a multiple of `I_n(r)`.
    pub fn omega1(&self, r: f64, rho0: f64, rho1: f64) -> f64 {
        self.omega1_scale(rho0, rho1) * i_n(self.n, r)
    }

    pub fn omega1_prime(&self, r: f64, rho0: f64, rho1: f64) -> f64 {
        self.omega1_scale(rho0, rho1) * i_n_prime(self.n, r)
    }

    /// Residual of the Robin condition satisfied by the first-order
    /// nutrient, with every zeroth-order derivative on the right-hand side
    /// taken by finite differences of the closed forms. Relative to the
    /// largest term.
    pub fn omega1_boundary_residual(&self, rho0: f64, rho1: f64) -> f64 {
        let b = &self.base;
        let (a, r0, r1) = (b.params.alpha, b.r0, b.r1);
        let h2 = 1e-3 * r0.max(1.0);
        let h1 = 1e-5 * r0.max(1.0);
        let second = |g: &dyn Fn(f64) -> f64| {
            (-g(r0 + 2.0 * h2) + 16.0 * g(r0 + h2) - 30.0 * g(r0) + 16.0 * g(r0 - h2)
                - g(r0 - 2.0 * h2))
                / (12.0 * h2 * h2)
        };
        let first = |g: &dyn Fn(f64) -> f64| (g(r0 + h1) - g(r0 - h1)) / (2.0 * h1);

        let w0 = |r: f64| self.omega0(r, rho0);
        let s0pp = |r: f64| b.sigma0_second(r);
        let s1 = |r: f64| b.sigma1(r);
        let terms = [
            -(second(&w0) + a * first(&w0)) * r1,
            -b.lambda * rho1,
            -first(&s0pp) * r1 * rho0,
            -a * second(&|r| b.sigma0(r)) * r1 * rho0,
            -(second(&s1) + a * first(&s1)) * rho0,
        ];
        let lhs = self.omega1_prime(r0, rho0, rho1) + a * self.omega1(r0, rho0, rho1);
        let rhs: f64 = terms.iter().sum();
        let scale = terms.iter().fold(lhs.abs(), |m, t| m.max(t.abs()));
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }

    /// Source of the first-order pressure, minus the `omega1` part which is
    /// absorbed by the `-mu omega1` term: per unit `rho0`.
    pub fn pressure_forcing(&self, r: f64) -> f64 {
        let b = &self.base;
        let mu = b.params.mu;
        mu * b.sigma0_prime(r) * self.q0_prime(r, 1.0)
            + mu * self.omega0_prime(r, 1.0) * b.p0_prime(r)
            - mu * self.rate * self.omega0(r, 1.0)
    }

    /// Boundary value of the first-order pressure.
    pub fn q1_boundary_value(&self, rho0: f64, rho1: f64) -> f64 {
        let b = &self.base;
        let (nf, r0) = (self.nf(), b.r0);
        -self.q0_prime(r0, rho0) * b.r1 + (nf * nf - 1.0) / (r0 * r0) * rho1
            - 2.0 * (nf * nf - 1.0) / r0.powi(3) * b.r1 * rho0
    }

    /// Boundary value of the harmonic part `C r^n`, chosen so that the
    /// assembled pressure meets [`Self::q1_boundary_value`].
    pub fn harmonic_boundary_value(&self, rho0: f64, rho1: f64) -> f64 {
        let r0 = self.base.r0;
        self.base.params.mu * self.omega1(r0, rho0, rho1) + self.q1_boundary_value(rho0, rho1)
    }

    /// Coefficient of `r^n` in the harmonic part, in its reduced closed
    /// form (mode `n != 1`).
    pub fn harmonic_coefficient_closed(&self, rho0: f64, rho1: f64) -> f64 {
        let b = &self.base;
        let (nf, r0, a, mu) = (self.nf(), b.r0, b.params.alpha, b.params.mu);
        let rn = r0.powi(self.n as i32);
        b.r1 * rho0 / rn
            * (mu / (a + self.h_n) * (b.sigma_boundary * self.h_mix - b.lambda * r0 * self.p_n)
                - (nf + 2.0) * (nf * nf - 1.0) / r0.powi(3))
            + self.q0_harmonic / rn * rho1
    }

    /// `dq1/dr` at the boundary given the Green's-function flux of
    /// [`Self::pressure_forcing`] per unit `rho0`.
    pub fn q1_boundary_derivative(&self, unit_flux: f64, rho0: f64, rho1: f64) -> f64 {
        let r0 = self.base.r0;
        let mu = self.base.params.mu;
        -mu * self.omega1_prime(r0, rho0, rho1)
            + unit_flux * rho0
            + self.nf() * self.harmonic_boundary_value(rho0, rho1) / r0
    }

    /// The same derivative from its reduced closed form (mode `n != 1`).
    pub fn q1_boundary_derivative_closed(&self, unit_flux: f64, rho0: f64, rho1: f64) -> f64 {
        let b = &self.base;
        let (nf, r0, a, mu) = (self.nf(), b.r0, b.params.alpha, b.params.mu);
        let ah = a + self.h_n;
        unit_flux * rho0
            + (nf * (nf * nf - 1.0) / r0.powi(3) + b.lambda * mu * r0 * self.p_n / ah) * rho1
            - (mu * r0 * self.p_n / ah * (b.sigma_boundary * self.h_mix + b.lambda * nf / r0)
                + nf * (nf + 2.0) * (nf * nf - 1.0) / r0.powi(4))
                * b.r1
                * rho0
    }

    /// Coefficient of `rho1` in the first-order amplitude equation, in its
    /// reduced closed form. Equals the zeroth-order rate.
    pub fn linear_coefficient(&self) -> f64 {
        let b = &self.base;
        let (nf, r0, a, mu) = (self.nf(), b.r0, b.params.alpha, b.params.mu);
        -(nf * (nf * nf - 1.0) / r0.powi(3) + b.lambda * mu * r0 * self.p_n / (a + self.h_n)
            - mu * b.sigma_boundary * r0 * r0 * b.p0_r0 * b.p1_r0)
    }

    /// Right-hand side of the first-order amplitude equation.
    pub fn rho1_rate(&self, unit_flux: f64, rho0: f64, rho1: f64) -> f64 {
        let b = &self.base;
        -b.p0_second_boundary() * rho1
            - (b.p0_third_boundary() * b.r1 + b.p1_second_boundary()) * rho0
            - self.q0_second_boundary(rho0) * b.r1
            - self.q1_boundary_derivative(unit_flux, rho0, rho1)
    }

    /// Green's-function flux of [`Self::pressure_forcing`].
    pub fn unit_flux(&self) -> Result<f64> {
        ln_boundary_flux(self.n, self.base.r0, |r| self.pressure_forcing(r))
    }
}

/// First-order nutrient perturbation of mode `n` on the profile grid.
pub fn omega1(n: u32, base: &StationaryFields, rho0: f64, rho1: f64) -> Result<RadialProfile> {
    let m = ModeFields::new(n, base);
    RadialProfile::sample(
        base.r0,
        crate::quad::PROFILE_NODES,
        |r| m.omega1(r, rho0, rho1),
        m.omega1_prime(base.r0, rho0, rho1),
    )
}

/// Assembled first-order pressure perturbation for a mode `n != 1`:
/// `-mu omega1` plus Green's-function solutions for the zeroth-order
/// sources plus a harmonic `C r^n` carrying the boundary condition.
pub fn q1_assemble(n: u32, base: &StationaryFields, rho0: f64, rho1: f64) -> Result<RadialProfile> {
    if n == 1 {
        return Err(domain("mode 1 has its own closed form; use q1_mode1"));
    }
    assemble_via_green(n, base, rho0, rho1)
}

fn assemble_via_green(n: u32, base: &StationaryFields, rho0: f64, rho1: f64) -> Result<RadialProfile> {
    let m = ModeFields::new(n, base);
    let forced = ln_solve(&LnBvp {
        n,
        radius: base.r0,
        forcing: |r: f64| rho0 * m.pressure_forcing(r),
        boundary_value: m.harmonic_boundary_value(rho0, rho1),
    })?;
    let mu = base.params.mu;
    let values: Vec<f64> = forced
        .nodes
        .iter()
        .zip(&forced.values)
        .map(|(&r, &u)| -mu * m.omega1(r, rho0, rho1) + u)
        .collect();
    let slope = -mu * m.omega1_prime(base.r0, rho0, rho1) + forced.boundary_derivative;
    RadialProfile::from_parts(base.r0, forced.nodes, values, slope)
}

/// Closed-form first-order pressure of the translation mode.
pub fn q1_mode1(base: &StationaryFields, rho0: f64, rho1: f64) -> Result<RadialProfile> {
    let m = ModeFields::new(1, base);
    let nodes = crate::quad::uniform_nodes(base.r0, GREEN_CELLS + 1)?;
    let values = nodes.iter().map(|&r| mode1_pressure(&m, r, rho0, rho1)).collect();
    RadialProfile::from_parts(base.r0, nodes, values, mode1_slope_closed(&m, rho0, rho1))
}

/// The translation-mode pressure from [`ln_solve`], for cross-checking.
pub fn q1_mode1_via_green(base: &StationaryFields, rho0: f64, rho1: f64) -> Result<RadialProfile> {
    assemble_via_green(1, base, rho0, rho1)
}

fn mode1_pressure(m: &ModeFields, r: f64, rho0: f64, rho1: f64) -> f64 {
    let b = &m.base;
    let (mu, c, r0, p0) = (b.params.mu, b.sigma_boundary, b.r0, b.p0_r0);
    let i0r0 = i_n(0, r0);
    let i1r0 = i_n(1, r0);
    let c4 = mu * c * p0 * (-rho1 + mu * c / (2.0 * i0r0) * rho0);
    let k = (mu * c).powi(2) * r0 * p0 / i0r0 * rho0;
    let (i0, i1, i2) = (i_n(0, r), i_n(1, r), i_n(2, r));
    let part = 0.5 * k * ((i0 * i2 - i1 * i1) / i1r0 - (1.0 - 2.0 * i2) / r0) * r;
    -mu * m.omega1(r, rho0, rho1) + c4 * r + part
}

fn mode1_slope_closed(m: &ModeFields, rho0: f64, rho1: f64) -> f64 {
    let b = &m.base;
    let (mu, c, r0, p0, p1, a) = (
        b.params.mu,
        b.sigma_boundary,
        b.r0,
        b.p0_r0,
        b.p1_r0,
        b.params.alpha,
    );
    mu * c
        * ((1.0 - 2.0 * p0) * rho1
            - b.r1 * rho0 * p0 / (a + r0 * p0) * (r0 * r0 * p1 + 2.0 * p0 + a * r0 * (1.0 - p1)))
}

/// Closed-form boundary derivative of the translation-mode pressure.
pub fn q1_mode1_boundary_derivative(base: &StationaryFields, rho0: f64, rho1: f64) -> f64 {
    mode1_slope_closed(&ModeFields::new(1, base), rho0, rho1)
}

/// Evolution of the first-order amplitude of one mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rho1Trajectory {
    pub n: u32,
    pub rate: f64,
    pub t_grid: Vec<f64>,
    pub rho0: Vec<f64>,
    pub rho1: Vec<f64>,
    /// Least-squares slope of `ln |rho1|` over `t >= 1`; `None` when the
    /// amplitude vanishes or stays constant to rounding.
    pub rate_envelope: Option<f64>,
}

impl Rho1Trajectory {
    /// CSV with `t, rho0_n, rho1_n` and the composed `rho0 + tau rho1`.
    pub fn to_csv(&self, tau: f64) -> String {
        let composed: Vec<f64> = self
            .rho0
            .iter()
            .zip(&self.rho1)
            .map(|(a, b)| a + tau * b)
            .collect();
        crate::io::columns_to_csv(
            &["t", "rho0_n", "rho1_n", "rho_n"],
            &[&self.t_grid, &self.rho0, &self.rho1, &composed],
        )
    }
}

fn fit_log_slope(t: &[f64], v: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(v)
        .filter(|(t, v)| **t >= 1.0 && v.abs() > 1e-300)
        .map(|(t, v)| (*t, v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let spread = pts.iter().map(|p| (p.1 - my).abs()).fold(0.0, f64::max);
    if sxx == 0.0 || spread < 1e-12 {
        return None;
    }
    Some(sxy / sxx)
}

fn flush_subnormal(v: f64) -> f64 {
    if v.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

/// Integrates the zeroth- and first-order amplitudes of mode `n` together.
///
/// The first-order equation is forced through the boundary flux of the
/// first-order pressure. That flux is linear in the zeroth-order amplitude,
/// so it is computed once per unit amplitude and rescaled at every stage.
pub fn rho1_evolve(
    n: u32,
    base: &StationaryFields,
    rho0_init: f64,
    rho1_init: f64,
    t_grid: &[f64],
) -> Result<Rho1Trajectory> {
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("time grid must start at 0 and increase"));
    }
    let m = ModeFields::new(n, base);
    let flux = m.unit_flux()?;
    let rate = m.rate;
    let dt_max = 1e-2 * (1.0 / rate.abs()).min(1.0);
    let rhs = |y0: f64, y1: f64| (rate * y0, m.rho1_rate(flux, y0, y1));

    let mut rho0 = vec![rho0_init];
    let mut rho1 = vec![rho1_init];
    let (mut y0, mut y1) = (rho0_init, rho1_init);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / dt_max).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(y0, y1);
            let k2 = rhs(y0 + 0.5 * dt * k1.0, y1 + 0.5 * dt * k1.1);
            let k3 = rhs(y0 + 0.5 * dt * k2.0, y1 + 0.5 * dt * k2.1);
            let k4 = rhs(y0 + dt * k3.0, y1 + dt * k3.1);
            y0 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y1 += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            // subnormal amplitudes stop changing under rounding; they are zero
            y0 = flush_subnormal(y0);
            y1 = flush_subnormal(y1);
        }
        rho0.push(y0);
        rho1.push(y1);
    }
    let rate_envelope = fit_log_slope(t_grid, &rho1);
    Ok(Rho1Trajectory {
        n,
        rate,
        t_grid: t_grid.to_vec(),
        rho0,
        rho1,
        rate_envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use approx::assert_relative_eq;

    fn base(mu: f64) -> StationaryFields {
        StationaryFields::solve(&ModelParams::default().with_mu(mu)).unwrap()
    }

    #[test]
    fn homogeneous_solution() {
        let u = ln_solve(&LnBvp {
            n: 2,
            radius: 1.5,
            forcing: |_: f64| 0.0,
            boundary_value: 1.0,
        })
        .unwrap();
        for (r, v) in u.nodes.iter().zip(&u.values) {
            assert!((v - (r / 1.5).powi(2)).abs() < 1e-14);
        }
        assert_relative_eq!(u.boundary_derivative, 2.0 / 1.5, max_relative = 1e-14);
    }

    #[test]
    fn reproduces_bessel_identities() {
        let radius = 2.3;
        let exact = |r: f64| r * (1.0 - 2.0 * i_n(2, r));
        let u = ln_solve(&LnBvp {
            n: 1,
            radius,
            forcing: |r: f64| 2.0 * r * i_n(0, r),
            boundary_value: exact(radius),
        })
        .unwrap();
        for (r, v) in u.nodes.iter().zip(&u.values) {
            assert!((v - exact(*r)).abs() < 1e-10);
        }
        let exact = |r: f64| r * (i_n(0, r) * i_n(2, r) - i_n(1, r).powi(2));
        let u = ln_solve(&LnBvp {
            n: 1,
            radius,
            forcing: |r: f64| {
                let i1 = i_n(1, r);
                4.0 * i1 * (i_n(0, r) - if r > 0.0 { i1 / r } else { 0.0 })
            },
            boundary_value: exact(radius),
        })
        .unwrap();
        for (r, v) in u.nodes.iter().zip(&u.values) {
            assert!((v - exact(*r)).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_mode_matches_polynomial() {
        // L_0 (1 - r^2/4 ... ) : u = (R^2 - r^2)/4 solves L_0 u = 1
        let u = ln_solve(&LnBvp {
            n: 0,
            radius: 2.0,
            forcing: |_: f64| 1.0,
            boundary_value: 0.0,
        })
        .unwrap();
        for (r, v) in u.nodes.iter().zip(&u.values) {
            assert!((v - (4.0 - r * r) / 4.0).abs() < 1e-12, "{r} {v}");
        }
        assert!((u.boundary_derivative + 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_forcing_rejected() {
        let err = ln_solve(&LnBvp {
            n: 2,
            radius: 1.0,
            forcing: |r: f64| 1.0 / r,
            boundary_value: 0.0,
        });
        assert!(err.is_err());
    }

    #[test]
    fn flux_agrees_with_profile() {
        let f = |r: f64| r.cos() * r * r;
        let u = ln_solve(&LnBvp {
            n: 3,
            radius: 1.2,
            forcing: f,
            boundary_value: 0.0,
        })
        .unwrap();
        let flux = ln_boundary_flux(3, 1.2, f).unwrap();
        assert_relative_eq!(u.boundary_derivative, flux, max_relative = 1e-14);
    }

    #[test]
    fn omega1_bc_holds() {
        let b = base(1.3);
        for n in [0u32, 1, 2, 3, 5] {
            let m = ModeFields::new(n, &b);
            assert!(m.omega1_boundary_residual(0.7, -0.3) <= 1e-8, "n = {n}");
        }
    }

    #[test]
    fn omega1_mode1_closed_form() {
        let b = base(1.3);
        let m = ModeFields::new(1, &b);
        let (a, r0, p0) = (b.params.alpha, b.r0, b.p0_r0);
        let (rho0, rho1) = (0.7, -0.3);
        for r in [0.2, 0.9, r0] {
            let closed = b.sigma_boundary * i_n(1, r) / i_n(0, r0)
                * (-rho1 + b.r1 * rho0 * (1.0 - p0 + a * r0 * p0) / (a + r0 * p0));
            assert_relative_eq!(m.omega1(r, rho0, rho1), closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn harmonic_coefficient_closed_form() {
        let b = base(1.3);
        for n in [0u32, 2, 3, 5] {
            let m = ModeFields::new(n, &b);
            let from_bc = m.harmonic_boundary_value(0.7, -0.3) / b.r0.powi(n as i32);
            let closed = m.harmonic_coefficient_closed(0.7, -0.3);
            assert_relative_eq!(from_bc, closed, max_relative = 1e-11);
        }
    }

    #[test]
    fn linear_coefficient_is_rate() {
        let b = base(1.3);
        for n in [0u32, 2, 3, 7] {
            let m = ModeFields::new(n, &b);
            assert_relative_eq!(m.linear_coefficient(), m.rate, max_relative = 1e-10);
            let flux = m.unit_flux().unwrap();
            let slope = m.rho1_rate(flux, 0.0, 1.0);
            assert_relative_eq!(slope, m.rate, max_relative = 1e-10);
        }
    }

    #[test]
    fn q1_boundary_data() {
        let b = base(1.3);
        for n in [0u32, 2, 4] {
            let m = ModeFields::new(n, &b);
            let q = q1_assemble(n, &b, 0.7, -0.3).unwrap();
            let expected = m.q1_boundary_value(0.7, -0.3);
            assert!((q.boundary_value() - expected).abs() <= 1e-8 * expected.abs().max(1.0));
            let flux = m.unit_flux().unwrap();
            let closed = m.q1_boundary_derivative_closed(flux, 0.7, -0.3);
            assert_relative_eq!(q.boundary_derivative, closed, max_relative = 1e-6);
        }
        assert!(q1_assemble(1, &b, 0.7, -0.3).is_err());
        let zero = q1_assemble(2, &b, 0.0, 0.0).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn mode1_routes_agree() {
        let b = base(1.3);
        let closed = q1_mode1(&b, 0.7, -0.3).unwrap();
        let green = q1_mode1_via_green(&b, 0.7, -0.3).unwrap();
        let diff = closed
            .values
            .iter()
            .zip(&green.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 1e-7, "max difference {diff}");
        assert_relative_eq!(
            closed.boundary_derivative,
            green.boundary_derivative,
            max_relative = 1e-8
        );
    }

    #[test]
    fn mode1_first_order_amplitude_is_constant() {
        let b = base(1.0);
        let t: Vec<f64> = (0..=10).map(f64::from).collect();
        let traj = rho1_evolve(1, &b, 0.4, 0.25, &t).unwrap();
        for v in &traj.rho1 {
            assert!((v - 0.25).abs() <= 1e-8);
        }
        assert!(traj.rate_envelope.is_none());
    }
}
