//! Radial profiles on uniform grids, quadrature and interpolation.

use serde::Serialize;

use crate::error::{domain, Result};

/// Default node count for profiles. Odd, so composite Simpson applies.
pub const PROFILE_NODES: usize = 1025;

/// A function of radius sampled on a uniform grid over `[0, radius_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub radius_max: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Derivative at `radius_max`, taken from the closed form when one exists.
    pub boundary_derivative: f64,
}

impl RadialProfile {
    /// Samples `f` on `count` uniform nodes.
    pub fn sample(
        radius_max: f64,
        count: usize,
        f: impl Fn(f64) -> f64,
        boundary_derivative: f64,
    ) -> Result<Self> {
        let nodes = uniform_nodes(radius_max, count)?;
        let values: Vec<f64> = nodes.iter().map(|&r| f(r)).collect();
        Self::from_parts(radius_max, nodes, values, boundary_derivative)
    }

    pub fn from_parts(
        radius_max: f64,
        nodes: Vec<f64>,
        values: Vec<f64>,
        boundary_derivative: f64,
    ) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 4 {
            return Err(domain("profile needs at least 4 nodes and matching values"));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != radius_max {
            return Err(domain("profile nodes must span [0, radius_max]"));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(domain("profile nodes must be strictly increasing"));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!("profile value at node {k} is not finite")));
        }
        Ok(Self {
            radius_max,
            nodes,
            values,
            boundary_derivative,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.radius_max / (self.nodes.len() - 1) as f64
    }

    /// Cubic interpolation; `r` is clamped to the grid.
    pub fn eval(&self, r: f64) -> f64 {
        interp_cubic(&self.values, self.spacing(), r)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn boundary_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Pointwise linear combination with a profile on the same grid.
    pub fn axpy(&self, a: f64, other: &RadialProfile) -> RadialProfile {
        RadialProfile {
            radius_max: self.radius_max,
            nodes: self.nodes.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
            boundary_derivative: self.boundary_derivative + a * other.boundary_derivative,
        }
    }
}

pub fn uniform_nodes(radius_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(radius_max > 0.0 && radius_max.is_finite()) {
        return Err(domain(format!("radius must be positive, got {radius_max}")));
    }
    if count < 4 {
        return Err(domain("need at least 4 nodes"));
    }
    let h = radius_max / (count - 1) as f64;
    let mut nodes: Vec<f64> = (0..count).map(|k| k as f64 * h).collect();
    nodes[count - 1] = radius_max;
    Ok(nodes)
}

/// Composite Simpson on a uniform grid with an odd number of samples.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd sample count >= 3");
    let mut odd = 0.0;
    let mut even = 0.0;
    for (k, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Running integral `F_i = ∫_{x_0}^{x_i} f`, fourth-order accurate.
///
/// Interior cells use the four-point stencil
/// `h/24 (-f_{i-1} + 13 f_i + 13 f_{i+1} - f_{i+2})`; the end cells use the
/// one-sided cubic through the nearest four samples.
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 4, "cumulative integral needs at least 4 samples");
    let f = values;
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let cell = if i == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            h / 24.0 * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
        } else {
            h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + cell;
    }
    out
}

/// Four-point Lagrange interpolation on a uniform grid starting at 0.
pub fn interp_cubic(values: &[f64], h: f64, x: f64) -> f64 {
    let n = values.len();
    let last = (n - 1) as f64;
    let s = (x / h).clamp(0.0, last);
    // s >= 0, so truncation is floor
    let i = (s as usize).clamp(1, n - 3);
    let t = s - i as f64;
    let (a, b, c, d) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    // nodes at offsets -1, 0, 1, 2
    let (tp, tm, tmm) = (t + 1.0, t - 1.0, t - 2.0);
    let la = -t * tm * tmm;
    let lb = 3.0 * tp * tm * tmm;
    let lc = -3.0 * tp * t * tmm;
    let ld = tp * t * tm;
    (a * la + b * lb + c * lc + d * ld) / 6.0
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_26,
];

/// Eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for k in 0..4 {
        let dx = half * GL8_NODES[k];
        sum += GL8_WEIGHTS[k] * (f(mid - dx) + f(mid + dx));
    }
    half * sum
}

/// Nodes and weights of the same rule mapped to `[a, b]`.
pub fn gauss_legendre_points(a: f64, b: f64) -> [(f64, f64); 8] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 8];
    for k in 0..4 {
        let dx = half * GL8_NODES[k];
        out[2 * k] = (mid - dx, half * GL8_WEIGHTS[k]);
        out[2 * k + 1] = (mid + dx, half * GL8_WEIGHTS[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_exact_on_cubics() {
        let h = 0.25;
        let v: Vec<f64> = (0..9).map(|k| (k as f64 * h).powi(3)).collect();
        assert_relative_eq!(simpson(&v, h), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn cumulative_exact_on_cubics() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|k| (k as f64 * h).powi(3) - (k as f64 * h)).collect();
        let c = cumulative_integral(&v, h);
        for (k, ck) in c.iter().enumerate() {
            let x = k as f64 * h;
            assert!((ck - (x.powi(4) / 4.0 - x * x / 2.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_interp_exact_on_cubics() {
        let h = 0.2;
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        let v: Vec<f64> = (0..8).map(|k| f(k as f64 * h)).collect();
        for &x in &[0.0, 0.05, 0.33, 0.9, 1.39, 1.4] {
            assert_relative_eq!(interp_cubic(&v, h, x), f(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_degree_fifteen() {
        let val = gauss_legendre(0.0, 2.0, |x| x.powi(15));
        assert_relative_eq!(val, 2f64.powi(16) / 16.0, max_relative = 1e-13);
        let sum: f64 = gauss_legendre_points(-1.0, 3.0).iter().map(|p| p.1).sum();
        assert_relative_eq!(sum, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn profile_validation() {
        assert!(RadialProfile::sample(1.0, 9, |r| r, 1.0).is_ok());
        assert!(RadialProfile::sample(1.0, 9, |r| 1.0 / r, 1.0).is_err());
        assert!(RadialProfile::sample(-1.0, 9, |r| r, 1.0).is_err());
        assert!(RadialProfile::from_parts(1.0, vec![0.0, 0.6, 0.5, 1.0], vec![0.0; 4], 0.0).is_err());
    }
}
