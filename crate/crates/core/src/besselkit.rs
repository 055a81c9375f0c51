//! Modified Bessel functions of the first kind, the ratio functions built on
//! them, and a residual battery for the classical identities they satisfy.
//!
//! Everything downstream is expressed through the ratio
//! `P_n(r) = I_{n+1}(r) / (r I_n(r))`, which is bounded by `1/(2n+2)` and is
//! evaluated by a downward continued-fraction recurrence rather than by
//! dividing two (possibly huge) Bessel values.

use serde::Serialize;

use crate::error::{domain, Result};

/// Above this argument `bessel_i` switches from the power series to the
/// large-argument expansion.
pub const SERIES_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BesselRegime {
    Series,
    Asymptotic,
}

/// A single evaluation of `I_n(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesselEval {
    pub order: u32,
    pub argument: f64,
    pub value: f64,
    pub regime: BesselRegime,
}

/// A single evaluation of the ratio `P_n(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEval {
    pub order: u32,
    pub argument: f64,
    pub value: f64,
}

fn check_argument(r: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(domain(format!("argument must be finite, got {r}")));
    }
    if r < 0.0 {
        return Err(domain(format!("argument must be nonnegative, got {r}")));
    }
    Ok(())
}

pub fn bessel_i_eval(n: u32, r: f64) -> Result<BesselEval> {
    check_argument(r)?;
    let regime = if r <= SERIES_LIMIT {
        BesselRegime::Series
    } else {
        BesselRegime::Asymptotic
    };
    Ok(BesselEval {
        order: n,
        argument: r,
        value: i_n(n, r),
        regime,
    })
}

/// `I_n(r)` for `r >= 0`.
pub fn bessel_i(n: u32, r: f64) -> Result<f64> {
    bessel_i_eval(n, r).map(|e| e.value)
}

/// Unchecked `I_n(r)`; callers guarantee `r >= 0` and finite.
pub(crate) fn i_n(n: u32, r: f64) -> f64 {
    if r <= SERIES_LIMIT {
        series(n, r)
    } else {
        asymptotic(n, r)
    }
}

fn series(n: u32, r: f64) -> f64 {
    if r == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * r;
    let mut term = 1.0;
    for j in 1..=n {
        term *= half / f64::from(j);
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let order = f64::from(n);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + order));
        sum += term;
        if term <= 1e-16 * sum {
            break;
        }
    }
    sum
}

fn asymptotic(n: u32, r: f64) -> f64 {
    let m = 4.0 * f64::from(n) * f64::from(n);
    let z = 8.0 * r;
    let correction = 1.0 - (m - 1.0) / z + (m - 1.0) * (m - 9.0) / (2.0 * z * z);
    r.exp() / (2.0 * std::f64::consts::PI * r).sqrt() * correction
}

/// `I_n'(r)`, written without a `1/r` factor so it is regular at the origin.
pub(crate) fn i_n_prime(n: u32, r: f64) -> f64 {
    if n == 0 {
        i_n(1, r)
    } else {
        0.5 * (i_n(n - 1, r) + i_n(n + 1, r))
    }
}

/// Downward recurrence for `P_n(r)`.
///
/// Starts at order `n + extra_orders + ceil(r)` from the seed
/// `seed_scale / (2 N + 2)` and applies `P_k = 1 / (r^2 P_{k+1} + 2(k+1))`.
/// The map is a contraction going down, so the seed error decays
/// geometrically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRecurrence {
    pub extra_orders: u32,
    pub seed_scale: f64,
}

impl Default for RatioRecurrence {
    fn default() -> Self {
        Self {
            extra_orders: 40,
            seed_scale: 1.0,
        }
    }
}

impl RatioRecurrence {
    pub fn eval(&self, n: u32, r: f64) -> f64 {
        let start = n + self.extra_orders + r.ceil() as u32;
        let r2 = r * r;
        let mut p = self.seed_scale / (2.0 * f64::from(start) + 2.0);
        for k in (n..start).rev() {
            p = 1.0 / (r2 * p + 2.0 * (f64::from(k) + 1.0));
        }
        p
    }
}

/// Unchecked `P_n(r)` with the default recurrence.
pub(crate) fn p_ratio(n: u32, r: f64) -> f64 {
    RatioRecurrence::default().eval(n, r)
}

/// `P_n'(r) = 1/r - 2(n+1) P_n / r - r P_n^2`, with the small-`r` limit.
pub(crate) fn p_ratio_prime(n: u32, r: f64) -> f64 {
    let m = 2.0 * f64::from(n) + 2.0;
    if r < 1e-4 {
        return -2.0 * r / (m * m * (m + 2.0));
    }
    let p = p_ratio(n, r);
    (1.0 - m * p) / r - r * p * p
}

/// `P_n(r) = I_{n+1}(r) / (r I_n(r))`, extended by continuity to `r = 0`.
pub fn pn(n: u32, r: f64) -> Result<f64> {
    check_argument(r)?;
    Ok(p_ratio(n, r))
}

pub fn pn_eval(n: u32, r: f64) -> Result<RatioEval> {
    Ok(RatioEval {
        order: n,
        argument: r,
        value: pn(n, r)?,
    })
}

/// `G_n(r) = r^2 [P_1(r) - P_n(r)]` for `n >= 2`, `r > 0`.
pub fn gn(n: u32, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(domain(format!("G_n needs n >= 2, got {n}")));
    }
    check_argument(r)?;
    if r == 0.0 {
        return Err(domain("G_n needs r > 0"));
    }
    Ok(r * r * (p_ratio(1, r) - p_ratio(n, r)))
}

/// `h_n(x) = n/x + x P_n(x)` for `x > 0`; equals `I_n'(x) / I_n(x)`.
pub fn hn(n: u32, x: f64) -> Result<f64> {
    check_argument(x)?;
    if x == 0.0 {
        return Err(domain("h_n needs x > 0"));
    }
    Ok(h_ratio(n, x))
}

pub(crate) fn h_ratio(n: u32, x: f64) -> f64 {
    f64::from(n) / x + x * p_ratio(n, x)
}

// ---------------------------------------------------------------------------
// Identity residuals
// ---------------------------------------------------------------------------

/// How a residual is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// Algebraic equality; relative residual.
    Exact,
    /// Equality involving derivatives, checked by finite differences.
    Derivative,
    /// Strict inequality; residual is the normalized violation (0 when it holds).
    Inequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityInfo {
    pub id: &'static str,
    pub kind: IdentityKind,
    pub statement: &'static str,
}

/// Every identity checked by [`identity_residuals`].
pub const IDENTITIES: &[IdentityInfo] = &[
    IdentityInfo {
        id: "bessel_ode",
        kind: IdentityKind::Derivative,
        statement: "I_n'' + I_n'/r - (1 + n^2/r^2) I_n = 0",
    },
    IdentityInfo {
        id: "three_term_recurrence",
        kind: IdentityKind::Exact,
        statement: "I_{n+1} = I_{n-1} - (2n/r) I_n, n >= 1",
    },
    IdentityInfo {
        id: "lowering",
        kind: IdentityKind::Derivative,
        statement: "I_n' + (n/r) I_n = I_{n-1}, n >= 1",
    },
    IdentityInfo {
        id: "raising",
        kind: IdentityKind::Derivative,
        statement: "I_n' - (n/r) I_n = I_{n+1}",
    },
    IdentityInfo {
        id: "turan_upper",
        kind: IdentityKind::Inequality,
        statement: "I_{n-1} I_{n+1} < I_n^2, n >= 1",
    },
    IdentityInfo {
        id: "turan_lower",
        kind: IdentityKind::Inequality,
        statement: "I_{n-1} I_{n+1} > I_n^2 - (2/r) I_n I_{n+1}, n >= 1",
    },
    IdentityInfo {
        id: "product_series",
        kind: IdentityKind::Exact,
        statement: "I_m I_k equals its product power series (m + k = n <= 6)",
    },
    IdentityInfo {
        id: "ratio_vs_bessel",
        kind: IdentityKind::Exact,
        statement: "recurrence P_n agrees with I_{n+1} / (r I_n) (absolute)",
    },
    IdentityInfo {
        id: "ratio_recurrence",
        kind: IdentityKind::Exact,
        statement: "P_n = 1 / (r^2 P_{n+1} + 2(n+1)) (absolute)",
    },
    IdentityInfo {
        id: "ratio_derivative",
        kind: IdentityKind::Derivative,
        statement: "P_n' = 1/r - 2(n+1) P_n / r - r P_n^2",
    },
    IdentityInfo {
        id: "ratio_ordering",
        kind: IdentityKind::Inequality,
        statement: "P_n > P_{n+1}",
    },
    IdentityInfo {
        id: "ratio_decreasing",
        kind: IdentityKind::Inequality,
        statement: "P_n' < 0",
    },
    IdentityInfo {
        id: "r_p0_increasing",
        kind: IdentityKind::Inequality,
        statement: "d/dr (r P_0) > 0",
    },
    IdentityInfo {
        id: "deriv_r_i1",
        kind: IdentityKind::Derivative,
        statement: "d/dr [r I_1] = r I_0",
    },
    IdentityInfo {
        id: "deriv_r2_i0",
        kind: IdentityKind::Derivative,
        statement: "d/dr [r^2 I_0 - 2 r I_1] = r^2 I_1",
    },
    IdentityInfo {
        id: "deriv_quadratic",
        kind: IdentityKind::Derivative,
        statement: "d/dr [r^2 (I_1^2 - I_0^2)/2 + r I_0 I_1] = r I_1^2",
    },
    IdentityInfo {
        id: "l1_linear",
        kind: IdentityKind::Derivative,
        statement: "L_1 (r [1 - 2 I_2]) = 2 r I_0",
    },
    IdentityInfo {
        id: "l1_quadratic",
        kind: IdentityKind::Derivative,
        statement: "L_1 (r [I_0 I_2 - I_1^2]) = 4 I_1 [I_0 - I_1/r]",
    },
];

pub fn identity_info(id: &str) -> Option<&'static IdentityInfo> {
    IDENTITIES.iter().find(|info| info.id == id)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub identity: &'static str,
    pub n: u32,
    pub r: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualTable {
    pub rows: Vec<ResidualRow>,
}

impl ResidualTable {
    /// Largest residual per identity, in catalogue order.
    pub fn max_by_identity(&self) -> Vec<(&'static IdentityInfo, f64)> {
        IDENTITIES
            .iter()
            .map(|info| {
                let max = self
                    .rows
                    .iter()
                    .filter(|row| row.identity == info.id)
                    .map(|row| row.residual)
                    .fold(0.0_f64, f64::max);
                (info, max)
            })
            .collect()
    }

    pub fn max_residual(&self, id: &str) -> f64 {
        self.rows
            .iter()
            .filter(|row| row.identity == id)
            .map(|row| row.residual)
            .fold(0.0_f64, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("identity_id,n,r,residual\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.identity,
                row.n,
                crate::io::fmt_f64(row.r),
                crate::io::fmt_f64(row.residual)
            ));
        }
        out
    }
}

fn fd_step(r: f64) -> f64 {
    1e-5 * r.max(1.0)
}

fn fd_step_second(r: f64) -> f64 {
    1e-3 * r.max(1.0)
}

fn d1(f: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    let h = fd_step(r);
    (f(r + h) - f(r - h)) / (2.0 * h)
}

fn d2(f: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    let h = fd_step_second(r);
    (-f(r + 2.0 * h) + 16.0 * f(r + h) - 30.0 * f(r) + 16.0 * f(r - h) - f(r - 2.0 * h))
        / (12.0 * h * h)
}

fn rel(diff: f64, scales: &[f64]) -> f64 {
    let scale = scales.iter().fold(0.0_f64, |acc, s| acc.max(s.abs()));
    if scale == 0.0 {
        diff.abs()
    } else {
        diff.abs() / scale
    }
}

fn violation(margin: f64, scale: f64) -> f64 {
    // margin > 0 means the strict inequality holds
    if margin > 0.0 {
        0.0
    } else {
        (-margin / scale.abs().max(f64::MIN_POSITIVE)).max(f64::EPSILON)
    }
}

fn product_series(m: u32, k: u32, r: f64) -> f64 {
    let half = 0.5 * r;
    let (mf, kf) = (f64::from(m), f64::from(k));
    let s = mf + kf;
    let mut term = 1.0;
    for j in 1..=m {
        term *= half / f64::from(j);
    }
    for j in 1..=k {
        term *= half / f64::from(j);
    }
    let mut sum = term;
    let mut j = 0.0;
    loop {
        let num = (s + 2.0 * j + 2.0) * (s + 2.0 * j + 1.0) * half * half;
        let den = (j + 1.0) * (mf + j + 1.0) * (kf + j + 1.0) * (s + j + 1.0);
        term *= num / den;
        sum += term;
        j += 1.0;
        if term <= 1e-17 * sum && j > 2.0 {
            break;
        }
    }
    sum
}

/// Residuals of every identity in [`IDENTITIES`] over `r_grid` and orders
/// `0..=n_max`, using the default ratio recurrence.
pub fn identity_residuals(r_grid: &[f64], n_max: u32) -> Result<ResidualTable> {
    identity_residuals_with(&RatioRecurrence::default(), r_grid, n_max)
}

/// As [`identity_residuals`], with the ratio functions evaluated by `ratio`.
pub fn identity_residuals_with(
    ratio: &RatioRecurrence,
    r_grid: &[f64],
    n_max: u32,
) -> Result<ResidualTable> {
    if n_max > 64 {
        return Err(domain(format!("n_max must be <= 64, got {n_max}")));
    }
    for &r in r_grid {
        if !(r > 0.0 && r <= SERIES_LIMIT) {
            return Err(domain(format!("grid values must lie in (0, 30], got {r}")));
        }
    }

    let mut rows = Vec::new();
    let mut push = |identity: &'static str, n: u32, r: f64, residual: f64| {
        rows.push(ResidualRow {
            identity,
            n,
            r,
            residual,
        })
    };
    let p = |n: u32, r: f64| ratio.eval(n, r);
    // stencils at the top of the grid reach past the regime switch, where
    // the truncated asymptotic form would swamp the residuals
    let i_n = series;

    for &r in r_grid {
        for n in 0..=n_max {
            let nf = f64::from(n);
            let i = |x: f64| i_n(n, x);
            let val = i(r);
            let dv = d1(&i, r);

            let ddv = d2(&i, r);
            let t3 = (1.0 + nf * nf / (r * r)) * val;
            push("bessel_ode", n, r, rel(ddv + dv / r - t3, &[ddv, dv / r, t3]));

            let up = i_n(n + 1, r);
            push("raising", n, r, rel(dv - nf / r * val - up, &[dv, nf / r * val, up]));

            if n >= 1 {
                let down = i_n(n - 1, r);
                let mid = 2.0 * nf / r * val;
                push(
                    "three_term_recurrence",
                    n,
                    r,
                    rel(up - down + mid, &[up, down, mid]),
                );
                push("lowering", n, r, rel(dv + nf / r * val - down, &[dv, nf / r * val, down]));
                let lhs = down * up;
                push("turan_upper", n, r, violation(val * val - lhs, val * val));
                let lower = val * val - 2.0 / r * val * up;
                push("turan_lower", n, r, violation(lhs - lower, val * val));
            }

            let direct = i_n(n + 1, r) / (r * val);
            let pr = p(n, r);
            push("ratio_vs_bessel", n, r, (pr - direct).abs());
            let pnext = p(n + 1, r);
            push(
                "ratio_recurrence",
                n,
                r,
                (pr - 1.0 / (r * r * pnext + 2.0 * (nf + 1.0))).abs(),
            );
            push("ratio_ordering", n, r, violation(pr - pnext, pr));

            let pf = |x: f64| p(n, x);
            let dp = d1(&pf, r);
            let a = 1.0 / r;
            let b = 2.0 * (nf + 1.0) / r * pr;
            let c = r * pr * pr;
            push("ratio_derivative", n, r, rel(dp - (a - b - c), &[a, b, c]));
            push("ratio_decreasing", n, r, violation(-dp, a));
        }

        for total in 0..=6u32.min(2 * n_max) {
            let worst = (0..=total)
                .map(|m| {
                    let direct = i_n(m, r) * i_n(total - m, r);
                    rel(direct - product_series(m, total - m, r), &[direct])
                })
                .fold(0.0_f64, f64::max);
            push("product_series", total, r, worst);
        }

        let rp0 = |x: f64| x * p(0, x);
        push("r_p0_increasing", 0, r, violation(d1(&rp0, r), p(0, r)));

        let i0 = |x: f64| i_n(0, x);
        let i1 = |x: f64| i_n(1, x);
        let i2 = |x: f64| i_n(2, x);

        let f = |x: f64| x * i1(x);
        let lhs = d1(&f, r);
        let rhs = r * i0(r);
        push("deriv_r_i1", 1, r, rel(lhs - rhs, &[lhs, rhs]));

        let fa = |x: f64| x * x * i0(x);
        let fb = |x: f64| 2.0 * x * i1(x);
        let (da, db) = (d1(&fa, r), d1(&fb, r));
        let rhs = r * r * i1(r);
        push("deriv_r2_i0", 1, r, rel(da - db - rhs, &[da, db, rhs]));

        let fa = |x: f64| 0.5 * x * x * (i1(x) * i1(x) - i0(x) * i0(x));
        let fb = |x: f64| x * i0(x) * i1(x);
        let (da, db) = (d1(&fa, r), d1(&fb, r));
        let rhs = r * i1(r) * i1(r);
        push("deriv_quadratic", 1, r, rel(da + db - rhs, &[da, db, rhs]));

        let l1 = |u: &dyn Fn(f64) -> f64| {
            let (uu, du, ddu) = (u(r), d1(u, r), d2(u, r));
            let terms = [-ddu, -du / r, uu / (r * r)];
            (terms.iter().sum::<f64>(), terms)
        };
        let u = |x: f64| x * (1.0 - 2.0 * i2(x));
        let (lhs, terms) = l1(&u);
        let rhs = 2.0 * r * i0(r);
        push(
            "l1_linear",
            1,
            r,
            rel(lhs - rhs, &[terms[0], terms[1], terms[2], rhs]),
        );
        let u = |x: f64| x * (i0(x) * i2(x) - i1(x) * i1(x));
        let (lhs, terms) = l1(&u);
        let rhs = 4.0 * i1(r) * (i0(r) - i1(r) / r);
        push(
            "l1_quadratic",
            1,
            r,
            rel(lhs - rhs, &[terms[0], terms[1], terms[2], rhs]),
        );
    }

    Ok(ResidualTable { rows })
}

/// `count` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k + 1 == count {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
