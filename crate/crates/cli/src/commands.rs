//! The five subcommands. Each returns the files it wrote.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use angiodelay::besselkit::{identity_residuals_with, log_grid, RatioRecurrence};
use angiodelay::io::columns_to_csv;
use angiodelay::modes::{critical_radius, dmu_star_dalpha, mode_report, threshold_row, MAX_MODE};
use angiodelay::radialsim::{run_with, RunOptions, RunResult};
use angiodelay::stationary::{solve_r0, solve_stationary_delayed, stationary_report, StationaryFields};
use angiodelay::tau1::rho1_evolve;
use angiodelay::verify::{run_suite, VerifyConfig};
use angiodelay::{Error, ModelParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, InputError, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Input(InputError),
    Model(Error),
    Io(String),
    PropertyFailure(String),
}

impl CliError {
    /// 0 success, 1 property failure, 2 invalid input, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::PropertyFailure(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Model(e) => match e {
                Error::Domain(_) | Error::InvalidParams(_) | Error::NoStationaryRadius(_) => 2,
                Error::DelayTooLarge { .. } | Error::NonConvergence(_) | Error::RadiusCollapse { .. } => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "invalid input: {e}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::PropertyFailure(e) => write!(f, "property failure: {e}"),
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Input(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

type CmdResult = Result<Vec<PathBuf>, CliError>;

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Collects parallel results in input order, surfacing the first error.
fn collect<T: Send>(items: Vec<Result<T, Error>>) -> Result<Vec<T>, CliError> {
    items.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct StationaryRow {
    alpha: f64,
    sigma_bar: f64,
    sigma_tilde: f64,
    mu: f64,
    tau: f64,
    r0: f64,
    lambda: f64,
    r1: f64,
    r_star: f64,
    delayed_radius: Option<f64>,
    delayed_residual: Option<f64>,
}

fn stationary_row(p: &ModelParams) -> Result<StationaryRow, Error> {
    p.validate()?;
    let f = StationaryFields::solve(p)?;
    let delayed = if p.tau > 0.0 {
        Some(solve_stationary_delayed(p, 1e-12)?)
    } else {
        None
    };
    Ok(StationaryRow {
        alpha: p.alpha,
        sigma_bar: p.sigma_bar,
        sigma_tilde: p.sigma_tilde,
        mu: p.mu,
        tau: p.tau,
        r0: f.r0,
        lambda: f.lambda,
        r1: f.r1,
        r_star: f.r_star(),
        delayed_radius: delayed.as_ref().map(|d| d.radius),
        delayed_residual: delayed.as_ref().map(|d| d.residual),
    })
}

pub fn stationary(cfg: &RunConfig) -> CmdResult {
    let grid = cfg.param_grid()?;
    let rows = collect(grid.par_iter().map(stationary_row).collect())?;
    if grid.len() == 1 {
        let report = stationary_report(&grid[0])?;
        return Ok(vec![
            write_file(&cfg.out, "stationary.json", &to_json(&rows[0]))?,
            write_file(&cfg.out, "profiles.csv", &report.profiles_csv())?,
        ]);
    }
    let path = match cfg.format {
        Format::Json => write_file(&cfg.out, "stationary_sweep.json", &to_json(&rows))?,
        Format::Csv => {
            let col = |f: fn(&StationaryRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
            let cols = [
                col(|r| r.alpha),
                col(|r| r.sigma_bar),
                col(|r| r.sigma_tilde),
                col(|r| r.mu),
                col(|r| r.tau),
                col(|r| r.r0),
                col(|r| r.lambda),
                col(|r| r.r1),
                col(|r| r.r_star),
                col(|r| opt(r.delayed_radius)),
            ];
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let header = [
                "alpha", "sigma_bar", "sigma_tilde", "mu", "tau", "r0", "lambda", "r1", "r_star", "delayed_radius",
            ];
            write_file(&cfg.out, "stationary_sweep.csv", &columns_to_csv(&header, &refs))?
        }
    };
    Ok(vec![path])
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct MapRow {
    alpha: f64,
    sigma_bar: f64,
    sigma_tilde: f64,
    mu: f64,
    r0: f64,
    mu_star: f64,
    rate_n2: f64,
    delta2: f64,
    above_critical: bool,
    /// Sign of the analytic slope of the threshold in `alpha`.
    decreasing: bool,
}

#[derive(Debug, Serialize)]
struct MapMeta {
    critical_radius: f64,
    rows: usize,
    r0_given: bool,
    /// Whether every fixed-`r0` column above the critical radius is strictly
    /// decreasing along the `alpha` sweep; `None` when no column qualifies.
    decreasing_above_critical: Option<bool>,
}

pub fn threshold_map(cfg: &RunConfig) -> CmdResult {
    let mut cfg = cfg.clone();
    let default_alpha = cfg.settings.raw("alpha").is_none();
    if default_alpha {
        cfg.settings.set("alpha", Some("0.05:50:200".into()));
        cfg.log = true;
    }
    let grid = cfg.param_grid()?;
    let r0_values = match cfg.settings.spec("r0")? {
        Some(spec) => Some(spec.values(cfg.log)?),
        None => None,
    };
    let mut points: Vec<(ModelParams, Option<f64>)> = Vec::new();
    for p in &grid {
        match &r0_values {
            Some(list) => points.extend(list.iter().map(|&r| (*p, Some(r)))),
            None => points.push((*p, None)),
        }
    }
    let rows = collect(
        points
            .par_iter()
            .map(|(p, r0)| {
                p.validate()?;
                let r0 = match r0 {
                    Some(r) => *r,
                    None => solve_r0(p)?,
                };
                let row = threshold_row(p.alpha, r0, p.sigma_bar, p.mu)?;
                Ok(MapRow {
                    alpha: p.alpha,
                    sigma_bar: p.sigma_bar,
                    sigma_tilde: p.sigma_tilde,
                    mu: p.mu,
                    r0,
                    mu_star: row.mu_star,
                    rate_n2: row.rate_n2,
                    delta2: row.delta2,
                    above_critical: r0 > critical_radius(),
                    decreasing: dmu_star_dalpha(r0, p.alpha, p.sigma_bar)? < 0.0,
                })
            })
            .collect(),
    )?;

    let rc = critical_radius();
    let decreasing_above_critical = r0_values.as_ref().and_then(|list| {
        let mut verdict = None;
        for &r in list.iter().filter(|&&r| r > rc) {
            let mut column: Vec<&MapRow> = rows.iter().filter(|row| row.r0 == r).collect();
            column.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
            let ok = column.windows(2).all(|w| w[0].alpha == w[1].alpha || w[1].mu_star < w[0].mu_star);
            verdict = Some(verdict.unwrap_or(true) && ok);
        }
        verdict
    });
    let meta = MapMeta {
        critical_radius: rc,
        rows: rows.len(),
        r0_given: r0_values.is_some(),
        decreasing_above_critical,
    };

    let data = match cfg.format {
        Format::Json => write_file(&cfg.out, "threshold_map.json", &to_json(&rows))?,
        Format::Csv => {
            let col = |f: fn(&MapRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
            let flag = |b: bool| if b { 1.0 } else { 0.0 };
            let cols = [
                col(|r| r.alpha),
                col(|r| r.sigma_bar),
                col(|r| r.sigma_tilde),
                col(|r| r.mu),
                col(|r| r.r0),
                col(|r| r.mu_star),
                col(|r| r.rate_n2),
                col(|r| r.delta2),
                rows.iter().map(|r| flag(r.above_critical)).collect(),
                rows.iter().map(|r| flag(r.decreasing)).collect(),
            ];
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let header = [
                "alpha", "sigma_bar", "sigma_tilde", "mu", "r0", "mu_star", "rate_n2", "delta2", "above_critical",
                "decreasing",
            ];
            write_file(&cfg.out, "threshold_map.csv", &columns_to_csv(&header, &refs))?
        }
    };
    Ok(vec![data, write_file(&cfg.out, "threshold_map_meta.json", &to_json(&meta))?])
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct ModeMeta {
    n: u32,
    tau: f64,
    r0: f64,
    a_n: f64,
    b_n: f64,
    /// Absent for modes that never destabilize.
    mu_n: Option<f64>,
    rate: f64,
    delta2: f64,
    rho1_rate_envelope: Option<f64>,
}

fn parse_modes(text: &str) -> Result<Vec<u32>, InputError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let n: u32 = part
            .trim()
            .parse()
            .map_err(|_| InputError(format!("modes: '{part}' is not a mode number")))?;
        if n > MAX_MODE {
            return Err(InputError(format!("modes: {n} exceeds the largest supported mode {MAX_MODE}")));
        }
        out.push(n);
    }
    Ok(out)
}

pub fn modes(cfg: &RunConfig) -> CmdResult {
    if cfg.has_sweep()? {
        return Err(InputError("modes takes a single parameter point".into()).into());
    }
    let p = cfg.base;
    p.validate()?;
    let s = &cfg.settings;
    let list = parse_modes(s.raw("modes").unwrap_or("0,1,2,3,5,10"))?;
    let t_end = s.f64_or("t_end", 10.0)?;
    let dt = s.f64_or("dt", 0.01)?;
    if !(t_end > 0.0 && dt > 0.0 && dt <= t_end) {
        return Err(InputError(format!("need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}")).into());
    }
    let rho0_init = s.f64_or("rho0_init", 1.0)?;
    let rho1_init = s.f64_or("rho1_init", 0.0)?;
    let steps = (t_end / dt).round() as usize;
    let t: Vec<f64> = (0..=steps).map(|k| k as f64 * t_end / steps as f64).collect();
    let base = StationaryFields::solve(&p)?;

    let results = collect(
        list.par_iter()
            .map(|&n| {
                let report = mode_report(n, p.mu, base.r0, p.alpha, p.sigma_bar)?;
                let traj = rho1_evolve(n, &base, rho0_init, rho1_init, &t)?;
                let meta = ModeMeta {
                    n,
                    tau: p.tau,
                    r0: base.r0,
                    a_n: report.a_n,
                    b_n: report.b_n,
                    mu_n: report.mu_n.finite(),
                    rate: report.rate,
                    delta2: report.delta2,
                    rho1_rate_envelope: traj.rate_envelope,
                };
                Ok((meta, traj.to_csv(p.tau)))
            })
            .collect(),
    )?;
    let mut files = Vec::new();
    for (meta, csv) in &results {
        files.push(write_file(&cfg.out, &format!("mode_{}.csv", meta.n), csv)?);
    }
    let metas: Vec<&ModeMeta> = results.iter().map(|r| &r.0).collect();
    files.push(write_file(&cfg.out, "modes.json", &to_json(&metas))?);
    Ok(files)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct SimSummary {
    alpha: f64,
    sigma_bar: f64,
    sigma_tilde: f64,
    mu: f64,
    tau: f64,
    r_init: f64,
    dt: f64,
    t_end: f64,
    converged: bool,
    converged_at: Option<f64>,
    limit_radius: f64,
    final_time: f64,
    steps: usize,
    clamp_count: u64,
    /// Stationary radius for the same parameters, when it can be computed.
    stationary_radius: Option<f64>,
}

pub fn simulate(cfg: &RunConfig) -> CmdResult {
    let s = &cfg.settings;
    let grid = cfg.param_grid()?;
    let r_init = s.opt_f64("r_init")?;
    let t_end = s.f64_or("t_end", 50.0)?;
    let dt_flag = s.opt_f64("dt")?;
    let until_converged = s.flag("stop_on_convergence")?;
    let record_every = s.f64_or("record_every", 1.0)?;
    if !(record_every >= 1.0 && record_every.fract() == 0.0) {
        return Err(InputError("record_every must be a positive integer".into()).into());
    }
    let options = RunOptions {
        stop_on_convergence: until_converged,
        record_every: record_every as usize,
    };

    let runs = collect(
        grid.par_iter()
            .map(|p| {
                p.validate()?;
                let r0 = solve_r0(p)?;
                let start = r_init.unwrap_or(1.1 * r0);
                let dt = dt_flag.unwrap_or(if p.tau > 0.0 { (p.tau / 4.0).min(0.005) } else { 0.01 });
                let result: RunResult = run_with(p, start, t_end, dt, options)?;
                let stationary_radius = solve_stationary_delayed(p, 1e-12).ok().map(|d| d.radius);
                let summary = SimSummary {
                    alpha: p.alpha,
                    sigma_bar: p.sigma_bar,
                    sigma_tilde: p.sigma_tilde,
                    mu: p.mu,
                    tau: p.tau,
                    r_init: start,
                    dt,
                    t_end,
                    converged: result.summary.converged,
                    converged_at: result.summary.converged_at,
                    limit_radius: result.summary.limit_radius,
                    final_time: result.summary.final_time,
                    steps: result.summary.steps,
                    clamp_count: result.summary.clamp_count,
                    stationary_radius,
                };
                Ok((summary, result.to_csv()))
            })
            .collect(),
    )?;

    let mut files = Vec::new();
    if runs.len() == 1 {
        files.push(write_file(&cfg.out, "trajectory.csv", &runs[0].1)?);
        files.push(write_file(&cfg.out, "summary.json", &to_json(&runs[0].0))?);
    } else {
        for (k, (_, csv)) in runs.iter().enumerate() {
            files.push(write_file(&cfg.out, &format!("trajectory_{k}.csv"), csv)?);
        }
        let all: Vec<&SimSummary> = runs.iter().map(|r| &r.0).collect();
        files.push(write_file(&cfg.out, "summary.json", &to_json(&all))?);
    }
    Ok(files)
}

// ---------------------------------------------------------------------------

pub fn verify(cfg: &RunConfig, inject_fault: bool, quick: bool) -> CmdResult {
    let ratio = if inject_fault {
        VerifyConfig::faulty_ratio()
    } else {
        RatioRecurrence::default()
    };
    let config = VerifyConfig {
        ratio,
        seed: cfg.seed,
        include_delay: !quick,
        ..VerifyConfig::default()
    };
    let report = run_suite(&config)?;
    let table = identity_residuals_with(&ratio, &log_grid(0.1, 30.0, 50), config.n_max)?;
    let files = vec![
        write_file(&cfg.out, "verify.json", &to_json(&report))?,
        write_file(&cfg.out, "identity_residuals.csv", &table.to_csv())?,
    ];
    for p in &report.properties {
        eprintln!(
            "{} {:<34} max residual {:.3e} (tolerance {:.1e})",
            if p.passed { "pass" } else { "FAIL" },
            p.id,
            p.max_residual,
            p.tolerance
        );
    }
    if !report.all_passed {
        let ids: Vec<&str> = report.failures().iter().map(|p| p.id.as_str()).collect();
        return Err(CliError::PropertyFailure(format!(
            "{} of {} properties failed: {}",
            ids.len(),
            report.properties.len(),
            ids.join(", ")
        )));
    }
    Ok(files)
}

/// Rejects nonpositive fixed radii before any work starts.
pub fn check_r0(cfg: &RunConfig) -> Result<(), InputError> {
    if let Some(spec) = cfg.settings.spec("r0")? {
        for r in spec.values(cfg.log)? {
            if !(r > 0.0 && r.is_finite()) {
                return Err(InputError(format!("r0 must be positive, got {r}")));
            }
        }
    }
    Ok(())
}
