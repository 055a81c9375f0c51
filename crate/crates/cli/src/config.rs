//! Run configuration: flags layered over an optional key=value file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use angiodelay::besselkit::log_grid;
use angiodelay::ModelParams;
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Problems with the user's input; these exit with status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

/// A parameter value: one number or a `min:max:count` sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Spec {
    Fixed(f64),
    Sweep { min: f64, max: f64, count: usize },
}

impl Spec {
    pub fn parse(key: &str, text: &str) -> Result<Self, InputError> {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("{key}: cannot parse '{s}' as a number")))
        };
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Spec::Fixed(num(v)?)),
            [lo, hi, n] => {
                let (min, max) = (num(lo)?, num(hi)?);
                let count: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("{key}: sweep count '{n}' is not a positive integer")))?;
                if count < 1 {
                    return Err(bad(format!("{key}: sweep count must be at least 1")));
                }
                if !(min <= max) {
                    return Err(bad(format!("{key}: sweep range must satisfy min <= max, got {min}:{max}")));
                }
                Ok(Spec::Sweep { min, max, count })
            }
            _ => Err(bad(format!("{key}: expected a number or min:max:count, got '{text}'"))),
        }
    }

    pub fn values(&self, log: bool) -> Result<Vec<f64>, InputError> {
        match *self {
            Spec::Fixed(v) => Ok(vec![v]),
            Spec::Sweep { min, max, count } => {
                if count == 1 {
                    return Ok(vec![min]);
                }
                if log {
                    if !(min > 0.0) {
                        return Err(bad("log spacing needs a positive lower bound"));
                    }
                    Ok(log_grid(min, max, count))
                } else {
                    let step = (max - min) / (count - 1) as f64;
                    Ok((0..count)
                        .map(|k| if k + 1 == count { max } else { min + step * k as f64 })
                        .collect())
                }
            }
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, Spec::Sweep { count, .. } if *count > 1)
    }
}

/// Merged settings. Keys are lower_snake_case; flags override the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

pub const KNOWN_KEYS: &[&str] = &[
    "alpha", "sigma_bar", "sigma_tilde", "mu", "tau", "r_init", "t_end", "dt", "out", "format", "seed",
    "log", "r0", "modes", "rho0_init", "rho1_init", "record_every", "stop_on_convergence",
];

impl Settings {
    pub fn parse_file_text(text: &str) -> Result<Self, InputError> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("config line {}: expected key=value", k + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(bad(format!("config line {}: unknown key '{key}'", k + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, InputError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| bad(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse_file_text(&text)
            }
        }
    }

    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn spec(&self, key: &str) -> Result<Option<Spec>, InputError> {
        self.raw(key).map(|v| Spec::parse(key, v)).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, InputError> {
        match self.spec(key)? {
            None => Ok(default),
            Some(Spec::Fixed(v)) => Ok(v),
            Some(_) => Err(bad(format!("{key} does not accept a sweep"))),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, InputError> {
        self.raw(key).map(|_| self.f64_or(key, 0.0)).transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, InputError> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(bad(format!("{key}: expected true or false, got '{v}'"))),
        }
    }

    pub fn seed(&self) -> Result<u64, InputError> {
        self.raw("seed")
            .map(|v| v.parse().map_err(|_| bad(format!("seed: '{v}' is not an unsigned integer"))))
            .transpose()
            .map(|s| s.unwrap_or(0))
    }

    pub fn format(&self) -> Result<Format, InputError> {
        match self.raw("format") {
            None => Ok(Format::Csv),
            Some(v) => Format::from_str(v, true).map_err(|_| bad(format!("format: expected csv or json, got '{v}'"))),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out").unwrap_or("."))
    }
}

/// Everything a command needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub settings: Settings,
    pub base: ModelParams,
    pub log: bool,
    pub format: Format,
    pub out: PathBuf,
    pub seed: u64,
}

const PARAM_KEYS: [&str; 5] = ["alpha", "sigma_bar", "sigma_tilde", "mu", "tau"];

impl RunConfig {
    pub fn new(settings: Settings) -> Result<Self, InputError> {
        let d = ModelParams::default();
        let first = |key: &str, default: f64| -> Result<f64, InputError> {
            Ok(match settings.spec(key)? {
                None => default,
                Some(s) => s.values(false)?[0],
            })
        };
        let base = ModelParams {
            alpha: first("alpha", d.alpha)?,
            sigma_bar: first("sigma_bar", d.sigma_bar)?,
            sigma_tilde: first("sigma_tilde", d.sigma_tilde)?,
            mu: first("mu", d.mu)?,
            tau: first("tau", d.tau)?,
        };
        Ok(Self {
            log: settings.flag("log")?,
            format: settings.format()?,
            out: settings.out_dir(),
            seed: settings.seed()?,
            base,
            settings,
        })
    }

    pub fn has_sweep(&self) -> Result<bool, InputError> {
        for key in PARAM_KEYS {
            if self.settings.spec(key)?.is_some_and(|s| s.is_sweep()) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Cartesian product of all parameter sweeps, in a fixed order with
    /// `alpha` varying slowest.
    pub fn param_grid(&self) -> Result<Vec<ModelParams>, InputError> {
        let mut grid = vec![self.base];
        for key in PARAM_KEYS {
            let Some(spec) = self.settings.spec(key)? else {
                continue;
            };
            let values = spec.values(self.log)?;
            grid = grid
                .iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = *p;
                        match key {
                            "alpha" => q.alpha = v,
                            "sigma_bar" => q.sigma_bar = v,
                            "sigma_tilde" => q.sigma_tilde = v,
                            "mu" => q.mu = v,
                            _ => q.tau = v,
                        }
                        q
                    })
                })
                .collect();
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(Spec::parse("a", "2.5").unwrap(), Spec::Fixed(2.5));
        let s = Spec::parse("a", "1:3:3").unwrap();
        assert_eq!(s.values(false).unwrap(), vec![1.0, 2.0, 3.0]);
        let v = Spec::parse("a", "0.1:10:3").unwrap().values(true).unwrap();
        assert!((v[1] - 1.0).abs() < 1e-12 && v[2] == 10.0);
        assert!(Spec::parse("a", "3:1:4").is_err());
        assert!(Spec::parse("a", "1:2:0").is_err());
        assert!(Spec::parse("a", "1:2").is_err());
        assert!(Spec::parse("a", "x").is_err());
    }

    #[test]
    fn config_file_and_overrides() {
        let mut s = Settings::parse_file_text("# comment\nalpha = 2\nsigma-tilde=0.3 # trailing\n\nmu=0.1:1:4\n").unwrap();
        s.set("alpha", Some("3".into()));
        let cfg = RunConfig::new(s).unwrap();
        assert_eq!(cfg.base.alpha, 3.0);
        assert_eq!(cfg.base.sigma_tilde, 0.3);
        assert!(cfg.has_sweep().unwrap());
        assert_eq!(cfg.param_grid().unwrap().len(), 4);
        assert!(Settings::parse_file_text("bogus=1").is_err());
        assert!(Settings::parse_file_text("alpha").is_err());
    }

    #[test]
    fn grid_order_is_alpha_major() {
        let mut s = Settings::default();
        s.set("alpha", Some("1:2:2".into()));
        s.set("mu", Some("1:3:3".into()));
        let g = RunConfig::new(s).unwrap().param_grid().unwrap();
        let pairs: Vec<(f64, f64)> = g.iter().map(|p| (p.alpha, p.mu)).collect();
        assert_eq!(pairs, vec![(1.0, 1.0), (1.0, 2.0), (1.0, 3.0), (2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]);
    }
}
