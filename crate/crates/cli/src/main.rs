//! Command-line front end for the delayed tumour growth model.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::{Format, RunConfig, Settings};

#[derive(Parser, Debug)]
#[command(name = "angiodelay", version, about = "Stationary states, mode thresholds and radial simulation for a nutrient-limited tumour model with delayed proliferation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Model parameters accept a single value
/// or a `min:max:count` sweep.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Nutrient supply rate
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// External nutrient level
    #[arg(long, allow_hyphen_values = true)]
    sigma_bar: Option<String>,
    /// Nutrient level below which cells die
    #[arg(long, allow_hyphen_values = true)]
    sigma_tilde: Option<String>,
    /// Proliferation intensity
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Proliferation delay
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Space sweep values logarithmically
    #[arg(long)]
    log: bool,
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary radius, first-order correction and radial profiles
    Stationary {
        #[command(flatten)]
        common: Common,
    },
    /// Mode-2 instability threshold over a parameter grid
    ThresholdMap {
        #[command(flatten)]
        common: Common,
        /// Fix the unperturbed radius instead of solving for it; sweepable
        #[arg(long)]
        r0: Option<String>,
    },
    /// Amplitude evolution of individual boundary modes
    Modes {
        #[command(flatten)]
        common: Common,
        /// Comma-separated mode numbers
        #[arg(long)]
        modes: Option<String>,
        #[arg(long)]
        t_end: Option<String>,
        #[arg(long)]
        dt: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        rho0_init: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        rho1_init: Option<String>,
    },
    /// Time-dependent radially symmetric growth with the full delay
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial radius; defaults to 1.1 times the stationary radius
        #[arg(long)]
        r_init: Option<String>,
        #[arg(long)]
        t_end: Option<String>,
        #[arg(long)]
        dt: Option<String>,
        /// Keep every k-th step in the trajectory
        #[arg(long)]
        record_every: Option<String>,
        /// Stop once the boundary speed has settled
        #[arg(long)]
        stop_on_convergence: bool,
    },
    /// Run the property and identity battery
    Verify {
        #[command(flatten)]
        common: Common,
        /// Swap in a deliberately broken ratio recurrence
        #[arg(long)]
        inject_fault: bool,
        /// Skip the delayed-problem checks
        #[arg(long)]
        quick: bool,
    },
}

fn settings_from(common: &Common, extra: &[(&str, Option<String>)]) -> Result<Settings, CliError> {
    let mut s = Settings::load(common.config.as_deref())?;
    s.set("alpha", common.alpha.clone());
    s.set("sigma_bar", common.sigma_bar.clone());
    s.set("sigma_tilde", common.sigma_tilde.clone());
    s.set("mu", common.mu.clone());
    s.set("tau", common.tau.clone());
    s.set("out", common.out.as_ref().map(|p| p.display().to_string()));
    s.set("format", common.format.map(|f| format!("{f:?}").to_lowercase()));
    s.set("seed", common.seed.map(|v| v.to_string()));
    if common.log {
        s.set("log", Some("true".into()));
    }
    for (k, v) in extra {
        s.set(k, v.clone());
    }
    Ok(s)
}

fn dispatch(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let flag = |on: bool| on.then(|| "true".to_string());
    match cli.command {
        Command::Stationary { common } => {
            let cfg = RunConfig::new(settings_from(&common, &[])?)?;
            commands::stationary(&cfg)
        }
        Command::ThresholdMap { common, r0 } => {
            let cfg = RunConfig::new(settings_from(&common, &[("r0", r0)])?)?;
            commands::check_r0(&cfg)?;
            commands::threshold_map(&cfg)
        }
        Command::Modes { common, modes, t_end, dt, rho0_init, rho1_init } => {
            let extra = [
                ("modes", modes),
                ("t_end", t_end),
                ("dt", dt),
                ("rho0_init", rho0_init),
                ("rho1_init", rho1_init),
            ];
            let cfg = RunConfig::new(settings_from(&common, &extra)?)?;
            commands::modes(&cfg)
        }
        Command::Simulate { common, r_init, t_end, dt, record_every, stop_on_convergence } => {
            let extra = [
                ("r_init", r_init),
                ("t_end", t_end),
                ("dt", dt),
                ("record_every", record_every),
                ("stop_on_convergence", flag(stop_on_convergence)),
            ];
            let cfg = RunConfig::new(settings_from(&common, &extra)?)?;
            commands::simulate(&cfg)
        }
        Command::Verify { common, inject_fault, quick } => {
            let cfg = RunConfig::new(settings_from(&common, &[])?)?;
            commands::verify(&cfg, inject_fault, quick)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
