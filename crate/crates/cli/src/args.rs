use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "intervention", version, about = "Solvers and figure data for intervention games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for an intervention equilibrium of a finite game read from JSON.
    Finite {
        /// Game definition.
        input: PathBuf,
        /// Only consider equilibria where all users play the same mixture.
        #[arg(long)]
        symmetric: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Gatekeeper example: w0 curve and closed-form classification.
    Imperfect {
        #[command(flatten)]
        common: Common,
    },
    /// Shared-channel example: E* regions, payoff curves and benchmarks.
    Wireless {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Profile grid step (finite), or usage grid step for exported grids (wireless).
    #[arg(long, value_name = "X")]
    pub grid_step: Option<f64>,
    /// Rule grid step (finite), or alpha step of the w0 curve (imperfect).
    #[arg(long, value_name = "X")]
    pub rule_step: Option<f64>,
    /// Equilibrium tolerance (finite).
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
    /// Parameter override; repeatable.
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("missing key in `{s}`"));
    }
    let value: f64 = value.trim().parse().map_err(|_| format!("value of `{key}` is not a number: `{value}`"))?;
    if !value.is_finite() {
        return Err(format!("value of `{key}` must be finite"));
    }
    Ok((key.to_string(), value))
}
