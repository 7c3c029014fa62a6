//! Command-line flags and their TOML config-file counterparts.
//!
//! Every command field is optional so a config file can fill whatever the
//! command line leaves unset. Boolean switches can only be turned on.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "gainswitch",
    version,
    about = "Optimal drive currents, rate-equation runs, pulse metrics and driver-circuit fits for gain-switched lasers"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Clone, Args)]
pub struct GlobalArgs {
    /// Laser fixture name or JSON parameter file [default: default-1W-850nm]
    #[arg(long, global = true, value_name = "FIXTURE|PATH")]
    pub laser: Option<String>,
    /// Output file; stdout when omitted. A JSON sidecar goes next to it
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format: csv or json [default: csv]
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Seed for randomized steps (fit starts, optimality perturbations) [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML run description; command-line flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the energy-optimal current for duration T
    Optimal(OptimalArgs),
    /// Integrate the rate equations under a drive waveform
    Simulate(SimulateArgs),
    /// Sweep the pulse duration and tabulate loss, peak current, eta and rho
    Sweep(SweepArgs),
    /// Pulse metrics of a uniformly sampled trace
    Metric(MetricArgs),
    /// Driver-circuit waveform against the optimal reference, optionally fitted
    Circuit(CircuitArgs),
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct OptimalArgs {
    /// Precharge duration T (s)
    #[arg(short = 'T', long)]
    pub duration: Option<f64>,
    /// Number of samples over [0, T] [default: 1001]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Driver slew limit (A/s); adds the shortest feasible T to the sidecar
    #[arg(long)]
    pub slew_max: Option<f64>,
    /// Check optimality against this many seeded perturbations
    #[arg(long, value_name = "N")]
    pub verify: Option<usize>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    /// optimal, zero, trace, or a circuit topology name [default: optimal]
    #[arg(long)]
    pub drive: Option<String>,
    /// Precharge duration T (s); circuits default to 5 ns
    #[arg(short = 'T', long)]
    pub duration: Option<f64>,
    /// Current trace for `--drive trace` (CSV with a t_s column)
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Trace column holding the current [default: I_A, else the first]
    #[arg(long)]
    pub column: Option<String>,
    /// Clamp negative trace samples to zero instead of failing
    #[arg(long)]
    #[serde(default)]
    pub clamp_negative: bool,
    /// at-S-peak, at-T or none [default: at-S-peak for optimal, none otherwise]
    #[arg(long)]
    pub cutoff: Option<String>,
    /// End time (s) [default: drive duration + 2 tau_N]
    #[arg(long)]
    pub end: Option<f64>,
    /// Output spacing (s) [default: tau_N / 2000]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Circuit parameter vector in SI units, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Option<Vec<f64>>,
    /// Branch count for multi-resonant [default: 3]
    #[arg(long)]
    pub branches: Option<usize>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// Duration grid `start:stop:count`, linearly spaced (s)
    #[arg(long)]
    pub grid: Option<String>,
    /// Read the grid in units of tau_N
    #[arg(long)]
    #[serde(default)]
    pub tau_units: bool,
    /// at-S-peak, at-T or none [default: at-S-peak]
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Simulation output spacing (s) [default: tau_N / 2000]
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct MetricArgs {
    /// Trace CSV: header row, t_s column, value columns
    pub trace: Option<PathBuf>,
    /// Column to score [default: first value column]
    #[arg(long)]
    pub column: Option<String>,
    /// Integration window `t0:t1` (s) [default: whole record]
    #[arg(long)]
    pub window: Option<String>,
    /// Clamp negative samples to zero (with a warning) instead of failing
    #[arg(long)]
    #[serde(default)]
    pub clamp_negative: bool,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct CircuitArgs {
    /// bjt, multi-resonant, rlc, sat-inductor or resonant-ring
    pub topology: Option<String>,
    /// Branch count for multi-resonant [default: 3]
    #[arg(long)]
    pub branches: Option<usize>,
    /// Parameter vector in SI units, comma separated, in the topology's layout
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Option<Vec<f64>>,
    /// Reference duration T (s) [default: 5e-9]
    #[arg(short = 'T', long)]
    pub duration: Option<f64>,
    /// Samples over [0, T] [default: 1001]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Fit the topology to the reference
    #[arg(long)]
    #[serde(default)]
    pub fit: bool,
    /// Fit against this trace instead of the optimal profile
    #[arg(long, value_name = "PATH")]
    pub reference: Option<PathBuf>,
    /// Reference trace column [default: I_A, else the first]
    #[arg(long)]
    pub column: Option<String>,
    /// Start of the comparison window as a fraction of the record [default: 0]
    #[arg(long)]
    pub fit_from: Option<f64>,
    /// Multistart count [default: 8]
    #[arg(long)]
    pub starts: Option<usize>,
    /// Evaluations per start [default: 2000]
    #[arg(long)]
    pub budget: Option<usize>,
}

/// On-disk run description. Global keys at the top level, command settings
/// in a table named after the command.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub laser: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub seed: Option<u64>,
    pub optimal: Option<OptimalArgs>,
    pub simulate: Option<SimulateArgs>,
    pub sweep: Option<SweepArgs>,
    pub metric: Option<MetricArgs>,
    pub circuit: Option<CircuitArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }
}

/// Field-wise fill of unset values from a lower-priority source.
pub trait Merge {
    fn merge(&mut self, fallback: Self);
}

macro_rules! merge_fields {
    ($ty:ty; $($opt:ident),*; $($flag:ident),*) => {
        impl Merge for $ty {
            fn merge(&mut self, fallback: Self) {
                $( if self.$opt.is_none() { self.$opt = fallback.$opt; } )*
                $( self.$flag |= fallback.$flag; )*
            }
        }
    };
}

merge_fields!(OptimalArgs; duration, samples, slew_max, verify;);
merge_fields!(SimulateArgs; drive, duration, trace, column, cutoff, end, dt, params, branches; clamp_negative);
merge_fields!(SweepArgs; grid, cutoff, dt; tau_units);
merge_fields!(MetricArgs; trace, column, window; clamp_negative);
merge_fields!(CircuitArgs; topology, branches, params, duration, samples, reference, column, fit_from, starts, budget; fit);

impl Cli {
    /// Applies the config file named by `--config`, if any.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        let Some(path) = self.global.config.clone() else {
            return Ok(self);
        };
        let cfg = ConfigFile::load(&path)?;
        let g = &mut self.global;
        g.laser = g.laser.take().or(cfg.laser);
        g.out = g.out.take().or(cfg.out);
        g.format = g.format.take().or(cfg.format);
        g.seed = g.seed.or(cfg.seed);
        match &mut self.command {
            Command::Optimal(a) => a.merge(cfg.optimal.unwrap_or_default()),
            Command::Simulate(a) => a.merge(cfg.simulate.unwrap_or_default()),
            Command::Sweep(a) => a.merge(cfg.sweep.unwrap_or_default()),
            Command::Metric(a) => a.merge(cfg.metric.unwrap_or_default()),
            Command::Circuit(a) => a.merge(cfg.circuit.unwrap_or_default()),
        }
        Ok(self)
    }
}
