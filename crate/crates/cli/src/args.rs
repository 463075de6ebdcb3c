use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use critical_otto::io::config::FileConfig;
use critical_otto::Scheme;

#[derive(Parser, Debug)]
#[command(name = "critical-otto", version, about = "Quantum Otto engine with a critical Ising working medium")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one cycle and print its energy balance.
    #[command(allow_negative_numbers = true)]
    Cycle(CycleArgs),
    /// Run cycles along a tau2 or T_C grid and fit W - W~ to a power law.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Locate tau_min per cold temperature and tabulate |P| = |W~| / tau_min.
    #[command(allow_negative_numbers = true)]
    Taumin(TauminArgs),
    /// Compare W - W~ with the Landau-Zener mode sum.
    #[command(allow_negative_numbers = true)]
    Analytic(AnalyticArgs),
    /// Regenerate a log-log SVG from a CSV table.
    Plot(PlotArgs),
    /// Check the output digests listed in a directory's manifest.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML run configuration, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: CRITICAL_OTTO_THREADS, else all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    Exact,
    Rk4,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Exact => Scheme::ExactMidpointExponential,
            SchemeArg::Rk4 => Scheme::Rk4Crosscheck,
        }
    }
}

/// Engine parameters. Unset values come from `--config`, then from the
/// reference engine (L = 100, h1 = 10, h2 = 1, Th = 1000, tau1 = 10).
#[derive(Args, Debug, Clone, Default)]
pub struct Base {
    /// Chain length (even).
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub h1: Option<f64>,
    #[arg(long)]
    pub h2: Option<f64>,
    /// Hot bath temperature.
    #[arg(long = "Th")]
    pub t_hot: Option<f64>,
    /// Cold bath temperature.
    #[arg(long = "Tc")]
    pub t_cold: Option<f64>,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    #[arg(long)]
    pub substeps_min: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// tau2_only, tau1_plus_tau2 or explicit:<time>.
    #[arg(long)]
    pub power_denominator: Option<String>,
}

impl Base {
    pub fn to_file_config(&self) -> FileConfig {
        FileConfig {
            l: self.l,
            h1: self.h1,
            h2: self.h2,
            t_hot: self.t_hot,
            t_cold: self.t_cold,
            tau1: self.tau1,
            tau2: self.tau2,
            dt_max: self.dt_max,
            substeps_min: self.substeps_min,
            scheme: self.scheme.map(Scheme::from),
            power_denominator: self.power_denominator.clone(),
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct CycleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub base: Base,
    /// CSV output path; the manifest goes next to it.
    #[arg(long, default_value = "cycle.csv")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisArg {
    #[value(name = "tau2")]
    Tau2,
    #[value(name = "Tc")]
    Tc,
}

impl AxisArg {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisArg::Tau2 => "tau2",
            AxisArg::Tc => "Tc",
        }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub base: Base,
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    /// log:lo:hi:n or list:v1,v2,...
    #[arg(long)]
    pub grid: Option<String>,
    /// lo:hi on the axis (default: upper decade of the grid).
    #[arg(long)]
    pub fit_window: Option<String>,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    /// Log-log SVG of W - W~ with the fitted line; same directory as --out.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TauminArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub base: Base,
    #[arg(long = "Tc-grid")]
    pub tc_grid: Option<String>,
    /// Search grid for tau2 (default log:1:3000:40).
    #[arg(long)]
    pub tau2_grid: Option<String>,
    /// Threshold on W - W~ (default 2).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// lo:hi on T_C for the tau_min fit (default: whole grid).
    #[arg(long)]
    pub fit_window: Option<String>,
    #[arg(long, default_value = "taumin.csv")]
    pub out: PathBuf,
    /// SVG of tau_min against T_C with the fitted line.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// SVG of |P| against T_C.
    #[arg(long)]
    pub power_plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub base: Base,
    #[arg(long = "Tc-grid", conflicts_with = "tau2_grid")]
    pub tc_grid: Option<String>,
    #[arg(long)]
    pub tau2_grid: Option<String>,
    /// lo:hi on the axis for the prefactor fit (default: whole grid).
    #[arg(long)]
    pub fit_window: Option<String>,
    #[arg(long, default_value = "analytic.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// CSV written by another subcommand.
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub fit_window: Option<String>,
    /// Draw points only.
    #[arg(long)]
    pub no_fit: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Output directory containing manifest.toml.
    pub dir: PathBuf,
}
