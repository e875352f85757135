//! `gravsync`: scenarios, figure data and synchronization experiments for
//! satellite–ground HOM clock synchronization.

mod commands;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gravsync_core::Error;

#[derive(Parser)]
#[command(name = "gravsync", version, about, long_about = None)]
struct Cli {
    /// Directory for CSV/JSON outputs and run manifests.
    #[arg(long, global = true, env = "GRAVSYNC_OUT_DIR", default_value = "gravsync-out")]
    out_dir: PathBuf,

    /// Base name for output files (defaults to command and scenario).
    #[arg(long, global = true)]
    tag: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Overlaps, Δp and the noise-free coincidence scan of a scenario.
    ///
    /// Prints the disturbance report as JSON and writes the scan as CSV
    /// with columns delta_l_m,p_c.
    Scenario {
        /// Preset name (leo, leo-100ns, geo, geo-100ns, gps, flat,
        /// leo-wideband) or path to a scenario JSON file.
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Δp against satellite radius for a fixed source.
    ///
    /// CSV columns: r_b_m,delta_p.
    Figure2(Figure2Args),
    /// Δp over a grid of source frequency and bandwidth.
    ///
    /// CSV columns: omega0_hz,sigma_hz,delta_p (long format, σ-major).
    Figure3(Figure3Args),
    /// Simulate coincidence counts and fit the dip to recover Δτ.
    ///
    /// Prints the estimate as JSON and writes the counts as CSV with
    /// columns delta_l_m,counts,trials.
    Sync {
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        counting: CountingArgs,
        /// Fit the expected counts instead of sampled ones, in quad precision
        /// where available.
        #[arg(long)]
        analytic: bool,
        /// Also fit the source width.
        #[arg(long)]
        fit_sigma: bool,
    },
    /// Effect of a mirror-speed error on the recovered Δτ.
    Sensitivity {
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Speed error of the mirrors.
        #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
        dv_mps: f64,
    },
    /// Run the oracle cross-checks and report one line per check.
    Validate {
        /// Include the 100-seed Monte Carlo calibration study.
        #[arg(long)]
        full: bool,
    },
}

/// Scenario fields that can be overridden from the command line.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long, allow_hyphen_values = true)]
    pub rs_m: Option<f64>,
    #[arg(long)]
    pub ra_m: Option<f64>,
    #[arg(long)]
    pub rb_m: Option<f64>,
    #[arg(long)]
    pub omega0_hz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_hz: Option<f64>,
    /// Tabulated idler spectrum, columns omega_hz,re[,im].
    #[arg(long, conflicts_with = "sigma_hz")]
    pub spectrum_csv: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_mps: Option<f64>,
    /// Clock discrepancy τ₀ᵇ − τ₀ᵃ.
    #[arg(long, allow_hyphen_values = true)]
    pub dtau_s: Option<f64>,
    #[arg(long)]
    pub scan_points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub scan_center_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub scan_half_width_m: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct CountingArgs {
    /// Pairs sent per delay setting.
    #[arg(long, default_value_t = 100_000)]
    pub pairs: u64,
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    #[arg(long, default_value_t = 0.0)]
    pub background: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Mode {
    Approx,
    Exact,
}

impl From<Mode> for gravsync_core::DeltaPMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Approx => Self::Approx,
            Mode::Exact => Self::Exact,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Figure2Args {
    /// Explicit satellite radii (comma separated); overrides the grid.
    #[arg(long, value_delimiter = ',')]
    pub rb_m: Vec<f64>,
    #[arg(long, default_value_t = 6.371e6)]
    pub rb_min_m: f64,
    #[arg(long, default_value_t = 42.371e6)]
    pub rb_max_m: f64,
    #[arg(long, default_value_t = 361)]
    pub points: usize,
    #[arg(long, default_value_t = 6.371e6)]
    pub ra_m: f64,
    #[arg(long, default_value_t = 9e-3)]
    pub rs_m: f64,
    #[arg(long, default_value_t = 700e12)]
    pub omega0_hz: f64,
    #[arg(long, default_value_t = 100e6)]
    pub sigma_hz: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: Mode,
}

#[derive(Args, Debug, Clone)]
pub struct Figure3Args {
    #[arg(long, default_value_t = 500e12)]
    pub omega0_min_hz: f64,
    #[arg(long, default_value_t = 1000e12)]
    pub omega0_max_hz: f64,
    #[arg(long, default_value_t = 126)]
    pub omega0_points: usize,
    #[arg(long, default_value_t = 50e6)]
    pub sigma_min_hz: f64,
    #[arg(long, default_value_t = 500e6)]
    pub sigma_max_hz: f64,
    #[arg(long, default_value_t = 46)]
    pub sigma_points: usize,
    /// Satellite radius (LEO by default).
    #[arg(long, default_value_t = 6.771e6)]
    pub rb_m: f64,
    #[arg(long, default_value_t = 6.371e6)]
    pub ra_m: f64,
    #[arg(long, default_value_t = 9e-3)]
    pub rs_m: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: Mode,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const CONFIG: u8 = 2;
    pub const ESTIMATION: u8 = 3;

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: Self::CONFIG,
            message: message.into(),
        }
    }

    pub fn estimation(message: impl Into<String>) -> Self {
        Self {
            code: Self::ESTIMATION,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EdgeDip { .. }
            | Error::Underdetermined(_)
            | Error::NoConvergence(_)
            | Error::InsufficientPlateau(_) => Self::ESTIMATION,
            Error::Domain(_) | Error::InvalidConfig(_) | Error::Parse(_) | Error::Json(_) | Error::Csv(_) => {
                Self::CONFIG
            }
            Error::Io(_) | Error::Quadrature { .. } => 1,
        };
        let kind = match e {
            Error::EdgeDip { .. } => "EdgeDip: ",
            Error::Underdetermined(_) => "Underdetermined: ",
            Error::NoConvergence(_) => "NoConvergence: ",
            Error::InsufficientPlateau(_) => "InsufficientPlateau: ",
            _ => "",
        };
        Self {
            code,
            message: format!("{kind}{e}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = output::Context::new(cli.out_dir, cli.tag);
    let result = match cli.command {
        Command::Scenario { scenario, overrides } => commands::scenario(&ctx, &scenario, &overrides),
        Command::Figure2(a) => commands::figure2(&ctx, &a),
        Command::Figure3(a) => commands::figure3(&ctx, &a),
        Command::Sync {
            scenario,
            overrides,
            counting,
            analytic,
            fit_sigma,
        } => commands::sync(&ctx, &scenario, &overrides, &counting, analytic, fit_sigma),
        Command::Sensitivity {
            scenario,
            overrides,
            dv_mps,
        } => commands::sensitivity(&ctx, &scenario, &overrides, dv_mps),
        Command::Validate { full } => validate::run(full),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
