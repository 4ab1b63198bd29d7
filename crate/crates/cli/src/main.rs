//! `sunlight`: spectra, cooling rates, virtual temperatures, cycle simulations,
//! spectrometer reductions and the self-test suite from the command line.

mod commands;
mod config;
mod output;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use sunlight_cooling::SpectralFamily;

#[derive(Parser, Debug)]
#[command(
    name = "sunlight",
    version,
    about = "Thermal light in single-mode fibers and sunlight-driven ion cooling"
)]
pub struct Cli {
    /// JSON configuration file with one section per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for result files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a thermal spectrum (single-mode or black-body).
    Spectrum(SpectrumArgs),
    /// Sunlight excitation and phonon cooling rate for an ion.
    Rate(RateArgs),
    /// Virtual temperature and motional occupation limit.
    VirtualTemp(VirtualTempArgs),
    /// Monte-Carlo ensemble of the cooling cycle.
    Simulate(SimulateArgs),
    /// Reduce a spectrometer reading to a delivery efficiency.
    Reduce(ReduceArgs),
    /// Run the self-test suite.
    Check(CheckArgs),
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Single-mode PSD per unit angular frequency.
    #[value(name = "q1d-per-omega")]
    Q1dPerOmega,
    /// Single-mode PSD per unit wavelength.
    #[value(name = "q1d-per-lambda")]
    Q1dPerLambda,
    /// Planck radiance per unit angular frequency.
    #[value(name = "3d-per-omega")]
    #[serde(rename = "3d-per-omega")]
    ThreeDPerOmega,
    /// Planck radiance per unit wavelength.
    #[value(name = "3d-per-lambda")]
    #[serde(rename = "3d-per-lambda")]
    ThreeDPerLambda,
}

impl From<Family> for SpectralFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Q1dPerOmega => SpectralFamily::Q1dPerOmega,
            Family::Q1dPerLambda => SpectralFamily::Q1dPerLambda,
            Family::ThreeDPerOmega => SpectralFamily::ThreeDPerOmega,
            Family::ThreeDPerLambda => SpectralFamily::ThreeDPerLambda,
        }
    }
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long = "temperature-k")]
    pub temperature_k: Option<f64>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Wavelength band in nm.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub band_nm: Option<Vec<f64>>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    /// Atomic data JSON, or `builtin:ba138` for the bundled ¹³⁸Ba⁺ data.
    #[arg(long)]
    pub ion: Option<PathBuf>,
    /// Delivery efficiency η.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Geometric grayness G.
    #[arg(long, conflicts_with = "waist_m")]
    pub grayness: Option<f64>,
    /// Focus waist (1/e field radius) in m; G follows from the top-hat area.
    #[arg(long)]
    pub waist_m: Option<f64>,
    /// Source temperature in K.
    #[arg(long = "temperature-k")]
    pub temperature_k: Option<f64>,
    /// Probability of finding the ion in D.
    #[arg(long)]
    pub p_d: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VirtualTempArgs {
    #[arg(long)]
    pub ion: Option<PathBuf>,
    /// Effective temperature of the S↔D laser in K (`inf` for a coherent laser).
    #[arg(long)]
    pub laser_k: Option<f64>,
    #[arg(long)]
    pub sun_k: Option<f64>,
    #[arg(long)]
    pub room_k: Option<f64>,
    /// Trap frequency in MHz.
    #[arg(long)]
    pub motion_mhz: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub gamma_s: Option<f64>,
    #[arg(long)]
    pub eta_sp: Option<f64>,
    #[arg(long)]
    pub step_i_duration_s: Option<f64>,
    #[arg(long)]
    pub heating_rate: Option<f64>,
    #[arg(long)]
    pub n_initial: Option<u64>,
    #[arg(long)]
    pub t_max_s: Option<f64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    /// Raw spectrometer counts (CSV).
    #[arg(long)]
    pub raw: Option<PathBuf>,
    /// Instrument response (CSV).
    #[arg(long)]
    pub response: Option<PathBuf>,
    /// Ground-level solar reference (CSV); the bundled ASTM G173 direct
    /// spectrum when omitted.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Skip the atmospheric correction.
    #[arg(long)]
    pub no_atmosphere: bool,
    /// Power-meter reading in W.
    #[arg(long)]
    pub power_w: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub band_nm: Option<Vec<f64>>,
    /// Source temperature in K.
    #[arg(long = "temperature-k")]
    pub temperature_k: Option<f64>,
    /// Slit width, fiber-to-slit distance and mode-field radius, all in m.
    #[arg(long, num_args = 3, value_names = ["WIDTH", "DISTANCE", "MODE_RADIUS"])]
    pub slit_m: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub model: Option<FitModel>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FitModel {
    Q1d,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Run a single criterion (1–9).
    #[arg(long)]
    pub only: Option<u8>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(outcome) => {
            if cli.json {
                emit(&format!(
                    "{}\n",
                    serde_json::to_string_pretty(&outcome.json).expect("report serializes")
                ));
            } else {
                emit(&outcome.text);
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            if cli.json {
                let report = serde_json::json!({ "error": format!("{e:#}") });
                emit(&format!(
                    "{}\n",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                ));
            }
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

// a closed pipe (e.g. `| head`) is not an error worth a panic
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}
