//! JSON run configuration. Each subcommand reads its own section; flags given
//! on the command line take precedence over the file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use sunlight_cooling::cooling_sim::TransferProbability;
use sunlight_cooling::data_pipeline::ShapeModel;

use crate::Family;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub rate: RateSection,
    #[serde(default)]
    pub virtual_temp: VirtualTempSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub reduce: ReduceSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub temperature_k: Option<f64>,
    pub family: Option<Family>,
    pub band_nm: Option<[f64; 2]>,
    pub points: Option<usize>,
    pub svg: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub ion: Option<PathBuf>,
    pub eta: Option<f64>,
    pub grayness: Option<f64>,
    pub waist_m: Option<f64>,
    pub temperature_k: Option<f64>,
    pub p_d: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualTempSection {
    pub ion: Option<PathBuf>,
    /// `null` or absent in the file means the flag must supply it; use a very
    /// large number or the flag value `inf` for a coherent laser.
    pub laser_k: Option<f64>,
    pub sun_k: Option<f64>,
    pub room_k: Option<f64>,
    pub motion_mhz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub gamma_s: Option<f64>,
    pub eta_sp: Option<f64>,
    pub step_i_duration_s: Option<f64>,
    pub transfer: Option<TransferProbability>,
    pub heating_rate: Option<f64>,
    pub n_initial: Option<u64>,
    pub t_max_s: Option<f64>,
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    pub grid_points: Option<usize>,
    pub svg: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSection {
    pub raw: Option<PathBuf>,
    pub response: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub power_w: Option<f64>,
    pub band_nm: Option<[f64; 2]>,
    pub temperature_k: Option<f64>,
    pub slit: Option<SlitSection>,
    pub model: Option<ShapeModel>,
    pub no_atmosphere: Option<bool>,
    pub svg: Option<bool>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlitSection {
    pub width_m: f64,
    pub distance_m: f64,
    pub mode_field_radius_m: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// First of `flag`, `file`, or an error naming the missing input.
pub fn required<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T> {
    flag.or(file)
        .with_context(|| format!("missing {what}: pass it as a flag or in the config file"))
}
