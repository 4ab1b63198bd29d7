//! Physical constants (SI, CODATA 2018 exact definitions where available).
//!
//! Every module reads its constants from here.

use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Surface temperature of the sun used throughout the cooling estimates (K).
pub const SUN_TEMPERATURE_K: f64 = 5800.0;
