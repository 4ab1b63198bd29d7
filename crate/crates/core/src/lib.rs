//! Thermal-light radiometry for single-mode fibers and sunlight-driven
//! sideband cooling of trapped ions.
//!
//! The crate covers:
//! - [`radiometry`]: Bose–Einstein occupation, Planck radiance and the
//!   single-mode power spectral density.
//! - [`mode_optics`]: étendue, geometric grayness and focusing of a guided mode.
//! - [`ion_thermo`]: excitation and cooling rates, virtual temperatures.
//! - [`cooling_sim`]: Monte-Carlo and rate-equation models of the cooling cycle.
//! - [`data_pipeline`]: reduction of spectrometer readings to a delivery efficiency.
//! - [`checks`]: the self-test suite run by `sunlight check`.

pub mod checks;
pub mod constants;
pub mod cooling_sim;
pub mod data_pipeline;
pub mod error;
pub mod ion_thermo;
pub mod mode_optics;
pub mod oracle;

pub mod quadrature;
pub mod radiometry;
pub mod spectrum;

pub use error::{Error, Result};
pub use radiometry::{AngularFrequency, Polarizations, SpectralFamily, Temperature};
pub use spectrum::{SampledSpectrum, SpectrumKind};
