//! Geometry of a single diffraction-limited spatial mode.
//!
//! A mode's area and solid angle obey `A(ω)·Ω(ω) = λ²`. A fiber either holds
//! its output divergence fixed (step-index, area grows as λ²) or its mode
//! area fixed (photonic crystal, solid angle grows as λ²); anything in between
//! is described by a tabulated area curve.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{domain, invalid, Error, Result};
use crate::radiometry::AngularFrequency;

const FULL_SPHERE_SR: f64 = 4.0 * PI;

/// Hard paraxial limit on the focusing half-angle (rad).
pub const PARAXIAL_LIMIT_RAD: f64 = 0.3;
/// Half-angles above this trigger a warning (rad).
pub const PARAXIAL_WARN_RAD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModeRegime {
    /// Output divergence (solid angle Ω₀) independent of frequency.
    ConstantDivergence { solid_angle_sr: f64 },
    /// Mode area A₀ independent of frequency.
    ConstantArea { area_m2: f64 },
    /// Mode area interpolated linearly in wavelength from a table.
    Tabulated {
        wavelengths_nm: Vec<f64>,
        areas_m2: Vec<f64>,
    },
}

/// How a fiber's guided mode scales with frequency over a wavelength band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FiberModeConfig", into = "FiberModeConfig")]
pub struct FiberModeModel {
    regime: ModeRegime,
    band_nm: (f64, f64),
}

/// JSON form of [`FiberModeModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberModeConfig {
    pub regime: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_sr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_m2: Option<f64>,
    /// `[[wavelength_nm, area_m2], ...]` for the tabulated regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_table: Option<Vec<[f64; 2]>>,
    pub band_nm: [f64; 2],
}

impl TryFrom<FiberModeConfig> for FiberModeModel {
    type Error = Error;

    fn try_from(c: FiberModeConfig) -> Result<Self> {
        let band = (c.band_nm[0], c.band_nm[1]);
        match (c.regime.as_str(), c.omega0_sr, c.area_m2, c.area_table) {
            ("constant_divergence", Some(sr), None, None) => Self::constant_divergence(sr, band),
            ("constant_area", None, Some(a), None) => Self::constant_area(a, band),
            ("tabulated", None, None, Some(table)) => {
                let (l, a) = table.iter().map(|p| (p[0], p[1])).unzip();
                Self::tabulated(l, a, band)
            }
            (r @ ("constant_divergence" | "constant_area" | "tabulated"), ..) => Err(invalid(format!(
                "regime '{r}' needs exactly one of omega0_sr / area_m2 / area_table matching the regime"
            ))),
            (other, ..) => Err(invalid(format!("unknown fiber regime '{other}'"))),
        }
    }
}

impl From<FiberModeModel> for FiberModeConfig {
    fn from(m: FiberModeModel) -> Self {
        let band_nm = [m.band_nm.0, m.band_nm.1];
        match m.regime {
            ModeRegime::ConstantDivergence { solid_angle_sr } => FiberModeConfig {
                regime: "constant_divergence".into(),
                omega0_sr: Some(solid_angle_sr),
                area_m2: None,
                area_table: None,
                band_nm,
            },
            ModeRegime::ConstantArea { area_m2 } => FiberModeConfig {
                regime: "constant_area".into(),
                omega0_sr: None,
                area_m2: Some(area_m2),
                area_table: None,
                band_nm,
            },
            ModeRegime::Tabulated {
                wavelengths_nm,
                areas_m2,
            } => FiberModeConfig {
                regime: "tabulated".into(),
                omega0_sr: None,
                area_m2: None,
                area_table: Some(
                    wavelengths_nm
                        .iter()
                        .zip(&areas_m2)
                        .map(|(l, a)| [*l, *a])
                        .collect(),
                ),
                band_nm,
            },
        }
    }
}

fn check_band(band: (f64, f64)) -> Result<()> {
    if band.0.is_finite() && band.1.is_finite() && band.0 > 0.0 && band.0 < band.1 {
        Ok(())
    } else {
        Err(invalid(format!(
            "invalid wavelength band [{}, {}] nm",
            band.0, band.1
        )))
    }
}

impl FiberModeModel {
    pub fn constant_divergence(solid_angle_sr: f64, band_nm: (f64, f64)) -> Result<Self> {
        check_band(band_nm)?;
        if !(solid_angle_sr > 0.0 && solid_angle_sr <= FULL_SPHERE_SR) {
            return Err(invalid(format!(
                "solid angle must lie in (0, 4π] sr, got {solid_angle_sr}"
            )));
        }
        Ok(Self {
            regime: ModeRegime::ConstantDivergence { solid_angle_sr },
            band_nm,
        })
    }

    pub fn constant_area(area_m2: f64, band_nm: (f64, f64)) -> Result<Self> {
        check_band(band_nm)?;
        if !(area_m2.is_finite() && area_m2 > 0.0) {
            return Err(invalid(format!(
                "mode area must be positive, got {area_m2}"
            )));
        }
        Ok(Self {
            regime: ModeRegime::ConstantArea { area_m2 },
            band_nm,
        })
    }

    /// Intermediate regimes: the table must cover the band.
    pub fn tabulated(
        wavelengths_nm: Vec<f64>,
        areas_m2: Vec<f64>,
        band_nm: (f64, f64),
    ) -> Result<Self> {
        check_band(band_nm)?;
        if wavelengths_nm.len() != areas_m2.len() || wavelengths_nm.len() < 2 {
            return Err(invalid(
                "area table needs at least two (wavelength, area) rows",
            ));
        }
        if wavelengths_nm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "area table wavelengths must be strictly increasing",
            ));
        }
        if areas_m2.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(invalid("tabulated areas must be positive"));
        }
        if wavelengths_nm[0] > band_nm.0 || wavelengths_nm[wavelengths_nm.len() - 1] < band_nm.1 {
            return Err(invalid("area table does not cover the model band"));
        }
        Ok(Self {
            regime: ModeRegime::Tabulated {
                wavelengths_nm,
                areas_m2,
            },
            band_nm,
        })
    }

    pub fn regime(&self) -> &ModeRegime {
        &self.regime
    }

    pub fn band_nm(&self) -> (f64, f64) {
        self.band_nm
    }

    fn in_band(&self, omega: AngularFrequency) -> Result<f64> {
        let l = omega.wavelength_nm();
        // one part in 1e12 of slack so band edges given in nm round-trip
        let (lo, hi) = self.band_nm;
        if l < lo * (1.0 - 1e-12) || l > hi * (1.0 + 1e-12) {
            return Err(domain(format!(
                "{l:.3} nm outside the fiber model band [{lo}, {hi}] nm"
            )));
        }
        Ok(l)
    }
}

/// Effective mode area A(ω) in m².
pub fn mode_area(model: &FiberModeModel, omega: AngularFrequency) -> Result<f64> {
    let l_nm = model.in_band(omega)?;
    let lambda = omega.wavelength_m();
    let area = match &model.regime {
        ModeRegime::ConstantDivergence { solid_angle_sr } => lambda * lambda / solid_angle_sr,
        ModeRegime::ConstantArea { area_m2 } => *area_m2,
        ModeRegime::Tabulated {
            wavelengths_nm,
            areas_m2,
        } => {
            let i = wavelengths_nm
                .partition_point(|&x| x <= l_nm)
                .clamp(1, wavelengths_nm.len() - 1);
            let (x0, x1) = (wavelengths_nm[i - 1], wavelengths_nm[i]);
            let f = (l_nm - x0) / (x1 - x0);
            areas_m2[i - 1] + f * (areas_m2[i] - areas_m2[i - 1])
        }
    };
    Ok(area)
}

/// Mode solid angle Ω(ω) = λ²/A(ω) in sr. Models that would need more than
/// the full sphere are rejected.
pub fn mode_solid_angle(model: &FiberModeModel, omega: AngularFrequency) -> Result<f64> {
    let solid_angle = match &model.regime {
        ModeRegime::ConstantDivergence { solid_angle_sr } => {
            model.in_band(omega)?;
            *solid_angle_sr
        }
        _ => {
            let lambda = omega.wavelength_m();
            lambda * lambda / mode_area(model, omega)?
        }
    };
    if solid_angle > FULL_SPHERE_SR {
        return Err(domain(format!(
            "mode solid angle {solid_angle:.4} sr exceeds 4π at {:.1} nm",
            omega.wavelength_nm()
        )));
    }
    Ok(solid_angle)
}

/// Spectral radiance `S/(A·Ω)` carried by a guided mode with PSD `psd`.
pub fn mode_radiance(model: &FiberModeModel, omega: AngularFrequency, psd: f64) -> Result<f64> {
    Ok(psd / (mode_area(model, omega)? * mode_solid_angle(model, omega)?))
}

/// Integrated-intensity ("top hat") area `πw₀²/2` of a gaussian mode with
/// 1/e field radius `w0`.
pub fn top_hat_area(w0_m: f64) -> Result<f64> {
    if !(w0_m.is_finite() && w0_m > 0.0) {
        return Err(domain(format!("waist must be positive, got {w0_m}")));
    }
    Ok(0.5 * PI * w0_m * w0_m)
}

/// Geometric grayness `G = (λ²/4π)/A`: delivered energy density relative to
/// the inside of a black body.
pub fn grayness(area_m2: f64, omega: AngularFrequency) -> Result<f64> {
    if !(area_m2.is_finite() && area_m2 > 0.0) {
        return Err(domain(format!("area must be positive, got {area_m2}")));
    }
    let lambda = omega.wavelength_m();
    let g = lambda * lambda / (FULL_SPHERE_SR * area_m2);
    if g > 1.0 + 1e-12 {
        return Err(domain(format!(
            "grayness {g:.4} > 1: area {area_m2:e} m² is below λ²/4π at {:.1} nm",
            omega.wavelength_nm()
        )));
    }
    Ok(g.min(1.0))
}

/// `G = Ω/4π`.
pub fn grayness_from_solid_angle(solid_angle_sr: f64) -> Result<f64> {
    if !(solid_angle_sr > 0.0 && solid_angle_sr <= FULL_SPHERE_SR) {
        return Err(domain(format!(
            "solid angle must lie in (0, 4π], got {solid_angle_sr}"
        )));
    }
    Ok(solid_angle_sr / FULL_SPHERE_SR)
}

/// Spectral energy density `ρ = S/(cA)` at a focus of area `A`.
pub fn focused_energy_density(psd: f64, area_m2: f64) -> Result<f64> {
    if !(psd >= 0.0 && psd.is_finite()) {
        return Err(domain(format!(
            "power spectral density must be >= 0, got {psd}"
        )));
    }
    if !(area_m2 > 0.0 && area_m2.is_finite()) {
        return Err(domain(format!("area must be positive, got {area_m2}")));
    }
    Ok(psd / (SPEED_OF_LIGHT * area_m2))
}

/// Angular distribution of the spectral radiance of a gaussian mode of waist
/// `w0`, using the top-hat area:
///
/// `B(ω,θ) = (S/A_TH)·(2/π)(ωw₀/2c)²·exp(−2 sin²θ (ωw₀/2c)²)`.
///
/// On axis this is four times the Planck radiance for thermal `S`. It is a
/// diagnostic of the far-field shape, not a radiance to use in transport
/// balances.
pub fn gaussian_angular_radiance(
    omega: AngularFrequency,
    theta_rad: f64,
    w0_m: f64,
    psd: f64,
) -> Result<f64> {
    if !(0.0..PI / 2.0).contains(&theta_rad) {
        return Err(domain(format!(
            "polar angle must lie in [0, π/2), got {theta_rad}"
        )));
    }
    let a_th = top_hat_area(w0_m)?;
    let k = omega.rad_per_s() * w0_m / (2.0 * SPEED_OF_LIGHT);
    let k2 = k * k;
    let s = theta_rad.sin();
    Ok(psd / a_th * (2.0 / PI) * k2 * (-2.0 * s * s * k2).exp())
}

/// Focusing geometry for delivering a mode onto the ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusGeometry {
    waist_m: f64,
    half_angle_rad: f64,
}

impl FocusGeometry {
    pub fn new(waist_m: f64, half_angle_rad: f64) -> Result<Self> {
        if !(waist_m.is_finite() && waist_m > 0.0) {
            return Err(invalid(format!("waist must be positive, got {waist_m}")));
        }
        if !(half_angle_rad.is_finite() && half_angle_rad > 0.0) {
            return Err(invalid(format!(
                "half-angle must be positive, got {half_angle_rad}"
            )));
        }
        if half_angle_rad >= PARAXIAL_LIMIT_RAD {
            return Err(invalid(format!(
                "half-angle {half_angle_rad} rad is beyond the paraxial limit of {PARAXIAL_LIMIT_RAD} rad"
            )));
        }
        if half_angle_rad > PARAXIAL_WARN_RAD {
            log::warn!("half-angle {half_angle_rad} rad: paraxial approximation is marginal");
        }
        Ok(Self {
            waist_m,
            half_angle_rad,
        })
    }

    /// Paraxial gaussian focus of a mode at `omega`: ϑ = 2c/(ω w₀).
    pub fn diffraction_limited(waist_m: f64, omega: AngularFrequency) -> Result<Self> {
        Self::new(
            waist_m,
            2.0 * SPEED_OF_LIGHT / (omega.rad_per_s() * waist_m),
        )
    }

    pub fn waist_m(&self) -> f64 {
        self.waist_m
    }

    pub fn half_angle_rad(&self) -> f64 {
        self.half_angle_rad
    }

    pub fn top_hat_area(&self) -> f64 {
        0.5 * PI * self.waist_m * self.waist_m
    }

    pub fn grayness(&self, omega: AngularFrequency) -> Result<f64> {
        grayness(self.top_hat_area(), omega)
    }
}
