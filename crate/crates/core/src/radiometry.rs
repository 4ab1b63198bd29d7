//! Thermal radiation in three dimensions and in a single guided spatial mode.
//!
//! Everything in here works in angular frequency. Wavelengths appear only in
//! the `*_per_wavelength` helpers and in [`wien_peak`], which report in nm.
//!
//! The single-mode ("quasi-one-dimensional") power spectral density is
//!
//! ```text
//! S(ω) = (ħω/π) / (exp(βħω) − 1)
//! ```
//!
//! summed over both polarizations. Its integral over all ω is
//! `π (k_B T)² / (6ħ)`, quadratic in temperature rather than quartic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR, PLANCK, SPEED_OF_LIGHT};
use crate::error::{domain, Result};
use crate::quadrature;

/// Above this value of βħω the Bose factor is evaluated as `exp(-x)`.
pub const WIEN_SWITCH: f64 = 700.0;

/// Upper limit of βħω for the numerical part of the total-power quadrature.
const QUADRATURE_CUTOFF: f64 = 50.0;

/// Absolute temperature. Infinite temperature is allowed and maps to β = 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Temperature {
    kelvin: f64,
}

impl Temperature {
    /// Accepts any finite `kelvin >= 0` or `f64::INFINITY`.
    pub fn new(kelvin: f64) -> Result<Self> {
        if kelvin.is_nan() || kelvin < 0.0 {
            return Err(domain(format!("temperature must be >= 0 K, got {kelvin}")));
        }
        Ok(Self { kelvin })
    }

    pub fn infinite() -> Self {
        Self {
            kelvin: f64::INFINITY,
        }
    }

    pub fn kelvin(self) -> f64 {
        self.kelvin
    }

    pub fn is_infinite(self) -> bool {
        self.kelvin.is_infinite()
    }

    /// Inverse temperature 1/(k_B T) in J⁻¹; zero for infinite temperature.
    pub fn beta(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / (BOLTZMANN * self.kelvin)
        }
    }

    /// `1/T` in K⁻¹ (zero for infinite temperature).
    pub fn inverse_kelvin(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.kelvin
        }
    }

    fn require_finite_positive(self) -> Result<()> {
        if self.is_infinite() || self.kelvin <= 0.0 {
            Err(domain(format!(
                "temperature must be finite and > 0 K, got {}",
                self.kelvin
            )))
        } else {
            Ok(())
        }
    }
}

/// Angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AngularFrequency(f64);

impl AngularFrequency {
    pub fn new(rad_per_s: f64) -> Result<Self> {
        if rad_per_s.is_finite() && rad_per_s > 0.0 {
            Ok(Self(rad_per_s))
        } else {
            Err(domain(format!(
                "angular frequency must be finite and > 0, got {rad_per_s}"
            )))
        }
    }

    /// Vacuum wavelength in metres.
    pub fn from_wavelength_m(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(domain(format!(
                "wavelength must be finite and > 0, got {lambda}"
            )));
        }
        Self::new(2.0 * PI * SPEED_OF_LIGHT / lambda)
    }

    pub fn from_wavelength_nm(lambda_nm: f64) -> Result<Self> {
        Self::from_wavelength_m(lambda_nm * 1e-9)
    }

    pub fn rad_per_s(self) -> f64 {
        self.0
    }

    pub fn wavelength_m(self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.0
    }

    pub fn wavelength_nm(self) -> f64 {
        self.wavelength_m() * 1e9
    }
}

impl TryFrom<f64> for AngularFrequency {
    type Error = crate::error::Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<AngularFrequency> for f64 {
    fn from(value: AngularFrequency) -> f64 {
        value.0
    }
}

/// Number of polarization modes carried by the guided mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarizations {
    Single,
    #[default]
    Both,
}

impl Polarizations {
    fn count(self) -> f64 {
        match self {
            Polarizations::Single => 1.0,
            Polarizations::Both => 2.0,
        }
    }
}

/// βħω for the given mode.
pub fn reduced_energy(omega: AngularFrequency, t: Temperature) -> f64 {
    if t.kelvin == 0.0 {
        f64::INFINITY
    } else {
        HBAR * omega.0 * t.beta()
    }
}

/// `1/(exp(x) - 1)` without overflow for large x.
pub(crate) fn bose_factor(x: f64) -> f64 {
    if x > WIEN_SWITCH {
        (-x).exp()
    } else {
        1.0 / x.exp_m1()
    }
}

/// Mean thermal occupation `n̄ = 1/(exp(βħω) − 1)`.
///
/// Zero temperature gives 0; infinite temperature diverges and is an error.
pub fn mean_occupation(omega: AngularFrequency, t: Temperature) -> Result<f64> {
    if t.is_infinite() {
        return Err(domain("mean occupation diverges at infinite temperature"));
    }
    if t.kelvin == 0.0 {
        return Ok(0.0);
    }
    Ok(bose_factor(reduced_energy(omega, t)))
}

/// Planck spectral radiance `B_P(ω)` in W m⁻² sr⁻¹ (rad/s)⁻¹.
pub fn planck_radiance(omega: AngularFrequency, t: Temperature) -> Result<f64> {
    t.require_finite_positive()?;
    let w = omega.0;
    let prefactor = HBAR * w * w * w / (4.0 * PI.powi(3) * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    Ok(prefactor * bose_factor(reduced_energy(omega, t)))
}

/// Single-mode thermal power spectral density `S(ω)` in W s/rad, both polarizations.
pub fn q1d_psd(omega: AngularFrequency, t: Temperature) -> Result<f64> {
    q1d_psd_with(omega, t, Polarizations::Both)
}

/// As [`q1d_psd`] with an explicit polarization count.
pub fn q1d_psd_with(omega: AngularFrequency, t: Temperature, pol: Polarizations) -> Result<f64> {
    t.require_finite_positive()?;
    let per_polarization = HBAR * omega.0 / (2.0 * PI);
    Ok(pol.count() * per_polarization * bose_factor(reduced_energy(omega, t)))
}

/// Closed-form total single-mode power `π (k_B T)² / (6ħ)` in W.
pub fn q1d_total_power(t: Temperature) -> Result<f64> {
    if t.is_infinite() {
        return Err(domain(
            "total single-mode power diverges at infinite temperature",
        ));
    }
    let kt = BOLTZMANN * t.kelvin;
    Ok(PI * kt * kt / (6.0 * HBAR))
}

/// Numerical integral of [`q1d_psd`] over all ω.
///
/// Integrates to βħω = 50 adaptively and adds the analytic tail
/// `Σ_k (X/k + 1/k²) e^{-kX}` of `∫_X^∞ x/(eˣ−1) dx`.
pub fn q1d_total_power_quadrature(t: Temperature, rel_tol: f64) -> Result<f64> {
    t.require_finite_positive()?;
    let kt = BOLTZMANN * t.kelvin;
    let omega_cut = QUADRATURE_CUTOFF * kt / HBAR;
    let body = quadrature::integrate(
        |w| {
            if w <= 0.0 {
                kt / PI
            } else {
                HBAR * w / PI * bose_factor(HBAR * w / kt)
            }
        },
        0.0,
        omega_cut,
        rel_tol,
        0.0,
    )?;
    let x = QUADRATURE_CUTOFF;
    let tail_dimensionless: f64 = (1..=4)
        .map(|k| {
            let k = k as f64;
            (x / k + 1.0 / (k * k)) * (-k * x).exp()
        })
        .sum();
    // ∫ (ħω/π) n̄ dω = (k_B T)²/(πħ) ∫ x n̄(x) dx
    let tail = kt * kt / (PI * HBAR) * tail_dimensionless;
    Ok(body.value + tail)
}

/// Single-mode power between two angular frequencies (W).
pub fn q1d_band_power(
    t: Temperature,
    omega_lo: AngularFrequency,
    omega_hi: AngularFrequency,
) -> Result<f64> {
    t.require_finite_positive()?;
    let r = quadrature::integrate(
        |w| HBAR * w / PI * bose_factor(HBAR * w * t.beta()),
        omega_lo.0,
        omega_hi.0,
        1e-10,
        0.0,
    )?;
    Ok(r.value)
}

/// Spectral energy density inside a black body, `ρ_P(ω) = ω² S(ω)/(π c³)`,
/// in J m⁻³ (rad/s)⁻¹.
pub fn planck_energy_density(omega: AngularFrequency, t: Temperature) -> Result<f64> {
    let s = q1d_psd(omega, t)?;
    let w = omega.0;
    Ok(w * w / (PI * SPEED_OF_LIGHT.powi(3)) * s)
}

/// Jacobian `|dω/dλ|` for λ in nm, giving (rad/s) per nm.
pub fn omega_per_nm(lambda_nm: f64) -> f64 {
    let lambda_m = lambda_nm * 1e-9;
    2.0 * PI * SPEED_OF_LIGHT / (lambda_m * lambda_m) * 1e-9
}

/// Single-mode PSD per unit wavelength, W/nm.
pub fn q1d_psd_per_wavelength(lambda_nm: f64, t: Temperature) -> Result<f64> {
    let omega = AngularFrequency::from_wavelength_nm(lambda_nm)?;
    Ok(q1d_psd(omega, t)? * omega_per_nm(lambda_nm))
}

/// Planck radiance per unit wavelength, W m⁻² sr⁻¹ nm⁻¹.
pub fn planck_radiance_per_wavelength(lambda_nm: f64, t: Temperature) -> Result<f64> {
    let omega = AngularFrequency::from_wavelength_nm(lambda_nm)?;
    Ok(planck_radiance(omega, t)? * omega_per_nm(lambda_nm))
}

/// Spectral families whose peak position can be located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralFamily {
    /// Single-mode PSD per unit angular frequency.
    Q1dPerOmega,
    /// Single-mode PSD per unit wavelength.
    Q1dPerLambda,
    /// Planck radiance per unit angular frequency.
    ThreeDPerOmega,
    /// Planck radiance per unit wavelength.
    ThreeDPerLambda,
}

impl SpectralFamily {
    /// Exponent p of the dimensionless shape `x^p/(eˣ − 1)`, x = βħω.
    fn power(self) -> i32 {
        match self {
            SpectralFamily::Q1dPerOmega => 1,
            SpectralFamily::Q1dPerLambda | SpectralFamily::ThreeDPerOmega => 3,
            SpectralFamily::ThreeDPerLambda => 5,
        }
    }

    /// Value of the family at wavelength `lambda_nm` in its natural units.
    pub fn evaluate(self, lambda_nm: f64, t: Temperature) -> Result<f64> {
        let omega = AngularFrequency::from_wavelength_nm(lambda_nm)?;
        match self {
            SpectralFamily::Q1dPerOmega => q1d_psd(omega, t),
            SpectralFamily::Q1dPerLambda => q1d_psd_per_wavelength(lambda_nm, t),
            SpectralFamily::ThreeDPerOmega => planck_radiance(omega, t),
            SpectralFamily::ThreeDPerLambda => planck_radiance_per_wavelength(lambda_nm, t),
        }
    }

    pub fn is_per_wavelength(self) -> bool {
        matches!(
            self,
            SpectralFamily::Q1dPerLambda | SpectralFamily::ThreeDPerLambda
        )
    }
}

/// Peak of a spectral family in nm, or `None` when the curve has no
/// interior maximum (the single-mode PSD per ω decreases monotonically).
///
/// For the per-ω families the peak is reported as the vacuum wavelength of
/// the peak frequency.
pub fn wien_peak(family: SpectralFamily, t: Temperature) -> Result<Option<f64>> {
    t.require_finite_positive()?;
    let p = f64::from(family.power());
    // d/dx [x^p/(eˣ−1)] = 0  ⇔  p(1 − e^{−x}) − x = 0
    let stationarity = |x: f64| p * (-(-x).exp_m1()) - x;
    if family.power() <= 1 {
        return Ok(None);
    }
    let x = bisect(stationarity, 0.5, p + 1.0, 1e-13)?;
    let lambda_m = PLANCK * SPEED_OF_LIGHT / (x * BOLTZMANN * t.kelvin);
    Ok(Some(lambda_m * 1e9))
}

/// Bisection on a bracketing interval to relative width `rel_tol`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(domain(format!("root not bracketed in [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * mid.abs() {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(crate::error::Error::NoConvergence(
        "bisection exhausted 200 halvings".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kelvin(k: f64) -> Temperature {
        Temperature::new(k).unwrap()
    }

    fn at_614() -> AngularFrequency {
        AngularFrequency::from_wavelength_nm(614.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn wavelength_round_trip() {
        let w = AngularFrequency::from_wavelength_nm(455.5).unwrap();
        assert!(rel(w.wavelength_nm(), 455.5) < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Temperature::new(-1.0).is_err());
        assert!(Temperature::new(f64::NAN).is_err());
        assert!(AngularFrequency::new(0.0).is_err());
        assert!(AngularFrequency::new(-3.0).is_err());
        assert!(planck_radiance(at_614(), kelvin(0.0)).is_err());
        assert!(planck_radiance(at_614(), Temperature::infinite()).is_err());
        assert!(q1d_psd(at_614(), kelvin(0.0)).is_err());
        assert!(q1d_total_power(Temperature::infinite()).is_err());
        assert!(mean_occupation(at_614(), Temperature::infinite()).is_err());
    }

    #[test]
    fn occupation_at_ln2_is_one() {
        // choose T so that ħω/kT = ln 2
        let w = at_614();
        let t = kelvin(HBAR * w.rad_per_s() / (BOLTZMANN * std::f64::consts::LN_2));
        assert!(rel(mean_occupation(w, t).unwrap(), 1.0) < 1e-13);
        assert_eq!(mean_occupation(w, kelvin(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn values_at_614nm_and_5800k() {
        // independent hand evaluation: x = hc/(λ k T)
        let t = kelvin(5800.0);
        let x = PLANCK * SPEED_OF_LIGHT / (614e-9 * BOLTZMANN * 5800.0);
        assert!((x - 4.0402).abs() < 1e-3);
        let n = mean_occupation(at_614(), t).unwrap();
        assert!(rel(n, 1.79e-2) < 0.01, "n̄ = {n}");
        let b = planck_radiance(at_614(), t).unwrap();
        assert!(rel(b, 4.9e-9) < 0.01, "B = {b}");
        let s = q1d_psd(at_614(), t).unwrap();
        assert!(rel(s, 1.84e-21) < 0.01, "S = {s}");
        let rho = planck_energy_density(at_614(), t).unwrap();
        assert!(rel(rho, 2.05e-16) < 0.01, "rho = {rho}");
        assert!(rel(rho, 4.0 * PI / SPEED_OF_LIGHT * b) < 1e-13);
    }

    #[test]
    fn low_frequency_limits() {
        let t = kelvin(5800.0);
        let w = AngularFrequency::new(1e6).unwrap();
        let plateau = BOLTZMANN * 5800.0 / PI;
        assert!(rel(plateau, 2.55e-20) < 0.01);
        assert!(rel(q1d_psd(w, t).unwrap(), plateau) < 1e-6);
        let rj = w.rad_per_s().powi(2) * BOLTZMANN * 5800.0
            / (4.0 * PI.powi(3) * SPEED_OF_LIGHT.powi(2));
        assert!(rel(planck_radiance(w, t).unwrap(), rj) < 1e-6);
    }

    #[test]
    fn vacuum_and_wien_tail() {
        let cold = kelvin(1e-3);
        assert_eq!(planck_radiance(at_614(), cold).unwrap(), 0.0);
        assert_eq!(q1d_psd(at_614(), cold).unwrap(), 0.0);
        assert_eq!(planck_energy_density(at_614(), cold).unwrap(), 0.0);
        assert_eq!(q1d_total_power(kelvin(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn overflow_switch_is_continuous() {
        let below = bose_factor(WIEN_SWITCH - 1e-9);
        let above = bose_factor(WIEN_SWITCH + 1e-9);
        assert!(rel(below, above) < 1e-8);
        assert!(bose_factor(740.0) > 0.0);
        let t = kelvin(reduced_energy(at_614(), kelvin(1.0)) / 720.0);
        let s = q1d_psd_with(at_614(), t, Polarizations::Both).unwrap();
        assert!(s.is_finite() && s >= 0.0);
    }

    #[test]
    fn total_power_at_5800k() {
        let p = q1d_total_power(kelvin(5800.0)).unwrap();
        assert!(rel(p, 3.19e-5) < 0.005, "P = {p}");
        let p2 = q1d_total_power(kelvin(11600.0)).unwrap();
        assert!(rel(p2, 4.0 * p) < 1e-14);
    }

    #[test]
    fn single_polarization_halves_psd() {
        let t = kelvin(5800.0);
        let both = q1d_psd(at_614(), t).unwrap();
        let one = q1d_psd_with(at_614(), t, Polarizations::Single).unwrap();
        assert!(rel(2.0 * one, both) < 1e-15);
    }

    #[test]
    fn peak_positions_at_5800k() {
        let t = kelvin(5800.0);
        assert_eq!(wien_peak(SpectralFamily::Q1dPerOmega, t).unwrap(), None);
        let q = wien_peak(SpectralFamily::Q1dPerLambda, t).unwrap().unwrap();
        let p = wien_peak(SpectralFamily::ThreeDPerLambda, t)
            .unwrap()
            .unwrap();
        assert!((q - 879.0).abs() < 1.0, "{q}");
        assert!((p - 500.0).abs() < 1.0, "{p}");
        // x roots of the two stationarity conditions
        let x3 = PLANCK * SPEED_OF_LIGHT / (q * 1e-9 * BOLTZMANN * 5800.0);
        let x5 = PLANCK * SPEED_OF_LIGHT / (p * 1e-9 * BOLTZMANN * 5800.0);
        assert!((x3 - 2.821_439_372).abs() < 1e-8);
        assert!((x5 - 4.965_114_231).abs() < 1e-8);
    }

    #[test]
    fn bisect_requires_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
