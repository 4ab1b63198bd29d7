//! Atomic rates for the three-level S/D/P ion and the virtual-qubit limit
//! temperature of the motion.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR, SPEED_OF_LIGHT};
use crate::error::{domain, invalid, Error, Result};
use crate::radiometry::{mean_occupation, planck_energy_density, AngularFrequency, Temperature};

/// Bundled atomic data for ¹³⁸Ba⁺.
pub const BARIUM_138_JSON: &str = include_str!("../data/ba138_plus.json");

const LEVEL_CLOSURE_TOL: f64 = 1e-6;

/// On-disk schema of an atomic data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicData {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub omega1_rad_s: f64,
    pub omega2_rad_s: f64,
    pub omega3_rad_s: f64,
    #[serde(rename = "A_PS_s")]
    pub a_ps_s: f64,
    #[serde(rename = "A_PD_s")]
    pub a_pd_s: f64,
    /// Einstein A of the driven D↔P line when P also decays to other D
    /// levels; defaults to `A_PD_s`.
    #[serde(rename = "A_drive_s", default, skip_serializing_if = "Option::is_none")]
    pub a_drive_s: Option<f64>,
    pub g_e: u32,
    pub g_g: u32,
    #[serde(default)]
    pub references: Vec<String>,
}

/// Three-level ion: S↔D at ω₁ (laser sideband), D↔P at ω₂ (sunlight),
/// S↔P at ω₃ (spontaneous emission).
#[derive(Debug, Clone, PartialEq)]
pub struct IonSpec {
    pub name: String,
    pub omega1: AngularFrequency,
    pub omega2: AngularFrequency,
    pub omega3: AngularFrequency,
    /// P → S decay rate (s⁻¹).
    pub a_ps: f64,
    /// Total P → D decay rate (s⁻¹).
    pub a_pd: f64,
    /// Einstein A of the driven D ↔ P line (s⁻¹).
    pub a_drive: f64,
    /// Degeneracy of P (upper level of the driven line).
    pub g_e: u32,
    /// Degeneracy of D (lower level of the driven line).
    pub g_g: u32,
    pub references: Vec<String>,
}

impl TryFrom<AtomicData> for IonSpec {
    type Error = Error;

    fn try_from(d: AtomicData) -> Result<Self> {
        let omega1 = AngularFrequency::new(d.omega1_rad_s)?;
        let omega2 = AngularFrequency::new(d.omega2_rad_s)?;
        let omega3 = AngularFrequency::new(d.omega3_rad_s)?;
        let closure = (d.omega3_rad_s - d.omega1_rad_s - d.omega2_rad_s).abs() / d.omega3_rad_s;
        if closure > LEVEL_CLOSURE_TOL {
            return Err(invalid(format!(
                "level closure violated: |ω3 − ω1 − ω2|/ω3 = {closure:e} > {LEVEL_CLOSURE_TOL:e}"
            )));
        }
        let a_drive = d.a_drive_s.unwrap_or(d.a_pd_s);
        for (label, a) in [
            ("A_PS_s", d.a_ps_s),
            ("A_PD_s", d.a_pd_s),
            ("A_drive_s", a_drive),
        ] {
            if !(a.is_finite() && a > 0.0) {
                return Err(invalid(format!("{label} must be positive, got {a}")));
            }
        }
        if a_drive > d.a_pd_s * (1.0 + 1e-12) {
            return Err(invalid("A_drive_s cannot exceed the total P→D rate A_PD_s"));
        }
        if d.g_e == 0 || d.g_g == 0 {
            return Err(invalid("degeneracies must be >= 1"));
        }
        Ok(IonSpec {
            name: d.name,
            omega1,
            omega2,
            omega3,
            a_ps: d.a_ps_s,
            a_pd: d.a_pd_s,
            a_drive,
            g_e: d.g_e,
            g_g: d.g_g,
            references: d.references,
        })
    }
}

impl IonSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<AtomicData>(text)?.try_into()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("atomic data file {}: {e}", path.display()),
            ))
        })?;
        Self::from_json(&text)
    }

    pub fn barium_138() -> Self {
        Self::from_json(BARIUM_138_JSON).expect("bundled atomic data is valid")
    }

    /// The sunlight-driven D → P absorption line.
    pub fn driven_transition(&self) -> Transition {
        Transition {
            a_eg: self.a_drive,
            g_e: self.g_e,
            g_g: self.g_g,
            omega: self.omega2,
        }
    }
}

/// A single absorption line for an Einstein-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Spontaneous rate of the line (s⁻¹).
    pub a_eg: f64,
    pub g_e: u32,
    pub g_g: u32,
    pub omega: AngularFrequency,
}

/// Branching fraction of P decays that return to S: `A_PS/(A_PS + A_PD)`.
pub fn branching_fraction(ion: &IonSpec) -> f64 {
    ion.a_ps / (ion.a_ps + ion.a_pd)
}

/// Excitation rate `Γ = B ρ = (π²c³/ħω³)(g_e/g_g) A ρ(ω)` for spectral energy
/// density `rho` in J m⁻³ (rad/s)⁻¹.
pub fn excitation_rate(transition: &Transition, rho: f64) -> Result<f64> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(domain(format!(
            "spectral energy density must be >= 0, got {rho}"
        )));
    }
    let w = transition.omega.rad_per_s();
    let einstein_b = PI * PI * SPEED_OF_LIGHT.powi(3) / (HBAR * w * w * w)
        * (f64::from(transition.g_e) / f64::from(transition.g_g))
        * transition.a_eg;
    Ok(einstein_b * rho)
}

fn check_probability(label: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("{label} must lie in [0, 1], got {p}")))
    }
}

/// Net phonon rate `ṅ = −Γ p_D η_SP` (negative means cooling).
pub fn phonon_cooling_rate(gamma: f64, p_d: f64, eta_sp: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(domain(format!("excitation rate must be >= 0, got {gamma}")));
    }
    check_probability("p_D", p_d)?;
    check_probability("η_SP", eta_sp)?;
    let magnitude = gamma * p_d * eta_sp;
    Ok(if magnitude == 0.0 { 0.0 } else { -magnitude })
}

/// Temperatures of the three fields that touch the ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSet {
    /// Effective temperature of the S↔D laser (normally infinite).
    pub laser: Temperature,
    /// Temperature of the light on D↔P (the sun).
    pub sun: Temperature,
    /// Temperature of the light on S↔P (room-temperature vacuum).
    pub room: Temperature,
}

impl BathSet {
    pub fn new(laser: Temperature, sun: Temperature, room: Temperature) -> Result<Self> {
        for (label, t) in [("sun", sun), ("room", room)] {
            if t.is_infinite() || t.kelvin() <= 0.0 {
                return Err(domain(format!(
                    "{label} temperature must be finite and > 0"
                )));
            }
        }
        if laser.kelvin() <= 0.0 {
            return Err(domain("laser temperature must be > 0 (or infinite)"));
        }
        Ok(Self { laser, sun, room })
    }
}

/// Virtual-qubit temperature of the motion,
///
/// `T_V = ω_motion / (ω₃/T₃ − ω₂/T₂ − ω_ℓ/T_ℓ)`, with ω_ℓ = ω₁ − ω_motion.
///
/// ω₃ enters as ω₁ + ω₂ so that the virtual splitting is exactly ω_motion;
/// the denominator is then evaluated as
/// `ω₁(1/T₃ − 1/T_ℓ) + ω₂(1/T₃ − 1/T₂) + ω_motion/T_ℓ`, which avoids
/// cancelling optical-scale terms.
pub fn virtual_temperature(
    ion: &IonSpec,
    baths: &BathSet,
    omega_motion: AngularFrequency,
) -> Result<Temperature> {
    let w1 = ion.omega1.rad_per_s();
    let w2 = ion.omega2.rad_per_s();
    let wm = omega_motion.rad_per_s();
    if wm >= w1 {
        return Err(domain("motional frequency must be below the S↔D frequency"));
    }
    let inv3 = baths.room.inverse_kelvin();
    let inv2 = baths.sun.inverse_kelvin();
    let inv_l = baths.laser.inverse_kelvin();
    let denominator = w1 * (inv3 - inv_l) + w2 * (inv3 - inv2) + wm * inv_l;
    if !(denominator > 0.0) {
        return Err(Error::InvertedVirtualQubit { denominator });
    }
    Temperature::new(wm / denominator)
}

/// Limit `T_V ≈ (ω_motion/ω₃)·T_room`, valid when ω₃/T_room ≫ ω₂/T_sun and the
/// laser is effectively infinitely hot.
pub fn scaled_room_temperature(
    ion: &IonSpec,
    room: Temperature,
    omega_motion: AngularFrequency,
) -> Result<Temperature> {
    if room.is_infinite() || room.kelvin() <= 0.0 {
        return Err(domain("room temperature must be finite and > 0"));
    }
    Temperature::new(omega_motion.rad_per_s() / ion.omega3.rad_per_s() * room.kelvin())
}

/// Thermal motional occupation at the virtual temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotionalOccupation {
    /// `1/(exp(βħω) − 1)`.
    pub exact: f64,
    /// `exp(−βħω)`.
    pub wien: f64,
    /// `exact − wien`.
    pub difference: f64,
    /// βħω.
    pub reduced_energy: f64,
}

pub fn ground_state_occupation(
    t_v: Temperature,
    omega_motion: AngularFrequency,
) -> Result<MotionalOccupation> {
    if t_v.kelvin() <= 0.0 {
        return Err(domain("virtual temperature must be > 0"));
    }
    let exact = mean_occupation(omega_motion, t_v)?;
    let x = HBAR * omega_motion.rad_per_s() / (BOLTZMANN * t_v.kelvin());
    let wien = (-x).exp();
    Ok(MotionalOccupation {
        exact,
        wien,
        difference: exact - wien,
        reduced_energy: x,
    })
}

/// Light delivery and state preparation for a cooling-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingDrive {
    /// Measured delivery efficiency relative to an ideal single mode.
    pub eta_delivery: f64,
    /// Geometric grayness of the focus.
    pub grayness: f64,
    /// Probability that the ion sits in D when the sunlight acts.
    pub p_d: f64,
}

impl CoolingDrive {
    pub fn new(eta_delivery: f64, grayness: f64, p_d: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta_delivery) {
            return Err(domain(format!(
                "delivery efficiency must lie in [0, 1], got {eta_delivery}"
            )));
        }
        if !(grayness > 0.0 && grayness <= 1.0) {
            return Err(domain(format!(
                "grayness must lie in (0, 1], got {grayness}"
            )));
        }
        check_probability("p_D", p_d)?;
        Ok(Self {
            eta_delivery,
            grayness,
            p_d,
        })
    }
}

/// Intermediate and final values of a sunlight cooling-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingRateEstimate {
    /// Mean photon number of the sun at ω₂.
    pub occupation: f64,
    /// Spectral energy density delivered at ω₂, J m⁻³ (rad/s)⁻¹.
    pub energy_density: f64,
    /// D → P excitation rate Γ, s⁻¹.
    pub excitation_rate: f64,
    pub branching_fraction: f64,
    /// Phonons per second (negative is cooling).
    pub phonon_rate: f64,
}

/// Cooling rate when the D↔P line is driven by fiber-delivered thermal light
/// with energy density `η G ρ_P(ω₂)`.
pub fn sunlight_cooling_rate(
    ion: &IonSpec,
    drive: &CoolingDrive,
    sun: Temperature,
) -> Result<CoolingRateEstimate> {
    let line = ion.driven_transition();
    let rho = drive.eta_delivery * drive.grayness * planck_energy_density(line.omega, sun)?;
    let gamma = excitation_rate(&line, rho)?;
    let eta_sp = branching_fraction(ion);
    Ok(CoolingRateEstimate {
        occupation: mean_occupation(line.omega, sun)?,
        energy_density: rho,
        excitation_rate: gamma,
        branching_fraction: eta_sp,
        phonon_rate: phonon_cooling_rate(gamma, drive.p_d, eta_sp)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kelvin(k: f64) -> Temperature {
        Temperature::new(k).unwrap()
    }

    fn mhz(f: f64) -> AngularFrequency {
        AngularFrequency::new(2.0 * PI * f * 1e6).unwrap()
    }

    fn toy_ion(a_ps: f64, a_pd: f64) -> IonSpec {
        IonSpec {
            a_ps,
            a_pd,
            a_drive: a_pd.max(1.0),
            ..IonSpec::barium_138()
        }
    }

    #[test]
    fn bundled_barium_data() {
        let ba = IonSpec::barium_138();
        assert!((ba.omega2.wavelength_nm() - 614.34).abs() < 0.01);
        assert!((ba.omega3.wavelength_nm() - 455.53).abs() < 0.01);
        assert!((ba.omega1.wavelength_nm() - 1762.17).abs() < 0.01);
        let eta = branching_fraction(&ba);
        assert!((eta - 0.74).abs() < 0.005, "{eta}");
        assert!(!ba.references.is_empty());
    }

    #[test]
    fn branching_limits() {
        assert_eq!(branching_fraction(&toy_ion(5e7, 5e7)), 0.5);
        let no_d = IonSpec {
            a_pd: 0.0,
            ..IonSpec::barium_138()
        };
        assert_eq!(branching_fraction(&no_d), 1.0);
    }

    #[test]
    fn atomic_data_validation() {
        let mut d: AtomicData = serde_json::from_str(BARIUM_138_JSON).unwrap();
        d.omega3_rad_s *= 1.0 + 1e-5;
        assert!(IonSpec::try_from(d.clone()).is_err());
        d.omega3_rad_s = d.omega1_rad_s + d.omega2_rad_s;
        d.g_g = 0;
        assert!(IonSpec::try_from(d.clone()).is_err());
        d.g_g = 6;
        d.a_ps_s = -1.0;
        assert!(IonSpec::try_from(d.clone()).is_err());
        d.a_ps_s = 1e8;
        d.a_drive_s = None;
        let ion = IonSpec::try_from(d).unwrap();
        assert_eq!(ion.a_drive, ion.a_pd);
        assert!(IonSpec::from_json(r#"{"name":"x"}"#).is_err());
    }

    #[test]
    fn excitation_rate_identity() {
        let ba = IonSpec::barium_138();
        let line = ba.driven_transition();
        let sun = kelvin(5800.0);
        let (eta, g) = (0.5, 5e-5);
        let rho = eta * g * planck_energy_density(line.omega, sun).unwrap();
        let gamma = excitation_rate(&line, rho).unwrap();
        let closed = 4.0 / 6.0 * line.a_eg * eta * g * mean_occupation(line.omega, sun).unwrap();
        assert!((gamma / closed - 1.0).abs() < 1e-12);
        assert!((gamma - 11.0).abs() < 0.5, "Γ = {gamma}");
        assert_eq!(excitation_rate(&line, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cooling_rate_arithmetic() {
        assert_eq!(phonon_cooling_rate(10.0, 0.5, 1.0).unwrap(), -5.0);
        assert_eq!(phonon_cooling_rate(10.0, 0.0, 0.7).unwrap(), 0.0);
        assert!(phonon_cooling_rate(10.0, 1.5, 0.7).is_err());
        assert!(phonon_cooling_rate(-1.0, 0.5, 0.7).is_err());
    }

    #[test]
    fn sunlight_rate_for_barium() {
        let ba = IonSpec::barium_138();
        let drive = CoolingDrive::new(0.5, 5e-5, 1.0).unwrap();
        let est = sunlight_cooling_rate(&ba, &drive, kelvin(5800.0)).unwrap();
        assert!((est.phonon_rate + 8.2).abs() < 0.82, "{est:?}");
        let dark = CoolingDrive::new(0.0, 5e-5, 1.0).unwrap();
        let est = sunlight_cooling_rate(&ba, &dark, kelvin(5800.0)).unwrap();
        assert_eq!(est.phonon_rate, 0.0);
        assert!(CoolingDrive::new(1.2, 5e-5, 1.0).is_err());
        assert!(CoolingDrive::new(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn virtual_temperature_room_limit() {
        let ba = IonSpec::barium_138();
        let baths = BathSet::new(Temperature::infinite(), kelvin(5800.0), kelvin(300.0)).unwrap();
        let tv = virtual_temperature(&ba, &baths, mhz(1.0)).unwrap();
        let approx = scaled_room_temperature(&ba, kelvin(300.0), mhz(1.0)).unwrap();
        assert!(
            (approx.kelvin() - 0.456e-6).abs() < 0.01e-6,
            "{}",
            approx.kelvin()
        );
        // the sun term raises T_V by a few percent over the room-only limit
        assert!(tv.kelvin() > approx.kelvin() && tv.kelvin() < 1.1 * approx.kelvin());
    }

    #[test]
    fn all_thermal_limit() {
        let ba = IonSpec::barium_138();
        let sun = kelvin(5800.0);
        let baths = BathSet::new(Temperature::infinite(), sun, sun).unwrap();
        let tv = virtual_temperature(&ba, &baths, mhz(1.0)).unwrap();
        let expected = mhz(1.0).rad_per_s() / ba.omega1.rad_per_s() * 5800.0;
        assert!((tv.kelvin() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_baths_fixed_point() {
        let ba = IonSpec::barium_138();
        for t in [0.01, 4.0, 300.0, 5800.0, 1e6] {
            let t = kelvin(t);
            let tv = virtual_temperature(&ba, &BathSet::new(t, t, t).unwrap(), mhz(1.0)).unwrap();
            assert!((tv.kelvin() / t.kelvin() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inverted_virtual_qubit() {
        let ba = IonSpec::barium_138();
        // hot room, cold sun: ω₃/T₃ < ω₂/T₂
        let baths = BathSet::new(Temperature::infinite(), kelvin(300.0), kelvin(5800.0)).unwrap();
        assert!(matches!(
            virtual_temperature(&ba, &baths, mhz(1.0)),
            Err(Error::InvertedVirtualQubit { .. })
        ));
    }

    #[test]
    fn occupation_report() {
        let x_ln2 = kelvin(HBAR * mhz(1.0).rad_per_s() / (BOLTZMANN * std::f64::consts::LN_2));
        let occ = ground_state_occupation(x_ln2, mhz(1.0)).unwrap();
        assert!((occ.exact - 1.0).abs() < 1e-12);
        assert!((occ.wien - 0.5).abs() < 1e-12);
        let hot = kelvin(1.0);
        let occ = ground_state_occupation(hot, mhz(1.0)).unwrap();
        let x = occ.reduced_energy;
        assert!((occ.exact - (1.0 / x - 0.5)).abs() < 1e-3);
    }
}
