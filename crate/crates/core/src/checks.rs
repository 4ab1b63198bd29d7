//! Self-test suite: each check recomputes a reference number from scratch and
//! compares it with the library at a fixed tolerance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::cooling_sim::{ensemble_stats, run_ensemble, CycleConfig, TransferProbability};
use crate::data_pipeline::{
    apply_response, apply_slit_correction, atmospheric_correction, calibrate_power,
    extract_efficiency, fit_temperature, remove_atmosphere, slit_transmission, InstrumentResponse,
    ReferenceSolarSpectrum, ShapeModel, SlitGeometry,
};
use crate::error::Result;
use crate::ion_thermo::{
    ground_state_occupation, scaled_room_temperature, sunlight_cooling_rate, virtual_temperature,
    BathSet, CoolingDrive, IonSpec,
};
use crate::mode_optics::{
    gaussian_angular_radiance, grayness, mode_radiance, top_hat_area, FiberModeModel,
};
use crate::oracle::{markov_steady_state, renewal_slope, scan_peak_nm, total_power_simpson};
use crate::radiometry::{
    planck_radiance, q1d_psd, q1d_psd_per_wavelength, q1d_total_power, q1d_total_power_quadrature,
    wien_peak, AngularFrequency, SpectralFamily, Temperature,
};
use crate::spectrum::{linear_grid, SampledSpectrum, SpectrumKind};

/// Seed used by the stochastic checks unless overridden.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn from_result(id: u8, name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self {
                id,
                name,
                passed,
                detail,
            },
            Err(e) => Self {
                id,
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }

    /// One-line summary, e.g. `[PASS] 3 total power closure: ...`.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {} {}: {}", self.id, self.name, self.detail)
    }
}

pub const CHECK_NAMES: [&str; 9] = [
    "sunlight cooling rate",
    "focus grayness",
    "total power closure",
    "virtual temperature",
    "gaussian on-axis radiance",
    "mode radiance closure",
    "spectral peaks",
    "simulator vs oracles",
    "pipeline round trip",
];

/// Runs every check with the default seed.
pub fn run_all() -> Vec<CheckOutcome> {
    run_all_with_seed(DEFAULT_SEED)
}

pub fn run_all_with_seed(seed: u64) -> Vec<CheckOutcome> {
    (1..=9)
        .map(|id| run_check(id, seed).expect("id in range"))
        .collect()
}

/// Runs check `id` (1–9); `None` for an unknown id.
pub fn run_check(id: u8, seed: u64) -> Option<CheckOutcome> {
    let result = match id {
        1 => cooling_rate(),
        2 => focus_grayness(),
        3 => total_power_closure(),
        4 => virtual_temperature_limit(),
        5 => gaussian_on_axis(seed),
        6 => radiance_closure(),
        7 => spectral_peaks(),
        8 => simulator_agreement(seed),
        9 => pipeline_round_trip(seed),
        _ => return None,
    };
    Some(CheckOutcome::from_result(
        id,
        CHECK_NAMES[usize::from(id) - 1],
        result,
    ))
}

fn kelvin(t: f64) -> Result<Temperature> {
    Temperature::new(t)
}

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn cooling_rate() -> Result<(bool, String)> {
    let ba = IonSpec::barium_138();
    let drive = CoolingDrive::new(0.5, 5e-5, 1.0)?;
    let est = sunlight_cooling_rate(&ba, &drive, kelvin(5800.0)?)?;
    let target = -8.2;
    let err = relative(est.phonon_rate, target);
    Ok((
        err <= 0.10,
        format!(
            "Γ = {:.3} s⁻¹, η_SP = {:.4}, ṅ = {:.3} phonon/s (target {target}, off by {:.1}%, limit 10%)",
            est.excitation_rate,
            est.branching_fraction,
            est.phonon_rate,
            100.0 * err
        ),
    ))
}

fn focus_grayness() -> Result<(bool, String)> {
    let g = grayness(
        top_hat_area(20e-6)?,
        AngularFrequency::from_wavelength_nm(614.0)?,
    )?;
    let err = relative(g, 5e-5);
    Ok((
        err <= 0.05,
        format!(
            "G = {g:.4e} at 614 nm, w0 = 20 µm (off by {:.1}%, limit 5%)",
            100.0 * err
        ),
    ))
}

fn total_power_closure() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for t in [300.0, 1000.0, 5800.0] {
        let t = kelvin(t)?;
        let exact = q1d_total_power(t)?;
        worst = worst
            .max(relative(q1d_total_power_quadrature(t, 1e-10)?, exact))
            .max(relative(total_power_simpson(t, 20_000)?, exact));
    }
    let p = q1d_total_power_quadrature(kelvin(5800.0)?, 1e-10)?;
    let near = relative(p, 3.19e-5) < 0.005;
    Ok((
        worst <= 1e-6 && near,
        format!("worst relative error {worst:.2e} (limit 1e-6); P(5800 K) = {p:.4e} W"),
    ))
}

fn virtual_temperature_limit() -> Result<(bool, String)> {
    let ba = IonSpec::barium_138();
    let omega_m = AngularFrequency::new(2.0 * PI * 1e6)?;
    let t_v = scaled_room_temperature(&ba, kelvin(300.0)?, omega_m)?;
    let occ = ground_state_occupation(t_v, omega_m)?;
    let log_n = -occ.reduced_energy / std::f64::consts::LN_10;
    let micro = t_v.kelvin() * 1e6;

    let t = kelvin(417.0)?;
    let equal = virtual_temperature(&ba, &BathSet::new(t, t, t)?, omega_m)?;
    let fixed = relative(equal.kelvin(), t.kelvin());

    let passed = (0.1..=2.0).contains(&micro) && (log_n + 46.0).abs() <= 1.0 && fixed <= 1e-12;
    Ok((
        passed,
        format!("T_V = {micro:.3} µK, log10 n̄ = {log_n:.2} (target −46 ± 1); equal baths off by {fixed:.1e}"),
    ))
}

fn gaussian_on_axis(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let lambda_nm = rng.random_range(300.0..2000.0);
        let w0 = rng.random_range(2e-6..200e-6);
        let t = kelvin(rng.random_range(300.0..10_000.0))?;
        let omega = AngularFrequency::from_wavelength_nm(lambda_nm)?;
        let ratio = gaussian_angular_radiance(omega, 0.0, w0, q1d_psd(omega, t)?)?
            / planck_radiance(omega, t)?;
        worst = worst.max((ratio - 4.0).abs() / 4.0);
    }
    Ok((
        worst <= 1e-9,
        format!("max |B(θ=0)/B_P − 4|/4 = {worst:.2e} over 100 draws (limit 1e-9)"),
    ))
}

fn radiance_closure() -> Result<(bool, String)> {
    let band = (400.0, 900.0);
    let models = [
        (
            "constant divergence",
            FiberModeModel::constant_divergence(1e-3, band)?,
        ),
        ("constant area", FiberModeModel::constant_area(1e-10, band)?),
    ];
    let t = kelvin(5800.0)?;
    let mut worst: f64 = 0.0;
    for (_, model) in &models {
        for lambda in linear_grid(band.0, band.1, 51) {
            let omega = AngularFrequency::from_wavelength_nm(lambda)?;
            let b = mode_radiance(model, omega, q1d_psd(omega, t)?)?;
            worst = worst.max(relative(b, planck_radiance(omega, t)?));
        }
    }
    Ok((
        worst <= 1e-12,
        format!("max relative deviation {worst:.2e} over both regimes (limit 1e-12)"),
    ))
}

fn spectral_peaks() -> Result<(bool, String)> {
    let t = kelvin(5800.0)?;
    let q1d = wien_peak(SpectralFamily::Q1dPerLambda, t)?.unwrap_or(f64::NAN);
    let three_d = wien_peak(SpectralFamily::ThreeDPerLambda, t)?.unwrap_or(f64::NAN);
    let q1d_scan = scan_peak_nm(SpectralFamily::Q1dPerLambda, t, 300.0, 2000.0, 17_001)?;
    let three_d_scan = scan_peak_nm(SpectralFamily::ThreeDPerLambda, t, 300.0, 2000.0, 17_001)?;
    let passed = (q1d - 879.0).abs() <= 2.0
        && (three_d - 500.0).abs() <= 2.0
        && (q1d - q1d_scan).abs() < 0.05
        && (three_d - three_d_scan).abs() < 0.05;
    Ok((
        passed,
        format!(
            "single-mode peak {q1d:.2} nm (scan {q1d_scan:.2}), black-body peak {three_d:.2} nm (scan {three_d_scan:.2})"
        ),
    ))
}

/// Ensemble slope and three heated steady states against their oracles.
fn simulator_agreement(seed: u64) -> Result<(bool, String)> {
    let cooling = CycleConfig {
        gamma_s: 11.0,
        eta_sp: 0.74,
        step_i_duration_s: 1e-3,
        transfer: TransferProbability::Ideal,
        heating_rate: 0.0,
        n_initial: 20,
        t_max_s: 3.0,
        seed,
    };
    let stats = ensemble_stats(&run_ensemble(&cooling, 1000)?, 301)?;
    let target = renewal_slope(&cooling);
    let slope_sigmas = stats.initial_slope.sigmas_from(target);
    let mut passed = slope_sigmas <= 3.0;
    let mut detail = format!(
        "slope {:.3} ± {:.3} vs {target:.3} ({slope_sigmas:.1}σ)",
        stats.initial_slope.value, stats.initial_slope.std_error
    );

    for (i, (gamma, h, tau)) in [(11.0, 1.0, 1e-3), (50.0, 5.0, 5e-3), (11.0, 3.0, 0.02)]
        .into_iter()
        .enumerate()
    {
        let cfg = CycleConfig {
            gamma_s: gamma,
            heating_rate: h,
            step_i_duration_s: tau,
            n_initial: 0,
            t_max_s: 100.0,
            seed: seed.wrapping_add(1_000_000 * (i as u64 + 1)),
            ..cooling.clone()
        };
        let oracle = markov_steady_state(&cfg, 200)?.mean_n;
        let ss = ensemble_stats(&run_ensemble(&cfg, 400)?, 50)?.steady_state_n;
        let sigmas = ss.sigmas_from(oracle);
        passed &= sigmas <= 3.0;
        detail.push_str(&format!(
            "; n̄(Γ={gamma}, h={h}, τ={tau}) {:.4} ± {:.4} vs {oracle:.4} ({sigmas:.1}σ)",
            ss.value, ss.std_error
        ));
    }
    Ok((passed, detail))
}

/// Result of reducing a synthetic measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip {
    pub eta_band_average: f64,
    pub fitted_temperature_k: f64,
    pub fit_residual: f64,
}

/// Builds a raw reading from an ideal single-mode sun at 5800 K, attenuated by
/// `eta(λ)`, the bundled atmosphere, a slit and an instrument response, with
/// 0.5% multiplicative noise, then reduces it over 400–900 nm.
pub fn synthetic_round_trip(eta: impl Fn(f64) -> f64, seed: u64) -> Result<RoundTrip> {
    let sun = kelvin(5800.0)?;
    let band = (400.0, 900.0);
    let atmosphere = atmospheric_correction(&ReferenceSolarSpectrum::astm_g173_direct(), sun)?;
    let slit = SlitGeometry::new(50e-6, 0.5e-3, 2.5e-6)?;
    let response = InstrumentResponse::new(SampledSpectrum::from_fn(
        linear_grid(350.0, 1000.0, 131),
        SpectrumKind::Ratio,
        |l| Ok(0.2 + 0.8 * (-((l - 600.0) / 250.0).powi(2)).exp()),
    )?)?;

    let grid = linear_grid(band.0, band.1, 501);
    let delivered = SampledSpectrum::from_fn(grid, SpectrumKind::PsdPerWavelength, |l| {
        let c = atmosphere.value_at(l).unwrap_or(0.0);
        Ok(eta(l) * c * q1d_psd_per_wavelength(l, sun)?)
    })?;
    let power = delivered.integrate_band(band.0, band.1)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(1.0, 0.005).expect("valid normal");
    let gain = 3.0e12;
    let counts = delivered
        .iter()
        .map(|(l, v)| {
            let r = response.curve().value_at(l).unwrap_or(1.0);
            gain * v * slit_transmission(&slit, l) * r * noise.sample(&mut rng)
        })
        .collect();
    let raw = delivered
        .with_values(counts)?
        .with_kind(SpectrumKind::Counts);

    let corrected = apply_slit_correction(&apply_response(&raw, &response)?, &slit)?;
    let calibrated = calibrate_power(&corrected, power, band)?;
    let eff = extract_efficiency(&calibrated, sun, Some(&atmosphere), band)?;
    let fit = fit_temperature(
        &remove_atmosphere(&calibrated, &atmosphere)?,
        ShapeModel::Q1d,
    )?;
    Ok(RoundTrip {
        eta_band_average: eff.band_average,
        fitted_temperature_k: fit.temperature_k,
        fit_residual: fit.residual,
    })
}

/// Coupling efficiency that rolls off towards both band edges.
pub fn realistic_efficiency(lambda_nm: f64) -> f64 {
    0.82 - 0.2 * ((lambda_nm - 620.0) / 280.0).powi(2) + 0.02 * (lambda_nm / 37.0).sin()
}

fn pipeline_round_trip(seed: u64) -> Result<(bool, String)> {
    let eta0 = 0.7;
    let flat = synthetic_round_trip(|_| eta0, seed)?;
    let eta_err = relative(flat.eta_band_average, eta0);
    let t_err = relative(flat.fitted_temperature_k, 5800.0);
    let realistic = synthetic_round_trip(realistic_efficiency, seed.wrapping_add(1))?;
    let in_range = (0.6..=0.9).contains(&realistic.eta_band_average);
    Ok((
        eta_err <= 0.02 && t_err <= 0.01 && in_range,
        format!(
            "η = {:.4} (true {eta0}, off {:.2}%), T = {:.1} K (off {:.2}%); realistic band average η = {:.3}",
            flat.eta_band_average,
            100.0 * eta_err,
            flat.fitted_temperature_k,
            100.0 * t_err,
            realistic.eta_band_average
        ),
    ))
}
