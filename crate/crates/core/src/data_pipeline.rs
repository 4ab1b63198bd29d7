//! Reduction of spectrometer readings of fiber-coupled sunlight.
//!
//! The chain is: divide out the instrument response, divide out the
//! wavelength-dependent slit clipping, scale to a power-meter reading over a
//! band, then compare with the ideal single-mode spectrum (optionally with an
//! atmospheric correction taken from a reference solar spectrum) to get the
//! delivery efficiency η(λ). A temperature fit checks the spectral shape.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::radiometry::{planck_radiance_per_wavelength, q1d_psd_per_wavelength, Temperature};
use crate::spectrum::{SampledSpectrum, SpectrumKind};

/// Bundled ASTM G173-03 direct + circumsolar spectrum, 300–1200 nm.
pub const ASTM_G173_DIRECT_CSV: &str = include_str!("../data/astm_g173_direct.csv");

/// Band used to fit the Planck amplitude to the reference spectrum (nm).
pub const ATMOSPHERE_FIT_BAND_NM: (f64, f64) = (400.0, 900.0);
/// Ceiling on the atmospheric correction curve.
pub const ATMOSPHERE_CLIP_MAX: f64 = 1.2;
/// Points whose atmospheric correction is below this are excluded from η.
pub const MIN_ATMOSPHERIC_TRANSMISSION: f64 = 0.05;
/// Normalized RMS residual above which a temperature fit is flagged.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.02;

/// Relative spectral response of the spectrometer.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentResponse(SampledSpectrum);

impl InstrumentResponse {
    pub fn new(curve: SampledSpectrum) -> Result<Self> {
        if let Some((l, v)) = curve.iter().find(|(_, v)| *v <= 0.0) {
            return Err(invalid(format!(
                "instrument response must be positive, got {v} at {l} nm"
            )));
        }
        Ok(Self(curve.with_kind(SpectrumKind::Ratio)))
    }

    pub fn curve(&self) -> &SampledSpectrum {
        &self.0
    }
}

/// Divides a raw spectrum by the instrument response on the overlap of the
/// two grids, sampled on whichever grid is coarser there.
pub fn apply_response(
    raw: &SampledSpectrum,
    response: &InstrumentResponse,
) -> Result<SampledSpectrum> {
    let (grid, a, b) = overlap_grid(raw, response.curve())?;
    let r = response.curve();
    let values = grid
        .iter()
        .map(|&l| {
            let rv = r.value_at(l).expect("on overlap");
            if rv <= 0.0 {
                return Err(invalid(format!("instrument response is {rv} at {l} nm")));
            }
            Ok(a.value_at(l).expect("on overlap") / rv)
        })
        .collect::<Result<Vec<_>>>()?;
    let _ = b;
    SampledSpectrum::new(grid, values, raw.kind())
}

/// Grid points of the coarser spectrum that lie in the overlap of both.
/// Returns the grid together with (`first`, `second`) unchanged.
fn overlap_grid<'a>(
    first: &'a SampledSpectrum,
    second: &'a SampledSpectrum,
) -> Result<(Vec<f64>, &'a SampledSpectrum, &'a SampledSpectrum)> {
    let (a0, a1) = first.range_nm();
    let (b0, b1) = second.range_nm();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if lo >= hi {
        return Err(Error::Mismatch(format!(
            "wavelength grids [{a0}, {a1}] and [{b0}, {b1}] nm do not overlap"
        )));
    }
    let inside = |s: &SampledSpectrum| -> Vec<f64> {
        s.wavelengths_nm()
            .iter()
            .copied()
            .filter(|l| (lo..=hi).contains(l))
            .collect()
    };
    let (coarse, fine) = if first.mean_spacing_nm() >= second.mean_spacing_nm() {
        (first, second)
    } else {
        (second, first)
    };
    // a coarse curve may have no samples inside the overlap at all
    let mut grid = inside(coarse);
    if grid.len() < 2 {
        grid = inside(fine);
    }
    if grid.len() < 2 {
        return Err(Error::Mismatch(
            "overlap contains fewer than two samples".into(),
        ));
    }
    Ok((grid, first, second))
}

/// Fiber tip imaged onto (or butted against) the spectrometer entrance slit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlitGeometry {
    pub slit_width_m: f64,
    pub distance_m: f64,
    /// 1/e² intensity (1/e field) radius of the fiber mode at the tip.
    pub mode_field_radius_m: f64,
}

impl SlitGeometry {
    pub fn new(slit_width_m: f64, distance_m: f64, mode_field_radius_m: f64) -> Result<Self> {
        for (label, v) in [
            ("slit width", slit_width_m),
            ("fiber-to-slit distance", distance_m),
            ("mode-field radius", mode_field_radius_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{label} must be positive, got {v}")));
            }
        }
        if distance_m < 10.0 * mode_field_radius_m {
            log::warn!("fiber-to-slit distance is not large compared with the mode radius");
        }
        Ok(Self {
            slit_width_m,
            distance_m,
            mode_field_radius_m,
        })
    }

    /// Gaussian beam radius at the slit, `w_f·√(1 + (λd/πw_f²)²)`.
    pub fn beam_radius_m(&self, lambda_nm: f64) -> f64 {
        let lambda = lambda_nm * 1e-9;
        let w = self.mode_field_radius_m;
        let z_ratio = lambda * self.distance_m / (PI * w * w);
        w * (1.0 + z_ratio * z_ratio).sqrt()
    }
}

/// Fraction of the gaussian beam passed by the slit (clipping along one axis):
/// `erf(√2·(s/2)/w)`.
pub fn slit_transmission(geometry: &SlitGeometry, lambda_nm: f64) -> f64 {
    let w = geometry.beam_radius_m(lambda_nm);
    libm::erf(SQRT_2 * 0.5 * geometry.slit_width_m / w)
}

/// Divides out the slit transmission at every sample.
pub fn apply_slit_correction(
    s: &SampledSpectrum,
    geometry: &SlitGeometry,
) -> Result<SampledSpectrum> {
    s.map(|l, v| v / slit_transmission(geometry, l))
}

/// Measured solar spectrum at ground level (direct normal irradiance).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolarSpectrum(SampledSpectrum);

impl ReferenceSolarSpectrum {
    pub fn new(s: SampledSpectrum) -> Result<Self> {
        let (lo, hi) = s.range_nm();
        if lo > 350.0 || hi < 1100.0 {
            return Err(invalid(format!(
                "reference spectrum must cover 350–1100 nm, covers [{lo}, {hi}]"
            )));
        }
        Ok(Self(s.with_kind(SpectrumKind::IrradiancePerWavelength)))
    }

    /// ASTM G173-03 direct + circumsolar.
    pub fn astm_g173_direct() -> Self {
        let s = SampledSpectrum::read_csv(ASTM_G173_DIRECT_CSV.as_bytes(), None)
            .expect("bundled reference parses");
        Self::new(s).expect("bundled reference covers the band")
    }

    pub fn spectrum(&self) -> &SampledSpectrum {
        &self.0
    }
}

/// Ratio of a reference solar spectrum to a fitted 3D Planck curve.
#[derive(Debug, Clone, PartialEq)]
pub struct AtmosphericCorrection {
    /// Least-squares amplitude of the Planck curve.
    pub amplitude: f64,
    pub temperature: Temperature,
    /// c(λ), clipped to [0, 1.2].
    pub curve: SampledSpectrum,
}

impl AtmosphericCorrection {
    /// `c(λ)·S_λ(λ, T)`: the single-mode spectrum expected at ground level.
    pub fn expected_q1d(&self) -> Result<SampledSpectrum> {
        self.curve
            .map(|l, c| c * q1d_psd_per_wavelength(l, self.temperature).unwrap_or(0.0))
            .map(|s| s.with_kind(SpectrumKind::PsdPerWavelength))
    }

    pub fn value_at(&self, lambda_nm: f64) -> Option<f64> {
        self.curve.value_at(lambda_nm)
    }
}

/// Fits `a·B_λ(λ, T)` to the reference over 400–900 nm and returns
/// `c(λ) = ref(λ)/(a·B_λ(λ, T))` clipped to [0, 1.2].
pub fn atmospheric_correction(
    reference: &ReferenceSolarSpectrum,
    t: Temperature,
) -> Result<AtmosphericCorrection> {
    let r = reference.spectrum();
    let (lo, hi) = ATMOSPHERE_FIT_BAND_NM;
    let planck = |l: f64| planck_radiance_per_wavelength(l, t);
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, v) in r.iter().filter(|(l, _)| (lo..=hi).contains(l)) {
        let p = planck(l)?;
        num += p * v;
        den += p * p;
    }
    let amplitude = num / den;
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::NoConvergence(format!(
            "degenerate Planck amplitude {amplitude}"
        )));
    }
    let curve = r
        .iter()
        .map(|(l, v)| Ok((v / (amplitude * planck(l)?)).clamp(0.0, ATMOSPHERE_CLIP_MAX)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AtmosphericCorrection {
        amplitude,
        temperature: t,
        curve: SampledSpectrum::new(r.wavelengths_nm().to_vec(), curve, SpectrumKind::Ratio)?,
    })
}

/// Divides a spectrum by c(λ), dropping samples where the atmosphere passes
/// less than 5% or the correction curve does not reach.
pub fn remove_atmosphere(
    s: &SampledSpectrum,
    atmosphere: &AtmosphericCorrection,
) -> Result<SampledSpectrum> {
    let (grid, values): (Vec<f64>, Vec<f64>) = s
        .iter()
        .filter_map(|(l, v)| match atmosphere.value_at(l) {
            Some(c) if c >= MIN_ATMOSPHERIC_TRANSMISSION => Some((l, v / c)),
            _ => None,
        })
        .unzip();
    SampledSpectrum::new(grid, values, s.kind())
}

/// Scales a spectrum so that its trapezoid integral over `band_nm` equals the
/// power-meter reading. The result is a power spectral density.
pub fn calibrate_power(
    s: &SampledSpectrum,
    measured_power_w: f64,
    band_nm: (f64, f64),
) -> Result<SampledSpectrum> {
    if !(measured_power_w.is_finite() && measured_power_w > 0.0) {
        return Err(invalid(format!(
            "measured power must be positive, got {measured_power_w}"
        )));
    }
    let integral = s.integrate_band(band_nm.0, band_nm.1)?;
    if !(integral > 0.0) {
        return Err(invalid(format!(
            "spectrum integrates to {integral} over [{}, {}] nm; cannot calibrate",
            band_nm.0, band_nm.1
        )));
    }
    let kind = if s.kind() == SpectrumKind::PsdPerAngularFrequency {
        SpectrumKind::PsdPerAngularFrequency
    } else {
        SpectrumKind::PsdPerWavelength
    };
    Ok(s.scaled(measured_power_w / integral)?.with_kind(kind))
}

/// Delivery efficiency curve and its band average.
#[derive(Debug, Clone)]
pub struct EfficiencyCurve {
    pub eta: SampledSpectrum,
    pub band_nm: (f64, f64),
    pub band_average: f64,
    /// True if η exceeds 1 anywhere in the band.
    pub super_thermal: bool,
}

/// η(λ) = measured PSD / expected PSD, where the expectation is the ideal
/// single-mode spectrum at `t`, times the atmospheric correction if given.
/// Samples where the atmosphere transmits less than 5% are dropped.
pub fn extract_efficiency(
    calibrated: &SampledSpectrum,
    t: Temperature,
    atmosphere: Option<&AtmosphericCorrection>,
    band_nm: (f64, f64),
) -> Result<EfficiencyCurve> {
    if !calibrated.kind().is_power_density() {
        return Err(invalid(format!(
            "efficiency needs a calibrated PSD, got {}",
            calibrated.kind()
        )));
    }
    let per_lambda = calibrated.convert(SpectrumKind::PsdPerWavelength)?;
    let mut grid = Vec::new();
    let mut eta = Vec::new();
    for (l, v) in per_lambda.iter() {
        let c = match atmosphere {
            Some(a) => match a.value_at(l) {
                Some(c) => c,
                None => continue,
            },
            None => 1.0,
        };
        if c < MIN_ATMOSPHERIC_TRANSMISSION {
            continue;
        }
        grid.push(l);
        eta.push(v / (c * q1d_psd_per_wavelength(l, t)?));
    }
    let eta = SampledSpectrum::new(grid, eta, SpectrumKind::Ratio)?;
    let (lo, hi) = eta.range_nm();
    let band = (band_nm.0.max(lo), band_nm.1.min(hi));
    let band_average = eta.integrate_band(band.0, band.1)? / (band.1 - band.0);
    let super_thermal = eta
        .iter()
        .any(|(l, v)| (band.0..=band.1).contains(&l) && v > 1.0);
    if super_thermal {
        log::warn!("delivery efficiency exceeds 1 within the band: check the power calibration");
    }
    Ok(EfficiencyCurve {
        eta,
        band_nm: band,
        band_average,
        super_thermal,
    })
}

/// Spectral shape used by [`fit_temperature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeModel {
    /// Single-mode PSD per unit wavelength.
    Q1d,
    /// Planck radiance per unit wavelength.
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemperatureFit {
    pub temperature_k: f64,
    pub amplitude: f64,
    /// RMS residual divided by RMS data.
    pub residual: f64,
    pub iterations: usize,
    /// Residual exceeds [`FIT_RESIDUAL_LIMIT`].
    pub flagged: bool,
}

const FIT_T_MIN: f64 = 500.0;
const FIT_T_MAX: f64 = 50_000.0;
const FIT_MAX_ITER: usize = 200;

/// Least-squares fit of temperature and amplitude. Golden-section search on
/// ln T over 500–50 000 K; the amplitude is solved linearly at each T.
pub fn fit_temperature(s: &SampledSpectrum, model: ShapeModel) -> Result<TemperatureFit> {
    let data = match s.kind() {
        SpectrumKind::PsdPerAngularFrequency => s.convert(SpectrumKind::PsdPerWavelength)?,
        _ => s.clone(),
    };
    if data.len() < 20 {
        return Err(invalid(format!(
            "temperature fit needs >= 20 samples, got {}",
            data.len()
        )));
    }
    let (lo, hi) = data.range_nm();
    if hi / lo < 1.5 {
        return Err(invalid(format!(
            "temperature fit needs a wavelength span of 1.5x, got {:.3}",
            hi / lo
        )));
    }
    let sum_y2: f64 = data.values().iter().map(|y| y * y).sum();
    if sum_y2 == 0.0 {
        return Err(invalid("cannot fit a temperature to an all-zero spectrum"));
    }
    let shape = |l: f64, t: Temperature| match model {
        ShapeModel::Q1d => q1d_psd_per_wavelength(l, t),
        ShapeModel::ThreeD => planck_radiance_per_wavelength(l, t),
    };
    // returns (sse, amplitude)
    let evaluate = |ln_t: f64| -> Result<(f64, f64)> {
        let t = Temperature::new(ln_t.exp())?;
        let mut syf = 0.0;
        let mut sff = 0.0;
        for (l, y) in data.iter() {
            let f = shape(l, t)?;
            syf += y * f;
            sff += f * f;
        }
        if sff == 0.0 {
            return Ok((sum_y2, 0.0));
        }
        Ok(((sum_y2 - syf * syf / sff).max(0.0), syf / sff))
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (FIT_T_MIN.ln(), FIT_T_MAX.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = evaluate(c)?.0;
    let mut fd = evaluate(d)?.0;
    let mut iterations = 0;
    while (b - a) > 1e-10 {
        iterations += 1;
        if iterations > FIT_MAX_ITER {
            return Err(Error::NoConvergence(format!(
                "temperature fit did not converge in {FIT_MAX_ITER} iterations"
            )));
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = evaluate(c)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = evaluate(d)?.0;
        }
    }
    let ln_t = 0.5 * (a + b);
    let edge = 1e-6;
    if ln_t - FIT_T_MIN.ln() < edge || FIT_T_MAX.ln() - ln_t < edge {
        return Err(Error::NoConvergence(format!(
            "best temperature {:.0} K lies on the search boundary; the spectrum has no thermal shape",
            ln_t.exp()
        )));
    }
    let (sse, amplitude) = evaluate(ln_t)?;
    let residual = (sse / sum_y2).sqrt();
    Ok(TemperatureFit {
        temperature_k: ln_t.exp(),
        amplitude,
        residual,
        iterations,
        flagged: residual > FIT_RESIDUAL_LIMIT,
    })
}
