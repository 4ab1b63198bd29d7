use proptest::prelude::*;
use sunlight_cooling::checks::{realistic_efficiency, synthetic_round_trip};
use sunlight_cooling::data_pipeline::*;
use sunlight_cooling::radiometry::{
    q1d_band_power, q1d_psd_per_wavelength, AngularFrequency, Temperature,
};
use sunlight_cooling::spectrum::{linear_grid, SampledSpectrum, SpectrumKind};

fn sun() -> Temperature {
    Temperature::new(5800.0).unwrap()
}

fn ideal(n: usize) -> SampledSpectrum {
    SampledSpectrum::from_fn(
        linear_grid(400.0, 900.0, n),
        SpectrumKind::PsdPerWavelength,
        |l| q1d_psd_per_wavelength(l, sun()),
    )
    .unwrap()
}

fn response() -> InstrumentResponse {
    InstrumentResponse::new(
        SampledSpectrum::from_fn(linear_grid(400.0, 900.0, 501), SpectrumKind::Ratio, |l| {
            Ok(0.3 + 0.7 * (-((l - 550.0) / 200.0).powi(2)).exp())
        })
        .unwrap(),
    )
    .unwrap()
}

#[test]
fn response_round_trip() {
    let truth = ideal(501);
    let r = response();
    let raw = truth
        .with_values(
            truth
                .iter()
                .map(|(l, v)| v * r.curve().value_at(l).unwrap())
                .collect(),
        )
        .unwrap()
        .with_kind(SpectrumKind::Counts);
    let back = apply_response(&raw, &r).unwrap();
    for ((_, a), (_, b)) in back.iter().zip(truth.iter()) {
        assert!((a / b - 1.0).abs() < 1e-9);
    }
}

#[test]
fn calibration_closes_with_band_power() {
    let truth = ideal(20_001);
    let power = q1d_band_power(
        sun(),
        AngularFrequency::from_wavelength_nm(900.0).unwrap(),
        AngularFrequency::from_wavelength_nm(400.0).unwrap(),
    )
    .unwrap();
    let shape = truth.scaled(123.0).unwrap().with_kind(SpectrumKind::Counts);
    let calibrated = calibrate_power(&shape, power, (400.0, 900.0)).unwrap();
    for ((_, a), (_, b)) in calibrated.iter().zip(truth.iter()) {
        assert!((a / b - 1.0).abs() < 1e-6);
    }
}

#[test]
fn synthetic_round_trips() {
    let r = synthetic_round_trip(|_| 0.7, 11).unwrap();
    assert!((r.eta_band_average / 0.7 - 1.0).abs() < 0.02, "{r:?}");
    assert!(
        (r.fitted_temperature_k / 5800.0 - 1.0).abs() < 0.01,
        "{r:?}"
    );
    let realistic = synthetic_round_trip(realistic_efficiency, 12).unwrap();
    assert!(
        (0.6..=0.9).contains(&realistic.eta_band_average),
        "{realistic:?}"
    );
}

#[test]
fn efficiency_stays_in_unit_interval_for_lossy_links() {
    let truth = ideal(501);
    let lossy = truth.map(|l, v| v * realistic_efficiency(l)).unwrap();
    let eff = extract_efficiency(&lossy, sun(), None, (400.0, 900.0)).unwrap();
    assert!(eff.eta.values().iter().all(|&e| e > 0.0 && e <= 1.0));
    assert!(!eff.super_thermal);
}

#[test]
fn bundled_reference_csv_has_source_and_kind() {
    assert!(ASTM_G173_DIRECT_CSV
        .lines()
        .any(|l| l.starts_with('#') && l.contains("G173")));
    let r = ReferenceSolarSpectrum::astm_g173_direct();
    assert_eq!(r.spectrum().kind(), SpectrumKind::IrradiancePerWavelength);
    assert_eq!(r.spectrum().range_nm(), (300.0, 1200.0));
}

proptest! {
    #[test]
    fn response_and_slit_commute(s in 10e-6f64..200e-6, d in 1e-4f64..5e-3, wf in 1e-6f64..5e-6) {
        let slit = SlitGeometry::new(s, d, wf).unwrap();
        let raw = ideal(251).with_kind(SpectrumKind::Counts);
        let r = response();
        let a = apply_slit_correction(&apply_response(&raw, &r).unwrap(), &slit).unwrap();
        let b = apply_response(&apply_slit_correction(&raw, &slit).unwrap(), &r).unwrap();
        for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
            prop_assert!((x / y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn slit_transmission_falls_with_wavelength(s in 10e-6f64..200e-6, d in 1e-4f64..5e-3, wf in 1e-6f64..5e-6, l in 300.0f64..1000.0) {
        let g = SlitGeometry::new(s, d, wf).unwrap();
        let t1 = slit_transmission(&g, l);
        let t2 = slit_transmission(&g, l * 1.1);
        prop_assert!(t1 > 0.0 && t1 <= 1.0);
        prop_assert!(t2 <= t1);
    }

    #[test]
    fn efficiency_is_linear(scale in 0.05f64..1.0) {
        let eff = extract_efficiency(&ideal(201).scaled(scale).unwrap(), sun(), None, (450.0, 850.0)).unwrap();
        prop_assert!((eff.band_average / scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_fit_recovers(k in 3000.0f64..9000.0, a in 0.1f64..10.0) {
        let t = Temperature::new(k).unwrap();
        let s = SampledSpectrum::from_fn(linear_grid(400.0, 900.0, 101), SpectrumKind::PsdPerWavelength, |l| {
            Ok(a * q1d_psd_per_wavelength(l, t)?)
        }).unwrap();
        let fit = fit_temperature(&s, ShapeModel::Q1d).unwrap();
        prop_assert!((fit.temperature_k / k - 1.0).abs() < 1e-4);
    }
}
