use proptest::prelude::*;
use sunlight_cooling::spectrum::{linear_grid, SampledSpectrum, SpectrumKind};
use sunlight_cooling::Error;

#[test]
fn csv_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("spectrum-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.csv");
    let s = SampledSpectrum::new(
        vec![400.0, 500.0, 600.0],
        vec![1.0, 2.5, 0.125],
        SpectrumKind::PsdPerWavelength,
    )
    .unwrap();
    std::fs::write(&path, s.to_csv_string()).unwrap();
    assert_eq!(SampledSpectrum::from_csv_path(&path, None).unwrap(), s);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_reports_line_numbers() {
    let text = "wavelength_nm,value\n400,1\n500,x\n";
    match SampledSpectrum::read_csv(text.as_bytes(), Some(SpectrumKind::Counts)) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn rejects_unsorted_and_negative() {
    assert!(
        SampledSpectrum::new(vec![500.0, 400.0], vec![1.0, 1.0], SpectrumKind::Counts).is_err()
    );
    assert!(
        SampledSpectrum::new(vec![400.0, 500.0], vec![1.0, -1.0], SpectrumKind::Counts).is_err()
    );
}

proptest! {
    #[test]
    fn resample_on_own_grid_is_identity(values in prop::collection::vec(0.0f64..10.0, 3..40)) {
        let grid = linear_grid(400.0, 900.0, values.len());
        let s = SampledSpectrum::new(grid.clone(), values, SpectrumKind::Counts).unwrap();
        prop_assert_eq!(s.resample(&grid).unwrap(), s);
    }

    #[test]
    fn band_integrals_add(values in prop::collection::vec(0.0f64..10.0, 3..40), cut in 0.01f64..0.99) {
        let grid = linear_grid(400.0, 900.0, values.len());
        let s = SampledSpectrum::new(grid, values, SpectrumKind::PsdPerWavelength).unwrap();
        let mid = 400.0 + 500.0 * cut;
        let whole = s.integrate();
        let parts = s.integrate_band(400.0, mid).unwrap() + s.integrate_band(mid, 900.0).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
    }
}
