use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sunlight_cooling::spectrum::linear_grid;
use sunlight_cooling::{SampledSpectrum, SpectralFamily, SpectrumKind, Temperature};
use tempfile::TempDir;

fn sunlight(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sunlight"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(out: &Path, args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let o = sunlight(out, &full);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn rate_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "rate",
        "--ion",
        "builtin:ba138",
        "--temperature-k",
        "5800",
        "--p-d",
        "1",
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn spectrum_peaks_and_writes_files() {
    let dir = TempDir::new().unwrap();
    let r = json_ok(
        dir.path(),
        &[
            "spectrum",
            "--temperature-k",
            "5800",
            "--family",
            "q1d-per-lambda",
            "--band-nm",
            "300",
            "2000",
            "--svg",
        ],
    );
    let peak = r["peak_nm"].as_f64().unwrap();
    assert!((peak - 879.0).abs() < 2.0, "{peak}");
    let csv = fs::read_to_string(dir.path().join("spectrum_q1d-per-lambda.csv")).unwrap();
    assert!(csv.starts_with("# family=q1d-per-lambda"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 502);
    let svg = fs::read_to_string(dir.path().join("spectrum_q1d-per-lambda.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let r = json_ok(
        dir.path(),
        &[
            "spectrum",
            "--temperature-k",
            "5800",
            "--family",
            "3d-per-lambda",
            "--band-nm",
            "300",
            "2000",
        ],
    );
    assert!((r["peak_nm"].as_f64().unwrap() - 500.0).abs() < 2.0);
}

#[test]
fn spectrum_rejects_zero_width_band() {
    let dir = TempDir::new().unwrap();
    let o = sunlight(
        dir.path(),
        &[
            "spectrum",
            "--temperature-k",
            "5800",
            "--family",
            "3d-per-omega",
            "--band-nm",
            "500",
            "500",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("band"));
}

#[test]
fn rate_reproduces_reference_scenario() {
    let dir = TempDir::new().unwrap();
    let r = json_ok(
        dir.path(),
        &rate_args(&["--eta", "0.5", "--grayness", "5e-5"]),
    );
    let rate = r["phonon_rate_per_s"].as_f64().unwrap();
    assert!((rate / -8.2 - 1.0).abs() < 0.1, "{rate}");
    assert_eq!(r["inputs"]["ion_source"], "builtin:ba138");
    assert!(!r["inputs"]["references"].as_array().unwrap().is_empty());

    let r = json_ok(
        dir.path(),
        &rate_args(&["--eta", "0", "--grayness", "5e-5"]),
    );
    assert_eq!(r["phonon_rate_per_s"].as_f64().unwrap(), 0.0);
}

#[test]
fn rate_from_waist_matches_direct_grayness() {
    let dir = TempDir::new().unwrap();
    let direct = json_ok(
        dir.path(),
        &rate_args(&["--eta", "0.5", "--grayness", "5e-5"]),
    );
    let waist = json_ok(
        dir.path(),
        &rate_args(&["--eta", "0.5", "--waist-m", "20e-6"]),
    );
    let g = waist["inputs"]["grayness"].as_f64().unwrap();
    assert!((g / 5e-5 - 1.0).abs() < 0.05, "{g}");
    let (a, b) = (
        direct["phonon_rate_per_s"].as_f64().unwrap(),
        waist["phonon_rate_per_s"].as_f64().unwrap(),
    );
    assert!((b / a - 1.0).abs() < 0.05);
}

#[test]
fn rate_requires_atomic_data() {
    let dir = TempDir::new().unwrap();
    let o = sunlight(
        dir.path(),
        &[
            "rate",
            "--eta",
            "0.5",
            "--grayness",
            "5e-5",
            "--temperature-k",
            "5800",
            "--p-d",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    let o = sunlight(
        dir.path(),
        &[
            "--json",
            "rate",
            "--ion",
            missing.to_str().unwrap(),
            "--eta",
            "0.5",
            "--grayness",
            "5e-5",
            "--temperature-k",
            "5800",
            "--p-d",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["error"].as_str().unwrap().contains("absent.json"));
}

#[test]
fn virtual_temperature_reports() {
    let dir = TempDir::new().unwrap();
    let base = [
        "virtual-temp",
        "--ion",
        "builtin:ba138",
        "--motion-mhz",
        "1",
    ];
    let mut args = base.to_vec();
    args.extend(["--laser-k", "inf", "--sun-k", "5800", "--room-k", "300"]);
    let r = json_ok(dir.path(), &args);
    let limit = r["room_limit"]["virtual_temperature_k"].as_f64().unwrap();
    assert!(limit > 1e-7 && limit < 2e-6, "{limit}");
    assert!((r["room_limit"]["log10_occupation"].as_f64().unwrap() + 46.0).abs() < 1.0);

    let mut args = base.to_vec();
    args.extend(["--laser-k", "417", "--sun-k", "417", "--room-k", "417"]);
    let r = json_ok(dir.path(), &args);
    assert!((r["virtual_temperature_k"].as_f64().unwrap() / 417.0 - 1.0).abs() < 1e-12);

    // a sun colder than the room inverts the virtual qubit
    let mut args = base.to_vec();
    args.extend(["--laser-k", "inf", "--sun-k", "3", "--room-k", "300"]);
    let o = sunlight(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

const SIM: [&str; 13] = [
    "simulate",
    "--gamma-s",
    "11",
    "--eta-sp",
    "0.74",
    "--step-i-duration-s",
    "1e-3",
    "--n-initial",
    "15",
    "--t-max-s",
    "10",
    "--trajectories",
    "50",
];

#[test]
fn simulate_is_seed_deterministic() {
    let (a, b, c) = (
        TempDir::new().unwrap(),
        TempDir::new().unwrap(),
        TempDir::new().unwrap(),
    );
    let mut args = vec!["--seed", "99"];
    args.extend(SIM);
    args.extend(["--heating-rate", "0.5"]);
    json_ok(a.path(), &args);
    json_ok(b.path(), &args);
    args[1] = "100";
    json_ok(c.path(), &args);
    for name in ["trajectory.csv", "ensemble.csv", "summary.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
        if name != "summary.json" {
            assert_ne!(x, fs::read(c.path().join(name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn simulate_without_heating_reaches_ground() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["--seed", "3"];
    args.extend(SIM);
    args.extend(["--heating-rate", "0"]);
    let t_max = args.iter().position(|&a| a == "--t-max-s").unwrap() + 1;
    args[t_max] = "30";
    let r = json_ok(dir.path(), &args);
    assert_eq!(r["final_n_first_trajectory"].as_u64(), Some(0));
    let slope = &r["initial_slope"];
    let sigmas = slope["sigmas_from_prediction"].as_f64().unwrap();
    assert!(sigmas.abs() < 3.0, "{slope}");
}

#[test]
fn simulate_reads_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"simulate": {"gamma_s": 11, "eta_sp": 0.74, "step_i_duration_s": 1e-3, "heating_rate": 0,
            "n_initial": 5, "t_max_s": 5, "seed": 1, "trajectories": 10}}"#,
    )
    .unwrap();
    let r = json_ok(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(r["trajectories"].as_u64(), Some(10));
    assert_eq!(r["config"]["seed"].as_u64(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"simulate": {"gamma_s": 11, "gamma": 3}}"#).unwrap();
    let o = sunlight(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

fn write_synthetic(dir: &Path, eta: f64) -> f64 {
    let t = Temperature::new(5800.0).unwrap();
    let grid = linear_grid(380.0, 950.0, 571);
    let response = SampledSpectrum::from_fn(grid.clone(), SpectrumKind::Ratio, |l| {
        Ok((-((l - 650.0) / 300.0).powi(2)).exp())
    })
    .unwrap();
    let raw = SampledSpectrum::from_fn(grid, SpectrumKind::Counts, |l| {
        Ok(1e20 * SpectralFamily::Q1dPerLambda.evaluate(l, t)? * response.value_at(l).unwrap())
    })
    .unwrap();
    fs::write(dir.join("raw.csv"), raw.to_csv_string()).unwrap();
    fs::write(dir.join("response.csv"), response.to_csv_string()).unwrap();
    let thermal = SampledSpectrum::from_fn(
        linear_grid(400.0, 900.0, 5001),
        SpectrumKind::PsdPerWavelength,
        |l| SpectralFamily::Q1dPerLambda.evaluate(l, t),
    )
    .unwrap();
    eta * thermal.integrate()
}

#[test]
fn reduce_recovers_synthetic_efficiency() {
    let dir = TempDir::new().unwrap();
    let power = write_synthetic(dir.path(), 0.7).to_string();
    let raw = dir.path().join("raw.csv");
    let resp = dir.path().join("response.csv");
    let r = json_ok(
        dir.path(),
        &[
            "reduce",
            "--raw",
            raw.to_str().unwrap(),
            "--response",
            resp.to_str().unwrap(),
            "--power-w",
            &power,
            "--band-nm",
            "400",
            "900",
            "--temperature-k",
            "5800",
            "--no-atmosphere",
        ],
    );
    let eta = r["eta_band_avg"].as_f64().unwrap();
    assert!((eta / 0.7 - 1.0).abs() < 0.02, "{eta}");
    let t = r["T_K"].as_f64().unwrap();
    assert!((t / 5800.0 - 1.0).abs() < 0.01, "{t}");
    let fit: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["T_K"], r["T_K"]);
    assert!(dir.path().join("eta.csv").exists() && dir.path().join("calibrated.csv").exists());
}

#[test]
fn reduce_with_bundled_reference_writes_telluric_correction() {
    let dir = TempDir::new().unwrap();
    let power = write_synthetic(dir.path(), 0.7).to_string();
    let raw = dir.path().join("raw.csv");
    let resp = dir.path().join("response.csv");
    let args = [
        "reduce",
        "--raw",
        raw.to_str().unwrap(),
        "--response",
        resp.to_str().unwrap(),
        "--power-w",
        &power,
        "--band-nm",
        "400",
        "900",
        "--temperature-k",
        "5800",
    ];
    json_ok(dir.path(), &args);
    let corr = SampledSpectrum::from_csv_path(
        &dir.path().join("atmosphere.csv"),
        Some(SpectrumKind::Ratio),
    )
    .unwrap();
    // the O2 A band near 760 nm sits well below its shoulders
    let dip = corr
        .restrict(755.0, 770.0)
        .unwrap()
        .values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let shoulder = corr.value_at(740.0).unwrap();
    assert!(dip < 0.8 * shoulder, "dip {dip} shoulder {shoulder}");
}

#[test]
fn reduce_reports_missing_response() {
    let dir = TempDir::new().unwrap();
    write_synthetic(dir.path(), 0.7);
    let raw = dir.path().join("raw.csv");
    let o = sunlight(
        dir.path(),
        &[
            "reduce",
            "--raw",
            raw.to_str().unwrap(),
            "--response",
            "no_such_response.csv",
            "--power-w",
            "1e-6",
            "--band-nm",
            "400",
            "900",
            "--temperature-k",
            "5800",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_response.csv"));
    assert!(!dir.path().join("fit.json").exists());
}

#[test]
fn check_passes_and_names_each_criterion() {
    let dir = TempDir::new().unwrap();
    let o = sunlight(dir.path(), &["check"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 9);

    let o = sunlight(dir.path(), &["check", "--only", "12"]);
    assert_eq!(o.status.code(), Some(2));
}
