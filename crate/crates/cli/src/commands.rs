use std::f64::consts::{LN_10, PI};
use std::fmt::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use sunlight_cooling::checks::{run_all_with_seed, run_check, DEFAULT_SEED};
use sunlight_cooling::cooling_sim::{
    ensemble_stats, rate_equation_trajectory, run_ensemble, CycleConfig,
};
use sunlight_cooling::data_pipeline::{
    apply_response, apply_slit_correction, atmospheric_correction, calibrate_power,
    extract_efficiency, fit_temperature, remove_atmosphere, InstrumentResponse,
    ReferenceSolarSpectrum, ShapeModel, SlitGeometry,
};
use sunlight_cooling::ion_thermo::{
    ground_state_occupation, scaled_room_temperature, sunlight_cooling_rate, virtual_temperature,
    BathSet, CoolingDrive, IonSpec,
};
use sunlight_cooling::mode_optics::{grayness, top_hat_area};
use sunlight_cooling::oracle::{markov_steady_state, renewal_slope};
use sunlight_cooling::radiometry::{q1d_band_power, wien_peak};
use sunlight_cooling::spectrum::linear_grid;
use sunlight_cooling::{
    AngularFrequency, SampledSpectrum, SpectralFamily, SpectrumKind, Temperature,
};

use crate::config::{required, RunConfig, SlitSection};
use crate::output::OutputDir;
use crate::svg::{LinePlot, Series};
use crate::{
    CheckArgs, Cli, Command, Family, FitModel, RateArgs, ReduceArgs, SimulateArgs, SpectrumArgs,
    VirtualTempArgs,
};

/// Alias accepted by `--ion` for the bundled barium data.
pub const BUILTIN_BARIUM: &str = "builtin:ba138";

/// What a command produced: a JSON report, the same for humans, and whether
/// it counts as success.
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub success: bool,
}

impl Outcome {
    fn ok(json: Value, text: String) -> Self {
        Self {
            json,
            text,
            success: true,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Spectrum(a) => spectrum(cli, &config, a),
        Command::Rate(a) => rate(&config, a),
        Command::VirtualTemp(a) => virtual_temp(&config, a),
        Command::Simulate(a) => simulate(cli, &config, a),
        Command::Reduce(a) => reduce(cli, &config, a),
        Command::Check(a) => check(cli, a),
    }
}

fn band(flag: Option<&Vec<f64>>, file: Option<[f64; 2]>) -> Result<(f64, f64)> {
    let b = required(
        flag.map(|v| [v[0], v[1]]),
        file,
        "wavelength band (--band-nm LO HI)",
    )?;
    if !(b[0] > 0.0 && b[1] > b[0] && b[1].is_finite()) {
        bail!("band [{}, {}] nm is empty or not positive", b[0], b[1]);
    }
    Ok((b[0], b[1]))
}

fn temperature(k: f64, what: &str) -> Result<Temperature> {
    Temperature::new(k).with_context(|| format!("{what} temperature"))
}

fn load_ion(path: &Path) -> Result<IonSpec> {
    if path.as_os_str() == BUILTIN_BARIUM {
        return Ok(IonSpec::barium_138());
    }
    IonSpec::from_path(path).with_context(|| format!("loading atomic data from {}", path.display()))
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Q1dPerOmega => "q1d-per-omega",
        Family::Q1dPerLambda => "q1d-per-lambda",
        Family::ThreeDPerOmega => "3d-per-omega",
        Family::ThreeDPerLambda => "3d-per-lambda",
    }
}

fn family_units(f: Family) -> &'static str {
    match f {
        Family::Q1dPerOmega => "W/(rad/s)",
        Family::Q1dPerLambda => "W/nm",
        Family::ThreeDPerOmega => "W/(m^2 sr rad/s)",
        Family::ThreeDPerLambda => "W/(m^2 sr nm)",
    }
}

fn spectrum(cli: &Cli, config: &RunConfig, a: &SpectrumArgs) -> Result<Outcome> {
    let c = &config.spectrum;
    let t = temperature(
        required(
            a.temperature_k,
            c.temperature_k,
            "temperature (--temperature-k)",
        )?,
        "source",
    )?;
    let family = required(a.family, c.family, "spectral family (--family)")?;
    let (lo, hi) = band(a.band_nm.as_ref(), c.band_nm)?;
    let points = a.points.or(c.points).unwrap_or(501);
    if points < 2 {
        bail!("need at least 2 points, got {points}");
    }
    let fam = SpectralFamily::from(family);
    let grid = linear_grid(lo, hi, points);
    let values = grid
        .iter()
        .map(|&l| fam.evaluate(l, t))
        .collect::<sunlight_cooling::Result<Vec<_>>>()?;

    let name = family_name(family);
    let mut csv = format!(
        "# family={name}\n# temperature_k={}\n# units={}\n",
        t.kelvin(),
        family_units(family)
    );
    match family {
        Family::Q1dPerOmega => csv.push_str("# kind=psd_per_angular_frequency\n"),
        Family::Q1dPerLambda => csv.push_str("# kind=psd_per_wavelength\n"),
        _ => {}
    }
    csv.push_str("wavelength_nm,value\n");
    for (l, v) in grid.iter().zip(&values) {
        let _ = writeln!(csv, "{l},{v:e}");
    }
    let out = OutputDir::create(&cli.out)?;
    let csv_path = out.write(&format!("spectrum_{name}.csv"), &csv)?;
    let mut files = vec![csv_path.display().to_string()];
    if a.svg || c.svg.unwrap_or(false) {
        let plot = LinePlot::new(
            format!("{name} spectrum at {} K", t.kelvin()),
            "wavelength (nm)",
            family_units(family),
        )
        .with_series(Series::new(
            name,
            grid.iter().copied().zip(values.iter().copied()).collect(),
        ));
        files.push(
            out.write(&format!("spectrum_{name}.svg"), &plot.render())?
                .display()
                .to_string(),
        );
    }

    let peak = wien_peak(fam, t)?;
    let band_power = match family {
        Family::Q1dPerOmega | Family::Q1dPerLambda => Some(q1d_band_power(
            t,
            AngularFrequency::from_wavelength_nm(hi)?,
            AngularFrequency::from_wavelength_nm(lo)?,
        )?),
        _ => None,
    };
    let json = json!({
        "command": "spectrum",
        "family": name,
        "temperature_k": t.kelvin(),
        "band_nm": [lo, hi],
        "points": points,
        "peak_nm": peak,
        "band_power_w": band_power,
        "files": files,
    });
    let mut text = format!(
        "{name} at {} K over [{lo}, {hi}] nm ({points} points)\n",
        t.kelvin()
    );
    match peak {
        Some(p) => {
            let _ = writeln!(text, "peak: {p:.2} nm");
        }
        None => text.push_str("peak: none (monotonic in frequency)\n"),
    }
    if let Some(p) = band_power {
        let _ = writeln!(text, "power in band: {p:.4e} W");
    }
    for f in json["files"].as_array().into_iter().flatten() {
        let _ = writeln!(text, "wrote {}", f.as_str().unwrap_or_default());
    }
    Ok(Outcome::ok(json, text))
}

fn rate(config: &RunConfig, a: &RateArgs) -> Result<Outcome> {
    let c = &config.rate;
    let ion_path = required(
        a.ion.clone(),
        c.ion.clone(),
        "atomic data (--ion PATH or --ion builtin:ba138)",
    )?;
    let ion = load_ion(&ion_path)?;
    let eta = required(a.eta, c.eta, "delivery efficiency (--eta)")?;
    let t = temperature(
        required(
            a.temperature_k,
            c.temperature_k,
            "source temperature (--temperature-k)",
        )?,
        "source",
    )?;
    let p_d = required(a.p_d, c.p_d, "D-state population (--p-d)")?;
    let (g, g_source) = match (a.grayness.or(c.grayness), a.waist_m.or(c.waist_m)) {
        (Some(_), Some(_)) => bail!("give either a grayness or a focus waist, not both"),
        (Some(g), None) => (g, json!({ "grayness": g })),
        (None, Some(w0)) => {
            let area = top_hat_area(w0)?;
            let g = grayness(area, ion.omega2)?;
            (
                g,
                json!({ "waist_m": w0, "top_hat_area_m2": area, "wavelength_nm": ion.omega2.wavelength_nm() }),
            )
        }
        (None, None) => bail!("missing grayness: pass --grayness or --waist-m"),
    };
    let drive = CoolingDrive::new(eta, g, p_d)?;
    let est = sunlight_cooling_rate(&ion, &drive, t)?;
    let json = json!({
        "command": "rate",
        "inputs": {
            "ion": ion.name,
            "ion_source": ion_path.display().to_string(),
            "references": ion.references,
            "eta": eta,
            "grayness": g,
            "grayness_from": g_source,
            "temperature_k": t.kelvin(),
            "p_d": p_d,
            "driven_line_nm": ion.omega2.wavelength_nm(),
            "a_drive_s": ion.a_drive,
            "g_e": ion.g_e,
            "g_g": ion.g_g,
        },
        "occupation": est.occupation,
        "energy_density_j_per_m3_per_rad_s": est.energy_density,
        "excitation_rate_s": est.excitation_rate,
        "eta_sp": est.branching_fraction,
        "phonon_rate_per_s": est.phonon_rate,
    });
    let text = format!(
        "ion {} (line {:.1} nm), η = {eta}, G = {g:.4e}, T = {} K, p_D = {p_d}\n\
         n̄ = {:.4e}\nΓ = {:.4} s⁻¹\nη_SP = {:.4}\nṅ = {:.3} phonon/s\n",
        ion.name,
        ion.omega2.wavelength_nm(),
        t.kelvin(),
        est.occupation,
        est.excitation_rate,
        est.branching_fraction,
        est.phonon_rate
    );
    Ok(Outcome::ok(json, text))
}

fn virtual_temp(config: &RunConfig, a: &VirtualTempArgs) -> Result<Outcome> {
    let c = &config.virtual_temp;
    let ion_path = required(
        a.ion.clone(),
        c.ion.clone(),
        "atomic data (--ion PATH or --ion builtin:ba138)",
    )?;
    let ion = load_ion(&ion_path)?;
    let laser = temperature(
        required(
            a.laser_k,
            c.laser_k,
            "laser temperature (--laser-k, may be inf)",
        )?,
        "laser",
    )?;
    let sun = temperature(
        required(a.sun_k, c.sun_k, "sun temperature (--sun-k)")?,
        "sun",
    )?;
    let room = temperature(
        required(a.room_k, c.room_k, "room temperature (--room-k)")?,
        "room",
    )?;
    let f_mhz = required(a.motion_mhz, c.motion_mhz, "trap frequency (--motion-mhz)")?;
    let omega_m = AngularFrequency::new(2.0 * PI * f_mhz * 1e6)?;

    let baths = BathSet::new(laser, sun, room)?;
    let t_v =
        virtual_temperature(&ion, &baths, omega_m).context("evaluating the virtual temperature")?;
    let occ = ground_state_occupation(t_v, omega_m)?;
    let limit = scaled_room_temperature(&ion, room, omega_m)?;
    let limit_occ = ground_state_occupation(limit, omega_m)?;
    let json = json!({
        "command": "virtual-temp",
        "inputs": {
            "ion": ion.name,
            "laser_k": if laser.is_infinite() { Value::from("inf") } else { Value::from(laser.kelvin()) },
            "sun_k": sun.kelvin(),
            "room_k": room.kelvin(),
            "motion_mhz": f_mhz,
        },
        "virtual_temperature_k": t_v.kelvin(),
        "occupation": occ.exact,
        "log10_occupation": -occ.reduced_energy / LN_10,
        "room_limit": {
            "virtual_temperature_k": limit.kelvin(),
            "log10_occupation": -limit_occ.reduced_energy / LN_10,
        },
    });
    let text = format!(
        "T_V = {:.4e} K ({:.3} µK), n̄ = 10^{:.2}\n\
         room-scaled limit (ω_motion/ω₃)·T_room = {:.3} µK, n̄ = 10^{:.2}\n",
        t_v.kelvin(),
        t_v.kelvin() * 1e6,
        -occ.reduced_energy / LN_10,
        limit.kelvin() * 1e6,
        -limit_occ.reduced_energy / LN_10
    );
    Ok(Outcome::ok(json, text))
}

fn simulate(cli: &Cli, config: &RunConfig, a: &SimulateArgs) -> Result<Outcome> {
    let c = &config.simulate;
    let cfg = CycleConfig {
        gamma_s: required(a.gamma_s, c.gamma_s, "excitation rate (--gamma-s)")?,
        eta_sp: required(a.eta_sp, c.eta_sp, "branching fraction (--eta-sp)")?,
        step_i_duration_s: required(
            a.step_i_duration_s,
            c.step_i_duration_s,
            "step I duration (--step-i-duration-s)",
        )?,
        transfer: c.transfer.clone().unwrap_or_default(),
        heating_rate: required(
            a.heating_rate,
            c.heating_rate,
            "heating rate (--heating-rate)",
        )?,
        n_initial: required(
            a.n_initial,
            c.n_initial,
            "initial phonon number (--n-initial)",
        )?,
        t_max_s: required(a.t_max_s, c.t_max_s, "duration (--t-max-s)")?,
        seed: required(cli.seed, c.seed, "seed (--seed)")?,
    };
    cfg.validate()?;
    let count = a.trajectories.or(c.trajectories).unwrap_or(200);
    let grid_points = a.grid_points.or(c.grid_points).unwrap_or(400);
    if count < 2 {
        bail!("an ensemble needs at least 2 trajectories");
    }
    let trajectories = run_ensemble(&cfg, count)?;
    let stats = ensemble_stats(&trajectories, grid_points)?;
    let ode = rate_equation_trajectory(&cfg)?;
    let expected_slope = renewal_slope(&cfg);

    let out = OutputDir::create(&cli.out)?;
    let mut files = vec![out.write("trajectory.csv", &trajectories[0].to_csv_string())?];
    let mut ensemble_csv = String::from("time_s,mean_n,variance_n,rate_equation_n\n");
    for i in 0..stats.times_s.len() {
        let t = stats.times_s[i];
        let _ = writeln!(
            ensemble_csv,
            "{t:e},{},{},{}",
            stats.mean_n[i],
            stats.variance_n[i],
            ode.n_at(t)
        );
    }
    files.push(out.write("ensemble.csv", &ensemble_csv)?);
    if a.svg || c.svg.unwrap_or(false) {
        let plot = LinePlot::new("phonon number", "time (s)", "n")
            .with_series(Series::new(
                "ensemble mean",
                stats
                    .times_s
                    .iter()
                    .copied()
                    .zip(stats.mean_n.iter().copied())
                    .collect(),
            ))
            .with_series(Series::new(
                "rate equation",
                stats.times_s.iter().map(|&t| (t, ode.n_at(t))).collect(),
            ));
        files.push(out.write("ensemble.svg", &plot.render())?);
    }
    let slope_sigmas = stats.initial_slope.sigmas_from(expected_slope);
    let markov = if cfg.heating_rate > 0.0 {
        markov_steady_state(&cfg, 200).ok().map(|m| m.mean_n)
    } else {
        Some(0.0)
    };
    let summary = json!({
        "config": cfg,
        "trajectories": count,
        "initial_slope": {
            "value": stats.initial_slope.value,
            "std_error": stats.initial_slope.std_error,
            "ci95": stats.initial_slope.ci95(),
            "window_s": stats.slope_window_s,
            "renewal_prediction": expected_slope,
            "sigmas_from_prediction": slope_sigmas,
        },
        "steady_state_n": {
            "value": stats.steady_state_n.value,
            "std_error": stats.steady_state_n.std_error,
            "ci95": stats.steady_state_n.ci95(),
            "markov_prediction": markov,
        },
        "rate_equation_rate": ode.rate,
        "final_n_first_trajectory": trajectories[0].final_n,
    });
    files.push(out.write_json("summary.json", &summary)?);
    let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();

    let mut json = summary;
    json["command"] = json!("simulate");
    json["files"] = json!(files);
    let mut text = format!(
        "{count} trajectories, seed {} (+i)\ninitial slope {:.3} ± {:.3} phonon/s (renewal prediction {expected_slope:.3}, {slope_sigmas:.1}σ)\n\
         steady-state n̄ {:.4} ± {:.4} (Markov prediction {})\n",
        cfg.seed,
        stats.initial_slope.value,
        stats.initial_slope.std_error,
        stats.steady_state_n.value,
        stats.steady_state_n.std_error,
        markov.map_or_else(|| "unavailable: heating outpaces cooling".to_string(), |m| format!("{m:.4}"))
    );
    for f in &files {
        let _ = writeln!(text, "wrote {f}");
    }
    Ok(Outcome::ok(json, text))
}

fn reduce(cli: &Cli, config: &RunConfig, a: &ReduceArgs) -> Result<Outcome> {
    let c = &config.reduce;
    let raw_path = required(a.raw.clone(), c.raw.clone(), "raw spectrum (--raw)")?;
    let response_path = required(
        a.response.clone(),
        c.response.clone(),
        "instrument response (--response)",
    )?;
    let power = required(a.power_w, c.power_w, "power-meter reading (--power-w)")?;
    let (lo, hi) = band(a.band_nm.as_ref(), c.band_nm)?;
    let t = temperature(
        required(
            a.temperature_k,
            c.temperature_k,
            "source temperature (--temperature-k)",
        )?,
        "source",
    )?;
    let model = match a.model {
        Some(FitModel::Q1d) => ShapeModel::Q1d,
        Some(FitModel::ThreeD) => ShapeModel::ThreeD,
        None => c.model.unwrap_or(ShapeModel::Q1d),
    };

    let raw = SampledSpectrum::from_csv_path(&raw_path, Some(SpectrumKind::Counts))
        .with_context(|| format!("reading raw spectrum {}", raw_path.display()))?;
    let response = InstrumentResponse::new(
        SampledSpectrum::from_csv_path(&response_path, Some(SpectrumKind::Ratio))
            .with_context(|| format!("reading instrument response {}", response_path.display()))?,
    )?;
    let slit = match (&a.slit_m, c.slit) {
        (Some(v), _) => Some(SlitGeometry::new(v[0], v[1], v[2])?),
        (
            None,
            Some(SlitSection {
                width_m,
                distance_m,
                mode_field_radius_m,
            }),
        ) => Some(SlitGeometry::new(width_m, distance_m, mode_field_radius_m)?),
        (None, None) => None,
    };

    let mut corrected = apply_response(&raw, &response)?;
    if let Some(g) = &slit {
        corrected = apply_slit_correction(&corrected, g)?;
    }
    let calibrated = calibrate_power(&corrected, power, (lo, hi))?;

    let atmosphere = if a.no_atmosphere || c.no_atmosphere.unwrap_or(false) {
        None
    } else {
        let reference = match a.reference.clone().or(c.reference.clone()) {
            Some(p) => ReferenceSolarSpectrum::new(
                SampledSpectrum::from_csv_path(&p, Some(SpectrumKind::IrradiancePerWavelength))
                    .with_context(|| format!("reading reference spectrum {}", p.display()))?,
            )?,
            None => ReferenceSolarSpectrum::astm_g173_direct(),
        };
        Some(atmospheric_correction(&reference, t)?)
    };
    let eff = extract_efficiency(&calibrated, t, atmosphere.as_ref(), (lo, hi))?;
    let fit_input = match &atmosphere {
        Some(atm) => remove_atmosphere(&calibrated, atm)?,
        None => calibrated.clone(),
    };
    let fit = fit_temperature(&fit_input.restrict(lo, hi)?, model)?;

    let out = OutputDir::create(&cli.out)?;
    let mut files = vec![
        out.write("calibrated.csv", &calibrated.to_csv_string())?,
        out.write("eta.csv", &eff.eta.to_csv_string())?,
    ];
    if let Some(atm) = &atmosphere {
        files.push(out.write("atmosphere.csv", &atm.curve.to_csv_string())?);
    }
    if a.svg || c.svg.unwrap_or(false) {
        let mut plot = LinePlot::new("delivery efficiency", "wavelength (nm)", "η")
            .with_series(Series::new("η(λ)", eff.eta.iter().collect()));
        if let Some(atm) = &atmosphere {
            plot = plot.with_series(Series::new(
                "atmosphere c(λ)",
                atm.curve.restrict(lo, hi)?.iter().collect(),
            ));
        }
        files.push(out.write("eta.svg", &plot.render())?);
    }
    let report = json!({
        "T_K": fit.temperature_k,
        "residual": fit.residual,
        "residual_flagged": fit.flagged,
        "eta_band_avg": eff.band_average,
        "band_nm": [eff.band_nm.0, eff.band_nm.1],
        "super_thermal": eff.super_thermal,
        "atmosphere_amplitude": atmosphere.as_ref().map(|a| a.amplitude),
    });
    files.push(out.write_json("fit.json", &report)?);
    let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();

    let mut json = report;
    json["command"] = json!("reduce");
    json["files"] = json!(files);
    let mut text = format!(
        "band-average η = {:.4} over [{:.1}, {:.1}] nm{}\nfitted T = {:.1} K (normalized residual {:.2e}{})\n",
        eff.band_average,
        eff.band_nm.0,
        eff.band_nm.1,
        if eff.super_thermal { "  WARNING: η > 1 somewhere, check the power calibration" } else { "" },
        fit.temperature_k,
        fit.residual,
        if fit.flagged { ", above limit" } else { "" }
    );
    for f in &files {
        let _ = writeln!(text, "wrote {f}");
    }
    Ok(Outcome::ok(json, text))
}

fn check(cli: &Cli, a: &CheckArgs) -> Result<Outcome> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let outcomes =
        match a.only {
            Some(id) => vec![run_check(id, seed)
                .with_context(|| format!("no check with id {id} (valid: 1–9)"))?],
            None => run_all_with_seed(seed),
        };
    let success = outcomes.iter().all(|o| o.passed);
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let mut text = String::new();
    for o in &outcomes {
        let _ = writeln!(text, "{}", o.line());
    }
    let _ = writeln!(text, "{passed}/{} passed", outcomes.len());
    let json = json!({ "command": "check", "seed": seed, "passed": success, "results": outcomes });
    Ok(Outcome {
        json,
        text,
        success,
    })
}
