//! Sampled spectra on a wavelength grid, with CSV I/O and Jacobian-aware
//! conversion between per-wavelength and per-angular-frequency densities.
//!
//! CSV layout:
//!
//! ```text
//! # kind=psd_per_wavelength
//! wavelength_nm,value
//! 400,1.2e-12
//! ```
//!
//! Other `#` lines are treated as comments.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::radiometry::omega_per_nm;

pub const CSV_HEADER: &str = "wavelength_nm,value";

/// What the values of a [`SampledSpectrum`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Raw detector counts (arbitrary units).
    Counts,
    /// Power per unit angular frequency, W s/rad.
    PsdPerAngularFrequency,
    /// Irradiance per unit wavelength, W m⁻² nm⁻¹.
    IrradiancePerWavelength,
    /// Power per unit wavelength, W/nm.
    PsdPerWavelength,
    /// Dimensionless curve (response, transmission, efficiency).
    Ratio,
}

impl SpectrumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumKind::Counts => "counts",
            SpectrumKind::PsdPerAngularFrequency => "psd_per_angular_frequency",
            SpectrumKind::IrradiancePerWavelength => "irradiance_per_wavelength",
            SpectrumKind::PsdPerWavelength => "psd_per_wavelength",
            SpectrumKind::Ratio => "ratio",
        }
    }

    /// Densities integrate over angular frequency rather than wavelength.
    pub fn is_per_omega(self) -> bool {
        self == SpectrumKind::PsdPerAngularFrequency
    }

    pub fn is_power_density(self) -> bool {
        matches!(
            self,
            SpectrumKind::PsdPerAngularFrequency | SpectrumKind::PsdPerWavelength
        )
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectrumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "counts" => SpectrumKind::Counts,
            "psd_per_angular_frequency" => SpectrumKind::PsdPerAngularFrequency,
            "irradiance_per_wavelength" => SpectrumKind::IrradiancePerWavelength,
            "psd_per_wavelength" => SpectrumKind::PsdPerWavelength,
            "ratio" => SpectrumKind::Ratio,
            other => return Err(invalid(format!("unknown spectrum kind '{other}'"))),
        })
    }
}

/// Values on a strictly increasing wavelength grid (nm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSpectrum {
    wavelengths_nm: Vec<f64>,
    values: Vec<f64>,
    kind: SpectrumKind,
}

impl SampledSpectrum {
    pub fn new(wavelengths_nm: Vec<f64>, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if wavelengths_nm.len() != values.len() {
            return Err(invalid(format!(
                "grid has {} points but {} values",
                wavelengths_nm.len(),
                values.len()
            )));
        }
        if wavelengths_nm.len() < 2 {
            return Err(invalid("a spectrum needs at least two samples"));
        }
        if wavelengths_nm.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(invalid("wavelengths must be finite and positive"));
        }
        if let Some(w) = wavelengths_nm.windows(2).find(|w| w[1] <= w[0]) {
            return Err(invalid(format!(
                "wavelength grid not strictly increasing at {} -> {} nm",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!(
                "spectrum values must be finite and >= 0, found {v}"
            )));
        }
        Ok(Self {
            wavelengths_nm,
            values,
            kind,
        })
    }

    /// Samples `f(λ)` on the given grid.
    pub fn from_fn<F>(wavelengths_nm: Vec<f64>, kind: SpectrumKind, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let values = wavelengths_nm
            .iter()
            .map(|&l| f(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(wavelengths_nm, values, kind)
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn range_nm(&self) -> (f64, f64) {
        (self.wavelengths_nm[0], self.wavelengths_nm[self.len() - 1])
    }

    /// Mean grid spacing in nm.
    pub fn mean_spacing_nm(&self) -> f64 {
        let (a, b) = self.range_nm();
        (b - a) / (self.len() - 1) as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.wavelengths_nm
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Same grid and kind, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.wavelengths_nm.clone(), values, self.kind)
    }

    pub fn with_kind(mut self, kind: SpectrumKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<Self> {
        self.with_values(self.iter().map(|(l, v)| f(l, v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.map(|_, v| v * factor)
    }

    /// Linear interpolation in λ; `None` outside the grid.
    pub fn value_at(&self, lambda_nm: f64) -> Option<f64> {
        let grid = &self.wavelengths_nm;
        let (lo, hi) = self.range_nm();
        if !(lo..=hi).contains(&lambda_nm) {
            return None;
        }
        let i = grid.partition_point(|&l| l <= lambda_nm);
        if i == grid.len() {
            return Some(self.values[grid.len() - 1]);
        }
        if i == 0 {
            return Some(self.values[0]);
        }
        let (x0, x1) = (grid[i - 1], grid[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        let f = (lambda_nm - x0) / (x1 - x0);
        Some(y0 + f * (y1 - y0))
    }

    /// Resamples onto `grid` by linear interpolation. Every grid point must lie
    /// within this spectrum's range.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        let values = grid
            .iter()
            .map(|&l| {
                self.value_at(l).ok_or_else(|| {
                    let (a, b) = self.range_nm();
                    invalid(format!(
                        "{l} nm lies outside the spectrum range [{a}, {b}] nm"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid.to_vec(), values, self.kind)
    }

    /// Restricts to grid points inside `[lo, hi]`.
    pub fn restrict(&self, lo_nm: f64, hi_nm: f64) -> Result<Self> {
        let (l, v): (Vec<f64>, Vec<f64>) = self
            .iter()
            .filter(|(l, _)| (lo_nm..=hi_nm).contains(l))
            .unzip();
        Self::new(l, v, self.kind)
    }

    /// Trapezoid integral over `[lo, hi]` nm, in the kind's natural variable:
    /// angular frequency for per-ω densities, wavelength otherwise. Band edges
    /// that fall between samples are interpolated.
    pub fn integrate_band(&self, lo_nm: f64, hi_nm: f64) -> Result<f64> {
        let (a, b) = self.range_nm();
        if !(lo_nm < hi_nm) {
            return Err(invalid(format!("empty band [{lo_nm}, {hi_nm}] nm")));
        }
        if lo_nm < a || hi_nm > b {
            return Err(invalid(format!(
                "band [{lo_nm}, {hi_nm}] nm exceeds spectrum range [{a}, {b}] nm"
            )));
        }
        let mut nodes = vec![(lo_nm, self.value_at(lo_nm).expect("in range"))];
        nodes.extend(self.iter().filter(|(l, _)| *l > lo_nm && *l < hi_nm));
        nodes.push((hi_nm, self.value_at(hi_nm).expect("in range")));
        let coordinate = |l: f64| {
            if self.kind.is_per_omega() {
                2.0 * std::f64::consts::PI * crate::constants::SPEED_OF_LIGHT / (l * 1e-9)
            } else {
                l
            }
        };
        Ok(nodes
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (coordinate(w[1].0) - coordinate(w[0].0)).abs())
            .sum())
    }

    /// Trapezoid integral over the whole grid.
    pub fn integrate(&self) -> f64 {
        let (a, b) = self.range_nm();
        self.integrate_band(a, b)
            .expect("full range is a valid band")
    }

    /// Converts between per-wavelength and per-angular-frequency power
    /// densities by applying `|dω/dλ| = 2πc/λ²`.
    pub fn convert(&self, target: SpectrumKind) -> Result<Self> {
        if target == self.kind {
            return Ok(self.clone());
        }
        if self.kind == SpectrumKind::Counts {
            return Err(invalid(
                "counts must be corrected with an instrument response before conversion to a density",
            ));
        }
        if !(self.kind.is_power_density() && target.is_power_density()) {
            return Err(invalid(format!("cannot convert {} to {target}", self.kind)));
        }
        let values = self
            .iter()
            .map(|(l, v)| match target {
                SpectrumKind::PsdPerWavelength => v * omega_per_nm(l),
                _ => v / omega_per_nm(l),
            })
            .collect();
        Ok(Self {
            wavelengths_nm: self.wavelengths_nm.clone(),
            values,
            kind: target,
        })
    }

    pub fn read_csv<R: BufRead>(reader: R, default_kind: Option<SpectrumKind>) -> Result<Self> {
        let mut kind = None;
        let mut header_seen = false;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(k) = comment.trim().strip_prefix("kind=") {
                    kind = Some(k.parse().map_err(|e: Error| Error::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?);
                }
                continue;
            }
            if !header_seen {
                if trimmed != CSV_HEADER {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected header '{CSV_HEADER}', found '{trimmed}'"),
                    });
                }
                header_seen = true;
                continue;
            }
            let mut fields = trimmed.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "missing field".into(),
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })
            };
            grid.push(parse(fields.next())?);
            values.push(parse(fields.next())?);
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "too many fields".into(),
                });
            }
        }
        if !header_seen {
            return Err(Error::Parse {
                line: 0,
                message: "missing CSV header".into(),
            });
        }
        let kind = kind.or(default_kind).ok_or_else(|| {
            invalid("spectrum kind not given in file ('# kind=...') or by caller")
        })?;
        Self::new(grid, values, kind)
    }

    pub fn from_csv_path(path: &Path, default_kind: Option<SpectrumKind>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        Self::read_csv(std::io::BufReader::new(file), default_kind)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# kind={}", self.kind)?;
        writeln!(w, "{CSV_HEADER}")?;
        for (l, v) in self.iter() {
            writeln!(w, "{l},{v:e}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Uniform grid of `n` points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}
