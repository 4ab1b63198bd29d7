//! Monte-Carlo and rate-equation models of the two-step cooling cycle.
//!
//! One cycle is:
//!
//! 1. **Step I** (duration τ_I): a red-sideband pulse moves S,n → D,n−1 with
//!    probability p_I(n). At n = 0 there is no red sideband and nothing happens.
//! 2. **Step II**: sunlight excites D → P at rate Γ. P decays at once, back to
//!    S with probability η_SP (ending the cycle) or to D, where the ion waits
//!    for the next excitation.
//!
//! Heating is a Poisson process of rate h that adds one phonon at a time
//! throughout. Trajectories use ChaCha8 seeded from a single `u64`, so a
//! configuration and seed pin down every event bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Probability that the step-I pulse removes a phonon, as a function of n.
/// It is always zero at n = 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransferProbability {
    /// 1 for every n ≥ 1.
    #[default]
    Ideal,
    /// The same `p` for every n ≥ 1.
    Uniform { p: f64 },
    /// `p[n]` for n < len, the last entry beyond.
    Table { p: Vec<f64> },
}

impl TransferProbability {
    pub fn probability(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self {
            TransferProbability::Ideal => 1.0,
            TransferProbability::Uniform { p } => *p,
            TransferProbability::Table { p } => {
                let idx = usize::try_from(n).unwrap_or(usize::MAX).min(p.len() - 1);
                p[idx]
            }
        }
    }

    /// Transfer probability far above the ground state.
    pub fn asymptotic(&self) -> f64 {
        match self {
            TransferProbability::Ideal => 1.0,
            TransferProbability::Uniform { p } => *p,
            TransferProbability::Table { p } => p[p.len() - 1],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            TransferProbability::Ideal => Ok(()),
            TransferProbability::Uniform { p } if ok(*p) => Ok(()),
            TransferProbability::Table { p } if !p.is_empty() && p.iter().all(|&x| ok(x)) => Ok(()),
            _ => Err(invalid(
                "transfer probabilities must lie in [0, 1] (and a table must be non-empty)",
            )),
        }
    }
}

/// Parameters of one simulated cooling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleConfig {
    /// D → P excitation rate Γ (s⁻¹).
    pub gamma_s: f64,
    /// Branching fraction of P → S.
    pub eta_sp: f64,
    /// Duration of the sideband pulse τ_I (s).
    pub step_i_duration_s: f64,
    #[serde(default)]
    pub transfer: TransferProbability,
    /// Phonons per second added by heating.
    pub heating_rate: f64,
    pub n_initial: u64,
    pub t_max_s: f64,
    pub seed: u64,
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |label: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{label} must be finite and > 0, got {v}")))
            }
        };
        positive("gamma_s", self.gamma_s)?;
        positive("step_i_duration_s", self.step_i_duration_s)?;
        positive("t_max_s", self.t_max_s)?;
        if !(0.0..=1.0).contains(&self.eta_sp) {
            return Err(invalid(format!(
                "eta_sp must lie in [0, 1], got {}",
                self.eta_sp
            )));
        }
        if !(self.heating_rate.is_finite() && self.heating_rate >= 0.0) {
            return Err(invalid(format!(
                "heating_rate must be >= 0, got {}",
                self.heating_rate
            )));
        }
        self.transfer.validate()
    }

    /// Mean time per removed phonon far from the ground state,
    /// `τ_I/p_I + 1/(Γ η_SP)`.
    pub fn mean_cycle_time(&self) -> f64 {
        let p = self.transfer.asymptotic();
        if p == 0.0 || self.eta_sp == 0.0 {
            return f64::INFINITY;
        }
        self.step_i_duration_s / p + 1.0 / (self.gamma_s * self.eta_sp)
    }

    /// Cooling rate far above the ground state, `R = 1/(mean cycle time)`.
    /// For an ideal pulse this is `Γη_SP/(1 + Γη_SP τ_I)`.
    pub fn effective_cooling_rate(&self) -> f64 {
        1.0 / self.mean_cycle_time()
    }

    fn same_physics(&self, other: &CycleConfig) -> bool {
        CycleConfig {
            seed: 0,
            ..self.clone()
        } == CycleConfig {
            seed: 0,
            ..other.clone()
        }
    }
}

/// Internal state recorded with each event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InternalState {
    S,
    D,
    /// Back in D after a P decay that did not reach S.
    #[serde(rename = "P->D")]
    DecayedToD,
}

impl InternalState {
    pub fn as_str(self) -> &'static str {
        match self {
            InternalState::S => "S",
            InternalState::D => "D",
            InternalState::DecayedToD => "P->D",
        }
    }

    pub fn is_s(self) -> bool {
        self == InternalState::S
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time_s: f64,
    pub n: u64,
    pub state: InternalState,
}

/// Event record of one stochastic run. The first event is the initial
/// state at t = 0; n is piecewise constant between events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingTrajectory {
    pub config: CycleConfig,
    pub events: Vec<Event>,
    pub final_n: u64,
    /// Time-averaged n over the last quarter of the run.
    pub late_mean_n: f64,
}

impl CoolingTrajectory {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Phonon number at time `t`.
    pub fn n_at(&self, t: f64) -> u64 {
        let i = self.events.partition_point(|e| e.time_s <= t);
        self.events[i.saturating_sub(1)].n
    }

    /// Time average of n over `[a, b]`.
    pub fn time_average(&self, a: f64, b: f64) -> f64 {
        assert!(b > a, "empty averaging window");
        let mut total = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            let start = e.time_s.max(a);
            let end = self
                .events
                .get(i + 1)
                .map_or(f64::INFINITY, |next| next.time_s)
                .min(b);
            if end > start {
                total += e.n as f64 * (end - start);
            }
        }
        total / (b - a)
    }

    /// Phonon number on each grid time (grid must be ascending).
    pub fn sample(&self, grid: &[f64]) -> Vec<f64> {
        let mut idx = 0;
        grid.iter()
            .map(|&t| {
                while idx + 1 < self.events.len() && self.events[idx + 1].time_s <= t {
                    idx += 1;
                }
                self.events[idx].n as f64
            })
            .collect()
    }

    /// `time_s,n,internal_state` rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time_s,n,internal_state\n");
        for e in &self.events {
            out.push_str(&format!("{:e},{},{}\n", e.time_s, e.n, e.state.as_str()));
        }
        out
    }
}

struct Walker<'a> {
    rng: ChaCha8Rng,
    heating: Option<Exp<f64>>,
    next_heat: f64,
    t: f64,
    n: u64,
    state: InternalState,
    t_max: f64,
    events: &'a mut Vec<Event>,
}

impl Walker<'_> {
    fn record(&mut self) {
        self.events.push(Event {
            time_s: self.t,
            n: self.n,
            state: self.state,
        });
    }

    /// Moves the clock to `target`, applying heating events on the way.
    fn advance_to(&mut self, target: f64) {
        let Some(heating) = self.heating else {
            self.t = target;
            return;
        };
        while self.next_heat < target {
            self.t = self.next_heat;
            self.n += 1;
            self.record();
            self.next_heat += heating.sample(&mut self.rng);
        }
        self.t = target;
    }
}

/// Runs one stochastic trajectory from `cfg.n_initial` (ion in S) to `cfg.t_max_s`.
pub fn simulate_trajectory(cfg: &CycleConfig) -> Result<CoolingTrajectory> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let heating = if cfg.heating_rate > 0.0 {
        Some(Exp::new(cfg.heating_rate).map_err(|e| invalid(e.to_string()))?)
    } else {
        None
    };
    let excitation = Exp::new(cfg.gamma_s).map_err(|e| invalid(e.to_string()))?;
    let next_heat = match heating {
        Some(h) => h.sample(&mut rng),
        None => f64::INFINITY,
    };

    let mut events = Vec::new();
    let mut w = Walker {
        rng,
        heating,
        next_heat,
        t: 0.0,
        n: cfg.n_initial,
        state: InternalState::S,
        t_max: cfg.t_max_s,
        events: &mut events,
    };
    w.record();

    'cycles: loop {
        let pulse_end = w.t + cfg.step_i_duration_s;
        if pulse_end >= w.t_max {
            w.advance_to(w.t_max);
            break;
        }
        w.advance_to(pulse_end);
        let p = cfg.transfer.probability(w.n);
        let transferred = if p >= 1.0 {
            true
        } else if p > 0.0 {
            w.rng.random::<f64>() < p
        } else {
            false
        };
        if !transferred {
            continue;
        }
        w.n -= 1;
        w.state = InternalState::D;
        w.record();

        loop {
            let excite_at = w.t + excitation.sample(&mut w.rng);
            if excite_at >= w.t_max {
                w.advance_to(w.t_max);
                break 'cycles;
            }
            w.advance_to(excite_at);
            if w.rng.random::<f64>() < cfg.eta_sp {
                w.state = InternalState::S;
                w.record();
                break;
            }
            w.state = InternalState::DecayedToD;
            w.record();
        }
    }

    let final_n = w.n;
    let mut traj = CoolingTrajectory {
        config: cfg.clone(),
        events,
        final_n,
        late_mean_n: 0.0,
    };
    traj.late_mean_n = traj.time_average(0.75 * cfg.t_max_s, cfg.t_max_s);
    Ok(traj)
}

/// Runs `count` trajectories with seeds `cfg.seed, cfg.seed + 1, ...` in parallel.
pub fn run_ensemble(cfg: &CycleConfig, count: usize) -> Result<Vec<CoolingTrajectory>> {
    cfg.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            simulate_trajectory(&CycleConfig {
                seed: cfg.seed.wrapping_add(i),
                ..cfg.clone()
            })
        })
        .collect()
}

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// Number of standard errors separating the estimate from `target`.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn ci95(&self) -> (f64, f64) {
        (
            self.value - 1.96 * self.std_error,
            self.value + 1.96 * self.std_error,
        )
    }
}

/// Grid-resampled ensemble statistics.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    pub trajectories: usize,
    pub times_s: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub variance_n: Vec<f64>,
    /// Mean over trajectories of the last-quarter time average.
    pub steady_state_n: Estimate,
    /// Least-squares slope of n(t) from the end of the first pulse until the
    /// mean has covered 20% of its drop.
    pub initial_slope: Estimate,
    pub slope_window_s: (f64, f64),
}

/// Least-squares slope of `y` against `x`.
fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn ensemble_stats(
    trajectories: &[CoolingTrajectory],
    grid_points: usize,
) -> Result<EnsembleStats> {
    if trajectories.len() < 2 {
        return Err(invalid(
            "ensemble statistics need at least two trajectories",
        ));
    }
    if grid_points < 10 {
        return Err(invalid("ensemble grid needs at least 10 points"));
    }
    let reference = &trajectories[0].config;
    if let Some(bad) = trajectories
        .iter()
        .find(|t| !t.config.same_physics(reference))
    {
        return Err(Error::Mismatch(format!(
            "trajectory with seed {} was run with a different configuration",
            bad.seed()
        )));
    }
    let times = crate::spectrum::linear_grid(0.0, reference.t_max_s, grid_points);
    let samples: Vec<Vec<f64>> = trajectories.iter().map(|t| t.sample(&times)).collect();
    let count = samples.len() as f64;
    let mean: Vec<f64> = (0..grid_points)
        .map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / count)
        .collect();
    let variance: Vec<f64> = (0..grid_points)
        .map(|i| {
            samples
                .iter()
                .map(|s| (s[i] - mean[i]).powi(2))
                .sum::<f64>()
                / (count - 1.0)
        })
        .collect();

    let late: Vec<f64> = trajectories.iter().map(|t| t.late_mean_n).collect();
    let steady = Estimate::from_samples(&late);

    // the first pulse removes a phonon at exactly τ_I, so the linear regime
    // starts after it
    let start = times
        .partition_point(|&t| t <= reference.step_i_duration_s)
        .min(grid_points - 3);
    let drop = 0.2 * (mean[0] - steady.value);
    let end = if drop > 0.0 {
        mean.iter()
            .position(|&m| m <= mean[0] - drop)
            .unwrap_or(grid_points - 1)
    } else {
        grid_points / 5
    }
    .max(start + 2);
    let window = &times[start..=end];
    let slopes: Vec<f64> = samples
        .iter()
        .map(|s| ols_slope(window, &s[start..=end]))
        .collect();

    Ok(EnsembleStats {
        trajectories: trajectories.len(),
        times_s: times.clone(),
        mean_n: mean,
        variance_n: variance,
        steady_state_n: steady,
        initial_slope: Estimate::from_samples(&slopes),
        slope_window_s: (times[start], times[end]),
    })
}

/// Deterministic n(t) from the rate-equation closure.
#[derive(Debug, Clone, Serialize)]
pub struct RateEquationSolution {
    pub rate: f64,
    pub times_s: Vec<f64>,
    pub n: Vec<f64>,
}

/// Integrates `dn/dt = −R·n/(n + ½) + h` with fixed-step RK4, where R is
/// [`CycleConfig::effective_cooling_rate`] and the step is at most `0.01/R`.
pub fn rate_equation_trajectory(cfg: &CycleConfig) -> Result<RateEquationSolution> {
    cfg.validate()?;
    let rate = cfg.effective_cooling_rate();
    let h = cfg.heating_rate;
    let rhs = |n: f64| -rate * n / (n + 0.5) + h;
    let mut dt = cfg.t_max_s / 1000.0;
    if rate > 0.0 {
        dt = dt.min(0.01 / rate);
    }
    let steps = (cfg.t_max_s / dt).ceil() as usize;
    let dt = cfg.t_max_s / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut n = Vec::with_capacity(steps + 1);
    let mut y = cfg.n_initial as f64;
    times.push(0.0);
    n.push(y);
    for i in 1..=steps {
        let k1 = rhs(y);
        let k2 = rhs(y + 0.5 * dt * k1);
        let k3 = rhs(y + 0.5 * dt * k2);
        let k4 = rhs(y + dt * k3);
        y = (y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(0.0);
        times.push(i as f64 * dt);
        n.push(y);
    }
    Ok(RateEquationSolution {
        rate,
        times_s: times,
        n,
    })
}

impl RateEquationSolution {
    /// Linear interpolation in time.
    pub fn n_at(&self, t: f64) -> f64 {
        let i = self
            .times_s
            .partition_point(|&x| x <= t)
            .clamp(1, self.times_s.len() - 1);
        let (t0, t1) = (self.times_s[i - 1], self.times_s[i]);
        let f = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.n[i - 1] + f * (self.n[i] - self.n[i - 1])
    }
}
