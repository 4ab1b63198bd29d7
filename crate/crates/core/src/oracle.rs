//! Reference computations that reach the same numbers as the main modules by a
//! different route. The self-test suite and the integration tests compare
//! against these.

use std::f64::consts::PI;

use crate::constants::{BOLTZMANN, HBAR};
use crate::cooling_sim::CycleConfig;
use crate::error::{invalid, Error, Result};
use crate::radiometry::{SpectralFamily, Temperature};

/// Composite Simpson estimate of `∫₀^∞ S(ω) dω` for the single-mode PSD,
/// written as `(k_B T)²/(πħ) ∫₀^X x/(eˣ − 1) dx` with the tail past X = 60
/// dropped (it is below 10⁻²⁴ of the total).
pub fn total_power_simpson(t: Temperature, panels: usize) -> Result<f64> {
    if t.is_infinite() || t.kelvin() <= 0.0 {
        return Err(invalid(
            "Simpson total power needs a finite positive temperature",
        ));
    }
    let panels = panels.max(2) + panels % 2;
    let upper = 60.0;
    let h = upper / panels as f64;
    let f = |x: f64| if x == 0.0 { 1.0 } else { x / x.exp_m1() };
    let mut sum = f(0.0) + f(upper);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    let dimensionless = sum * h / 3.0;
    let kt = BOLTZMANN * t.kelvin();
    Ok(kt * kt / (PI * HBAR) * dimensionless)
}

/// Peak wavelength found by scanning a dense grid, then refining with a
/// parabola through the best sample and its neighbours.
pub fn scan_peak_nm(
    family: SpectralFamily,
    t: Temperature,
    lo_nm: f64,
    hi_nm: f64,
    points: usize,
) -> Result<f64> {
    if points < 3 || !(lo_nm < hi_nm) {
        return Err(invalid("peak scan needs at least 3 points and lo < hi"));
    }
    let step = (hi_nm - lo_nm) / (points - 1) as f64;
    let values = (0..points)
        .map(|i| family.evaluate(lo_nm + i as f64 * step, t))
        .collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    if best == 0 || best == points - 1 {
        return Err(Error::NoConvergence(format!(
            "maximum lies on the scan edge at {:.1} nm",
            lo_nm + best as f64 * step
        )));
    }
    let (a, b, c) = (values[best - 1], values[best], values[best + 1]);
    let offset = 0.5 * (a - c) / (a - 2.0 * b + c);
    Ok(lo_nm + (best as f64 + offset) * step)
}

/// Phonon-number slope far above the ground state from renewal theory: one
/// phonon per cycle of mean length `τ_I/p + 1/(Γη_SP)`, heating adds `h`.
pub fn renewal_slope(cfg: &CycleConfig) -> f64 {
    let cycle =
        cfg.step_i_duration_s / cfg.transfer.asymptotic() + 1.0 / (cfg.gamma_s * cfg.eta_sp);
    cfg.heating_rate - 1.0 / cycle
}

/// Stationary solution of the cycle-to-cycle Markov chain.
#[derive(Debug, Clone)]
pub struct MarkovSteadyState {
    /// Time-averaged phonon number.
    pub mean_n: f64,
    /// Distribution of n at the start of a cycle.
    pub cycle_start: Vec<f64>,
    /// Mean cycle duration under the stationary distribution, s.
    pub mean_cycle_s: f64,
    /// Probability mass in the last retained state.
    pub truncation_mass: f64,
}

/// Time-averaged steady-state phonon number of the cooling cycle computed
/// from the embedded chain of cycle-start states `0..=n_max`.
///
/// A cycle that starts at n sees `j ~ Poisson(hτ_I)` heating events during
/// step I. At `m = n + j` the pulse succeeds with probability `p_I(m)`; the
/// ion then waits an `Exp(Γη_SP)` time in step II, during which the number of
/// heating events is geometric with ratio `h/(h + Γη_SP)`. Otherwise the next
/// cycle starts at m. The time average follows from renewal–reward:
/// `Σπ(n)·reward(n) / Σπ(n)·length(n)`.
pub fn markov_steady_state(cfg: &CycleConfig, n_max: usize) -> Result<MarkovSteadyState> {
    cfg.validate()?;
    if n_max < 2 {
        return Err(invalid("Markov oracle needs n_max >= 2"));
    }
    let h = cfg.heating_rate;
    let tau = cfg.step_i_duration_s;
    let r = cfg.gamma_s * cfg.eta_sp;
    if r == 0.0 {
        return Err(invalid("no cooling: Γη_SP = 0"));
    }
    let size = n_max + 1;
    let poisson = truncated_pmf(size, |k, prev| {
        if k == 0 {
            (-h * tau).exp()
        } else {
            prev * h * tau / k as f64
        }
    });
    let q = h / (h + r);
    let geometric = truncated_pmf(size, |k, prev| if k == 0 { 1.0 - q } else { prev * q });

    let mut transition = vec![vec![0.0; size]; size];
    let mut reward = vec![0.0; size];
    let mut length = vec![0.0; size];
    for n in 0..size {
        reward[n] = n as f64 * tau + h * tau * tau / 2.0;
        length[n] = tau;
        for (j, &pj) in poisson.iter().enumerate() {
            if pj == 0.0 {
                continue;
            }
            let m = (n + j).min(n_max);
            let p = cfg.transfer.probability(m as u64);
            transition[n][m] += pj * (1.0 - p);
            if p > 0.0 {
                for (k, &gk) in geometric.iter().enumerate() {
                    transition[n][(m - 1 + k).min(n_max)] += pj * p * gk;
                }
                reward[n] += pj * p * ((m - 1) as f64 / r + h / (r * r));
                length[n] += pj * p / r;
            }
        }
    }

    let pi = stationary_distribution(&transition)?;
    if pi[n_max] > 1e-9 {
        return Err(Error::NoConvergence(format!(
            "stationary mass {:.2e} at n = {n_max}: heating outpaces cooling or n_max is too small",
            pi[n_max]
        )));
    }
    let total_reward: f64 = pi.iter().zip(&reward).map(|(a, b)| a * b).sum();
    let total_length: f64 = pi.iter().zip(&length).map(|(a, b)| a * b).sum();
    Ok(MarkovSteadyState {
        mean_n: total_reward / total_length,
        truncation_mass: pi[n_max],
        cycle_start: pi,
        mean_cycle_s: total_length,
    })
}

/// pmf on `0..size` built by recurrence; the tail is folded into the last entry.
fn truncated_pmf(size: usize, next: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(size);
    let mut prev = 0.0;
    for k in 0..size {
        prev = next(k, prev);
        pmf.push(prev);
    }
    let head: f64 = pmf[..size - 1].iter().sum();
    pmf[size - 1] = (1.0 - head).max(0.0);
    pmf
}

/// Solves `πP = π`, `Σπ = 1` by Gaussian elimination with partial pivoting.
fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let size = p.len();
    // rows of (Pᵀ − I), last row replaced by normalisation
    let mut a: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| p[j][i] - if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut b = vec![0.0; size];
    a[size - 1] = vec![1.0; size];
    b[size - 1] = 1.0;

    for col in 0..size {
        let pivot = (col..size)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::NoConvergence("singular stationary system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..size {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..size {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; size];
    for row in (0..size).rev() {
        let tail: f64 = (row + 1..size).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    // round-off can leave tiny negatives in states with no mass
    for v in &mut x {
        *v = v.max(0.0);
    }
    let norm: f64 = x.iter().sum();
    Ok(x.into_iter().map(|v| v / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooling_sim::TransferProbability;
    use crate::radiometry::q1d_total_power;

    fn cfg(gamma: f64, h: f64, tau: f64) -> CycleConfig {
        CycleConfig {
            gamma_s: gamma,
            eta_sp: 0.74,
            step_i_duration_s: tau,
            transfer: TransferProbability::Ideal,
            heating_rate: h,
            n_initial: 0,
            t_max_s: 10.0,
            seed: 1,
        }
    }

    #[test]
    fn simpson_matches_closed_form() {
        for kelvin in [300.0, 5800.0] {
            let t = Temperature::new(kelvin).unwrap();
            let p = total_power_simpson(t, 20_000).unwrap();
            let exact = q1d_total_power(t).unwrap();
            assert!((p / exact - 1.0).abs() < 1e-10, "{p} vs {exact}");
        }
    }

    #[test]
    fn scan_finds_planck_peak() {
        let t = Temperature::new(5800.0).unwrap();
        let peak = scan_peak_nm(SpectralFamily::ThreeDPerLambda, t, 200.0, 2000.0, 4001).unwrap();
        assert!((peak - 499.6).abs() < 0.5, "{peak}");
        assert!(scan_peak_nm(SpectralFamily::Q1dPerOmega, t, 300.0, 1000.0, 101).is_err());
    }

    #[test]
    fn no_heating_concentrates_on_ground_state() {
        let s = markov_steady_state(&cfg(11.0, 0.0, 1e-3), 50).unwrap();
        assert!((s.cycle_start[0] - 1.0).abs() < 1e-12);
        assert!(s.mean_n.abs() < 1e-12);
        assert!((s.mean_cycle_s - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn weak_heating_expansion() {
        // a phonon arriving while idle waits on average τ/2 for the next pulse;
        // heating during step II adds h/r² per removal
        let c = cfg(50.0, 0.05, 1e-3);
        let r = 50.0 * 0.74;
        let s = markov_steady_state(&c, 200).unwrap();
        let approx = 0.05 * 1e-3 / 2.0 + 0.05 * 0.05 / (r * r);
        assert!(
            (s.mean_n / approx - 1.0).abs() < 0.01,
            "{} vs {approx}",
            s.mean_n
        );
        assert!(s.truncation_mass < 1e-12);
    }

    #[test]
    fn distribution_is_normalised() {
        let s = markov_steady_state(&cfg(11.0, 3.0, 0.02), 200).unwrap();
        assert!((s.cycle_start.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.cycle_start.iter().all(|&p| p >= 0.0));
        assert!(s.mean_n > 0.0 && s.mean_n < 2.0);
    }

    #[test]
    fn unstable_cycle_is_rejected() {
        assert!(matches!(
            markov_steady_state(&cfg(11.0, 8.0, 0.05), 200),
            Err(Error::NoConvergence(_))
        ));
    }

    #[test]
    fn renewal_slope_for_reference_cycle() {
        let s = renewal_slope(&cfg(11.0, 0.0, 1e-3));
        let r = 11.0 * 0.74;
        assert!((s + r / (1.0 + r * 1e-3)).abs() < 1e-12);
    }
}
