//! Per-frequency integration of `v'' + a(t)^2 |xi|^2 v = 0` and energy
//! assembly over the torus grid.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Direction, FrequencyPoint, LatticeField, TorusGrid};
use crate::ode::{self, StepControl, Stop};
use crate::speed::SpeedProfile;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeState {
    pub t: f64,
    pub v: Complex64,
    pub vt: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeTrajectory {
    pub freq: FrequencyPoint,
    pub states: Vec<ModeState>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// `|v_t|^2 + a(t)^2 |xi|^2 |v|^2`
    Actual,
    /// same with the limit speed `a_inf`
    Stabilized,
}

pub fn energy_density(state: &ModeState, xi_norm: f64, profile: &SpeedProfile, mode: EnergyMode) -> f64 {
    let a = match mode {
        EnergyMode::Actual => profile.value(state.t),
        EnergyMode::Stabilized => profile.a_inf(),
    };
    state.vt.norm_sqr() + (a * xi_norm).powi(2) * state.v.norm_sqr()
}

/// Output times for energy traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSchedule {
    /// `t = 0` followed by `per_decade` geometric samples per decade from
    /// `t_min` up to `t_max` (always included).
    Geometric { t_min: f64, t_max: f64, per_decade: usize },
    Explicit { times: Vec<f64> },
}

impl SampleSchedule {
    pub fn geometric(t_max: f64) -> Self {
        SampleSchedule::Geometric {
            t_min: 0.01,
            t_max,
            per_decade: 64,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let mut times = match self {
            SampleSchedule::Geometric {
                t_min,
                t_max,
                per_decade,
            } => {
                let mut out = vec![0.0];
                let lo = t_min.log10();
                let hi = t_max.log10();
                let n = ((hi - lo) * *per_decade as f64).floor() as usize;
                out.extend((0..=n).map(|i| 10f64.powf(lo + i as f64 / *per_decade as f64)));
                out.retain(|t| t <= t_max);
                out.push(*t_max);
                out
            }
            SampleSchedule::Explicit { times } => times.clone(),
        };
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn t_max(&self) -> f64 {
        *self.times().last().unwrap_or(&0.0)
    }
}

fn build_stops(samples: &[f64], breaks: &[f64], t0: f64) -> Vec<Stop> {
    let mut stops: Vec<Stop> = samples
        .iter()
        .map(|&t| Stop { t, record: true })
        .chain(breaks.iter().map(|&t| Stop { t, record: false }))
        .filter(|s| s.t >= t0)
        .collect();
    stops.sort_by(|a, b| a.t.total_cmp(&b.t).then(b.record.cmp(&a.record)));
    stops.dedup_by(|later, earlier| later.t == earlier.t);
    stops
}

fn to_real(v: Complex64, vt: Complex64) -> [f64; 4] {
    [v.re, v.im, vt.re, vt.im]
}

fn rhs(profile: &SpeedProfile, xi_norm: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |t, y| {
        let w = (profile.value(t) * xi_norm).powi(2);
        [y[2], y[3], -w * y[0], -w * y[1]]
    }
}

/// Integrates one mode from `t = 0` with `(v, v_t) = init`, recording the
/// state at every sample time (sorted, nonnegative). Window boundaries of
/// finitely smooth profiles are forced step boundaries.
pub fn integrate_mode(
    profile: &SpeedProfile,
    freq: &FrequencyPoint,
    init: (Complex64, Complex64),
    samples: &[f64],
    control: &StepControl,
) -> Result<ModeTrajectory> {
    Ok(ModeTrajectory {
        freq: freq.clone(),
        states: mode_states(profile, freq.xi_norm(), init, samples, control)?,
    })
}

/// Same as [`integrate_mode`] keyed by `|xi|` only.
pub fn mode_states(
    profile: &SpeedProfile,
    xi_norm: f64,
    init: (Complex64, Complex64),
    samples: &[f64],
    control: &StepControl,
) -> Result<Vec<ModeState>> {
    if control.tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if samples.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidParameter("sample times must be nonnegative".into()));
    }
    let t_end = samples.iter().copied().fold(0.0, f64::max);
    let stops = build_stops(samples, &profile.breakpoints(t_end), 0.0);
    let mut states = Vec::with_capacity(samples.len());
    let y0 = to_real(init.0, init.1);
    if samples.contains(&0.0) {
        states.push(ModeState {
            t: 0.0,
            v: init.0,
            vt: init.1,
        });
    }
    let stops: Vec<Stop> = stops.into_iter().filter(|s| s.t > 0.0).collect();
    ode::integrate(rhs(profile, xi_norm), 0.0, y0, &stops, control, |t, y| {
        states.push(ModeState {
            t,
            v: Complex64::new(y[0], y[1]),
            vt: Complex64::new(y[2], y[3]),
        })
    })?;
    Ok(states)
}

/// Transports a state from `state.t` to `t_end` in either direction.
pub fn transport(
    profile: &SpeedProfile,
    xi_norm: f64,
    state: ModeState,
    t_end: f64,
    control: &StepControl,
) -> Result<ModeState> {
    let (lo, hi) = if t_end >= state.t { (state.t, t_end) } else { (t_end, state.t) };
    let mut breaks: Vec<f64> = profile
        .breakpoints(hi)
        .into_iter()
        .filter(|&b| b > lo && b < hi)
        .collect();
    if t_end < state.t {
        breaks.reverse();
    }
    let mut stops: Vec<Stop> = breaks.into_iter().map(|t| Stop { t, record: false }).collect();
    stops.push(Stop {
        t: t_end,
        record: false,
    });
    let y = ode::integrate(
        rhs(profile, xi_norm),
        state.t,
        to_real(state.v, state.vt),
        &stops,
        control,
        |_, _| {},
    )?;
    Ok(ModeState {
        t: t_end,
        v: Complex64::new(y[0], y[1]),
        vt: Complex64::new(y[2], y[3]),
    })
}

/// Energy densities on a torus grid over a set of sample times.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTrace {
    pub grid: TorusGrid,
    pub times: Vec<f64>,
    /// `density[mode][sample]`
    pub density: Vec<Vec<f64>>,
    pub density_inf: Vec<Vec<f64>>,
    /// `E(t)` per sample time.
    pub total: Vec<f64>,
}

impl EnergyTrace {
    /// `density / density(0)` for one mode; `None` when the mode carries no
    /// energy.
    pub fn ratio(&self, mode: usize) -> Option<Vec<f64>> {
        let d = &self.density[mode];
        let e0 = d[0];
        (e0 > 0.0).then(|| d.iter().map(|e| e / e0).collect())
    }

    pub fn write_density_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record(["t", "theta_index", "E_density", "E_density_inf", "E_total"])
            .map_err(io)?;
        for (s, t) in self.times.iter().enumerate() {
            for mode in 0..self.density.len() {
                w.write_record([
                    format!("{t:e}"),
                    mode.to_string(),
                    format!("{:e}", self.density[mode][s]),
                    format!("{:e}", self.density_inf[mode][s]),
                    format!("{:e}", self.total[s]),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
    }

    pub fn write_total_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record(["t", "E_total"]).map_err(io)?;
        for (t, e) in self.times.iter().zip(&self.total) {
            w.write_record([format!("{t:e}"), format!("{e:e}")]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
    }
}

/// `(2pi)^-d` times the torus integral of each column of `density`, by the
/// grid mean; the summation order is fixed.
pub fn total_energy(grid: &TorusGrid, density: &[Vec<f64>]) -> Result<Vec<f64>> {
    if density.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let samples = density.first().map_or(0, Vec::len);
    if density.iter().any(|d| d.len() != samples) {
        return Err(Error::GridMismatch);
    }
    Ok((0..samples)
        .map(|s| grid.mean(density.iter().map(|d| d[s])))
        .collect())
}

/// Lattice-side energy `sum |u1|^2 + a^2 sum_j sum |D_j^+ u0|^2`.
pub fn lattice_energy(u0: &LatticeField, u1: &LatticeField, speed: f64) -> Result<f64> {
    let mut grad = 0.0;
    for axis in 0..u0.dim() {
        grad += u0.difference(axis, Direction::Forward)?.l2_norm_squared();
    }
    Ok(u1.l2_norm_squared() + speed * speed * grad)
}

/// Fourier data of one mode.
pub fn initial_mode(u0: &LatticeField, u1: &LatticeField, freq: &FrequencyPoint) -> (Complex64, Complex64) {
    (u0.dtft(freq.theta()), u1.dtft(freq.theta()))
}

/// Integrates every grid mode and assembles the energy trace. Modes are
/// integrated from unit initial energy and rescaled, which keeps the error
/// control relative for modes with tiny data.
pub fn simulate(
    profile: &SpeedProfile,
    u0: &LatticeField,
    u1: &LatticeField,
    grid: &TorusGrid,
    schedule: &SampleSchedule,
    control: &StepControl,
) -> Result<EnergyTrace> {
    if u0.dim() != grid.dim() || u1.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: u0.dim().max(u1.dim()),
        });
    }
    let mut times = schedule.times();
    if times.first() != Some(&0.0) {
        times.insert(0, 0.0);
    }
    let per_mode: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let freq = grid.point(i);
            let init = initial_mode(u0, u1, &freq);
            mode_densities(profile, &freq, init, &times, control)
        })
        .collect::<Result<_>>()?;
    let (density, density_inf): (Vec<_>, Vec<_>) = per_mode.into_iter().unzip();
    let total = total_energy(grid, &density)?;
    Ok(EnergyTrace {
        grid: *grid,
        times,
        density,
        density_inf,
        total,
    })
}

/// Actual and stabilized densities of one mode at the sample times.
pub fn mode_densities(
    profile: &SpeedProfile,
    freq: &FrequencyPoint,
    init: (Complex64, Complex64),
    times: &[f64],
    control: &StepControl,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let xi_norm = freq.xi_norm();
    let start = ModeState {
        t: 0.0,
        v: init.0,
        vt: init.1,
    };
    let e0 = energy_density(&start, xi_norm, profile, EnergyMode::Actual);
    if e0 == 0.0 {
        return Ok((vec![0.0; times.len()], vec![0.0; times.len()]));
    }
    let norm = e0.sqrt();
    let traj = integrate_mode(profile, freq, (init.0 / norm, init.1 / norm), times, control)?;
    let actual = traj
        .states
        .iter()
        .map(|s| e0 * energy_density(s, xi_norm, profile, EnergyMode::Actual))
        .collect();
    let stabilized = traj
        .states
        .iter()
        .map(|s| e0 * energy_density(s, xi_norm, profile, EnergyMode::Stabilized))
        .collect();
    Ok((actual, stabilized))
}
