//! Two-sided energy bound certificates built from the zone splitting and
//! the diagonalization chain, and their comparison with integrated modes.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::chain::{norm_equivalence, DiagChain};
use super::zones::{ZoneFlavor, ZonePartition};
use crate::error::{Error, Result};
use crate::ode::StepControl;
use crate::quad;
use crate::solver::{self, EnergyMode};
use crate::speed::{GecCase, Hypothesis, HypothesisReport, PowerLog, SpeedProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateOptions {
    pub n_start: f64,
    pub n_cap: f64,
    /// Envelopes are asserted on [0, horizon].
    pub horizon: f64,
    /// Geometric samples per mode on the hyperbolic zone.
    pub zone_samples: usize,
    /// Samples per localized window of the profile.
    pub window_samples: usize,
    pub quad_tol: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            n_start: 16.0,
            n_cap: 65536.0,
            horizon: 1e3,
            zone_samples: 48,
            window_samples: 32,
            quad_tol: 1e-8,
        }
    }
}

/// Bound for one frequency: `lower <= E(t)/E(0) <= upper` on [0, horizon].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeBound {
    pub xi_norm: f64,
    pub t_xi: f64,
    pub ln_lower: f64,
    pub ln_upper: f64,
    /// exponent of the pseudo-differential zone estimate
    pub zone_exponent: f64,
    /// `2 * integral |r_m|` over the hyperbolic zone including the tail bound
    pub remainder: f64,
    pub max_coupling_sq: f64,
    pub max_delta_sq: f64,
    pub max_eigen_residual: f64,
    /// extreme squared singular values of `M_1 ... M_(m-1)` over the samples
    pub transform_range: (f64, f64),
    pub measured: Option<(f64, f64)>,
}

impl ModeBound {
    pub fn lower(&self) -> f64 {
        self.ln_lower.exp()
    }

    pub fn upper(&self) -> f64 {
        self.ln_upper.exp()
    }

    /// Measured extremes inside the envelope, allowing `slack` relative
    /// integration error.
    pub fn passes(&self, slack: f64) -> Option<bool> {
        self.measured.map(|(lo, hi)| {
            lo.ln() >= self.ln_lower - slack && hi.ln() <= self.ln_upper + slack
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub flavor: ZoneFlavor,
    pub n_used: f64,
    pub theta_scale: f64,
    pub m: usize,
    pub horizon: f64,
    /// fitted `sup |r_m| |xi|^(m-1) Xi^m` over the hyperbolic samples
    pub remainder_constant: f64,
    /// zone points at which the chain was evaluated
    pub chain_points: usize,
    pub modes: Vec<ModeBound>,
}

const PASS_SLACK: f64 = 1e-8;

impl Certificate {
    pub fn all_pass(&self) -> bool {
        self.modes.iter().all(|m| m.passes(PASS_SLACK).unwrap_or(false))
    }

    pub fn max_eigen_residual(&self) -> f64 {
        self.modes.iter().map(|m| m.max_eigen_residual).fold(0.0, f64::max)
    }

    /// Integrates every certified mode over `times` from several initial
    /// directions and records the extreme energy ratios.
    pub fn measure(&mut self, profile: &SpeedProfile, times: &[f64], control: &StepControl) -> Result<()> {
        let measured: Vec<(f64, f64)> = self
            .modes
            .par_iter()
            .map(|m| measured_ratio_range(profile, m.xi_norm, times, control))
            .collect::<Result<_>>()?;
        for (mode, range) in self.modes.iter_mut().zip(measured) {
            mode.measured = Some(range);
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record([
            "xi_norm",
            "t_xi",
            "N_used",
            "lower",
            "upper",
            "measured_min",
            "measured_max",
            "pass",
            "ln_lower",
            "ln_upper",
        ])
        .map_err(io)?;
        for m in &self.modes {
            let (lo, hi) = m.measured.unwrap_or((f64::NAN, f64::NAN));
            w.write_record([
                format!("{:e}", m.xi_norm),
                format!("{:e}", m.t_xi),
                format!("{}", self.n_used),
                format!("{:e}", m.lower()),
                format!("{:e}", m.upper()),
                format!("{lo:e}"),
                format!("{hi:e}"),
                m.passes(PASS_SLACK).map_or("na".to_string(), |p| p.to_string()),
                format!("{:e}", m.ln_lower),
                format!("{:e}", m.ln_upper),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
    }
}

/// Extreme values of `E(t)/E(0)` over `times` for three initial directions:
/// displacement only, velocity only, and a forward travelling wave.
pub fn measured_ratio_range(
    profile: &SpeedProfile,
    xi_norm: f64,
    times: &[f64],
    control: &StepControl,
) -> Result<(f64, f64)> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let speed = profile.value(0.0) * xi_norm;
    let mut inits = vec![(zero, one)];
    if xi_norm > 0.0 {
        inits.push((one, zero));
        inits.push((one, Complex64::new(0.0, speed)));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for init in inits {
        let states = solver::mode_states(profile, xi_norm, init, times, control)?;
        let e0 = solver::energy_density(&states[0], xi_norm, profile, EnergyMode::Actual);
        for s in &states {
            let r = solver::energy_density(s, xi_norm, profile, EnergyMode::Actual) / e0;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((lo, hi))
}

/// Effective stabilization control `c * Theta_shape`.
pub fn effective_theta(profile: &SpeedProfile, report: &HypothesisReport) -> PowerLog {
    profile.theta().with_scale(report.theta_scale)
}

struct ZoneScan {
    chains: Vec<DiagChain>,
    failure: Option<String>,
}

fn zone_times(profile: &SpeedProfile, t_xi: f64, opts: &CertificateOptions) -> Vec<f64> {
    let top = (10.0 * opts.horizon).max(10.0 * t_xi.max(1.0));
    let n = opts.zone_samples.max(2);
    let (lo, hi) = ((1.0 + t_xi).ln(), (1.0 + top).ln());
    let mut times: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp() - 1.0)
        .collect();
    times.extend(
        profile
            .sample_hints(top, opts.window_samples)
            .into_iter()
            .filter(|&t| t >= t_xi),
    );
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn scan_zone(profile: &SpeedProfile, xi_norm: f64, t_xi: f64, opts: &CertificateOptions) -> ZoneScan {
    let mut chains = Vec::new();
    if !t_xi.is_finite() {
        return ZoneScan { chains, failure: None };
    }
    for t in zone_times(profile, t_xi, opts) {
        let chain = match DiagChain::build(profile, xi_norm, t) {
            Ok(c) => c,
            Err(e) => {
                return ZoneScan {
                    chains,
                    failure: Some(format!("|xi| = {xi_norm}, t = {t}: {e}")),
                }
            }
        };
        let coupling = chain.max_coupling_sq().max(chain.last.coupling_sq());
        if coupling > 0.25 || chain.max_delta_sq() > 0.5 {
            return ZoneScan {
                chains,
                failure: Some(format!(
                    "|xi| = {xi_norm}, t = {t}: (|r|/phi_im)^2 = {coupling:.3e}, |delta|^2 = {:.3e}",
                    chain.max_delta_sq()
                )),
            };
        }
        chains.push(chain);
    }
    ZoneScan { chains, failure: None }
}

fn check_preconditions(profile: &SpeedProfile, report: &HypothesisReport, flavor: ZoneFlavor) -> Result<()> {
    match flavor {
        ZoneFlavor::Theta => {
            let bounded = profile.theta().is_bounded();
            if !report.holds(Hypothesis::H1) {
                return Err(Error::Hypothesis("H1*".into()));
            }
            if !bounded && !report.cases(bounded).contains(&GecCase::III) {
                return Err(Error::Hypothesis("H2*-H4*".into()));
            }
            Ok(())
        }
        ZoneFlavor::Lambda => {
            if profile.lambda().is_none() {
                return Err(Error::MissingLambda);
            }
            if !report.lambda_regime() {
                return Err(Error::Hypothesis("H1*, H2*, H5*, H6*, La-infty".into()));
            }
            Ok(())
        }
    }
}

/// Builds the envelopes for the given frequencies. The zone constant starts
/// at `n_start` and doubles until the smallness conditions
/// `(|r_k|/phi_kIm)^2 <= 1/4` and `|delta_k|^2 <= 1/2` hold at every
/// hyperbolic-zone sample of every mode.
pub fn bound_certificate(
    profile: &SpeedProfile,
    report: &HypothesisReport,
    flavor: ZoneFlavor,
    xis: &[f64],
    dim: usize,
    opts: &CertificateOptions,
) -> Result<Certificate> {
    check_preconditions(profile, report, flavor)?;
    let theta = effective_theta(profile, report);
    let zone_control = match flavor {
        ZoneFlavor::Theta => theta,
        ZoneFlavor::Lambda => profile.lambda().ok_or(Error::MissingLambda)?,
    };
    let mut n = opts.n_start;
    let (zones, scans) = loop {
        let zones = ZonePartition::new(zone_control, n, dim, flavor);
        let scans: Vec<ZoneScan> = xis
            .par_iter()
            .map(|&x| scan_zone(profile, x, zones.boundary(x), opts))
            .collect();
        match scans.iter().find_map(|s| s.failure.clone()) {
            None => break (zones, scans),
            Some(condition) => {
                n *= 2.0;
                if n > opts.n_cap {
                    return Err(Error::Escalation {
                        cap: opts.n_cap,
                        condition,
                    });
                }
            }
        }
    };

    let m = profile.m();
    let xi_control = profile.xi();
    let remainder_constant = scans
        .iter()
        .zip(xis)
        .flat_map(|(s, &x)| {
            s.chains.iter().map(move |c| {
                c.last.r_value().norm() * x.powi(m as i32 - 1) * xi_control.value(c.t).powi(m as i32)
            })
        })
        .fold(0.0, f64::max);
    let tail = xi_control.tail_integral_inv_pow(opts.horizon, m as f64)?;
    let (a0, a1, a_inf) = (profile.a0(), profile.a1(), profile.a_inf());
    let ln_conv = (1f64.max((a_inf / a0).powi(2)) / 1f64.min((a_inf / a1).powi(2))).ln();
    let (k_lo, k_hi) = norm_equivalence(m);
    let ln_k = (k_hi / k_lo).ln();
    let chain_points = scans.iter().map(|s| s.chains.len()).sum();

    let modes: Vec<ModeBound> = xis
        .par_iter()
        .zip(scans.par_iter())
        .map(|(&xi_norm, scan)| {
            let t_xi = zones.boundary(xi_norm);
            let psi_end = t_xi.min(opts.horizon);
            let zone_exponent = 2.0 * a1 / a0 * xi_norm * theta.value(psi_end);
            let mut ln_upper = ln_conv + zone_exponent;
            let mut ln_lower = -ln_conv - zone_exponent;
            let mut remainder = 0.0;
            if t_xi < opts.horizon {
                let start = DiagChain::build(profile, xi_norm, t_xi)?;
                let r_abs = |s: f64| {
                    DiagChain::build(profile, xi_norm, s)
                        .map(|c| c.last.r_value().norm())
                        .unwrap_or(f64::NAN)
                };
                let integral = quad::integrate_with_breaks(
                    &r_abs,
                    t_xi,
                    opts.horizon,
                    &profile.breakpoints(opts.horizon),
                    opts.quad_tol,
                )?;
                remainder = 2.0 * integral
                    + 2.0 * remainder_constant * xi_norm.powi(1 - m as i32) * tail;
                let ln_w = start.log_w_sum();
                let levels = start.levels.len() as f64;
                let a_start = profile.value(t_xi);
                let up = ln_k + (a1 / a_start).ln() + ln_w + levels * 2f64.ln() + remainder;
                let down = -ln_k + (a0 / a_start).ln() + ln_w - remainder;
                ln_upper += up.max(0.0);
                ln_lower += down.min(0.0);
            }
            let transform_range = scan
                .chains
                .iter()
                .map(|c| super::chain::singular_values_sq(&c.transform()))
                .fold((f64::INFINITY, 0.0_f64), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
            Ok(ModeBound {
                xi_norm,
                t_xi,
                ln_lower,
                ln_upper,
                zone_exponent,
                remainder,
                max_coupling_sq: scan
                    .chains
                    .iter()
                    .map(|c| c.max_coupling_sq().max(c.last.coupling_sq()))
                    .fold(0.0, f64::max),
                max_delta_sq: scan.chains.iter().map(|c| c.max_delta_sq()).fold(0.0, f64::max),
                max_eigen_residual: scan
                    .chains
                    .iter()
                    .map(|c| c.max_eigen_residual())
                    .fold(0.0, f64::max),
                transform_range,
                measured: None,
            })
        })
        .collect::<Result<_>>()?;

    Ok(Certificate {
        flavor,
        n_used: n,
        theta_scale: report.theta_scale,
        m,
        horizon: opts.horizon,
        remainder_constant,
        chain_points,
        modes,
    })
}

/// Uniform envelope `exp(+-(4 sqrt d a1/a0) sup Theta)` for a bounded
/// stabilization control, as `(ln lower, ln upper)`.
pub fn uniform_envelope(profile: &SpeedProfile, report: &HypothesisReport, dim: usize) -> Result<(f64, f64)> {
    if !profile.theta().is_bounded() || !report.holds(Hypothesis::H1) {
        return Err(Error::Hypothesis("H1* with bounded control".into()));
    }
    let sup_theta = effective_theta(profile, report).value(0.0);
    let e = 4.0 * (dim as f64).sqrt() * profile.a1() / profile.a0() * sup_theta;
    Ok((-e, e))
}

/// Gronwall envelope `exp(+-(2 C_1/a0) |1/Xi|_L1)` as `(ln lower, ln upper)`.
pub fn gronwall_envelope(profile: &SpeedProfile, report: &HypothesisReport) -> Result<(f64, f64)> {
    if !report.holds(Hypothesis::H2(1)) || !report.xi_inverse_integrable {
        return Err(Error::Hypothesis("H2*(k=1) with integrable 1/Xi".into()));
    }
    let c1 = report.constant(Hypothesis::H2(1)).unwrap_or(f64::INFINITY);
    let l1 = profile.xi().tail_integral_inv_pow(0.0, 1.0)?;
    let e = 2.0 * c1 / profile.a0() * l1;
    Ok((-e, e))
}

/// Envelope of the lambda-controlled estimate in the form
/// `E(t)/E(0) <= C exp(2|xi| Theta(Lambda^-1(N0/|xi|)))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaBound {
    pub n0: f64,
    /// `ln C`, the largest `ln upper - exponent` over nonzero frequencies
    pub ln_constant: f64,
    /// `2|xi| Theta(Lambda^-1(N0/|xi|))` per certified mode
    pub exponents: Vec<f64>,
}

pub fn lambda_exponent(theta: PowerLog, lambda: PowerLog, n0: f64, xi_norm: f64) -> f64 {
    if xi_norm <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * xi_norm * theta.value(lambda.inverse_clamped(n0 / xi_norm))
}

impl Certificate {
    /// Converts a lambda-flavour certificate into the exponential form with
    /// `N0 = (a1/a0) N`.
    pub fn lambda_bound(&self, profile: &SpeedProfile) -> Result<LambdaBound> {
        let lambda = profile.lambda().ok_or(Error::MissingLambda)?;
        if self.flavor != ZoneFlavor::Lambda {
            return Err(Error::InvalidParameter("certificate is not lambda-based".into()));
        }
        let theta = profile.theta().with_scale(self.theta_scale);
        let n0 = profile.a1() / profile.a0() * self.n_used;
        let exponents: Vec<f64> = self
            .modes
            .iter()
            .map(|m| lambda_exponent(theta, lambda, n0, m.xi_norm))
            .collect();
        let ln_constant = self
            .modes
            .iter()
            .zip(&exponents)
            .filter(|(m, _)| m.xi_norm > 0.0)
            .map(|(m, e)| m.ln_upper - e)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(LambdaBound {
            n0,
            ln_constant,
            exponents,
        })
    }
}
