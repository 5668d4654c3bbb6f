//! Numerical verification of the stabilization and oscillation hypotheses.
//!
//! Every hypothesis is a bound of the form `ratio(t) <= C`. The constant is
//! fitted as the supremum of the ratio over a verification grid, and a bound
//! is declared to hold when the supremum over the last decade of the grid
//! does not exceed the supremum before it by more than 5%.

use std::fmt;

use serde::Serialize;

use super::profile::SpeedProfile;
use crate::error::{Error, Result};
use crate::quad;

const STABILITY_SLACK: f64 = 1.05;
const GROWTH_FACTOR: f64 = 1.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Hypothesis {
    /// `integral_0^t |a - a_inf| <= Theta(t)`
    H1,
    /// `|a^(k)| <= C_k Xi^-k`
    H2(usize),
    /// `Theta <= C Xi`
    H3,
    /// `Theta^(m-1) integral_t^inf Xi^-m` bounded
    H4,
    /// `Lambda <= C Xi`
    H5,
    /// `Lambda^m Theta^-1 integral_t^inf Xi^-m` bounded
    H6,
    /// `Theta / Lambda` nondecreasing and unbounded
    LambdaGrowth,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::H1 => write!(f, "H1*"),
            Hypothesis::H2(k) => write!(f, "H2*(k={k})"),
            Hypothesis::H3 => write!(f, "H3*"),
            Hypothesis::H4 => write!(f, "H4*"),
            Hypothesis::H5 => write!(f, "H5*"),
            Hypothesis::H6 => write!(f, "H6*"),
            Hypothesis::LambdaGrowth => write!(f, "La-infty"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisRecord {
    pub hypothesis: Hypothesis,
    pub holds: bool,
    /// Supremum of the defining ratio when the bound holds, +inf otherwise.
    pub fitted_constant: f64,
    /// Supremum over the grid regardless of the verdict.
    pub observed_sup: f64,
    pub worst_t: f64,
}

/// Which energy-conservation regime the verified hypotheses support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GecCase {
    /// Stabilization with bounded control.
    I,
    /// First-order oscillation bound with integrable `1/Xi`.
    II,
    /// Full diagonalization regime.
    III,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub records: Vec<HypothesisRecord>,
    /// Fitted constant in `integral_0^t |a - a_inf| <= c Theta_shape(t)`.
    pub theta_scale: f64,
    pub m: usize,
    pub xi_inverse_integrable: bool,
}

impl HypothesisReport {
    pub fn get(&self, h: Hypothesis) -> Option<&HypothesisRecord> {
        self.records.iter().find(|r| r.hypothesis == h)
    }

    pub fn holds(&self, h: Hypothesis) -> bool {
        self.get(h).is_some_and(|r| r.holds)
    }

    pub fn constant(&self, h: Hypothesis) -> Option<f64> {
        self.get(h).map(|r| r.fitted_constant)
    }

    fn derivative_bounds_hold(&self) -> bool {
        (1..=self.m).all(|k| self.holds(Hypothesis::H2(k)))
    }

    pub fn cases(&self, theta_bounded: bool) -> Vec<GecCase> {
        let mut out = Vec::new();
        if self.holds(Hypothesis::H1) && theta_bounded {
            out.push(GecCase::I);
        }
        if self.holds(Hypothesis::H2(1)) && self.xi_inverse_integrable {
            out.push(GecCase::II);
        }
        if self.m >= 2
            && self.holds(Hypothesis::H1)
            && self.derivative_bounds_hold()
            && self.holds(Hypothesis::H3)
            && self.holds(Hypothesis::H4)
        {
            out.push(GecCase::III);
        }
        out
    }

    /// Hypotheses of the lambda-controlled estimate.
    pub fn lambda_regime(&self) -> bool {
        self.m >= 2
            && self.holds(Hypothesis::H1)
            && self.derivative_bounds_hold()
            && self.holds(Hypothesis::H5)
            && self.holds(Hypothesis::H6)
            && self.holds(Hypothesis::LambdaGrowth)
    }
}

/// Sorted sample times used for fitting.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationGrid {
    times: Vec<f64>,
}

impl VerificationGrid {
    pub fn from_times(mut times: Vec<f64>) -> Self {
        times.retain(|t| t.is_finite() && *t >= 0.0);
        times.sort_by(f64::total_cmp);
        times.dedup();
        Self { times }
    }

    /// `linear` points on [0, 1] and `geometric` points on [1, t_max].
    pub fn standard(linear: usize, geometric: usize, t_max: f64) -> Self {
        let mut times: Vec<f64> = (0..linear).map(|i| i as f64 / linear as f64).collect();
        let span = t_max.ln();
        times.extend((0..geometric).map(|i| (span * i as f64 / (geometric - 1) as f64).exp()));
        Self::from_times(times)
    }

    /// Default grid plus 64 points inside every localized window.
    pub fn default_for(profile: &SpeedProfile) -> Self {
        Self::for_horizon(profile, 1e4)
    }

    pub fn for_horizon(profile: &SpeedProfile, t_max: f64) -> Self {
        let mut times = Self::standard(128, 512, t_max).times;
        times.extend(profile.sample_hints(t_max, 64));
        Self::from_times(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

fn record(h: Hypothesis, times: &[f64], ratios: &[f64]) -> HypothesisRecord {
    let (sup, worst_t) = times
        .iter()
        .zip(ratios)
        .fold((0.0_f64, times[0]), |(s, w), (&t, &r)| {
            if r > s || r.is_nan() {
                (if r.is_nan() { f64::INFINITY } else { r }, t)
            } else {
                (s, w)
            }
        });
    let cut = times.last().unwrap() / 10.0;
    let head = times
        .iter()
        .zip(ratios)
        .filter(|(t, _)| **t < cut)
        .map(|(_, r)| *r)
        .fold(0.0_f64, f64::max);
    let tail = times
        .iter()
        .zip(ratios)
        .filter(|(t, _)| **t >= cut)
        .map(|(_, r)| *r)
        .fold(0.0_f64, f64::max);
    let holds = sup.is_finite() && tail <= STABILITY_SLACK * head;
    HypothesisRecord {
        hypothesis: h,
        holds,
        fitted_constant: if holds { sup } else { f64::INFINITY },
        observed_sup: sup,
        worst_t,
    }
}

/// `integral_0^t |a - a_inf|` at each grid time.
pub fn cumulative_deviation(profile: &SpeedProfile, times: &[f64]) -> Result<Vec<f64>> {
    let a_inf = profile.a_inf();
    let f = |s: f64| (profile.value(s) - a_inf).abs();
    let breaks = profile.breakpoints(times.last().copied().unwrap_or(0.0));
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t > prev {
            let tol = 1e-12 * (t - prev).max(1e-3);
            acc += quad::integrate_with_breaks(&f, prev, t, &breaks, tol)?;
            prev = t;
        }
        out.push(acc);
    }
    Ok(out)
}

/// All hypotheses applicable to the profile: H4*/H6* only when m >= 2 and
/// H5*/H6*/La-infty only when a lambda control is attached.
pub fn applicable(profile: &SpeedProfile) -> Vec<Hypothesis> {
    let mut set = vec![Hypothesis::H1];
    set.extend((1..=profile.m()).map(Hypothesis::H2));
    set.push(Hypothesis::H3);
    if profile.m() >= 2 {
        set.push(Hypothesis::H4);
    }
    if profile.lambda().is_some() {
        set.push(Hypothesis::H5);
        if profile.m() >= 2 {
            set.push(Hypothesis::H6);
        }
        set.push(Hypothesis::LambdaGrowth);
    }
    set
}

pub fn verify_hypotheses(profile: &SpeedProfile, grid: &VerificationGrid) -> Result<HypothesisReport> {
    verify_selected(profile, grid, &applicable(profile))
}

pub fn verify_selected(
    profile: &SpeedProfile,
    grid: &VerificationGrid,
    which: &[Hypothesis],
) -> Result<HypothesisReport> {
    let times = grid.times();
    if times.len() < 2 {
        return Err(Error::InvalidParameter("verification grid needs two times".into()));
    }
    let m = profile.m();
    for h in which {
        match h {
            Hypothesis::H4 | Hypothesis::H6 if m < 2 => {
                return Err(Error::SmoothnessTooLow { m, what: "H4*/H6*" })
            }
            Hypothesis::H5 | Hypothesis::H6 | Hypothesis::LambdaGrowth if profile.lambda().is_none() => {
                return Err(Error::MissingLambda)
            }
            Hypothesis::H2(k) if *k == 0 || *k > m => {
                return Err(Error::DerivativeOrder {
                    requested: *k,
                    available: m,
                })
            }
            _ => {}
        }
    }

    let theta = profile.theta();
    let xi = profile.xi();
    let deviation = cumulative_deviation(profile, times)?;
    let h1_ratios: Vec<f64> = times
        .iter()
        .zip(&deviation)
        .map(|(&t, &d)| d / theta.value(t))
        .collect();
    let h1 = record(Hypothesis::H1, times, &h1_ratios);
    let theta_scale = h1.observed_sup;
    // a vanishing deviation leaves the shape itself as the control
    let theta_eff = theta.with_scale(if theta_scale > 0.0 { theta_scale } else { 1.0 });
    let mf = m as f64;
    let tails: Option<Vec<f64>> = if which.iter().any(|h| matches!(h, Hypothesis::H4 | Hypothesis::H6)) {
        Some(
            times
                .iter()
                .map(|&t| xi.tail_integral_inv_pow(t, mf))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let jets: Option<Vec<Vec<f64>>> = if which.iter().any(|h| matches!(h, Hypothesis::H2(_))) {
        Some(
            times
                .iter()
                .map(|&t| profile.jet(t, m).map(|j| j.derivatives()))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };

    let mut records = Vec::new();
    for &h in which {
        let ratios: Vec<f64> = match h {
            Hypothesis::H1 => {
                records.push(h1.clone());
                continue;
            }
            Hypothesis::H2(k) => {
                let jets = jets.as_ref().expect("jets computed for H2*");
                times
                    .iter()
                    .zip(jets)
                    .map(|(&t, d)| d[k].abs() * xi.value(t).powi(k as i32))
                    .collect()
            }
            Hypothesis::H3 => times.iter().map(|&t| theta_eff.value(t) / xi.value(t)).collect(),
            Hypothesis::H4 => {
                let tails = tails.as_ref().expect("tails computed for H4*");
                times
                    .iter()
                    .zip(tails)
                    .map(|(&t, &tail)| theta_eff.value(t).powf(mf - 1.0) * tail)
                    .collect()
            }
            Hypothesis::H5 => {
                let lambda = profile.lambda().ok_or(Error::MissingLambda)?;
                times.iter().map(|&t| lambda.value(t) / xi.value(t)).collect()
            }
            Hypothesis::H6 => {
                let lambda = profile.lambda().ok_or(Error::MissingLambda)?;
                let tails = tails.as_ref().expect("tails computed for H6*");
                times
                    .iter()
                    .zip(tails)
                    .map(|(&t, &tail)| lambda.value(t).powf(mf) / theta_eff.value(t) * tail)
                    .collect()
            }
            Hypothesis::LambdaGrowth => {
                let lambda = profile.lambda().ok_or(Error::MissingLambda)?;
                records.push(lambda_growth(times, |t| theta_eff.value(t) / lambda.value(t)));
                continue;
            }
        };
        records.push(record(h, times, &ratios));
    }
    let xi_inverse_integrable = xi.tail_integral_inv_pow(0.0, 1.0)?.is_finite();
    Ok(HypothesisReport {
        records,
        theta_scale,
        m,
        xi_inverse_integrable,
    })
}

fn lambda_growth(times: &[f64], ratio: impl Fn(f64) -> f64) -> HypothesisRecord {
    let values: Vec<f64> = times.iter().map(|&t| ratio(t)).collect();
    let mut worst_t = times[0];
    let mut monotone = true;
    for (w, t) in values.windows(2).zip(&times[1..]) {
        if w[1] < w[0] * (1.0 - 1e-12) {
            monotone = false;
            worst_t = *t;
            break;
        }
    }
    let t_last = *times.last().unwrap();
    let last = *values.last().unwrap();
    let decade_ago = ratio(t_last / 10.0);
    let growing = last >= GROWTH_FACTOR * decade_ago;
    let holds = monotone && growing;
    HypothesisRecord {
        hypothesis: Hypothesis::LambdaGrowth,
        holds,
        fitted_constant: if holds { last } else { f64::INFINITY },
        observed_sup: last,
        worst_t: if monotone { t_last } else { worst_t },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_satisfies_everything() {
        let p = SpeedProfile::constant(1.0, 2).unwrap();
        let report = verify_hypotheses(&p, &VerificationGrid::default_for(&p)).unwrap();
        for r in &report.records {
            assert!(r.holds, "{} failed", r.hypothesis);
        }
        assert_eq!(report.constant(Hypothesis::H1), Some(0.0));
        assert_eq!(report.constant(Hypothesis::H2(1)), Some(0.0));
    }

    #[test]
    fn stabilization_rule() {
        let times: Vec<f64> = (0..=400).map(|i| 10f64.powf(i as f64 / 100.0)).collect();
        let flat: Vec<f64> = times.iter().map(|t| 1.0 - 1.0 / t).collect();
        assert!(record(Hypothesis::H3, &times, &flat).holds);
        let growing: Vec<f64> = times.iter().map(|t| t.sqrt()).collect();
        let r = record(Hypothesis::H3, &times, &growing);
        assert!(!r.holds);
        assert!(r.fitted_constant.is_infinite());
        assert_eq!(r.worst_t, 1e4);
    }

    #[test]
    fn requests_are_validated() {
        let p = SpeedProfile::constant(1.0, 1).unwrap();
        let grid = VerificationGrid::standard(4, 8, 10.0);
        assert!(matches!(
            verify_selected(&p, &grid, &[Hypothesis::H4]),
            Err(Error::SmoothnessTooLow { .. })
        ));
        assert!(matches!(
            verify_selected(&p, &grid, &[Hypothesis::H5]),
            Err(Error::MissingLambda)
        ));
    }
}
