//! Propagation speed families with exact derivatives.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use super::chi::{Chi, CosineBump};
use super::control::PowerLog;
use crate::error::{Error, Result};
use crate::jet::{Jet, RealJet};

/// Configuration-level description of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default)]
        lambda: Option<PowerLog>,
    },
    Example1 {
        p: f64,
        q: f64,
        r: f64,
        #[serde(default = "default_m")]
        m: usize,
        chi: Chi,
        #[serde(default)]
        lambda: Option<PowerLog>,
    },
    Example2 {
        eta: f64,
        alpha: f64,
        beta: f64,
        kappa: f64,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default)]
        bump_power: Option<u32>,
    },
}

fn default_m() -> usize {
    2
}

impl ProfileSpec {
    pub fn build(&self) -> Result<SpeedProfile> {
        match *self {
            ProfileSpec::Constant { value, m, lambda } => {
                let profile = SpeedProfile::constant(value, m)?;
                attach_lambda(profile, lambda)
            }
            ProfileSpec::Example1 {
                p,
                q,
                r,
                m,
                chi,
                lambda,
            } => {
                let profile = SpeedProfile::example1(Example1 { p, q, r, chi }, m)?;
                attach_lambda(profile, lambda)
            }
            ProfileSpec::Example2 {
                eta,
                alpha,
                beta,
                kappa,
                m,
                bump_power,
            } => SpeedProfile::example2(
                Example2Params {
                    eta,
                    alpha,
                    beta,
                    kappa,
                    bump: CosineBump {
                        power: bump_power.unwrap_or(m as u32 + 1),
                    },
                },
                m,
            ),
        }
    }
}

fn attach_lambda(profile: SpeedProfile, lambda: Option<PowerLog>) -> Result<SpeedProfile> {
    match lambda {
        Some(l) => profile.with_lambda(l),
        None => Ok(profile),
    }
}

/// `1 + (1+t)^(-p) chi((1+t)^q ln(e+t)^r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example1 {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub chi: Chi,
}

impl Example1 {
    fn phase(&self, t: f64) -> f64 {
        let mut g = 1.0;
        if self.q != 0.0 {
            g *= (1.0 + t).powf(self.q);
        }
        if self.r != 0.0 {
            g *= (E + t).ln().powf(self.r);
        }
        g
    }

    fn value(&self, t: f64) -> f64 {
        1.0 + (1.0 + t).powf(-self.p) * self.chi.value(self.phase(t))
    }

    fn jet(&self, t: f64, order: usize) -> RealJet {
        let x = Jet::variable(t, order);
        let one_plus = x.add_scalar(1.0);
        let mut phase = one_plus.powf(self.q);
        if self.r != 0.0 {
            phase = &phase * &x.add_scalar(E).ln().powf(self.r);
        }
        let decay = one_plus.powf(-self.p);
        (&decay * &self.chi.compose(&phase)).add_scalar(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example2Params {
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub bump: CosineBump,
}

/// Speed equal to 1 except on disjoint windows `[t_j - rho_j, t_j + rho_j]`
/// where `a = sqrt(1 + eps_j b(2 pi nu_j (t - t_j) / rho_j))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example2 {
    params: Example2Params,
    m: usize,
}

/// Window of the second family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpWindow {
    pub index: u32,
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
    pub cycles: f64,
}

impl BumpWindow {
    pub fn start(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn end(&self) -> f64 {
        self.center + self.half_width
    }

    fn frequency(&self) -> f64 {
        2.0 * PI * self.cycles / self.half_width
    }
}

const TOL: f64 = 1e-12;

impl Example2 {
    fn new(params: Example2Params, m: usize) -> Result<Self> {
        let Example2Params {
            eta,
            alpha,
            beta,
            kappa,
            bump,
        } = params;
        let mf = m as f64;
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if m < 2 {
            return bad("the second family needs m >= 2");
        }
        if eta < 3.0 {
            return bad("eta must be at least 3 for the windows to be disjoint");
        }
        if !(alpha > 0.0 && beta > 0.0 && kappa > 0.0) {
            return bad("alpha, beta, kappa must be positive");
        }
        if alpha > kappa + TOL || kappa > 1.0 + TOL {
            return bad("need alpha <= kappa <= 1");
        }
        let lo = alpha + (1.0 - alpha) / mf;
        let hi = kappa + (kappa - alpha) / mf;
        if beta < lo - TOL || beta > hi + TOL {
            return bad("need alpha + (1-alpha)/m <= beta <= kappa + (kappa-alpha)/m");
        }
        if bump.smoothness() < m {
            return Err(Error::DerivativeOrder {
                requested: m,
                available: bump.smoothness(),
            });
        }
        let profile = Self { params, m };
        let mut j = 1;
        while profile.window(j).center < 1e15 {
            if profile.window(j).end() > profile.window(j + 1).start() * (1.0 + TOL) {
                return bad("windows overlap");
            }
            j += 1;
        }
        Ok(profile)
    }

    pub fn window(&self, j: u32) -> BumpWindow {
        let p = &self.params;
        let center = p.eta.powi(j as i32);
        let exponent = -p.beta + p.kappa + (p.kappa - p.alpha) / self.m as f64;
        BumpWindow {
            index: j,
            center,
            half_width: center.powf(p.kappa) / p.eta,
            amplitude: center.powf(p.alpha - p.kappa),
            cycles: (center.powf(exponent) + 1.0).floor(),
        }
    }

    pub fn windows_until(&self, t_max: f64) -> Vec<BumpWindow> {
        (1..)
            .map(|j| self.window(j))
            .take_while(|w| w.start() <= t_max)
            .collect()
    }

    fn window_at(&self, t: f64) -> Option<BumpWindow> {
        if t <= 0.0 {
            return None;
        }
        let guess = (t.ln() / self.params.eta.ln()).round() as i64;
        (guess - 1..=guess + 1)
            .filter(|&j| j >= 1)
            .map(|j| self.window(j as u32))
            .find(|w| t >= w.start() && t <= w.end())
    }

    fn value(&self, t: f64) -> f64 {
        match self.window_at(t) {
            Some(w) => {
                let tau = w.frequency() * (t - w.center);
                (1.0 + self.params.bump.value(w.amplitude, tau)).sqrt()
            }
            None => 1.0,
        }
    }

    fn jet(&self, t: f64, order: usize) -> RealJet {
        match self.window_at(t) {
            Some(w) => {
                let tau = Jet::variable(t - w.center, order).scale(w.frequency());
                self.params.bump.jet(w.amplitude, &tau).add_scalar(1.0).sqrt()
            }
            None => Jet::constant(1.0, order),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Family {
    Constant(f64),
    Example1(Example1),
    Example2(Example2),
}

/// A speed `a(t)` with bounds, smoothness order and control functions.
///
/// `theta` is the shape of the stabilization control (its constant is fitted
/// by the hypothesis checks), `xi` the oscillation scale and `lambda` the
/// optional slower control used for Gevrey-type estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedProfile {
    family: Family,
    m: usize,
    a_inf: f64,
    a0: f64,
    a1: f64,
    theta: PowerLog,
    xi: PowerLog,
    lambda: Option<PowerLog>,
}

impl SpeedProfile {
    pub fn constant(value: f64, m: usize) -> Result<Self> {
        if value <= 0.0 || m == 0 {
            return Err(Error::InvalidParameter(
                "constant speed must be positive with m >= 1".into(),
            ));
        }
        Ok(Self {
            family: Family::Constant(value),
            m,
            a_inf: value,
            a0: value,
            a1: value,
            theta: PowerLog::ONE,
            xi: PowerLog::power(1.0),
            lambda: None,
        })
    }

    pub fn example1(params: Example1, m: usize) -> Result<Self> {
        params.chi.validate()?;
        if params.p < 0.0 || params.q < 0.0 || params.r < 0.0 || m == 0 {
            return Err(Error::InvalidParameter(
                "p, q, r must be nonnegative and m >= 1".into(),
            ));
        }
        if m > params.chi.smoothness() {
            return Err(Error::DerivativeOrder {
                requested: m,
                available: params.chi.smoothness(),
            });
        }
        let Example1 { p, q, r, chi } = params;
        let theta = if p > 1.0 {
            PowerLog::ONE
        } else if p == 1.0 {
            PowerLog::new(1.0, 0.0, 1.0)
        } else {
            PowerLog::power(1.0 - p)
        };
        let mf = m as f64;
        let xi = if q > 0.0 {
            PowerLog::new(1.0, p / mf - q + 1.0, -r)
        } else {
            PowerLog::new(1.0, p / mf + 1.0, 1.0 - r)
        };
        // (1+t)^-p <= 1, so the extremes of chi bound the speed
        let a1 = 1.0 + chi.max_value();
        let a0 = if p > 0.0 { 1.0 } else { 1.0f64.min(1.0 + chi.min_value()) };
        Ok(Self {
            family: Family::Example1(params),
            m,
            a_inf: 1.0,
            a0,
            a1,
            theta,
            xi,
            lambda: None,
        })
    }

    pub fn example2(params: Example2Params, m: usize) -> Result<Self> {
        let family = Example2::new(params, m)?;
        let peak = family.window(1).amplitude;
        Ok(Self {
            family: Family::Example2(family),
            m,
            a_inf: 1.0,
            a0: 1.0,
            a1: (1.0 + peak).sqrt(),
            theta: PowerLog::power(params.alpha),
            xi: PowerLog::power(params.beta),
            lambda: None,
        })
    }

    pub fn with_lambda(mut self, lambda: PowerLog) -> Result<Self> {
        if !lambda.is_increasing() {
            return Err(Error::InvalidParameter(
                "lambda must be strictly increasing".into(),
            ));
        }
        self.lambda = Some(lambda);
        Ok(self)
    }

    pub fn with_theta(mut self, theta: PowerLog) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_xi(mut self, xi: PowerLog) -> Self {
        self.xi = xi;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a_inf(&self) -> f64 {
        self.a_inf
    }

    pub fn theta(&self) -> PowerLog {
        self.theta
    }

    pub fn xi(&self) -> PowerLog {
        self.xi
    }

    pub fn lambda(&self) -> Option<PowerLog> {
        self.lambda
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, Family::Constant(_))
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.family {
            Family::Constant(v) => *v,
            Family::Example1(e) => e.value(t),
            Family::Example2(e) => e.value(t),
        }
    }

    /// Taylor jet of `a` at `t` up to `order <= m`.
    pub fn jet(&self, t: f64, order: usize) -> Result<RealJet> {
        if order > self.m {
            return Err(Error::DerivativeOrder {
                requested: order,
                available: self.m,
            });
        }
        Ok(self.jet_unchecked(t, order))
    }

    pub(crate) fn jet_unchecked(&self, t: f64, order: usize) -> RealJet {
        match &self.family {
            Family::Constant(v) => Jet::constant(*v, order),
            Family::Example1(e) => e.jet(t, order),
            Family::Example2(e) => e.jet(t, order),
        }
    }

    /// `a^(k)(t)` for `k <= m`.
    pub fn deriv(&self, t: f64, k: usize) -> Result<f64> {
        Ok(self.jet(t, k)?.deriv(k))
    }

    pub fn lambda_inverse(&self, s: f64) -> Result<f64> {
        self.lambda.ok_or(Error::MissingLambda)?.inverse(s)
    }

    /// Points where the speed is only finitely smooth, up to `t_max`.
    pub fn breakpoints(&self, t_max: f64) -> Vec<f64> {
        match &self.family {
            Family::Example2(e) => e
                .windows_until(t_max)
                .iter()
                .flat_map(|w| [w.start(), w.end()])
                .filter(|&x| x > 0.0 && x <= t_max)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Windows of the second family up to `t_max` (empty otherwise).
    pub fn windows(&self, t_max: f64) -> Vec<BumpWindow> {
        match &self.family {
            Family::Example2(e) => e.windows_until(t_max),
            _ => Vec::new(),
        }
    }

    /// Extra sample times resolving localized structure, `per_window`
    /// uniformly spaced points inside each window.
    pub fn sample_hints(&self, t_max: f64, per_window: usize) -> Vec<f64> {
        self.windows(t_max)
            .iter()
            .flat_map(|w| {
                (0..=per_window).map(move |i| w.start() + 2.0 * w.half_width * i as f64 / per_window as f64)
            })
            .filter(|&t| t <= t_max)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_chi() -> Chi {
        Chi::CosOffset {
            offset: 2.0,
            amplitude: 1.0,
        }
    }

    #[test]
    fn example1_control_functions() {
        let p = SpeedProfile::example1(
            Example1 {
                p: 2.0,
                q: 0.0,
                r: 0.0,
                chi: cos_chi(),
            },
            2,
        )
        .unwrap();
        assert!(p.theta().is_bounded());
        assert_eq!(p.xi(), PowerLog::new(1.0, 2.0, 1.0));
        let q = SpeedProfile::example1(
            Example1 {
                p: 0.5,
                q: 0.75,
                r: 1.0,
                chi: cos_chi(),
            },
            3,
        )
        .unwrap();
        assert_eq!(q.theta(), PowerLog::power(0.5));
        assert_eq!(q.xi(), PowerLog::new(1.0, 0.5 / 3.0 - 0.75 + 1.0, -1.0));
    }

    #[test]
    fn constant_plus_constant_has_zero_derivative() {
        let p = SpeedProfile::example1(
            Example1 {
                p: 0.0,
                q: 0.0,
                r: 0.0,
                chi: cos_chi(),
            },
            2,
        )
        .unwrap();
        for t in [0.0, 1.0, 17.5, 1e3] {
            assert_eq!(p.deriv(t, 1).unwrap(), 0.0);
            assert_eq!(p.value(t), 3.0 + 1f64.cos());
        }
    }

    #[test]
    fn rejects_insufficient_chi_smoothness() {
        let err = SpeedProfile::example1(
            Example1 {
                p: 1.0,
                q: 0.5,
                r: 0.0,
                chi: Chi::ClippedCos {
                    offset: 1.0,
                    power: 2.0,
                },
            },
            2,
        );
        assert!(matches!(err, Err(Error::DerivativeOrder { .. })));
    }

    #[test]
    fn example2_parameter_checks() {
        let bump = CosineBump { power: 3 };
        let ok = Example2Params {
            eta: 3.0,
            alpha: 1.0,
            beta: 1.0,
            kappa: 1.0,
            bump,
        };
        assert!(SpeedProfile::example2(ok, 2).is_ok());
        assert!(SpeedProfile::example2(Example2Params { eta: 2.5, ..ok }, 2).is_err());
        assert!(SpeedProfile::example2(Example2Params { beta: 0.5, ..ok }, 2).is_err());
        assert!(SpeedProfile::example2(Example2Params { alpha: 1.0, kappa: 0.9, ..ok }, 2).is_err());
    }

    #[test]
    fn example2_is_one_between_windows() {
        let p = SpeedProfile::example2(
            Example2Params {
                eta: 3.0,
                alpha: 1.0,
                beta: 1.0,
                kappa: 1.0,
                bump: CosineBump { power: 3 },
            },
            2,
        )
        .unwrap();
        // first windows: [2, 4], [6, 12], [18, 36]
        for t in [1.0, 5.0, 14.0, 40.0] {
            assert_eq!(p.value(t), 1.0);
            let j = p.jet(t, 2).unwrap();
            assert_eq!(j.derivatives(), vec![1.0, 0.0, 0.0]);
        }
        assert_eq!(p.value(3.25), 2f64.sqrt());
        assert_eq!(p.breakpoints(13.0), vec![2.0, 4.0, 6.0, 12.0]);
    }
}
