//! Monotone control functions of power-log type.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// `scale * (1+t)^power * ln(e+t)^log_power`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLog {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub power: f64,
    #[serde(default)]
    pub log_power: f64,
}

fn one() -> f64 {
    1.0
}

impl PowerLog {
    pub const ONE: PowerLog = PowerLog {
        scale: 1.0,
        power: 0.0,
        log_power: 0.0,
    };

    pub fn new(scale: f64, power: f64, log_power: f64) -> Self {
        Self {
            scale,
            power,
            log_power,
        }
    }

    pub fn power(power: f64) -> Self {
        Self::new(1.0, power, 0.0)
    }

    pub fn with_scale(self, scale: f64) -> Self {
        Self { scale, ..self }
    }

    pub fn value(&self, t: f64) -> f64 {
        let mut v = self.scale;
        if self.power != 0.0 {
            v *= (1.0 + t).powf(self.power);
        }
        if self.log_power != 0.0 {
            v *= (E + t).ln().powf(self.log_power);
        }
        v
    }

    pub fn ln_value(&self, t: f64) -> f64 {
        self.scale.ln() + self.power * (1.0 + t).ln() + self.log_power * (E + t).ln().ln()
    }

    pub fn is_constant(&self) -> bool {
        self.power == 0.0 && self.log_power == 0.0
    }

    pub fn is_bounded(&self) -> bool {
        self.power < 0.0 || (self.power == 0.0 && self.log_power <= 0.0)
    }

    /// True when the function is strictly increasing on [0, inf).
    pub fn is_increasing(&self) -> bool {
        if self.scale <= 0.0 {
            return false;
        }
        match (self.power, self.log_power) {
            (p, l) if p >= 0.0 && l >= 0.0 => p > 0.0 || l > 0.0,
            (p, l) if p > 0.0 => {
                // d/dt log = p/(1+t) + l/((e+t) ln(e+t)), l < 0; the second
                // term decays faster, so positivity at t = 0 suffices
                p + l / E > 0.0
            }
            _ => false,
        }
    }

    /// Inverse of an increasing control function; errors below the value at 0.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        let v0 = self.value(0.0);
        if s < v0 * (1.0 - 1e-15) {
            return Err(Error::Domain {
                what: "inverse argument below the value at t = 0",
                value: s,
            });
        }
        Ok(self.inverse_clamped(s))
    }

    /// Inverse that returns 0 below the value at 0 and +inf above the
    /// supremum of a bounded function.
    pub fn inverse_clamped(&self, s: f64) -> f64 {
        if s <= self.value(0.0) {
            return 0.0;
        }
        if !self.is_increasing() {
            return f64::INFINITY;
        }
        let ratio = s / self.scale;
        if self.log_power == 0.0 {
            return (ratio.powf(1.0 / self.power) - 1.0).max(0.0);
        }
        if self.power == 0.0 {
            let inner = ratio.powf(1.0 / self.log_power);
            if inner > 700.0 {
                return f64::INFINITY;
            }
            return (inner.exp() - E).max(0.0);
        }
        self.bisect(s)
    }

    fn bisect(&self, s: f64) -> f64 {
        let target = s.ln();
        let g = |u: f64| self.ln_value(u.exp_m1());
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        while g(hi) < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e4 {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = if (g(lo) - target).abs() < (g(hi) - target).abs() {
            lo
        } else {
            hi
        };
        u.exp_m1()
    }

    /// `integral_t^inf value(s)^(-m) ds`, or +inf when divergent.
    pub fn tail_integral_inv_pow(&self, t: f64, m: f64) -> Result<f64> {
        let decay = self.power * m;
        let log_decay = self.log_power * m;
        if decay < 1.0 || (decay == 1.0 && log_decay <= 1.0) {
            return Ok(f64::INFINITY);
        }
        if self.log_power == 0.0 {
            return Ok(self.scale.powf(-m) * (1.0 + t).powf(1.0 - decay) / (decay - 1.0));
        }
        quad::integrate_tail(&|s: f64| self.value(s).powf(-m), t, 1e-12)
    }
}
