//! Splitting of the time-frequency half plane at `control(t) |xi| = N`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::max_xi_norm;
use crate::speed::PowerLog;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZoneFlavor {
    /// zones defined through the stabilization control
    Theta,
    /// zones defined through the slower lambda control
    Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZonePartition {
    pub n: f64,
    pub flavor: ZoneFlavor,
    pub control: PowerLog,
    pub t0: f64,
}

impl ZonePartition {
    /// `t0` solves `control(t0) = N / (2 sqrt d)`; it is 0 when no such
    /// time exists.
    pub fn new(control: PowerLog, n: f64, dim: usize, flavor: ZoneFlavor) -> Self {
        let target = n / max_xi_norm(dim);
        let t0 = control.inverse_clamped(target);
        Self {
            n,
            flavor,
            control,
            t0: if t0.is_finite() { t0 } else { 0.0 },
        }
    }

    /// First time at which `control(t) |xi| >= N`, or +inf.
    pub fn boundary(&self, xi_norm: f64) -> f64 {
        if xi_norm <= 0.0 {
            return f64::INFINITY;
        }
        let target = self.n / xi_norm;
        if self.control.value(self.t0) >= target {
            return self.t0;
        }
        self.control.inverse_clamped(target).max(self.t0)
    }
}

/// `mu(r) = r Theta(Lambda^-1(1/r))`, defined for `1/r >= Lambda(0)`.
pub fn mu(theta: PowerLog, lambda: PowerLog, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain { what: "mu argument", value: r });
    }
    Ok(r * theta.value(lambda.inverse(1.0 / r)?))
}
