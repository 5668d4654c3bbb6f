//! Periodic shape functions composed into the speed profiles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::RealJet;

/// Positive 2pi-periodic function used inside the first family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Chi {
    /// `offset + amplitude * cos(tau)`, smooth.
    CosOffset { offset: f64, amplitude: f64 },
    /// `offset + max(0, cos tau)^power`, only `C^(ceil(power) - 1)`.
    ClippedCos { offset: f64, power: f64 },
}

impl Chi {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Chi::CosOffset { offset, amplitude } => offset > amplitude.abs(),
            Chi::ClippedCos { offset, power } => offset > 0.0 && power > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("chi {self:?} is not positive")))
        }
    }

    /// Highest derivative order available (`usize::MAX` for smooth shapes).
    pub fn smoothness(&self) -> usize {
        match *self {
            Chi::CosOffset { .. } => usize::MAX,
            Chi::ClippedCos { power, .. } => (power.ceil() as usize).saturating_sub(1),
        }
    }

    pub fn min_value(&self) -> f64 {
        match *self {
            Chi::CosOffset { offset, amplitude } => offset - amplitude.abs(),
            Chi::ClippedCos { offset, .. } => offset,
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            Chi::CosOffset { offset, amplitude } => offset + amplitude.abs(),
            Chi::ClippedCos { offset, .. } => offset + 1.0,
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        match *self {
            Chi::CosOffset { offset, amplitude } => offset + amplitude * tau.cos(),
            Chi::ClippedCos { offset, power } => offset + tau.cos().max(0.0).powf(power),
        }
    }

    pub fn compose(&self, tau: &RealJet) -> RealJet {
        match *self {
            Chi::CosOffset { offset, amplitude } => {
                tau.sin_cos().1.scale(amplitude).add_scalar(offset)
            }
            Chi::ClippedCos { offset, power } => {
                let c = tau.sin_cos().1;
                clipped_power(&c, power).add_scalar(offset)
            }
        }
    }
}

/// `max(0, c)^power` along a jet, zero on the clipped side.
pub(crate) fn clipped_power(c: &RealJet, power: f64) -> RealJet {
    let order = c.order();
    if c.value() > 0.0 {
        if power.fract() == 0.0 {
            c.powi(power as u32)
        } else {
            c.powf(power)
        }
    } else if c.value() == 0.0 && power.fract() == 0.0 {
        c.powi(power as u32)
    } else {
        RealJet::constant(0.0, order)
    }
}

/// Compactly supported bump family with amplitude `eps`:
/// `eps * max(0, -cos tau)^power`. It vanishes on a neighbourhood of every
/// multiple of 2pi, so it is supported in `[pi/2, 3pi/2]` per period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineBump {
    pub power: u32,
}

impl CosineBump {
    pub fn value(&self, eps: f64, tau: f64) -> f64 {
        eps * (-tau.cos()).max(0.0).powi(self.power as i32)
    }

    pub fn jet(&self, eps: f64, tau: &RealJet) -> RealJet {
        let c = -&tau.sin_cos().1;
        clipped_power(&c, self.power as f64).scale(eps)
    }

    pub fn smoothness(&self) -> usize {
        (self.power as usize).saturating_sub(1)
    }

    pub fn support_period(&self) -> (f64, f64) {
        (PI / 2.0, 3.0 * PI / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    #[test]
    fn cos_offset_jet_matches_closed_form() {
        let chi = Chi::CosOffset {
            offset: 2.0,
            amplitude: 1.0,
        };
        let j = chi.compose(&Jet::variable(0.3, 3));
        assert!((j.deriv(0) - (2.0 + 0.3f64.cos())).abs() < 1e-15);
        assert!((j.deriv(1) + 0.3f64.sin()).abs() < 1e-15);
        assert!((j.deriv(3) - 0.3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn bump_vanishes_near_zero() {
        let b = CosineBump { power: 3 };
        for tau in [-1.0, 0.0, 1.2, 2.0 * PI - 1.0] {
            assert_eq!(b.value(1.0, tau), 0.0);
        }
        assert_eq!(b.value(0.5, PI), 0.5);
        assert_eq!(b.smoothness(), 2);
    }

    #[test]
    fn validation() {
        assert!(Chi::CosOffset {
            offset: 0.5,
            amplitude: 1.0
        }
        .validate()
        .is_err());
        assert_eq!(
            Chi::ClippedCos {
                offset: 1.0,
                power: 2.5
            }
            .smoothness(),
            2
        );
    }
}
