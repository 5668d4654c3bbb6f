//! Initial data whose Fourier transforms vanish to high or infinite order
//! at the origin, built from their defining integrals.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GevreyKind {
    /// spectrum `(sin^2(theta/2))^m0`
    PowerSine { m0: f64 },
    /// spectrum `exp(-2^(kappa+1) rho |xi|^(-kappa))`
    Flat { rho: f64, kappa: f64 },
}

impl GevreyKind {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GevreyKind::PowerSine { m0 } => m0 > 0.0,
            GevreyKind::Flat { rho, kappa } => rho > 0.0 && kappa > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{self:?}")))
        }
    }

    /// The generating function `u1_hat(theta)`, real and even.
    pub fn transform(&self, theta: f64) -> f64 {
        let s2 = (0.5 * theta).sin().powi(2);
        match *self {
            GevreyKind::PowerSine { m0 } => s2.powf(0.5 * m0),
            GevreyKind::Flat { rho, kappa } => {
                if s2 == 0.0 {
                    0.0
                } else {
                    (-rho * s2.powf(-0.5 * kappa)).exp()
                }
            }
        }
    }

    /// `ln E(0, theta)` for `u0 = 0` and velocity `u1`.
    pub fn ln_spectrum(&self, theta: f64) -> f64 {
        let s2 = (0.5 * theta).sin().powi(2);
        match *self {
            GevreyKind::PowerSine { m0 } => m0 * s2.ln(),
            GevreyKind::Flat { rho, kappa } => {
                let xi = 2.0 * s2.sqrt();
                -(2f64.powf(kappa + 1.0)) * rho * xi.powf(-kappa)
            }
        }
    }

    pub fn spectrum(&self, theta: f64) -> f64 {
        self.ln_spectrum(theta).exp()
    }
}

/// Velocity datum on the one-dimensional lattice with `u0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GevreyData {
    pub kind: GevreyKind,
    pub field: LatticeField,
    pub truncation: i64,
    /// periodic trapezoid points used for the coefficients
    pub quadrature_points: usize,
}

const DROP_BELOW: f64 = 1e-16;
const QUAD_TOL: f64 = 1e-14;
const MAX_POINTS: usize = 1 << 22;

/// Fourier coefficients `(1/2pi) int f(theta) e^(ik theta)` for `|k| <= k_max`
/// of an even function by the periodic trapezoid rule, doubled until stable.
fn even_coefficients<F: Fn(f64) -> f64 + Sync>(f: &F, k_max: i64) -> Result<(Vec<f64>, usize)> {
    let mut n = (8 * k_max as usize).next_power_of_two().max(256);
    let mut prev: Option<Vec<f64>> = None;
    while n <= MAX_POINTS {
        let samples: Vec<f64> = (0..n).map(|i| f(-PI + 2.0 * PI * i as f64 / n as f64)).collect();
        // cos(k theta_i) = (-1)^k cos(2 pi (k i mod n) / n), reduced exactly
        let table: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let coeffs: Vec<f64> = (0..=k_max as usize)
            .into_par_iter()
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let sum = compensated_sum(samples.iter().enumerate().map(|(i, v)| v * table[(k * i) % n]));
                sign * sum / n as f64
            })
            .collect();
        if let Some(p) = &prev {
            let change = p.iter().zip(&coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change <= QUAD_TOL {
                return Ok((coeffs, n));
            }
        }
        prev = Some(coeffs);
        n *= 2;
    }
    Err(Error::Quadrature(format!("coefficients not stable at {MAX_POINTS} points")))
}

/// Neumaier summation.
fn compensated_sum<I: Iterator<Item = f64>>(terms: I) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

impl GevreyData {
    pub const DEFAULT_TRUNCATION: i64 = 128;

    pub fn build(kind: GevreyKind, truncation: i64) -> Result<Self> {
        kind.validate()?;
        if truncation < 16 {
            return Err(Error::InvalidParameter(format!("truncation {truncation} below 16")));
        }
        let (coeffs, quadrature_points) = even_coefficients(&|t| kind.transform(t), truncation)?;
        let entries = coeffs
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| {
                let k = k as i64;
                let both = if k == 0 { vec![0] } else { vec![k, -k] };
                both.into_iter().map(move |j| (vec![j], Complex64::new(c, 0.0)))
            })
            .filter(|(_, c)| c.norm() >= DROP_BELOW);
        Ok(Self {
            kind,
            field: LatticeField::from_entries(1, entries)?,
            truncation,
            quadrature_points,
        })
    }

    pub fn example36(m0: f64) -> Result<Self> {
        Self::build(GevreyKind::PowerSine { m0 }, Self::DEFAULT_TRUNCATION)
    }

    pub fn example37(rho: f64, kappa: f64) -> Result<Self> {
        Self::build(GevreyKind::Flat { rho, kappa }, Self::DEFAULT_TRUNCATION)
    }

    /// Largest deviation of `|dtft(field)|^2` from the closed-form spectrum
    /// at the given angles.
    pub fn spectrum_error(&self, thetas: &[f64]) -> f64 {
        thetas
            .iter()
            .map(|&t| (self.field.dtft(&[t]).norm_sqr() - self.kind.spectrum(t)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `k, re, im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record(["k", "re", "im"]).map_err(err)?;
        for (k, v) in self.field.iter() {
            w.write_record([k[0].to_string(), format!("{:e}", v.re), format!("{:e}", v.im)])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_sine_coefficients() {
        let data = GevreyData::build(GevreyKind::PowerSine { m0: 2.0 }, 16).unwrap();
        assert!((data.field.get(&[0]).unwrap().re - 0.5).abs() < 1e-15);
        assert!((data.field.get(&[1]).unwrap().re + 0.25).abs() < 1e-15);
        assert!((data.field.get(&[-1]).unwrap().re + 0.25).abs() < 1e-15);
        assert_eq!(data.field.support_len(), 3);
    }

    #[test]
    fn flat_spectrum_at_pi() {
        let kind = GevreyKind::Flat { rho: 0.7, kappa: 1.3 };
        assert!((kind.spectrum(PI) - (-1.4f64).exp()).abs() < 1e-15);
        assert_eq!(kind.spectrum(0.0), 0.0);
    }
}
