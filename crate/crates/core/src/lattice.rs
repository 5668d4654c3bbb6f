//! Finitely supported fields on the integer lattice and their Fourier side.

use std::collections::BTreeMap;
use std::f64::consts::PI;

pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Complex field on Z^d with finite support. Entries equal to zero are
/// never stored, so reading outside the support yields exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    dim: usize,
    values: BTreeMap<Vec<i64>, Complex64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

impl LatticeField {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            values: BTreeMap::new(),
        })
    }

    pub fn delta(at: &[i64]) -> Result<Self> {
        let mut f = Self::zeros(at.len())?;
        f.set(at, Complex64::new(1.0, 0.0))?;
        Ok(f)
    }

    pub fn from_entries<I, K>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, Complex64)>,
        K: AsRef<[i64]>,
    {
        let mut f = Self::zeros(dim)?;
        for (k, v) in entries {
            let old = f.get(k.as_ref())?;
            f.set(k.as_ref(), old + v)?;
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    fn check_index(&self, k: &[i64]) -> Result<()> {
        if k.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: k.len(),
            })
        }
    }

    pub fn get(&self, k: &[i64]) -> Result<Complex64> {
        self.check_index(k)?;
        Ok(self.values.get(k).copied().unwrap_or_default())
    }

    pub fn set(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        self.check_index(k)?;
        if value == Complex64::default() {
            self.values.remove(k);
        } else {
            self.values.insert(k.to_vec(), value);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], Complex64)> + '_ {
        self.values.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Largest |k_i| over the support (0 for the zero field).
    pub fn radius(&self) -> i64 {
        self.values
            .keys()
            .flat_map(|k| k.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }

    fn accumulate(&self, out: &mut BTreeMap<Vec<i64>, Complex64>, shift: &[i64], weight: f64) {
        for (k, v) in &self.values {
            let key: Vec<i64> = k.iter().zip(shift).map(|(a, b)| a + b).collect();
            *out.entry(key).or_default() += v * weight;
        }
    }

    fn from_map(dim: usize, mut values: BTreeMap<Vec<i64>, Complex64>) -> Self {
        values.retain(|_, v| *v != Complex64::default());
        Self { dim, values }
    }

    fn unit(&self, axis: usize, step: i64) -> Vec<i64> {
        let mut e = vec![0; self.dim];
        e[axis] = step;
        e
    }

    /// Forward `f[k+e_j] - f[k]` or backward `f[k] - f[k-e_j]` difference
    /// along the 0-based `axis`.
    pub fn difference(&self, axis: usize, dir: Direction) -> Result<Self> {
        if axis >= self.dim {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        let mut out = BTreeMap::new();
        let zero = vec![0; self.dim];
        match dir {
            // g[k] = f[k+e] - f[k]: f[k] lands at k - e with weight +1
            Direction::Forward => {
                self.accumulate(&mut out, &self.unit(axis, -1), 1.0);
                self.accumulate(&mut out, &zero, -1.0);
            }
            Direction::Backward => {
                self.accumulate(&mut out, &zero, 1.0);
                self.accumulate(&mut out, &self.unit(axis, 1), -1.0);
            }
        }
        Ok(Self::from_map(self.dim, out))
    }

    /// Sum over axes of the second-difference stencil.
    pub fn laplacian(&self) -> Self {
        let mut out = BTreeMap::new();
        let zero = vec![0; self.dim];
        for axis in 0..self.dim {
            self.accumulate(&mut out, &self.unit(axis, 1), 1.0);
            self.accumulate(&mut out, &self.unit(axis, -1), 1.0);
            self.accumulate(&mut out, &zero, -2.0);
        }
        Self::from_map(self.dim, out)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let values = self.values.iter().map(|(k, v)| (k.clone(), v * factor)).collect();
        Self::from_map(self.dim, values)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = self.values.clone();
        let zero = vec![0; self.dim];
        other.accumulate(&mut out, &zero, 1.0);
        Ok(Self::from_map(self.dim, out))
    }

    /// Sets entries with modulus below `threshold` to zero.
    pub fn truncate_below(&self, threshold: f64) -> Self {
        let mut values = self.values.clone();
        values.retain(|_, v| v.norm() >= threshold);
        Self {
            dim: self.dim,
            values,
        }
    }

    /// Discrete-time Fourier transform `sum_k exp(-i k.theta) f[k]`.
    pub fn dtft(&self, theta: &[f64]) -> Complex64 {
        debug_assert_eq!(theta.len(), self.dim);
        self.values
            .iter()
            .map(|(k, v)| {
                let phase: f64 = k.iter().zip(theta).map(|(&ki, &t)| ki as f64 * t).sum();
                v * Complex64::from_polar(1.0, -phase)
            })
            .sum()
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.values.values().map(|v| v.norm_sqr()).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.values().map(|v| v.norm()).sum()
    }
}

/// A point of the torus together with its frequency `xi_j = 2 sin(theta_j / 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyPoint {
    theta: Vec<f64>,
}

impl FrequencyPoint {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        check_dim(theta.len())?;
        for (component, &value) in theta.iter().enumerate() {
            if !(-PI..=PI).contains(&value) {
                return Err(Error::ThetaOutOfRange { component, value });
            }
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn xi(&self) -> Vec<f64> {
        self.theta.iter().map(|t| 2.0 * (t / 2.0).sin()).collect()
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub fn max_xi_norm(dim: usize) -> f64 {
    2.0 * (dim as f64).sqrt()
}

/// Uniform grid `theta_i = -pi + 2 pi i / n` per axis on [-pi, pi)^d. The
/// mean over the grid is the trapezoid rule for `(2pi)^-d` times the torus
/// integral, exact for trigonometric polynomials of degree below n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        if n == 0 {
            return Err(Error::InvalidParameter("torus grid needs n > 0".into()));
        }
        Ok(Self { dim, n })
    }

    pub fn default_for(dim: usize) -> Result<Self> {
        let n = match dim {
            1 => 256,
            2 => 64,
            _ => 32,
        };
        Self::new(dim, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn axis_value(&self, i: usize) -> f64 {
        -PI + 2.0 * PI * i as f64 / self.n as f64
    }

    /// Torus point for a flat index, last axis fastest.
    pub fn theta(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut theta = vec![0.0; self.dim];
        for slot in theta.iter_mut().rev() {
            *slot = self.axis_value(rest % self.n);
            rest /= self.n;
        }
        theta
    }

    pub fn point(&self, index: usize) -> FrequencyPoint {
        FrequencyPoint {
            theta: self.theta(index),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = FrequencyPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// `(2pi)^-d` times the torus integral of sampled values.
    pub fn mean<I: IntoIterator<Item = f64>>(&self, samples: I) -> f64 {
        samples.into_iter().sum::<f64>() / self.len() as f64
    }

    /// Quadrature of `(2pi)^-d * integral |f^|^2`.
    pub fn parseval_energy(&self, f: &LatticeField) -> f64 {
        self.mean(self.points().map(|p| f.dtft(p.theta()).norm_sqr()))
    }
}
