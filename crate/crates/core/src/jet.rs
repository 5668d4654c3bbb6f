//! Truncated Taylor arithmetic in one variable.
//!
//! A [`Jet`] of order `n` stores the normalized Taylor coefficients
//! `c[k] = f^(k)(t0) / k!` for `k = 0..=n`. Arithmetic and the elementary
//! functions below propagate the coefficients with the usual recurrences,
//! so every derivative obtained from a jet is exact up to rounding.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Scalar field a jet can be built over.
pub trait JetScalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, alpha: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn magnitude(self) -> f64;
}

impl JetScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, alpha: f64) -> Self {
        f64::powf(self, alpha)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl JetScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn powf(self, alpha: f64) -> Self {
        Complex64::powf(self, alpha)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    coeffs: Vec<T>,
}

pub type RealJet = Jet<f64>;
pub type ComplexJet = Jet<Complex64>;

impl<T: JetScalar> Jet<T> {
    pub fn constant(value: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The identity function `s ↦ s` expanded at `t0`.
    pub fn variable(t0: T, order: usize) -> Self {
        let mut jet = Self::constant(t0, order);
        if order >= 1 {
            jet.coeffs[1] = T::from_real(1.0);
        }
        jet
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { coeffs }
    }

    /// Builds a jet from derivative values `f(t0), f'(t0), ..., f^(n)(t0)`.
    pub fn from_derivatives(derivs: &[T]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d * T::from_real(1.0 / fact)
            })
            .collect();
        Self::from_coeffs(coeffs)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// k-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> T {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeffs[k] * T::from_real(fact)
    }

    pub fn derivatives(&self) -> Vec<T> {
        (0..=self.order()).map(|k| self.deriv(k)).collect()
    }

    /// Jet of the derivative; the order drops by one.
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::constant(T::zero(), 0);
        }
        let coeffs = (1..=self.order())
            .map(|k| self.coeffs[k] * T::from_real(k as f64))
            .collect();
        Self { coeffs }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        Self {
            coeffs: self.coeffs[..=n].to_vec(),
        }
    }

    pub fn map_coeffs<U: JetScalar>(&self, f: impl Fn(T) -> U) -> Jet<U> {
        Jet {
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map_coeffs(|c| c * factor)
    }

    pub fn add_scalar(&self, x: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + x;
        out
    }

    pub fn recip(&self) -> Self {
        Self::constant(T::from_real(1.0), self.order()).div(self)
    }

    pub fn div(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let b0 = rhs.coeffs[0];
        let mut q = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc = acc - rhs.coeffs[j] * q[k - j];
            }
            q.push(acc / b0);
        }
        Self { coeffs: q }
    }

    pub fn exp(&self) -> Self {
        let n = self.order();
        let mut e = Vec::with_capacity(n + 1);
        e.push(self.coeffs[0].exp());
        for k in 1..=n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + T::from_real(j as f64) * self.coeffs[j] * e[k - j];
            }
            e.push(acc * T::from_real(1.0 / k as f64));
        }
        Self { coeffs: e }
    }

    pub fn ln(&self) -> Self {
        let n = self.order();
        let g0 = self.coeffs[0];
        let mut l = Vec::with_capacity(n + 1);
        l.push(g0.ln());
        for k in 1..=n {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + T::from_real(j as f64) * l[j] * self.coeffs[k - j];
            }
            l.push((self.coeffs[k] - acc * T::from_real(1.0 / k as f64)) / g0);
        }
        Self { coeffs: l }
    }

    /// `self^alpha`; the value must be nonzero.
    pub fn powf(&self, alpha: f64) -> Self {
        let n = self.order();
        let g0 = self.coeffs[0];
        let mut p = Vec::with_capacity(n + 1);
        p.push(g0.powf(alpha));
        for k in 1..=n {
            let mut acc = T::zero();
            for j in 1..=k {
                let w = (alpha + 1.0) * j as f64 - k as f64;
                acc = acc + T::from_real(w) * self.coeffs[j] * p[k - j];
            }
            p.push(acc / (T::from_real(k as f64) * g0));
        }
        Self { coeffs: p }
    }

    /// Integer power by repeated multiplication; valid at a zero value.
    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(T::from_real(1.0), self.order());
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        let n = self.order();
        let s0 = self.coeffs[0].sqrt();
        let mut s = Vec::with_capacity(n + 1);
        s.push(s0);
        for k in 1..=n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc = acc - s[j] * s[k - j];
            }
            s.push(acc / (T::from_real(2.0) * s0));
        }
        Self { coeffs: s }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.order();
        let mut s = Vec::with_capacity(n + 1);
        let mut c = Vec::with_capacity(n + 1);
        s.push(self.coeffs[0].sin());
        c.push(self.coeffs[0].cos());
        for k in 1..=n {
            let mut acc_s = T::zero();
            let mut acc_c = T::zero();
            for j in 1..=k {
                let w = T::from_real(j as f64) * self.coeffs[j];
                acc_s = acc_s + w * c[k - j];
                acc_c = acc_c + w * s[k - j];
            }
            let inv = T::from_real(1.0 / k as f64);
            s.push(acc_s * inv);
            c.push(-(acc_c * inv));
        }
        (Self { coeffs: s }, Self { coeffs: c })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

impl RealJet {
    pub fn to_complex(&self) -> ComplexJet {
        self.map_coeffs(|c| Complex64::new(c, 0.0))
    }
}

impl ComplexJet {
    pub fn conj(&self) -> Self {
        self.map_coeffs(|c| c.conj())
    }

    pub fn re(&self) -> RealJet {
        self.map_coeffs(|c| c.re)
    }

    pub fn im(&self) -> RealJet {
        self.map_coeffs(|c| c.im)
    }

    /// `|f|^2` as a real jet.
    pub fn norm_sqr(&self) -> RealJet {
        (self * &self.conj()).re()
    }
}

impl<T: JetScalar> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Jet<T> {
        let n = self.order().min(rhs.order());
        Jet {
            coeffs: (0..=n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect(),
        }
    }
}

impl<T: JetScalar> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Jet<T> {
        let n = self.order().min(rhs.order());
        Jet {
            coeffs: (0..=n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect(),
        }
    }
}

impl<T: JetScalar> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Jet<T> {
        let n = self.order().min(rhs.order());
        let coeffs = (0..=n)
            .map(|k| {
                (0..=k).fold(T::zero(), |acc, j| {
                    acc + self.coeffs[j] * rhs.coeffs[k - j]
                })
            })
            .collect();
        Jet { coeffs }
    }
}

impl<T: JetScalar> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.map_coeffs(|c| -c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn var(t: f64, n: usize) -> RealJet {
        Jet::variable(t, n)
    }

    #[test]
    fn polynomial_derivatives() {
        // f(t) = t^3 at t = 2: 8, 12, 12, 6
        let t = var(2.0, 4);
        let f = &(&t * &t) * &t;
        assert_eq!(f.derivatives(), vec![8.0, 12.0, 12.0, 6.0, 0.0]);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x = 0.7;
        let t = var(x, 5);
        let e = t.exp();
        for k in 0..=5 {
            assert_relative_eq!(e.deriv(k), x.exp(), max_relative = 1e-14);
        }
        let l = t.ln();
        // d^k/dt^k ln t = (-1)^(k-1) (k-1)! / t^k
        for k in 1..=5 {
            let fact: f64 = (1..k).map(|i| i as f64).product();
            let expected = (-1f64).powi(k as i32 - 1) * fact / x.powi(k as i32);
            assert_relative_eq!(l.deriv(k), expected, max_relative = 1e-13);
        }
        let (s, c) = t.sin_cos();
        assert_relative_eq!(s.deriv(3), -x.cos(), max_relative = 1e-14);
        assert_relative_eq!(c.deriv(2), -x.cos(), max_relative = 1e-14);
        let p = t.powf(-1.5);
        // (-1.5)(-2.5) x^-3.5
        assert_relative_eq!(p.deriv(2), 3.75 * x.powf(-3.5), max_relative = 1e-13);
        let r = t.sqrt();
        assert_relative_eq!(r.deriv(1), 0.5 / x.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn division_inverts_multiplication() {
        let t = var(1.3, 4);
        let f = t.sin_cos().0.add_scalar(2.0);
        let g = t.exp();
        let h = (&f * &g).div(&g);
        for k in 0..=4 {
            assert_relative_eq!(h.coeffs()[k], f.coeffs()[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn integer_power_at_zero_value() {
        // (t - 1)^3 at t = 1 has derivatives 0, 0, 0, 6
        let u = var(1.0, 3).add_scalar(-1.0);
        assert_eq!(u.powi(3).derivatives(), vec![0.0, 0.0, 0.0, 6.0]);
    }

    #[test]
    fn complex_norm_and_derivative() {
        // f(t) = e^{i t}: |f|^2 = 1, f' = i f
        let t = Jet::variable(Complex64::new(0.4, 0.0), 3);
        let f = t.scale(Complex64::i()).exp();
        let n = f.norm_sqr();
        assert_relative_eq!(n.value(), 1.0, epsilon = 1e-15);
        assert!(n.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
        let d = f.derivative();
        let expected = f.value() * Complex64::i();
        assert!((d.value() - expected).norm() < 1e-15);
    }
}
