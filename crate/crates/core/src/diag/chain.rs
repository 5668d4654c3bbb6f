//! First-order reformulation and the refined diagonalization chain.
//!
//! A conjugate-pair system is `[[phi, conj r], [r, conj phi]]`. Its entries
//! are stored as Taylor jets in `t`, so every step can differentiate the
//! diagonalizer exactly; each step consumes one order of the jets.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{ComplexJet, Jet, RealJet};
use crate::speed::SpeedProfile;

pub type Mat2 = [[Complex64; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateSystem {
    pub level: usize,
    pub phi_re: RealJet,
    pub phi_im: RealJet,
    pub r: ComplexJet,
}

impl ConjugateSystem {
    /// Number of t-derivatives still available.
    pub fn deriv_budget(&self) -> usize {
        self.phi_re.order()
    }

    pub fn phi(&self) -> Complex64 {
        Complex64::new(self.phi_re.value(), self.phi_im.value())
    }

    pub fn r_value(&self) -> Complex64 {
        self.r.value()
    }

    pub fn matrix(&self) -> Mat2 {
        let phi = self.phi();
        let r = self.r_value();
        [[phi, r.conj()], [r, phi.conj()]]
    }

    /// `(|r| / phi_im)^2`
    pub fn coupling_sq(&self) -> f64 {
        self.r_value().norm_sqr() / self.phi_im.value().powi(2)
    }
}

/// Output of one diagonalization step.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagStep {
    pub lambda: Complex64,
    pub delta: Complex64,
    /// `[[1, conj delta], [delta, 1]]`
    pub diagonalizer: Mat2,
    pub next: ConjugateSystem,
    pub delta_jet: ComplexJet,
    pub w: f64,
}

/// `V_1 = (v_t + i a|xi| v, v_t - i a|xi| v)` and the level-1 system at `t`.
pub fn first_order_system(
    profile: &SpeedProfile,
    xi_norm: f64,
    t: f64,
    v: Complex64,
    vt: Complex64,
) -> Result<([Complex64; 2], ConjugateSystem)> {
    let system = level_one(profile, xi_norm, t)?;
    let iaxv = Complex64::i() * profile.value(t) * xi_norm * v;
    Ok(([vt + iaxv, vt - iaxv], system))
}

/// Level-1 system `phi = a'/(2a) + i a|xi|`, `r = -a'/(2a)` with jets of
/// order `m - 1`.
pub fn level_one(profile: &SpeedProfile, xi_norm: f64, t: f64) -> Result<ConjugateSystem> {
    if xi_norm <= 0.0 {
        return Err(Error::Domain {
            what: "frequency norm for the first-order system",
            value: xi_norm,
        });
    }
    let m = profile.m();
    let a = profile.jet(t, m)?;
    let half_log_rate = a.derivative().div(&a.truncate(m - 1)).scale(0.5);
    let phi_im = a.truncate(m - 1).scale(xi_norm);
    let r = (-&half_log_rate).to_complex();
    Ok(ConjugateSystem {
        level: 1,
        phi_re: half_log_rate,
        phi_im,
        r,
    })
}

/// One refinement step at the expansion point of the jets.
pub fn diag_step(sys: &ConjugateSystem, t: f64) -> Result<DiagStep> {
    let n = sys.deriv_budget();
    if n == 0 {
        return Err(Error::DerivativeBudget { level: sys.level });
    }
    let level = sys.level;
    let phi_im_sq = &sys.phi_im * &sys.phi_im;
    let coupling = sys.r.norm_sqr().div(&phi_im_sq);
    let radicand = (-&coupling).add_scalar(1.0);
    if radicand.value() <= 0.0 || !radicand.value().is_finite() {
        return Err(Error::RadicandNonPositive {
            level,
            t,
            radicand: radicand.value(),
        });
    }
    let s = radicand.sqrt();
    let lambda = Complex64::new(sys.phi_re.value(), sys.phi_im.value() * s.value());
    // (lambda - phi) / conj r, rewritten to stay regular as r -> 0
    let denom = (&sys.phi_im * &s.add_scalar(1.0)).to_complex();
    let delta = sys.r.scale(-Complex64::i()).div(&denom);
    let w = (-&delta.norm_sqr()).add_scalar(1.0);
    let w_low = w.truncate(n - 1);
    let r_next = (-&delta.derivative()).div(&w_low.to_complex());
    let phi_re_next = &sys.phi_re.truncate(n - 1) - &w.ln().derivative().scale(0.5);
    let twist = (&delta.truncate(n - 1).conj() * &r_next).im();
    let phi_im_next = &(&sys.phi_im * &s).truncate(n - 1) - &twist;
    let d = delta.value();
    let one = Complex64::new(1.0, 0.0);
    Ok(DiagStep {
        lambda,
        delta: d,
        diagonalizer: [[one, d.conj()], [d, one]],
        next: ConjugateSystem {
            level: level + 1,
            phi_re: phi_re_next,
            phi_im: phi_im_next,
            r: r_next,
        },
        delta_jet: delta,
        w: w.value(),
    })
}

/// One level of a chain: the system and its diagonalization data.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainLevel {
    pub system: ConjugateSystem,
    pub lambda: Complex64,
    pub delta: Complex64,
    pub diagonalizer: Mat2,
    pub w: f64,
}

/// `A_1, ..., A_(m-1)` with their diagonalizers, plus the final `A_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagChain {
    pub t: f64,
    pub xi_norm: f64,
    pub levels: Vec<ChainLevel>,
    pub last: ConjugateSystem,
}

impl DiagChain {
    pub fn build(profile: &SpeedProfile, xi_norm: f64, t: f64) -> Result<Self> {
        let mut sys = level_one(profile, xi_norm, t)?;
        let mut levels = Vec::with_capacity(profile.m().saturating_sub(1));
        while sys.deriv_budget() > 0 {
            let step = diag_step(&sys, t)?;
            levels.push(ChainLevel {
                system: sys,
                lambda: step.lambda,
                delta: step.delta,
                diagonalizer: step.diagonalizer,
                w: step.w,
            });
            sys = step.next;
        }
        Ok(Self {
            t,
            xi_norm,
            levels,
            last: sys,
        })
    }

    /// `M_1 M_2 ... M_(m-1)`, mapping `V_m` to `V_1`.
    pub fn transform(&self) -> Mat2 {
        self.levels
            .iter()
            .fold(identity(), |acc, l| mat_mul(&acc, &l.diagonalizer))
    }

    pub fn log_w_sum(&self) -> f64 {
        self.levels.iter().map(|l| l.w.ln()).sum()
    }

    /// Largest `(|r_k| / phi_kIm)^2` over the diagonalized levels.
    pub fn max_coupling_sq(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.system.coupling_sq())
            .fold(0.0, f64::max)
    }

    pub fn max_delta_sq(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.delta.norm_sqr())
            .fold(0.0, f64::max)
    }

    /// Largest `|A_k M_k - M_k diag(lambda, conj lambda)|` entry.
    pub fn max_eigen_residual(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| eigen_residual(&l.system.matrix(), &l.diagonalizer, l.lambda))
            .fold(0.0, f64::max)
    }
}

pub fn identity() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    [[one, zero], [zero, one]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::default(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_inv(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

pub fn mat_apply(a: &Mat2, v: &[Complex64; 2]) -> [Complex64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Squared extreme singular values of a 2x2 complex matrix.
pub fn singular_values_sq(a: &Mat2) -> (f64, f64) {
    let p = a[0][0].norm_sqr() + a[1][0].norm_sqr();
    let q = a[0][1].norm_sqr() + a[1][1].norm_sqr();
    let c = (a[0][0].conj() * a[0][1] + a[1][0].conj() * a[1][1]).norm_sqr();
    let half = 0.5 * (p + q);
    let disc = (0.25 * (p - q).powi(2) + c).sqrt();
    ((half - disc).max(0.0), half + disc)
}

fn eigen_residual(a: &Mat2, m: &Mat2, lambda: Complex64) -> f64 {
    let am = mat_mul(a, m);
    let diag = [lambda, lambda.conj()];
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((am[i][j] - m[i][j] * diag[j]).norm());
        }
    }
    worst
}

/// `((3 - 2 sqrt 2)/2)^(m-1)` and `((3 + 2 sqrt 2)/2)^(m-1)`.
pub fn norm_equivalence(m: usize) -> (f64, f64) {
    let s = 2.0 * 2f64.sqrt();
    let e = m.saturating_sub(1) as i32;
    (((3.0 - s) / 2.0).powi(e), ((3.0 + s) / 2.0).powi(e))
}

/// Frozen-coefficient system with constant `phi` and `r`, for checks.
pub fn frozen_system(phi: Complex64, r: Complex64, budget: usize) -> ConjugateSystem {
    ConjugateSystem {
        level: 1,
        phi_re: Jet::constant(phi.re, budget),
        phi_im: Jet::constant(phi.im, budget),
        r: Jet::constant(r, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_system_is_fixed() {
        let sys = frozen_system(c(0.0, 1.0), c(0.0, 0.0), 2);
        let step = diag_step(&sys, 0.0).unwrap();
        assert_eq!(step.lambda, c(0.0, 1.0));
        assert_eq!(step.delta, c(0.0, 0.0));
        assert_eq!(step.diagonalizer, identity());
        assert_eq!(step.next.phi(), sys.phi());
        assert_eq!(step.next.r_value(), c(0.0, 0.0));
    }

    #[test]
    fn frozen_coupling_against_closed_eigenpair() {
        let sys = frozen_system(c(0.0, 1.0), c(0.1, 0.0), 1);
        let step = diag_step(&sys, 0.0).unwrap();
        // eigenvalues of [[i, 0.1], [0.1, -i]] are +-i sqrt(0.99)
        assert!((step.lambda - c(0.0, 0.99f64.sqrt())).norm() < 1e-15);
        assert!((step.lambda.im - 0.994987).abs() < 1e-6);
        assert!((step.delta - c(0.0, -0.050126)).norm() < 1e-6);
        assert_eq!(step.next.r_value(), c(0.0, 0.0));
        let residual = eigen_residual(&sys.matrix(), &step.diagonalizer, step.lambda);
        assert!(residual < 1e-15);
    }

    #[test]
    fn radicand_and_budget_errors() {
        let strong = frozen_system(c(0.0, 1.0), c(2.0, 0.0), 1);
        assert!(matches!(diag_step(&strong, 0.0), Err(Error::RadicandNonPositive { .. })));
        let spent = frozen_system(c(0.0, 1.0), c(0.1, 0.0), 0);
        assert!(matches!(diag_step(&spent, 0.0), Err(Error::DerivativeBudget { .. })));
    }

    #[test]
    fn first_order_vector_norm() {
        let p = SpeedProfile::constant(1.0, 2).unwrap();
        let (v1, sys) = first_order_system(&p, 1.0, 0.0, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(v1, [c(0.0, 1.0), c(0.0, -1.0)]);
        assert_eq!(v1[0].norm_sqr() + v1[1].norm_sqr(), 2.0);
        assert_eq!(sys.r_value(), c(0.0, 0.0));
        assert!(first_order_system(&p, 0.0, 0.0, c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn singular_values_of_diagonalizer() {
        let d = c(0.3, 0.4);
        let m = [[c(1.0, 0.0), d.conj()], [d, c(1.0, 0.0)]];
        let (lo, hi) = singular_values_sq(&m);
        assert!((lo - 0.25).abs() < 1e-14 && (hi - 2.25).abs() < 1e-14);
    }
}
