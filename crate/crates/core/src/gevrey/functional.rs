//! The weighted initial-energy functional, the admissibility constant of
//! a sequence, moment and decay conditions, and the case gate.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::sequence::{AssocMode, LogConvexSequence};
use crate::diag::lambda_exponent;
use crate::error::{Error, Result};
use crate::lattice::{LatticeField, TorusGrid};
use crate::quad::{log_sum_exp, GaussLegendre};
use crate::speed::PowerLog;

/// Stabilization and auxiliary controls used by the weight
/// `exp(2|xi| Theta(Lambda^-1(N/|xi|)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightControls {
    pub theta: PowerLog,
    pub lambda: PowerLog,
}

impl WeightControls {
    pub fn new(theta: PowerLog, lambda: PowerLog) -> Result<Self> {
        if !lambda.is_increasing() {
            return Err(Error::MissingLambda);
        }
        Ok(Self { theta, lambda })
    }

    /// `Theta(Lambda^-1(s))`, with the inverse clamped to 0 below `Lambda(0)`.
    pub fn composed(&self, s: f64) -> f64 {
        self.theta.value(self.lambda.inverse_clamped(s))
    }

    pub fn exponent(&self, n: f64, xi_norm: f64) -> f64 {
        lambda_exponent(self.theta, self.lambda, n, xi_norm)
    }
}

/// Result of a functional that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub n: f64,
    pub ln_value: f64,
    pub converged: bool,
}

impl FunctionalValue {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    pub fn is_finite(&self) -> bool {
        self.ln_value < f64::INFINITY
    }
}

/// CSV with columns `N, value, ln_value, converged_flag`.
pub fn write_functional_csv<W: Write>(rows: &[FunctionalValue], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
    w.write_record(["N", "value", "ln_value", "converged_flag"]).map_err(err)?;
    for r in rows {
        w.write_record([
            format!("{}", r.n),
            format!("{:e}", r.value()),
            format!("{:e}", r.ln_value),
            r.converged.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UOptions {
    /// dyadic shells towards the origin before giving up
    pub max_shells: usize,
    /// a shell is negligible below `exp(-negligible)` times the running sum
    pub negligible: f64,
}

impl Default for UOptions {
    fn default() -> Self {
        Self {
            max_shells: 990,
            negligible: 40.0,
        }
    }
}

/// `ln` of the normalized integral `(2pi)^-1 int exp(exponent) E(0,theta)`
/// on the one-dimensional torus, given `ln E(0, theta)`.
///
/// Each half of the circle is split into dyadic shells
/// `[pi 2^-(k+1), pi 2^-k]` integrated in log space. The integral is finite
/// once shell contributions fall below the running sum and keep falling,
/// and infinite when they are still growing after the last shell.
pub fn u_functional_spectrum<F>(
    n: f64,
    ln_spectrum: &F,
    controls: &WeightControls,
    opts: &UOptions,
) -> Result<FunctionalValue>
where
    F: Fn(f64) -> f64 + Sync,
{
    let rule = GaussLegendre::standard();
    let side = |sign: f64| -> (f64, bool) {
        let ln_integrand = |t: f64| {
            let theta = sign * t;
            let xi = 2.0 * (0.5 * t).sin();
            let ln_e = ln_spectrum(theta);
            if ln_e == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            controls.exponent(n, xi) + ln_e
        };
        let mut total = f64::NEG_INFINITY;
        let mut prev = f64::INFINITY;
        let mut quiet = 0;
        for k in 0..opts.max_shells {
            let hi = PI * 0.5f64.powi(k as i32);
            let shell = rule.ln_integrate(&ln_integrand, 0.5 * hi, hi);
            if shell.is_nan() || shell == f64::INFINITY {
                return (f64::INFINITY, false);
            }
            total = log_sum_exp(&[total, shell]);
            let small = shell == f64::NEG_INFINITY || shell < total - opts.negligible;
            if small && shell <= prev {
                quiet += 1;
                if quiet >= 3 {
                    return (total, true);
                }
            } else {
                quiet = 0;
            }
            prev = shell;
        }
        (f64::INFINITY, false)
    };
    let (pos, ok_pos) = side(1.0);
    let (neg, ok_neg) = side(-1.0);
    let converged = ok_pos && ok_neg;
    let ln_value = if converged {
        log_sum_exp(&[pos, neg]) - (2.0 * PI).ln()
    } else {
        f64::INFINITY
    };
    Ok(FunctionalValue { n, ln_value, converged })
}

/// `ln E(0, theta)` of one-dimensional lattice data.
pub fn initial_ln_spectrum(u0: &LatticeField, u1: &LatticeField, a_zero: f64, theta: f64) -> f64 {
    let xi = 2.0 * (0.5 * theta).sin();
    let v0 = u0.dtft(&[theta]);
    let v1 = u1.dtft(&[theta]);
    (v1.norm_sqr() + a_zero * a_zero * xi * xi * v0.norm_sqr()).ln()
}

/// The functional for lattice data. Truncated fields leave rounding noise
/// near the origin, so data with a closed-form spectrum should go through
/// [`u_functional_spectrum`] instead.
pub fn u_functional(
    n: f64,
    u0: &LatticeField,
    u1: &LatticeField,
    a_zero: f64,
    controls: &WeightControls,
    opts: &UOptions,
) -> Result<FunctionalValue> {
    for f in [u0, u1] {
        if f.dim() != 1 {
            return Err(Error::UnsupportedDimension(f.dim()));
        }
    }
    u_functional_spectrum(n, &|t| initial_ln_spectrum(u0, u1, a_zero, t), controls, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LOptions {
    pub tau_max: f64,
    pub points: usize,
    /// the search is extended by decades up to this argument while the
    /// ratio is still falling
    pub extend_cap: f64,
}

impl Default for LOptions {
    fn default() -> Self {
        Self {
            tau_max: 1e6,
            points: 240,
            extend_cap: 1e300,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LValue {
    pub n: f64,
    /// `ln L`, `-inf` when the ratio decays along the tail
    pub ln_value: f64,
    pub argmin_tau: f64,
    pub tail_decay: bool,
}

impl LValue {
    pub fn is_positive(&self) -> bool {
        self.ln_value > f64::NEG_INFINITY
    }

    pub fn as_functional(&self) -> FunctionalValue {
        FunctionalValue {
            n: self.n,
            ln_value: self.ln_value,
            converged: !self.tail_decay,
        }
    }
}

/// `ln` of `T[M_j/j!](tau) / exp(tau^-1 Theta(Lambda^-1(N tau)))`.
pub fn ln_l_ratio(n: f64, seq: &LogConvexSequence, controls: &WeightControls, tau: f64) -> Result<f64> {
    let assoc = seq.associated(tau, AssocMode::FactorialDivided)?;
    Ok(assoc.ln_value - controls.composed(n * tau) / tau)
}

/// `inf_(tau >= 1)` of the ratio above.
pub fn l_constant(n: f64, seq: &LogConvexSequence, controls: &WeightControls, opts: &LOptions) -> Result<LValue> {
    let f = |tau: f64| ln_l_ratio(n, seq, controls, tau);
    let count = opts.points.max(3);
    let mut taus: Vec<f64> = (0..count)
        .map(|i| opts.tau_max.powf(i as f64 / (count - 1) as f64))
        .collect();
    let mut vals: Vec<f64> = taus.iter().map(|&t| f(t)).collect::<Result<_>>()?;
    // follow a ratio that is still falling at the end of the grid
    let mut tail_decay = false;
    while vals[vals.len() - 1] < vals[vals.len() - 2] {
        let next = taus[taus.len() - 1] * 10.0;
        if next > opts.extend_cap {
            tail_decay = true;
            break;
        }
        let v = f(next)?;
        if v == f64::INFINITY {
            // the associated function left the representable range while the
            // ratio was falling
            tail_decay = true;
            break;
        }
        taus.push(next);
        vals.push(v);
    }
    let (i_min, &v_min) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    if tail_decay {
        return Ok(LValue {
            n,
            ln_value: f64::NEG_INFINITY,
            argmin_tau: f64::INFINITY,
            tail_decay,
        });
    }
    // golden section on ln tau inside the bracketing cells
    let (mut a, mut b) = (
        taus[i_min.saturating_sub(1)].ln(),
        taus[(i_min + 1).min(taus.len() - 1)].ln(),
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (v_min, taus[i_min]);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        let (fc, fd) = (f(c.exp())?, f(d.exp())?);
        for (v, t) in [(fc, c.exp()), (fd, d.exp())] {
            if v < best.0 {
                best = (v, t);
            }
        }
        if fc < fd {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(LValue {
        n,
        ln_value: best.0,
        argmin_tau: best.1,
        tail_decay,
    })
}

/// Bisection for the largest `N` with a positive admissibility constant,
/// between `lo` (positive) and `hi` (not positive).
pub fn critical_n(
    seq: &LogConvexSequence,
    controls: &WeightControls,
    mut lo: f64,
    mut hi: f64,
    opts: &LOptions,
) -> Result<f64> {
    if !l_constant(lo, seq, controls, opts)?.is_positive() || l_constant(hi, seq, controls, opts)?.is_positive() {
        return Err(Error::InvalidParameter("critical N not bracketed".into()));
    }
    while hi / lo > 1.0 + 1e-6 {
        let mid = (lo * hi).sqrt();
        if l_constant(mid, seq, controls, opts)?.is_positive() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// `inf_(tau >= 1/(2 sqrt d)) Theta(Lambda^-1(N tau)) / (N Theta(Lambda^-1(tau)))`
/// over a geometric grid reaching `tau_max`.
pub fn growth_ratio(n: f64, controls: &WeightControls, dim: usize, tau_max: f64, points: usize) -> f64 {
    let start = 1.0 / (2.0 * (dim as f64).sqrt());
    let span = (tau_max / start).ln();
    (0..points)
        .map(|i| start * (span * i as f64 / (points - 1) as f64).exp())
        .map(|tau| controls.composed(n * tau) / (n * controls.composed(tau)))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GateCase {
    /// admissibility constant positive for every tested N
    AnyN,
    /// the growth ratio diverges
    LargeN,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateReport {
    pub case: GateCase,
    pub l_values: Vec<LValue>,
    /// `(N, inner infimum)` pairs
    pub ratios: Vec<(f64, f64)>,
    /// least-squares slope of `ln ratio` against `ln N`
    pub ratio_exponent: f64,
    pub ratio_diverges: bool,
    /// first N at which the inner infimum exceeds the threshold
    pub n0: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateOptions {
    pub threshold: f64,
    pub dim: usize,
    pub ratio_tau_max: f64,
    pub ratio_points: usize,
    pub l: LOptions,
}

impl Default for GateOptions {
    fn default() -> Self {
        Self {
            threshold: 10.0,
            dim: 1,
            ratio_tau_max: 1e12,
            ratio_points: 400,
            l: LOptions::default(),
        }
    }
}

pub fn theorem3_gate(
    n_grid: &[f64],
    seq: &LogConvexSequence,
    controls: &WeightControls,
    opts: &GateOptions,
) -> Result<GateReport> {
    if n_grid.len() < 2 {
        return Err(Error::InvalidParameter("gate needs at least two values of N".into()));
    }
    let l_values: Vec<LValue> = n_grid
        .par_iter()
        .map(|&n| l_constant(n, seq, controls, &opts.l))
        .collect::<Result<_>>()?;
    let ratios: Vec<(f64, f64)> = n_grid
        .iter()
        .map(|&n| (n, growth_ratio(n, controls, opts.dim, opts.ratio_tau_max, opts.ratio_points)))
        .collect();
    let upper = &ratios[ratios.len() / 2..];
    let ratio_exponent = slope(upper.iter().map(|(n, r)| (n.ln(), r.ln())));
    let last = ratios.len() - 1;
    let ratio_diverges = ratios[last].1 > opts.threshold
        && ratios[last].1 > ratios[last - 1].1
        && ratios[last - 1].1 > ratios[last.saturating_sub(2)].1.min(ratios[last - 1].1 * (1.0 - 1e-12));
    let n0 = ratios.iter().find(|(_, r)| *r > opts.threshold).map(|(n, _)| *n);
    let case = if l_values.iter().all(LValue::is_positive) {
        GateCase::AnyN
    } else if ratio_diverges {
        GateCase::LargeN
    } else {
        GateCase::Neither
    };
    Ok(GateReport {
        case,
        l_values,
        ratios,
        ratio_exponent,
        ratio_diverges,
        n0,
    })
}

fn slope<I: Iterator<Item = (f64, f64)>>(points: I) -> f64 {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    sxy / sxx
}

/// Outcome of the vanishing-moment test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MomentOutcome {
    Pass { max_order: usize },
    Fail { alpha: Vec<u32>, value: f64, scale: f64 },
}

impl MomentOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, MomentOutcome::Pass { .. })
    }
}

fn multi_indices(dim: usize, order: u32) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![order]];
    }
    (0..=order)
        .flat_map(|first| {
            multi_indices(dim - 1, order - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Checks `sum_k k^alpha v[k] = 0` for `|alpha| <= max_order` in graded
/// order, each relative to `sum_k |k^alpha v[k]|`.
pub fn moment_check(v: &LatticeField, max_order: usize) -> MomentOutcome {
    const TOL: f64 = 1e-9;
    for order in 0..=max_order as u32 {
        for alpha in multi_indices(v.dim(), order) {
            let (sum, scale) = v.iter().fold((Complex64::default(), 0.0), |(s, a), (k, val)| {
                let mono: f64 = k.iter().zip(&alpha).map(|(&kj, &aj)| (kj as f64).powi(aj as i32)).product();
                (s + val * mono, a + (val * mono).norm())
            });
            if sum.norm() > TOL * scale {
                return MomentOutcome::Fail {
                    alpha,
                    value: sum.norm(),
                    scale,
                };
            }
        }
    }
    MomentOutcome::Pass { max_order }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub constant: f64,
    pub holds: bool,
    pub worst_radius: f64,
}

/// `sup_(k != 0) |v[k]| |k|^(d+1) T[M_j](|k|/rho)`, failing when the
/// weighted values on the outer half of the support exceed those on the
/// inner half by more than one percent.
pub fn decay_check(v: &LatticeField, seq: &LogConvexSequence, rho: f64) -> Result<DecayFit> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::Domain { what: "decay radius", value: rho });
    }
    let d = v.dim() as f64;
    let weighted: Vec<(f64, f64)> = v
        .iter()
        .filter(|(k, _)| k.iter().any(|&c| c != 0))
        .map(|(k, val)| {
            let r = k.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
            let t = seq.associated(r / rho, AssocMode::Raw)?;
            Ok((r, val.norm().ln() + (d + 1.0) * r.ln() + t.ln_value))
        })
        .collect::<Result<_>>()?;
    if weighted.is_empty() {
        return Ok(DecayFit {
            constant: 0.0,
            holds: true,
            worst_radius: 0.0,
        });
    }
    let (worst_radius, ln_sup) = weighted
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |acc, w| if w.1 > acc.1 { w } else { acc });
    let r_max = weighted.iter().map(|w| w.0).fold(0.0, f64::max);
    let split = |outer: bool| {
        weighted
            .iter()
            .filter(|w| (w.0 > 0.5 * r_max) == outer)
            .map(|w| w.1)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (inner, outer) = (split(false), split(true));
    let growing = inner > f64::NEG_INFINITY && outer > inner + 1.01f64.ln();
    let constant = ln_sup.exp();
    Ok(DecayFit {
        constant,
        holds: constant.is_finite() && !growing,
        worst_radius,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformBound {
    /// `sup |v_hat(theta)| T[M_j/j!](1/(d rho |theta|))` on the fitting grid
    pub constant: f64,
    /// the same supremum on the full grid
    pub checked_sup: f64,
    pub holds: bool,
}

fn transform_sup(v: &LatticeField, seq: &LogConvexSequence, rho: f64, grid: &TorusGrid) -> Result<f64> {
    let d = v.dim() as f64;
    let vals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let theta = grid.theta(i);
            let r = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
            if r == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            let t = seq.associated(1.0 / (d * rho * r), AssocMode::FactorialDivided)?;
            Ok(v.dtft(&theta).norm().ln() + t.ln_value)
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max).exp())
}

/// Fits the transform bound on the half-resolution grid and checks it on
/// `grid` with five percent slack.
pub fn transform_bound(v: &LatticeField, seq: &LogConvexSequence, rho: f64, grid: &TorusGrid) -> Result<TransformBound> {
    if grid.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: grid.dim(),
        });
    }
    let coarse = TorusGrid::new(grid.dim(), (grid.per_axis() / 2).max(2))?;
    let constant = transform_sup(v, seq, rho, &coarse)?;
    let checked_sup = transform_sup(v, seq, rho, grid)?;
    Ok(TransformBound {
        constant,
        checked_sup,
        holds: checked_sup.is_finite() && checked_sup <= 1.05 * constant,
    })
}
