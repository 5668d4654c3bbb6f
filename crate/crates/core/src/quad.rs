//! One-dimensional quadrature: adaptive Simpson, Gauss-Legendre panels and
//! semi-infinite tails.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Adaptive Simpson with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// `ln` of the integral of `exp(ln_f)` over `[a, b]`, for integrands
    /// far outside the floating point range.
    pub fn ln_integrate<F: Fn(f64) -> f64>(&self, ln_f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w.ln() + ln_f(mid + half * x))
            .collect();
        half.ln() + log_sum_exp(&terms)
    }

    /// Shared 20-point rule.
    pub fn standard() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive bisection of Gauss-Legendre panels until each panel agrees with
/// its two halves to `abs_tol` (scaled by panel share).
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let rule = GaussLegendre::standard();
    let whole = rule.integrate(f, a, b);
    gauss_rec(f, rule, a, b, whole, abs_tol, 48)
}

fn gauss_rec<F: Fn(f64) -> f64>(
    f: &F,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    let sum = left + right;
    if !sum.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    if (sum - whole).abs() <= tol.max(8.0 * f64::EPSILON * sum.abs()) {
        return Ok(sum);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!("depth limit on [{a}, {b}]")));
    }
    Ok(gauss_rec(f, rule, a, m, left, 0.5 * tol, depth - 1)?
        + gauss_rec(f, rule, m, b, right, 0.5 * tol, depth - 1)?)
}

/// Integral over [a, b] split at the given interior breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
) -> Result<f64> {
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);
    let share = abs_tol / (knots.len() - 1) as f64;
    knots
        .windows(2)
        .map(|w| adaptive_gauss(f, w[0], w[1], share))
        .sum()
}

/// `integral_{t0}^{inf} f(s) ds` for integrands with at least power-law
/// decay, through `s = (1 + t0) e^u - 1`. The u-range grows in doubling
/// chunks until a chunk contributes below `rel_tol` of the running total.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: &F, t0: f64, rel_tol: f64) -> Result<f64> {
    let base = 1.0 + t0;
    let g = |u: f64| {
        let e = base * u.exp();
        f(e - 1.0) * e
    };
    let mut total: f64 = 0.0;
    let mut lo = 0.0;
    let mut width = 1.0;
    let mut previous_chunk = f64::INFINITY;
    for _ in 0..60 {
        let hi = lo + width;
        let rough = GaussLegendre::standard().integrate(&g, lo, hi).abs();
        let scale = total.abs().max(rough).max(1e-300);
        let chunk = adaptive_gauss(&g, lo, hi, 0.1 * rel_tol * scale)?;
        total += chunk;
        if chunk.abs() <= rel_tol * total.abs() && chunk.abs() <= previous_chunk.abs() {
            return Ok(total);
        }
        previous_chunk = chunk;
        lo = hi;
        width = (2.0 * width).min(64.0);
        if lo > 700.0 {
            break;
        }
    }
    Err(Error::Quadrature(format!("tail integral from {t0} did not settle")))
}

/// `ln(sum exp(x_i))` without overflow; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + terms.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}
