//! Logarithmically convex sequences and their associated functions
//! `T(tau) = sup_j tau^j / M_j`, evaluated in log space.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest index scanned before declaring the supremum infinite.
pub const INDEX_CAP: u64 = 1 << 53;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// `j!^nu`
    FactorialPower { nu: f64 },
    /// `j! exp(b j^sigma)`
    Exponential { b: f64, sigma: f64 },
    /// explicit values `M_0, M_1, ...`; the sequence ends with the table
    Table { values: Vec<f64> },
}

/// Whether to use `M_j` itself or `M_j / j!`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssocMode {
    Raw,
    FactorialDivided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogConvexSequence {
    #[serde(flatten)]
    pub kind: SequenceKind,
    /// first index included in the supremum
    #[serde(default)]
    pub start: u64,
}

/// Value of the associated function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssocValue {
    /// `ln T(tau)`, `+inf` when the supremum is not attained below the cap
    pub ln_value: f64,
    /// first maximizing index
    pub argmax: u64,
}

impl AssocValue {
    pub fn is_infinite(&self) -> bool {
        self.ln_value == f64::INFINITY
    }

    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

impl LogConvexSequence {
    pub fn new(kind: SequenceKind) -> Result<Self> {
        let seq = Self { kind, start: 0 };
        seq.validate()?;
        Ok(seq)
    }

    pub fn factorial_power(nu: f64) -> Result<Self> {
        Self::new(SequenceKind::FactorialPower { nu })
    }

    pub fn exponential(b: f64, sigma: f64) -> Result<Self> {
        Self::new(SequenceKind::Exponential { b, sigma })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        Self::new(SequenceKind::Table { values })
    }

    pub fn starting_at(mut self, start: u64) -> Self {
        self.start = start;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SequenceKind::FactorialPower { nu } if !(nu.is_finite() && *nu >= 0.0) => {
                Err(Error::InvalidParameter(format!("factorial power {nu}")))
            }
            SequenceKind::Exponential { b, sigma } if !(*b > 0.0 && *sigma >= 1.0) => {
                Err(Error::InvalidParameter(format!("exponential sequence b = {b}, sigma = {sigma}")))
            }
            SequenceKind::Table { values } => {
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidParameter("table entries must be positive".into()));
                }
                let ln: Vec<f64> = values.iter().map(|v| v.ln()).collect();
                for j in 1..ln.len().saturating_sub(1) {
                    let (back, fwd) = (ln[j] - ln[j - 1], ln[j + 1] - ln[j]);
                    if back > fwd + 1e-12 * back.abs().max(1.0) {
                        return Err(Error::InvalidParameter(format!("table is not log-convex at j = {j}")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Last index of the sequence (`None` for infinite sequences).
    fn last_index(&self) -> Option<u64> {
        match &self.kind {
            SequenceKind::Table { values } => Some(values.len() as u64 - 1),
            _ => None,
        }
    }

    pub fn ln_m(&self, j: u64, mode: AssocMode) -> f64 {
        let jf = j as f64;
        let ln_fact = ln_gamma(jf + 1.0);
        let raw = match &self.kind {
            SequenceKind::FactorialPower { nu } => nu * ln_fact,
            SequenceKind::Exponential { b, sigma } => ln_fact + b * jf.powf(*sigma),
            SequenceKind::Table { values } => values[j as usize].ln(),
        };
        match mode {
            AssocMode::Raw => raw,
            AssocMode::FactorialDivided => match &self.kind {
                // avoid cancellation for the closed forms
                SequenceKind::FactorialPower { nu } => (nu - 1.0) * ln_fact,
                SequenceKind::Exponential { b, sigma } => b * jf.powf(*sigma),
                SequenceKind::Table { .. } => raw - ln_fact,
            },
        }
    }

    /// `ln(M_(j+1) / M_j)`, nondecreasing in `j` for a log-convex sequence.
    pub fn ln_step(&self, j: u64, mode: AssocMode) -> f64 {
        let jf = j as f64;
        let ln_next = (jf + 1.0).ln();
        let fact = match mode {
            AssocMode::Raw => 1.0,
            AssocMode::FactorialDivided => 0.0,
        };
        match &self.kind {
            SequenceKind::FactorialPower { nu } => (nu - 1.0 + fact) * ln_next,
            SequenceKind::Exponential { b, sigma } => {
                fact * ln_next + b * ((jf + 1.0).powf(*sigma) - jf.powf(*sigma))
            }
            SequenceKind::Table { .. } => self.ln_m(j + 1, mode) - self.ln_m(j, mode),
        }
    }

    /// Associated function `sup_(j >= start) tau^j / M_j`.
    ///
    /// Term ratios `tau M_j / M_(j+1)` are nonincreasing, so the maximizer is
    /// the first index whose ratio drops below one; it is located by a
    /// galloping search with the monotonicity checked at every probe.
    pub fn associated(&self, tau: f64, mode: AssocMode) -> Result<AssocValue> {
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::Domain { what: "associated function argument", value: tau });
        }
        if tau == 0.0 {
            return Ok(if self.start == 0 {
                AssocValue { ln_value: -self.ln_m(0, mode), argmax: 0 }
            } else {
                AssocValue { ln_value: f64::NEG_INFINITY, argmax: self.start }
            });
        }
        let ln_tau = tau.ln();
        let cap = self.last_index().unwrap_or(INDEX_CAP);
        // ratio(j) = ln tau - ln_step(j); find the first j with ratio < 0
        let rises = |j: u64| ln_tau - self.ln_step(j, mode) >= 0.0;
        let mut lo = self.start;
        if lo >= cap || !rises(lo) {
            return Ok(self.term(lo.min(cap), ln_tau, mode));
        }
        let mut width = 1u64;
        let mut hi;
        loop {
            hi = lo.saturating_add(width).min(cap);
            self.check_monotone(lo, hi, mode)?;
            if hi >= cap {
                if rises(cap - 1) {
                    // a flat tail is attained; a rising one is not
                    if ln_tau - self.ln_step(cap - 1, mode) == 0.0 {
                        return Ok(self.term(cap, ln_tau, mode));
                    }
                    return Ok(AssocValue { ln_value: f64::INFINITY, argmax: cap });
                }
                break;
            }
            if !rises(hi) {
                break;
            }
            lo = hi;
            width = width.saturating_mul(2);
        }
        // rises(lo) holds and rises(hi) fails: bisect
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if rises(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut best = hi;
        // ties: walk back over unit ratios
        while best > self.start && ln_tau - self.ln_step(best - 1, mode) == 0.0 {
            best -= 1;
        }
        Ok(self.term(best, ln_tau, mode))
    }

    fn term(&self, j: u64, ln_tau: f64, mode: AssocMode) -> AssocValue {
        AssocValue {
            ln_value: j as f64 * ln_tau - self.ln_m(j, mode),
            argmax: j,
        }
    }

    fn check_monotone(&self, lo: u64, hi: u64, mode: AssocMode) -> Result<()> {
        if hi <= lo + 1 {
            return Ok(());
        }
        let (a, b) = (self.ln_step(lo, mode), self.ln_step(hi - 1, mode));
        if a > b + 1e-12 * a.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "term ratios increase between j = {lo} and j = {}",
                hi - 1
            )));
        }
        Ok(())
    }

    /// Associated function as a plain number. Small maximizers are
    /// evaluated by direct products so exact cases stay exact.
    pub fn associated_value(&self, tau: f64, mode: AssocMode) -> Result<f64> {
        let eval = self.associated(tau, mode)?;
        if eval.is_infinite() {
            return Ok(f64::INFINITY);
        }
        if eval.argmax <= 20 {
            if let Some(m) = self.small_value(eval.argmax, mode) {
                return Ok(tau.powi(eval.argmax as i32) / m);
            }
        }
        Ok(eval.value())
    }

    fn small_value(&self, j: u64, mode: AssocMode) -> Option<f64> {
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        let raw = match &self.kind {
            SequenceKind::FactorialPower { nu } if nu.fract() == 0.0 => fact.powi(*nu as i32),
            SequenceKind::Table { values } => values[j as usize],
            _ => return None,
        };
        Some(match mode {
            AssocMode::Raw => raw,
            AssocMode::FactorialDivided => match &self.kind {
                SequenceKind::FactorialPower { nu } => fact.powi(*nu as i32 - 1),
                _ => raw / fact,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(seq: &LogConvexSequence, tau: f64, mode: AssocMode, upto: u64) -> f64 {
        (seq.start..=upto)
            .map(|j| j as f64 * tau.ln() - seq.ln_m(j, mode))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn factorial_at_four() {
        let seq = LogConvexSequence::factorial_power(1.0).unwrap();
        let eval = seq.associated(4.0, AssocMode::Raw).unwrap();
        assert_eq!(eval.argmax, 3);
        assert_eq!(seq.associated_value(4.0, AssocMode::Raw).unwrap(), 32.0 / 3.0);
        assert!((eval.ln_value - brute(&seq, 4.0, AssocMode::Raw, 20)).abs() < 1e-14);
    }

    #[test]
    fn squared_factorial_at_one() {
        let seq = LogConvexSequence::factorial_power(2.0).unwrap();
        let eval = seq.associated(1.0, AssocMode::Raw).unwrap();
        assert_eq!(eval.argmax, 0);
        assert_eq!(seq.associated_value(1.0, AssocMode::Raw).unwrap(), 1.0);
    }

    #[test]
    fn galloping_matches_scan() {
        let seqs = [
            LogConvexSequence::factorial_power(2.0).unwrap(),
            LogConvexSequence::factorial_power(1.5).unwrap(),
            LogConvexSequence::exponential(0.5, 2.0).unwrap(),
            LogConvexSequence::factorial_power(3.0).unwrap().starting_at(1),
        ];
        for seq in &seqs {
            for mode in [AssocMode::Raw, AssocMode::FactorialDivided] {
                for tau in [0.3, 1.0, 2.5, 17.0, 130.0, 900.0] {
                    let fast = seq.associated(tau, mode).unwrap();
                    let slow = brute(seq, tau, mode, 1_000_000);
                    assert!((fast.ln_value - slow).abs() < 1e-9 * slow.abs().max(1.0), "{seq:?} {tau}");
                }
            }
        }
    }

    #[test]
    fn unbounded_and_flat_tables() {
        let ones = LogConvexSequence::table(vec![1.0; 50]).unwrap();
        assert!(ones.associated(2.0, AssocMode::Raw).unwrap().is_infinite());
        assert_eq!(ones.associated_value(1.0, AssocMode::Raw).unwrap(), 1.0);
        assert_eq!(ones.associated_value(0.5, AssocMode::Raw).unwrap(), 1.0);
        // factorial-divided of a constant never stops growing
        let fd = LogConvexSequence::factorial_power(1.0).unwrap();
        assert!(fd.associated(1.5, AssocMode::FactorialDivided).unwrap().is_infinite());
    }

    #[test]
    fn rejects_concave_tables() {
        assert!(LogConvexSequence::table(vec![1.0, 4.0, 8.0]).is_err());
        assert!(LogConvexSequence::table(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn huge_argument_uses_large_index() {
        let seq = LogConvexSequence::factorial_power(2.0).unwrap();
        let eval = seq.associated(1e6, AssocMode::FactorialDivided).unwrap();
        // tie between 999999 and 10^6, the first maximizer is reported
        assert_eq!(eval.argmax, 999_999);
        // T[j!](tau) ~ exp(tau) / sqrt(2 pi tau)
        let approx = 1e6 - 0.5 * (2.0 * std::f64::consts::PI * 1e6).ln();
        assert!((eval.ln_value - approx).abs() < 1e-3);
    }
}
