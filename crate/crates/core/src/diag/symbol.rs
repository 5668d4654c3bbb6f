//! Empirical membership in the symbol classes
//! `|d_t^k f(t, xi)| <= C |xi|^q Xi(t)^(-r-k)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::ComplexJet;
use crate::speed::PowerLog;

use super::chain::{diag_step, level_one};
use crate::speed::SpeedProfile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymbolFit {
    pub constant: f64,
    pub holds: bool,
    pub worst_t: f64,
    pub worst_xi: f64,
}

/// Entries of the chain that can be sampled as symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainEntry {
    /// off-diagonal entry of level k
    R(usize),
    /// diagonalizer entry of level k
    Delta(usize),
}

/// Jet of a chain entry at `(t, xi)`; its order is the remaining budget.
pub fn chain_entry(profile: &SpeedProfile, xi_norm: f64, t: f64, entry: ChainEntry) -> Result<ComplexJet> {
    let level = match entry {
        ChainEntry::R(k) | ChainEntry::Delta(k) => k,
    };
    if level == 0 || level > profile.m() {
        return Err(Error::DerivativeBudget { level });
    }
    let mut sys = level_one(profile, xi_norm, t)?;
    for _ in 1..level {
        sys = diag_step(&sys, t)?.next;
    }
    match entry {
        ChainEntry::R(_) => Ok(sys.r),
        ChainEntry::Delta(_) => Ok(diag_step(&sys, t)?.delta_jet),
    }
}

/// Fits the smallest constant of the class `S^(p){q, r}` over the samples.
/// `f` returns a jet of order at least `p`. The class is rejected when the
/// weighted supremum over the last decade of sample times exceeds the one
/// before it by more than 5%.
pub fn verify_symbol_class<F>(
    f: F,
    p: usize,
    q: f64,
    r: f64,
    xi: PowerLog,
    samples: &[(f64, f64)],
) -> Result<SymbolFit>
where
    F: Fn(f64, f64) -> Result<ComplexJet>,
{
    let mut weighted = Vec::with_capacity(samples.len());
    for &(t, xi_norm) in samples {
        let jet = f(t, xi_norm)?;
        if jet.order() < p {
            return Err(Error::DerivativeOrder {
                requested: p,
                available: jet.order(),
            });
        }
        let scale = xi_norm.powf(-q);
        let sup = (0..=p)
            .map(|k| jet.deriv(k).norm() * scale * xi.value(t).powf(r + k as f64))
            .fold(0.0, f64::max);
        weighted.push((t, xi_norm, sup));
    }
    let Some(t_last) = weighted.iter().map(|w| w.0).reduce(f64::max) else {
        return Err(Error::InvalidParameter("no symbol samples".into()));
    };
    let cut = t_last / 10.0;
    let (mut head, mut tail) = (0.0_f64, 0.0_f64);
    let mut best = (0.0_f64, 0.0, 0.0);
    for &(t, x, v) in &weighted {
        if t < cut {
            head = head.max(v);
        } else {
            tail = tail.max(v);
        }
        if v > best.0 || v.is_nan() {
            best = (v, t, x);
        }
    }
    let holds = best.0.is_finite() && (tail <= 1.05 * head || head == 0.0 && tail == 0.0);
    Ok(SymbolFit {
        constant: if holds { best.0 } else { f64::INFINITY },
        holds,
        worst_t: best.1,
        worst_xi: best.2,
    })
}
