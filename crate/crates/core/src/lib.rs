//! Semi-discrete wave equation with a time-dependent propagation speed.
//!
//! The lattice problem `u'' = a(t)^2 sum_j D_j^+ D_j^- u` decouples under
//! the discrete-time Fourier transform into independent oscillators
//! `v'' + a(t)^2 |xi|^2 v = 0`. This crate integrates those modes, builds
//! the energy densities, and computes the two-sided bound certificates of
//! the diagonalization argument so that measured energies can be checked
//! against them.

pub mod diag;
pub mod error;
pub mod gevrey;
pub mod jet;
pub mod lattice;
pub mod ode;
pub mod quad;
pub mod solver;
pub mod speed;

pub use error::{Error, Result};
