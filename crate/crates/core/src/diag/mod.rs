//! Zones, the refined diagonalization chain and energy bound certificates.

mod certificate;
mod chain;
mod symbol;
mod zones;

pub use certificate::{
    bound_certificate, effective_theta, gronwall_envelope, lambda_exponent, measured_ratio_range,
    uniform_envelope, Certificate, CertificateOptions, LambdaBound, ModeBound,
};
pub use chain::{
    diag_step, first_order_system, frozen_system, identity, level_one, mat_apply, mat_inv, mat_mul,
    norm_equivalence, singular_values_sq, ChainLevel, ConjugateSystem, DiagChain, DiagStep, Mat2,
};
pub use symbol::{chain_entry, verify_symbol_class, ChainEntry, SymbolFit};
pub use zones::{mu, ZoneFlavor, ZonePartition};
