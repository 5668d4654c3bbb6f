//! Log-convex sequences, Gevrey-type initial data and the functionals that
//! decide whether the total energy stays bounded.

mod data;
mod functional;
mod sequence;

pub use data::{GevreyData, GevreyKind};
pub use functional::{
    critical_n, decay_check, growth_ratio, initial_ln_spectrum, l_constant, ln_l_ratio, moment_check,
    theorem3_gate, transform_bound, u_functional, u_functional_spectrum, write_functional_csv, DecayFit,
    FunctionalValue, GateCase, GateOptions, GateReport, LOptions, LValue, MomentOutcome, TransformBound,
    UOptions, WeightControls,
};
pub use sequence::{AssocMode, AssocValue, LogConvexSequence, SequenceKind, INDEX_CAP};
