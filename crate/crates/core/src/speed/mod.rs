//! Propagation speeds, their control functions and hypothesis checks.

mod chi;
mod control;
mod hypotheses;
mod profile;

pub use chi::{Chi, CosineBump};
pub use control::PowerLog;
pub use hypotheses::{
    applicable, cumulative_deviation, verify_hypotheses, verify_selected, GecCase, Hypothesis,
    HypothesisRecord, HypothesisReport, VerificationGrid,
};
pub use profile::{BumpWindow, Example1, Example2Params, ProfileSpec, SpeedProfile};
