//! Empirical verification of the closed forms.

pub mod experiments;
pub mod quadrature;
pub mod stats;
pub mod waterfill;

pub use experiments::{
    mc_distribution_identity, mc_end_to_end, mc_estimator_moments, mc_leakage, mc_lln, mc_sinr,
    EndToEnd, EndToEndOptions, EstimatorMoments, LeakageEstimate, LlnPoint, MomentComparison,
    SinrBlock, SinrEstimate, SinrParts,
};
pub use stats::{McEstimate, McRun, Z_GATE};
pub use waterfill::{solve_waterfilling, WaterfillingSolution};
