//! Randomness thresholds for causal inference from 2x2 contingency data.
//!
//! Given exposure/outcome counts, this crate computes the threshold `T` of
//! sufficient randomness: the largest randomness of the data generating
//! process that is still consistent with the observed association under the
//! null of no causal effect. `T` equals one minus the absolute phi
//! coefficient of the table, and can equivalently be computed from the two
//! prevalences plus any one of RD, RR, or OR. The crate also provides the
//! realizability bounds for those association measures, the optimal two-point
//! latent distribution certifying `T`, a parametric multinomial bootstrap for
//! finite-sample uncertainty, and grid sweeps of `T` over association and
//! prevalence space.

pub mod bootstrap;
pub mod latent;
pub mod realizability;
pub mod sweep;
pub mod table;
pub mod threshold;

pub use bootstrap::{bootstrap_threshold, BootstrapError, BootstrapResult};
pub use latent::{
    optimal_two_point, DiscreteLatentDistribution, LatentAtom, LatentError, RandomnessSummary,
    TwoPointConstruction,
};
pub use realizability::{
    range, sigma_bounds, witness_table, Realizability, RealizabilityError, RealizableRange,
};
pub use sweep::{AssociationSweep, PrevalenceSweep, SweepError};
pub use table::{
    AssociationKind, AssociationMeasure, AssociationValue, CellProbabilities, ContingencyTable,
    Margins, TableError,
};
pub use threshold::{
    decide, or_to_rr, rr_to_or, threshold_from_summary, threshold_from_table, ComputationPath,
    Decision, RandomnessSpec, SummaryError, ThresholdReport,
};

/// Probabilities closer than this to 0 or 1 are treated as boundary values.
///
/// The cell simplex and the latent unit square are open sets; quantities this
/// close to the boundary have no defined path through some formulas.
pub const EPS_BOUNDARY: f64 = 1e-12;

/// Tolerance for user-supplied probabilities that should sum to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

pub(crate) fn in_open_unit(x: f64) -> bool {
    x.is_finite() && x > EPS_BOUNDARY && x < 1.0 - EPS_BOUNDARY
}

/// Signum with `sgn(0) = 0`, unlike `f64::signum` which maps `+0.0` to `1.0`.
pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
