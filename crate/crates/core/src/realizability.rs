//! Which (prevalence, prevalence, association) triples can arise from an
//! open-simplex table, and the exact bound functions for each measure.
//!
//! Every measure of association is continuous and monotone in the covariance
//! `sigma_ed`, and `sigma_ed` itself ranges over an open interval determined
//! by the margins. The bounds below are the images of that interval.

use thiserror::Error;

use crate::table::{AssociationKind, AssociationMeasure, AssociationValue, CellProbabilities};
use crate::threshold::or_to_rr;
use crate::{in_open_unit, TableError};

/// Distance to a bound below which a triple is reported as boundary rather
/// than realizable or not.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RealizabilityError {
    #[error("sigma_ed = {sigma} lies outside the open interval ({lower}, {upper})")]
    SigmaOutOfRange { sigma: f64, lower: f64, upper: f64 },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Open interval of covariances attainable at the given margins:
/// `-min(p_e p_d, (1-p_e)(1-p_d)) < sigma_ed < min(p_e(1-p_d), p_d(1-p_e))`.
pub fn sigma_bounds(p_e: f64, p_d: f64) -> (f64, f64) {
    assert!(
        in_open_unit(p_e) && in_open_unit(p_d),
        "prevalences must lie in (0, 1)"
    );
    let lower = -(p_e * p_d).min((1.0 - p_e) * (1.0 - p_d));
    let upper = (p_e * (1.0 - p_d)).min(p_d * (1.0 - p_e));
    (lower, upper)
}

/// The open range of realizable values for one association measure at fixed
/// prevalences. Neither endpoint is attainable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealizableRange {
    pub kind: AssociationKind,
    pub lower: f64,
    /// Upper bound; `f64::INFINITY` for OR always and for RR when
    /// `p_e >= p_d`.
    pub upper: f64,
    pub lower_attainable: bool,
    pub upper_attainable: bool,
}

impl RealizableRange {
    /// Strict containment; the range is open at both ends.
    pub fn contains(&self, value: f64) -> bool {
        self.lower < value && value < self.upper
    }
}

/// Bound functions `l_alpha` and `u_alpha` for the given measure.
pub fn range(p_e: f64, p_d: f64, kind: AssociationKind) -> RealizableRange {
    assert!(
        in_open_unit(p_e) && in_open_unit(p_d),
        "prevalences must lie in (0, 1)"
    );
    let (lower, upper) = match kind {
        AssociationKind::RiskDifference => (
            -(p_d / (1.0 - p_e)).min((1.0 - p_d) / p_e),
            (p_d / p_e).min((1.0 - p_d) / (1.0 - p_e)),
        ),
        AssociationKind::RelativeRisk => {
            let lower = (0.0f64).max((p_e + p_d - 1.0) / p_e);
            let upper = if p_e < p_d {
                (1.0 - p_e) / (p_d - p_e)
            } else {
                f64::INFINITY
            };
            (lower, upper)
        }
        AssociationKind::OddsRatio => (0.0, f64::INFINITY),
        AssociationKind::Phi => {
            let odds_e = p_e / (1.0 - p_e);
            let odds_d = p_d / (1.0 - p_d);
            let upper = (odds_e / odds_d).min(odds_d / odds_e).sqrt();
            let lower = -((odds_e * odds_d).min(1.0 / (odds_e * odds_d))).sqrt();
            (lower, upper)
        }
    };
    RealizableRange {
        kind,
        lower,
        upper,
        lower_attainable: false,
        upper_attainable: false,
    }
}

/// Outcome of a realizability check.
#[derive(Clone, Debug, PartialEq)]
pub enum Realizability {
    /// Strictly realizable, with a table realizing the triple.
    Realizable(CellProbabilities),
    /// Within [`BOUNDARY_TOL`] of a bound; neither accepted nor rejected.
    Boundary,
    NotRealizable,
}

impl Realizability {
    pub fn is_realizable(&self) -> bool {
        matches!(self, Realizability::Realizable(_))
    }

    pub fn witness(&self) -> Option<&CellProbabilities> {
        match self {
            Realizability::Realizable(cells) => Some(cells),
            _ => None,
        }
    }
}

/// Decide whether `(p_e, p_d, alpha)` can arise from an open-simplex table.
///
/// Boundary-flagged association values are never realizable: the ranges are
/// open.
pub fn check(p_e: f64, p_d: f64, alpha: &AssociationMeasure) -> Realizability {
    if !in_open_unit(p_e) || !in_open_unit(p_d) {
        return Realizability::NotRealizable;
    }
    let value = match alpha.value {
        AssociationValue::Finite(value) => value,
        _ => return Realizability::NotRealizable,
    };
    let bounds = range(p_e, p_d, alpha.kind);
    if !bounds.contains(value) {
        return Realizability::NotRealizable;
    }
    let near_lower = bounds.lower.is_finite() && value - bounds.lower < BOUNDARY_TOL;
    let near_upper = bounds.upper.is_finite() && bounds.upper - value < BOUNDARY_TOL;
    if near_lower || near_upper {
        return Realizability::Boundary;
    }
    let sigma = sigma_from_association(p_e, p_d, alpha.kind, value);
    match witness_table(p_e, p_d, sigma) {
        Ok(cells) => Realizability::Realizable(cells),
        // interior by range check, so a failure here means the witness cells
        // collapsed onto the simplex boundary numerically
        Err(_) => Realizability::Boundary,
    }
}

/// Covariance realizing the given association value at fixed prevalences.
pub(crate) fn sigma_from_association(p_e: f64, p_d: f64, kind: AssociationKind, value: f64) -> f64 {
    match kind {
        AssociationKind::RiskDifference => value * p_e * (1.0 - p_e),
        AssociationKind::RelativeRisk => {
            let rd = p_d * (value - 1.0) / (1.0 + p_e * (value - 1.0));
            rd * p_e * (1.0 - p_e)
        }
        AssociationKind::OddsRatio => {
            let rr = or_to_rr(p_e, p_d, value);
            sigma_from_association(p_e, p_d, AssociationKind::RelativeRisk, rr)
        }
        AssociationKind::Phi => value * (p_e * (1.0 - p_e) * p_d * (1.0 - p_d)).sqrt(),
    }
}

/// The unique cells with the given margins and covariance:
/// `p11 = p_e p_d + sigma_ed`, the rest by subtraction.
pub fn witness_table(
    p_e: f64,
    p_d: f64,
    sigma_ed: f64,
) -> Result<CellProbabilities, RealizabilityError> {
    let (lower, upper) = sigma_bounds(p_e, p_d);
    if !(sigma_ed > lower && sigma_ed < upper) {
        return Err(RealizabilityError::SigmaOutOfRange {
            sigma: sigma_ed,
            lower,
            upper,
        });
    }
    let p11 = p_e * p_d + sigma_ed;
    let p10 = p_e - p11;
    let p01 = p_d - p11;
    let p00 = 1.0 - p11 - p10 - p01;
    Ok(CellProbabilities::new(p01, p11, p00, p10)?)
}
