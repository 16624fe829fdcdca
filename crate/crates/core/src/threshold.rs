//! The threshold `T` of sufficient randomness, from a table or from summary
//! statistics, plus the decision rule comparing it against elicited
//! coefficients of determinism.
//!
//! From a table, `T = 1 - |phi|`. From `(p_e, p_d)` and one association
//! measure, with `k = sqrt(p_e(1-p_e) / (p_d(1-p_d)))`:
//!
//! ```text
//!   T = 1 - |RD| k
//!   T = 1 - |p_d (RR-1) / (1 + p_e (RR-1))| k
//!   T = 1 - |p_d (u-1)  / (1 + p_e (u-1))| k    with u the RR matching OR
//! ```
//!
//! Both routes agree on any table realizing the same summary triple.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::realizability::{self, Realizability};
use crate::table::{
    AssociationKind, AssociationMeasure, AssociationValue, CellProbabilities, Margins, TableError,
};
use crate::{in_open_unit, sgn};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("prevalence {name} = {value} must lie strictly inside (0, 1)")]
    InvalidPrevalence { name: &'static str, value: f64 },
    #[error("coefficient of determinism {name} = {value} must lie in [0, 1)")]
    InvalidCoefficient { name: &'static str, value: f64 },
    #[error(
        "{kind} = {value} is not realizable at p_e = {p_e}, p_d = {p_d}: \
         the realizable range is ({lower}, {upper})"
    )]
    NotRealizable {
        kind: AssociationKind,
        value: f64,
        p_e: f64,
        p_d: f64,
        lower: f64,
        upper: f64,
    },
    #[error(
        "{kind} = {value} sits on the realizability boundary at p_e = {p_e}, p_d = {p_d}; \
         boundary triples have no defined threshold"
    )]
    BoundaryTriple {
        kind: AssociationKind,
        value: f64,
        p_e: f64,
        p_d: f64,
    },
    #[error("association value is a boundary flag ({value}); the threshold needs a finite value")]
    BoundaryValue { value: AssociationValue },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// How a report was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputationPath {
    FromTable,
    FromSummaryRd,
    FromSummaryRr,
    FromSummaryOr,
    FromSummaryPhi,
}

/// RD, RR, and OR for one table or summary triple, each possibly pinned to a
/// boundary by a zero cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociationProfile {
    pub rd: AssociationValue,
    pub rr: AssociationValue,
    pub or: AssociationValue,
}

/// The threshold together with every intermediate quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    /// Threshold of sufficient randomness, `1 - |phi|`, in (0, 1].
    pub t: f64,
    pub phi: f64,
    pub sigma_ed: f64,
    pub margins: Margins,
    pub associations: AssociationProfile,
    pub chi_squared_over_n: f64,
    pub path: ComputationPath,
    /// Set when the association is exactly null (RD = 0, RR = 1, OR = 1,
    /// phi = 0), where T = 1 is the continuous value.
    pub no_association: bool,
}

/// Threshold from the observed cell probabilities.
pub fn threshold_from_table(cells: &CellProbabilities) -> ThresholdReport {
    let margins = cells.margins();
    let sigma_ed = cells.sigma_ed();
    let phi = cells.phi();
    ThresholdReport {
        t: 1.0 - phi.abs(),
        phi,
        sigma_ed,
        margins,
        associations: AssociationProfile {
            rd: cells.association(AssociationKind::RiskDifference).value,
            rr: cells.association(AssociationKind::RelativeRisk).value,
            or: cells.association(AssociationKind::OddsRatio).value,
        },
        chi_squared_over_n: cells.chi_squared_over_n(),
        path: ComputationPath::FromTable,
        no_association: sigma_ed == 0.0,
    }
}

/// Threshold from prevalences and a single association measure.
///
/// The triple is checked for realizability first; a null association (RD = 0,
/// RR = 1, OR = 1, phi = 0) yields `T = 1` with the `no_association` flag
/// rather than an error.
pub fn threshold_from_summary(
    p_e: f64,
    p_d: f64,
    alpha: AssociationMeasure,
) -> Result<ThresholdReport, SummaryError> {
    if !in_open_unit(p_e) {
        return Err(SummaryError::InvalidPrevalence {
            name: "p_e",
            value: p_e,
        });
    }
    if !in_open_unit(p_d) {
        return Err(SummaryError::InvalidPrevalence {
            name: "p_d",
            value: p_d,
        });
    }
    let value = match alpha.value {
        AssociationValue::Finite(value) => value,
        other => return Err(SummaryError::BoundaryValue { value: other }),
    };
    let path = match alpha.kind {
        AssociationKind::RiskDifference => ComputationPath::FromSummaryRd,
        AssociationKind::RelativeRisk => ComputationPath::FromSummaryRr,
        AssociationKind::OddsRatio => ComputationPath::FromSummaryOr,
        AssociationKind::Phi => ComputationPath::FromSummaryPhi,
    };

    let null_value = match alpha.kind {
        AssociationKind::RiskDifference | AssociationKind::Phi => 0.0,
        AssociationKind::RelativeRisk | AssociationKind::OddsRatio => 1.0,
    };
    if value == null_value {
        return Ok(degenerate_report(p_e, p_d, path));
    }

    match realizability::check(p_e, p_d, &alpha) {
        Realizability::Realizable(_) => {}
        Realizability::Boundary => {
            return Err(SummaryError::BoundaryTriple {
                kind: alpha.kind,
                value,
                p_e,
                p_d,
            })
        }
        Realizability::NotRealizable => {
            let bounds = realizability::range(p_e, p_d, alpha.kind);
            return Err(SummaryError::NotRealizable {
                kind: alpha.kind,
                value,
                p_e,
                p_d,
                lower: bounds.lower,
                upper: bounds.upper,
            });
        }
    }

    let k = (p_e * (1.0 - p_e) / (p_d * (1.0 - p_d))).sqrt();
    let (phi, t) = match alpha.kind {
        AssociationKind::RiskDifference => {
            let t = 1.0 - value.abs() * k;
            (sgn(value) * (1.0 - t), t)
        }
        AssociationKind::RelativeRisk => {
            let rd = p_d * (value - 1.0) / (1.0 + p_e * (value - 1.0));
            let t = 1.0 - rd.abs() * k;
            (sgn(value - 1.0) * (1.0 - t), t)
        }
        AssociationKind::OddsRatio => {
            let u = or_to_rr(p_e, p_d, value);
            let rd = p_d * (u - 1.0) / (1.0 + p_e * (u - 1.0));
            let t = 1.0 - rd.abs() * k;
            (sgn(value - 1.0) * (1.0 - t), t)
        }
        AssociationKind::Phi => (value, 1.0 - value.abs()),
    };

    let sigma_ed = phi * (p_e * (1.0 - p_e) * p_d * (1.0 - p_d)).sqrt();
    let rd = phi / k;
    let rr = rd_to_rr(p_e, p_d, rd);
    let or = rr_to_or_unchecked(p_e, p_d, rr);
    Ok(ThresholdReport {
        t,
        phi,
        sigma_ed,
        margins: Margins::new(p_e, p_d),
        associations: AssociationProfile {
            rd: AssociationValue::Finite(rd),
            rr: AssociationValue::Finite(rr),
            or: AssociationValue::Finite(or),
        },
        chi_squared_over_n: phi * phi,
        path,
        no_association: false,
    })
}

fn degenerate_report(p_e: f64, p_d: f64, path: ComputationPath) -> ThresholdReport {
    ThresholdReport {
        t: 1.0,
        phi: 0.0,
        sigma_ed: 0.0,
        margins: Margins::new(p_e, p_d),
        associations: AssociationProfile {
            rd: AssociationValue::Finite(0.0),
            rr: AssociationValue::Finite(1.0),
            or: AssociationValue::Finite(1.0),
        },
        chi_squared_over_n: 0.0,
        path,
        no_association: true,
    }
}

/// The relative risk consistent with a given odds ratio and prevalences.
///
/// Solves `p_e u^2 + a u + c = 0` with `a = p_d(OR-1) + (1-p_e) - p_e OR`
/// and `c = (p_e-1) OR`, taking the root with `u = 1` at `OR = 1`. The two
/// algebraically equal root expressions are selected by the sign of `a` to
/// avoid cancellation when `4 p_e |c|` is small against `a^2`.
pub fn or_to_rr(p_e: f64, p_d: f64, odds_ratio: f64) -> f64 {
    assert!(
        in_open_unit(p_e) && in_open_unit(p_d),
        "prevalences must lie in (0, 1)"
    );
    assert!(odds_ratio > 0.0, "OR must be positive");
    let a = p_d * (odds_ratio - 1.0) + (1.0 - p_e) - p_e * odds_ratio;
    let c = (p_e - 1.0) * odds_ratio;
    // a^2 - 4 p_e c = a^2 + 4 p_e (1-p_e) OR > 0
    let discriminant = (a * a - 4.0 * p_e * c).sqrt();
    if a <= 0.0 {
        (-a + discriminant) / (2.0 * p_e)
    } else {
        2.0 * c / (-a - discriminant)
    }
}

/// The odds ratio consistent with a given relative risk and prevalences.
///
/// Inverse of [`or_to_rr`]: round trips to within 1e-10 on realizable
/// triples.
pub fn rr_to_or(p_e: f64, p_d: f64, relative_risk: f64) -> Result<f64, SummaryError> {
    let alpha = AssociationMeasure::new(AssociationKind::RelativeRisk, relative_risk)?;
    match realizability::check(p_e, p_d, &alpha) {
        Realizability::Realizable(_) => Ok(rr_to_or_unchecked(p_e, p_d, relative_risk)),
        Realizability::Boundary => Err(SummaryError::BoundaryTriple {
            kind: AssociationKind::RelativeRisk,
            value: relative_risk,
            p_e,
            p_d,
        }),
        Realizability::NotRealizable => {
            let bounds = realizability::range(p_e, p_d, AssociationKind::RelativeRisk);
            Err(SummaryError::NotRealizable {
                kind: AssociationKind::RelativeRisk,
                value: relative_risk,
                p_e,
                p_d,
                lower: bounds.lower,
                upper: bounds.upper,
            })
        }
    }
}

fn rd_to_rr(p_e: f64, p_d: f64, rd: f64) -> f64 {
    1.0 + rd / (p_d - p_e * rd)
}

/// `q = p_d / (1 + p_e (RR-1))` is the risk among the unexposed; the odds
/// ratio follows from `RR = OR / (1 - q + q OR)`.
fn rr_to_or_unchecked(p_e: f64, p_d: f64, rr: f64) -> f64 {
    let q = p_d / (1.0 + p_e * (rr - 1.0));
    rr * (1.0 - q) / (1.0 - rr * q)
}

/// Elicited coefficients of determinism for exposure and outcome assignment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomnessSpec {
    pub r2_p: f64,
    pub r2_r: f64,
}

impl RandomnessSpec {
    pub fn new(r2_p: f64, r2_r: f64) -> Result<Self, SummaryError> {
        for (name, value) in [("R2_p", r2_p), ("R2_r", r2_r)] {
            if !value.is_finite() || !(0.0..1.0).contains(&value) {
                return Err(SummaryError::InvalidCoefficient { name, value });
            }
        }
        Ok(Self { r2_p, r2_r })
    }

    /// Geometric mean of the two coefficients, `R^2 = sqrt(R2_p R2_r)`.
    pub fn r_squared(&self) -> f64 {
        (self.r2_p * self.r2_r).sqrt()
    }

    /// Randomness of the data generating process, `eta = 1 - R^2`.
    pub fn eta(&self) -> f64 {
        1.0 - self.r_squared()
    }
}

/// Outcome of the decision rule `eta > T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub eta: f64,
    #[serde(rename = "threshold_T")]
    pub threshold_t: f64,
    /// `eta - T`; positive margins warrant causal inference.
    pub margin: f64,
    pub warranted: bool,
}

/// Causal inference is warranted iff the actual randomness strictly exceeds
/// the threshold.
pub fn decide(spec: &RandomnessSpec, report: &ThresholdReport) -> Decision {
    let eta = spec.eta();
    Decision {
        eta,
        threshold_t: report.t,
        margin: eta - report.t,
        warranted: eta > report.t,
    }
}
