//! Machine-readable analysis records and the human rendering helpers.
//!
//! One record carries everything a downstream meta-analysis needs: the input
//! echo, margins, all four association measures (nullable where a zero cell
//! pins them to a boundary), the covariance, chi-squared over n, the
//! threshold, and optionally the two-point certificate, a bootstrap, and a
//! decision. JSON output is full double precision; human output rounds to
//! four significant digits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use randthresh::bootstrap::BootstrapResult;
use randthresh::latent::{DiscreteLatentDistribution, LatentAtom, TwoPointConstruction};
use randthresh::table::{AssociationValue, Margins};
use randthresh::threshold::{ComputationPath, Decision, ThresholdReport};

/// Echo of what was analyzed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputEcho {
    Counts {
        n01: u64,
        n11: u64,
        n00: u64,
        n10: u64,
    },
    Cells {
        p01: f64,
        p11: f64,
        p00: f64,
        p10: f64,
    },
    Summary {
        pe: f64,
        pd: f64,
        measure: String,
        value: f64,
    },
}

/// Association values with boundary entries serialized as null.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Associations {
    pub rd: Option<f64>,
    pub rr: Option<f64>,
    pub or: Option<f64>,
    pub phi: f64,
}

/// The optimal two-point distribution, serialized as a certificate that
/// `R^2 = |phi|` is attainable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub theta1: f64,
    pub theta2: f64,
    pub k1: f64,
    pub k2: f64,
    pub atoms: Vec<LatentAtom>,
}

impl Certificate {
    pub fn new(construction: &TwoPointConstruction, mu: &DiscreteLatentDistribution) -> Self {
        Self {
            theta1: construction.theta1,
            theta2: construction.theta2,
            k1: construction.k1,
            k2: construction.k2,
            atoms: mu.atoms().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub input: InputEcho,
    pub margins: Margins,
    pub associations: Associations,
    /// Which association entries are boundary-pinned and to which side;
    /// omitted when all are finite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_flags: Option<BTreeMap<String, String>>,
    pub sigma_ed: f64,
    pub chi2_over_n: f64,
    #[serde(rename = "threshold_T")]
    pub threshold_t: f64,
    pub computation_path: ComputationPath,
    pub no_association: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    pub version: String,
    pub timestamp: String,
}

impl AnalysisRecord {
    pub fn new(input: InputEcho, report: &ThresholdReport, timestamp: String) -> Self {
        let mut flags = BTreeMap::new();
        let mut flag = |name: &str, value: AssociationValue| match value {
            AssociationValue::Finite(v) => Some(v),
            AssociationValue::AtZero => {
                flags.insert(name.to_string(), "zero".to_string());
                None
            }
            AssociationValue::AtInfinity => {
                flags.insert(name.to_string(), "infinite".to_string());
                None
            }
        };
        let associations = Associations {
            rd: flag("rd", report.associations.rd),
            rr: flag("rr", report.associations.rr),
            or: flag("or", report.associations.or),
            phi: report.phi,
        };
        Self {
            id: None,
            input,
            margins: report.margins,
            associations,
            boundary_flags: if flags.is_empty() { None } else { Some(flags) },
            sigma_ed: report.sigma_ed,
            chi2_over_n: report.chi_squared_over_n,
            threshold_t: report.t,
            computation_path: report.path,
            no_association: report.no_association,
            certificate: None,
            bootstrap: None,
            decision: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }
}

/// An id that failed to analyze, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub id: String,
    pub error: ErrorBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// Round to four significant digits for human output.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 3 - x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits);
    let rounded = (x * factor).round() / factor;
    format!("{rounded}")
}

pub fn association_human(value: AssociationValue) -> String {
    match value {
        AssociationValue::Finite(v) => sig4(v),
        AssociationValue::AtZero => "0 (boundary)".to_string(),
        AssociationValue::AtInfinity => "inf (boundary)".to_string(),
    }
}

/// Render a report as aligned human-readable lines.
pub fn human_report(report: &ThresholdReport) -> String {
    let path = match report.path {
        ComputationPath::FromTable => "from_table",
        ComputationPath::FromSummaryRd => "from_summary_rd",
        ComputationPath::FromSummaryRr => "from_summary_rr",
        ComputationPath::FromSummaryOr => "from_summary_or",
        ComputationPath::FromSummaryPhi => "from_summary_phi",
    };
    let mut lines = vec![
        format!("threshold T   {}", sig4(report.t)),
        format!("phi           {}", sig4(report.phi)),
        format!("sigma_ed      {}", sig4(report.sigma_ed)),
        format!("chi2/n        {}", sig4(report.chi_squared_over_n)),
        format!("p_e           {}", sig4(report.margins.p_e)),
        format!("p_d           {}", sig4(report.margins.p_d)),
        format!("balance b     {}", sig4(report.margins.balance)),
        format!(
            "RD            {}",
            association_human(report.associations.rd)
        ),
        format!(
            "RR            {}",
            association_human(report.associations.rr)
        ),
        format!(
            "OR            {}",
            association_human(report.associations.or)
        ),
        format!("path          {path}"),
    ];
    if report.no_association {
        lines.push("note          no association: T = 1".to_string());
    }
    lines.join("\n")
}

pub fn human_certificate(certificate: &Certificate) -> String {
    let mut lines = vec![
        "certificate   two-point distribution attaining R2 = |phi|".to_string(),
        format!(
            "  theta1 {}  theta2 {}  k1 {}  k2 {}",
            sig4(certificate.theta1),
            sig4(certificate.theta2),
            sig4(certificate.k1),
            sig4(certificate.k2)
        ),
    ];
    for (index, atom) in certificate.atoms.iter().enumerate() {
        lines.push(format!(
            "  atom {}: p {}  r {}  w {}",
            index + 1,
            sig4(atom.p),
            sig4(atom.r),
            sig4(atom.weight)
        ));
    }
    lines.join("\n")
}

pub fn human_decision(decision: &Decision) -> String {
    [
        format!("eta           {}", sig4(decision.eta)),
        format!("threshold T   {}", sig4(decision.threshold_t)),
        format!("margin        {}", sig4(decision.margin)),
        format!(
            "verdict       {}",
            if decision.warranted {
                "WARRANTED"
            } else {
                "NOT WARRANTED"
            }
        ),
    ]
    .join("\n")
}
