//! Contingency data, cell probabilities, and observed summary statistics.
//!
//! The cell layout follows the `(e, d)` index convention with exposure first
//! and outcome second: `n01` counts unexposed cases, `n11` exposed cases,
//! `n00` unexposed non-cases, and `n10` exposed non-cases.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{in_open_unit, EPS_BOUNDARY, NORMALIZATION_TOL};

/// One of the four cells of the 2x2 table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    N01,
    N11,
    N00,
    N10,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Cell::N01 => "n01 (unexposed cases)",
            Cell::N11 => "n11 (exposed cases)",
            Cell::N00 => "n00 (unexposed non-cases)",
            Cell::N10 => "n10 (exposed non-cases)",
        };
        f.write_str(name)
    }
}

/// Errors from constructing or normalizing contingency data.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum TableError {
    #[error("empty table: total count must be at least 1")]
    EmptyTable,
    #[error("zero margin: {0} is empty, so a prevalence would leave (0, 1)")]
    ZeroMargin(&'static str),
    #[error("zero cell: {0} is empty; RR and OR are only defined as boundary values")]
    ZeroCell(Cell),
    #[error("more than one empty cell: the table lies outside the open simplex")]
    MultipleZeroCells,
    #[error("cell probabilities sum to {sum} which is farther than {NORMALIZATION_TOL} from 1")]
    BadNormalization { sum: f64 },
    #[error("invalid probability {value} for {name}: must be finite and nonnegative")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{kind} = {value} lies outside the open range ({lower}, {upper})")]
    AssociationOutOfRange {
        kind: AssociationKind,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("csv: {0}")]
    Csv(String),
}

/// Observed 2x2 exposure/outcome counts.
///
/// All four margins must be positive so that both prevalences lie in (0, 1).
/// Individual cells may be zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    n01: u64,
    n11: u64,
    n00: u64,
    n10: u64,
}

impl ContingencyTable {
    pub fn new(n01: u64, n11: u64, n00: u64, n10: u64) -> Result<Self, TableError> {
        let n = n01 + n11 + n00 + n10;
        if n == 0 {
            return Err(TableError::EmptyTable);
        }
        if n11 + n10 == 0 {
            return Err(TableError::ZeroMargin("the exposed margin (n11 + n10)"));
        }
        if n01 + n00 == 0 {
            return Err(TableError::ZeroMargin("the unexposed margin (n01 + n00)"));
        }
        if n01 + n11 == 0 {
            return Err(TableError::ZeroMargin("the case margin (n01 + n11)"));
        }
        if n00 + n10 == 0 {
            return Err(TableError::ZeroMargin("the non-case margin (n00 + n10)"));
        }
        Ok(Self { n01, n11, n00, n10 })
    }

    pub fn n01(&self) -> u64 {
        self.n01
    }
    pub fn n11(&self) -> u64 {
        self.n11
    }
    pub fn n00(&self) -> u64 {
        self.n00
    }
    pub fn n10(&self) -> u64 {
        self.n10
    }

    /// Total count.
    pub fn n(&self) -> u64 {
        self.n01 + self.n11 + self.n00 + self.n10
    }

    /// Normalize to cell probabilities, rejecting empty cells.
    ///
    /// A single empty cell is a warning-level condition: phi and `T` stay
    /// computable, so callers may downgrade to
    /// [`probabilities_allowing_zero_cells`](Self::probabilities_allowing_zero_cells).
    pub fn probabilities(&self) -> Result<CellProbabilities, TableError> {
        for (count, cell) in [
            (self.n01, Cell::N01),
            (self.n11, Cell::N11),
            (self.n00, Cell::N00),
            (self.n10, Cell::N10),
        ] {
            if count == 0 {
                return Err(TableError::ZeroCell(cell));
            }
        }
        let n = self.n() as f64;
        CellProbabilities::new(
            self.n01 as f64 / n,
            self.n11 as f64 / n,
            self.n00 as f64 / n,
            self.n10 as f64 / n,
        )
    }

    /// Normalize to cell probabilities, tolerating at most one empty cell.
    pub fn probabilities_allowing_zero_cells(&self) -> Result<CellProbabilities, TableError> {
        let n = self.n() as f64;
        CellProbabilities::with_boundary_cells(
            self.n01 as f64 / n,
            self.n11 as f64 / n,
            self.n00 as f64 / n,
            self.n10 as f64 / n,
        )
    }

    /// Chi-squared statistic of the test of independence, without a
    /// continuity correction.
    ///
    /// Computed from the definitional sum of squared deviations from the
    /// independence-expected cells; `sqrt(chi2/n)` agrees with `|phi|`.
    pub fn chi_squared(&self) -> f64 {
        let n = self.n() as f64;
        let p01 = self.n01 as f64 / n;
        let p11 = self.n11 as f64 / n;
        let p00 = self.n00 as f64 / n;
        let p10 = self.n10 as f64 / n;
        n * chi_squared_over_n_raw(p01, p11, p00, p10)
    }
}

fn chi_squared_over_n_raw(p01: f64, p11: f64, p00: f64, p10: f64) -> f64 {
    let p_e = p11 + p10;
    let p_d = p11 + p01;
    let expected = [
        (p01, (1.0 - p_e) * p_d),
        (p11, p_e * p_d),
        (p00, (1.0 - p_e) * (1.0 - p_d)),
        (p10, p_e * (1.0 - p_d)),
    ];
    expected
        .iter()
        .map(|(obs, exp)| {
            let diff = obs - exp;
            diff * diff / exp
        })
        .sum()
}

/// A point of the open 3-simplex: four cell probabilities summing to one.
///
/// The strict constructor [`new`](Self::new) requires every cell to exceed
/// [`EPS_BOUNDARY`]. [`with_boundary_cells`](Self::with_boundary_cells)
/// additionally admits a single zero cell, which keeps phi, RD, chi-squared,
/// and `T` computable while RR/OR degrade to boundary flags.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellProbabilities {
    p01: f64,
    p11: f64,
    p00: f64,
    p10: f64,
}

impl CellProbabilities {
    pub fn new(p01: f64, p11: f64, p00: f64, p10: f64) -> Result<Self, TableError> {
        let cells = Self::normalized(p01, p11, p00, p10)?;
        for (value, cell) in [
            (cells.p01, Cell::N01),
            (cells.p11, Cell::N11),
            (cells.p00, Cell::N00),
            (cells.p10, Cell::N10),
        ] {
            if value <= EPS_BOUNDARY {
                return Err(TableError::ZeroCell(cell));
            }
        }
        Ok(cells)
    }

    /// Like [`new`](Self::new) but tolerating at most one cell at zero, as
    /// long as both margins stay inside (0, 1).
    pub fn with_boundary_cells(p01: f64, p11: f64, p00: f64, p10: f64) -> Result<Self, TableError> {
        let cells = Self::normalized(p01, p11, p00, p10)?;
        let zero_cells = [cells.p01, cells.p11, cells.p00, cells.p10]
            .iter()
            .filter(|&&value| value <= EPS_BOUNDARY)
            .count();
        if zero_cells > 1 {
            return Err(TableError::MultipleZeroCells);
        }
        let p_e = cells.p11 + cells.p10;
        let p_d = cells.p11 + cells.p01;
        if !in_open_unit(p_e) {
            return Err(TableError::ZeroMargin("the exposure prevalence p_e"));
        }
        if !in_open_unit(p_d) {
            return Err(TableError::ZeroMargin("the outcome prevalence p_d"));
        }
        Ok(cells)
    }

    fn normalized(p01: f64, p11: f64, p00: f64, p10: f64) -> Result<Self, TableError> {
        for (value, name) in [(p01, "p01"), (p11, "p11"), (p00, "p00"), (p10, "p10")] {
            if !value.is_finite() || value < 0.0 {
                return Err(TableError::InvalidProbability { name, value });
            }
        }
        let sum = p01 + p11 + p00 + p10;
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TableError::BadNormalization { sum });
        }
        Ok(Self {
            p01: p01 / sum,
            p11: p11 / sum,
            p00: p00 / sum,
            p10: p10 / sum,
        })
    }

    /// Exact expectations of a latent distribution are probabilities by
    /// construction but may sit arbitrarily close to the simplex boundary,
    /// so they skip the boundary checks of the public constructors.
    pub(crate) fn from_expectations(p01: f64, p11: f64, p00: f64, p10: f64) -> Self {
        let sum = p01 + p11 + p00 + p10;
        Self {
            p01: (p01 / sum).max(0.0),
            p11: (p11 / sum).max(0.0),
            p00: (p00 / sum).max(0.0),
            p10: (p10 / sum).max(0.0),
        }
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }
    pub fn p11(&self) -> f64 {
        self.p11
    }
    pub fn p00(&self) -> f64 {
        self.p00
    }
    pub fn p10(&self) -> f64 {
        self.p10
    }

    /// Cells in `(p01, p11, p00, p10)` order.
    pub fn as_array(&self) -> [f64; 4] {
        [self.p01, self.p11, self.p00, self.p10]
    }

    /// True when some cell sits at the simplex boundary (a zero cell).
    pub fn has_boundary_cell(&self) -> bool {
        self.as_array().iter().any(|&value| value <= EPS_BOUNDARY)
    }

    /// Marginal prevalences and the balance of the design.
    pub fn margins(&self) -> Margins {
        let p_e = self.p11 + self.p10;
        let p_d = self.p11 + self.p01;
        Margins::new(p_e, p_d)
    }

    /// Covariance of the exposure and outcome indicators,
    /// `p11 * p00 - p10 * p01`.
    pub fn sigma_ed(&self) -> f64 {
        self.p11 * self.p00 - self.p10 * self.p01
    }

    /// Phi coefficient: the correlation analogue for two dichotomous
    /// variables, `sigma_ed / sqrt(p_e (1-p_e) p_d (1-p_d))`.
    pub fn phi(&self) -> f64 {
        let Margins { p_e, p_d, .. } = self.margins();
        self.sigma_ed() / (p_e * (1.0 - p_e) * p_d * (1.0 - p_d)).sqrt()
    }

    /// Chi-squared statistic divided by the sample size.
    pub fn chi_squared_over_n(&self) -> f64 {
        chi_squared_over_n_raw(self.p01, self.p11, self.p00, self.p10)
    }

    /// The requested association measure, with zero cells surfacing as
    /// explicit boundary flags rather than 0/infinity literals.
    pub fn association(&self, kind: AssociationKind) -> AssociationMeasure {
        let value = match kind {
            AssociationKind::RiskDifference => {
                let risk_exposed = self.p11 / (self.p11 + self.p10);
                let risk_unexposed = self.p01 / (self.p01 + self.p00);
                AssociationValue::Finite(risk_exposed - risk_unexposed)
            }
            AssociationKind::RelativeRisk => {
                if self.p01 <= EPS_BOUNDARY {
                    AssociationValue::AtInfinity
                } else if self.p11 <= EPS_BOUNDARY {
                    AssociationValue::AtZero
                } else {
                    let risk_exposed = self.p11 / (self.p11 + self.p10);
                    let risk_unexposed = self.p01 / (self.p01 + self.p00);
                    AssociationValue::Finite(risk_exposed / risk_unexposed)
                }
            }
            AssociationKind::OddsRatio => {
                if self.p01 <= EPS_BOUNDARY || self.p10 <= EPS_BOUNDARY {
                    AssociationValue::AtInfinity
                } else if self.p11 <= EPS_BOUNDARY || self.p00 <= EPS_BOUNDARY {
                    AssociationValue::AtZero
                } else {
                    AssociationValue::Finite((self.p11 / self.p10) * (self.p00 / self.p01))
                }
            }
            AssociationKind::Phi => AssociationValue::Finite(self.phi()),
        };
        AssociationMeasure { kind, value }
    }
}

/// Marginal relative frequencies of a table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// Prevalence of exposure, `p11 + p10`.
    #[serde(rename = "pe")]
    pub p_e: f64,
    /// Prevalence of the outcome, `p11 + p01`.
    #[serde(rename = "pd")]
    pub p_d: f64,
    /// Balance of the design, `min(p_e, 1-p_e, p_d, 1-p_d)`.
    #[serde(rename = "balance_b")]
    pub balance: f64,
}

impl Margins {
    pub fn new(p_e: f64, p_d: f64) -> Self {
        let balance = p_e.min(1.0 - p_e).min(p_d).min(1.0 - p_d);
        Self { p_e, p_d, balance }
    }
}

/// Which measure of association a value refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationKind {
    RiskDifference,
    RelativeRisk,
    OddsRatio,
    Phi,
}

impl AssociationKind {
    /// The open range a finite value of this kind must lie in, regardless of
    /// prevalences.
    pub fn global_range(&self) -> (f64, f64) {
        match self {
            AssociationKind::RiskDifference | AssociationKind::Phi => (-1.0, 1.0),
            AssociationKind::RelativeRisk | AssociationKind::OddsRatio => (0.0, f64::INFINITY),
        }
    }

    pub fn all() -> [AssociationKind; 4] {
        [
            AssociationKind::RiskDifference,
            AssociationKind::RelativeRisk,
            AssociationKind::OddsRatio,
            AssociationKind::Phi,
        ]
    }
}

impl fmt::Display for AssociationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AssociationKind::RiskDifference => "RD",
            AssociationKind::RelativeRisk => "RR",
            AssociationKind::OddsRatio => "OR",
            AssociationKind::Phi => "phi",
        };
        f.write_str(name)
    }
}

/// A measured association value, either finite or pinned to a boundary by a
/// zero cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AssociationValue {
    Finite(f64),
    AtZero,
    AtInfinity,
}

impl AssociationValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            AssociationValue::Finite(value) => Some(*value),
            _ => None,
        }
    }

    pub fn is_boundary(&self) -> bool {
        !matches!(self, AssociationValue::Finite(_))
    }
}

impl fmt::Display for AssociationValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssociationValue::Finite(value) => write!(f, "{value}"),
            AssociationValue::AtZero => f.write_str("0 (boundary)"),
            AssociationValue::AtInfinity => f.write_str("inf (boundary)"),
        }
    }
}

/// An association kind together with its value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociationMeasure {
    pub kind: AssociationKind,
    pub value: AssociationValue,
}

impl AssociationMeasure {
    /// A finite measure, validated against the kind's global open range.
    pub fn new(kind: AssociationKind, value: f64) -> Result<Self, TableError> {
        let (lower, upper) = kind.global_range();
        if !value.is_finite() || value <= lower || value >= upper {
            return Err(TableError::AssociationOutOfRange {
                kind,
                value,
                lower,
                upper,
            });
        }
        Ok(Self {
            kind,
            value: AssociationValue::Finite(value),
        })
    }

    pub fn finite(&self) -> Option<f64> {
        self.value.finite()
    }
}

/// One parsed row of a table CSV: the id plus either a table or the reason
/// the row was rejected.
#[derive(Clone, Debug)]
pub struct TableRecord {
    pub id: String,
    pub table: Result<ContingencyTable, TableError>,
}

/// Read tables from CSV with header `id,n01,n11,n00,n10`.
///
/// Row-level problems (unparsable counts, zero margins) are captured per
/// record so a batch can keep going; only unreadable input or a wrong header
/// aborts.
pub fn read_tables_csv<R: io::Read>(reader: R) -> Result<Vec<TableRecord>, TableError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| TableError::Csv(e.to_string()))?
        .clone();
    let expected = ["id", "n01", "n11", "n00", "n10"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(TableError::Csv(format!(
            "expected header id,n01,n11,n00,n10 but found {}",
            got.join(",")
        )));
    }

    let mut records = Vec::new();
    for row in csv_reader.records() {
        let row = row.map_err(|e| TableError::Csv(e.to_string()))?;
        let id = row.get(0).unwrap_or("").to_string();
        let table = parse_counts_row(&row);
        records.push(TableRecord { id, table });
    }
    Ok(records)
}

fn parse_counts_row(row: &csv::StringRecord) -> Result<ContingencyTable, TableError> {
    if row.len() != 5 {
        return Err(TableError::Csv(format!(
            "expected 5 fields per row, found {}",
            row.len()
        )));
    }
    let mut counts = [0u64; 4];
    for (slot, index) in counts.iter_mut().zip(1..) {
        let field = row.get(index).unwrap_or("");
        *slot = field
            .parse()
            .map_err(|_| TableError::Csv(format!("invalid count {field:?}")))?;
    }
    ContingencyTable::new(counts[0], counts[1], counts[2], counts[3])
}
