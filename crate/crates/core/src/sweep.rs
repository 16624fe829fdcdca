//! Grid sweeps of the threshold: `T` against association strength at fixed
//! prevalences, and `T` over the prevalence square at fixed association,
//! with realizability masks.
//!
//! Sweeps emit data, not images. The CSV formats are
//! `alpha,realizable,T` for association sweeps and `p_e,p_d,realizable,T`
//! for prevalence sweeps, with `T` left empty at unrealizable points.

use std::io;

use thiserror::Error;

use crate::in_open_unit;
use crate::table::{AssociationKind, AssociationMeasure};
use crate::threshold::threshold_from_summary;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("prevalence {name} = {value} must lie strictly inside (0, 1)")]
    InvalidPrevalence { name: &'static str, value: f64 },
    #[error("sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("sweep bounds [{lo}, {hi}] are not an increasing finite interval")]
    BadInterval { lo: f64, hi: f64 },
    #[error("{kind} = {value} lies outside the measure's global range")]
    InvalidValue { kind: AssociationKind, value: f64 },
    #[error("no grid point in [{lo}, {hi}] is realizable at p_e = {p_e}, p_d = {p_d}")]
    EmptyRange {
        lo: f64,
        hi: f64,
        p_e: f64,
        p_d: f64,
    },
}

/// One row of an association sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociationRow {
    pub alpha: f64,
    pub realizable: bool,
    /// Present exactly when the point is realizable.
    pub t: Option<f64>,
}

/// `T` as a function of one association measure at fixed prevalences.
#[derive(Clone, Debug, PartialEq)]
pub struct AssociationSweep {
    pub p_e: f64,
    pub p_d: f64,
    pub kind: AssociationKind,
    pub rows: Vec<AssociationRow>,
}

impl AssociationSweep {
    pub fn write_csv<W: io::Write>(&self, mut writer: W) -> io::Result<()> {
        writer.write_all(b"alpha,realizable,T\n")?;
        for row in &self.rows {
            match row.t {
                Some(t) => writeln!(writer, "{},true,{}", row.alpha, t)?,
                None => writeln!(writer, "{},false,", row.alpha)?,
            }
        }
        Ok(())
    }
}

/// One row of a prevalence sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrevalenceRow {
    pub p_e: f64,
    pub p_d: f64,
    pub realizable: bool,
    pub t: Option<f64>,
}

/// `T` over the open prevalence square at fixed association.
#[derive(Clone, Debug, PartialEq)]
pub struct PrevalenceSweep {
    pub kind: AssociationKind,
    pub value: f64,
    pub steps: usize,
    /// Row-major: `p_e` varies slowest.
    pub rows: Vec<PrevalenceRow>,
}

impl PrevalenceSweep {
    pub fn write_csv<W: io::Write>(&self, mut writer: W) -> io::Result<()> {
        writer.write_all(b"p_e,p_d,realizable,T\n")?;
        for row in &self.rows {
            match row.t {
                Some(t) => writeln!(writer, "{},{},true,{}", row.p_e, row.p_d, t)?,
                None => writeln!(writer, "{},{},false,", row.p_e, row.p_d)?,
            }
        }
        Ok(())
    }
}

/// Sweep `T` over `steps` evenly spaced association values in `[lo, hi]`.
///
/// Values outside the realizable range (including the measure's global
/// range) are kept as rows but marked unrealizable; the sweep fails only
/// when no point at all is realizable.
pub fn t_vs_association(
    p_e: f64,
    p_d: f64,
    kind: AssociationKind,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<AssociationSweep, SweepError> {
    if !in_open_unit(p_e) {
        return Err(SweepError::InvalidPrevalence {
            name: "p_e",
            value: p_e,
        });
    }
    if !in_open_unit(p_d) {
        return Err(SweepError::InvalidPrevalence {
            name: "p_d",
            value: p_d,
        });
    }
    if steps < 2 {
        return Err(SweepError::TooFewSteps(steps));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(SweepError::BadInterval { lo, hi });
    }

    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let alpha = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
        let t = AssociationMeasure::new(kind, alpha)
            .ok()
            .and_then(|measure| threshold_from_summary(p_e, p_d, measure).ok())
            .map(|report| report.t);
        rows.push(AssociationRow {
            alpha,
            realizable: t.is_some(),
            t,
        });
    }
    if rows.iter().all(|row| !row.realizable) {
        return Err(SweepError::EmptyRange { lo, hi, p_e, p_d });
    }
    Ok(AssociationSweep {
        p_e,
        p_d,
        kind,
        rows,
    })
}

/// Sweep `T` over a `steps x steps` grid of prevalences at fixed
/// association value.
///
/// Grid points sit at cell centers `(i + 0.5) / steps` so the closed
/// boundary of the square is never touched.
pub fn t_over_prevalence(
    kind: AssociationKind,
    value: f64,
    steps: usize,
) -> Result<PrevalenceSweep, SweepError> {
    let (lower, upper) = kind.global_range();
    if !(value.is_finite() && value > lower && value < upper) {
        return Err(SweepError::InvalidValue { kind, value });
    }
    if steps < 2 {
        return Err(SweepError::TooFewSteps(steps));
    }

    let measure = AssociationMeasure::new(kind, value).expect("validated above");
    let mut rows = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        let p_e = (i as f64 + 0.5) / steps as f64;
        for j in 0..steps {
            let p_d = (j as f64 + 0.5) / steps as f64;
            let t = threshold_from_summary(p_e, p_d, measure)
                .ok()
                .map(|report| report.t);
            rows.push(PrevalenceRow {
                p_e,
                p_d,
                realizable: t.is_some(),
                t,
            });
        }
    }
    Ok(PrevalenceSweep {
        kind,
        value,
        steps,
        rows,
    })
}
