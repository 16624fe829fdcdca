//! Command-line surface for randomness-threshold sensitivity analysis.
//!
//! Subcommands: `threshold`, `decide`, `bounds`, `bootstrap`, `sweep`,
//! `batch`, and `verify`. Exit codes: 0 success (for `decide`, warranted;
//! for `verify`, bound holds), 1 negative verdict, 2 invalid or unrealizable
//! input, 3 I/O failure. Machine output is JSON at full double precision;
//! analyses never emit partial JSON on error paths.

pub mod record;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use randthresh::bootstrap::bootstrap_threshold;
use randthresh::latent::{lower_bound_check, optimal_two_point, random_feasible};
use randthresh::realizability::{range, witness_table};
use randthresh::sweep;
use randthresh::table::{
    read_tables_csv, AssociationKind, AssociationMeasure, CellProbabilities, ContingencyTable,
    TableError,
};
use randthresh::threshold::{
    decide, threshold_from_summary, threshold_from_table, RandomnessSpec, ThresholdReport,
};

pub use record::AnalysisRecord;

use record::{
    human_certificate, human_decision, human_report, sig4, Certificate, ErrorBody, ErrorRecord,
    InputEcho,
};

#[derive(Parser, Debug)]
#[command(
    name = "randthresh",
    version,
    about = "Randomness thresholds for causal inference from 2x2 contingency data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the threshold T of sufficient randomness
    Threshold(ThresholdArgs),
    /// Evaluate the decision rule eta > T for elicited determinism coefficients
    Decide(DecideArgs),
    /// Realizable ranges of RD, RR, OR, and phi at given prevalences
    Bounds(BoundsArgs),
    /// Parametric multinomial bootstrap of T (JSON output)
    Bootstrap(BootstrapArgs),
    /// Sweep T over association strength or prevalence space, writing CSV
    Sweep(SweepArgs),
    /// Analyze every table of a CSV file, writing JSON lines
    Batch(BatchArgs),
    /// Check the two-point optimality certificate against a random-feasible oracle
    Verify(VerifyArgs),
}

/// Exactly one of: counts, cells, or a (pe, pd, measure) summary triple.
#[derive(Args, Debug, Default)]
pub struct AnalysisInput {
    /// Cell counts n01 n11 n00 n10
    #[arg(long, num_args = 4, value_names = ["N01", "N11", "N00", "N10"])]
    pub counts: Option<Vec<u64>>,
    /// Cell probabilities p01 p11 p00 p10
    #[arg(long, num_args = 4, value_names = ["P01", "P11", "P00", "P10"])]
    pub cells: Option<Vec<f64>>,
    /// Exposure prevalence P(e=1)
    #[arg(long)]
    pub pe: Option<f64>,
    /// Outcome prevalence P(d=1)
    #[arg(long)]
    pub pd: Option<f64>,
    /// Risk difference
    #[arg(long, allow_negative_numbers = true)]
    pub rd: Option<f64>,
    /// Relative risk
    #[arg(long, allow_negative_numbers = true)]
    pub rr: Option<f64>,
    /// Odds ratio
    #[arg(long = "or", allow_negative_numbers = true)]
    pub odds_ratio: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub input: AnalysisInput,
    /// Include the optimal two-point distribution certifying T
    #[arg(long)]
    pub certificate: bool,
    /// Emit the machine-readable record instead of human-readable lines
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct DecideArgs {
    /// Coefficient of determinism for exposure assignment, in [0, 1)
    #[arg(long)]
    pub rp2: f64,
    /// Coefficient of determinism for outcome assignment, in [0, 1)
    #[arg(long)]
    pub rr2: f64,
    #[command(flatten)]
    pub input: AnalysisInput,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    pub pe: f64,
    #[arg(long)]
    pub pd: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    /// Cell counts n01 n11 n00 n10
    #[arg(long, num_args = 4, value_names = ["N01", "N11", "N00", "N10"], required = true)]
    pub counts: Vec<u64>,
    /// Number of bootstrap replicates
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// RNG seed; identical seeds reproduce results exactly
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quantile levels, comma separated, each strictly inside (0, 1)
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.025,0.25,0.5,0.75,0.975"
    )]
    pub levels: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Rd,
    Rr,
    Or,
    Phi,
}

impl MeasureArg {
    fn kind(self) -> AssociationKind {
        match self {
            MeasureArg::Rd => AssociationKind::RiskDifference,
            MeasureArg::Rr => AssociationKind::RelativeRisk,
            MeasureArg::Or => AssociationKind::OddsRatio,
            MeasureArg::Phi => AssociationKind::Phi,
        }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Association measure to sweep over or to hold fixed
    #[arg(long, value_enum)]
    pub measure: MeasureArg,
    /// Fixed association value (prevalence-grid mode)
    #[arg(long, allow_negative_numbers = true)]
    pub value: Option<f64>,
    /// Grid resolution per prevalence axis (prevalence-grid mode)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Exposure prevalence (association-sweep mode)
    #[arg(long)]
    pub pe: Option<f64>,
    /// Outcome prevalence (association-sweep mode)
    #[arg(long)]
    pub pd: Option<f64>,
    /// Sweep start (association-sweep mode)
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// Sweep end (association-sweep mode)
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Number of sweep points (association-sweep mode)
    #[arg(long)]
    pub steps: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// Input CSV with header id,n01,n11,n00,n10
    #[arg(long)]
    pub input: PathBuf,
    /// Output path for JSON lines, one record per input row
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Cell counts n01 n11 n00 n10
    #[arg(long, num_args = 4, value_names = ["N01", "N11", "N00", "N10"], required = true)]
    pub counts: Vec<u64>,
    /// Number of random feasible distributions to draw
    #[arg(long, default_value_t = 2000)]
    pub samples: u64,
    /// Atoms per random feasible distribution
    #[arg(long, default_value_t = 3)]
    pub atoms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

/// A failure with its process exit code (2 input, 3 I/O).
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 3,
        }
    }
}

/// Run a parsed command, returning the process exit code. Diagnostics go to
/// `err`; analysis output goes to `out`.
pub fn run<W: Write, E: Write>(cli: Cli, out: &mut W, err: &mut E) -> u8 {
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(error) => {
            let _ = writeln!(err, "error: {}", error.message);
            error.code
        }
    }
}

fn execute<W: Write, E: Write>(command: Command, out: &mut W, err: &mut E) -> Result<u8, CliError> {
    match command {
        Command::Threshold(args) => cmd_threshold(args, out, err),
        Command::Decide(args) => cmd_decide(args, out, err),
        Command::Bounds(args) => cmd_bounds(args, out),
        Command::Bootstrap(args) => cmd_bootstrap(args, out),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Verify(args) => cmd_verify(args, out),
    }
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

enum ResolvedInput {
    Table {
        cells: CellProbabilities,
        echo: InputEcho,
    },
    Summary {
        p_e: f64,
        p_d: f64,
        measure: AssociationMeasure,
        echo: InputEcho,
    },
}

fn resolve_input<E: Write>(input: &AnalysisInput, err: &mut E) -> Result<ResolvedInput, CliError> {
    let summary_given = input.pe.is_some()
        || input.pd.is_some()
        || input.rd.is_some()
        || input.rr.is_some()
        || input.odds_ratio.is_some();
    let groups = [input.counts.is_some(), input.cells.is_some(), summary_given];
    if groups.iter().filter(|&&given| given).count() != 1 {
        return Err(CliError::input(
            "provide exactly one input form: --counts, --cells, or --pe/--pd with one of --rd/--rr/--or",
        ));
    }

    if let Some(counts) = &input.counts {
        let table = ContingencyTable::new(counts[0], counts[1], counts[2], counts[3])
            .map_err(|e| CliError::input(e.to_string()))?;
        let cells = table
            .probabilities_allowing_zero_cells()
            .map_err(|e| CliError::input(e.to_string()))?;
        if let Err(TableError::ZeroCell(cell)) = table.probabilities() {
            let _ = writeln!(
                err,
                "note: {cell} is empty; RR/OR reported as boundary values"
            );
        }
        return Ok(ResolvedInput::Table {
            cells,
            echo: InputEcho::Counts {
                n01: counts[0],
                n11: counts[1],
                n00: counts[2],
                n10: counts[3],
            },
        });
    }

    if let Some(values) = &input.cells {
        let cells =
            CellProbabilities::with_boundary_cells(values[0], values[1], values[2], values[3])
                .map_err(|e| CliError::input(e.to_string()))?;
        if cells.has_boundary_cell() {
            let _ = writeln!(
                err,
                "note: a cell is zero; RR/OR reported as boundary values"
            );
        }
        return Ok(ResolvedInput::Table {
            cells,
            echo: InputEcho::Cells {
                p01: values[0],
                p11: values[1],
                p00: values[2],
                p10: values[3],
            },
        });
    }

    let p_e = input
        .pe
        .ok_or_else(|| CliError::input("summary input needs --pe"))?;
    let p_d = input
        .pd
        .ok_or_else(|| CliError::input("summary input needs --pd"))?;
    let provided: Vec<(AssociationKind, f64)> = [
        (AssociationKind::RiskDifference, input.rd),
        (AssociationKind::RelativeRisk, input.rr),
        (AssociationKind::OddsRatio, input.odds_ratio),
    ]
    .into_iter()
    .filter_map(|(kind, value)| value.map(|v| (kind, v)))
    .collect();
    if provided.len() != 1 {
        return Err(CliError::input(
            "summary input needs exactly one of --rd, --rr, --or",
        ));
    }
    let (kind, value) = provided[0];
    let measure =
        AssociationMeasure::new(kind, value).map_err(|e| CliError::input(e.to_string()))?;
    let name = match kind {
        AssociationKind::RiskDifference => "rd",
        AssociationKind::RelativeRisk => "rr",
        AssociationKind::OddsRatio => "or",
        AssociationKind::Phi => "phi",
    };
    Ok(ResolvedInput::Summary {
        p_e,
        p_d,
        measure,
        echo: InputEcho::Summary {
            pe: p_e,
            pd: p_d,
            measure: name.to_string(),
            value,
        },
    })
}

fn report_for(resolved: &ResolvedInput) -> Result<ThresholdReport, CliError> {
    match resolved {
        ResolvedInput::Table { cells, .. } => Ok(threshold_from_table(cells)),
        ResolvedInput::Summary {
            p_e, p_d, measure, ..
        } => {
            threshold_from_summary(*p_e, *p_d, *measure).map_err(|e| CliError::input(e.to_string()))
        }
    }
}

fn certificate_for(
    resolved: &ResolvedInput,
    report: &ThresholdReport,
) -> Result<Certificate, CliError> {
    let cells = match resolved {
        ResolvedInput::Table { cells, .. } => {
            if cells.has_boundary_cell() {
                return Err(CliError::input(
                    "no certificate for a table with an empty cell: the optimum is only approached in the limit",
                ));
            }
            *cells
        }
        ResolvedInput::Summary { p_e, p_d, .. } => witness_table(*p_e, *p_d, report.sigma_ed)
            .map_err(|e| CliError::input(e.to_string()))?,
    };
    let (construction, mu) = optimal_two_point(&cells);
    Ok(Certificate::new(&construction, &mu))
}

fn cmd_threshold<W: Write, E: Write>(
    args: ThresholdArgs,
    out: &mut W,
    err: &mut E,
) -> Result<u8, CliError> {
    let resolved = resolve_input(&args.input, err)?;
    let report = report_for(&resolved)?;
    let echo = match &resolved {
        ResolvedInput::Table { echo, .. } | ResolvedInput::Summary { echo, .. } => echo.clone(),
    };
    let mut record = AnalysisRecord::new(echo, &report, timestamp());
    if args.certificate {
        record.certificate = Some(certificate_for(&resolved, &report)?);
    }
    if args.json {
        let json = serde_json::to_string_pretty(&record)
            .map_err(|e| CliError::io(format!("serializing record: {e}")))?;
        writeln!(out, "{json}").map_err(|e| CliError::io(e.to_string()))?;
    } else {
        writeln!(out, "{}", human_report(&report)).map_err(|e| CliError::io(e.to_string()))?;
        if let Some(certificate) = &record.certificate {
            writeln!(out, "{}", human_certificate(certificate))
                .map_err(|e| CliError::io(e.to_string()))?;
        }
    }
    Ok(0)
}

fn cmd_decide<W: Write, E: Write>(
    args: DecideArgs,
    out: &mut W,
    err: &mut E,
) -> Result<u8, CliError> {
    let spec =
        RandomnessSpec::new(args.rp2, args.rr2).map_err(|e| CliError::input(e.to_string()))?;
    let resolved = resolve_input(&args.input, err)?;
    let report = report_for(&resolved)?;
    let decision = decide(&spec, &report);
    if args.json {
        let echo = match &resolved {
            ResolvedInput::Table { echo, .. } | ResolvedInput::Summary { echo, .. } => echo.clone(),
        };
        let mut record = AnalysisRecord::new(echo, &report, timestamp());
        record.decision = Some(decision);
        let json = serde_json::to_string_pretty(&record)
            .map_err(|e| CliError::io(format!("serializing record: {e}")))?;
        writeln!(out, "{json}").map_err(|e| CliError::io(e.to_string()))?;
    } else {
        writeln!(out, "{}", human_decision(&decision)).map_err(|e| CliError::io(e.to_string()))?;
    }
    Ok(if decision.warranted { 0 } else { 1 })
}

#[derive(Serialize)]
struct BoundEntry {
    lower: Option<f64>,
    upper: Option<f64>,
    lower_attainable: bool,
    upper_attainable: bool,
}

fn cmd_bounds<W: Write>(args: BoundsArgs, out: &mut W) -> Result<u8, CliError> {
    for (name, value) in [("--pe", args.pe), ("--pd", args.pd)] {
        if !(value.is_finite() && value > 0.0 && value < 1.0) {
            return Err(CliError::input(format!(
                "{name} = {value} must lie strictly inside (0, 1)"
            )));
        }
    }
    let kinds = [
        ("rd", AssociationKind::RiskDifference),
        ("rr", AssociationKind::RelativeRisk),
        ("or", AssociationKind::OddsRatio),
        ("phi", AssociationKind::Phi),
    ];
    if args.json {
        let mut bounds = BTreeMap::new();
        for (name, kind) in kinds {
            let r = range(args.pe, args.pd, kind);
            bounds.insert(
                name,
                BoundEntry {
                    lower: r.lower.is_finite().then_some(r.lower),
                    upper: r.upper.is_finite().then_some(r.upper),
                    lower_attainable: r.lower_attainable,
                    upper_attainable: r.upper_attainable,
                },
            );
        }
        let json = serde_json::json!({
            "pe": args.pe,
            "pd": args.pd,
            "bounds": bounds,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&json).unwrap())
            .map_err(|e| CliError::io(e.to_string()))?;
    } else {
        writeln!(
            out,
            "realizable ranges at p_e = {}, p_d = {} (bounds are open, never attained)",
            sig4(args.pe),
            sig4(args.pd)
        )
        .map_err(|e| CliError::io(e.to_string()))?;
        for (name, kind) in kinds {
            let r = range(args.pe, args.pd, kind);
            let upper = if r.upper.is_finite() {
                sig4(r.upper)
            } else {
                "inf".to_string()
            };
            writeln!(out, "{name:<4} ({}, {upper})", sig4(r.lower))
                .map_err(|e| CliError::io(e.to_string()))?;
        }
    }
    Ok(0)
}

fn cmd_bootstrap<W: Write>(args: BootstrapArgs, out: &mut W) -> Result<u8, CliError> {
    let table = ContingencyTable::new(
        args.counts[0],
        args.counts[1],
        args.counts[2],
        args.counts[3],
    )
    .map_err(|e| CliError::input(e.to_string()))?;
    let result = bootstrap_threshold(&table, args.reps, args.seed, &args.levels)
        .map_err(|e| CliError::input(e.to_string()))?;
    let cells = table
        .probabilities_allowing_zero_cells()
        .map_err(|e| CliError::input(e.to_string()))?;
    let report = threshold_from_table(&cells);
    let mut record = AnalysisRecord::new(
        InputEcho::Counts {
            n01: args.counts[0],
            n11: args.counts[1],
            n00: args.counts[2],
            n10: args.counts[3],
        },
        &report,
        timestamp(),
    );
    record.bootstrap = Some(result);
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| CliError::io(format!("serializing record: {e}")))?;
    writeln!(out, "{json}").map_err(|e| CliError::io(e.to_string()))?;
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, CliError> {
    let kind = args.measure.kind();
    let prevalence_mode = args.value.is_some() || args.grid.is_some();
    let association_mode = args.pe.is_some()
        || args.pd.is_some()
        || args.from.is_some()
        || args.to.is_some()
        || args.steps.is_some();
    if prevalence_mode == association_mode {
        return Err(CliError::input(
            "choose one sweep mode: --value/--grid for a prevalence grid, or --pe/--pd/--from/--to/--steps for an association sweep",
        ));
    }

    let file = File::create(&args.out)
        .map_err(|e| CliError::io(format!("creating {}: {e}", args.out.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    if prevalence_mode {
        let value = args
            .value
            .ok_or_else(|| CliError::input("prevalence mode needs --value"))?;
        let grid = args
            .grid
            .ok_or_else(|| CliError::input("prevalence mode needs --grid"))?;
        let grid_sweep = sweep::t_over_prevalence(kind, value, grid)
            .map_err(|e| CliError::input(e.to_string()))?;
        grid_sweep
            .write_csv(&mut writer)
            .map_err(|e| CliError::io(format!("writing {}: {e}", args.out.display())))?;
    } else {
        let missing =
            || CliError::input("association mode needs --pe, --pd, --from, --to, --steps");
        let p_e = args.pe.ok_or_else(missing)?;
        let p_d = args.pd.ok_or_else(missing)?;
        let lo = args.from.ok_or_else(missing)?;
        let hi = args.to.ok_or_else(missing)?;
        let steps = args.steps.ok_or_else(missing)?;
        let line_sweep = sweep::t_vs_association(p_e, p_d, kind, lo, hi, steps)
            .map_err(|e| CliError::input(e.to_string()))?;
        line_sweep
            .write_csv(&mut writer)
            .map_err(|e| CliError::io(format!("writing {}: {e}", args.out.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::io(format!("writing {}: {e}", args.out.display())))?;
    Ok(0)
}

fn table_error_code(error: &TableError) -> &'static str {
    match error {
        TableError::EmptyTable => "EmptyTable",
        TableError::ZeroMargin(_) => "ZeroMargin",
        TableError::ZeroCell(_) => "ZeroCell",
        TableError::MultipleZeroCells => "MultipleZeroCells",
        TableError::BadNormalization { .. } => "BadNormalization",
        TableError::InvalidProbability { .. } => "InvalidProbability",
        TableError::AssociationOutOfRange { .. } => "AssociationOutOfRange",
        TableError::Csv(_) => "Csv",
    }
}

fn cmd_batch(args: BatchArgs) -> Result<u8, CliError> {
    let input = File::open(&args.input)
        .map_err(|e| CliError::io(format!("opening {}: {e}", args.input.display())))?;
    let records = read_tables_csv(input)
        .map_err(|e| CliError::io(format!("reading {}: {e}", args.input.display())))?;
    let output = File::create(&args.out)
        .map_err(|e| CliError::io(format!("creating {}: {e}", args.out.display())))?;
    let mut writer = std::io::BufWriter::new(output);
    let stamp = timestamp();

    for row in records {
        let analyzed = row.table.and_then(|table| {
            let cells = table.probabilities_allowing_zero_cells()?;
            Ok((table, cells))
        });
        let line = match analyzed {
            Ok((table, cells)) => {
                let report = threshold_from_table(&cells);
                let mut record = AnalysisRecord::new(
                    InputEcho::Counts {
                        n01: table.n01(),
                        n11: table.n11(),
                        n00: table.n00(),
                        n10: table.n10(),
                    },
                    &report,
                    stamp.clone(),
                );
                record.id = Some(row.id);
                serde_json::to_string(&record)
            }
            Err(error) => serde_json::to_string(&ErrorRecord {
                id: row.id,
                error: ErrorBody {
                    code: table_error_code(&error).to_string(),
                    message: error.to_string(),
                },
            }),
        }
        .map_err(|e| CliError::io(format!("serializing record: {e}")))?;
        writeln!(writer, "{line}")
            .map_err(|e| CliError::io(format!("writing {}: {e}", args.out.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::io(format!("writing {}: {e}", args.out.display())))?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyReport {
    phi_abs: f64,
    r2_optimal: f64,
    optimal_feasibility_gap: f64,
    oracle_samples: u64,
    oracle_atoms: usize,
    seed: u64,
    oracle_min_r2: f64,
    min_gap: f64,
    bound_holds: bool,
}

fn cmd_verify<W: Write>(args: VerifyArgs, out: &mut W) -> Result<u8, CliError> {
    let table = ContingencyTable::new(
        args.counts[0],
        args.counts[1],
        args.counts[2],
        args.counts[3],
    )
    .map_err(|e| CliError::input(e.to_string()))?;
    let cells = table.probabilities().map_err(|e| {
        CliError::input(format!(
            "{e}; the optimality certificate needs an open-simplex table"
        ))
    })?;
    let phi_abs = cells.phi().abs();

    let (_, mu_star) = optimal_two_point(&cells);
    let expected = mu_star.expected_cells().as_array();
    let observed = cells.as_array();
    let optimal_feasibility_gap = expected
        .iter()
        .zip(observed.iter())
        .map(|(e, o)| (e - o).abs())
        .fold(0.0f64, f64::max);
    let r2_optimal = mu_star
        .summary()
        .map_err(|e| CliError::input(e.to_string()))?
        .r2;

    let mut oracle_min_r2 = f64::INFINITY;
    for draw in 0..args.samples {
        let mu = random_feasible(&cells, args.atoms, args.seed.wrapping_add(draw))
            .map_err(|e| CliError::input(format!("oracle generation failed: {e}")))?;
        let gap = lower_bound_check(&mu, &cells).map_err(|e| CliError::input(e.to_string()))?;
        oracle_min_r2 = oracle_min_r2.min(phi_abs + gap);
    }
    let min_gap = oracle_min_r2 - phi_abs;
    let bound_holds = optimal_feasibility_gap <= 1e-12
        && (r2_optimal - phi_abs).abs() <= 1e-12
        && min_gap >= -1e-9;

    let report = VerifyReport {
        phi_abs,
        r2_optimal,
        optimal_feasibility_gap,
        oracle_samples: args.samples,
        oracle_atoms: args.atoms,
        seed: args.seed,
        oracle_min_r2,
        min_gap,
        bound_holds,
    };
    if args.json {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::io(format!("serializing report: {e}")))?;
        writeln!(out, "{json}").map_err(|e| CliError::io(e.to_string()))?;
    } else {
        let lines = [
            format!("|phi|                {}", sig4(report.phi_abs)),
            format!("R2(mu*)              {}", sig4(report.r2_optimal)),
            format!(
                "mu* feasibility gap  {:.3e} (tolerance 1e-12)",
                report.optimal_feasibility_gap
            ),
            format!(
                "oracle min R2        {} over {} random feasible distributions ({} atoms, seed {})",
                sig4(report.oracle_min_r2),
                report.oracle_samples,
                report.oracle_atoms,
                report.seed
            ),
            format!(
                "min R2 - |phi|       {:.3e} (bound: >= -1e-9)",
                report.min_gap
            ),
            if report.bound_holds {
                "optimality bound holds".to_string()
            } else {
                "OPTIMALITY BOUND VIOLATED".to_string()
            },
        ];
        writeln!(out, "{}", lines.join("\n")).map_err(|e| CliError::io(e.to_string()))?;
    }
    Ok(if bound_holds { 0 } else { 1 })
}
