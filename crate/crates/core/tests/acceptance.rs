//! Acceptance suite: the end-to-end checks the artifact must pass, one test
//! per criterion, each printing a single pass/fail line. Run with
//! `cargo test -p randthresh --test acceptance -- --nocapture` to see the
//! lines.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use randthresh::bootstrap::bootstrap_threshold;
use randthresh::latent::{lower_bound_check, optimal_two_point, random_feasible};
use randthresh::realizability::{range, sigma_bounds, witness_table};
use randthresh::sweep::t_over_prevalence;
use randthresh::table::{AssociationKind, AssociationMeasure, CellProbabilities, ContingencyTable};
use randthresh::threshold::{threshold_from_summary, threshold_from_table};

const LEVELS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(detail());
        }
    }

    fn finish(self) {
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!("{}: {status}", self.name);
        assert!(
            self.failures.is_empty(),
            "{} failed:\n  {}",
            self.name,
            self.failures.join("\n  ")
        );
    }
}

fn stroke() -> ContingencyTable {
    ContingencyTable::new(1823, 647, 110986, 6277).unwrap()
}

fn copd() -> ContingencyTable {
    ContingencyTable::new(318, 1631, 4679, 7538).unwrap()
}

fn measure(kind: AssociationKind, value: f64) -> AssociationMeasure {
    AssociationMeasure::new(kind, value).unwrap()
}

#[test]
fn criterion_1_stroke_application() {
    let mut criterion = Criterion::new("criterion 1 (stroke application)");
    let cells = stroke().probabilities().unwrap();
    let margins = cells.margins();
    let rr = cells
        .association(AssociationKind::RelativeRisk)
        .finite()
        .unwrap();

    let started = Instant::now();
    let from_table = threshold_from_table(&cells);
    let from_summary = threshold_from_summary(
        margins.p_e,
        margins.p_d,
        measure(AssociationKind::RelativeRisk, rr),
    )
    .unwrap();
    let elapsed = started.elapsed();

    criterion.check((margins.p_e - 0.058).abs() < 5e-4, || {
        format!("p_e = {}", margins.p_e)
    });
    criterion.check((margins.p_d - 0.021).abs() < 5e-4, || {
        format!("p_d = {}", margins.p_d)
    });
    criterion.check((rr - 5.8).abs() < 0.05, || format!("RR = {rr}"));
    criterion.check((from_table.t - 0.87).abs() < 0.005, || {
        format!("T from table = {}", from_table.t)
    });
    criterion.check((from_summary.t - 0.87).abs() < 0.005, || {
        format!("T from summary = {}", from_summary.t)
    });
    criterion.check((from_table.t - from_summary.t).abs() < 1e-10, || {
        format!("routes differ by {}", (from_table.t - from_summary.t).abs())
    });
    criterion.check(elapsed.as_secs_f64() < 1e-3, || {
        format!("runtime {elapsed:?} >= 1 ms")
    });
    criterion.finish();
}

#[test]
fn criterion_2_copd_application() {
    let mut criterion = Criterion::new("criterion 2 (COPD application)");
    let cells = copd().probabilities().unwrap();
    let margins = cells.margins();
    let rr = cells
        .association(AssociationKind::RelativeRisk)
        .finite()
        .unwrap();
    let report = threshold_from_table(&cells);

    criterion.check((margins.p_e - 0.647).abs() < 5e-4, || {
        format!("p_e = {}", margins.p_e)
    });
    criterion.check((margins.p_d - 0.138).abs() < 5e-4, || {
        format!("p_d = {}", margins.p_d)
    });
    criterion.check((rr - 2.8).abs() < 0.05, || format!("RR = {rr}"));
    criterion.check((report.t - 0.84).abs() < 0.005, || {
        format!("T = {}", report.t)
    });

    // the smaller association needs more determinism to explain away
    let stroke_cells = stroke().probabilities().unwrap();
    let stroke_report = threshold_from_table(&stroke_cells);
    let stroke_rr = stroke_cells
        .association(AssociationKind::RelativeRisk)
        .finite()
        .unwrap();
    criterion.check(rr < stroke_rr, || {
        format!("expected RR ordering: {rr} vs {stroke_rr}")
    });
    criterion.check(report.t < stroke_report.t, || {
        format!("expected T ordering: {} vs {}", report.t, stroke_report.t)
    });
    criterion.finish();
}

#[test]
fn criterion_3_balanced_anchor_point() {
    let mut criterion = Criterion::new("criterion 3 (balanced anchor point)");
    let cells = CellProbabilities::new(1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0).unwrap();
    let expected = [
        (AssociationKind::RiskDifference, 1.0 / 3.0),
        (AssociationKind::RelativeRisk, 2.0),
        (AssociationKind::OddsRatio, 4.0),
        (AssociationKind::Phi, 1.0 / 3.0),
    ];
    for (kind, want) in expected {
        let got = cells.association(kind).finite().unwrap();
        criterion.check((got - want).abs() <= 1e-12, || {
            format!("{kind} = {got}, expected {want}")
        });
    }

    let t_table = threshold_from_table(&cells).t;
    criterion.check((t_table - 2.0 / 3.0).abs() <= 1e-12, || {
        format!("T from table = {t_table}")
    });
    for (kind, value) in [
        (AssociationKind::RiskDifference, 1.0 / 3.0),
        (AssociationKind::RelativeRisk, 2.0),
        (AssociationKind::OddsRatio, 4.0),
    ] {
        let t = threshold_from_summary(0.5, 0.5, measure(kind, value))
            .unwrap()
            .t;
        criterion.check((t - 2.0 / 3.0).abs() <= 1e-12, || {
            format!("T via {kind} = {t}")
        });
    }
    criterion.finish();
}

#[test]
fn criterion_4_cross_formula_equivalence() {
    let mut criterion = Criterion::new("criterion 4 (cross-formula equivalence)");
    let started = Instant::now();
    let steps = 20usize;
    let mut worst: f64 = 0.0;
    for i in 0..steps {
        let p_e = (i as f64 + 0.5) / steps as f64;
        for j in 0..steps {
            let p_d = (j as f64 + 0.5) / steps as f64;
            let (lower, upper) = sigma_bounds(p_e, p_d);
            for k in 0..steps {
                let sigma = lower + (k as f64 + 0.5) / steps as f64 * (upper - lower);
                let cells = witness_table(p_e, p_d, sigma).unwrap();
                let margins = cells.margins();
                let t_table = threshold_from_table(&cells).t;
                for kind in [
                    AssociationKind::RiskDifference,
                    AssociationKind::RelativeRisk,
                    AssociationKind::OddsRatio,
                ] {
                    let alpha = cells.association(kind).finite().unwrap();
                    let t_summary =
                        threshold_from_summary(margins.p_e, margins.p_d, measure(kind, alpha))
                            .expect("interior grid point must be realizable")
                            .t;
                    worst = worst.max((t_summary - t_table).abs());
                }
            }
        }
    }
    let elapsed = started.elapsed();
    criterion.check(worst < 1e-10, || format!("worst route discrepancy {worst}"));
    criterion.check(elapsed.as_secs_f64() < 5.0, || {
        format!("runtime {elapsed:?} >= 5 s")
    });
    criterion.finish();
}

#[test]
fn criterion_5_chi_squared_identity() {
    let mut criterion = Criterion::new("criterion 5 (chi-squared identity)");
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst: f64 = 0.0;
    for index in 0..10_000u32 {
        let mut counts = [
            rng.random_range(1u64..=100_000),
            rng.random_range(1u64..=100_000),
            rng.random_range(1u64..=100_000),
            rng.random_range(1u64..=100_000),
        ];
        // a tenth of the tables get one empty cell; the identity only needs
        // positive margins
        if index % 10 == 0 {
            counts[rng.random_range(0usize..4)] = 0;
        }
        let table = match ContingencyTable::new(counts[0], counts[1], counts[2], counts[3]) {
            Ok(table) => table,
            Err(_) => continue,
        };
        let cells = table.probabilities_allowing_zero_cells().unwrap();
        let root = (table.chi_squared() / table.n() as f64).sqrt();
        worst = worst.max((root - cells.phi().abs()).abs());
    }
    criterion.check(worst < 1e-12, || {
        format!("worst |sqrt(chi2/n) - |phi|| = {worst}")
    });
    criterion.finish();
}

#[test]
fn criterion_6_optimality_oracle() {
    let mut criterion = Criterion::new("criterion 6 (optimality oracle)");
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let oracle_draws = 10_000u64;
    for table_index in 0..50u64 {
        let p_e = rng.random_range(0.05..0.95);
        let p_d = rng.random_range(0.05..0.95);
        let (lower, upper) = sigma_bounds(p_e, p_d);
        let span = upper - lower;
        let sigma = rng.random_range(lower + 0.05 * span..upper - 0.05 * span);
        let cells = witness_table(p_e, p_d, sigma).unwrap();
        let phi_abs = cells.phi().abs();

        let (_, mu_star) = optimal_two_point(&cells);
        criterion.check(mu_star.is_feasible(&cells, 1e-12), || {
            format!("mu* infeasible for table {table_index}")
        });
        let r2_star = mu_star.summary().unwrap().r2;
        criterion.check((r2_star - phi_abs).abs() <= 1e-12, || {
            format!("R2(mu*) = {r2_star} vs |phi| = {phi_abs} for table {table_index}")
        });

        let mut min_gap = f64::INFINITY;
        for draw in 0..oracle_draws {
            let seed = table_index * oracle_draws + draw;
            let mu =
                random_feasible(&cells, 3, seed).expect("random feasible generation must succeed");
            let gap = lower_bound_check(&mu, &cells).unwrap();
            min_gap = min_gap.min(gap);
        }
        criterion.check(min_gap >= -1e-9, || {
            format!("oracle undercut the bound by {min_gap} on table {table_index}")
        });
    }
    let elapsed = started.elapsed();
    criterion.check(elapsed.as_secs_f64() < 60.0, || {
        format!("runtime {elapsed:?} >= 60 s")
    });
    criterion.finish();
}

#[test]
fn criterion_7_monotonicity_suites() {
    let mut criterion = Criterion::new("criterion 7 (monotonicity suites)");

    let t_of = |p_e: f64, p_d: f64, kind: AssociationKind, value: f64| -> f64 {
        threshold_from_summary(p_e, p_d, measure(kind, value))
            .unwrap()
            .t
    };
    let assert_strictly_decreasing = |criterion: &mut Criterion, label: &str, values: &[f64]| {
        let violations = values.windows(2).filter(|pair| pair[1] >= pair[0]).count();
        criterion.check(violations == 0, || {
            format!("{label}: {violations} monotonicity violations")
        });
    };

    // T falls as |RD|, |RR-1|, |OR-1| grow, at fixed prevalences
    for &(p_e, p_d) in &[(0.5, 0.5), (0.3, 0.6), (0.7, 0.2)] {
        let points = 120usize;
        let rd_range = range(p_e, p_d, AssociationKind::RiskDifference);

        let grid = |lo: f64, hi: f64| -> Vec<f64> {
            (0..points)
                .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / points as f64)
                .collect()
        };

        let rd_up: Vec<f64> = grid(1e-4, rd_range.upper - 1e-6)
            .iter()
            .map(|&v| t_of(p_e, p_d, AssociationKind::RiskDifference, v))
            .collect();
        assert_strictly_decreasing(&mut criterion, "T vs RD up", &rd_up);
        let rd_down: Vec<f64> = grid(-1e-4, rd_range.lower + 1e-6)
            .iter()
            .map(|&v| t_of(p_e, p_d, AssociationKind::RiskDifference, v))
            .collect();
        assert_strictly_decreasing(&mut criterion, "T vs RD down", &rd_down);

        let rr_range = range(p_e, p_d, AssociationKind::RelativeRisk);
        let rr_hi = if rr_range.upper.is_finite() {
            rr_range.upper - 1e-6
        } else {
            1e4
        };
        let rr_up: Vec<f64> = grid(1.0 + 1e-4, rr_hi)
            .iter()
            .map(|&v| t_of(p_e, p_d, AssociationKind::RelativeRisk, v))
            .collect();
        assert_strictly_decreasing(&mut criterion, "T vs RR above 1", &rr_up);
        let rr_down: Vec<f64> = grid(1.0 - 1e-4, rr_range.lower + 1e-6)
            .iter()
            .map(|&v| t_of(p_e, p_d, AssociationKind::RelativeRisk, v))
            .collect();
        assert_strictly_decreasing(&mut criterion, "T vs RR below 1", &rr_down);

        let or_up: Vec<f64> = grid(1.0 + 1e-4, 1e4)
            .iter()
            .map(|&v| t_of(p_e, p_d, AssociationKind::OddsRatio, v))
            .collect();
        assert_strictly_decreasing(&mut criterion, "T vs OR above 1", &or_up);
        let or_down: Vec<f64> = grid(1.0 - 1e-4, 1e-4)
            .iter()
            .map(|&v| t_of(p_e, p_d, AssociationKind::OddsRatio, v))
            .collect();
        assert_strictly_decreasing(&mut criterion, "T vs OR below 1", &or_down);
    }

    // more balance is better: at fixed OR, T grows strictly along every ray
    // away from (0.5, 0.5), i.e. falls in the balance b
    for ray in 0..8 {
        let angle = std::f64::consts::FRAC_PI_4 * ray as f64;
        let (dx, dy) = (angle.cos(), angle.sin());
        let reach = 0.47 / dx.abs().max(dy.abs());
        let points = 110usize;
        let ts: Vec<f64> = (1..=points)
            .map(|i| {
                let t = reach * i as f64 / points as f64;
                t_of(0.5 + t * dx, 0.5 + t * dy, AssociationKind::OddsRatio, 4.0)
            })
            .collect();
        let increasing: Vec<f64> = ts.iter().rev().copied().collect();
        assert_strictly_decreasing(&mut criterion, &format!("T along ray {ray}"), &increasing);
    }

    // conditional on RD: T falls in |p_d - 0.5| at fixed p_e, grows in
    // |p_e - 0.5| at fixed p_d
    {
        let rd = 0.25;
        let p_e = 0.4;
        let points = 110usize;
        let up: Vec<f64> = (0..points)
            .map(|i| 0.5 + 0.22 * (i as f64 + 0.5) / points as f64)
            .map(|p_d| t_of(p_e, p_d, AssociationKind::RiskDifference, rd))
            .collect();
        assert_strictly_decreasing(&mut criterion, "RD fixed: T vs p_d above 0.5", &up);
        let down: Vec<f64> = (0..points)
            .map(|i| 0.5 - 0.35 * (i as f64 + 0.5) / points as f64)
            .map(|p_d| t_of(p_e, p_d, AssociationKind::RiskDifference, rd))
            .collect();
        assert_strictly_decreasing(&mut criterion, "RD fixed: T vs p_d below 0.5", &down);

        let p_d = 0.45;
        let t_vs_pe: Vec<f64> = (0..points)
            .map(|i| 0.5 + 0.45 * (i as f64 + 0.5) / points as f64)
            .map(|p_e| t_of(p_e, p_d, AssociationKind::RiskDifference, rd))
            .collect();
        // T increasing in |p_e - 0.5|: reverse before the decreasing check
        let reversed: Vec<f64> = t_vs_pe.iter().rev().copied().collect();
        assert_strictly_decreasing(&mut criterion, "RD fixed: T vs p_e", &reversed);
    }

    // conditional on RR at fixed p_e: T falls as the outcome gets common
    {
        let points = 110usize;
        let ts: Vec<f64> = (0..points)
            .map(|i| 0.05 + (0.65 - 0.05) * (i as f64 + 0.5) / points as f64)
            .map(|p_d| t_of(0.4, p_d, AssociationKind::RelativeRisk, 2.0))
            .collect();
        assert_strictly_decreasing(&mut criterion, "RR fixed: T vs p_d", &ts);
    }

    criterion.finish();
}

#[test]
fn criterion_8_limit_suite() {
    let mut criterion = Criterion::new("criterion 8 (limit suite)");
    // margins in general position: at p_e + p_d = 1 or p_e = p_d the
    // OR-to-RR map degenerates to a square-root rate at one bound and a
    // 1e-6 step no longer lands within 1e-3 of the limit
    let margins = [(0.3, 0.6), (0.45, 0.5), (0.6, 0.2), (0.6, 0.55)];
    for &(p_e, p_d) in &margins {
        let phi_range = range(p_e, p_d, AssociationKind::Phi);
        let t_upper_limit = 1.0 - phi_range.upper;
        let t_lower_limit = 1.0 + phi_range.lower;
        for kind in [
            AssociationKind::RiskDifference,
            AssociationKind::RelativeRisk,
            AssociationKind::OddsRatio,
        ] {
            let bounds = range(p_e, p_d, kind);
            // 1e9 stands in for an infinite bound
            let near_upper = if bounds.upper.is_finite() {
                bounds.upper - 1e-6
            } else {
                1e9
            };
            let t = threshold_from_summary(p_e, p_d, measure(kind, near_upper))
                .unwrap()
                .t;
            criterion.check((t - t_upper_limit).abs() < 1e-3, || {
                format!("{kind} upper limit at ({p_e}, {p_d}): T = {t}, limit {t_upper_limit}")
            });
            let near_lower = if bounds.lower > 0.0 {
                bounds.lower + 1e-6
            } else if bounds.lower == 0.0 {
                1e-6
            } else {
                bounds.lower + 1e-6
            };
            let t = threshold_from_summary(p_e, p_d, measure(kind, near_lower))
                .unwrap()
                .t;
            criterion.check((t - t_lower_limit).abs() < 1e-3, || {
                format!("{kind} lower limit at ({p_e}, {p_d}): T = {t}, limit {t_lower_limit}")
            });
        }
    }

    // balance floor: at OR = 4 the balanced design attains the infimum 2/3
    let center = threshold_from_summary(0.5, 0.5, measure(AssociationKind::OddsRatio, 4.0))
        .unwrap()
        .t;
    criterion.check((center - 2.0 / 3.0).abs() < 1e-9, || {
        format!("T(0.5, 0.5) = {center}")
    });
    let sweep = t_over_prevalence(AssociationKind::OddsRatio, 4.0, 101).unwrap();
    let min = sweep
        .rows
        .iter()
        .filter_map(|row| row.t)
        .fold(f64::INFINITY, f64::min);
    criterion.check(min >= center - 1e-12, || {
        format!("grid minimum {min} undercuts the center value {center}")
    });
    criterion.finish();
}

#[test]
fn criterion_9_bootstrap_determinism_and_consistency() {
    let mut criterion = Criterion::new("criterion 9 (bootstrap determinism and consistency)");
    let table = copd();

    let started = Instant::now();
    let first = bootstrap_threshold(&table, 10_000, 99, &LEVELS).unwrap();
    let elapsed = started.elapsed();
    let second = bootstrap_threshold(&table, 10_000, 99, &LEVELS).unwrap();
    criterion.check(first == second, || {
        "identical seeds produced different results".to_string()
    });
    criterion.check(elapsed.as_secs_f64() < 10.0, || {
        format!("runtime {elapsed:?} >= 10 s")
    });

    let scale = |factor: u64| {
        ContingencyTable::new(
            table.n01() * factor,
            table.n11() * factor,
            table.n00() * factor,
            table.n10() * factor,
        )
        .unwrap()
    };
    let sd_1 = bootstrap_threshold(&scale(1), 4000, 99, &LEVELS)
        .unwrap()
        .sample_sd();
    let sd_10 = bootstrap_threshold(&scale(10), 4000, 99, &LEVELS)
        .unwrap()
        .sample_sd();
    let sd_100 = bootstrap_threshold(&scale(100), 4000, 99, &LEVELS)
        .unwrap()
        .sample_sd();
    criterion.check(sd_10 < sd_1 && sd_100 < sd_10, || {
        format!("bootstrap sd not shrinking with n: {sd_1}, {sd_10}, {sd_100}")
    });
    criterion.finish();
}
