//! Cross-module invariants: symmetry and scale properties of the observed
//! statistics, route equivalence for the threshold, root stability of the
//! OR-to-RR conversion, and interiority/optimality of the constructed
//! distributions.

use proptest::prelude::*;

use randthresh::latent::optimal_two_point;
use randthresh::realizability::{range, sigma_bounds, witness_table};
use randthresh::sweep::t_over_prevalence;
use randthresh::table::{AssociationKind, AssociationMeasure, ContingencyTable};
use randthresh::threshold::{or_to_rr, rr_to_or, threshold_from_summary, threshold_from_table};

fn table_strategy() -> impl Strategy<Value = ContingencyTable> {
    (1u64..=5000, 1u64..=5000, 1u64..=5000, 1u64..=5000)
        .prop_map(|(n01, n11, n00, n10)| ContingencyTable::new(n01, n11, n00, n10).unwrap())
}

/// (p_e, p_d, covariance fraction) with the covariance strictly interior.
fn interior_triple_strategy() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.02f64..0.98, 0.02f64..0.98, 0.02f64..0.98)
}

proptest! {
    #[test]
    fn exposure_label_swap_negates_phi(table in table_strategy()) {
        let cells = table.probabilities().unwrap();
        let swapped = ContingencyTable::new(table.n11(), table.n01(), table.n10(), table.n00())
            .unwrap()
            .probabilities()
            .unwrap();
        prop_assert!((swapped.phi() + cells.phi()).abs() < 1e-12);
        prop_assert!((swapped.sigma_ed() + cells.sigma_ed()).abs() < 1e-12);
        prop_assert!((swapped.phi().abs() - cells.phi().abs()).abs() < 1e-12);
    }

    #[test]
    fn outcome_label_swap_negates_phi(table in table_strategy()) {
        let cells = table.probabilities().unwrap();
        let swapped = ContingencyTable::new(table.n00(), table.n10(), table.n01(), table.n11())
            .unwrap()
            .probabilities()
            .unwrap();
        prop_assert!((swapped.phi() + cells.phi()).abs() < 1e-12);
        prop_assert!((swapped.sigma_ed() + cells.sigma_ed()).abs() < 1e-12);
    }

    #[test]
    fn transposing_exposure_and_outcome_preserves_phi(table in table_strategy()) {
        let cells = table.probabilities().unwrap();
        let transposed = ContingencyTable::new(table.n10(), table.n11(), table.n00(), table.n01())
            .unwrap()
            .probabilities()
            .unwrap();
        prop_assert!((transposed.phi() - cells.phi()).abs() < 1e-12);
    }

    #[test]
    fn scaling_counts_changes_nothing(table in table_strategy(), factor in 2u64..=9) {
        let cells = table.probabilities().unwrap();
        let scaled = ContingencyTable::new(
            table.n01() * factor,
            table.n11() * factor,
            table.n00() * factor,
            table.n10() * factor,
        )
        .unwrap()
        .probabilities()
        .unwrap();
        for (a, b) in cells.as_array().iter().zip(scaled.as_array().iter()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        prop_assert!((cells.phi() - scaled.phi()).abs() < 1e-13);
        for kind in [
            AssociationKind::RiskDifference,
            AssociationKind::RelativeRisk,
            AssociationKind::OddsRatio,
        ] {
            let a = cells.association(kind).finite().unwrap();
            let b = scaled.association(kind).finite().unwrap();
            prop_assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn chi_squared_identity(table in table_strategy()) {
        let n = table.n() as f64;
        let phi = table.probabilities().unwrap().phi();
        let root = (table.chi_squared() / n).sqrt();
        prop_assert!((root - phi.abs()).abs() < 1e-12);
    }

    #[test]
    fn phi_stays_strictly_inside_the_unit_interval(table in table_strategy()) {
        let phi = table.probabilities().unwrap().phi();
        prop_assert!(phi > -1.0 && phi < 1.0);
    }

    #[test]
    fn summary_routes_match_the_table_route(
        (p_e, p_d, frac) in interior_triple_strategy(),
    ) {
        let (lower, upper) = sigma_bounds(p_e, p_d);
        let sigma = lower + frac * (upper - lower);
        let cells = witness_table(p_e, p_d, sigma).unwrap();
        let margins = cells.margins();
        let from_table = threshold_from_table(&cells).t;
        for kind in [
            AssociationKind::RiskDifference,
            AssociationKind::RelativeRisk,
            AssociationKind::OddsRatio,
            AssociationKind::Phi,
        ] {
            let alpha = cells.association(kind);
            let report = threshold_from_summary(
                margins.p_e,
                margins.p_d,
                AssociationMeasure::new(kind, alpha.finite().unwrap()).unwrap(),
            )
            .unwrap();
            prop_assert!(
                (report.t - from_table).abs() < 1e-10,
                "{kind} route differs: {} vs {from_table}",
                report.t
            );
        }
    }

    #[test]
    fn conversion_round_trip((p_e, p_d, frac) in interior_triple_strategy()) {
        let (lower, upper) = sigma_bounds(p_e, p_d);
        let sigma = lower + frac * (upper - lower);
        let cells = witness_table(p_e, p_d, sigma).unwrap();
        let rr = cells
            .association(AssociationKind::RelativeRisk)
            .finite()
            .unwrap();
        let or = rr_to_or(p_e, p_d, rr).unwrap();
        prop_assert!((or_to_rr(p_e, p_d, or) - rr).abs() < 1e-10 * (1.0 + rr));
    }

    #[test]
    fn optimal_two_point_attains_phi_with_interior_atoms(
        (p_e, p_d, frac) in interior_triple_strategy(),
    ) {
        let (lower, upper) = sigma_bounds(p_e, p_d);
        let sigma = lower + frac * (upper - lower);
        let cells = witness_table(p_e, p_d, sigma).unwrap();
        let (_, mu) = optimal_two_point(&cells);
        prop_assert!(mu.is_feasible(&cells, 1e-12));
        let summary = mu.summary().unwrap();
        prop_assert!((summary.r2 - cells.phi().abs()).abs() < 1e-12);
        prop_assert!((summary.var_p - cells.sigma_ed().abs()).abs() < 1e-12);
        prop_assert!((summary.var_r - cells.sigma_ed().abs()).abs() < 1e-12);
        for atom in mu.atoms() {
            prop_assert!(atom.p > 1e-12 && atom.p < 1.0 - 1e-12);
            prop_assert!(atom.r > 1e-12 && atom.r < 1.0 - 1e-12);
        }
    }
}

/// Independent root finder for the RR/OR quadratic: bisection on
/// `g(u) = p_e u^2 + a u + c`, which is negative at 0 and positive past the
/// root.
fn bisect_rr(p_e: f64, p_d: f64, odds_ratio: f64) -> f64 {
    let g = |u: f64| {
        let a = p_d * (odds_ratio - 1.0) + (1.0 - p_e) - p_e * odds_ratio;
        let c = (p_e - 1.0) * odds_ratio;
        p_e * u * u + a * u + c
    };
    let mut hi = 1.0f64;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        assert!(hi < 1e300, "no bracket found");
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn or_to_rr_agrees_with_the_bisection_oracle() {
    let prevalences = [0.1, 0.3, 0.5, 0.7, 0.9];
    let odds_ratios = [1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 1e2, 1e3, 1e4];
    for &p_e in &prevalences {
        for &p_d in &prevalences {
            for &or in &odds_ratios {
                let closed = or_to_rr(p_e, p_d, or);
                let oracle = bisect_rr(p_e, p_d, or);
                assert!(
                    (closed - oracle).abs() < 1e-9,
                    "root mismatch at pe={p_e} pd={p_d} OR={or}: {closed} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn phi_bounds_match_threshold_limits_near_the_edges() {
    // ties the closed-form phi bounds to the observed limits of T
    for &(p_e, p_d) in &[(0.3, 0.6), (0.5, 0.5), (0.6, 0.2)] {
        let phi_range = range(p_e, p_d, AssociationKind::Phi);
        let rd_range = range(p_e, p_d, AssociationKind::RiskDifference);
        let near_upper = threshold_from_summary(
            p_e,
            p_d,
            AssociationMeasure::new(AssociationKind::RiskDifference, rd_range.upper - 1e-6)
                .unwrap(),
        )
        .unwrap();
        assert!((near_upper.t - (1.0 - phi_range.upper)).abs() < 1e-3);
        let near_lower = threshold_from_summary(
            p_e,
            p_d,
            AssociationMeasure::new(AssociationKind::RiskDifference, rd_range.lower + 1e-6)
                .unwrap(),
        )
        .unwrap();
        assert!((near_lower.t - (1.0 + phi_range.lower)).abs() < 1e-3);
    }
}

#[test]
fn prevalence_grid_rays_are_nondecreasing_outward() {
    // grid-based version of the balance monotonicity: at fixed OR, walking
    // any of the 8 rays from the center of the sweep grid never lowers T
    let steps = 41usize;
    let sweep = t_over_prevalence(AssociationKind::OddsRatio, 4.0, steps).unwrap();
    let t_at = |i: usize, j: usize| sweep.rows[i * steps + j].t.unwrap();
    let center = steps / 2;
    let directions: [(i64, i64); 8] = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];
    for (di, dj) in directions {
        let mut last = t_at(center, center);
        let mut k = 1i64;
        loop {
            let i = center as i64 + k * di;
            let j = center as i64 + k * dj;
            if i < 0 || j < 0 || i >= steps as i64 || j >= steps as i64 {
                break;
            }
            let t = t_at(i as usize, j as usize);
            assert!(
                t >= last,
                "T fell moving outward along ({di}, {dj}) at step {k}"
            );
            last = t;
            k += 1;
        }
    }
}
