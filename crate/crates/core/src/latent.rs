//! Latent propensity-risk distributions on the open unit square.
//!
//! A finitely supported distribution of `(p, r)` pairs is feasible for an
//! observed table when its expected cells match the observed cells. Among
//! all feasible distributions, the two-point construction built here attains
//! the minimum possible `R^2`, which equals `|phi|`; that minimum is what
//! certifies the threshold `T = 1 - |phi|`. A seeded generator of random
//! feasible distributions serves as a brute-force oracle for the bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::CellProbabilities;
use crate::{sgn, EPS_BOUNDARY};

const GENERATION_ATTEMPTS: u32 = 1000;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LatentError {
    #[error("a distribution needs at least one atom")]
    EmptyDistribution,
    #[error("atom ({p}, {r}) lies outside the open unit square")]
    AtomOutsideSquare { p: f64, r: f64 },
    #[error("atom weight {weight} must be positive and finite")]
    BadWeight { weight: f64 },
    #[error("atom weights sum to {sum}, which is farther than 1e-12 from 1")]
    WeightSumMismatch { sum: f64 },
    #[error("marginal mean {mean} of {name} is within {EPS_BOUNDARY} of the boundary")]
    DegenerateMarginal { name: &'static str, mean: f64 },
    #[error("distribution is not feasible for the given cells at tolerance {tol}")]
    NotFeasible { tol: f64 },
    #[error("no feasible distribution found after {attempts} attempts")]
    GenerationFailed { attempts: u32 },
    #[error("R2_p = {r2_p} must lie strictly between phi^2 = {phi_squared} and 1")]
    InvalidFactorization { r2_p: f64, phi_squared: f64 },
}

/// A point mass at `(p, r)` with the given weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentAtom {
    pub p: f64,
    pub r: f64,
    #[serde(rename = "w")]
    pub weight: f64,
}

impl LatentAtom {
    pub fn new(p: f64, r: f64, weight: f64) -> Result<Self, LatentError> {
        if !(p.is_finite() && r.is_finite() && p > 0.0 && p < 1.0 && r > 0.0 && r < 1.0) {
            return Err(LatentError::AtomOutsideSquare { p, r });
        }
        if !weight.is_finite() || weight <= 0.0 {
            return Err(LatentError::BadWeight { weight });
        }
        Ok(Self { p, r, weight })
    }
}

/// A finitely supported propensity-risk distribution; weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLatentDistribution {
    atoms: Vec<LatentAtom>,
}

impl DiscreteLatentDistribution {
    pub fn new(atoms: Vec<LatentAtom>) -> Result<Self, LatentError> {
        if atoms.is_empty() {
            return Err(LatentError::EmptyDistribution);
        }
        let sum: f64 = atoms.iter().map(|atom| atom.weight).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(LatentError::WeightSumMismatch { sum });
        }
        let atoms = atoms
            .into_iter()
            .map(|atom| LatentAtom {
                weight: atom.weight / sum,
                ..atom
            })
            .collect();
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[LatentAtom] {
        &self.atoms
    }

    /// First and second moments plus the standardized randomness summaries.
    pub fn summary(&self) -> Result<RandomnessSummary, LatentError> {
        let mean_p: f64 = self.atoms.iter().map(|a| a.weight * a.p).sum();
        let mean_r: f64 = self.atoms.iter().map(|a| a.weight * a.r).sum();
        for (name, mean) in [("p", mean_p), ("r", mean_r)] {
            if mean <= EPS_BOUNDARY || mean >= 1.0 - EPS_BOUNDARY {
                return Err(LatentError::DegenerateMarginal { name, mean });
            }
        }
        let var_p: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * (a.p - mean_p) * (a.p - mean_p))
            .sum();
        let var_r: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * (a.r - mean_r) * (a.r - mean_r))
            .sum();
        let cov_pr: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * (a.p - mean_p) * (a.r - mean_r))
            .sum();
        let r2_p = var_p / (mean_p * (1.0 - mean_p));
        let r2_r = var_r / (mean_r * (1.0 - mean_r));
        let r2 = (r2_p * r2_r).sqrt();
        let rho_pr = if var_p > 0.0 && var_r > 0.0 {
            Some(cov_pr / (var_p * var_r).sqrt())
        } else {
            None
        };
        Ok(RandomnessSummary {
            mean_p,
            mean_r,
            var_p,
            var_r,
            cov_pr,
            r2_p,
            r2_r,
            r2,
            eta: 1.0 - r2,
            rho_pr,
        })
    }

    /// The cell probabilities this distribution induces in expectation:
    /// `(E[(1-p)r], E[pr], E[(1-p)(1-r)], E[p(1-r)])`.
    pub fn expected_cells(&self) -> CellProbabilities {
        let mut p01 = 0.0;
        let mut p11 = 0.0;
        let mut p00 = 0.0;
        let mut p10 = 0.0;
        for atom in &self.atoms {
            p01 += atom.weight * (1.0 - atom.p) * atom.r;
            p11 += atom.weight * atom.p * atom.r;
            p00 += atom.weight * (1.0 - atom.p) * (1.0 - atom.r);
            p10 += atom.weight * atom.p * (1.0 - atom.r);
        }
        CellProbabilities::from_expectations(p01, p11, p00, p10)
    }

    /// Whether the expected cells match the observed cells within `tol`,
    /// cellwise.
    pub fn is_feasible(&self, cells: &CellProbabilities, tol: f64) -> bool {
        let expected = self.expected_cells().as_array();
        let observed = cells.as_array();
        expected
            .iter()
            .zip(observed.iter())
            .all(|(e, o)| (e - o).abs() <= tol)
    }
}

/// Moment summaries of a latent distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomnessSummary {
    pub mean_p: f64,
    pub mean_r: f64,
    pub var_p: f64,
    pub var_r: f64,
    pub cov_pr: f64,
    /// Coefficient of determinism for propensity,
    /// `var_p / (mean_p (1 - mean_p))`.
    pub r2_p: f64,
    /// Coefficient of determinism for risk.
    pub r2_r: f64,
    /// Geometric mean `sqrt(r2_p * r2_r)`.
    pub r2: f64,
    /// Randomness `1 - r2`.
    pub eta: f64,
    /// Correlation of `p` and `r`; absent when either variance vanishes.
    pub rho_pr: Option<f64>,
}

/// Parameters of the two-point distribution attaining the minimum `R^2`.
///
/// The atoms sit at `(p_e + k1, p_d + sgn(sigma) k1)` and
/// `(p_e - k2, p_d - sgn(sigma) k2)` with weights proportional to `theta1`
/// and `theta2`; `k1 k2 = |sigma_ed|` and `theta1 k1 = theta2 k2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointConstruction {
    pub theta1: f64,
    pub theta2: f64,
    pub k1: f64,
    pub k2: f64,
    /// Sign of the observed covariance; 0 collapses both atoms to
    /// `(p_e, p_d)`.
    pub sign: f64,
}

/// Build the optimal two-point distribution for the observed cells.
///
/// The result is feasible to machine precision and its `R^2` equals `|phi|`;
/// with zero covariance it degenerates to a single atom at `(p_e, p_d)`.
pub fn optimal_two_point(
    cells: &CellProbabilities,
) -> (TwoPointConstruction, DiscreteLatentDistribution) {
    let margins = cells.margins();
    let (p_e, p_d) = (margins.p_e, margins.p_d);
    let sigma = cells.sigma_ed();
    let sign = sgn(sigma);
    let theta1 = p_e.min(0.5 + sign * (p_d - 0.5));
    let theta2 = (1.0 - p_e).min(0.5 + sign * (0.5 - p_d));

    if sigma == 0.0 {
        let construction = TwoPointConstruction {
            theta1,
            theta2,
            k1: 0.0,
            k2: 0.0,
            sign,
        };
        let atom = LatentAtom::new(p_e, p_d, 1.0).expect("margins are interior");
        let dist = DiscreteLatentDistribution::new(vec![atom]).expect("single unit atom");
        return (construction, dist);
    }

    let k1 = (theta2 / theta1).sqrt() * sigma.abs().sqrt();
    let k2 = (theta1 / theta2).sqrt() * sigma.abs().sqrt();
    // guaranteed by the covariance bounds: theta1 theta2 > |sigma_ed|
    assert!(
        k1 < theta2 && k2 < theta1,
        "two-point atoms must stay interior (sigma at its bound?)"
    );
    let total = theta1 + theta2;
    let atoms = vec![
        LatentAtom::new(p_e + k1, p_d + sign * k1, theta1 / total)
            .expect("first atom interior by k1 < theta2"),
        LatentAtom::new(p_e - k2, p_d - sign * k2, theta2 / total)
            .expect("second atom interior by k2 < theta1"),
    ];
    let dist = DiscreteLatentDistribution::new(atoms).expect("weights sum to one");
    (
        TwoPointConstruction {
            theta1,
            theta2,
            k1,
            k2,
            sign,
        },
        dist,
    )
}

/// Slack of the variance lower bound for a feasible distribution:
/// `R^2(mu) - |phi(cells)|`, which is nonnegative up to rounding.
pub fn lower_bound_check(
    mu: &DiscreteLatentDistribution,
    cells: &CellProbabilities,
) -> Result<f64, LatentError> {
    let tol = 1e-8;
    if !mu.is_feasible(cells, tol) {
        return Err(LatentError::NotFeasible { tol });
    }
    let summary = mu.summary()?;
    Ok(summary.r2 - cells.phi().abs())
}

/// A seeded random feasible distribution with `n_atoms` atoms.
///
/// Samples `n_atoms - 1` atoms with random weights, then solves in closed
/// form for the retained mass and one correction atom so that `E[p]`,
/// `E[r]`, and `E[pr]` match the observed cells exactly; attempts that
/// violate interiority are retried. With nonzero covariance the free atoms
/// are drawn from the sign-matched quadrant relative to `(p_e, p_d)`, which
/// brackets the retained-mass root the same way the two-point existence
/// argument does. Deterministic for a given seed.
pub fn random_feasible(
    cells: &CellProbabilities,
    n_atoms: usize,
    seed: u64,
) -> Result<DiscreteLatentDistribution, LatentError> {
    assert!(n_atoms >= 2, "need at least two atoms");
    let margins = cells.margins();
    let (p_e, p_d) = (margins.p_e, margins.p_d);
    let p11 = cells.p11();
    let sigma = p11 - p_e * p_d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free_atoms = n_atoms - 1;
    const GUARD: f64 = 1e-6;

    // admissible rectangle for the free atoms, per sign of the covariance
    // and side. For a single free atom at (x, y) the retained-mass root has
    // an interior correction atom exactly when (x, y) lies in one of these;
    // the rectangles are nonempty whenever sigma is strictly inside its
    // bounds. Multi-atom samples perturb this linear picture only through
    // their own covariance, which retries absorb.
    let abs_sigma = sigma.abs();
    let rectangles: [(f64, f64, f64, f64); 2] = if sigma > 0.0 {
        [
            (
                p_e + sigma / p_d,
                1.0 - GUARD,
                p_d + sigma / p_e,
                1.0 - GUARD,
            ),
            (
                GUARD,
                p_e - sigma / (1.0 - p_d),
                GUARD,
                p_d - sigma / (1.0 - p_e),
            ),
        ]
    } else if sigma < 0.0 {
        [
            (
                p_e + abs_sigma / (1.0 - p_d),
                1.0 - GUARD,
                GUARD,
                p_d - abs_sigma / p_e,
            ),
            (
                GUARD,
                p_e - abs_sigma / p_d,
                p_d + abs_sigma / (1.0 - p_e),
                1.0 - GUARD,
            ),
        ]
    } else {
        let half_p = p_e.min(1.0 - p_e) - GUARD;
        let half_r = p_d.min(1.0 - p_d) - GUARD;
        [
            (p_e - half_p, p_e + half_p, p_d - half_r, p_d + half_r),
            (p_e - half_p, p_e + half_p, p_d - half_r, p_d + half_r),
        ]
    };

    for attempt in 0..GENERATION_ATTEMPTS {
        // alternate sides so the correction atom explores both of them
        let (x_lo, x_hi, y_lo, y_hi) = rectangles[(attempt % 2) as usize];
        if !(x_lo < x_hi && y_lo < y_hi) {
            continue;
        }

        let mut ps = Vec::with_capacity(free_atoms);
        let mut rs = Vec::with_capacity(free_atoms);
        let mut weights = Vec::with_capacity(free_atoms);
        let mut weight_sum = 0.0;
        for _ in 0..free_atoms {
            ps.push(x_lo + rng.random::<f64>() * (x_hi - x_lo));
            rs.push(y_lo + rng.random::<f64>() * (y_hi - y_lo));
            let w = -rng.random::<f64>().ln();
            weights.push(w);
            weight_sum += w;
        }
        for w in &mut weights {
            *w /= weight_sum;
        }

        let m_p: f64 = ps.iter().zip(&weights).map(|(p, w)| p * w).sum();
        let m_r: f64 = rs.iter().zip(&weights).map(|(r, w)| r * w).sum();
        let m_pr: f64 = ps
            .iter()
            .zip(&rs)
            .zip(&weights)
            .map(|((p, r), w)| p * r * w)
            .sum();

        // retained mass t of the sampled part solves
        //   A t^2 + B t + C = 0,  A = cov(nu), C = sigma
        let a = m_pr - m_p * m_r;
        let b = p_e * m_r + p_d * m_p - m_pr - p11;
        let c = sigma;
        for t in quadratic_roots(a, b, c) {
            if !(t > 0.0 && t < 1.0 - 1e-6) {
                continue;
            }
            let lambda = 1.0 - t;
            let p_fix = (p_e - t * m_p) / lambda;
            let r_fix = (p_d - t * m_r) / lambda;
            if !(p_fix > 1e-9 && p_fix < 1.0 - 1e-9 && r_fix > 1e-9 && r_fix < 1.0 - 1e-9) {
                continue;
            }
            if weights.iter().any(|&w| t * w <= 0.0) {
                continue;
            }
            let mut atoms: Vec<LatentAtom> = ps
                .iter()
                .zip(&rs)
                .zip(&weights)
                .map(|((&p, &r), &w)| LatentAtom {
                    p,
                    r,
                    weight: t * w,
                })
                .collect();
            atoms.push(LatentAtom {
                p: p_fix,
                r: r_fix,
                weight: lambda,
            });
            let mu = DiscreteLatentDistribution::new(atoms).expect("weights sum to one");
            if mu.is_feasible(cells, 1e-10) {
                return Ok(mu);
            }
        }
    }
    Err(LatentError::GenerationFailed {
        attempts: GENERATION_ATTEMPTS,
    })
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-300 {
        if b.abs() < 1e-300 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let discriminant = b * b - 4.0 * a * c;
    if discriminant < 0.0 {
        return Vec::new();
    }
    let sqrt_d = discriminant.sqrt();
    if b == 0.0 {
        return vec![sqrt_d / (2.0 * a), -sqrt_d / (2.0 * a)];
    }
    let q = -0.5 * (b + sgn(b) * sqrt_d);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// A feasible two-point distribution with a prescribed split of the minimal
/// `R^2` into `(R2_p, R2_r)`.
///
/// For any `r2_p` strictly between `phi^2` and 1 this scales the two-point
/// offsets separately in the `p` and `r` coordinates so that
/// `R2_p(mu) = r2_p` and `R2_r(mu) = phi^2 / r2_p`, preserving feasibility.
/// This construction is a numerically validated extension and can run out of
/// the unit square on extreme tables; that failure is reported, not patched.
pub fn sharpness_two_point(
    cells: &CellProbabilities,
    r2_p: f64,
) -> Result<DiscreteLatentDistribution, LatentError> {
    let margins = cells.margins();
    let (p_e, p_d) = (margins.p_e, margins.p_d);
    let sigma = cells.sigma_ed();
    let phi_squared = cells.phi() * cells.phi();
    if !(r2_p > phi_squared && r2_p < 1.0) {
        return Err(LatentError::InvalidFactorization { r2_p, phi_squared });
    }
    let r2_r = phi_squared / r2_p;
    let sign = sgn(sigma);
    let theta1 = p_e.min(0.5 + sign * (p_d - 0.5));
    let theta2 = (1.0 - p_e).min(0.5 + sign * (0.5 - p_d));
    let spread_p = (r2_p * p_e * (1.0 - p_e)).sqrt();
    let spread_r = (r2_r * p_d * (1.0 - p_d)).sqrt();
    let ratio = (theta2 / theta1).sqrt();

    let interior = |x: f64| x > EPS_BOUNDARY && x < 1.0 - EPS_BOUNDARY;
    let p1 = p_e + ratio * spread_p;
    let p2 = p_e - spread_p / ratio;
    let r1 = p_d + sign * ratio * spread_r;
    let r2 = p_d - sign * spread_r / ratio;
    // sign = 0 keeps both r coordinates at p_d, matching var_r = 0
    let (r1, r2) = if sign == 0.0 { (p_d, p_d) } else { (r1, r2) };
    for &(p, r) in &[(p1, r1), (p2, r2)] {
        if !(interior(p) && interior(r)) {
            return Err(LatentError::AtomOutsideSquare { p, r });
        }
    }
    let total = theta1 + theta2;
    DiscreteLatentDistribution::new(vec![
        LatentAtom {
            p: p1,
            r: r1,
            weight: theta1 / total,
        },
        LatentAtom {
            p: p2,
            r: r2,
            weight: theta2 / total,
        },
    ])
}
