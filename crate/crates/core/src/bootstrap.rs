//! Parametric multinomial bootstrap for the threshold `T`.
//!
//! Each replicate redraws the table from a multinomial with the observed
//! cell probabilities and the observed total, then recomputes `T`. Replicate
//! RNG streams are derived from `(seed, replicate index)`, so results are
//! bit-identical whether replicates run serially or concurrently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::ContingencyTable;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum BootstrapError {
    #[error("need at least one replicate")]
    NoReplicates,
    #[error("quantile level {0} must lie strictly inside (0, 1)")]
    BadLevel(f64),
    #[error("all {0} replicates lost a margin; the sample is too small to bootstrap")]
    AllDegenerate(usize),
}

/// One requested quantile of the bootstrap distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

/// Bootstrap distribution of `T` for one table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// `T` of the observed table.
    #[serde(rename = "point_T")]
    pub point_t: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Replicate thresholds, sorted ascending; degenerate replicates are
    /// excluded here and counted in `n_degenerate`.
    pub samples: Vec<f64>,
    pub quantiles: Vec<Quantile>,
    /// Replicates whose redrawn table lost a margin (or collapsed to perfect
    /// association, where `T` leaves (0, 1]).
    pub n_degenerate: usize,
}

impl BootstrapResult {
    /// Standard deviation of the retained samples.
    pub fn sample_sd(&self) -> f64 {
        let m = self.samples.len() as f64;
        if m < 2.0 {
            return 0.0;
        }
        let mean = self.samples.iter().sum::<f64>() / m;
        let ss = self
            .samples
            .iter()
            .map(|t| (t - mean) * (t - mean))
            .sum::<f64>();
        (ss / (m - 1.0)).sqrt()
    }
}

/// Bootstrap the threshold of a table.
///
/// `levels` are the quantile levels to extract; they must lie strictly in
/// (0, 1). Deterministic for identical `(table, replicates, seed, levels)`.
pub fn bootstrap_threshold(
    table: &ContingencyTable,
    replicates: usize,
    seed: u64,
    levels: &[f64],
) -> Result<BootstrapResult, BootstrapError> {
    if replicates == 0 {
        return Err(BootstrapError::NoReplicates);
    }
    for &level in levels {
        if !(level.is_finite() && level > 0.0 && level < 1.0) {
            return Err(BootstrapError::BadLevel(level));
        }
    }

    let n = table.n();
    let nf = n as f64;
    let probs = [
        table.n01() as f64 / nf,
        table.n11() as f64 / nf,
        table.n00() as f64 / nf,
        table.n10() as f64 / nf,
    ];
    let point_t = 1.0 - phi_from_counts(table.n01(), table.n11(), table.n00(), table.n10()).abs();

    let mut samples = Vec::with_capacity(replicates);
    let mut n_degenerate = 0usize;
    for index in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let [c01, c11, c00, c10] = draw_multinomial(&mut rng, n, &probs);
        if is_degenerate(c01, c11, c00, c10) {
            n_degenerate += 1;
            continue;
        }
        samples.push(1.0 - phi_from_counts(c01, c11, c00, c10).abs());
    }
    if samples.is_empty() {
        return Err(BootstrapError::AllDegenerate(replicates));
    }
    samples.sort_by(f64::total_cmp);

    let mut sorted_levels = levels.to_vec();
    sorted_levels.sort_by(f64::total_cmp);
    sorted_levels.dedup();
    let quantiles = sorted_levels
        .into_iter()
        .map(|level| Quantile {
            level,
            value: percentile(&samples, level),
        })
        .collect();

    Ok(BootstrapResult {
        point_t,
        replicates,
        seed,
        samples,
        quantiles,
        n_degenerate,
    })
}

fn phi_from_counts(c01: u64, c11: u64, c00: u64, c10: u64) -> f64 {
    let n = (c01 + c11 + c00 + c10) as f64;
    let p01 = c01 as f64 / n;
    let p11 = c11 as f64 / n;
    let p00 = c00 as f64 / n;
    let p10 = c10 as f64 / n;
    let p_e = p11 + p10;
    let p_d = p11 + p01;
    (p11 * p00 - p10 * p01) / (p_e * (1.0 - p_e) * p_d * (1.0 - p_d)).sqrt()
}

fn is_degenerate(c01: u64, c11: u64, c00: u64, c10: u64) -> bool {
    let margin_lost = c11 + c10 == 0 || c01 + c00 == 0 || c01 + c11 == 0 || c00 + c10 == 0;
    // |phi| = 1 when both cells of a diagonal vanish; T = 0 is outside (0, 1]
    let perfect = (c10 == 0 && c01 == 0) || (c11 == 0 && c00 == 0);
    margin_lost || perfect
}

/// Four-category multinomial via sequential conditional binomials.
fn draw_multinomial(rng: &mut ChaCha8Rng, n: u64, probs: &[f64; 4]) -> [u64; 4] {
    let mut counts = [0u64; 4];
    let mut remaining = n;
    let mut mass_left = 1.0;
    for (slot, &p) in counts.iter_mut().take(3).zip(probs.iter()) {
        if remaining == 0 {
            break;
        }
        let conditional = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, conditional)
            .expect("conditional probability is clamped to [0, 1]")
            .sample(rng);
        *slot = draw;
        remaining -= draw;
        mass_left -= p;
    }
    counts[3] = remaining;
    counts
}

/// Linear-interpolation percentile of an ascending-sorted sample.
fn percentile(sorted: &[f64], level: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = level * (m - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}
