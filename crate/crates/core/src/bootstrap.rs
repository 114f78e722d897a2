//! Multiplier block bootstrap for the forward, backward and Hill estimators.
//!
//! The core window `1..=n` is cut into `m = floor(n / r)` consecutive blocks
//! of length `r`; every exceedance in block `j` is reweighted by `1 + xi_j`.
//! The trailing `n - m r` indices join the last block so that zero
//! multipliers reproduce the point estimate exactly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::{backward_term, estimate, resolve_threshold, EstimateRecord, EstimatorKind, ExceedanceSet, ThresholdSpec};
use crate::models::TimeSeries;
use crate::rng::{derive_stream, Label, Stream};
use crate::stats::quantile_sorted;

/// Share of degenerate replicates above which a CI is refused.
pub const MAX_DEGENERATE_SHARE: f64 = 0.2;

/// Law of the centred multipliers `xi_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierLaw {
    /// `+-1` with probability 1/2 each.
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`; never zeroes a block.
    UniformSymmetric,
    /// `xi = 0`; a testing hook under which every replicate is the point estimate.
    Zero,
}

impl MultiplierLaw {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MultiplierLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            MultiplierLaw::UniformSymmetric => {
                let s = 3f64.sqrt();
                rng.random_range(-s..=s)
            }
            MultiplierLaw::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub law: MultiplierLaw,
    /// Number of replicates `B`.
    pub replicates: usize,
    /// `None` picks `ceil(k^0.4)` from the exceedance count.
    pub block_length: Option<usize>,
}

impl Default for MultiplierSpec {
    fn default() -> Self {
        Self {
            law: MultiplierLaw::Rademacher,
            replicates: 1000,
            block_length: None,
        }
    }
}

/// `ceil(k^0.4)`.
pub fn default_block_length(k: usize) -> usize {
    ((k as f64).powf(0.4).ceil() as usize).max(1)
}

impl MultiplierSpec {
    fn resolve_block_length(&self, n: usize, k: usize) -> Result<usize> {
        let r = self.block_length.unwrap_or_else(|| default_block_length(k)).min(n);
        if r == 0 {
            return Err(domain("block_length", 0.0, ">= 1"));
        }
        Ok(r)
    }
}

/// Block layout of the core window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blocks {
    pub r: usize,
    pub m: usize,
}

impl Blocks {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if r == 0 || r > n {
            return Err(domain("block_length", r as f64, "1 <= r <= n"));
        }
        Ok(Self { r, m: n / r })
    }

    /// Zero-based block of the 1-based index `i`.
    #[inline]
    pub fn of(&self, i: i64) -> usize {
        (((i - 1) as usize) / self.r).min(self.m - 1)
    }
}

/// One replicate given the block weights `1 + xi_j`; `None` when a weighted
/// denominator vanishes.
pub fn replicate_with_weights(
    series: &TimeSeries,
    kind: EstimatorKind,
    lag: i64,
    x: f64,
    exc: &ExceedanceSet,
    blocks: &Blocks,
    weights: &[f64],
) -> Option<f64> {
    debug_assert_eq!(weights.len(), blocks.m);
    let w = |i: i64| weights[blocks.of(i)];
    let total: f64 = exc.indices.iter().map(|&i| w(i)).sum();
    if total == 0.0 {
        return None;
    }
    let weighted_alpha = || {
        let u = exc.threshold_value;
        let log_sum: f64 = exc
            .indices
            .iter()
            .map(|&i| w(i) * (series.at(i).abs() / u).ln())
            .sum();
        (log_sum != 0.0).then(|| total / log_sum)
    };
    match kind {
        EstimatorKind::Forward => {
            let above: f64 = exc
                .indices
                .iter()
                .filter(|&&i| series.at(i + lag) / series.at(i).abs() > x)
                .map(|&i| w(i))
                .sum();
            Some((total - above) / total)
        }
        EstimatorKind::Backward => {
            let alpha = weighted_alpha()?;
            if !(alpha > 0.0) {
                return None;
            }
            let mass: f64 = exc
                .indices
                .iter()
                .filter_map(|&i| backward_term(series, i, lag, alpha).map(|t| (i, t)))
                .filter(|&(_, (_, z))| if x >= 0.0 { z > x } else { z <= x })
                .map(|(i, (tw, _))| w(i) * tw)
                .sum();
            Some(if x >= 0.0 { 1.0 - mass / total } else { mass / total })
        }
        EstimatorKind::Hill => weighted_alpha(),
    }
}

/// One multiplier bootstrap replicate; `Ok(None)` flags a degenerate draw.
#[allow(clippy::too_many_arguments)]
pub fn multiplier_replicate(
    series: &TimeSeries,
    kind: EstimatorKind,
    lag: i64,
    x: f64,
    exc: &ExceedanceSet,
    mult: &MultiplierSpec,
    rng: &mut Stream,
) -> Result<Option<f64>> {
    // validates lag and non-emptiness
    estimate(series, kind, lag, x, exc)?;
    let r = mult.resolve_block_length(series.n(), exc.count())?;
    let blocks = Blocks::new(series.n(), r)?;
    let weights: Vec<f64> = (0..blocks.m).map(|_| 1.0 + mult.law.sample(rng)).collect();
    Ok(replicate_with_weights(series, kind, lag, x, exc, &blocks, &weights))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point: EstimateRecord,
    pub replicates: Vec<f64>,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub degenerate_count: usize,
    pub block_length: usize,
}

/// Basic bootstrap interval: `point - q_{(1 +- level)/2}(replicate - point)`.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_ci(
    series: &TimeSeries,
    kind: EstimatorKind,
    lag: i64,
    x: f64,
    threshold: ThresholdSpec,
    mult: &MultiplierSpec,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(domain("level", level, "in (0, 1)"));
    }
    if mult.replicates == 0 {
        return Err(domain("replicates", 0.0, ">= 1"));
    }
    let exc = resolve_threshold(series, threshold)?;
    let point = estimate(series, kind, lag, x, &exc)?;
    let r = mult.resolve_block_length(series.n(), exc.count())?;
    let blocks = Blocks::new(series.n(), r)?;
    let draws: Vec<Option<f64>> = (0..mult.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = derive_stream(seed, &[Label::Str("bootstrap"), Label::Int(b as u64)]);
            let weights: Vec<f64> = (0..blocks.m).map(|_| 1.0 + mult.law.sample(&mut rng)).collect();
            replicate_with_weights(series, kind, lag, x, &exc, &blocks, &weights)
        })
        .collect();
    let replicates: Vec<f64> = draws.iter().flatten().copied().collect();
    let degenerate_count = mult.replicates - replicates.len();
    if replicates.is_empty() || degenerate_count as f64 > MAX_DEGENERATE_SHARE * mult.replicates as f64 {
        return Err(Error::UnreliableBootstrap {
            degenerate: degenerate_count,
            total: mult.replicates,
        });
    }
    let (lower, upper) = basic_interval(point.estimate, &replicates, level);
    Ok(BootstrapResult {
        point,
        replicates,
        level,
        lower,
        upper,
        degenerate_count,
        block_length: r,
    })
}

/// `(point - q_hi, point - q_lo)` for the differences `replicate - point`.
pub fn basic_interval(point: f64, replicates: &[f64], level: f64) -> (f64, f64) {
    let mut diffs: Vec<f64> = replicates.iter().map(|r| r - point).collect();
    diffs.sort_by(f64::total_cmp);
    let hi = quantile_sorted(&diffs, 0.5 * (1.0 + level));
    let lo = quantile_sorted(&diffs, 0.5 * (1.0 - level));
    (point - hi, point - lo)
}
