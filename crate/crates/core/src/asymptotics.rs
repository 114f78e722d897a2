//! Numerical checks of the limit theory: covariance of the limiting Gaussian
//! process, cluster moment bounds, SRE mixing diagnostics, consistency of
//! order-statistic thresholds and finite-sample normality.
//!
//! Every verdict is a pure function of the reported grid values; the rules
//! are the public `*_verdict` functions so callers can re-derive them.

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Innovation, TiltedInnovation, TiltedInnovationSpec};
use crate::error::{domain, Error, Result};
use crate::estimators::{estimate, resolve_threshold, EstimatorKind, Phi, ThresholdSpec};
use crate::models::{GarchSpec, ModelSpec, SeriesRequest, SreSpec};
use crate::rng::{derive_seed, stream, Label, Stream};
use crate::stats::{ks_one_sample, mc_mean, mean_var, normal_cdf, ols, skew_kurtosis, Estimate};
use crate::truth::{marginal_quantile_auto, sre_tail_index, QuantileMethod};

/// Log-log slope at or above which a quantity counts as bounded.
pub const BOUNDED_SLOPE: f64 = -0.1;
/// Nonzero cluster sums needed at the deepest level for a verdict.
pub const MIN_NONZERO_CLUSTERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
    Violated,
}

/// Values of a diagnostic over a probe grid with the verdict they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub quantity: String,
    pub grid: Vec<f64>,
    pub values: Vec<Estimate>,
    pub verdict: Verdict,
    /// Fitted growth exponent where the rule uses one.
    pub exponent: Option<f64>,
    pub rule: String,
}

/// The forward spectral chain driving a tail process `Y_k = |Y_0| Theta_k`.
#[derive(Debug, Clone)]
pub enum ForwardChain {
    /// `Theta_k = Theta_{k-1} (rho + c T_k)`, `T_k ~ t(nu + 1)`.
    TCopula { nu: f64, rho: f64 },
    /// Products of `(a1 eps^2 + b1)^(1/2)` started from a tilted innovation.
    Garch(GarchSpec),
    /// `Theta_k = 0` for `k >= 1`: no extremal dependence.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct TailProcessSampler {
    pub alpha: f64,
    pub chain: ForwardChain,
    /// Truncation lag `K`.
    pub truncation: usize,
}

enum ChainSampler {
    TCopula { rho: f64, c: f64, t: StudentT<f64> },
    Garch { spec: GarchSpec, tilted: TiltedInnovation, eps: Innovation },
    Degenerate,
}

impl TailProcessSampler {
    pub fn tcopula(nu: f64, rho: f64, truncation: usize) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(domain("rho", rho, "in (-1, 1)"));
        }
        Ok(Self {
            alpha: nu,
            chain: ForwardChain::TCopula { nu, rho },
            truncation,
        })
    }

    pub fn garch(spec: GarchSpec, alpha: f64, truncation: usize) -> Self {
        Self {
            alpha,
            chain: ForwardChain::Garch(spec),
            truncation,
        }
    }

    pub fn degenerate(alpha: f64) -> Self {
        Self {
            alpha,
            chain: ForwardChain::Degenerate,
            truncation: 0,
        }
    }

    fn prepare(&self) -> Result<ChainSampler> {
        if !(self.alpha > 0.0) {
            return Err(domain("alpha", self.alpha, "> 0"));
        }
        Ok(match &self.chain {
            ForwardChain::TCopula { nu, rho } => ChainSampler::TCopula {
                rho: *rho,
                c: ((1.0 - rho * rho) / (nu + 1.0)).sqrt(),
                t: StudentT::new(nu + 1.0).map_err(|_| domain("nu", *nu, "> 0"))?,
            },
            ForwardChain::Garch(spec) => ChainSampler::Garch {
                spec: *spec,
                tilted: TiltedInnovationSpec::new(spec.innovation, self.alpha)?.sampler()?,
                eps: spec.innovation.sampler()?,
            },
            ForwardChain::Degenerate => ChainSampler::Degenerate,
        })
    }

    /// Fills `theta` with `Theta_0, ..., Theta_{len-1}`.
    fn fill(sampler: &ChainSampler, theta: &mut [f64], rng: &mut Stream) {
        match sampler {
            ChainSampler::TCopula { rho, c, t } => {
                theta[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                for k in 1..theta.len() {
                    theta[k] = theta[k - 1] * (rho + c * t.sample(rng));
                }
            }
            ChainSampler::Garch { spec, tilted, eps } => {
                let e0: f64 = tilted.sample(rng);
                theta[0] = e0.signum();
                let mut prev = e0;
                let mut scale2 = 1.0 / (e0 * e0);
                for th in &mut theta[1..] {
                    scale2 *= spec.alpha1 * prev * prev + spec.beta1;
                    prev = eps.sample(rng);
                    *th = prev * scale2.sqrt();
                }
            }
            ChainSampler::Degenerate => {
                theta[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                theta[1..].fill(0.0);
            }
        }
    }

    /// One path `Theta_0, ..., Theta_len-1`.
    pub fn sample_path(&self, len: usize, rng: &mut Stream) -> Result<Vec<f64>> {
        let sampler = self.prepare()?;
        let mut theta = vec![0.0; len.max(1)];
        Self::fill(&sampler, &mut theta, rng);
        Ok(theta)
    }
}

/// A functional reduced to `gate(Theta) * h(|Y_0| a)` with `h` an indicator
/// of `> 1` or `log+`.
#[derive(Clone, Copy)]
enum Functional {
    Indicator { s: f64 },
    LogExcess { s: f64 },
    Forward { t: usize, x: f64, s: f64 },
}

impl Functional {
    fn from_phi(phi: &Phi) -> Result<Self> {
        match *phi {
            Phi::Phi0 { s } => Ok(Functional::LogExcess { s }),
            Phi::Phi1 { s } => Ok(Functional::Indicator { s }),
            Phi::Phi2 { t, x, s } if t > 0 => Ok(Functional::Forward { t: t as usize, x, s }),
            Phi::Phi2 { t, .. } => Err(Error::UnsupportedFunctional(format!(
                "phi2 at lag {t} needs the backward tail process"
            ))),
            Phi::Phi3 { .. } => Err(Error::UnsupportedFunctional(
                "phi3 covariances need the backward tail process".into(),
            )),
        }
    }

    fn reach(&self) -> usize {
        match self {
            Functional::Forward { t, .. } => *t,
            _ => 0,
        }
    }

    /// `(a, is_log)` at coordinate `k`, or `None` when the functional vanishes.
    #[inline]
    fn factor(&self, theta: &[f64], k: usize) -> Option<(f64, bool)> {
        let a = theta[k].abs();
        if a == 0.0 {
            return None;
        }
        match *self {
            Functional::Indicator { s } => Some((a / s, false)),
            Functional::LogExcess { s } => Some((a / s, true)),
            Functional::Forward { t, x, s } => (theta[k + t] / a > x).then_some((a / s, false)),
        }
    }
}

/// `E[h1(Y a) h2(Y b)]` for `Y` standard Pareto(alpha), in closed form.
#[inline]
fn pareto_pair(alpha: f64, (a, log_a): (f64, bool), (b, log_b): (f64, bool)) -> f64 {
    let c = 1f64.max(1.0 / a).max(1.0 / b);
    let p = c.powf(-alpha);
    let la = (a * c).ln();
    let lb = (b * c).ln();
    match (log_a, log_b) {
        (false, false) => p,
        (true, false) => p * (la + 1.0 / alpha),
        (false, true) => p * (lb + 1.0 / alpha),
        (true, true) => p * (la * lb + (la + lb) / alpha + 2.0 / (alpha * alpha)),
    }
}

/// Covariance `sum_k E[psi1(Y_0-bar) psi2(Y_k-bar)]` of the limiting process,
/// truncated at `|k| <= K`.
///
/// Negative lags enter through `E[psi1(Y_k-bar) psi2(Y_0-bar)]` and the
/// Pareto coordinate is integrated exactly, so only the chain is simulated.
pub fn limit_covariance_mc(
    sampler: &TailProcessSampler,
    psi1: &Phi,
    psi2: &Phi,
    n_mc: usize,
    seed: u64,
) -> Result<Estimate> {
    let f1 = Functional::from_phi(psi1)?;
    let f2 = Functional::from_phi(psi2)?;
    let chain = sampler.prepare()?;
    let kmax = sampler.truncation;
    let len = kmax + f1.reach().max(f2.reach()) + 1;
    let alpha = sampler.alpha;
    if n_mc < 2 {
        return Err(domain("n_mc", n_mc as f64, ">= 2"));
    }
    Ok(mc_mean(n_mc, seed, |rng| {
        let mut theta = vec![0.0; len];
        TailProcessSampler::fill(&chain, &mut theta, rng);
        let pair = |j: usize, l: usize| match (f1.factor(&theta, j), f2.factor(&theta, l)) {
            (Some(a), Some(b)) => pareto_pair(alpha, a, b),
            _ => 0.0,
        };
        let mut total = pair(0, 0);
        for k in 1..=kmax {
            total += pair(0, k) + pair(k, 0);
        }
        total
    }))
}

/// Bounded when the log-log slope is at least [`BOUNDED_SLOPE`].
pub fn slope_verdict(slope: f64) -> Verdict {
    if slope >= BOUNDED_SLOPE {
        Verdict::Bounded
    } else {
        Verdict::Growing
    }
}

fn loglog_slope(grid: &[f64], values: &[Estimate]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(values)
        .filter(|(g, v)| **g > 0.0 && v.value > 0.0)
        .map(|(g, v)| (g.ln(), v.value.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(ols(&x, &y).0)
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("levels must be non-empty and strictly increasing".into()));
    }
    if let Some(&l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(domain("level", l, "in (0, 1)"));
    }
    Ok(())
}

/// Empirical `beta`-quantile of `|X|` from a long path.
fn empirical_abs_quantile(abs: &mut [f64], beta: f64) -> f64 {
    let rank = ((abs.len() as f64 * beta).floor() as usize).clamp(1, abs.len()) - 1;
    let (_, q, _) = abs.select_nth_unstable_by(rank, f64::total_cmp);
    *q
}

/// `E[(sum_{i<=r} 1{|X_i| > (1 - eps) u})^3] / (r v)` at each level `beta`,
/// `v = 1 - beta`, from one path of length `n_mc` cut into blocks of `r`.
///
/// Grid values are `v`; verdict per [`cluster_verdict`].
pub fn cluster_moment_check(
    model: &ModelSpec,
    levels: &[f64],
    r: usize,
    epsilon: f64,
    n_mc: usize,
    seed: u64,
) -> Result<ConditionReport> {
    check_levels(levels)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(domain("epsilon", epsilon, "in [0, 1)"));
    }
    if r == 0 || n_mc < 2 * r {
        return Err(Error::Precondition(format!("need r >= 1 and at least two blocks (r = {r}, n = {n_mc})")));
    }
    let ts = model.generate_seeded(&SeriesRequest::new(n_mc, 0), seed)?;
    let x = ts.core();
    let mut abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mut values = Vec::with_capacity(levels.len());
    let mut nonzero_deepest = 0;
    for &beta in levels {
        let u = empirical_abs_quantile(&mut abs, beta);
        let v = 1.0 - beta;
        let cut = (1.0 - epsilon) * u;
        let cubes: Vec<f64> = x
            .chunks_exact(r)
            .map(|b| (b.iter().filter(|v| v.abs() > cut).count() as f64).powi(3))
            .collect();
        nonzero_deepest = cubes.iter().filter(|c| **c > 0.0).count();
        let e = Estimate::from_samples(&cubes);
        values.push(Estimate {
            value: e.value / (r as f64 * v),
            std_error: e.std_error / (r as f64 * v),
        });
    }
    let grid: Vec<f64> = levels.iter().map(|b| 1.0 - b).collect();
    let exponent = loglog_slope(&grid, &values);
    Ok(ConditionReport {
        quantity: format!("E[S_r^3] / (r v), r = {r}, epsilon = {epsilon}"),
        verdict: cluster_verdict(exponent, nonzero_deepest),
        grid,
        values,
        exponent,
        rule: format!(
            "inconclusive if fewer than {MIN_NONZERO_CLUSTERS} nonzero block sums at the deepest level; \
             otherwise bounded iff the log-log slope against v is >= {BOUNDED_SLOPE}"
        ),
    })
}

pub fn cluster_verdict(exponent: Option<f64>, nonzero_deepest: usize) -> Verdict {
    match exponent {
        _ if nonzero_deepest < MIN_NONZERO_CLUSTERS => Verdict::Inconclusive,
        Some(s) => slope_verdict(s),
        None => Verdict::Inconclusive,
    }
}

/// Configuration for [`sre_condition_diagnostics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SreProbe {
    /// Exponent `xi` in `rho = E[C^xi]`.
    pub xi: f64,
    /// Largest lag `r` in the `(j, k)` grid and the power sum.
    pub r: usize,
    pub epsilon: f64,
    /// `delta` in the power-sum exponents.
    pub delta: f64,
    pub n_mc: usize,
    pub seed: u64,
}

impl Default for SreProbe {
    fn default() -> Self {
        Self {
            xi: 0.5,
            r: 10,
            epsilon: 0.1,
            delta: 0.5,
            n_mc: 10_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SreConditionReport {
    pub rho: Estimate,
    pub alpha: f64,
    /// `(j, k, s~(j, k))` at the deepest level, `1 <= j <= k <= r`.
    pub s_tilde: Vec<(usize, usize, Estimate)>,
    /// Diagonal `s~(k, k)` against `k` with its geometric decay fit.
    pub decay: ConditionReport,
    /// Fitted per-lag decay factor of the diagonal.
    pub decay_rate: f64,
    /// Power sum against `v` over the levels.
    pub power_sum: ConditionReport,
    pub p: f64,
    pub p_tilde: f64,
    pub verdict: Verdict,
}

/// `p` at the midpoint of `(alpha (1 + delta) / (1 + 2 delta), alpha)` and `p~ = (alpha - p) / 2`.
pub fn power_sum_exponents(alpha: f64, delta: f64) -> (f64, f64) {
    let lo = alpha * (1.0 + delta) / (1.0 + 2.0 * delta);
    let p = 0.5 * (lo + alpha);
    (p, 0.5 * (alpha - p))
}

/// Mixing diagnostics for an SRE: `rho = E[C^xi]`, the cross-lag conditional
/// probabilities `s~(j, k)` with a geometric decay fit, and the power sum
/// `sum_k (E[(X_k/u)^p (X_0/u)^p~ 1{X_k > u} | X_0 > u])^(1/(1+delta))`.
pub fn sre_condition_diagnostics(spec: &SreSpec, levels: &[f64], probe: &SreProbe) -> Result<SreConditionReport> {
    check_levels(levels)?;
    let alpha = sre_tail_index(spec, probe.n_mc.min(1_000_000), 1e-10, probe.seed)?.alpha;
    if !(probe.xi > 0.0 && probe.xi < alpha) {
        return Err(domain("xi", probe.xi, "in (0, alpha)"));
    }
    if probe.r == 0 {
        return Err(domain("r", 0.0, ">= 1"));
    }
    let pairs = spec.sampler();
    let rho = {
        let mut rng = stream(derive_seed(probe.seed, &[Label::Str("rho")]));
        let draws: Vec<f64> = (0..probe.n_mc.min(10_000_000))
            .map(|_| pairs.sample_c(&mut rng).powf(probe.xi))
            .collect();
        Estimate::from_samples(&draws)
    };

    let r = probe.r;
    let model = ModelSpec::Sre(spec.clone());
    let ts = model.generate_seeded(&SeriesRequest::new(probe.n_mc, r), derive_seed(probe.seed, &[Label::Str("path")]))?;
    let mut abs: Vec<f64> = ts.core().iter().map(|v| v.abs()).collect();
    let (p, p_tilde) = power_sum_exponents(alpha, probe.delta);
    let n = ts.n() as i64 - r as i64;

    let mut power_values = Vec::with_capacity(levels.len());
    let mut s_tilde = Vec::new();
    for (li, &beta) in levels.iter().enumerate() {
        let u = empirical_abs_quantile(&mut abs, beta);
        let cut = (1.0 - probe.epsilon) * u;
        let base: Vec<i64> = (1..=n).filter(|&i| ts.at(i).abs() > u).collect();
        // power sum, SE by batching the conditioning events
        let terms: Vec<Vec<f64>> = base
            .iter()
            .map(|&i| {
                let z0 = (ts.at(i).abs() / u).powf(p_tilde);
                (1..=r as i64)
                    .map(|k| {
                        let zk = ts.at(i + k).abs() / u;
                        if zk > 1.0 { zk.powf(p) * z0 } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        power_values.push(power_sum_estimate(&terms, r, probe.delta)?);

        if li + 1 == levels.len() {
            let cond: Vec<i64> = (1..=n).filter(|&i| ts.at(i).abs() > cut).collect();
            if cond.is_empty() {
                return Err(Error::NoConditioningEvents(format!("no |X_0| above {cut}")));
            }
            for j in 1..=r {
                for k in j..=r {
                    let hits = cond
                        .iter()
                        .filter(|&&i| ts.at(i + j as i64).abs().min(ts.at(i + k as i64).abs()) > cut)
                        .count();
                    s_tilde.push((j, k, Estimate::proportion(hits as u64, cond.len() as u64)));
                }
            }
        }
    }

    let diag: Vec<Estimate> = (1..=r)
        .map(|k| s_tilde.iter().find(|(a, b, _)| *a == k && *b == k).expect("grid").2)
        .collect();
    let ks: Vec<f64> = (1..=r).map(|k| k as f64).collect();
    let fit: Vec<(f64, f64)> = ks
        .iter()
        .zip(&diag)
        .filter(|(_, e)| e.value > 0.0)
        .map(|(k, e)| (*k, e.value.ln()))
        .collect();
    let decay_rate = if fit.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
        ols(&x, &y).0.exp()
    } else {
        f64::NAN
    };
    let decay = ConditionReport {
        quantity: "s~(k, k) = P(X_k > (1 - eps) u | X_0 > (1 - eps) u)".into(),
        grid: ks,
        values: diag,
        verdict: decay_verdict(decay_rate, rho.value),
        exponent: Some(decay_rate),
        rule: "bounded iff the fitted geometric decay factor lies in [0.7 rho, 1.3 rho]".into(),
    };

    let grid: Vec<f64> = levels.iter().map(|b| 1.0 - b).collect();
    let exponent = loglog_slope(&grid, &power_values);
    let power_sum = ConditionReport {
        quantity: format!("power sum, p = {p:.4}, p~ = {p_tilde:.4}, delta = {}", probe.delta),
        verdict: exponent.map_or(Verdict::Inconclusive, slope_verdict),
        grid,
        values: power_values,
        exponent,
        rule: format!("bounded iff the log-log slope against v is >= {BOUNDED_SLOPE}"),
    };
    let verdict = if rho.value >= 1.0 { Verdict::Violated } else { power_sum.verdict };
    Ok(SreConditionReport {
        rho,
        alpha,
        s_tilde,
        decay,
        decay_rate,
        power_sum,
        p,
        p_tilde,
        verdict,
    })
}

pub fn decay_verdict(rate: f64, rho: f64) -> Verdict {
    if !rate.is_finite() {
        Verdict::Inconclusive
    } else if rate >= 0.7 * rho && rate <= 1.3 * rho {
        Verdict::Bounded
    } else {
        Verdict::Growing
    }
}

/// `sum_k mean_k^(1/(1+delta))` with an SE from 20 batches of events.
fn power_sum_estimate(terms: &[Vec<f64>], r: usize, delta: f64) -> Result<Estimate> {
    if terms.is_empty() {
        return Err(Error::NoConditioningEvents("no exceedances for the power sum".into()));
    }
    let sum_of = |rows: &[Vec<f64>]| -> f64 {
        (0..r)
            .map(|k| {
                let m = rows.iter().map(|t| t[k]).sum::<f64>() / rows.len() as f64;
                m.powf(1.0 / (1.0 + delta))
            })
            .sum()
    };
    let value = sum_of(terms);
    let batches = 20.min(terms.len());
    let size = terms.len() / batches;
    let parts: Vec<f64> = terms.chunks_exact(size).take(batches).map(sum_of).collect();
    let (_, v) = mean_var(&parts);
    Ok(Estimate {
        value,
        std_error: (v / parts.len() as f64).sqrt(),
    })
}

/// Sequence `k(n)` for [`os_consistency_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum KRule {
    /// `k = floor(n^exponent)`.
    Power { exponent: f64 },
    Fixed { k: usize },
}

impl KRule {
    pub fn k(&self, n: usize) -> usize {
        match *self {
            KRule::Power { exponent } => (n as f64).powf(exponent).floor() as usize,
            KRule::Fixed { k } => k,
        }
    }
}

/// Ratio `X_{n-k:n} / F^<-(1 - k/n)` over replications at each `n`.
///
/// Grid values are `n`; verdict per [`os_verdict`].
pub fn os_consistency_check(
    model: &ModelSpec,
    n_grid: &[usize],
    rule: KRule,
    reps: usize,
    quantile: &QuantileMethod,
    seed: u64,
) -> Result<ConditionReport> {
    if n_grid.is_empty() || reps < 2 {
        return Err(Error::Precondition("need a non-empty n grid and reps >= 2".into()));
    }
    let ks: Vec<usize> = n_grid.iter().map(|&n| rule.k(n)).collect();
    for (&n, &k) in n_grid.iter().zip(&ks) {
        if k == 0 || k >= n || 2 * k >= n {
            return Err(Error::Precondition(format!(
                "k = {k} at n = {n} is not intermediate (need 1 <= k and k/n < 0.5)"
            )));
        }
    }
    for i in 1..n_grid.len() {
        let (n0, n1, k0, k1) = (n_grid[i - 1], n_grid[i], ks[i - 1], ks[i]);
        if n1 <= n0 || k1 < k0 || (k1 as f64 / n1 as f64) > (k0 as f64 / n0 as f64) {
            return Err(Error::Precondition(
                "grid must have increasing n, nondecreasing k and nonincreasing k/n".into(),
            ));
        }
    }
    let mut values = Vec::with_capacity(n_grid.len());
    for (gi, (&n, &k)) in n_grid.iter().zip(&ks).enumerate() {
        let target = marginal_quantile_auto(model, 1.0 - k as f64 / n as f64, quantile)?.value;
        let ratios = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let s = derive_seed(seed, &[Label::Str("os"), Label::Int(gi as u64), Label::Int(rep as u64)]);
                let ts = model.generate_seeded(&SeriesRequest::new(n, 0), s)?;
                let exc = resolve_threshold(&ts, ThresholdSpec::OrderStatistic { k })?;
                Ok(exc.threshold_value / target)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (m, v) = mean_var(&ratios);
        // value: mean ratio; std_error slot carries the across-rep sd
        values.push(Estimate {
            value: m,
            std_error: v.sqrt(),
        });
    }
    Ok(ConditionReport {
        quantity: "X_{n-k:n} / F^<-(1 - k/n): mean (value) and sd (std_error) over reps".into(),
        grid: n_grid.iter().map(|&n| n as f64).collect(),
        verdict: os_verdict(&values, reps),
        values,
        exponent: None,
        rule: "bounded iff the sd strictly decreases along the grid and the last mean is within \
               max(0.02, 3 sd / sqrt(reps)) of 1"
            .into(),
    })
}

pub fn os_verdict(values: &[Estimate], reps: usize) -> Verdict {
    let decreasing = values.windows(2).all(|w| w[1].std_error < w[0].std_error);
    let last = values.last().expect("non-empty grid");
    let tol = 0.02f64.max(3.0 * last.std_error / (reps as f64).sqrt());
    if decreasing && (last.value - 1.0).abs() <= tol {
        Verdict::Bounded
    } else {
        Verdict::Growing
    }
}

/// Distribution of `sqrt(scale) (estimate - target)` over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// KS distance to the normal law with the sample mean and sd.
    pub ks_to_normal: f64,
    /// Replicates without exceedances.
    pub missing: usize,
}

impl NormalityReport {
    pub fn from_samples(samples: Vec<f64>, missing: usize) -> Self {
        let (mean, var) = mean_var(&samples);
        let sd = var.sqrt();
        let (skewness, excess_kurtosis) = skew_kurtosis(&samples);
        let ks_to_normal = ks_one_sample(&samples, |x| normal_cdf((x - mean) / sd));
        Self {
            samples,
            mean,
            sd,
            skewness,
            excess_kurtosis,
            ks_to_normal,
            missing,
        }
    }
}

/// What [`clt_normality_check`] estimates on each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltQuery {
    pub kind: EstimatorKind,
    pub lag: i64,
    pub x: f64,
    pub threshold: ThresholdSpec,
    /// Pre-asymptotic centre of the estimator.
    pub target: f64,
}

/// `sqrt(n v)` normalization: `k` for order statistics, `n (1 - beta)` for
/// quantile levels, the mean exceedance count for fixed thresholds.
pub fn clt_normality_check(
    model: &ModelSpec,
    n: usize,
    query: &CltQuery,
    reps: usize,
    seed: u64,
) -> Result<NormalityReport> {
    let max_lag = query.lag.unsigned_abs() as usize;
    let req = SeriesRequest::new(n, max_lag.max(1));
    let draws = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let s = derive_seed(seed, &[Label::Str("clt"), Label::Int(rep as u64)]);
            let ts = model.generate_seeded(&req, s)?;
            let exc = resolve_threshold(&ts, query.threshold)?;
            if exc.is_empty() {
                return Ok(None);
            }
            let lag = if query.kind == EstimatorKind::Hill { 1 } else { query.lag };
            Ok(Some((estimate(&ts, query.kind, lag, query.x, &exc)?.estimate, exc.count())))
        })
        .collect::<Result<Vec<Option<(f64, usize)>>>>()?;
    let present: Vec<(f64, usize)> = draws.iter().flatten().copied().collect();
    if present.len() < 2 {
        return Err(Error::Precondition("fewer than two replicates with exceedances".into()));
    }
    let scale = match query.threshold {
        ThresholdSpec::OrderStatistic { k } => k as f64,
        ThresholdSpec::QuantileLevel { beta, .. } => n as f64 * (1.0 - beta),
        ThresholdSpec::Deterministic { .. } => {
            present.iter().map(|p| p.1 as f64).sum::<f64>() / present.len() as f64
        }
    };
    let samples = present
        .iter()
        .map(|(e, _)| scale.sqrt() * (e - query.target))
        .collect();
    Ok(NormalityReport::from_samples(samples, reps - present.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CLaw, DLaw};
    use crate::truth::{spectral_survival_tcopula, SpectralQuery};

    const PHI1: Phi = Phi::Phi1 { s: 1.0 };
    const PHI0: Phi = Phi::Phi0 { s: 1.0 };

    #[test]
    fn degenerate_chain_covariances_are_exact() {
        for alpha in [1.0, 2.6, 4.0] {
            let sampler = TailProcessSampler::degenerate(alpha);
            let v = limit_covariance_mc(&sampler, &PHI1, &PHI1, 1000, 0).unwrap();
            assert_eq!(v.value, 1.0);
            let c = limit_covariance_mc(&sampler, &PHI1, &PHI0, 1000, 0).unwrap();
            assert!((c.value - 1.0 / alpha).abs() < 1e-12);
            let v0 = limit_covariance_mc(&sampler, &PHI0, &PHI0, 1000, 0).unwrap();
            assert!((v0.value - 2.0 / (alpha * alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn pareto_pair_matches_quadrature() {
        let alpha = 2.5;
        for (a, b) in [(1.0f64, 1.0f64), (0.4, 2.0), (3.0, 0.2), (0.7, 0.9)] {
            for (la, lb) in [(false, false), (true, false), (false, true), (true, true)] {
                let h = |y: f64, c: f64, log: bool| {
                    if y * c > 1.0 { if log { (y * c).ln() } else { 1.0 } } else { 0.0 }
                };
                // substitute y = exp(s), density alpha e^{-alpha s}
                // start at the jump so the midpoint rule sees a smooth integrand
                let s0 = 0f64.max(-a.ln()).max(-b.ln());
                let n = 200_000;
                let dx = 40.0 / n as f64;
                let mut q = 0.0;
                for i in 0..n {
                    let s = s0 + (i as f64 + 0.5) * dx;
                    let y = s.exp();
                    q += alpha * (-alpha * s).exp() * h(y, a, la) * h(y, b, lb) * dx;
                }
                let exact = pareto_pair(alpha, (a, la), (b, lb));
                assert!((q - exact).abs() < 1e-5, "a {a} b {b} {la} {lb}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn phi1_variance_series_for_tcopula() {
        // var Z(phi_{1,1}) = 1 + 2 sum_k E[min(1, |Theta_k|^alpha)]
        let sampler = TailProcessSampler::tcopula(4.0, 0.25, 50).unwrap();
        let v = limit_covariance_mc(&sampler, &PHI1, &PHI1, 200_000, 1).unwrap();
        let direct = mc_mean(200_000, 2, |rng| {
            let th = sampler.sample_path(51, rng).unwrap();
            1.0 + 2.0 * th[1..].iter().map(|t| t.abs().powf(4.0).min(1.0)).sum::<f64>()
        });
        assert!(v.z_distance(&direct) < 4.0, "{v:?} vs {direct:?}");
        assert!(v.value > 1.0);
    }

    #[test]
    fn phi2_at_lag_zero_coordinate_matches_spectral_law() {
        // E[phi2(Y_0-bar)] = P{Theta_1 > x}: the k = 0 term with psi1 = phi1
        let sampler = TailProcessSampler { truncation: 0, ..TailProcessSampler::tcopula(4.0, 0.5, 0).unwrap() };
        let x = 0.5;
        let c = limit_covariance_mc(&sampler, &PHI1, &Phi::Phi2 { t: 1, x, s: 1.0 }, 1_000_000, 3).unwrap();
        let exact = spectral_survival_tcopula(4.0, 0.5, SpectralQuery::new(1, x).unwrap(), 0, 0).unwrap();
        assert!((c.value - exact.value).abs() < 3.0 * c.std_error, "{c:?} vs {exact:?}");
    }

    #[test]
    fn backward_functionals_are_rejected() {
        let sampler = TailProcessSampler::degenerate(2.0);
        let phi3 = Phi::Phi3 { t: 1, y: 0.5, s: 1.0, alpha: 2.0 };
        assert!(matches!(limit_covariance_mc(&sampler, &phi3, &PHI1, 10, 0), Err(Error::UnsupportedFunctional(_))));
        let neg = Phi::Phi2 { t: -1, x: 0.5, s: 1.0 };
        assert!(matches!(limit_covariance_mc(&sampler, &PHI1, &neg, 10, 0), Err(Error::UnsupportedFunctional(_))));
    }

    #[test]
    fn covariance_is_symmetric_and_truncation_stable() {
        let s50 = TailProcessSampler::tcopula(4.0, 0.5, 50).unwrap();
        let s100 = TailProcessSampler::tcopula(4.0, 0.5, 100).unwrap();
        let phi2 = Phi::Phi2 { t: 1, x: 0.5, s: 1.0 };
        let a = limit_covariance_mc(&s50, &PHI0, &phi2, 200_000, 4).unwrap();
        let b = limit_covariance_mc(&s50, &phi2, &PHI0, 200_000, 5).unwrap();
        assert!(a.z_distance(&b) < 2.0, "{a:?} {b:?}");
        let c = limit_covariance_mc(&s100, &PHI0, &phi2, 200_000, 4).unwrap();
        assert!((a.value - c.value).abs() < 3.0 * a.std_error);
    }

    #[test]
    fn cluster_ratio_is_one_for_iid() {
        let model = ModelSpec::IidPareto { alpha: 2.0 };
        let rep = cluster_moment_check(&model, &[0.99, 0.999, 0.9999], 10, 0.0, 4_000_000, 7).unwrap();
        let deep = rep.values.last().unwrap();
        // finite-level expansion: 1 + 3 (r - 1) v + (r - 1)(r - 2) v^2
        let v = 1e-4;
        let expect = 1.0 + 27.0 * v + 72.0 * v * v;
        assert!((deep.value - expect).abs() < 3.0 * deep.std_error, "{deep:?}");
        assert_eq!(rep.verdict, Verdict::Bounded);
        assert_eq!(rep.verdict, cluster_verdict(rep.exponent, 400));
    }

    #[test]
    fn cluster_ratio_single_block_is_margin_inflation() {
        let model = ModelSpec::preset("ngarch").unwrap();
        let rep = cluster_moment_check(&model, &[0.99, 0.999], 1, 0.1, 4_000_000, 8).unwrap();
        let expect = 0.9f64.powf(-4.02);
        let deep = rep.values.last().unwrap();
        assert!((deep.value / expect - 1.0).abs() < 0.1, "{deep:?} vs {expect}");
    }

    #[test]
    fn cluster_check_needs_events() {
        let model = ModelSpec::IidPareto { alpha: 2.0 };
        let rep = cluster_moment_check(&model, &[0.9, 0.99999], 10, 0.0, 20_000, 9).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert!(cluster_moment_check(&model, &[0.99, 0.9], 10, 0.0, 20_000, 9).is_err());
    }

    #[test]
    fn sre_rho_and_decay() {
        let spec = SreSpec::lognormal(-0.5, 1.0).unwrap();
        let probe = SreProbe { n_mc: 4_000_000, ..Default::default() };
        let rep = sre_condition_diagnostics(&spec, &[0.99, 0.995, 0.999], &probe).unwrap();
        let exact = (-0.125f64).exp();
        assert!((rep.rho.value - exact).abs() < 3.0 * rep.rho.std_error, "{:?}", rep.rho);
        assert!(rep.decay_rate >= 0.7 * rep.rho.value && rep.decay_rate <= 1.3 * rep.rho.value, "{}", rep.decay_rate);
        assert_eq!(rep.decay.verdict, Verdict::Bounded);
        assert_eq!(rep.s_tilde.len(), 55);
        let (p, pt) = (rep.p, rep.p_tilde);
        assert!(p > 1.5 / 2.0 && p < 1.0 && (pt - (1.0 - p) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sre_discrete_multiplier() {
        // 0.1 * 2^alpha = 1, rho = E[C^(1/2)] = 0.1 sqrt(2)
        let spec = SreSpec::new(
            CLaw::Discrete { values: vec![0.0, 2.0], weights: vec![0.9, 0.1] },
            DLaw::Exponential { mean: 1.0 },
        )
        .unwrap();
        let probe = SreProbe { n_mc: 2_000_000, r: 3, ..Default::default() };
        let rep = sre_condition_diagnostics(&spec, &[0.99, 0.995], &probe).unwrap();
        assert!((rep.alpha - 10f64.ln() / 2f64.ln()).abs() < 1e-8);
        assert!((rep.rho.value - 0.1 * 2f64.sqrt()).abs() < 3.0 * rep.rho.std_error, "{:?}", rep.rho);
        assert_ne!(rep.verdict, Verdict::Violated);
        assert_eq!(rep.s_tilde.len(), 6);
        assert!(sre_condition_diagnostics(&spec, &[0.99], &SreProbe { xi: 5.0, ..probe }).is_err());
    }

    #[test]
    fn os_ratio_concentrates_for_pareto() {
        let model = ModelSpec::IidPareto { alpha: 1.0 };
        let rep = os_consistency_check(&model, &[100_000], KRule::Fixed { k: 1000 }, 100, &QuantileMethod::Analytic, 10)
            .unwrap();
        assert!((0.97..=1.03).contains(&rep.values[0].value), "{:?}", rep.values);
        assert!(os_consistency_check(&model, &[2000], KRule::Fixed { k: 1999 }, 10, &QuantileMethod::Analytic, 0).is_err());
        assert!(os_consistency_check(&model, &[8000, 2000], KRule::Fixed { k: 10 }, 10, &QuantileMethod::Analytic, 0).is_err());
    }

    #[test]
    fn os_verdict_rule() {
        let e = |value: f64, std_error: f64| Estimate { value, std_error };
        assert_eq!(os_verdict(&[e(1.01, 0.05), e(1.005, 0.02)], 100), Verdict::Bounded);
        assert_eq!(os_verdict(&[e(1.01, 0.02), e(1.005, 0.05)], 100), Verdict::Growing);
        assert_eq!(os_verdict(&[e(1.1, 0.05), e(1.05, 0.02)], 100), Verdict::Growing);
    }

    #[test]
    fn hill_clt_on_pareto() {
        let model = ModelSpec::IidPareto { alpha: 4.0 };
        let q = CltQuery {
            kind: EstimatorKind::Hill,
            lag: 0,
            x: 0.0,
            threshold: ThresholdSpec::OrderStatistic { k: 400 },
            target: 4.0,
        };
        let rep = clt_normality_check(&model, 20_000, &q, 1000, 11).unwrap();
        assert!((rep.sd * rep.sd / 16.0 - 1.0).abs() < 0.25, "{}", rep.sd);
        assert!(rep.ks_to_normal < 0.05);
        assert_eq!(rep.samples.len(), 1000);
    }
}
