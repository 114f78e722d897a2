//! Forward, backward and Hill-type estimators over deterministic or
//! order-statistic thresholds, and the tail array sums behind them.
//!
//! Real-valued series enter through absolute values: exceedances are
//! `|X_i| > u`, forward ratios are `X_{i+t} / |X_i|`, backward weights are
//! `|X_{i-t} / X_i|^alpha`. All inequalities are strict where the estimator
//! displays are.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::models::{ModelSpec, TimeSeries};
use crate::truth::{marginal_quantile_auto, QuantileMethod};

/// Default margin `epsilon` in `X_{n,i} = u^-1 (...) 1{|X_i| > (1 - epsilon) u}`.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// How the exceedance threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdSpec {
    Deterministic { u: f64 },
    /// The `(n - k)`-th ascending order statistic of `|X_1|, ..., |X_n|`.
    OrderStatistic { k: usize },
    /// `F^<-(beta)` of `|X_0|`, resolved ahead of time.
    QuantileLevel { beta: f64, value: f64 },
}

impl ThresholdSpec {
    /// Resolves the theoretical quantile at `beta` for `model`.
    pub fn quantile_level(model: &ModelSpec, beta: f64, fallback: &QuantileMethod) -> Result<Self> {
        let value = marginal_quantile_auto(model, beta, fallback)?.value;
        Ok(ThresholdSpec::QuantileLevel { beta, value })
    }
}

/// Indices `i` in `1..=n` with `|X_i|` strictly above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceSet {
    pub spec: ThresholdSpec,
    pub threshold_value: f64,
    pub indices: Vec<i64>,
}

impl ExceedanceSet {
    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::NoExceedances {
                threshold: self.threshold_value,
            });
        }
        Ok(())
    }
}

pub fn resolve_threshold(series: &TimeSeries, spec: ThresholdSpec) -> Result<ExceedanceSet> {
    let n = series.n();
    let threshold_value = match spec {
        ThresholdSpec::Deterministic { u } | ThresholdSpec::QuantileLevel { value: u, .. } => {
            if !(u.is_finite() && u > 0.0) {
                return Err(domain("u", u, "finite and > 0"));
            }
            u
        }
        ThresholdSpec::OrderStatistic { k } => {
            if k == 0 || k >= n {
                return Err(domain("k", k as f64, "1 <= k < n"));
            }
            let mut abs: Vec<f64> = series.core().iter().map(|v| v.abs()).collect();
            let (_, u, _) = abs.select_nth_unstable_by(n - k - 1, f64::total_cmp);
            *u
        }
    };
    let indices = series
        .core()
        .iter()
        .zip(1i64..)
        .filter(|(v, _)| v.abs() > threshold_value)
        .map(|(_, i)| i)
        .collect();
    Ok(ExceedanceSet {
        spec,
        threshold_value,
        indices,
    })
}

fn check_lag(series: &TimeSeries, lag: i64) -> Result<()> {
    if lag == 0 {
        return Err(Error::UnsupportedLag(0));
    }
    if lag.unsigned_abs() as usize > series.max_lag() {
        return Err(Error::LagOutOfRange {
            lag,
            needed: lag.unsigned_abs() as usize,
            max_lag: series.max_lag(),
        });
    }
    Ok(())
}

/// `alpha-hat = count / sum log(|X_i| / u)` over the exceedances.
pub fn hill_alpha(series: &TimeSeries, exc: &ExceedanceSet) -> Result<f64> {
    exc.require_nonempty()?;
    let u = exc.threshold_value;
    let log_sum: f64 = exc.indices.iter().map(|&i| (series.at(i).abs() / u).ln()).sum();
    Ok(exc.count() as f64 / log_sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Forward,
    Backward,
    Hill,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Forward => "forward",
            EstimatorKind::Backward => "backward",
            EstimatorKind::Hill => "hill",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(EstimatorKind::Forward),
            "backward" => Ok(EstimatorKind::Backward),
            "hill" => Ok(EstimatorKind::Hill),
            other => Err(Error::Config(format!("unknown estimator kind {other:?}"))),
        }
    }
}

/// One point estimate with everything needed to reproduce it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub kind: EstimatorKind,
    /// Zero for Hill records.
    pub lag: i64,
    /// Zero for Hill records.
    pub x: f64,
    pub threshold: ThresholdSpec,
    pub threshold_value: f64,
    pub estimate: f64,
    pub exceedances: usize,
    pub alpha_hat: Option<f64>,
}

/// Forward estimate of `P{Theta_t <= x}`: the fraction of exceedances with
/// `X_{i+t} / |X_i| <= x`.
pub fn forward_cdf(series: &TimeSeries, lag: i64, x: f64, exc: &ExceedanceSet) -> Result<EstimateRecord> {
    check_lag(series, lag)?;
    exc.require_nonempty()?;
    let above = exc
        .indices
        .iter()
        .filter(|&&i| series.at(i + lag) / series.at(i).abs() > x)
        .count();
    let count = exc.count();
    Ok(EstimateRecord {
        kind: EstimatorKind::Forward,
        lag,
        x,
        threshold: exc.spec,
        threshold_value: exc.threshold_value,
        estimate: (count - above) as f64 / count as f64,
        exceedances: count,
        alpha_hat: None,
    })
}

/// Backward weight `|X_{i-t} / X_i|^alpha` and ratio `X_i / |X_{i-t}|`;
/// `None` when `X_{i-t} = 0`.
#[inline]
pub(crate) fn backward_term(series: &TimeSeries, i: i64, lag: i64, alpha: f64) -> Option<(f64, f64)> {
    let back = series.at(i - lag);
    if back == 0.0 {
        return None;
    }
    let x0 = series.at(i);
    Some(((back / x0).abs().powf(alpha), x0 / back.abs()))
}

/// Backward (time-change) estimate of `P{Theta_t <= x}`.
///
/// `alpha` defaults to [`hill_alpha`] on the same exceedances. The value is
/// not clipped to `[0, 1]`.
pub fn backward_cdf(
    series: &TimeSeries,
    lag: i64,
    x: f64,
    exc: &ExceedanceSet,
    alpha: Option<f64>,
) -> Result<EstimateRecord> {
    check_lag(series, lag)?;
    exc.require_nonempty()?;
    let alpha = match alpha {
        Some(a) if a > 0.0 && a.is_finite() => a,
        Some(a) => return Err(domain("alpha_hat", a, "finite and > 0")),
        None => hill_alpha(series, exc)?,
    };
    let mass: f64 = exc
        .indices
        .iter()
        .filter_map(|&i| backward_term(series, i, lag, alpha))
        .filter(|&(_, z)| if x >= 0.0 { z > x } else { z <= x })
        .map(|(w, _)| w)
        .sum();
    let count = exc.count() as f64;
    let estimate = if x >= 0.0 { 1.0 - mass / count } else { mass / count };
    Ok(EstimateRecord {
        kind: EstimatorKind::Backward,
        lag,
        x,
        threshold: exc.spec,
        threshold_value: exc.threshold_value,
        estimate,
        exceedances: exc.count(),
        alpha_hat: Some(alpha),
    })
}

pub fn hill_record(series: &TimeSeries, exc: &ExceedanceSet) -> Result<EstimateRecord> {
    let alpha = hill_alpha(series, exc)?;
    Ok(EstimateRecord {
        kind: EstimatorKind::Hill,
        lag: 0,
        x: 0.0,
        threshold: exc.spec,
        threshold_value: exc.threshold_value,
        estimate: alpha,
        exceedances: exc.count(),
        alpha_hat: Some(alpha),
    })
}

/// Any estimator by kind; `lag` and `x` are ignored for Hill.
pub fn estimate(
    series: &TimeSeries,
    kind: EstimatorKind,
    lag: i64,
    x: f64,
    exc: &ExceedanceSet,
) -> Result<EstimateRecord> {
    match kind {
        EstimatorKind::Forward => forward_cdf(series, lag, x, exc),
        EstimatorKind::Backward => backward_cdf(series, lag, x, exc, None),
        EstimatorKind::Hill => hill_record(series, exc),
    }
}

/// The functions summed in tail array sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phi", rename_all = "snake_case")]
pub enum Phi {
    /// `log+(|z_0| / s)`.
    Phi0 { s: f64 },
    /// `1{|z_0| > s}`.
    Phi1 { s: f64 },
    /// `1{z_t / |z_0| > x, |z_0| > s}`.
    Phi2 { t: i64, x: f64, s: f64 },
    /// `|z_{-t} / z_0|^alpha 1{z_0 / |z_{-t}| > y, z_{-t} != 0, |z_0| > s}`.
    Phi3 { t: i64, y: f64, s: f64, alpha: f64 },
}

impl Phi {
    pub fn s(&self) -> f64 {
        match *self {
            Phi::Phi0 { s } | Phi::Phi1 { s } | Phi::Phi2 { s, .. } | Phi::Phi3 { s, .. } => s,
        }
    }

    /// Lag the functional looks at, zero for `Phi0`/`Phi1`.
    pub fn lag(&self) -> i64 {
        match *self {
            Phi::Phi0 { .. } | Phi::Phi1 { .. } => 0,
            Phi::Phi2 { t, .. } => t,
            Phi::Phi3 { t, .. } => -t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub phi: Phi,
    pub epsilon: f64,
}

impl PhiSpec {
    pub fn new(phi: Phi) -> Result<Self> {
        Self::with_epsilon(phi, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(phi: Phi, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain("epsilon", epsilon, "in (0, 1)"));
        }
        let s = phi.s();
        if !(s >= 1.0 - epsilon && s <= 1.0 + epsilon) {
            return Err(domain("s", s, "in [1 - epsilon, 1 + epsilon]"));
        }
        if let Phi::Phi3 { y, alpha, .. } = phi {
            if !(y > 0.0) {
                return Err(domain("y", y, "> 0"));
            }
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(domain("alpha", alpha, "finite and > 0"));
            }
        }
        if matches!(phi, Phi::Phi2 { t: 0, .. } | Phi::Phi3 { t: 0, .. }) {
            return Err(Error::UnsupportedLag(0));
        }
        Ok(Self { phi, epsilon })
    }

    /// `psi(X_{n,i})`; ratios are formed from the raw values, which is the
    /// same function since they are free of the scale `u`.
    #[inline]
    pub fn eval(&self, series: &TimeSeries, i: i64, u: f64) -> f64 {
        let x0 = series.at(i);
        let a0 = x0.abs();
        if !(a0 > (1.0 - self.epsilon) * u) {
            return 0.0;
        }
        match self.phi {
            Phi::Phi0 { s } => {
                let su = s * u;
                if a0 > su {
                    (a0 / su).ln()
                } else {
                    0.0
                }
            }
            Phi::Phi1 { s } => f64::from(u8::from(a0 > s * u)),
            Phi::Phi2 { t, x, s } => f64::from(u8::from(a0 > s * u && series.at(i + t) / a0 > x)),
            Phi::Phi3 { t, y, s, alpha } => {
                if !(a0 > s * u) {
                    return 0.0;
                }
                match backward_term(series, i, t, alpha) {
                    Some((w, z)) if z > y => w,
                    _ => 0.0,
                }
            }
        }
    }
}

/// `sum_{i=1}^n psi(X_{n,i})` with `X_{n,i}` standardized by `u_n`.
pub fn tail_array_sum(series: &TimeSeries, phi: &PhiSpec, u_n: f64) -> Result<f64> {
    if !(u_n > 0.0 && u_n.is_finite()) {
        return Err(domain("u_n", u_n, "finite and > 0"));
    }
    let lag = phi.phi.lag();
    if lag != 0 {
        check_lag(series, lag)?;
    }
    Ok((1..=series.n() as i64).map(|i| phi.eval(series, i, u_n)).sum())
}
