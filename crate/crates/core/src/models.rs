//! Stationary heavy-tailed time-series generators.
//!
//! All generators return a [`TimeSeries`] holding `n + 2 * max_lag` values
//! addressable by the indices `1 - max_lag ..= n + max_lag`, so every
//! estimator can look `max_lag` steps back and forth from each core index.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::distributions::{
    student_t_cdf, student_t_ln_cdf, student_t_quantile, student_t_sf, student_t_upper_quantile,
    InnovationSpec,
};
use crate::error::{domain, Error, Result};
use crate::rng::{stream, Stream};

/// Default burn-in for GARCH and SRE paths.
pub const DEFAULT_BURN_IN: usize = 1000;

const VALIDATION_DRAWS: usize = 100_000;
const VALIDATION_SEED: u64 = 0x005E_ED0F_5AFE;

/// GARCH(1,1): `X_t = sigma_t eps_t`, `sigma_t^2 = a0 + a1 X_{t-1}^2 + b1 sigma_{t-1}^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchSpec {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub innovation: InnovationSpec,
}

impl GarchSpec {
    /// Validates the parameters and checks `E[log(a1 eps^2 + b1)] < 0` by Monte Carlo.
    pub fn new(alpha0: f64, alpha1: f64, beta1: f64, innovation: InnovationSpec) -> Result<Self> {
        let spec = Self {
            alpha0,
            alpha1,
            beta1,
            innovation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(domain("alpha0", self.alpha0, "finite and > 0"));
        }
        if !(self.alpha1.is_finite() && self.alpha1 >= 0.0) {
            return Err(domain("alpha1", self.alpha1, "finite and >= 0"));
        }
        if !(self.beta1.is_finite() && self.beta1 >= 0.0) {
            return Err(domain("beta1", self.beta1, "finite and >= 0"));
        }
        self.innovation.validate()?;
        let lyapunov = self.log_contraction(VALIDATION_DRAWS, &mut stream(VALIDATION_SEED))?;
        if lyapunov >= 0.0 {
            return Err(Error::Precondition(format!(
                "E[log(alpha1 eps^2 + beta1)] = {lyapunov:.4} is not negative; no stationary solution"
            )));
        }
        Ok(())
    }

    /// Monte Carlo estimate of `E[log(alpha1 eps^2 + beta1)]`.
    pub fn log_contraction<R: Rng + ?Sized>(&self, draws: usize, rng: &mut R) -> Result<f64> {
        let eps = self.innovation.sampler()?;
        let total: f64 = (0..draws)
            .map(|_| {
                let e: f64 = eps.sample(rng);
                (self.alpha1 * e * e + self.beta1).ln()
            })
            .sum();
        Ok(total / draws as f64)
    }

    /// The nGARCH model: (0.1, 0.14, 0.84) with standard normal innovations.
    pub fn ngarch() -> Self {
        Self {
            alpha0: 0.1,
            alpha1: 0.14,
            beta1: 0.84,
            innovation: InnovationSpec::StandardNormal,
        }
    }

    /// The tGARCH model: (0.1, 0.14, 0.84) with standardized t(4) innovations.
    pub fn tgarch() -> Self {
        Self {
            innovation: InnovationSpec::StandardizedT { nu: 4.0 },
            ..Self::ngarch()
        }
    }

    fn initial_variance(&self) -> f64 {
        let persistence = self.alpha1 + self.beta1;
        if persistence < 1.0 {
            self.alpha0 / (1.0 - persistence)
        } else {
            self.alpha0
        }
    }
}

/// Copula of two consecutive observations of a Markov chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaFamily {
    /// Copula of a bivariate t distribution.
    T { nu: f64, rho: f64 },
    /// Gumbel-Hougaard copula `exp(-((-ln u)^theta + (-ln v)^theta)^(1/theta))`.
    Gumbel { theta: f64 },
}

/// Stationary Markov chain with a symmetric t marginal and a copula
/// linking consecutive observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovCopulaSpec {
    pub marginal_nu: f64,
    pub copula: CopulaFamily,
}

impl MarkovCopulaSpec {
    pub fn new(marginal_nu: f64, copula: CopulaFamily) -> Result<Self> {
        let spec = Self {
            marginal_nu,
            copula,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// t(nu) marginal with the copula of a bivariate t(nu) with correlation `rho`.
    pub fn t_copula(nu: f64, rho: f64) -> Result<Self> {
        Self::new(nu, CopulaFamily::T { nu, rho })
    }

    pub fn gumbel(marginal_nu: f64, theta: f64) -> Result<Self> {
        Self::new(marginal_nu, CopulaFamily::Gumbel { theta })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.marginal_nu.is_finite() && self.marginal_nu > 0.0) {
            return Err(domain("marginal_nu", self.marginal_nu, "finite and > 0"));
        }
        match self.copula {
            CopulaFamily::T { nu, rho } => {
                if !(nu.is_finite() && nu > 0.0) {
                    return Err(domain("nu", nu, "finite and > 0"));
                }
                if !(rho > -1.0 && rho < 1.0) {
                    return Err(domain("rho", rho, "in (-1, 1)"));
                }
            }
            CopulaFamily::Gumbel { theta } => {
                if !(theta.is_finite() && theta >= 1.0) {
                    return Err(domain("theta", theta, "finite and >= 1"));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn sampler(&self) -> Result<CopulaChain> {
        self.validate()?;
        let t = |nu: f64| StudentT::new(nu).map_err(|_| domain("nu", nu, "> 0"));
        Ok(CopulaChain {
            spec: *self,
            marginal: t(self.marginal_nu)?,
            innovation: match self.copula {
                CopulaFamily::T { nu, .. } => Some(t(nu + 1.0)?),
                CopulaFamily::Gumbel { .. } => None,
            },
        })
    }

    /// Quantile of `|X_0|` at level `beta`.
    pub fn abs_quantile(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(domain("beta", beta, "in (0, 1)"));
        }
        student_t_upper_quantile(self.marginal_nu, 0.5 * (1.0 - beta))
    }
}

/// Maps `x` from the t(`from`) scale to the t(`to`) scale through the
/// probability integral transform, keeping tail precision on both sides.
fn map_t_scale(x: f64, from: f64, to: f64) -> Result<f64> {
    if from == to {
        return Ok(x);
    }
    if x < 0.0 {
        student_t_quantile(to, student_t_cdf(from, x)?)
    } else {
        student_t_upper_quantile(to, student_t_sf(from, x)?)
    }
}

/// Solves `d/du C_theta(u, v) = p` for `b = -ln v` given `a = -ln u`.
///
/// `ln h(b) = a - S^(1/theta) + (1/theta - 1) ln S + (theta - 1) ln a` with
/// `S = a^theta + b^theta` is strictly decreasing in `b`; the root is found by
/// Newton steps in `ln b` kept inside a shrinking bracket.
pub(crate) fn gumbel_conditional_inverse(a: f64, theta: f64, ln_p: f64) -> Result<f64> {
    if theta == 1.0 {
        return Ok(-ln_p);
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Generation {
            index: 0,
            reason: format!("Gumbel conditioning value -ln u = {a} is not positive and finite"),
        });
    }
    let ln_a = a.ln();
    let a_pow = (theta * ln_a).exp();
    let g = |y: f64| -> (f64, f64) {
        let b_pow = (theta * y).exp();
        let s = a_pow + b_pow;
        let s_root = s.powf(1.0 / theta);
        let ln_h = a - s_root + (1.0 / theta - 1.0) * s.ln() + (theta - 1.0) * ln_a;
        let slope = b_pow * (-s_root / s + (1.0 - theta) / s);
        (ln_h - ln_p, slope)
    };

    const Y_MIN: f64 = -50.0;
    let y_max = 700f64.ln();
    if g(Y_MIN).0 <= 0.0 {
        return Ok(Y_MIN.exp());
    }
    if g(y_max).0 >= 0.0 {
        return Ok(y_max.exp());
    }
    let (mut lo, mut hi) = (Y_MIN, y_max);
    let mut y = ln_a.clamp(lo, hi);
    let mut last_step = hi - lo;
    for _ in 0..200 {
        let (val, slope) = g(y);
        if val == 0.0 {
            return Ok(y.exp());
        }
        if val > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - val / slope;
        // Newton only while it lands inside the bracket and halves the step
        let next = if newton > lo && newton < hi && (newton - y).abs() < 0.5 * last_step {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_step = (next - y).abs();
        y = next;
        if last_step < 1e-13 || hi - lo < 1e-12 {
            return Ok(y.exp());
        }
    }
    Err(Error::Generation {
        index: 0,
        reason: format!("Gumbel conditional inversion did not converge (a = {a}, ln p = {ln_p})"),
    })
}

/// Prepared transition kernel of a [`MarkovCopulaSpec`].
#[derive(Debug, Clone)]
pub(crate) struct CopulaChain {
    spec: MarkovCopulaSpec,
    marginal: StudentT<f64>,
    innovation: Option<StudentT<f64>>,
}

impl CopulaChain {
    pub(crate) fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.marginal.sample(rng)
    }

    /// One exact draw of `X_t` given `X_{t-1} = x`.
    pub(crate) fn step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<f64> {
        match self.spec.copula {
            CopulaFamily::T { nu, rho } => {
                let t = self.innovation.as_ref().expect("t copula has an innovation law");
                let y = map_t_scale(x, self.spec.marginal_nu, nu)?;
                let scale = ((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                let next = rho * y + scale * t.sample(rng);
                map_t_scale(next, nu, self.spec.marginal_nu)
            }
            CopulaFamily::Gumbel { theta } => {
                let nu = self.spec.marginal_nu;
                let a = -student_t_ln_cdf(nu, x);
                // 1 - [0, 1) lies in (0, 1]
                let ln_p = (1.0 - rng.random::<f64>()).ln();
                let b = gumbel_conditional_inverse(a, theta, ln_p)?;
                if b < std::f64::consts::LN_2 {
                    student_t_upper_quantile(nu, -(-b).exp_m1())
                } else {
                    student_t_quantile(nu, (-b).exp())
                }
            }
        }
    }
}

/// Law of the multiplier `C_t` in an SRE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CLaw {
    /// `ln C ~ N(mu, sigma^2)`.
    LogNormal { mu: f64, sigma: f64 },
    /// `C = values[i]` with probability proportional to `weights[i]`.
    Discrete { values: Vec<f64>, weights: Vec<f64> },
}

/// Law of the additive term `D_t` in an SRE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DLaw {
    Exponential { mean: f64 },
    Constant { value: f64 },
    Pareto { alpha: f64 },
}

/// User-supplied generator of iid `(C_t, D_t)` pairs.
pub trait PairSampler: Send + Sync + fmt::Debug {
    fn sample(&self, rng: &mut Stream) -> (f64, f64);

    /// Root of `E[C^alpha] = 1` when known in closed form.
    fn analytic_tail_index(&self) -> Option<f64> {
        None
    }
}

/// Stochastic recurrence equation `X_t = C_t X_{t-1} + D_t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SreSpec {
    pub c: CLaw,
    pub d: DLaw,
    /// Overrides `c` and `d` when set.
    #[serde(skip)]
    pub custom: Option<Arc<dyn PairSampler>>,
}

impl PartialEq for SreSpec {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c && self.d == other.d && self.custom.is_none() && other.custom.is_none()
    }
}

impl SreSpec {
    pub fn new(c: CLaw, d: DLaw) -> Result<Self> {
        let spec = Self { c, d, custom: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(sampler: Arc<dyn PairSampler>) -> Result<Self> {
        let spec = Self {
            c: CLaw::Discrete {
                values: vec![0.0],
                weights: vec![1.0],
            },
            d: DLaw::Constant { value: 0.0 },
            custom: Some(sampler),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `ln C ~ N(mu, sigma^2)` with exponential(mean 1) `D`.
    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(CLaw::LogNormal { mu, sigma }, DLaw::Exponential { mean: 1.0 })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.c {
            CLaw::LogNormal { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite() && *sigma >= 0.0) {
                    return Err(domain("sigma", *sigma, "finite and >= 0"));
                }
            }
            CLaw::Discrete { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(Error::Precondition(
                        "discrete C law needs matching non-empty values and weights".into(),
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Precondition("C values must be finite and >= 0".into()));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
                    || weights.iter().sum::<f64>() <= 0.0
                {
                    return Err(Error::Precondition("C weights must be >= 0 with positive sum".into()));
                }
            }
        }
        match self.d {
            DLaw::Exponential { mean } if !(mean.is_finite() && mean > 0.0) => {
                return Err(domain("mean", mean, "finite and > 0"))
            }
            DLaw::Constant { value } if !(value.is_finite() && value >= 0.0) => {
                return Err(domain("value", value, "finite and >= 0"))
            }
            DLaw::Pareto { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                return Err(domain("alpha", alpha, "finite and > 0"))
            }
            _ => {}
        }
        let mut rng = stream(VALIDATION_SEED);
        let sampler = self.sampler();
        let mut log_c = 0.0;
        for _ in 0..VALIDATION_DRAWS {
            let (c, d) = sampler.sample(&mut rng);
            if !(c >= 0.0 && d >= 0.0 && c.is_finite() && d.is_finite()) {
                return Err(Error::Precondition(format!(
                    "SRE pair ({c}, {d}) is not a finite nonnegative pair"
                )));
            }
            log_c += c.ln();
        }
        let mean_log_c = log_c / VALIDATION_DRAWS as f64;
        if mean_log_c >= 0.0 {
            return Err(Error::Precondition(format!(
                "E[log C] = {mean_log_c:.4} is not negative; no stationary solution"
            )));
        }
        Ok(())
    }

    pub(crate) fn sampler(&self) -> SrePairs<'_> {
        SrePairs::new(self)
    }
}

/// Prepared `(C, D)` sampler.
pub(crate) struct SrePairs<'a> {
    spec: &'a SreSpec,
    cumulative: Vec<f64>,
    exp: Option<Exp<f64>>,
}

impl<'a> SrePairs<'a> {
    fn new(spec: &'a SreSpec) -> Self {
        let cumulative = match &spec.c {
            CLaw::Discrete { weights, .. } => {
                let total: f64 = weights.iter().sum();
                weights
                    .iter()
                    .scan(0.0, |acc, w| {
                        *acc += w / total;
                        Some(*acc)
                    })
                    .collect()
            }
            CLaw::LogNormal { .. } => Vec::new(),
        };
        let exp = match spec.d {
            DLaw::Exponential { mean } => Exp::new(1.0 / mean).ok(),
            _ => None,
        };
        Self {
            spec,
            cumulative,
            exp,
        }
    }

    pub(crate) fn sample_c(&self, rng: &mut Stream) -> f64 {
        if let Some(custom) = &self.spec.custom {
            return custom.sample(rng).0;
        }
        match &self.spec.c {
            CLaw::LogNormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            CLaw::Discrete { values, .. } => {
                let u: f64 = rng.random();
                let i = self.cumulative.partition_point(|&c| c <= u);
                values[i.min(values.len() - 1)]
            }
        }
    }

    pub(crate) fn sample(&self, rng: &mut Stream) -> (f64, f64) {
        if let Some(custom) = &self.spec.custom {
            return custom.sample(rng);
        }
        let c = self.sample_c(rng);
        let d = match self.spec.d {
            DLaw::Exponential { .. } => self.exp.expect("validated").sample(rng),
            DLaw::Constant { value } => value,
            DLaw::Pareto { alpha } => (1.0 - rng.random::<f64>()).powf(-1.0 / alpha),
        };
        (c, d)
    }
}

/// Any of the supported models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    Garch(GarchSpec),
    MarkovCopula(MarkovCopulaSpec),
    Sre(SreSpec),
    /// iid standard Pareto observations; the textbook case for oracles.
    IidPareto { alpha: f64 },
}

impl ModelSpec {
    /// Built-in model by name: `ngarch`, `tgarch`, `tcopula-<rho>`,
    /// `gumcopula-<theta>`, `sre-lognormal`, `pareto-<alpha>`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ngarch" => return Some(ModelSpec::Garch(GarchSpec::ngarch())),
            "tgarch" => return Some(ModelSpec::Garch(GarchSpec::tgarch())),
            "sre-lognormal" => return SreSpec::lognormal(-0.5, 1.0).ok().map(ModelSpec::Sre),
            _ => {}
        }
        let (family, param) = name.split_once('-')?;
        let value: f64 = param.parse().ok()?;
        match family {
            "tcopula" => MarkovCopulaSpec::t_copula(4.0, value)
                .ok()
                .map(ModelSpec::MarkovCopula),
            "gumcopula" => MarkovCopulaSpec::gumbel(4.0, value)
                .ok()
                .map(ModelSpec::MarkovCopula),
            "pareto" if value > 0.0 => Some(ModelSpec::IidPareto { alpha: value }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Garch(g) => g.validate(),
            ModelSpec::MarkovCopula(c) => c.validate(),
            ModelSpec::Sre(s) => s.validate(),
            ModelSpec::IidPareto { alpha } if alpha.is_finite() && *alpha > 0.0 => Ok(()),
            ModelSpec::IidPareto { alpha } => Err(domain("alpha", *alpha, "finite and > 0")),
        }
    }

    pub fn default_burn_in(&self) -> usize {
        match self {
            ModelSpec::Garch(_) | ModelSpec::Sre(_) => DEFAULT_BURN_IN,
            ModelSpec::MarkovCopula(_) | ModelSpec::IidPareto { .. } => 0,
        }
    }

    /// Closed-form quantile of `|X_0|` where one exists.
    pub fn analytic_abs_quantile(&self, beta: f64) -> Option<f64> {
        match self {
            ModelSpec::MarkovCopula(c) => c.abs_quantile(beta).ok(),
            ModelSpec::IidPareto { alpha } => Some((1.0 - beta).powf(-1.0 / alpha)),
            _ => None,
        }
    }

    /// Short tag used in file names and reports.
    pub fn tag(&self) -> String {
        match self {
            ModelSpec::Garch(g) => match g.innovation {
                InnovationSpec::StandardNormal => "garch-normal".into(),
                InnovationSpec::StandardizedT { nu } => format!("garch-t{nu}"),
            },
            ModelSpec::MarkovCopula(c) => match c.copula {
                CopulaFamily::T { rho, .. } => format!("tcopula-{rho}"),
                CopulaFamily::Gumbel { theta } => format!("gumcopula-{theta}"),
            },
            ModelSpec::Sre(_) => "sre".into(),
            ModelSpec::IidPareto { alpha } => format!("pareto-{alpha}"),
        }
    }

    pub fn generate<R>(&self, req: &SeriesRequest, rng: &mut R) -> Result<TimeSeries>
    where
        R: Rng + ?Sized,
    {
        match self {
            ModelSpec::Garch(g) => generate_garch(g, req, rng),
            ModelSpec::MarkovCopula(c) => generate_markov_copula(c, req, rng),
            ModelSpec::Sre(s) => {
                // the SRE sampler is written against the concrete stream type
                let mut local = stream(rng.random());
                generate_sre(s, req, &mut local)
            }
            ModelSpec::IidPareto { alpha } => {
                let len = req.total_len();
                let values = (0..len)
                    .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha))
                    .collect();
                TimeSeries::new(values, req.max_lag, self.tag())
            }
        }
    }

    /// Generates from a fresh stream seeded with `seed` and records the seed.
    pub fn generate_seeded(&self, req: &SeriesRequest, seed: u64) -> Result<TimeSeries> {
        let mut rng = stream(seed);
        let mut ts = self.generate(req, &mut rng)?;
        ts.seed = Some(seed);
        Ok(ts)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Length and padding of a generated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRequest {
    pub n: usize,
    pub max_lag: usize,
    /// `None` uses the model default.
    pub burn_in: Option<usize>,
}

impl SeriesRequest {
    pub fn new(n: usize, max_lag: usize) -> Self {
        Self {
            n,
            max_lag,
            burn_in: None,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn total_len(&self) -> usize {
        self.n + 2 * self.max_lag
    }
}

/// A realized path `X_{1-max_lag}, ..., X_{n+max_lag}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    n: usize,
    max_lag: usize,
    pub tag: String,
    pub seed: Option<u64>,
}

impl TimeSeries {
    /// Wraps `values` as a path whose first and last `max_lag` entries are padding.
    pub fn new(values: Vec<f64>, max_lag: usize, tag: impl Into<String>) -> Result<Self> {
        if values.len() <= 2 * max_lag {
            return Err(Error::Precondition(format!(
                "{} values cannot hold a core window with padding {max_lag}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Generation {
                index: i,
                reason: "non-finite value".into(),
            });
        }
        Ok(Self {
            n: values.len() - 2 * max_lag,
            values,
            max_lag,
            tag: tag.into(),
            seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// `X_i` for `1 - max_lag <= i <= n + max_lag`.
    #[inline]
    pub fn at(&self, i: i64) -> f64 {
        self.values[(i + self.max_lag as i64 - 1) as usize]
    }

    /// `X_1, ..., X_n`.
    pub fn core(&self) -> &[f64] {
        &self.values[self.max_lag..self.max_lag + self.n]
    }

    /// Every stored value, padding included.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same path multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// FNV-1a hash of the value bits, used to pair computations on one path.
    pub fn checksum(&self) -> u64 {
        self.values.iter().fold(0xCBF2_9CE4_8422_2325u64, |h, v| {
            v.to_bits()
                .to_le_bytes()
                .iter()
                .fold(h, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01B3))
        })
    }
}

fn overflow(index: usize, what: &str) -> Error {
    Error::Generation {
        index,
        reason: format!("{what} is not finite"),
    }
}

pub fn generate_garch<R>(spec: &GarchSpec, req: &SeriesRequest, rng: &mut R) -> Result<TimeSeries>
where
    R: Rng + ?Sized,
{
    let eps = spec.innovation.sampler()?;
    let burn = req.burn_in.unwrap_or(DEFAULT_BURN_IN);
    let len = req.total_len();
    let mut values = Vec::with_capacity(len);
    let mut sigma2 = spec.initial_variance();
    for idx in 0..burn + len {
        let x = sigma2.sqrt() * eps.sample(rng);
        sigma2 = spec.alpha0 + spec.alpha1 * x * x + spec.beta1 * sigma2;
        if !sigma2.is_finite() {
            return Err(overflow(idx, "GARCH variance"));
        }
        if idx >= burn {
            values.push(x);
        }
    }
    TimeSeries::new(values, req.max_lag, ModelSpec::Garch(*spec).tag())
}

pub fn generate_markov_copula<R>(
    spec: &MarkovCopulaSpec,
    req: &SeriesRequest,
    rng: &mut R,
) -> Result<TimeSeries>
where
    R: Rng + ?Sized,
{
    let chain = spec.sampler()?;
    let burn = req.burn_in.unwrap_or(0);
    let len = req.total_len();
    let mut values = Vec::with_capacity(len);
    let mut x = chain.initial(rng);
    for idx in 0..burn + len {
        if idx > 0 {
            x = chain.step(x, rng).map_err(|e| match e {
                Error::Generation { reason, .. } => Error::Generation { index: idx, reason },
                other => other,
            })?;
        }
        if idx >= burn {
            values.push(x);
        }
    }
    TimeSeries::new(values, req.max_lag, ModelSpec::MarkovCopula(*spec).tag())
}

pub fn generate_sre(spec: &SreSpec, req: &SeriesRequest, rng: &mut Stream) -> Result<TimeSeries> {
    generate_sre_from(spec, req, 0.0, rng)
}

/// Runs the recursion from `X_0 = x0`.
pub fn generate_sre_from(
    spec: &SreSpec,
    req: &SeriesRequest,
    x0: f64,
    rng: &mut Stream,
) -> Result<TimeSeries> {
    let pairs = spec.sampler();
    let burn = req.burn_in.unwrap_or(DEFAULT_BURN_IN);
    let len = req.total_len();
    let mut values = Vec::with_capacity(len);
    let mut x = x0;
    for idx in 0..burn + len {
        let (c, d) = pairs.sample(rng);
        x = c * x + d;
        if !x.is_finite() {
            return Err(overflow(idx, "SRE state"));
        }
        if idx >= burn {
            values.push(x);
        }
    }
    TimeSeries::new(values, req.max_lag, "sre")
}
