//! Ground truth: tail indices, marginal quantiles, spectral marginals
//! `P{Theta_t > x}` and the pre-asymptotic quantities `p_beta`, `e_beta`, `a_beta`.

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{student_t_sf, student_t_upper_quantile, TiltedInnovationSpec};
use crate::error::{domain, Error, Result};
use crate::models::{CLaw, CopulaFamily, GarchSpec, MarkovCopulaSpec, ModelSpec, SeriesRequest, SreSpec};
use crate::rng::{derive_seed, stream, Label};
use crate::stats::{mc_proportion, mc_try_proportion, mean_var, Estimate};

/// Draw count used for Table-2-class probabilities.
pub const DEFAULT_MC: usize = 10_000_000;

/// Tail levels for threshold extrapolation, shallowest first.
pub const DEFAULT_LEVELS: [f64; 3] = [1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailIndexMethod {
    RootFind,
    Analytic,
    /// Bisection on a numerically integrated moment; no sampling error.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexResult {
    pub alpha: f64,
    pub method: TailIndexMethod,
    pub mc_std_error: f64,
    /// `E[W^alpha] - 1` at the returned root on the sample used.
    pub residual: f64,
}

/// Root in `alpha > 0` of `sum_i w_i exp(alpha l_i) = 1` (weights sum to one).
///
/// The left side is convex with value 1 at 0 and negative slope there, so
/// Newton steps started right of the root decrease monotonically onto it.
fn moment_root(logs: &[f64], weights: Option<&[f64]>, tol: f64) -> Result<(f64, f64, f64)> {
    let w = |i: usize| weights.map_or(1.0 / logs.len() as f64, |w| w[i]);
    let l_max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let drift: f64 = logs
        .par_iter()
        .enumerate()
        .map(|(i, l)| if w(i) > 0.0 { w(i) * l } else { 0.0 })
        .sum();
    if !(l_max > 0.0) || !(drift < 0.0) {
        return Err(Error::NoRoot(format!(
            "E[W^alpha] = 1 has no positive root (max log {l_max:.3}, mean log {drift:.3})"
        )));
    }
    // M(a) = e^s A, M'(a) = e^s B, with s = a * l_max keeping A, B finite
    let eval = |a: f64| -> (f64, f64, f64) {
        let s = a * l_max;
        let (sum_a, sum_b) = logs
            .par_iter()
            .enumerate()
            .map(|(i, &l)| {
                // an atom of W at 0 contributes nothing for a > 0
                if l == f64::NEG_INFINITY {
                    return (0.0, 0.0);
                }
                let e = w(i) * (a * l - s).exp();
                (e, e * l)
            })
            .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
        (s, sum_a, sum_b)
    };
    let excess = |a: f64| {
        let (s, sa, _) = eval(a);
        sa - (-s).exp()
    };
    let mut a = 1.0;
    while excess(a) <= 0.0 {
        a *= 2.0;
        if a > 100.0 {
            return Err(Error::NoRoot("no bracket for the tail index in (0, 100]".into()));
        }
    }
    for _ in 0..200 {
        let (s, sa, sb) = eval(a);
        let step = (sa - (-s).exp()) / sb;
        a -= step;
        if step.abs() < tol {
            let (s, sa, sb) = eval(a);
            let residual = (sa * s.exp()) - 1.0;
            return Ok((a, residual, sb * s.exp()));
        }
    }
    Err(Error::NoRoot("tail index iteration did not converge".into()))
}

fn delta_method_se(logs: &[f64], alpha: f64, slope: f64) -> f64 {
    let vals: Vec<f64> = logs.iter().map(|l| (alpha * l).exp()).collect();
    let (_, var) = mean_var(&vals);
    (var / logs.len() as f64).sqrt() / slope
}

/// Tail index of a GARCH(1,1): root of `E[(a1 eps^2 + b1)^(alpha/2)] = 1`.
pub fn garch_tail_index(spec: &GarchSpec, n_mc: usize, tol: f64, seed: u64) -> Result<TailIndexResult> {
    if spec.alpha1 <= 0.0 {
        return Err(Error::NoRoot("alpha1 = 0 leaves no regularly varying solution".into()));
    }
    let eps = spec.innovation.sampler()?;
    let logs = sample_logs(n_mc, seed, |rng| {
        let e: f64 = eps.sample(rng);
        0.5 * (spec.alpha1 * e * e + spec.beta1).ln()
    });
    let (alpha, residual, slope) = moment_root(&logs, None, tol)?;
    Ok(TailIndexResult {
        alpha,
        method: TailIndexMethod::RootFind,
        mc_std_error: delta_method_se(&logs, alpha, slope),
        residual,
    })
}

/// `E[(a1 eps^2 + b1)^(a/2)]` by double-exponential quadrature over the
/// innovation density, mapping `[0, inf)` onto `[0, 1)`.
fn garch_moment(spec: &GarchSpec, a: f64) -> f64 {
    let f = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let e = u / (1.0 - u);
        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
        (spec.alpha1 * e * e + spec.beta1).powf(0.5 * a) * spec.innovation.density(e) * jac
    };
    2.0 * quadrature::double_exponential::integrate(f, 0.0, 1.0, 1e-14).integral
}

/// Tail index of a GARCH(1,1) without Monte Carlo error: bisection on
/// `E[(a1 eps^2 + b1)^(alpha/2)] = 1` with the moment integrated numerically.
pub fn garch_tail_index_quadrature(spec: &GarchSpec, tol: f64) -> Result<TailIndexResult> {
    spec.validate()?;
    if spec.alpha1 <= 0.0 {
        return Err(Error::NoRoot("alpha1 = 0 leaves no regularly varying solution".into()));
    }
    let excess = |a: f64| garch_moment(spec, a) - 1.0;
    let mut hi = 1.0;
    while !(excess(hi) > 0.0) {
        hi *= 2.0;
        // t(nu) innovations: the moment is infinite from a = nu on
        if hi > 100.0 || !excess(hi).is_finite() {
            return Err(Error::NoRoot("no bracket for the tail index".into()));
        }
    }
    let mut lo = 0.5 * hi;
    while excess(lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-6 {
            return Err(Error::NoRoot("moment does not dip below 1".into()));
        }
    }
    while hi - lo > tol.max(1e-14) {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 { hi = mid } else { lo = mid }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(TailIndexResult {
        alpha,
        method: TailIndexMethod::Quadrature,
        mc_std_error: 0.0,
        residual: excess(alpha),
    })
}

fn sample_logs<F>(n: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut crate::rng::Stream) -> f64 + Sync,
{
    let unit = crate::stats::MC_CHUNK;
    (0..n.div_ceil(unit))
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut rng = crate::rng::substream(seed, j as u64);
            let len = unit.min(n - j * unit);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Tail index of an SRE: root of `E[C^alpha] = 1`.
///
/// Closed form for lognormal `C`, exact root-finding for discrete `C`, Monte
/// Carlo for custom samplers.
pub fn sre_tail_index(spec: &SreSpec, n_mc: usize, tol: f64, seed: u64) -> Result<TailIndexResult> {
    if let Some(custom) = &spec.custom {
        if let Some(alpha) = custom.analytic_tail_index() {
            return Ok(analytic(alpha));
        }
        let pairs = spec.sampler();
        let logs = {
            let mut rng = stream(seed);
            (0..n_mc).map(|_| pairs.sample(&mut rng).0.ln()).collect::<Vec<_>>()
        };
        let (alpha, residual, slope) = moment_root(&logs, None, tol)?;
        return Ok(TailIndexResult {
            alpha,
            method: TailIndexMethod::RootFind,
            mc_std_error: delta_method_se(&logs, alpha, slope),
            residual,
        });
    }
    match &spec.c {
        CLaw::LogNormal { mu, sigma } => {
            if *sigma == 0.0 || *mu >= 0.0 {
                return Err(Error::NoRoot(format!(
                    "lognormal C with mu = {mu}, sigma = {sigma} has no positive root"
                )));
            }
            Ok(analytic(-2.0 * mu / (sigma * sigma)))
        }
        CLaw::Discrete { values, weights } => {
            let total: f64 = weights.iter().sum();
            let (logs, w): (Vec<f64>, Vec<f64>) = values
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(v, w)| (v.ln(), w / total))
                .unzip();
            let (alpha, residual, _) = moment_root(&logs, Some(&w), tol)?;
            Ok(TailIndexResult {
                alpha,
                method: TailIndexMethod::RootFind,
                mc_std_error: 0.0,
                residual,
            })
        }
    }
}

fn analytic(alpha: f64) -> TailIndexResult {
    TailIndexResult {
        alpha,
        method: TailIndexMethod::Analytic,
        mc_std_error: 0.0,
        residual: 0.0,
    }
}

/// How [`marginal_quantile`] obtains the quantile of `|X_0|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuantileMethod {
    Analytic,
    /// Average of the `floor(m beta)`-th order statistic over `reps` paths of length `m`.
    MonteCarlo { m: usize, reps: usize, seed: u64 },
}

impl QuantileMethod {
    pub const fn desk(seed: u64) -> Self {
        QuantileMethod::MonteCarlo {
            m: 1_000_000,
            reps: 20,
            seed,
        }
    }
}

/// Quantile of `|X_0|` at level `beta`.
pub fn marginal_quantile(model: &ModelSpec, beta: f64, method: &QuantileMethod) -> Result<Estimate> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain("beta", beta, "in (0, 1)"));
    }
    match *method {
        QuantileMethod::Analytic => model
            .analytic_abs_quantile(beta)
            .map(Estimate::exact)
            .ok_or_else(|| Error::Precondition(format!("{model} has no closed-form quantile"))),
        QuantileMethod::MonteCarlo { m, reps, seed } => {
            let rank = (m as f64 * beta).floor() as usize;
            if rank == 0 || rank >= m {
                return Err(Error::Precondition(format!(
                    "m = {m} cannot resolve level {beta}: order statistic {rank}"
                )));
            }
            if reps < 2 {
                return Err(Error::Precondition("quantile Monte Carlo needs reps >= 2".into()));
            }
            let req = SeriesRequest::new(m, 0);
            let qs = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let s = derive_seed(seed, &[Label::Str("quantile"), Label::Int(r as u64)]);
                    let ts = model.generate_seeded(&req, s)?;
                    let mut abs: Vec<f64> = ts.core().iter().map(|v| v.abs()).collect();
                    let (_, q, _) = abs.select_nth_unstable_by(rank - 1, f64::total_cmp);
                    Ok(*q)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Estimate::from_samples(&qs))
        }
    }
}

/// Closed form where the model has one, otherwise `fallback`.
pub fn marginal_quantile_auto(model: &ModelSpec, beta: f64, fallback: &QuantileMethod) -> Result<Estimate> {
    if let Some(q) = model.analytic_abs_quantile(beta) {
        return Ok(Estimate::exact(q));
    }
    marginal_quantile(model, beta, fallback)
}

/// A lag and argument of the spectral survival function `P{Theta_t > x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralQuery {
    pub lag: i64,
    pub x: f64,
}

impl SpectralQuery {
    pub fn new(lag: i64, x: f64) -> Result<Self> {
        if lag == 0 {
            return Err(Error::UnsupportedLag(0));
        }
        if x.is_nan() {
            return Err(domain("x", x, "not NaN"));
        }
        Ok(Self { lag, x })
    }

    fn forward(&self) -> Result<usize> {
        if self.lag < 1 {
            return Err(Error::UnsupportedLag(self.lag));
        }
        Ok(self.lag as usize)
    }
}

/// `P{Theta_t > x}` for a GARCH(1,1) via
/// `Theta_t = (eps_t / |eps~_0|) prod_{i=1..t} (a1 eps~_{t-i}^2 + b1)^(1/2)`
/// with `eps~_0` drawn from the alpha-tilted innovation law.
pub fn spectral_survival_garch(
    spec: &GarchSpec,
    q: SpectralQuery,
    alpha: f64,
    n_mc: usize,
    seed: u64,
) -> Result<Estimate> {
    let t = q.forward()?;
    let tilted = TiltedInnovationSpec::new(spec.innovation, alpha)?.sampler()?;
    let eps = spec.innovation.sampler()?;
    Ok(mc_proportion(n_mc, seed, |rng| {
        let e0: f64 = tilted.sample(rng);
        let mut prev = e0;
        let mut scale2 = 1.0;
        for _ in 0..t {
            scale2 *= spec.alpha1 * prev * prev + spec.beta1;
            prev = eps.sample(rng);
        }
        prev * scale2.sqrt() / e0.abs() > q.x
    }))
}

/// `P{Theta_t > x}` for the t-copula chain: closed form at lag 1, Monte Carlo
/// over `Theta_k = Theta_{k-1} (rho + c T_k)` beyond.
pub fn spectral_survival_tcopula(nu: f64, rho: f64, q: SpectralQuery, n_mc: usize, seed: u64) -> Result<Estimate> {
    let t = q.forward()?;
    if !(nu > 0.0) {
        return Err(domain("nu", nu, "> 0"));
    }
    if !(rho > -1.0 && rho < 1.0) {
        return Err(domain("rho", rho, "in (-1, 1)"));
    }
    let c = ((1.0 - rho * rho) / (nu + 1.0)).sqrt();
    if t == 1 {
        let sf = |z: f64| student_t_sf(nu + 1.0, z);
        return Ok(Estimate::exact(0.5 * sf((q.x - rho) / c)? + 0.5 * sf((q.x + rho) / c)?));
    }
    tcopula_chain_mc(nu, rho, t, q.x, n_mc, seed)
}

fn tcopula_chain_mc(nu: f64, rho: f64, t: usize, x: f64, n_mc: usize, seed: u64) -> Result<Estimate> {
    let c = ((1.0 - rho * rho) / (nu + 1.0)).sqrt();
    let tdist = StudentT::new(nu + 1.0).map_err(|_| domain("nu", nu, "> 0"))?;
    Ok(mc_proportion(n_mc, seed, |rng| {
        let mut theta = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for _ in 0..t {
            theta *= rho + c * tdist.sample(rng);
        }
        theta > x
    }))
}

/// Threshold-extrapolated spectral survival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    /// Estimate at the deepest level.
    pub estimate: Estimate,
    pub per_level: Vec<(f64, Estimate)>,
    /// Range of the per-level estimates, a bias indicator.
    pub spread: f64,
    /// False when the spread exceeds five standard errors.
    pub converged: bool,
}

/// Direct Monte Carlo of `P(X_t / |X_0| > x | |X_0| > F^<-(level))` at each level.
pub fn spectral_survival_extrapolated(
    spec: &MarkovCopulaSpec,
    q: SpectralQuery,
    levels: &[f64],
    n_mc: usize,
    seed: u64,
) -> Result<Extrapolation> {
    let t = q.forward()?;
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("levels must be non-empty and strictly increasing".into()));
    }
    if let Some(&l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(domain("level", l, "in (0, 1)"));
    }
    let chain = spec.sampler()?;
    let nu = spec.marginal_nu;
    let mut per_level = Vec::with_capacity(levels.len());
    for (li, &level) in levels.iter().enumerate() {
        let s = derive_seed(seed, &[Label::Str("level"), Label::Int(li as u64)]);
        let est = mc_try_proportion(n_mc, s, |rng| {
            // |X_0| beyond the level by inversion of 2 * F-bar; balanced sign
            let v = 1.0 - rng.random::<f64>();
            let r = student_t_upper_quantile(nu, 0.5 * (1.0 - level) * v)?;
            let x0 = if rng.random::<bool>() { r } else { -r };
            let mut x = x0;
            for _ in 0..t {
                x = chain.step(x, rng)?;
            }
            Ok(x / r > q.x)
        })?;
        per_level.push((level, est));
    }
    let estimate = per_level.last().expect("non-empty").1;
    let (lo, hi) = per_level
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, e)| (lo.min(e.value), hi.max(e.value)));
    let spread = hi - lo;
    Ok(Extrapolation {
        estimate,
        converged: spread <= 5.0 * estimate.std_error,
        per_level,
        spread,
    })
}

/// Which route produced a spectral truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum SpectralTruth {
    Garch { alpha: TailIndexResult, estimate: Estimate },
    ClosedForm { estimate: Estimate },
    Extrapolated(Extrapolation),
}

impl SpectralTruth {
    pub fn estimate(&self) -> Estimate {
        match self {
            SpectralTruth::Garch { estimate, .. } | SpectralTruth::ClosedForm { estimate } => *estimate,
            SpectralTruth::Extrapolated(e) => e.estimate,
        }
    }
}

/// `P{Theta_t > x}` by the route appropriate for `model`.
pub fn spectral_survival(model: &ModelSpec, q: SpectralQuery, n_mc: usize, seed: u64) -> Result<SpectralTruth> {
    match model {
        ModelSpec::Garch(g) => {
            let alpha = garch_tail_index_quadrature(g, 1e-12)?;
            let estimate = spectral_survival_garch(g, q, alpha.alpha, n_mc, seed)?;
            Ok(SpectralTruth::Garch { alpha, estimate })
        }
        ModelSpec::MarkovCopula(c) => match c.copula {
            CopulaFamily::T { nu, rho } if nu == c.marginal_nu => Ok(SpectralTruth::ClosedForm {
                estimate: spectral_survival_tcopula(nu, rho, q, n_mc, seed)?,
            }),
            _ => Ok(SpectralTruth::Extrapolated(spectral_survival_extrapolated(
                c,
                q,
                &DEFAULT_LEVELS,
                n_mc,
                seed,
            )?)),
        },
        ModelSpec::IidPareto { .. } => {
            q.forward()?;
            // Theta_t = 0 for t >= 1
            Ok(SpectralTruth::ClosedForm {
                estimate: Estimate::exact(if q.x < 0.0 { 1.0 } else { 0.0 }),
            })
        }
        ModelSpec::Sre(_) => Err(Error::Precondition(
            "no spectral ground truth route for SRE models".into(),
        )),
    }
}

/// Monte Carlo sizes for [`preasymptotic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreasymptoticConfig {
    pub path_len: usize,
    pub reps: usize,
    pub seed: u64,
    /// Used when the model has no closed-form quantile.
    pub quantile: QuantileMethod,
}

impl Default for PreasymptoticConfig {
    fn default() -> Self {
        Self {
            path_len: 1_000_000,
            reps: 20,
            seed: 0,
            quantile: QuantileMethod::desk(1),
        }
    }
}

/// `p_beta(x)`, `e_beta(x)` and `a_beta` at one `(beta, t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preasymptotic {
    pub beta: f64,
    pub lag: i64,
    pub x: f64,
    pub threshold: Estimate,
    /// `P(X_t / |X_0| > x | |X_0| > u)`.
    pub p: Estimate,
    /// `E[|X_{-t} / X_0|^(1/a) 1{X_0 / |X_{-t}| > x} | |X_0| > u]`.
    pub e: Estimate,
    /// `E[log(|X_0| / u) | |X_0| > u]`.
    pub a: Estimate,
    pub events: u64,
}

pub fn preasymptotic(model: &ModelSpec, beta: f64, lag: i64, x: f64, cfg: &PreasymptoticConfig) -> Result<Preasymptotic> {
    Ok(preasymptotic_grid(model, &[beta], &[lag], &[x], cfg)?.remove(0))
}

#[derive(Default, Clone)]
struct RepSums {
    events: u64,
    log_excess: f64,
    p_hits: Vec<u64>,
    e_mass: Vec<f64>,
}

/// Every `(beta, t, x)` combination evaluated on one set of simulated paths.
///
/// Results are ordered by beta, then lag, then x. Per path the backward
/// weights use the exponent `1 / a_r` of that path.
pub fn preasymptotic_grid(
    model: &ModelSpec,
    betas: &[f64],
    lags: &[i64],
    xs: &[f64],
    cfg: &PreasymptoticConfig,
) -> Result<Vec<Preasymptotic>> {
    if let Some(&t) = lags.iter().find(|t| **t < 1) {
        return Err(Error::UnsupportedLag(t));
    }
    if cfg.reps < 2 {
        return Err(Error::Precondition("pre-asymptotic Monte Carlo needs reps >= 2".into()));
    }
    if betas.is_empty() || lags.is_empty() || xs.is_empty() {
        return Err(Error::Precondition("empty pre-asymptotic grid".into()));
    }
    let thresholds = betas
        .iter()
        .map(|&b| marginal_quantile_auto(model, b, &cfg.quantile))
        .collect::<Result<Vec<_>>>()?;
    let max_lag = *lags.iter().max().expect("non-empty") as usize;
    let req = SeriesRequest::new(cfg.path_len, max_lag);
    let n_cells = lags.len() * xs.len();

    let reps: Vec<Vec<RepSums>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(cfg.seed, &[Label::Str("preasymptotic"), Label::Int(r as u64)]);
            let ts = model.generate_seeded(&req, seed)?;
            let mut out = Vec::with_capacity(betas.len());
            for u in &thresholds {
                let u = u.value;
                let idx: Vec<i64> = (1..=ts.n() as i64).filter(|&i| ts.at(i).abs() > u).collect();
                let mut sums = RepSums {
                    events: idx.len() as u64,
                    log_excess: idx.iter().map(|&i| (ts.at(i).abs() / u).ln()).sum(),
                    p_hits: vec![0; n_cells],
                    e_mass: vec![0.0; n_cells],
                };
                if idx.is_empty() {
                    out.push(sums);
                    continue;
                }
                let inv_a = sums.events as f64 / sums.log_excess;
                for (li, &t) in lags.iter().enumerate() {
                    for &i in &idx {
                        let x0 = ts.at(i);
                        let fwd = ts.at(i + t) / x0.abs();
                        let back = ts.at(i - t);
                        let (w, z) = if back == 0.0 {
                            (0.0, f64::NAN)
                        } else {
                            ((back / x0).abs().powf(inv_a), x0 / back.abs())
                        };
                        for (xi, &x) in xs.iter().enumerate() {
                            let cell = li * xs.len() + xi;
                            if fwd > x {
                                sums.p_hits[cell] += 1;
                            }
                            if z > x {
                                sums.e_mass[cell] += w;
                            }
                        }
                    }
                }
                out.push(sums);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(betas.len() * n_cells);
    for (bi, &beta) in betas.iter().enumerate() {
        let per: Vec<&RepSums> = reps.iter().map(|r| &r[bi]).filter(|s| s.events > 0).collect();
        let events: u64 = per.iter().map(|s| s.events).sum();
        if events == 0 {
            return Err(Error::NoConditioningEvents(format!(
                "no |X_0| above {} at beta = {beta}",
                thresholds[bi].value
            )));
        }
        let pooled = |num: f64| num / events as f64;
        let se = |vals: Vec<f64>| {
            if vals.len() < 2 {
                f64::NAN
            } else {
                let (_, v) = mean_var(&vals);
                (v / vals.len() as f64).sqrt()
            }
        };
        let a = Estimate {
            value: pooled(per.iter().map(|s| s.log_excess).sum()),
            std_error: se(per.iter().map(|s| s.log_excess / s.events as f64).collect()),
        };
        for (li, &lag) in lags.iter().enumerate() {
            for (xi, &x) in xs.iter().enumerate() {
                let cell = li * xs.len() + xi;
                let p = Estimate {
                    value: pooled(per.iter().map(|s| s.p_hits[cell] as f64).sum()),
                    std_error: se(per.iter().map(|s| s.p_hits[cell] as f64 / s.events as f64).collect()),
                };
                let e = Estimate {
                    value: pooled(per.iter().map(|s| s.e_mass[cell]).sum()),
                    std_error: se(per.iter().map(|s| s.e_mass[cell] / s.events as f64).collect()),
                };
                results.push(Preasymptotic {
                    beta,
                    lag,
                    x,
                    threshold: thresholds[bi],
                    p,
                    e,
                    a,
                    events,
                });
            }
        }
    }
    Ok(results)
}
