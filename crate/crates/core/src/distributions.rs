//! Student-t special functions and the samplers every model draws from.
//!
//! The t cdf goes through the regularized incomplete beta function; the
//! quantile is a safeguarded Newton iteration on the log tail, which keeps full
//! relative accuracy far into the tails (the Gumbel chain and the threshold
//! extrapolation both need quantiles at levels like `1 - 1e-12`).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::stats::normal_quantile;

fn check_nu(nu: f64) -> Result<()> {
    if nu.is_finite() && nu > 0.0 {
        Ok(())
    } else {
        Err(domain("nu", nu, "finite and > 0"))
    }
}

/// `P(T < -|x|)` for `T ~ t(nu)`.
fn lower_tail(nu: f64, x: f64) -> f64 {
    let x2 = x * x;
    let z = x2 / (nu + x2);
    if z < 0.5 {
        0.5 * (1.0 - beta_reg(0.5, 0.5 * nu, z))
    } else {
        0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x2))
    }
}

/// Density of the t distribution with `nu` degrees of freedom.
pub fn student_t_pdf(nu: f64, x: f64) -> f64 {
    let log_norm =
        ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln();
    (log_norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

pub fn student_t_cdf(nu: f64, x: f64) -> Result<f64> {
    check_nu(nu)?;
    if !x.is_finite() {
        return Err(domain("x", x, "finite"));
    }
    let tail = lower_tail(nu, x);
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Survival function `P(T > x)`, accurate in the upper tail.
pub fn student_t_sf(nu: f64, x: f64) -> Result<f64> {
    check_nu(nu)?;
    if !x.is_finite() {
        return Err(domain("x", x, "finite"));
    }
    let tail = lower_tail(nu, x);
    Ok(if x > 0.0 { tail } else { 1.0 - tail })
}

/// `ln P(T <= x)`, accurate for both very negative and very positive `x`.
pub(crate) fn student_t_ln_cdf(nu: f64, x: f64) -> f64 {
    let tail = lower_tail(nu, x);
    if x < 0.0 {
        tail.ln()
    } else {
        (-tail).ln_1p()
    }
}

/// Returns `y >= 0` with `P(T < -y) = p`, for `0 < p <= 0.5`.
fn inverse_lower_tail(nu: f64, p: f64) -> f64 {
    if p >= 0.5 {
        return 0.0;
    }
    let target = p.ln();
    let g = |y: f64| lower_tail(nu, y).ln() - target;

    let mut lo = 0.0_f64;
    let mut hi = (-normal_quantile(p)).max(1.0);
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 4.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let tail = lower_tail(nu, y);
        let gy = tail.ln() - target;
        if gy > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let slope = -student_t_pdf(nu, y) / tail;
        let mut next = y - gy / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo > 0.0 && hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        let step = (next - y).abs();
        y = next;
        if step <= 1e-14 * y.max(1.0) || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    y
}

/// Quantile of the t distribution.
pub fn student_t_quantile(nu: f64, p: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p, "in (0, 1)"));
    }
    Ok(if p <= 0.5 {
        -inverse_lower_tail(nu, p)
    } else {
        inverse_lower_tail(nu, 1.0 - p)
    })
}

/// Solves `P(T > x) = q`; unlike `student_t_quantile(nu, 1 - q)` this keeps
/// full precision for tiny `q`.
pub fn student_t_upper_quantile(nu: f64, q: f64) -> Result<f64> {
    Ok(-student_t_quantile(nu, q)?)
}

/// Law of a GARCH innovation: mean 0, variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InnovationSpec {
    StandardNormal,
    /// A t(nu) variable scaled by `sqrt((nu - 2) / nu)`.
    StandardizedT { nu: f64 },
}

impl InnovationSpec {
    pub fn standardized_t(nu: f64) -> Result<Self> {
        let spec = InnovationSpec::StandardizedT { nu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InnovationSpec::StandardNormal => Ok(()),
            InnovationSpec::StandardizedT { nu } if nu.is_finite() && nu > 2.0 => Ok(()),
            InnovationSpec::StandardizedT { nu } => Err(domain("nu", nu, "finite and > 2")),
        }
    }

    fn t_scale(nu: f64) -> f64 {
        ((nu - 2.0) / nu).sqrt()
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            InnovationSpec::StandardNormal => {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            InnovationSpec::StandardizedT { nu } => {
                let s = Self::t_scale(nu);
                student_t_pdf(nu, x / s) / s
            }
        }
    }

    /// `E|eps|^alpha` in closed form.
    pub fn abs_moment(&self, alpha: f64) -> Result<f64> {
        let ln_sqrt_pi = 0.5 * std::f64::consts::PI.ln();
        match *self {
            InnovationSpec::StandardNormal => Ok((0.5 * alpha * 2f64.ln()
                + ln_gamma(0.5 * (alpha + 1.0))
                - ln_sqrt_pi)
                .exp()),
            InnovationSpec::StandardizedT { nu } => {
                if alpha >= nu {
                    return Err(Error::InfiniteNormalizer { alpha, nu });
                }
                let ln = alpha * Self::t_scale(nu).ln()
                    + 0.5 * alpha * nu.ln()
                    + ln_gamma(0.5 * (alpha + 1.0))
                    + ln_gamma(0.5 * (nu - alpha))
                    - ln_sqrt_pi
                    - ln_gamma(0.5 * nu);
                Ok(ln.exp())
            }
        }
    }

    pub fn sampler(&self) -> Result<Innovation> {
        self.validate()?;
        Ok(match *self {
            InnovationSpec::StandardNormal => Innovation::Normal,
            InnovationSpec::StandardizedT { nu } => Innovation::T {
                raw: StudentT::new(nu).map_err(|_| domain("nu", nu, "> 0"))?,
                scale: Self::t_scale(nu),
            },
        })
    }
}

/// A ready-to-draw innovation law.
#[derive(Debug, Clone, Copy)]
pub enum Innovation {
    Normal,
    T { raw: StudentT<f64>, scale: f64 },
}

impl Distribution<f64> for Innovation {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Innovation::Normal => rng.sample(StandardNormal),
            Innovation::T { raw, scale } => scale * raw.sample(rng),
        }
    }
}

pub fn sample_innovation<R: Rng + ?Sized>(spec: &InnovationSpec, rng: &mut R) -> Result<f64> {
    Ok(spec.sampler()?.sample(rng))
}

/// The size-biased innovation with density `g(x)|x|^alpha / E|eps|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedInnovationSpec {
    pub base: InnovationSpec,
    pub alpha: f64,
}

impl TiltedInnovationSpec {
    pub fn new(base: InnovationSpec, alpha: f64) -> Result<Self> {
        base.validate()?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(domain("alpha", alpha, "finite and > 0"));
        }
        if let InnovationSpec::StandardizedT { nu } = base {
            if alpha >= nu {
                return Err(Error::InfiniteNormalizer { alpha, nu });
            }
        }
        Ok(Self { base, alpha })
    }

    pub fn density(&self, x: f64) -> f64 {
        // abs_moment cannot fail for a validated spec
        let norm = self.base.abs_moment(self.alpha).unwrap_or(f64::NAN);
        self.base.density(x) * x.abs().powf(self.alpha) / norm
    }

    pub fn sampler(&self) -> Result<TiltedInnovation> {
        let spec = Self::new(self.base, self.alpha)?;
        let gamma = |shape: f64| Gamma::new(shape, 1.0).map_err(|_| domain("shape", shape, "> 0"));
        Ok(match spec.base {
            // |eps|^2 ~ Gamma((alpha + 1) / 2, scale 2)
            InnovationSpec::StandardNormal => TiltedInnovation::Normal {
                radius_sq: Gamma::new(0.5 * (spec.alpha + 1.0), 2.0)
                    .map_err(|_| domain("alpha", spec.alpha, "> -1"))?,
            },
            // T^2 / nu is beta-prime((alpha + 1) / 2, (nu - alpha) / 2)
            InnovationSpec::StandardizedT { nu } => TiltedInnovation::T {
                num: gamma(0.5 * (spec.alpha + 1.0))?,
                den: gamma(0.5 * (nu - spec.alpha))?,
                nu,
                scale: InnovationSpec::t_scale(nu),
            },
        })
    }
}

/// A ready-to-draw tilted innovation law.
#[derive(Debug, Clone, Copy)]
pub enum TiltedInnovation {
    Normal {
        radius_sq: Gamma<f64>,
    },
    T {
        num: Gamma<f64>,
        den: Gamma<f64>,
        nu: f64,
        scale: f64,
    },
}

impl Distribution<f64> for TiltedInnovation {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let magnitude = match self {
            TiltedInnovation::Normal { radius_sq } => radius_sq.sample(rng).sqrt(),
            TiltedInnovation::T {
                num,
                den,
                nu,
                scale,
            } => scale * (nu * num.sample(rng) / den.sample(rng)).sqrt(),
        };
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

pub fn sample_tilted_innovation<R: Rng + ?Sized>(
    spec: &TiltedInnovationSpec,
    rng: &mut R,
) -> Result<f64> {
    Ok(spec.sampler()?.sample(rng))
}

/// Inverse-cdf map of a uniform `u` in (0, 1] to a standard Pareto draw.
pub fn pareto_from_uniform(alpha: f64, u: f64) -> f64 {
    u.powf(-1.0 / alpha)
}

/// Draw with `P(Y > y) = y^-alpha` on `[1, inf)`.
pub fn sample_standard_pareto<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(domain("alpha", alpha, "finite and > 0"));
    }
    // 1 - [0, 1) lies in (0, 1]
    Ok(pareto_from_uniform(alpha, 1.0 - rng.random::<f64>()))
}

pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(domain("shape", shape, "finite and > 0"));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(domain("scale", scale, "finite and > 0"));
    }
    let g = Gamma::new(shape, scale).map_err(|_| domain("shape", shape, "> 0"))?;
    Ok(g.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{ks_one_sample, mean_var};

    /// Composite Simpson rule, used as an independent oracle.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn t_cdf_fixed_points() {
        assert_eq!(student_t_cdf(4.0, 0.0).unwrap(), 0.5);
        assert!((student_t_cdf(4.0, 2.1318).unwrap() - 0.95).abs() < 5e-5);
        // oracle: 0.5 + integral of the t5 density over [0, 2.8868]
        let oracle = 0.5 + simpson(|x| student_t_pdf(5.0, x), 0.0, 2.8868, 20_000);
        let got = student_t_cdf(5.0, 2.8868).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        // the true value rounds to 0.9828
        assert!((got - 0.98284).abs() < 5e-5);
    }

    #[test]
    fn t_cdf_symmetry_and_errors() {
        for &x in &[0.1, 1.0, 3.0, 40.0] {
            let a = student_t_cdf(3.0, -x).unwrap();
            let b = student_t_cdf(3.0, x).unwrap();
            assert!((a - (1.0 - b)).abs() < 1e-15);
        }
        assert!(student_t_cdf(4.0, f64::NAN).is_err());
        assert!(student_t_cdf(4.0, f64::INFINITY).is_err());
        assert!(student_t_cdf(-1.0, 0.0).is_err());
    }

    #[test]
    fn t_quantile_fixed_points() {
        assert!((student_t_quantile(4.0, 0.975).unwrap() - 2.7764).abs() < 5e-5);
        assert!((student_t_quantile(4.0, 0.95).unwrap() - 2.1318).abs() < 5e-5);
        assert_eq!(student_t_quantile(4.0, 0.5).unwrap(), 0.0);
        assert!(student_t_quantile(4.0, 0.0).is_err());
        assert!(student_t_quantile(4.0, 1.0).is_err());
    }

    #[test]
    fn t_quantile_round_trip_grid() {
        for &nu in &[3.0, 4.0, 5.0, 20.0] {
            for i in 1..=999 {
                let p = i as f64 / 1000.0;
                let x = student_t_quantile(nu, p).unwrap();
                let back = student_t_cdf(nu, x).unwrap();
                assert!((back - p).abs() < 1e-9, "nu={nu} p={p} back={back}");
                let mirror = student_t_quantile(nu, 1.0 - p).unwrap();
                assert!((x + mirror).abs() < 1e-9 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn upper_quantile_keeps_relative_precision() {
        for &q in &[1e-4, 1e-8, 1e-12, 1e-200] {
            let x = student_t_upper_quantile(4.0, q).unwrap();
            let back = student_t_sf(4.0, x).unwrap();
            assert!(((back - q) / q).abs() < 1e-10, "q={q} back={back}");
        }
    }

    #[test]
    fn standardized_t_has_unit_variance() {
        let spec = InnovationSpec::standardized_t(4.0).unwrap();
        let s = spec.sampler().unwrap();
        let mut rng = stream(11);
        let n = 10_000_000;
        let draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let (_, var) = mean_var(&draws);
        // E[eps^4] is infinite for nu = 4; the standard error uses the sample fourth moment
        let m4 = draws.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        let se = ((m4 - var * var) / n as f64).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "var {var} se {se}");
    }

    #[test]
    fn standard_normal_mean() {
        let mut rng = stream(12);
        let n = 10_000_000;
        let m = (0..n)
            .map(|_| sample_innovation(&InnovationSpec::StandardNormal, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(m.abs() < 3.0 * 10f64.powf(-3.5), "{m}");
    }

    #[test]
    fn rescaled_standardized_t_is_t4() {
        let s = InnovationSpec::standardized_t(4.0).unwrap().sampler().unwrap();
        let mut rng = stream(13);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| s.sample(&mut rng) * 2f64.sqrt())
            .collect();
        let d = ks_one_sample(&draws, |x| student_t_cdf(4.0, x).unwrap());
        assert!(d < 0.002, "KS {d}");
    }

    #[test]
    fn rejects_bad_innovation_params() {
        assert!(InnovationSpec::standardized_t(2.0).is_err());
        assert!(TiltedInnovationSpec::new(InnovationSpec::StandardizedT { nu: 4.0 }, 4.0).is_err());
        assert!(matches!(
            TiltedInnovationSpec::new(InnovationSpec::StandardizedT { nu: 4.0 }, 4.5),
            Err(Error::InfiniteNormalizer { .. })
        ));
        assert!(TiltedInnovationSpec::new(InnovationSpec::StandardNormal, 0.0).is_err());
    }

    #[test]
    fn abs_moments_match_quadrature() {
        for spec in [
            InnovationSpec::StandardNormal,
            InnovationSpec::StandardizedT { nu: 4.0 },
        ] {
            for &a in &[1.0, 2.0, 2.6] {
                // integrate over log|x| so the polynomial t tail is covered
                let q = 2.0
                    * simpson(
                        |u: f64| spec.density(u.exp()) * (u * (a + 1.0)).exp(),
                        -30.0,
                        12.0,
                        400_000,
                    );
                let exact = spec.abs_moment(a).unwrap();
                assert!((q - exact).abs() < 1e-6 * exact, "{spec:?} a={a}: {q} vs {exact}");
            }
        }
        assert!((InnovationSpec::StandardNormal.abs_moment(2.0).unwrap() - 1.0).abs() < 1e-14);
    }

    /// Numerically integrated cdf of the tilted density on a fine grid.
    struct QuadratureCdf {
        lo: f64,
        h: f64,
        cum: Vec<f64>,
    }

    impl QuadratureCdf {
        fn new(spec: &TiltedInnovationSpec, lo: f64, hi: f64, cells: usize) -> Self {
            let h = (hi - lo) / cells as f64;
            let mut cum = vec![0.0; cells + 1];
            for i in 0..cells {
                let a = lo + i as f64 * h;
                let m = a + 0.5 * h;
                let b = a + h;
                let area = h / 6.0 * (spec.density(a) + 4.0 * spec.density(m) + spec.density(b));
                cum[i + 1] = cum[i] + area;
            }
            Self { lo, h, cum }
        }

        fn cdf(&self, x: f64) -> f64 {
            let pos = (x - self.lo) / self.h;
            if pos <= 0.0 {
                return 0.0;
            }
            let i = pos.floor() as usize;
            if i + 1 >= self.cum.len() {
                return 1.0;
            }
            let w = pos - i as f64;
            self.cum[i] + w * (self.cum[i + 1] - self.cum[i])
        }
    }

    #[test]
    fn tilted_normal_matches_quadrature() {
        for (k, &alpha) in [1.0, 2.6, 4.02].iter().enumerate() {
            let spec = TiltedInnovationSpec::new(InnovationSpec::StandardNormal, alpha).unwrap();
            let oracle = QuadratureCdf::new(&spec, -12.0, 12.0, 240_000);
            assert!((oracle.cdf(12.0) - 1.0).abs() < 1e-9);
            let s = spec.sampler().unwrap();
            let mut rng = stream(100 + k as u64);
            let draws: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut rng)).collect();
            let d = ks_one_sample(&draws, |x| oracle.cdf(x));
            assert!(d < 0.002, "alpha={alpha} KS {d}");
        }
    }

    #[test]
    fn tilted_t_matches_quadrature() {
        let spec = TiltedInnovationSpec::new(InnovationSpec::StandardizedT { nu: 4.0 }, 2.6).unwrap();
        // density decays like |x|^-2.4; the grid tail beyond 2000 holds < 1e-3 mass
        let oracle = QuadratureCdf::new(&spec, -2000.0, 2000.0, 4_000_000);
        let s = spec.sampler().unwrap();
        let mut rng = stream(7);
        let draws: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut rng)).collect();
        let d = ks_one_sample(&draws, |x| oracle.cdf(x));
        assert!(d < 0.003, "KS {d}");
    }

    #[test]
    fn tilted_normal_second_moment() {
        let spec = TiltedInnovationSpec::new(InnovationSpec::StandardNormal, 2.0).unwrap();
        let s = spec.sampler().unwrap();
        let mut rng = stream(21);
        let n = 1_000_000;
        let sq: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).powi(2)).collect();
        let (m, v) = mean_var(&sq);
        assert!((m - 3.0).abs() < 3.0 * (v / n as f64).sqrt(), "{m}");
    }

    #[test]
    fn tilted_small_alpha_approaches_base() {
        let spec = TiltedInnovationSpec::new(InnovationSpec::StandardNormal, 0.001).unwrap();
        let s = spec.sampler().unwrap();
        let mut rng = stream(22);
        let draws: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut rng)).collect();
        let d = ks_one_sample(&draws, crate::stats::normal_cdf);
        assert!(d < 0.005, "KS {d}");
    }

    #[test]
    fn tilted_normal_tail_probability_matches_quadrature() {
        let spec = TiltedInnovationSpec::new(InnovationSpec::StandardNormal, 4.02).unwrap();
        let oracle = 2.0 * simpson(|x| spec.density(x), 2.0, 14.0, 200_000);
        let s = spec.sampler().unwrap();
        let mut rng = stream(23);
        let n = 1_000_000u64;
        let hits = (0..n).filter(|_| s.sample(&mut rng).abs() > 2.0).count() as u64;
        let est = crate::stats::Estimate::proportion(hits, n);
        assert!((est.value - oracle).abs() < 3.0 * est.std_error, "{est:?} vs {oracle}");
    }

    #[test]
    fn pareto_inverse_cdf() {
        assert_eq!(pareto_from_uniform(1.0, 0.25), 4.0);
        assert_eq!(pareto_from_uniform(2.0, 0.25), 2.0);
        assert!(sample_standard_pareto(0.0, &mut stream(1)).is_err());
        let mut rng = stream(31);
        let n = 1_000_000u64;
        let hits = (0..n)
            .filter(|_| sample_standard_pareto(4.0, &mut rng).unwrap() > 2.0)
            .count() as u64;
        let est = crate::stats::Estimate::proportion(hits, n);
        assert!((est.value - 0.0625).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn gamma_sampler_moments_and_chi_square() {
        let mut rng = stream(41);
        let n = 1_000_000;
        let exp: Vec<f64> = (0..n).map(|_| gamma_sample(1.0, 2.0, &mut rng).unwrap()).collect();
        let (m, _) = mean_var(&exp);
        assert!((m - 2.0).abs() < 3.0 * 2.0 / 1000.0);

        let g: Vec<f64> = (0..n).map(|_| gamma_sample(2.51, 2.0, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&g);
        assert!((m - 5.02).abs() < 3.0 * (v / n as f64).sqrt());

        let chi: Vec<f64> = (0..n).map(|_| gamma_sample(0.5, 2.0, &mut rng).unwrap()).collect();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let law = ChiSquared::new(1.0).unwrap();
        let d = ks_one_sample(&chi, |x| law.cdf(x));
        assert!(d < 0.002, "KS {d}");

        assert!(gamma_sample(0.0, 1.0, &mut rng).is_err());
        assert!(gamma_sample(1.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn samplers_are_deterministic_in_the_stream() {
        let spec = TiltedInnovationSpec::new(InnovationSpec::StandardizedT { nu: 4.0 }, 2.6).unwrap();
        let s = spec.sampler().unwrap();
        let a: Vec<u64> = {
            let mut r = stream(5);
            (0..100).map(|_| s.sample(&mut r).to_bits()).collect()
        };
        let b: Vec<u64> = {
            let mut r = stream(5);
            (0..100).map(|_| s.sample(&mut r).to_bits()).collect()
        };
        assert_eq!(a, b);
    }
}
