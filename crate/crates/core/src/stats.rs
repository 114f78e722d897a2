//! Small descriptive-statistics helpers shared by the Monte Carlo code.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
        }
    }

    /// Mean of `values` with standard error `sd / sqrt(len)`.
    pub fn from_samples(values: &[f64]) -> Self {
        let (m, v) = mean_var(values);
        Self {
            value: m,
            std_error: (v / values.len() as f64).sqrt(),
        }
    }

    /// Binomial proportion `hits / n` with its standard error.
    pub fn proportion(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    /// |self - other| measured in combined standard errors.
    pub fn z_distance(&self, other: &Estimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        (self.value - other.value).abs() / se
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and unbiased variance (variance is 0 for fewer than two values).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(xs);
    if n < 2 {
        return (m, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (m, ss / (n - 1) as f64)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    mean_var(xs).1.sqrt()
}

/// Sample skewness and excess kurtosis (moment estimators).
pub fn skew_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Linear-interpolation quantile of already sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let s = sorted(xs);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        // ties share one jump
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let f = cdf(s[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance, correct under ties.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let sa = sorted(a);
    let sb = sorted(b);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}


/// Kendall's tau-a for continuous data in O(n log n) (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let pairs = (n * (n - 1) / 2) as f64;
    (pairs - 2.0 * swaps as f64) / pairs
}

fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}


/// Draws per Monte Carlo work unit; each unit owns one derived stream.
pub const MC_CHUNK: usize = 1 << 16;

fn chunks(n: usize) -> impl rayon::iter::IndexedParallelIterator<Item = (u64, usize)> {
    use rayon::prelude::*;
    let units = n.div_ceil(MC_CHUNK);
    (0..units)
        .into_par_iter()
        .map(move |j| (j as u64, MC_CHUNK.min(n - j * MC_CHUNK)))
}

/// Proportion of `n` draws for which `hit` returns true.
///
/// Work is split into fixed units with their own substreams, so the result is
/// independent of the thread count.
pub fn mc_proportion<F>(n: usize, seed: u64, hit: F) -> Estimate
where
    F: Fn(&mut crate::rng::Stream) -> bool + Sync,
{
    mc_try_proportion(n, seed, |rng| Ok(hit(rng))).expect("infallible draw")
}

/// [`mc_proportion`] for draws that can fail; the first error in unit order wins.
pub fn mc_try_proportion<F>(n: usize, seed: u64, hit: F) -> crate::Result<Estimate>
where
    F: Fn(&mut crate::rng::Stream) -> crate::Result<bool> + Sync,
{
    use rayon::prelude::*;
    let counts: Vec<crate::Result<u64>> = chunks(n)
        .map(|(j, len)| {
            let mut rng = crate::rng::substream(seed, j);
            let mut hits = 0u64;
            for _ in 0..len {
                hits += u64::from(hit(&mut rng)?);
            }
            Ok(hits)
        })
        .collect();
    let mut hits = 0;
    for c in counts {
        hits += c?;
    }
    Ok(Estimate::proportion(hits, n as u64))
}

/// Mean of `n` draws of `f` with its standard error, reduced in unit order.
pub fn mc_mean<F>(n: usize, seed: u64, f: F) -> Estimate
where
    F: Fn(&mut crate::rng::Stream) -> f64 + Sync,
{
    use rayon::prelude::*;
    let parts: Vec<(f64, f64)> = chunks(n)
        .map(|(j, len)| {
            let mut rng = crate::rng::substream(seed, j);
            let mut s = 0.0;
            let mut ss = 0.0;
            for _ in 0..len {
                let v = f(&mut rng);
                s += v;
                ss += v * v;
            }
            (s, ss)
        })
        .collect();
    let (s, ss) = parts
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, ss)| (a + s, b + ss));
    let nf = n as f64;
    let m = s / nf;
    let var = ((ss - nf * m * m) / (nf - 1.0)).max(0.0);
    Estimate {
        value: m,
        std_error: (var / nf).sqrt(),
    }
}
