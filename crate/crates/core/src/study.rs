//! Replicated simulation study: TQ and OS estimates computed on shared
//! series, paired summaries, and CSV/SVG reports.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::bootstrap::{bootstrap_ci, MultiplierSpec};
use crate::error::{domain, Error, Result};
use crate::estimators::{estimate, resolve_threshold, EstimatorKind, ThresholdSpec};
use crate::models::{ModelSpec, SeriesRequest};
use crate::rng::{derive_seed, Label};
use crate::stats::{ks_two_sample, mean_var, sorted};
use crate::truth::{marginal_quantile, QuantileMethod};

pub const ESTIMATES_HEADER: [&str; 11] = [
    "model",
    "replicate",
    "kind",
    "lag",
    "x",
    "beta",
    "mode",
    "threshold_value",
    "exceedances",
    "alpha_hat",
    "estimate",
];

/// The eight models of the reference study.
pub const DEFAULT_MODELS: [&str; 8] = [
    "ngarch",
    "tgarch",
    "tcopula-0.25",
    "tcopula-0.5",
    "tcopula-0.75",
    "gumcopula-1.2",
    "gumcopula-1.5",
    "gumcopula-2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Theoretical quantile of `|X_0|`.
    Tq,
    /// Order statistic `|X|_{(n-k)}`, `k = round(n (1 - beta))`.
    Os,
}

impl ThresholdMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdMode::Tq => "TQ",
            ThresholdMode::Os => "OS",
        }
    }
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tq" => Ok(ThresholdMode::Tq),
            "os" => Ok(ThresholdMode::Os),
            other => Err(Error::Config(format!("unknown threshold mode {other:?}"))),
        }
    }
}

/// `k = round(n (1 - beta))`.
pub fn os_k(n: usize, beta: f64) -> usize {
    (n as f64 * (1.0 - beta)).round() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSettings {
    pub multiplier: MultiplierSpec,
    pub level: f64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            multiplier: MultiplierSpec::default(),
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Full specs or preset names such as `"ngarch"`.
    #[serde(deserialize_with = "models_or_presets")]
    pub models: Vec<ModelSpec>,
    pub n: usize,
    pub replications: usize,
    pub levels: Vec<f64>,
    pub lags: Vec<i64>,
    pub arguments: Vec<f64>,
    pub kinds: Vec<EstimatorKind>,
    pub modes: Vec<ThresholdMode>,
    pub bootstrap: Option<BootstrapSettings>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// JSON table of Monte Carlo quantiles, read if present and written after computing.
    pub quantile_cache: Option<PathBuf>,
    /// Used for TQ thresholds without a closed form.
    pub quantile_method: QuantileMethod,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            models: DEFAULT_MODELS
                .iter()
                .map(|m| ModelSpec::preset(m).expect("preset"))
                .collect(),
            n: 2000,
            replications: 1000,
            levels: vec![0.9, 0.95],
            lags: vec![1, 3, 5],
            arguments: vec![0.5, 1.0],
            kinds: vec![EstimatorKind::Forward, EstimatorKind::Backward],
            modes: vec![ThresholdMode::Tq, ThresholdMode::Os],
            bootstrap: None,
            master_seed: 0,
            output_dir: PathBuf::from("study-out"),
            quantile_cache: None,
            quantile_method: QuantileMethod::desk(1),
        }
    }
}

fn models_or_presets<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ModelSpec>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Preset(String),
        Spec(ModelSpec),
    }
    Vec::<Entry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            Entry::Spec(m) => Ok(m),
            Entry::Preset(name) => ModelSpec::preset(&name)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown model preset {name:?}"))),
        })
        .collect()
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.kinds.is_empty() || self.modes.is_empty() || self.levels.is_empty() {
            return Err(Error::Config("models, kinds, modes and levels must be non-empty".into()));
        }
        if self.replications < 2 {
            return Err(Error::Config(format!("replications = {} (need >= 2)", self.replications)));
        }
        let mut tags = HashSet::new();
        for m in &self.models {
            m.validate()?;
            if !tags.insert(m.tag()) {
                return Err(Error::Config(format!("model {} listed twice", m.tag())));
            }
        }
        for &beta in &self.levels {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(domain("beta", beta, "in (0, 1)"));
            }
            let k = os_k(self.n, beta);
            if self.modes.contains(&ThresholdMode::Os) && (k == 0 || k >= self.n) {
                return Err(Error::Config(format!("k = {k} at beta = {beta}, n = {} is not in [1, n)", self.n)));
            }
        }
        let needs_lags = self.kinds.iter().any(|k| *k != EstimatorKind::Hill);
        if needs_lags {
            if self.lags.is_empty() || self.arguments.is_empty() {
                return Err(Error::Config("forward/backward estimators need lags and arguments".into()));
            }
            if self.lags.contains(&0) {
                return Err(Error::UnsupportedLag(0));
            }
            if let Some(x) = self.arguments.iter().find(|x| !x.is_finite()) {
                return Err(domain("x", *x, "finite"));
            }
        }
        if let Some(b) = &self.bootstrap {
            if !(b.level > 0.0 && b.level < 1.0) || b.multiplier.replicates == 0 {
                return Err(Error::Config("bootstrap needs level in (0, 1) and replicates >= 1".into()));
            }
        }
        Ok(())
    }

    fn max_lag(&self) -> usize {
        self.lags.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0).max(1)
    }

    /// `(lag, x)` pairs evaluated for `kind`.
    fn arguments_for(&self, kind: EstimatorKind) -> Vec<(i64, f64)> {
        if kind == EstimatorKind::Hill {
            return vec![(0, 0.0)];
        }
        self.lags
            .iter()
            .flat_map(|&t| self.arguments.iter().map(move |&x| (t, x)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEntry {
    pub model: String,
    pub beta: f64,
    pub value: f64,
    pub std_error: f64,
    pub method: QuantileMethod,
}

/// TQ thresholds per `(model, beta)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub entries: Vec<QuantileEntry>,
}

impl QuantileTable {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn lookup(&self, model: &str, beta: f64) -> Option<&QuantileEntry> {
        self.entries.iter().find(|e| e.model == model && e.beta == beta)
    }
}

/// Resolves every TQ threshold the config needs: closed form where the
/// model has one, otherwise the cache, otherwise `quantile_method` (and the
/// cache is rewritten).
pub fn resolve_quantiles(config: &StudyConfig) -> Result<QuantileTable> {
    let mut table = QuantileTable::default();
    if !config.modes.contains(&ThresholdMode::Tq) {
        return Ok(table);
    }
    let cached = match &config.quantile_cache {
        Some(p) if p.exists() => QuantileTable::load(p)?,
        _ => QuantileTable::default(),
    };
    let mut computed = false;
    for model in &config.models {
        let tag = model.tag();
        for &beta in &config.levels {
            let entry = if let Some(value) = model.analytic_abs_quantile(beta) {
                QuantileEntry { model: tag.clone(), beta, value, std_error: 0.0, method: QuantileMethod::Analytic }
            } else if let Some(e) = cached.lookup(&tag, beta) {
                e.clone()
            } else {
                computed = true;
                let est = marginal_quantile(model, beta, &config.quantile_method)?;
                QuantileEntry {
                    model: tag.clone(),
                    beta,
                    value: est.value,
                    std_error: est.std_error,
                    method: config.quantile_method,
                }
            };
            table.entries.push(entry);
        }
    }
    if computed {
        if let Some(p) = &config.quantile_cache {
            let mut merged = cached;
            for e in &table.entries {
                if e.method != QuantileMethod::Analytic && merged.lookup(&e.model, e.beta).is_none() {
                    merged.entries.push(e.clone());
                }
            }
            merged.save(p)?;
        }
    }
    Ok(table)
}

/// One estimate of the study; `estimate` is `None` for replicates without exceedances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub model: String,
    pub replicate: usize,
    pub kind: EstimatorKind,
    pub lag: i64,
    pub x: f64,
    pub beta: f64,
    pub mode: ThresholdMode,
    pub threshold_value: f64,
    pub exceedances: usize,
    pub alpha_hat: Option<f64>,
    pub estimate: Option<f64>,
    /// Checksum of the series the record was computed on.
    pub checksum: u64,
    /// Multiplier bootstrap interval, when requested and reliable.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub quantiles: QuantileTable,
    /// Ordered by model, replicate, beta, mode, kind, lag, x.
    pub records: Vec<StudyRecord>,
}

/// Seed of replicate `r` of `model`.
pub fn series_seed(master: u64, model: &str, r: usize) -> u64 {
    derive_seed(master, &[Label::Str("series"), Label::Str(model), Label::Int(r as u64)])
}

pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let quantiles = resolve_quantiles(config)?;
    let mut records = Vec::new();
    for model in &config.models {
        let tag = model.tag();
        let per_rep = (0..config.replications)
            .into_par_iter()
            .map(|r| replicate_records(config, &quantiles, model, &tag, r))
            .collect::<Result<Vec<_>>>()?;
        records.extend(per_rep.into_iter().flatten());
    }
    Ok(StudyResult {
        config: config.clone(),
        quantiles,
        records,
    })
}

fn replicate_records(
    config: &StudyConfig,
    quantiles: &QuantileTable,
    model: &ModelSpec,
    tag: &str,
    r: usize,
) -> Result<Vec<StudyRecord>> {
    let req = SeriesRequest::new(config.n, config.max_lag());
    let ts = model.generate_seeded(&req, series_seed(config.master_seed, tag, r))?;
    let checksum = ts.checksum();
    let mut out = Vec::new();
    for (bi, &beta) in config.levels.iter().enumerate() {
        for &mode in &config.modes {
            let spec = match mode {
                ThresholdMode::Os => ThresholdSpec::OrderStatistic { k: os_k(config.n, beta) },
                ThresholdMode::Tq => {
                    let e = quantiles
                        .lookup(tag, beta)
                        .ok_or_else(|| Error::Config(format!("no quantile for {tag} at beta = {beta}")))?;
                    ThresholdSpec::QuantileLevel { beta, value: e.value }
                }
            };
            let exc = resolve_threshold(&ts, spec)?;
            for &kind in &config.kinds {
                for (qi, (lag, x)) in config.arguments_for(kind).into_iter().enumerate() {
                    let rec = if exc.is_empty() {
                        None
                    } else {
                        match estimate(&ts, kind, lag, x, &exc) {
                            Ok(rec) => Some(rec),
                            Err(Error::NoExceedances { .. }) => None,
                            Err(e) => return Err(e),
                        }
                    };
                    let interval = match (&config.bootstrap, &rec) {
                        (Some(b), Some(_)) if kind != EstimatorKind::Hill => {
                            let seed = derive_seed(
                                config.master_seed,
                                &[
                                    Label::Str("bootstrap"),
                                    Label::Str(tag),
                                    Label::Int(r as u64),
                                    Label::Int(bi as u64),
                                    Label::Str(mode.as_str()),
                                    Label::Str(kind.as_str()),
                                    Label::Int(qi as u64),
                                ],
                            );
                            match bootstrap_ci(&ts, kind, lag, x, spec, &b.multiplier, b.level, seed) {
                                Ok(res) => Some((res.lower, res.upper)),
                                Err(Error::UnreliableBootstrap { .. }) => None,
                                Err(e) => return Err(e),
                            }
                        }
                        _ => None,
                    };
                    out.push(StudyRecord {
                        model: tag.to_string(),
                        replicate: r,
                        kind,
                        lag,
                        x,
                        beta,
                        mode,
                        threshold_value: exc.threshold_value,
                        exceedances: exc.count(),
                        alpha_hat: rec.and_then(|r| r.alpha_hat),
                        estimate: rec.map(|r| r.estimate),
                        checksum,
                        interval,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Every replicate's records share one series checksum.
pub fn check_paired_design(result: &StudyResult) -> Result<()> {
    let mut seen: BTreeMap<(&str, usize), u64> = BTreeMap::new();
    for rec in &result.records {
        let c = *seen.entry((&rec.model, rec.replicate)).or_insert(rec.checksum);
        if c != rec.checksum {
            return Err(Error::Precondition(format!(
                "replicate {} of {} mixes series {c:x} and {:x}",
                rec.replicate, rec.model, rec.checksum
            )));
        }
    }
    Ok(())
}

/// One `(model, kind, lag, x, beta)` cell, compared across modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryQuery {
    pub model: String,
    pub kind: EstimatorKind,
    pub lag: i64,
    pub x: f64,
    pub beta: f64,
}

impl SummaryQuery {
    fn matches(&self, r: &StudyRecord) -> bool {
        r.model == self.model && r.kind == self.kind && r.lag == self.lag && r.x == self.x && r.beta == self.beta
    }

    /// File-name stem, e.g. `ngarch_forward_t1_x0.5_b0.9`.
    pub fn stem(&self) -> String {
        format!("{}_{}_t{}_x{}_b{}", self.model, self.kind.as_str(), self.lag, self.x, self.beta)
    }
}

/// All cells of a result in record order.
pub fn queries(result: &StudyResult) -> Vec<SummaryQuery> {
    let mut out: Vec<SummaryQuery> = Vec::new();
    for r in &result.records {
        if !out.iter().any(|q| q.matches(r)) {
            out.push(SummaryQuery { model: r.model.clone(), kind: r.kind, lag: r.lag, x: r.x, beta: r.beta });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub count: usize,
    pub missing: usize,
    pub mean: f64,
    pub sd: f64,
    /// Estimates outside `[0, 1]` (cdf estimators only).
    pub out_of_range: usize,
    /// `(value, cumulative fraction)` at each sorted estimate.
    pub ecdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySummary {
    pub query: SummaryQuery,
    pub tq: Option<ModeSummary>,
    pub os: Option<ModeSummary>,
    /// Replicates where both modes produced an estimate.
    pub paired: usize,
    /// `(rank, tq_sorted, os_sorted)` over the paired replicates.
    pub qq: Vec<(usize, f64, f64)>,
    /// `var(TQ - OS) / var(TQ)`; `None` when `var(TQ) = 0`.
    pub variance_ratio: Option<f64>,
    pub ks: Option<f64>,
    /// `|mean TQ - mean OS| / sd TQ`; `None` when `sd TQ = 0`.
    pub mean_diff_over_sd: Option<f64>,
}

fn mode_summary(kind: EstimatorKind, values: &[Option<f64>]) -> ModeSummary {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let s = sorted(&present);
    let m = s.len() as f64;
    let (mean, var) = if s.len() >= 2 { mean_var(&s) } else { (s.first().copied().unwrap_or(f64::NAN), f64::NAN) };
    ModeSummary {
        count: s.len(),
        missing: values.len() - s.len(),
        mean,
        sd: var.sqrt(),
        out_of_range: if kind == EstimatorKind::Hill { 0 } else { s.iter().filter(|v| !(0.0..=1.0).contains(*v)).count() },
        ecdf: s.iter().enumerate().map(|(i, v)| (*v, (i + 1) as f64 / m)).collect(),
    }
}

pub fn summarize(result: &StudyResult, query: &SummaryQuery) -> Result<QuerySummary> {
    let mut by_rep: BTreeMap<usize, [Option<Option<f64>>; 2]> = BTreeMap::new();
    for r in result.records.iter().filter(|r| query.matches(r)) {
        let slot = match r.mode {
            ThresholdMode::Tq => 0,
            ThresholdMode::Os => 1,
        };
        by_rep.entry(r.replicate).or_default()[slot] = Some(r.estimate);
    }
    if by_rep.is_empty() {
        return Err(Error::Precondition(format!("no records for {}", query.stem())));
    }
    let column = |slot: usize| -> Option<Vec<Option<f64>>> {
        let col: Vec<Option<f64>> = by_rep.values().filter_map(|v| v[slot]).collect();
        (!col.is_empty()).then_some(col)
    };
    let tq = column(0).map(|c| mode_summary(query.kind, &c));
    let os = column(1).map(|c| mode_summary(query.kind, &c));
    let pairs: Vec<(f64, f64)> = by_rep
        .values()
        .filter_map(|v| match v {
            [Some(Some(a)), Some(Some(b))] => Some((*a, *b)),
            _ => None,
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let (mut variance_ratio, mut ks, mut mean_diff_over_sd) = (None, None, None);
    if pairs.len() >= 2 {
        let (ma, va) = mean_var(&a);
        let (mb, _) = mean_var(&b);
        let diff: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
        let (_, vd) = mean_var(&diff);
        if va > 0.0 {
            variance_ratio = Some(vd / va);
            mean_diff_over_sd = Some((ma - mb).abs() / va.sqrt());
        }
        ks = Some(ks_two_sample(&a, &b));
    }
    let qq = sorted(&a)
        .into_iter()
        .zip(sorted(&b))
        .enumerate()
        .map(|(i, (x, y))| (i + 1, x, y))
        .collect();
    Ok(QuerySummary {
        query: query.clone(),
        tq,
        os,
        paired: pairs.len(),
        qq,
        variance_ratio,
        ks,
        mean_diff_over_sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFormats {
    pub csv: bool,
    pub svg: bool,
}

impl Default for ReportFormats {
    fn default() -> Self {
        Self { csv: true, svg: true }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

/// Writes the raw estimates with the fixed column schema.
pub fn write_estimates_csv(records: &[StudyRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ESTIMATES_HEADER)?;
    for r in records {
        w.write_record([
            r.model.clone(),
            r.replicate.to_string(),
            r.kind.as_str().to_string(),
            r.lag.to_string(),
            fmt_f(r.x),
            fmt_f(r.beta),
            r.mode.as_str().to_string(),
            fmt_f(r.threshold_value),
            r.exceedances.to_string(),
            fmt_opt(r.alpha_hat),
            fmt_opt(r.estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {what} from {field:?}")))
}

fn parse_opt(field: &str, what: &str) -> Result<Option<f64>> {
    if field.is_empty() { Ok(None) } else { parse(field, what).map(Some) }
}

/// Reads records back; checksums and intervals are filled from their side files by [`load_study`].
pub fn read_estimates_csv(path: &Path) -> Result<Vec<StudyRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    if rd.headers()?.iter().ne(ESTIMATES_HEADER) {
        return Err(Error::Config(format!("{} does not have the estimates header", path.display())));
    }
    rd.records()
        .map(|row| {
            let row = row?;
            Ok(StudyRecord {
                model: row[0].to_string(),
                replicate: parse(&row[1], "replicate")?,
                kind: row[2].parse()?,
                lag: parse(&row[3], "lag")?,
                x: parse(&row[4], "x")?,
                beta: parse(&row[5], "beta")?,
                mode: row[6].parse()?,
                threshold_value: parse(&row[7], "threshold_value")?,
                exceedances: parse(&row[8], "exceedances")?,
                alpha_hat: parse_opt(&row[9], "alpha_hat")?,
                estimate: parse_opt(&row[10], "estimate")?,
                checksum: 0,
                interval: None,
            })
        })
        .collect()
}

/// Everything `study report` needs, written by [`save_study`].
pub fn save_study(result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![dir.join("config.json"), dir.join("quantiles.json"), dir.join("estimates.csv"), dir.join("replicates.csv")];
    fs::write(&files[0], serde_json::to_string_pretty(&result.config)?)?;
    result.quantiles.save(&files[1])?;
    write_estimates_csv(&result.records, &files[2])?;
    let mut w = csv::Writer::from_path(&files[3])?;
    w.write_record(["model", "replicate", "checksum"])?;
    let mut seen = HashSet::new();
    for r in &result.records {
        if seen.insert((&r.model, r.replicate)) {
            w.write_record([r.model.clone(), r.replicate.to_string(), format!("{:016x}", r.checksum)])?;
        }
    }
    w.flush()?;
    if result.records.iter().any(|r| r.interval.is_some()) {
        let path = dir.join("bootstrap.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["model", "replicate", "kind", "lag", "x", "beta", "mode", "lower", "upper"])?;
        for r in &result.records {
            if let Some((lo, hi)) = r.interval {
                w.write_record([
                    r.model.clone(),
                    r.replicate.to_string(),
                    r.kind.as_str().to_string(),
                    r.lag.to_string(),
                    fmt_f(r.x),
                    fmt_f(r.beta),
                    r.mode.as_str().to_string(),
                    fmt_f(lo),
                    fmt_f(hi),
                ])?;
            }
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

pub fn load_study(dir: &Path) -> Result<StudyResult> {
    let config = StudyConfig::load(&dir.join("config.json"))?;
    let quantiles = QuantileTable::load(&dir.join("quantiles.json"))?;
    let mut records = read_estimates_csv(&dir.join("estimates.csv"))?;
    let mut checksums = BTreeMap::new();
    for row in csv::Reader::from_path(dir.join("replicates.csv"))?.records() {
        let row = row?;
        let c = u64::from_str_radix(&row[2], 16).map_err(|_| Error::Config(format!("bad checksum {:?}", &row[2])))?;
        checksums.insert((row[0].to_string(), parse::<usize>(&row[1], "replicate")?), c);
    }
    for r in &mut records {
        r.checksum = *checksums
            .get(&(r.model.clone(), r.replicate))
            .ok_or_else(|| Error::Config(format!("no checksum for {} replicate {}", r.model, r.replicate)))?;
    }
    let boot = dir.join("bootstrap.csv");
    if boot.exists() {
        let mut intervals = BTreeMap::new();
        for row in csv::Reader::from_path(&boot)?.records() {
            let row = row?;
            let key = (row[0].to_string(), row[1].to_string(), row[2].to_string(), row[3].to_string(), row[4].to_string(), row[5].to_string(), row[6].to_string());
            intervals.insert(key, (parse::<f64>(&row[7], "lower")?, parse::<f64>(&row[8], "upper")?));
        }
        for r in &mut records {
            let key = (r.model.clone(), r.replicate.to_string(), r.kind.as_str().to_string(), r.lag.to_string(), fmt_f(r.x), fmt_f(r.beta), r.mode.as_str().to_string());
            r.interval = intervals.get(&key).copied();
        }
    }
    Ok(StudyResult { config, quantiles, records })
}

/// Writes summaries, Q-Q and ECDF tables and figures under `dir`.
pub fn emit_report(result: &StudyResult, dir: &Path, formats: ReportFormats) -> Result<Vec<PathBuf>> {
    let qs = queries(result);
    let summaries = qs.iter().map(|q| summarize(result, q)).collect::<Result<Vec<_>>>()?;
    let mut files = Vec::new();
    if formats.csv {
        let tables = dir.join("tables");
        fs::create_dir_all(&tables)?;
        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "model", "kind", "lag", "x", "beta", "paired", "mean_tq", "sd_tq", "mean_os", "sd_os", "variance_ratio",
            "ks", "mean_diff_over_sd", "out_of_range_tq", "out_of_range_os", "missing_tq", "missing_os",
        ])?;
        for s in &summaries {
            let q = &s.query;
            let m = |o: &Option<ModeSummary>, f: fn(&ModeSummary) -> f64| o.as_ref().map(f).map(fmt_f).unwrap_or_default();
            let c = |o: &Option<ModeSummary>, f: fn(&ModeSummary) -> usize| o.as_ref().map(f).map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                q.model.clone(),
                q.kind.as_str().into(),
                q.lag.to_string(),
                fmt_f(q.x),
                fmt_f(q.beta),
                s.paired.to_string(),
                m(&s.tq, |m| m.mean),
                m(&s.tq, |m| m.sd),
                m(&s.os, |m| m.mean),
                m(&s.os, |m| m.sd),
                s.variance_ratio.map(fmt_f).unwrap_or_else(|| "undefined".into()),
                fmt_opt(s.ks),
                fmt_opt(s.mean_diff_over_sd),
                c(&s.tq, |m| m.out_of_range),
                c(&s.os, |m| m.out_of_range),
                c(&s.tq, |m| m.missing),
                c(&s.os, |m| m.missing),
            ])?;
            let qq_path = tables.join(format!("qq_{}.csv", q.stem()));
            let mut qw = csv::Writer::from_path(&qq_path)?;
            qw.write_record(["rank", "tq_sorted", "os_sorted"])?;
            for (rank, a, b) in &s.qq {
                qw.write_record([rank.to_string(), fmt_f(*a), fmt_f(*b)])?;
            }
            qw.flush()?;
            files.push(qq_path);
            for (mode, ms) in [("tq", &s.tq), ("os", &s.os)] {
                let Some(ms) = ms else { continue };
                let p = tables.join(format!("ecdf_{mode}_{}.csv", q.stem()));
                let mut ew = csv::Writer::from_path(&p)?;
                ew.write_record(["value", "cum_fraction"])?;
                for (v, c) in &ms.ecdf {
                    ew.write_record([fmt_f(*v), fmt_f(*c)])?;
                }
                ew.flush()?;
                files.push(p);
            }
        }
        w.flush()?;
        files.push(path);
    }
    if formats.svg {
        let figs = dir.join("figures");
        fs::create_dir_all(&figs)?;
        let mut groups: Vec<(String, i64, f64)> = Vec::new();
        for q in summaries.iter().map(|s| &s.query).filter(|q| q.kind != EstimatorKind::Hill) {
            if !groups.iter().any(|g| g.0 == q.model && g.1 == q.lag && g.2 == q.x) {
                groups.push((q.model.clone(), q.lag, q.x));
            }
        }
        for (model, lag, x) in groups {
            let cells: Vec<&QuerySummary> = summaries
                .iter()
                .filter(|s| s.query.model == model && s.query.lag == lag && s.query.x == x && s.query.kind != EstimatorKind::Hill)
                .collect();
            for (name, svg) in [("qq", render_qq(&cells)), ("ecdf", render_ecdf(&cells))] {
                let p = figs.join(format!("{name}_{model}_t{lag}_x{x}.svg"));
                fs::write(&p, svg)?;
                files.push(p);
            }
        }
    }
    Ok(files)
}

const PANEL: f64 = 260.0;
const PAD: f64 = 40.0;

/// Panels laid out with kinds as rows and levels as columns.
fn layout(cells: &[&QuerySummary]) -> (Vec<EstimatorKind>, Vec<f64>) {
    let mut kinds: Vec<EstimatorKind> = cells.iter().map(|c| c.query.kind).collect();
    kinds.sort();
    kinds.dedup();
    let mut betas: Vec<f64> = cells.iter().map(|c| c.query.beta).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    (kinds, betas)
}

fn svg_open(rows: usize, cols: usize) -> String {
    let w = cols as f64 * (PANEL + PAD) + PAD;
    let h = rows as f64 * (PANEL + PAD) + PAD;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

struct Frame {
    x0: f64,
    y0: f64,
    lo: f64,
    hi: f64,
    ylo: f64,
    yhi: f64,
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        self.x0 + (v - self.lo) / (self.hi - self.lo) * PANEL
    }

    fn py(&self, v: f64) -> f64 {
        self.y0 + PANEL - (v - self.ylo) / (self.yhi - self.ylo) * PANEL
    }
}

fn panel(svg: &mut String, row: usize, col: usize, title: &str) -> (f64, f64) {
    let x0 = PAD + col as f64 * (PANEL + PAD);
    let y0 = PAD + row as f64 * (PANEL + PAD);
    let _ = writeln!(
        svg,
        "<g class=\"panel\"><rect x=\"{x0}\" y=\"{y0}\" width=\"{PANEL}\" height=\"{PANEL}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{title}</text>",
        x0 + PANEL / 2.0,
        y0 - 8.0
    );
    (x0, y0)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn render_qq(cells: &[&QuerySummary]) -> String {
    let (kinds, betas) = layout(cells);
    let mut svg = svg_open(kinds.len(), betas.len());
    for (row, kind) in kinds.iter().enumerate() {
        for (col, beta) in betas.iter().enumerate() {
            let Some(c) = cells.iter().find(|c| c.query.kind == *kind && c.query.beta == *beta) else { continue };
            let (x0, y0) = panel(&mut svg, row, col, &format!("{} beta={beta}: TQ vs OS", kind.as_str()));
            let (lo, hi) = range(c.qq.iter().flat_map(|(_, a, b)| [*a, *b]));
            let f = Frame { x0, y0, lo, hi, ylo: lo, yhi: hi };
            let _ = writeln!(
                svg,
                "<path class=\"diagonal\" d=\"M{:.2},{:.2} L{:.2},{:.2}\" stroke=\"grey\" fill=\"none\"/>",
                f.px(lo),
                f.py(lo),
                f.px(hi),
                f.py(hi)
            );
            for (_, a, b) in &c.qq {
                let _ = writeln!(svg, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\"/>", f.px(*a), f.py(*b));
            }
            svg.push_str("</g>\n");
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_ecdf(cells: &[&QuerySummary]) -> String {
    let (kinds, betas) = layout(cells);
    let mut svg = svg_open(kinds.len(), betas.len());
    for (row, kind) in kinds.iter().enumerate() {
        for (col, beta) in betas.iter().enumerate() {
            let Some(c) = cells.iter().find(|c| c.query.kind == *kind && c.query.beta == *beta) else { continue };
            let (x0, y0) = panel(&mut svg, row, col, &format!("{} beta={beta}: ECDF", kind.as_str()));
            let all = [&c.tq, &c.os];
            let (lo, hi) = range(all.iter().flat_map(|m| m.iter().flat_map(|m| m.ecdf.iter().map(|p| p.0))));
            let f = Frame { x0, y0, lo, hi, ylo: 0.0, yhi: 1.0 };
            for (m, colour) in [(&c.tq, "black"), (&c.os, "red")] {
                let Some(m) = m else { continue };
                let mut d = format!("M{:.2},{:.2}", f.px(lo), f.py(0.0));
                let mut prev = 0.0;
                for (v, cum) in &m.ecdf {
                    let _ = write!(d, " L{:.2},{:.2} L{:.2},{:.2}", f.px(*v), f.py(prev), f.px(*v), f.py(*cum));
                    prev = *cum;
                }
                let _ = write!(d, " L{:.2},{:.2}", f.px(hi), f.py(prev));
                let _ = writeln!(svg, "<path class=\"ecdf\" d=\"{d}\" stroke=\"{colour}\" fill=\"none\"/>");
            }
            svg.push_str("</g>\n");
        }
    }
    svg.push_str("</svg>\n");
    svg
}
