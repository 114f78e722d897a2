//! `spectail`: generate series, compute ground truth, estimate, bootstrap,
//! run the simulation study and the limit-theory diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spectail::asymptotics::{
    cluster_moment_check, limit_covariance_mc, os_consistency_check, sre_condition_diagnostics, KRule, SreProbe,
    TailProcessSampler,
};
use spectail::bootstrap::{bootstrap_ci, MultiplierLaw, MultiplierSpec};
use spectail::estimators::{estimate, resolve_threshold, EstimatorKind, Phi, ThresholdSpec};
use spectail::models::{ModelSpec, SeriesRequest, TimeSeries};
use spectail::study::{emit_report, load_study, queries, run_study, save_study, summarize, ReportFormats, StudyConfig};
use spectail::truth::{
    garch_tail_index, garch_tail_index_quadrature, marginal_quantile_auto, preasymptotic_grid, spectral_survival,
    sre_tail_index, PreasymptoticConfig, QuantileMethod, SpectralQuery, DEFAULT_MC,
};

#[derive(Parser)]
#[command(name = "spectail", version, about = "Spectral tail process estimation and simulation")]
struct Cli {
    /// JSON file: a study config for `study run`, a model spec elsewhere.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a padded series and write it as `index,value` CSV.
    Generate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        max_lag: usize,
        #[arg(long)]
        burn_in: Option<usize>,
    },
    /// Ground-truth quantities for a model.
    Truth {
        #[command(flatten)]
        model: ModelArg,
        #[command(subcommand)]
        what: TruthCmd,
    },
    /// One estimate on a series file or a freshly simulated series.
    Estimate {
        #[command(flatten)]
        series: SeriesArg,
        #[command(flatten)]
        query: QueryArg,
    },
    /// Multiplier block bootstrap confidence interval.
    Bootstrap {
        #[command(flatten)]
        series: SeriesArg,
        #[command(flatten)]
        query: QueryArg,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long)]
        block_length: Option<usize>,
        #[arg(long, value_enum, default_value_t = Law::Rademacher)]
        law: Law,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Replicated TQ-vs-OS simulation study.
    Study {
        #[command(subcommand)]
        action: StudyCmd,
    },
    /// Numerical checks of the limit theory.
    Diagnose {
        #[command(flatten)]
        model: ModelArg,
        #[command(subcommand)]
        what: DiagnoseCmd,
    },
}

#[derive(Args)]
struct ModelArg {
    /// Preset: ngarch, tgarch, sre-lognormal, tcopula-<rho>, gumcopula-<theta>, pareto-<alpha>.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args)]
struct SeriesArg {
    /// Series CSV from `generate`; otherwise one is simulated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 2000)]
    n: usize,
}

#[derive(Args)]
struct QueryArg {
    #[arg(long, default_value = "forward")]
    kind: String,
    #[arg(long, default_value_t = 1)]
    lag: i64,
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    /// `os:<k>`, `tq:<beta>` or `u:<value>`.
    #[arg(long, default_value = "os:200")]
    threshold: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Rademacher,
    Uniform,
    Zero,
}

#[derive(Subcommand)]
enum TruthCmd {
    /// Tail index (GARCH: Monte Carlo root and quadrature; SRE: moment root).
    TailIndex {
        #[arg(long, default_value_t = DEFAULT_MC)]
        n_mc: usize,
    },
    /// Quantile of |X_0|.
    Quantile {
        #[arg(long)]
        beta: f64,
    },
    /// P{Theta_t > x}.
    Spectral {
        #[arg(long, default_value_t = 1)]
        lag: i64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = DEFAULT_MC)]
        n_mc: usize,
    },
    /// p_beta(x), e_beta(x), a_beta.
    Preasymptotic {
        #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.95])]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1])]
        lag: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5])]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        path_len: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
}

#[derive(Subcommand)]
enum StudyCmd {
    /// Run the study from `--config` and write estimates and reports to `--out`.
    Run {
        #[arg(long)]
        no_svg: bool,
    },
    /// Rebuild reports from a finished study directory (`--out`).
    Report {
        #[arg(long)]
        no_svg: bool,
    },
}

#[derive(Subcommand)]
enum DiagnoseCmd {
    /// Third moment of cluster sums over r v.
    Cluster {
        #[arg(long, value_delimiter = ',', default_values_t = [0.99, 0.995, 0.999])]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        r: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 10_000_000)]
        n_mc: usize,
    },
    /// X_{n-k:n} / F^<-(1 - k/n) along a grid of n with k = n^exponent.
    Os {
        #[arg(long, value_delimiter = ',', default_values_t = [2000, 8000, 32000])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.7)]
        exponent: f64,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// rho = E[C^xi], cross-lag probabilities and the power sum of an SRE.
    Sre {
        #[arg(long, value_delimiter = ',', default_values_t = [0.99, 0.995, 0.999])]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        xi: f64,
        #[arg(long, default_value_t = 10_000_000)]
        n_mc: usize,
    },
    /// Limit covariance of Z(phi1,1) with itself and with Z(phi0,1).
    Covariance {
        #[arg(long, default_value_t = 50)]
        truncation: usize,
        #[arg(long, default_value_t = 1_000_000)]
        n_mc: usize,
    },
}

fn model_spec(arg: &ModelArg, config: Option<&Path>) -> Result<ModelSpec> {
    match (&arg.model, config) {
        (Some(name), _) => ModelSpec::preset(name).with_context(|| format!("unknown model preset {name:?}")),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let m: ModelSpec = serde_json::from_str(&text).context("parsing model spec")?;
            m.validate()?;
            Ok(m)
        }
        (None, None) => bail!("give --model <preset> or --config <model.json>"),
    }
}

fn parse_threshold(s: &str, model: Option<&ModelSpec>, seed: u64) -> Result<ThresholdSpec> {
    let (mode, value) = s.split_once(':').context("threshold must look like os:<k>, tq:<beta> or u:<value>")?;
    Ok(match mode {
        "os" => ThresholdSpec::OrderStatistic { k: value.parse()? },
        "u" => ThresholdSpec::Deterministic { u: value.parse()? },
        "tq" => {
            let model = model.context("tq thresholds need --model")?;
            ThresholdSpec::quantile_level(model, value.parse()?, &QuantileMethod::desk(seed))?
        }
        other => bail!("unknown threshold mode {other:?}"),
    })
}

fn write_series(ts: &TimeSeries, out: Option<&Path>) -> Result<()> {
    let sink: Box<dyn std::io::Write> = match out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["index", "value"])?;
    let start = 1 - ts.max_lag() as i64;
    for (i, v) in ts.values().iter().enumerate() {
        w.write_record([(start + i as i64).to_string(), format!("{v:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn read_series(path: &Path) -> Result<TimeSeries> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut first = None;
    let mut values = Vec::new();
    for row in rd.records() {
        let row = row?;
        let i: i64 = row[0].parse()?;
        first.get_or_insert(i);
        values.push(row[1].parse::<f64>()?);
    }
    let first = first.context("empty series file")?;
    if first > 1 {
        bail!("series indices must start at or below 1");
    }
    let tag = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(TimeSeries::new(values, (1 - first) as usize, tag)?)
}

fn load_series(arg: &SeriesArg, lag: i64, config: Option<&Path>, seed: u64) -> Result<(TimeSeries, Option<ModelSpec>)> {
    let model = model_spec(&arg.model, config).ok();
    let ts = match (&arg.input, &model) {
        (Some(p), _) => read_series(p)?,
        (None, Some(m)) => m.generate_seeded(&SeriesRequest::new(arg.n, lag.unsigned_abs().max(1) as usize), seed)?,
        (None, None) => bail!("give --input <series.csv> or a model"),
    };
    Ok((ts, model))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    let out = cli.out.as_deref();
    let seed = cli.seed;
    match cli.command {
        Command::Generate { model, n, max_lag, burn_in } => {
            let m = model_spec(&model, config)?;
            let mut req = SeriesRequest::new(n, max_lag);
            if let Some(b) = burn_in {
                req = req.with_burn_in(b);
            }
            write_series(&m.generate_seeded(&req, seed)?, out)
        }
        Command::Truth { model, what } => {
            let m = model_spec(&model, config)?;
            match what {
                TruthCmd::TailIndex { n_mc } => match &m {
                    ModelSpec::Garch(g) => emit(
                        &serde_json::json!({
                            "monte_carlo": garch_tail_index(g, n_mc, 1e-10, seed)?,
                            "quadrature": garch_tail_index_quadrature(g, 1e-12)?,
                        }),
                        out,
                    ),
                    ModelSpec::Sre(s) => emit(&sre_tail_index(s, n_mc, 1e-10, seed)?, out),
                    ModelSpec::MarkovCopula(c) => emit(&serde_json::json!({ "alpha": c.marginal_nu }), out),
                    ModelSpec::IidPareto { alpha } => emit(&serde_json::json!({ "alpha": alpha }), out),
                },
                TruthCmd::Quantile { beta } => emit(&marginal_quantile_auto(&m, beta, &QuantileMethod::desk(seed))?, out),
                TruthCmd::Spectral { lag, x, n_mc } => emit(&spectral_survival(&m, SpectralQuery::new(lag, x)?, n_mc, seed)?, out),
                TruthCmd::Preasymptotic { beta, lag, x, path_len, reps } => {
                    let cfg = PreasymptoticConfig { path_len, reps, seed, quantile: QuantileMethod::desk(seed ^ 1) };
                    emit(&preasymptotic_grid(&m, &beta, &lag, &x, &cfg)?, out)
                }
            }
        }
        Command::Estimate { series, query } => {
            let (ts, model) = load_series(&series, query.lag, config, seed)?;
            let kind: EstimatorKind = query.kind.parse()?;
            let exc = resolve_threshold(&ts, parse_threshold(&query.threshold, model.as_ref(), seed)?)?;
            emit(&estimate(&ts, kind, query.lag, query.x, &exc)?, out)
        }
        Command::Bootstrap { series, query, replicates, block_length, law, level } => {
            let (ts, model) = load_series(&series, query.lag, config, seed)?;
            let kind: EstimatorKind = query.kind.parse()?;
            let law = match law {
                Law::Rademacher => MultiplierLaw::Rademacher,
                Law::Uniform => MultiplierLaw::UniformSymmetric,
                Law::Zero => MultiplierLaw::Zero,
            };
            let mult = MultiplierSpec { law, replicates, block_length };
            let threshold = parse_threshold(&query.threshold, model.as_ref(), seed)?;
            let res = bootstrap_ci(&ts, kind, query.lag, query.x, threshold, &mult, level, seed)?;
            emit(
                &serde_json::json!({
                    "point": res.point,
                    "level": res.level,
                    "lower": res.lower,
                    "upper": res.upper,
                    "block_length": res.block_length,
                    "degenerate_count": res.degenerate_count,
                    "replicates": res.replicates.len(),
                }),
                out,
            )
        }
        Command::Study { action } => match action {
            StudyCmd::Run { no_svg } => {
                let path = config.context("study run needs --config <study.json>")?;
                let mut cfg = StudyConfig::load(path)?;
                if let Some(o) = out {
                    cfg.output_dir = o.to_path_buf();
                }
                if seed != 0 {
                    cfg.master_seed = seed;
                }
                let res = run_study(&cfg)?;
                save_study(&res, &cfg.output_dir)?;
                let files = emit_report(&res, &cfg.output_dir, ReportFormats { csv: true, svg: !no_svg })?;
                eprintln!(
                    "{} records, {} report files in {}",
                    res.records.len(),
                    files.len(),
                    cfg.output_dir.display()
                );
                Ok(())
            }
            StudyCmd::Report { no_svg } => {
                let dir = out.context("study report needs --out <study dir>")?;
                let res = load_study(dir)?;
                emit_report(&res, dir, ReportFormats { csv: true, svg: !no_svg })?;
                let mut w = csv::Writer::from_writer(std::io::stdout().lock());
                w.write_record(["model", "kind", "lag", "x", "beta", "paired", "variance_ratio", "ks", "mean_diff_over_sd"])?;
                let f = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into());
                for q in queries(&res) {
                    let s = summarize(&res, &q)?;
                    w.write_record([
                        q.model.clone(),
                        q.kind.as_str().to_string(),
                        q.lag.to_string(),
                        q.x.to_string(),
                        q.beta.to_string(),
                        s.paired.to_string(),
                        f(s.variance_ratio),
                        f(s.ks),
                        f(s.mean_diff_over_sd),
                    ])?;
                }
                w.flush()?;
                Ok(())
            }
        },
        Command::Diagnose { model, what } => {
            let m = model_spec(&model, config)?;
            match what {
                DiagnoseCmd::Cluster { levels, r, epsilon, n_mc } => {
                    emit(&cluster_moment_check(&m, &levels, r, epsilon, n_mc, seed)?, out)
                }
                DiagnoseCmd::Os { n, exponent, reps } => emit(
                    &os_consistency_check(&m, &n, KRule::Power { exponent }, reps, &QuantileMethod::desk(seed ^ 1), seed)?,
                    out,
                ),
                DiagnoseCmd::Sre { levels, xi, n_mc } => {
                    let ModelSpec::Sre(spec) = &m else { bail!("sre diagnostics need an SRE model") };
                    emit(&sre_condition_diagnostics(spec, &levels, &SreProbe { xi, n_mc, seed, ..Default::default() })?, out)
                }
                DiagnoseCmd::Covariance { truncation, n_mc } => {
                    let sampler = match &m {
                        ModelSpec::MarkovCopula(c) => match c.copula {
                            spectail::models::CopulaFamily::T { nu, rho } => TailProcessSampler::tcopula(nu, rho, truncation)?,
                            _ => bail!("covariance needs a t-copula, GARCH or iid Pareto model"),
                        },
                        ModelSpec::Garch(g) => {
                            TailProcessSampler::garch(*g, garch_tail_index_quadrature(g, 1e-12)?.alpha, truncation)
                        }
                        ModelSpec::IidPareto { alpha } => TailProcessSampler::degenerate(*alpha),
                        ModelSpec::Sre(_) => bail!("covariance needs a t-copula, GARCH or iid Pareto model"),
                    };
                    let phi1 = Phi::Phi1 { s: 1.0 };
                    let phi0 = Phi::Phi0 { s: 1.0 };
                    emit(
                        &serde_json::json!({
                            "var_phi1": limit_covariance_mc(&sampler, &phi1, &phi1, n_mc, seed)?,
                            "cov_phi1_phi0": limit_covariance_mc(&sampler, &phi1, &phi0, n_mc, seed)?,
                        }),
                        out,
                    )
                }
            }
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    run(cli)
}
