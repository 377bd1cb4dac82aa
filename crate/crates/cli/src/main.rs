//! Command-line surface: plausibility curves, two-parameter scans, coverage
//! tables, and QQ diagnostics, all emitted as CSV with a provenance header.
//!
//! Exit codes: 0 on success, 2 on a usage or configuration problem, 1 on a
//! numeric failure inside a run. A JSON config file can mirror any long flag;
//! explicit flags win. `IMCOND_THREADS` (or `--threads`) caps the worker pool
//! used by replication commands.

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use imcond_core::engine::GridSpec;
use imcond_core::models::bvn::{BvnData, BvnLocalIm};
use imcond_core::models::data;
use imcond_core::models::gamma2::{Gamma2Data, Gamma2Im};
use imcond_core::models::nile::{NileData, NileIm};
use imcond_core::models::normal_mean::NormalMean;
use imcond_core::models::student_t::StudentTIm;
use imcond_core::models::vc::{vc_cpl, vc_region, VcDesign, VcOptions};
use imcond_core::numerics::{MhOptions, RngStream};
use imcond_core::rt;
use imcond_core::validate::{self, ExperimentSpec, Method, ModelSpec};
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "imcond",
    version,
    about = "Conditional inferential fits: plausibility curves, regions, and coverage experiments"
)]
struct Cli {
    /// JSON file whose keys mirror the long flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for replication commands; overrides IMCOND_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plausibility curve of a one-parameter model over a grid.
    Plaus(PlausArgs),
    /// Joint plausibility scan of a two-parameter model.
    Region(RegionArgs),
    /// Repeated-sampling coverage and mean length of one interval method.
    Coverage(CoverageArgs),
    /// Sorted plausibility-at-truth values against uniform quantiles.
    Qq(QqArgs),
    /// Worked variance-components example on the fixed design (4,4,4,8,48).
    VcDemo(VcDemoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelName {
    /// Two observations of one normal mean.
    NormalMean,
    /// Student-t location sample with known degrees of freedom.
    T,
    /// Two exponential samples with reciprocal means.
    Nile,
    /// Gamma shape and scale.
    Gamma2,
    /// Bivariate normal correlation with unit variances.
    Bvn,
    /// One-way random effects variance pair.
    VarComp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodName {
    Cim,
    Lcim,
    Mle,
    #[value(alias = "bayes_flat")]
    BayesFlat,
    #[value(alias = "bayes_jeffreys")]
    BayesJeffreys,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Method {
        match m {
            MethodName::Cim => Method::Cim,
            MethodName::Lcim => Method::Lcim,
            MethodName::Mle => Method::Mle,
            MethodName::BayesFlat => Method::BayesFlat,
            MethodName::BayesJeffreys => Method::BayesJeffreys,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Variant {
    /// Plausibility from the conditional fit.
    Conditional,
    /// Plausibility from the unreduced two-dimensional fit (normal-mean only).
    Baseline,
}

#[derive(Args)]
struct PlausArgs {
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    /// Input CSV; schema depends on the model (see README).
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Parameter grid lo:hi:count, or log:lo:hi:count for log spacing.
    #[arg(long)]
    grid: Option<String>,
    /// Degrees of freedom (t model).
    #[arg(long)]
    nu: Option<f64>,
    /// Anchor of the local fit (bvn); defaults to the plug-in estimate.
    #[arg(long)]
    anchor: Option<f64>,
    /// Seed recorded in the output header; curves themselves are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// First-parameter grid lo:hi:count, or log:lo:hi:count.
    #[arg(long)]
    grid: Option<String>,
    /// Second-parameter grid, same format.
    #[arg(long)]
    grid2: Option<String>,
    /// Level of the region {cpl > alpha}.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    #[arg(long)]
    nu: Option<f64>,
    /// Sample size (t, bvn), or both sample sizes (nile) unless n1/n2 given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Group sizes for var-comp, comma separated.
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<usize>>,
    /// True parameter generating the replications.
    #[arg(long)]
    truth: Option<f64>,
    /// Finite set of truths, comma separated; each replication samples one
    /// uniformly. Overrides --truth.
    #[arg(long, value_delimiter = ',')]
    truth_set: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    method: Option<MethodName>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stream index separating experiments that share a seed.
    #[arg(long)]
    stream: Option<u64>,
    /// Emit one row per replication instead of the summary row.
    #[arg(long)]
    per_rep: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QqArgs {
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// True parameter; defaults to 0 (1 for nile).
    #[arg(long)]
    truth: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VcDemoArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Optional settings read from `--config`; same names as the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    method: Option<String>,
    variant: Option<String>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    grid: Option<String>,
    grid2: Option<String>,
    nu: Option<f64>,
    n: Option<usize>,
    n1: Option<usize>,
    n2: Option<usize>,
    groups: Option<Vec<usize>>,
    anchor: Option<f64>,
    truth: Option<f64>,
    truth_set: Option<Vec<f64>>,
    alpha: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    stream: Option<u64>,
    per_rep: Option<bool>,
    threads: Option<usize>,
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<imcond_core::Error>() {
        Some(imcond_core::Error::Config(_)) | Some(imcond_core::Error::Data(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let threads = resolve_threads(cli.threads, &cfg)?;
    rt::with_threads(threads, || match cli.command {
        Command::Plaus(a) => cmd_plaus(a, &cfg),
        Command::Region(a) => cmd_region(a, &cfg),
        Command::Coverage(a) => cmd_coverage(a, &cfg),
        Command::Qq(a) => cmd_qq(a, &cfg),
        Command::VcDemo(a) => cmd_vc_demo(a, &cfg),
    })
}

fn load_config(path: Option<&std::path::Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn resolve_threads(flag: Option<usize>, cfg: &FileConfig) -> anyhow::Result<Option<usize>> {
    if let Some(n) = flag.or(cfg.threads) {
        return Ok(Some(n));
    }
    match std::env::var("IMCOND_THREADS") {
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| usage(format!("IMCOND_THREADS must be a thread count, got {s:?}")))?;
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(usage(format!("IMCOND_THREADS: {e}"))),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

fn enum_from_cfg<E: ValueEnum>(field: &Option<String>, name: &str) -> anyhow::Result<Option<E>> {
    field
        .as_deref()
        .map(|s| E::from_str(s, false).map_err(|e| usage(format!("config {name}: {e}"))))
        .transpose()
}

fn parse_grid(s: &str) -> anyhow::Result<GridSpec> {
    let (log_scale, rest) = match s.strip_prefix("log:") {
        Some(r) => (true, r),
        None => (false, s),
    };
    let parts: Vec<&str> = rest.split(':').collect();
    let bad = || usage(format!("grid must be lo:hi:count or log:lo:hi:count, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count < 2 {
        return Err(usage(format!("grid count must be at least 2, got {count}")));
    }
    Ok(if log_scale {
        GridSpec::logarithmic(lo, hi, count)
    } else {
        GridSpec::linear(lo, hi, count)
    })
}

fn open_data(path: &Option<PathBuf>) -> anyhow::Result<fs::File> {
    let p = required(path.as_ref(), "data")?;
    fs::File::open(p).map_err(|e| usage(format!("cannot open {}: {e}", p.display())))
}

fn header(seed: u64) -> String {
    format!("# imcond {} seed={seed}\n", env!("CARGO_PKG_VERSION"))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn model_spec_for(
    model: ModelName,
    n: Option<usize>,
    n1: Option<usize>,
    n2: Option<usize>,
    nu: Option<f64>,
    groups: Option<Vec<usize>>,
) -> anyhow::Result<ModelSpec> {
    Ok(match model {
        ModelName::NormalMean => ModelSpec::NormalMean,
        ModelName::T => ModelSpec::StudentT {
            nu: required(nu, "nu")?,
            n: required(n, "n")?,
        },
        ModelName::Nile => ModelSpec::Nile {
            n1: required(n1.or(n), "n1")?,
            n2: required(n2.or(n), "n2")?,
        },
        ModelName::Bvn => ModelSpec::BvnCorr { n: required(n, "n")? },
        ModelName::Gamma2 => ModelSpec::Gamma2 { n: required(n, "n")? },
        ModelName::VarComp => ModelSpec::VarComp {
            groups: required(groups, "groups")?,
        },
    })
}

fn cmd_plaus(a: PlausArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let model = required(a.model.or(enum_from_cfg(&cfg.model, "model")?), "model")?;
    let grid = parse_grid(&required(a.grid.or_else(|| cfg.grid.clone()), "grid")?)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let out_path = a.out.or_else(|| cfg.out.clone());
    let data_path = a.data.or_else(|| cfg.data.clone());
    let thetas = grid.points()?;

    let cpl: Box<dyn Fn(f64) -> imcond_core::Result<f64>> = match model {
        ModelName::NormalMean => {
            let pairs = data::read_pair_series(open_data(&data_path)?)?;
            if pairs.len() != 1 {
                return Err(usage(format!(
                    "normal-mean expects exactly one x1,x2 row, got {}",
                    pairs.len()
                )));
            }
            let fit = NormalMean::from_pair(pairs[0].0, pairs[0].1);
            Box::new(move |t| Ok(fit.conditional_pl(t)))
        }
        ModelName::T => {
            let nu = required(a.nu.or(cfg.nu), "nu")?;
            let x = data::read_scalar_series(open_data(&data_path)?)?;
            let fit = StudentTIm::build(&x, nu)?;
            Box::new(move |t| fit.cpl(t))
        }
        ModelName::Nile => {
            let (x1, x2) = data::read_two_samples(open_data(&data_path)?)?;
            let fit = NileIm::build(NileData::from_samples(&x1, &x2)?)?;
            Box::new(move |t| fit.cpl(t))
        }
        ModelName::Bvn => {
            let pairs = data::read_pair_series(open_data(&data_path)?)?;
            let fit = match a.anchor.or(cfg.anchor) {
                Some(t0) => BvnLocalIm::at(BvnData::from_pairs(&pairs)?, t0)?,
                None => BvnLocalIm::at_estimate(BvnData::from_pairs(&pairs)?)?,
            };
            Box::new(move |t| fit.cpl(t))
        }
        ModelName::Gamma2 | ModelName::VarComp => {
            return Err(usage("model has two parameters; use the region command"));
        }
    };

    let mut csv = header(seed);
    csv.push_str("theta,cpl\n");
    for t in thetas {
        let pl = cpl(t)?;
        writeln!(csv, "{t},{pl}").expect("string write");
    }
    emit(&out_path, csv.as_bytes())
}

fn cmd_region(a: RegionArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let model = required(a.model.or(enum_from_cfg(&cfg.model, "model")?), "model")?;
    let g1 = parse_grid(&required(a.grid.or_else(|| cfg.grid.clone()), "grid")?)?;
    let g2 = parse_grid(&required(a.grid2.or_else(|| cfg.grid2.clone()), "grid2")?)?;
    let alpha = a.alpha.or(cfg.alpha).unwrap_or(0.10);
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let out_path = a.out.or_else(|| cfg.out.clone());
    let data_path = a.data.or_else(|| cfg.data.clone());

    let points = match model {
        ModelName::Gamma2 => {
            let x = data::read_scalar_series(open_data(&data_path)?)?;
            Gamma2Im::build(Gamma2Data::from_sample(&x)?).region(&[g1, g2], alpha)?
        }
        ModelName::VarComp => {
            let (sizes, y) = data::read_grouped(open_data(&data_path)?)?;
            let design = VcDesign::new(&sizes)?;
            let suff = design.sufficient(&y)?;
            vc_region(&design, &suff, &[g1, g2], alpha, &VcOptions::seeded(seed))?
        }
        _ => return Err(usage("region needs a two-parameter model: gamma2 or var-comp")),
    };

    emit(&out_path, region_csv(seed, &points).as_bytes())
}

fn region_csv(seed: u64, points: &[imcond_core::engine::RegionPoint]) -> String {
    let mut csv = header(seed);
    csv.push_str("theta1,theta2,cpl,in_region\n");
    for p in points {
        writeln!(csv, "{},{},{},{}", p.theta[0], p.theta[1], p.cpl, p.inside)
            .expect("string write");
    }
    csv
}

fn cmd_coverage(a: CoverageArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let model = required(a.model.or(enum_from_cfg(&cfg.model, "model")?), "model")?;
    let method = a
        .method
        .or(enum_from_cfg(&cfg.method, "method")?)
        .unwrap_or(MethodName::Cim);
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let truth_set = a.truth_set.or_else(|| cfg.truth_set.clone());
    let truth = match &truth_set {
        Some(_) => a.truth.or(cfg.truth).unwrap_or(0.0),
        None => required(a.truth.or(cfg.truth), "truth")?,
    };
    let spec = ExperimentSpec {
        model: model_spec_for(
            model,
            a.n.or(cfg.n),
            a.n1.or(cfg.n1),
            a.n2.or(cfg.n2),
            a.nu.or(cfg.nu),
            a.groups.or_else(|| cfg.groups.clone()),
        )?,
        truth,
        truth_set,
        method: method.into(),
        alpha: a.alpha.or(cfg.alpha).unwrap_or(0.05),
        reps: required(a.reps.or(cfg.reps), "reps")?,
        seed,
        stream_index: a.stream.or(cfg.stream).unwrap_or(0),
    };
    let out_path = a.out.or_else(|| cfg.out.clone());

    if a.per_rep || cfg.per_rep.unwrap_or(false) {
        let mut bytes = header(seed).into_bytes();
        bytes.extend_from_slice(&validate::coverage_csv(&spec)?);
        return emit(&out_path, &bytes);
    }

    let res = validate::run_coverage(&spec)?;
    if res.failures > 0 {
        eprintln!(
            "note: {} of {} replications failed numerically and were excluded",
            res.failures, spec.reps
        );
    }
    let csv = format!(
        "{}coverage,mean_length,mc_se\n{},{},{}\n",
        header(seed),
        res.coverage,
        res.mean_length,
        res.mc_se
    );
    emit(&out_path, csv.as_bytes())
}

fn cmd_qq(a: QqArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let model = required(a.model.or(enum_from_cfg(&cfg.model, "model")?), "model")?;
    let variant = a
        .variant
        .or(enum_from_cfg(&cfg.variant, "variant")?)
        .unwrap_or(Variant::Conditional);
    let reps = required(a.reps.or(cfg.reps), "reps")?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let stream = a.stream.or(cfg.stream).unwrap_or(0);
    let truth = a.truth.or(cfg.truth).unwrap_or(match model {
        ModelName::Nile => 1.0,
        _ => 0.0,
    });
    let out_path = a.out.or_else(|| cfg.out.clone());

    let mut pls: Vec<f64> = match variant {
        Variant::Baseline => {
            if model != ModelName::NormalMean {
                return Err(usage("the baseline variant is only defined for normal-mean"));
            }
            let base = RngStream::new(seed, stream);
            (0..reps as u64)
                .map(|rep| {
                    let mut rng = base.substream(rep).rng();
                    NormalMean::simulate(truth, &mut rng).baseline_pl(truth)
                })
                .collect()
        }
        Variant::Conditional => {
            let method = match model {
                ModelName::Bvn => Method::Lcim,
                _ => Method::Cim,
            };
            let spec = ExperimentSpec {
                model: model_spec_for(
                    model,
                    a.n.or(cfg.n),
                    a.n1.or(cfg.n1),
                    a.n2.or(cfg.n2),
                    a.nu.or(cfg.nu),
                    None,
                )?,
                truth,
                truth_set: None,
                method,
                alpha: 0.5,
                reps,
                seed,
                stream_index: stream,
            };
            validate::pl_at_truth(&spec)?
        }
    };
    pls.sort_by(f64::total_cmp);

    eprintln!(
        "ks={} critical_1pct={} ecdf_excess={}",
        validate::ks_statistic(&pls),
        validate::ks_critical_1pct(pls.len()),
        validate::ecdf_excess(&pls)
    );

    let mut csv = header(seed);
    csv.push_str("p,empirical_quantile\n");
    let n = pls.len() as f64;
    for (i, pl) in pls.iter().enumerate() {
        writeln!(csv, "{},{pl}", (i as f64 + 0.5) / n).expect("string write");
    }
    emit(&out_path, csv.as_bytes())
}

fn cmd_vc_demo(a: VcDemoArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let alpha = a.alpha.or(cfg.alpha).unwrap_or(0.10);
    let out_path = a.out.or_else(|| cfg.out.clone());

    let design = VcDesign::new(&[4, 4, 4, 8, 48])?;
    let truth = [1.0, 1.0];
    let stream = RngStream::new(seed, 0);
    let mut rng = stream.substream(0).rng();
    let suff = design.simulate(&truth, &mut rng)?;

    let axes = [
        GridSpec::logarithmic(0.05, 20.0, 40),
        GridSpec::logarithmic(0.05, 20.0, 40),
    ];
    let scan_opts = VcOptions { mh: MhOptions::default(), stream: stream.substream(1) };
    let points = vc_region(&design, &suff, &axes, alpha, &scan_opts)?;

    let truth_opts = VcOptions { mh: MhOptions::default(), stream: stream.substream(2) };
    let at_truth = vc_cpl(&design, &suff, &truth, &truth_opts)?;
    eprintln!(
        "cpl at the simulation truth (1,1): {at_truth}; inside the {:.0}% region: {}",
        100.0 * (1.0 - alpha),
        at_truth > alpha
    );

    emit(&out_path, region_csv(seed, &points).as_bytes())
}
