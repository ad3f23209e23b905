//! Batch front end: every module of the toolkit behind a subcommand, with
//! JSON/CSV artifacts, a flat key=value config file, and the verification
//! suite as `verify`.
//!
//! Exit codes: 0 success, 1 failed verification or violated deterministic
//! inequality, 2 usage errors.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use startail_core::bounds::{pipeline_const_eps, pipeline_general, Constants};
use startail_core::constructions::{
    appendix_lower_bounds, build_cluster_graph, cluster_lower_bound, disjoint_lower_bound,
};
use startail_core::graph::{sample_gnp, Graph};
use startail_core::iidsum::{iid_bound_transfer, iid_exact_distribution_capped, IidSumModel};
use startail_core::montecarlo::{mc_tail, sweep, Estimator, GridSpec};
use startail_core::oracles::exact_star_distribution;
use startail_core::peeling::{peel, verify_sandwich, PeelingParams};
use startail_core::prob::EdgeProb;
use startail_core::suite::{render_report, run_acceptance_suite};
use startail_core::Error;

/// Default directory for relative `--out` paths.
const OUT_DIR_ENV: &str = "STARTAIL_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "startail",
    version,
    about = "Upper-tail laboratory for star counts in G(n,p)"
)]
struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample G(n,p) and emit the plain-text edge list.
    Sample(SampleArgs),
    /// Tail probability Pr(X >= threshold), exact or Monte Carlo.
    Tail(TailArgs),
    /// Evaluate the bound pipelines into a JSON report.
    Bounds(BoundsArgs),
    /// Peel a graph, certify the packing event, and emit the trace.
    Peel(PeelArgs),
    /// Build the clustering gadget and its lower bounds.
    Construct(ConstructArgs),
    /// The iid-sum model: exact distribution and transferred bounds.
    Iidsum(IidsumArgs),
    /// Parameter sweep to CSV.
    Sweep(SweepArgs),
    /// Run the full verification suite; exit 1 on any failure.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ConstOverrides {
    /// Override for the generic constant c (default 1).
    #[arg(long = "const-c")]
    const_c: Option<f64>,
    /// Override for the generic constant d (default 1).
    #[arg(long = "const-d")]
    const_d: Option<f64>,
    /// Override for the disjoint-approximation constant b (default 1).
    #[arg(long = "const-b")]
    const_b: Option<f64>,
    /// Override for the threshold size n0 (default 1).
    #[arg(long = "const-n0")]
    const_n0: Option<f64>,
    /// Override for the deviation-range constant alpha (default 1).
    #[arg(long = "const-alpha")]
    const_alpha: Option<f64>,
    /// Override for the lower-bound range constant beta (default 1).
    #[arg(long = "const-beta")]
    const_beta: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct TailArgs {
    /// Use the exhaustive oracle instead of Monte Carlo.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    r: Option<u64>,
    /// Relative deviation for the constant-eps pipeline.
    #[arg(long)]
    eps: Option<f64>,
    /// Absolute deviation for the general pipeline.
    #[arg(long)]
    t: Option<f64>,
    /// Log-tilt exponent gamma for the general pipeline (default 1/(16r)).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    consts: ConstOverrides,
}

#[derive(Args)]
struct PeelArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Load the host graph from an edge-list file instead of sampling.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Base degree cap D.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Packing slack beta (default 1/32, or 1/64 with --gamma).
    #[arg(long)]
    beta: Option<f64>,
    /// Log-tilt exponent; presence selects the two-tier event.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    r: Option<u64>,
    /// Target star count.
    #[arg(long)]
    x: Option<u128>,
    /// Edge probability; adds the planting lower bound.
    #[arg(long)]
    p: Option<String>,
    /// Deviation; adds the combined lower-bound evaluations.
    #[arg(long)]
    t: Option<f64>,
    /// Disjoint-approximation count m (default: x clamped to u64).
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    consts: ConstOverrides,
}

#[derive(Args)]
struct IidsumArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    r: Option<u64>,
    /// Deviation for the transferred bound pipelines.
    #[arg(long)]
    t: Option<f64>,
    /// Lump distribution mass above this value (keeps huge models usable).
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    consts: ConstOverrides,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorKind {
    Exact,
    Mc,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated n values.
    #[arg(long = "grid-n")]
    grid_n: Option<String>,
    /// Comma-separated p values.
    #[arg(long = "grid-p")]
    grid_p: Option<String>,
    /// Comma-separated eps values.
    #[arg(long = "grid-eps")]
    grid_eps: Option<String>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorKind>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    consts: ConstOverrides,
}

#[derive(Args)]
struct VerifyArgs {
    /// Write the (timing-free, byte-stable) report artifact here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flat key=value file; '#' starts a comment.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?;
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Parse(format!("config line {line:?} is not key=value"))
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("config key {key}={raw} unparsable"))),
        }
    }
}

fn require<T>(cli: Option<T>, cfg: Option<T>, name: &str) -> Result<T, Error> {
    cli.or(cfg)
        .ok_or_else(|| Error::InvalidParameter(format!("missing --{name} (flag or config)")))
}

fn pick<T>(cli: Option<T>, cfg: Option<T>, default: T) -> T {
    cli.or(cfg).unwrap_or(default)
}

fn constants(o: &ConstOverrides, cfg: &FileConfig) -> Result<Constants, Error> {
    let base = Constants::default();
    let c = Constants {
        c: pick(o.const_c, cfg.get("c")?, base.c),
        d: pick(o.const_d, cfg.get("d")?, base.d),
        b: pick(o.const_b, cfg.get("b")?, base.b),
        n0: pick(o.const_n0, cfg.get("n0")?, base.n0),
        alpha: pick(o.const_alpha, cfg.get("alpha")?, base.alpha),
        beta: pick(o.const_beta, cfg.get("beta_lb")?, base.beta),
    };
    for (name, v) in [
        ("c", c.c),
        ("d", c.d),
        ("b", c.b),
        ("n0", c.n0),
        ("alpha", c.alpha),
        ("beta_lb", c.beta),
    ] {
        if v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "constant {name} must be positive, got {v}"
            )));
        }
    }
    Ok(c)
}

/// Resolves `--out` against STARTAIL_OUT_DIR for bare relative names.
fn resolve_out(path: PathBuf) -> PathBuf {
    if path.is_relative() && path.parent().is_none_or(|p| p.as_os_str().is_empty()) {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path
}

/// Write-then-rename so readers never observe a partial artifact.
fn write_atomic(path: &Path, content: &str) -> Result<(), Error> {
    let path = resolve_out(path.to_path_buf());
    let tmp = path.with_file_name(format!(
        "{}.tmp{}",
        path.file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into()),
        std::process::id()
    ));
    fs::write(&tmp, content).map_err(|e| Error::Parse(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path)
        .map_err(|e| Error::Parse(format!("rename to {}: {e}", path.display())))?;
    Ok(())
}

fn emit(out: Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => write_atomic(&path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, Error> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad {what} value {tok:?}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Sample(args) => {
            let n = require(args.n, cfg.get("n")?, "n")?;
            let p = EdgeProb::parse(&require(args.p, cfg.get("p")?, "p")?)?;
            let seed = pick(args.seed, cfg.get("seed")?, 0);
            let g = sample_gnp(n, p.as_f64(), seed)?;
            emit(args.out.or(cfg.get("out")?), &g.to_edge_list_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tail(args) => {
            let n = require(args.n, cfg.get("n")?, "n")?;
            let p = EdgeProb::parse(&require(args.p, cfg.get("p")?, "p")?)?;
            let r = pick(args.r, cfg.get("r")?, 2);
            let threshold = require(args.threshold, cfg.get("threshold")?, "threshold")?;
            let content = if args.exact {
                let dist = exact_star_distribution(n, &p, r)?;
                let tail = dist.tail_ge(threshold).to_f64();
                match args.format {
                    Some(OutputFormat::Json) => {
                        serde_json::json!({
                            "estimator": "exact",
                            "n": n, "p": p.as_f64(), "r": r,
                            "threshold": threshold,
                            "tail": tail,
                        })
                        .to_string()
                            + "\n"
                    }
                    Some(OutputFormat::Csv) => format!(
                        "n,p,r,threshold,tail\n{n},{},{r},{threshold},{tail}\n",
                        p.as_f64()
                    ),
                    None => format!("{tail}\n"),
                }
            } else {
                let reps = pick(args.reps, cfg.get("reps")?, 10_000);
                let seed = pick(args.seed, cfg.get("seed")?, 0);
                let est = mc_tail(n, p.as_f64(), r, threshold, reps, seed)?;
                match args.format {
                    Some(OutputFormat::Json) => {
                        serde_json::to_string(&est).expect("estimate json") + "\n"
                    }
                    Some(OutputFormat::Csv) => format!(
                        "n,p,r,threshold,point,ci_lo,ci_hi,hits,replicates\n{n},{},{r},{threshold},{},{},{},{},{}\n",
                        p.as_f64(),
                        est.point,
                        est.ci95.0,
                        est.ci95.1,
                        est.hits,
                        est.replicates
                    ),
                    None => format!("{}\n", est.point),
                }
            };
            emit(args.out.or(cfg.get("out")?), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds(args) => {
            let n = require(args.n, cfg.get("n")?, "n")?;
            let p = EdgeProb::parse(&require(args.p, cfg.get("p")?, "p")?)?;
            let r = pick(args.r, cfg.get("r")?, 2);
            let consts = constants(&args.consts, &cfg)?;
            let eps = args.eps.or(cfg.get("eps")?);
            let t = args.t.or(cfg.get("t")?);
            let mut reports = Vec::new();
            if let Some(eps) = eps {
                reports.push(pipeline_const_eps(n, p.as_f64(), r, eps, &consts)?.to_json());
            }
            if let Some(t) = t {
                let gamma = pick(args.gamma, cfg.get("gamma")?, 1.0 / (16.0 * r as f64));
                reports.push(pipeline_general(n, p.as_f64(), r, t, gamma, &consts)?.to_json());
            }
            if reports.is_empty() {
                return Err(Error::InvalidParameter(
                    "bounds needs --eps and/or --t".into(),
                ));
            }
            let content = serde_json::to_string_pretty(&serde_json::json!({ "reports": reports }))
                .expect("json")
                + "\n";
            emit(args.out.or(cfg.get("out")?), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Peel(args) => {
            let r = pick(args.r, cfg.get("r")?, 2);
            let p = EdgeProb::parse(&require(args.p, cfg.get("p")?, "p")?)?;
            let g = match &args.graph {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Error::Parse(format!("graph {}: {e}", path.display())))?;
                    Graph::from_edge_list_text(&text)?
                }
                None => {
                    let n = require(args.n, cfg.get("n")?, "n")?;
                    let seed = pick(args.seed, cfg.get("seed")?, 0);
                    sample_gnp(n, p.as_f64(), seed)?
                }
            };
            let d = require(args.d, cfg.get("d")?, "d")?;
            let t = require(args.t, cfg.get("t")?, "t")?;
            let gamma = args.gamma.or(cfg.get("gamma")?);
            let params = match gamma {
                Some(gamma) => PeelingParams::event_t_plus(
                    r,
                    d,
                    t,
                    pick(args.beta, cfg.get("beta")?, 1.0 / 64.0),
                    gamma,
                    p.as_f64(),
                )?,
                None => PeelingParams::event_t(
                    r,
                    d,
                    t,
                    pick(args.beta, cfg.get("beta")?, 1.0 / 32.0),
                    p.as_f64(),
                )?,
            };
            let report = verify_sandwich(&g, &params)?;
            let trace = peel(&g, &params);
            let content = serde_json::to_string_pretty(&serde_json::json!({
                "params": params,
                "certificate": report.certificate,
                "sandwich_checked": report.checked,
                "x_full": report.x_full,
                "x_final": report.x_final,
                "t_half": report.t_half,
                "oracle": report.oracle,
                "trace": trace.to_json(),
            }))
            .expect("json")
                + "\n";
            emit(args.out.or(cfg.get("out")?), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Construct(args) => {
            let n = require(args.n, cfg.get("n")?, "n")?;
            let r = pick(args.r, cfg.get("r")?, 2);
            let x = require(args.x, cfg.get("x")?, "x")?;
            let consts = constants(&args.consts, &cfg)?;
            let construction = build_cluster_graph(n, r, x)?;
            let mut doc = serde_json::json!({ "construction": construction.to_json() });
            if let Some(p_raw) = args.p.or(cfg.get("p")?) {
                let p = EdgeProb::parse(&p_raw)?.as_f64();
                let planted = cluster_lower_bound(n, p, r, x)?;
                doc["planting"] = serde_json::json!({
                    "log_prob": planted.log_prob,
                    "prob": planted.prob,
                });
                let m = pick(args.m, cfg.get("m")?, x.min(u64::MAX as u128) as u64);
                doc["disjoint"] =
                    serde_json::to_value(disjoint_lower_bound(n, p, r, m, &consts)?).expect("json");
                if let Some(t) = args.t.or(cfg.get("t")?) {
                    let xi = pick(args.xi, cfg.get("xi")?, 0.1);
                    doc["appendix"] =
                        serde_json::to_value(appendix_lower_bounds(n, p, r, t, xi, &consts)?)
                            .expect("json");
                }
            }
            let content = serde_json::to_string_pretty(&doc).expect("json") + "\n";
            emit(args.out.or(cfg.get("out")?), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Iidsum(args) => {
            let n = require(args.n, cfg.get("n")?, "n")?;
            let p = EdgeProb::parse(&require(args.p, cfg.get("p")?, "p")?)?;
            let r = pick(args.r, cfg.get("r")?, 2);
            let consts = constants(&args.consts, &cfg)?;
            let model = IidSumModel::new(n, p, r)?;
            let cap = pick(args.cap, cfg.get("cap")?, u64::MAX);
            let dist = iid_exact_distribution_capped(&model, cap)?;
            let mut doc = serde_json::json!({
                "n": n, "r": r, "p": model.p.as_f64(),
                "mean": model.mean(),
                "distribution": dist.to_json(),
            });
            if let Some(t) = args.t.or(cfg.get("t")?) {
                doc["bounds"] =
                    serde_json::to_value(iid_bound_transfer(&model, t, &consts)?).expect("json");
            }
            let content = serde_json::to_string_pretty(&doc).expect("json") + "\n";
            emit(args.out.or(cfg.get("out")?), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            let grid = GridSpec {
                n: parse_list(&require(args.grid_n, cfg.get("grid_n")?, "grid-n")?, "n")?,
                p: parse_list::<String>(&require(args.grid_p, cfg.get("grid_p")?, "grid-p")?, "p")?
                    .iter()
                    .map(|s| EdgeProb::parse(s))
                    .collect::<Result<_, _>>()?,
                r: vec![pick(args.r, cfg.get("r")?, 2)],
                eps: parse_list(
                    &require(args.grid_eps, cfg.get("grid_eps")?, "grid-eps")?,
                    "eps",
                )?,
            };
            let estimator = match args.estimator.unwrap_or(EstimatorKind::Mc) {
                EstimatorKind::Exact => Estimator::Exact,
                EstimatorKind::Mc => Estimator::Mc {
                    replicates: pick(args.reps, cfg.get("reps")?, 10_000),
                    seed: pick(args.seed, cfg.get("seed")?, 0),
                },
            };
            let consts = constants(&args.consts, &cfg)?;
            let csv = sweep(&grid, &estimator, &consts)?;
            emit(args.out.or(cfg.get("out")?), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let results = run_acceptance_suite();
            let report = render_report(&results);
            print!("{report}");
            if let Some(out) = args.out.or(cfg.get("out")?) {
                write_atomic(&out, &report)?;
            }
            if results.iter().all(|r| r.pass) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::InequalityViolated(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
