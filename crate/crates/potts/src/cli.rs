//! Command-line front end: orchestrates experiments and writes
//! machine-readable artifacts.
//!
//! Subcommands: `gamma`, `landscape`, `simulate`, `spectral`, `path`.
//! Every option can come from a flag or from a flat `key = value` config
//! file (`--config`); flags win. The worker count additionally falls back
//! to the POTTS_WORKERS environment variable.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or input error,
//! 2 capability refusal (state-space cap, precision floor), 3 a theorem
//! check failed on an instance where the formula is proven and its
//! hypothesis holds.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::Configuration;
use crate::dynamics::{
    self, batch_hits, batch_tunnels, ChainParams, Method, Target, DEFAULT_MAX_STEPS,
};
use crate::exact::{LandscapeIndex, MixingPoint, Report, SpectralPoint};
use crate::geometry::Orientation;
use crate::lattice::{Boundary, Gamma, GridSpec};
use crate::paths::{self, BridgeSpec};
use crate::stats::{self, ExponentFit, HittingSummary, TestVerdict};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Parses `args` (including the program name) and runs the tool,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "potts",
    version,
    about = "Grid Potts model toolkit: energy barriers, landscape audits, \
             tunneling-time sampling, spectral gaps and mixing times"
)]
struct Cli {
    /// Flat `key = value` config file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the barrier formula value and its applicability flags.
    Gamma(GammaArgs),
    /// Exhaustive audit: stable-pair barriers and the deep-well bound.
    Landscape(LandscapeArgs),
    /// Sample first hitting times and run statistical checks.
    Simulate(SimulateArgs),
    /// Spectral gaps and mixing times with exponent estimates.
    Spectral(SpectralArgs),
    /// Construct a reference, expansion, or reduction path and dump it.
    Path(PathArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Number of spin values (default 2).
    #[arg(long)]
    q: Option<u8>,
    /// Rows.
    #[arg(long)]
    k: Option<usize>,
    /// Columns.
    #[arg(long)]
    l: Option<usize>,
    /// periodic | open | semi_periodic
    #[arg(long)]
    boundary: Option<String>,
}

#[derive(Args)]
struct GammaArgs {
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args)]
struct LandscapeArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Report file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Inverse temperatures, comma separated.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Samples per temperature (default 1000).
    #[arg(long)]
    n: Option<usize>,
    /// Base RNG seed (default 0); sample i uses stream i.
    #[arg(long)]
    seed: Option<u64>,
    /// direct | rejection_free (default rejection_free)
    #[arg(long)]
    method: Option<String>,
    /// Worker threads; falls back to config, then POTTS_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Per-sample step cap; longer runs are censored, never dropped.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Start color; trajectories begin at its stable configuration.
    #[arg(long)]
    start: Option<u8>,
    /// "others" (any different stable color) or a single color.
    #[arg(long)]
    target: Option<String>,
    /// Sample file; several temperatures add a -beta<B> suffix each.
    #[arg(long)]
    out: Option<PathBuf>,
    /// jsonl | csv (default jsonl)
    #[arg(long)]
    format: Option<String>,
    /// Summary and verdict report file (stdout when absent).
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// Checks to run, comma separated: fit, exp1, exit, wald, renewal.
    #[arg(long, value_delimiter = ',')]
    tests: Vec<String>,
}

#[derive(Args)]
struct SpectralArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Inverse temperatures, comma separated.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Total-variation threshold for the mixing time (default 0.25).
    #[arg(long)]
    eps: Option<f64>,
    /// Report file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// reference | expansion | reduction
    #[arg(long)]
    kind: Option<String>,
    /// Start color of a reference path (default 1).
    #[arg(long)]
    c: Option<u8>,
    /// End color of a reference path (default 2).
    #[arg(long)]
    d: Option<u8>,
    /// Bridge orientation for expansion: vertical | horizontal.
    #[arg(long)]
    orientation: Option<String>,
    /// Bridge line index for expansion.
    #[arg(long)]
    line: Option<usize>,
    /// Bridge color for expansion.
    #[arg(long)]
    color: Option<u8>,
    /// Start configuration file, spin rows top first.
    #[arg(long, conflicts_with = "start")]
    start_file: Option<PathBuf>,
    /// Start configuration inline, rows top first separated by '/'.
    #[arg(long)]
    start: Option<String>,
    /// Dump file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Keys the config file may define; anything else is rejected.
const KNOWN_KEYS: &[&str] = &[
    "q", "k", "l", "boundary", "beta", "eps", "n", "seed", "method", "workers",
    "max_steps", "start", "target", "out", "format", "summary_out", "tests",
    "kind", "c", "d", "orientation", "line", "color", "start_file",
];

struct Ctx {
    file: BTreeMap<String, String>,
}

impl Ctx {
    fn load(path: Option<&FsPath>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Parse(format!("config line {}: expected key = value", i + 1))
                })?;
                let key = key.trim();
                let value = value.trim();
                if !KNOWN_KEYS.contains(&key) {
                    return Err(Error::Parse(format!(
                        "config line {}: unknown key '{key}'",
                        i + 1
                    )));
                }
                if file.insert(key.to_string(), value.to_string()).is_some() {
                    return Err(Error::Parse(format!(
                        "config line {}: duplicate key '{key}'",
                        i + 1
                    )));
                }
            }
        }
        Ok(Ctx { file })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.file.get(key).map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Parse(format!("config key '{key}': {e}"))),
        }
    }

    fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(Vec::new()),
            Some(raw) => raw
                .split(',')
                .map(|piece| {
                    piece.trim().parse::<T>().map_err(|e| {
                        Error::Parse(format!("config key '{key}', item '{}': {e}", piece.trim()))
                    })
                })
                .collect(),
        }
    }
}

fn need<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Input(format!("missing {what}: pass --{what} or set it in --config")))
}

fn resolve_instance(a: &InstanceArgs, ctx: &Ctx) -> Result<GridSpec> {
    let q: u8 = a.q.map(Ok).or_else(|| ctx.get("q").transpose()).transpose()?.unwrap_or(2);
    let k: usize = need(a.k.or(ctx.get("k")?), "k")?;
    let l: usize = need(a.l.or(ctx.get("l")?), "l")?;
    let boundary: Boundary = match &a.boundary {
        Some(s) => s.parse()?,
        None => need(ctx.get("boundary")?, "boundary")?,
    };
    GridSpec::new(k, l, q, boundary)
}

fn resolve_workers(flag: Option<usize>, ctx: &Ctx) -> Result<usize> {
    if let Some(w) = flag {
        return Ok(w);
    }
    if let Some(w) = ctx.get("workers")? {
        return Ok(w);
    }
    if let Ok(raw) = std::env::var("POTTS_WORKERS") {
        return raw
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("POTTS_WORKERS: {e}")));
    }
    Ok(1)
}

fn resolve_betas(flag: &[f64], ctx: &Ctx) -> Result<Vec<f64>> {
    let betas = if flag.is_empty() { ctx.get_list("beta")? } else { flag.to_vec() };
    if betas.is_empty() {
        return Err(Error::Input("missing beta: pass --beta or set it in --config".into()));
    }
    Ok(betas)
}

/// Writes `text` (newline-terminated) to the file, or stdout when absent.
fn emit(path: Option<&FsPath>, text: &str) -> Result<()> {
    let mut owned = text.to_string();
    if !owned.ends_with('\n') {
        owned.push('\n');
    }
    match path {
        Some(p) => fs::write(p, owned)?,
        None => print!("{owned}"),
    }
    Ok(())
}

fn pretty(value: &impl Serialize) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))
}

/// Theorem-check failures gate the exit code only where the formula is
/// proven (hypothesis met, not a conjectured boundary case).
fn check_exit(ok: bool, gamma: Gamma) -> i32 {
    if !ok && gamma.hypothesis_met && !gamma.conjectured {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let ctx = Ctx::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Gamma(a) => cmd_gamma(&a, &ctx),
        Cmd::Landscape(a) => cmd_landscape(&a, &ctx),
        Cmd::Simulate(a) => cmd_simulate(&a, &ctx),
        Cmd::Spectral(a) => cmd_spectral(&a, &ctx),
        Cmd::Path(a) => cmd_path(&a, &ctx),
    }
}

#[derive(Serialize)]
struct GammaDoc {
    q: u8,
    k: usize,
    l: usize,
    boundary: String,
    gamma: i64,
    hypothesis_met: bool,
    conjectured: bool,
}

fn cmd_gamma(a: &GammaArgs, ctx: &Ctx) -> Result<i32> {
    let spec = resolve_instance(&a.instance, ctx)?;
    let gamma = spec.gamma();
    let doc = GammaDoc {
        q: spec.q,
        k: spec.k,
        l: spec.l,
        boundary: spec.boundary.to_string(),
        gamma: gamma.value,
        hypothesis_met: gamma.hypothesis_met,
        conjectured: gamma.conjectured,
    };
    println!("{}", serde_json::to_string(&doc).map_err(|e| Error::Numerical(e.to_string()))?);
    Ok(EXIT_OK)
}

fn cmd_landscape(a: &LandscapeArgs, ctx: &Ctx) -> Result<i32> {
    let spec = resolve_instance(&a.instance, ctx)?;
    let ix = LandscapeIndex::new(spec)?;
    let analysis = ix.landscape_analysis();
    let report = ix.report(&analysis);
    emit(a.out.as_deref(), &pretty(&report)?)?;
    Ok(check_exit(report.hypothesis_holds, report.gamma_formula))
}

#[derive(Clone, Copy, PartialEq)]
enum TargetSel {
    Others,
    Color(u8),
}

fn parse_target(raw: &str) -> Result<TargetSel> {
    match raw {
        "others" | "other" | "any" => Ok(TargetSel::Others),
        digits => digits
            .parse::<u8>()
            .map(TargetSel::Color)
            .map_err(|_| Error::Parse(format!("target must be 'others' or a color, got '{digits}'"))),
    }
}

#[derive(Serialize)]
struct ResolvedSim {
    q: u8,
    k: usize,
    l: usize,
    boundary: String,
    betas: Vec<f64>,
    n: usize,
    seed: u64,
    method: Method,
    workers: usize,
    max_steps: u64,
    start: u8,
    target: String,
    format: String,
}

#[derive(Serialize)]
struct BatchDoc {
    beta: f64,
    file: Option<String>,
    summary: HittingSummary,
    censored_fraction: f64,
}

#[derive(Serialize)]
struct SimulateDoc {
    config: ResolvedSim,
    gamma: Gamma,
    batches: Vec<BatchDoc>,
    exponent_fit: Option<ExponentFit>,
    verdicts: Vec<TestVerdict>,
    /// True when censored samples forced the statistical checks off.
    verdicts_suppressed: bool,
}

fn cmd_simulate(a: &SimulateArgs, ctx: &Ctx) -> Result<i32> {
    let spec = resolve_instance(&a.instance, ctx)?;
    let betas = resolve_betas(&a.beta, ctx)?;
    let n: usize = a.n.map(Ok).or_else(|| ctx.get("n").transpose()).transpose()?.unwrap_or(1000);
    let seed: u64 =
        a.seed.map(Ok).or_else(|| ctx.get("seed").transpose()).transpose()?.unwrap_or(0);
    let method: Method = match &a.method {
        Some(s) => s.parse()?,
        None => ctx.get("method")?.unwrap_or(Method::RejectionFree),
    };
    let workers = resolve_workers(a.workers, ctx)?;
    let max_steps: u64 = a
        .max_steps
        .map(Ok)
        .or_else(|| ctx.get("max_steps").transpose())
        .transpose()?
        .unwrap_or(DEFAULT_MAX_STEPS);
    let start: u8 =
        a.start.map(Ok).or_else(|| ctx.get("start").transpose()).transpose()?.unwrap_or(1);
    let target_raw: String = match &a.target {
        Some(s) => s.clone(),
        None => ctx.get("target")?.unwrap_or_else(|| "others".to_string()),
    };
    let format: String = match &a.format {
        Some(s) => s.clone(),
        None => ctx.get("format")?.unwrap_or_else(|| "jsonl".to_string()),
    };
    if format != "jsonl" && format != "csv" {
        return Err(Error::Input(format!("format must be jsonl or csv, got '{format}'")));
    }
    let out: Option<PathBuf> = match &a.out {
        Some(p) => Some(p.clone()),
        None => ctx.raw("out").map(PathBuf::from),
    };
    let summary_out: Option<PathBuf> = match &a.summary_out {
        Some(p) => Some(p.clone()),
        None => ctx.raw("summary_out").map(PathBuf::from),
    };
    let tests: Vec<String> =
        if a.tests.is_empty() { ctx.get_list("tests")? } else { a.tests.clone() };
    for t in &tests {
        if !["fit", "exp1", "exit", "wald", "renewal"].contains(&t.as_str()) {
            return Err(Error::Input(format!("unknown test '{t}'")));
        }
    }

    spec.check_spin(start)?;
    let sel = parse_target(&target_raw)?;
    let target = match sel {
        TargetSel::Others => Target::StablesExcept(start),
        TargetSel::Color(d) => {
            spec.check_spin(d)?;
            if d == start {
                return Err(Error::EqualColors);
            }
            Target::Explicit(vec![Configuration::stable(spec, d)?])
        }
    };
    let start_cfg = Configuration::stable(spec, start)?;

    let mut batches = Vec::new();
    let mut all_samples = Vec::new();
    for &beta in &betas {
        let params = ChainParams::new(spec, beta, seed)?.with_max_steps(max_steps)?;
        let samples = batch_hits(&start_cfg, &target, &params, n, workers, method)?;
        let file = match &out {
            Some(base) => {
                let path =
                    if betas.len() == 1 { base.clone() } else { beta_path(base, beta) };
                write_samples(&path, &samples, &format)?;
                Some(path.display().to_string())
            }
            None => None,
        };
        let summary = HittingSummary::from_samples(&samples)?;
        let censored = samples.iter().filter(|s| s.censored).count();
        batches.push(BatchDoc {
            beta,
            file,
            summary,
            censored_fraction: censored as f64 / n as f64,
        });
        all_samples.push(samples);
    }

    let censored_total: usize =
        batches.iter().map(|b| b.summary.censored_count).sum();
    let suppressed = censored_total > 0 && !tests.is_empty();
    let mut verdicts = Vec::new();
    let mut exponent_fit = None;
    if !suppressed {
        for t in &tests {
            match t.as_str() {
                "fit" => {
                    let points: Vec<(f64, HittingSummary)> =
                        batches.iter().map(|b| (b.beta, b.summary)).collect();
                    exponent_fit = Some(stats::fit_exponent_from_summaries(&points)?);
                }
                "exp1" => {
                    for (b, samples) in batches.iter().zip(&all_samples) {
                        let mean = b.summary.mean;
                        let rescaled: Vec<f64> =
                            samples.iter().map(|s| s.steps as f64 / mean).collect();
                        verdicts.push(stats::test_exp1(&rescaled)?.with_provenance(format!(
                            "seed {seed}, streams 0..{n}, beta {b}",
                            b = b.beta
                        )));
                    }
                }
                "exit" => {
                    if sel != TargetSel::Others {
                        return Err(Error::Input(
                            "the exit-uniformity test needs --target others".into(),
                        ));
                    }
                    for (b, samples) in batches.iter().zip(&all_samples) {
                        let exits: Vec<u8> = samples
                            .iter()
                            .map(|s| {
                                s.exit_spin().ok_or_else(|| {
                                    Error::Input("non-stable exit in uniformity test".into())
                                })
                            })
                            .collect::<Result<_>>()?;
                        verdicts.push(stats::test_exit_uniform(&exits, start, spec.q)?
                            .with_provenance(format!(
                                "seed {seed}, streams 0..{n}, beta {b}",
                                b = b.beta
                            )));
                    }
                }
                "wald" => {
                    let TargetSel::Color(_) = sel else {
                        return Err(Error::Input(
                            "the Wald check needs --target <color>".into(),
                        ));
                    };
                    // independent comparison arm targeting any other color,
                    // run at seed+1 so the two arms never share randomness
                    let any = Target::StablesExcept(start);
                    for (b, _) in batches.iter().zip(&all_samples) {
                        let params = ChainParams::new(spec, b.beta, seed.wrapping_add(1))?
                            .with_max_steps(max_steps)?;
                        let any_samples =
                            batch_hits(&start_cfg, &any, &params, n, workers, method)?;
                        let any_summary = HittingSummary::from_samples(&any_samples)?;
                        verdicts.push(
                            stats::test_wald(&any_summary, &b.summary, spec.q)?
                                .with_provenance(format!(
                                    "targeted arm seed {seed}, comparison arm seed {}, \
                                     streams 0..{n}, beta {}",
                                    seed.wrapping_add(1),
                                    b.beta
                                )),
                        );
                    }
                }
                "renewal" => {
                    let TargetSel::Color(d) = sel else {
                        return Err(Error::Input(
                            "the renewal check needs --target <color>".into(),
                        ));
                    };
                    for b in &batches {
                        let params = ChainParams::new(spec, b.beta, seed.wrapping_add(2))?
                            .with_max_steps(max_steps)?;
                        let runs = batch_tunnels(start, d, &params, n, workers, method)?;
                        if runs.iter().any(|r| r.censored) {
                            return Err(Error::Input(
                                "renewal check: censored tunneling runs; raise max_steps"
                                    .into(),
                            ));
                        }
                        let legs: Vec<u32> = runs.iter().map(|r| r.legs).collect();
                        verdicts.push(stats::test_renewal_geometric(&legs, spec.q)?
                            .with_provenance(format!(
                                "seed {}, streams 0..{n}, beta {}",
                                seed.wrapping_add(2),
                                b.beta
                            )));
                    }
                }
                _ => unreachable!("validated above"),
            }
        }
    }

    let gamma = spec.gamma();
    let doc = SimulateDoc {
        config: ResolvedSim {
            q: spec.q,
            k: spec.k,
            l: spec.l,
            boundary: spec.boundary.to_string(),
            betas: betas.clone(),
            n,
            seed,
            method,
            workers,
            max_steps,
            start,
            target: target_raw,
            format,
        },
        gamma,
        batches,
        exponent_fit,
        verdicts,
        verdicts_suppressed: suppressed,
    };
    emit(summary_out.as_deref(), &pretty(&doc)?)?;
    let all_pass = doc.verdicts.iter().all(|v| v.pass);
    Ok(check_exit(all_pass, gamma))
}

fn beta_path(base: &FsPath, beta: f64) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("samples");
    let ext = base.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(ext) => format!("{stem}-beta{beta}.{ext}"),
        None => format!("{stem}-beta{beta}"),
    };
    base.with_file_name(name)
}

fn write_samples(
    path: &FsPath,
    samples: &[dynamics::HittingSample],
    format: &str,
) -> Result<()> {
    match format {
        "jsonl" => {
            let mut out = std::io::BufWriter::new(fs::File::create(path)?);
            for s in samples {
                serde_json::to_writer(&mut out, &s.record())
                    .map_err(|e| Error::Numerical(e.to_string()))?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        "csv" => {
            let mut out = csv::Writer::from_path(path)
                .map_err(|e| Error::Input(format!("csv: {e}")))?;
            for s in samples {
                out.serialize(s.record())
                    .map_err(|e| Error::Input(format!("csv: {e}")))?;
            }
            out.flush()?;
        }
        other => return Err(Error::Input(format!("format must be jsonl or csv, got '{other}'"))),
    }
    Ok(())
}

#[derive(Serialize)]
struct MixingExponent {
    beta: f64,
    /// log(t_mix) / beta; approaches the barrier as beta grows.
    value: f64,
    converged: bool,
}

#[derive(Serialize)]
struct SpectralEstimates {
    /// Finite-difference slope of -log rho between the extreme betas.
    gap_exponent: Option<f64>,
    gap_exponent_window: Option<(f64, f64)>,
    mixing_exponents: Vec<MixingExponent>,
}

#[derive(Serialize)]
struct SpectralDoc {
    #[serde(flatten)]
    report: Report,
    eps: f64,
    estimates: SpectralEstimates,
}

fn cmd_spectral(a: &SpectralArgs, ctx: &Ctx) -> Result<i32> {
    let spec = resolve_instance(&a.instance, ctx)?;
    let betas = resolve_betas(&a.beta, ctx)?;
    let eps: f64 =
        a.eps.map(Ok).or_else(|| ctx.get("eps").transpose()).transpose()?.unwrap_or(0.25);
    let ix = LandscapeIndex::new(spec)?;
    let analysis = ix.landscape_analysis();
    let mut report = ix.report(&analysis);
    let gamma = report.gamma_formula.value as f64;
    for &beta in &betas {
        let s = ix.spectral_gap(beta)?;
        report.spectral.push(SpectralPoint {
            beta,
            rho: s.rho,
            prefactor: s.rho * (beta * gamma).exp(),
        });
        let m = ix.mixing_time(beta, eps)?;
        report.mixing.push(MixingPoint { beta, eps, t_mix: m.t_mix, converged: m.converged });
    }
    let mut sorted: Vec<&SpectralPoint> = report.spectral.iter().collect();
    sorted.sort_by(|x, y| x.beta.total_cmp(&y.beta));
    let (gap_exponent, window) = match (sorted.first(), sorted.last()) {
        (Some(lo), Some(hi)) if hi.beta > lo.beta && lo.rho > 0.0 && hi.rho > 0.0 => (
            Some((lo.rho.ln() - hi.rho.ln()) / (hi.beta - lo.beta)),
            Some((lo.beta, hi.beta)),
        ),
        _ => (None, None),
    };
    let mixing_exponents = report
        .mixing
        .iter()
        .filter(|m| m.beta > 0.0)
        .map(|m| MixingExponent {
            beta: m.beta,
            value: (m.t_mix as f64).ln() / m.beta,
            converged: m.converged,
        })
        .collect();
    let doc = SpectralDoc {
        report,
        eps,
        estimates: SpectralEstimates { gap_exponent, gap_exponent_window: window, mixing_exponents },
    };
    emit(a.out.as_deref(), &pretty(&doc)?)?;
    Ok(EXIT_OK)
}

fn load_start(spec: GridSpec, a: &PathArgs, ctx: &Ctx) -> Result<Configuration> {
    if let Some(path) = &a.start_file {
        return Configuration::parse(spec, &fs::read_to_string(path)?);
    }
    let inline: Option<String> = match &a.start {
        Some(s) => Some(s.clone()),
        None => match ctx.raw("start_file") {
            Some(path) => return Configuration::parse(spec, &fs::read_to_string(path)?),
            None => ctx.raw("start").map(str::to_string),
        },
    };
    let raw = inline.ok_or_else(|| {
        Error::Input("missing start configuration: pass --start or --start-file".into())
    })?;
    Configuration::parse(spec, &raw.replace('/', "\n"))
}

fn cmd_path(a: &PathArgs, ctx: &Ctx) -> Result<i32> {
    let spec = resolve_instance(&a.instance, ctx)?;
    let kind: String = match &a.kind {
        Some(s) => s.clone(),
        None => need(ctx.raw("kind").map(str::to_string), "kind")?,
    };
    let gamma = spec.gamma();
    let (path, bound, ok, label) = match kind.as_str() {
        "reference" => {
            let c: u8 =
                a.c.map(Ok).or_else(|| ctx.get("c").transpose()).transpose()?.unwrap_or(1);
            let d: u8 =
                a.d.map(Ok).or_else(|| ctx.get("d").transpose()).transpose()?.unwrap_or(2);
            let path = paths::reference_path(spec, c, d)?;
            let slack = path.slack();
            // the reference path must attain the barrier exactly
            (path, gamma.value, slack == gamma.value, format!("reference {c} -> {d}"))
        }
        "expansion" => {
            let start = load_start(spec, a, ctx)?;
            let orientation: Orientation = match &a.orientation {
                Some(s) => s.parse()?,
                None => need(ctx.get("orientation")?, "orientation")?,
            };
            let line: usize = need(a.line.or(ctx.get("line")?), "line")?;
            let color: u8 = need(a.color.or(ctx.get("color")?), "color")?;
            let bridge = BridgeSpec { orientation, index: line, color };
            let path = paths::expansion_path(&start, bridge)?;
            let bound = paths::expansion_bound(spec.boundary);
            let slack = path.slack();
            (path, bound, slack <= bound, format!("expansion of {orientation} line {line}"))
        }
        "reduction" => {
            let start = load_start(spec, a, ctx)?;
            let (path, color) = paths::reduction_path(&start)?;
            let slack = path.slack();
            // strict inequality: reduction stays below the barrier
            (path, gamma.value, slack < gamma.value, format!("reduction to color {color}"))
        }
        other => {
            return Err(Error::Input(format!(
                "kind must be reference, expansion, or reduction, got '{other}'"
            )))
        }
    };
    let mut text = path.dump();
    text.push_str(&format!(
        "kind {label}\nsteps {}\nheight {}\nslack {}\nbound {}\nok {}\n",
        path.len(),
        path.height(),
        path.slack(),
        bound,
        ok
    ));
    emit(a.out.as_deref(), &text)?;
    Ok(check_exit(ok, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx_from(text: &str) -> Result<Ctx> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, text).unwrap();
        Ctx::load(Some(&path))
    }

    #[test]
    fn config_file_grammar() {
        let ctx = ctx_from("q = 3\nk=2 # rows\n\n# comment\nbeta = 1.5, 2\n").unwrap();
        assert_eq!(ctx.get::<u8>("q").unwrap(), Some(3));
        assert_eq!(ctx.get::<usize>("k").unwrap(), Some(2));
        assert_eq!(ctx.get_list::<f64>("beta").unwrap(), vec![1.5, 2.0]);
        assert_eq!(ctx.get::<u64>("seed").unwrap(), None);

        assert!(ctx_from("mystery = 1\n").is_err());
        assert!(ctx_from("q = 2\nq = 3\n").is_err());
        assert!(ctx_from("just a line\n").is_err());
        let bad_type = ctx_from("q = banana\n").unwrap();
        assert!(bad_type.get::<u8>("q").is_err());
    }

    #[test]
    fn flags_override_config() {
        let ctx = ctx_from("q = 3\nk = 2\nl = 3\nboundary = open\n").unwrap();
        let args =
            InstanceArgs { q: Some(2), k: None, l: None, boundary: Some("periodic".into()) };
        let spec = resolve_instance(&args, &ctx).unwrap();
        assert_eq!(spec.q, 2);
        assert_eq!((spec.k, spec.l), (2, 3));
        assert_eq!(spec.boundary, Boundary::Periodic);
    }

    #[test]
    fn q_defaults_to_two_and_missing_dims_fail() {
        let ctx = Ctx::load(None).unwrap();
        let args = InstanceArgs {
            q: None,
            k: Some(3),
            l: Some(4),
            boundary: Some("open".into()),
        };
        assert_eq!(resolve_instance(&args, &ctx).unwrap().q, 2);
        let missing = InstanceArgs { q: None, k: None, l: Some(4), boundary: None };
        assert!(resolve_instance(&missing, &ctx).is_err());
    }

    #[test]
    fn worker_resolution_order() {
        let ctx = ctx_from("workers = 3\n").unwrap();
        assert_eq!(resolve_workers(Some(5), &ctx).unwrap(), 5);
        assert_eq!(resolve_workers(None, &ctx).unwrap(), 3);
        let empty = Ctx::load(None).unwrap();
        std::env::set_var("POTTS_WORKERS", "7");
        assert_eq!(resolve_workers(None, &empty).unwrap(), 7);
        std::env::set_var("POTTS_WORKERS", "x");
        assert!(resolve_workers(None, &empty).is_err());
        std::env::remove_var("POTTS_WORKERS");
        assert_eq!(resolve_workers(None, &empty).unwrap(), 1);
    }

    #[test]
    fn beta_suffix_naming() {
        assert_eq!(
            beta_path(FsPath::new("/tmp/s.jsonl"), 2.5),
            PathBuf::from("/tmp/s-beta2.5.jsonl")
        );
        assert_eq!(beta_path(FsPath::new("raw"), 3.0), PathBuf::from("raw-beta3"));
    }

    #[test]
    fn check_failures_gate_only_proven_instances() {
        let proven = Gamma { value: 3, hypothesis_met: true, conjectured: false };
        let below = Gamma { value: 3, hypothesis_met: false, conjectured: false };
        let conjectured = Gamma { value: 4, hypothesis_met: true, conjectured: true };
        assert_eq!(check_exit(true, proven), EXIT_OK);
        assert_eq!(check_exit(false, proven), EXIT_CHECK_FAILED);
        assert_eq!(check_exit(false, below), EXIT_OK);
        assert_eq!(check_exit(false, conjectured), EXIT_OK);
    }

    #[test]
    fn target_parsing() {
        assert!(matches!(parse_target("others").unwrap(), TargetSel::Others));
        assert!(matches!(parse_target("2").unwrap(), TargetSel::Color(2)));
        assert!(parse_target("everything").is_err());
    }
}
