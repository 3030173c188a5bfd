//! Command-line front end. Every run is described by a [`RunConfig`] that is
//! echoed into a JSON sidecar, so `betatrace replay <sidecar>` regenerates the
//! output from the sidecar alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::density_stats::{
    bin_averages, estimate_density, rescale, semicircle_bin_averages, write_density_csv, DensityEstimate, GridSpec, Regime,
};
use crate::ensemble::{EnsembleKind, EnsembleParams};
use crate::error::{invalid, Error, Result};
use crate::report::{run_checks, CheckKind, CheckReport, VerifyOptions};
use crate::simulate::{collect_spectra, simulate_histogram, Threads};
use crate::special_fn::{
    airy, airy_tail, edge_density_closed, kontsevich_k_with, AiryAccuracy, KontsevichRoute, QuadratureControls,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "betatrace", version, about = "Fixed-trace and Gaussian beta-Hermite ensembles: sampling, densities, special functions, checks")]
pub struct Cli {
    /// Worker threads for replicate loops (results do not depend on it).
    #[arg(long, global = true, env = "BETATRACE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Sample spectra: CSV `replicate,index,eigenvalue`.
    Sample(SampleArgs),
    /// Histogram density estimate, optionally with a reference column.
    Density(DensityArgs),
    /// Tabulate Airy-type functions.
    Special(SpecialArgs),
    /// Run verification checks and emit a JSON report.
    Verify(VerifyArgs),
    /// Re-run the configuration stored in a sidecar or report.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = EnsembleKind::Gaussian)]
    pub kind: EnsembleKind,
}

impl EnsembleArgs {
    fn params(&self) -> Result<EnsembleParams> {
        EnsembleParams::new(self.n, self.beta, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sidecar path; defaults to `<out>.json`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Semicircle,
    Aibeta,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DensityArgs {
    /// Spectra CSV from `sample`; its sidecar supplies the ensemble.
    #[arg(long)]
    pub spectra: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<EnsembleKind>,
    #[arg(long, default_value_t = 100)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Regime::Bulk)]
    pub regime: Regime,
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.2)]
    pub lo: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.2)]
    pub hi: f64,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialFn {
    Ai,
    AiPrime,
    AiTail,
    Aibeta,
    Kontsevich,
}

#[derive(Debug, Clone, Copy, PartialEq, Args, Serialize, Deserialize)]
pub struct QuadArgs {
    /// Gauss–Hermite nodes per axis at the first ladder level.
    #[arg(long, default_value_t = QuadratureControls::default().nodes)]
    pub nodes: usize,
    #[arg(long, default_value_t = QuadratureControls::default().levels)]
    pub levels: usize,
    #[arg(long, default_value_t = QuadratureControls::default().contour_shift)]
    pub contour_shift: f64,
    #[arg(long, default_value_t = QuadratureControls::default().max_evaluations)]
    pub max_evaluations: u64,
    #[arg(long, default_value_t = QuadratureControls::default().target_error)]
    pub target_error: f64,
}

impl From<QuadArgs> for QuadratureControls {
    fn from(q: QuadArgs) -> Self {
        QuadratureControls {
            nodes: q.nodes,
            levels: q.levels,
            contour_shift: q.contour_shift,
            max_evaluations: q.max_evaluations,
            target_error: q.target_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpecialArgs {
    #[arg(long = "fn", value_enum)]
    #[serde(rename = "fn")]
    pub function: SpecialFn,
    /// Points, comma separated.
    #[arg(long, allow_negative_numbers = true, value_delimiter = ',')]
    pub x: Vec<f64>,
    /// Uniform range `lo:hi:step` appended to `--x`.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of integration variables for `kontsevich`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = KontsevichRoute::Auto)]
    pub route: KontsevichRoute,
    #[command(flatten)]
    #[serde(flatten)]
    pub quadrature: QuadArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub check: Vec<CheckKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub reps: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub quadrature: QuadArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Sidecar JSON (or verify report) holding a `config` object.
    pub sidecar: PathBuf,
    /// Write here instead of comparing against the recorded output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A reproducible run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub threads: Option<usize>,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    Sample(SampleArgs),
    Density(DensityArgs),
    Special(SpecialArgs),
    Verify(VerifyArgs),
}

impl Command {
    fn out(&self) -> Option<&Path> {
        match self {
            Command::Sample(a) => a.out.as_deref(),
            Command::Density(a) => a.out.as_deref(),
            Command::Special(a) => a.out.as_deref(),
            Command::Verify(a) => a.out.as_deref(),
        }
    }

    fn set_out(&mut self, p: Option<PathBuf>) {
        match self {
            Command::Sample(a) => a.out = p,
            Command::Density(a) => a.out = p,
            Command::Special(a) => a.out = p,
            Command::Verify(a) => a.out = p,
        }
    }

    fn sidecar(&self) -> Option<PathBuf> {
        let (explicit, out) = match self {
            Command::Sample(a) => (a.sidecar.clone(), a.out.as_ref()),
            Command::Density(a) => (a.sidecar.clone(), a.out.as_ref()),
            Command::Special(a) => (None, a.out.as_ref()),
            Command::Verify(_) => return None,
        };
        explicit.or_else(|| out.map(|o| sidecar_path(o)))
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Output text, an optional sidecar body, and whether any check failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub data: String,
    pub sidecar: Option<Value>,
    pub checks_failed: bool,
}

fn threads_of(config: &RunConfig) -> Threads {
    Threads(config.threads)
}

fn sidecar_body(config: &RunConfig, summary: Value) -> Value {
    json!({
        "config": config,
        "versions": { "betatrace": VERSION, "format": 1 },
        "summary": summary,
    })
}

fn conservation_tolerances() -> Value {
    json!({ "trace_abs": "1e-10 * n * max|eigenvalue|", "frobenius_rel": 1e-9 })
}

pub fn execute(config: &RunConfig) -> Result<Outcome> {
    match &config.command {
        Command::Sample(a) => cmd_sample(config, a),
        Command::Density(a) => cmd_density(config, a),
        Command::Special(a) => cmd_special(config, a),
        Command::Verify(a) => cmd_verify(config, a),
    }
}

fn cmd_sample(config: &RunConfig, a: &SampleArgs) -> Result<Outcome> {
    let params = a.ensemble.params()?;
    if a.reps == 0 {
        return Err(invalid("--reps must be at least 1"));
    }
    let (spectra, tally) = collect_spectra(&params, a.seed, a.reps, threads_of(config))?;
    let mut data = String::from("replicate,index,eigenvalue\n");
    for (r, s) in spectra.iter().enumerate() {
        for (i, v) in s.values.iter().enumerate() {
            writeln!(data, "{r},{i},{v}").expect("write to string");
        }
    }
    let summary = json!({
        "params": params,
        "seed": a.seed,
        "replicates": a.reps,
        "strength_sq": params.strength_sq(),
        "conservation": tally,
        "tolerances": { "conservation": conservation_tolerances() },
    });
    Ok(Outcome { data, sidecar: Some(sidecar_body(config, summary)), checks_failed: false })
}

/// Spectra grouped by replicate, in file order.
pub fn read_spectra_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let parse_err = |line: usize, message: String| Error::Parse { path: path.into(), message: format!("line {line}: {message}") };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "replicate,index,eigenvalue" => {}
        _ => return Err(parse_err(1, "expected header `replicate,index,eigenvalue`".into())),
    }
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(parse_err(i + 1, format!("expected 3 columns, found {}", cols.len())));
        }
        let r: u64 = cols[0].parse().map_err(|e| parse_err(i + 1, format!("replicate: {e}")))?;
        let v: f64 = cols[2].parse().map_err(|e| parse_err(i + 1, format!("eigenvalue: {e}")))?;
        groups.entry(r).or_default().push(v);
    }
    if groups.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    Ok(groups.into_values().collect())
}

fn read_config_json(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })?;
    let cfg = v.get("config").cloned().ok_or_else(|| Error::Parse { path: path.into(), message: "no `config` object".into() })?;
    serde_json::from_value(cfg).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
}

fn density_params(a: &DensityArgs) -> Result<(EnsembleParams, Option<u64>)> {
    let from_flags = || match (a.n, a.beta) {
        (Some(n), Some(beta)) => EnsembleParams::new(n, beta, a.kind.unwrap_or(EnsembleKind::Gaussian)),
        _ => Err(invalid("--n and --beta are required (or a --spectra file with its sidecar)")),
    };
    if let Some(path) = &a.spectra {
        let side = sidecar_path(path);
        if side.exists() {
            if let Command::Sample(s) = read_config_json(&side)?.command {
                let p = s.ensemble.params()?;
                if a.n.is_some_and(|n| n != p.n) || a.beta.is_some_and(|b| b != p.beta) || a.kind.is_some_and(|k| k != p.kind) {
                    return Err(invalid(format!("--n/--beta/--kind disagree with {}", side.display())));
                }
                return Ok((p, Some(s.seed)));
            }
        }
        return Ok((from_flags()?, None));
    }
    Ok((from_flags()?, Some(a.seed)))
}

fn reference_column(reference: Reference, d: &DensityEstimate, params: &EnsembleParams) -> Result<Vec<f64>> {
    match reference {
        Reference::Semicircle => {
            if d.regime != Regime::Bulk {
                return Err(invalid("--reference semicircle needs --regime bulk"));
            }
            Ok(semicircle_bin_averages(&d.edges))
        }
        Reference::Aibeta => {
            if d.regime != Regime::Edge {
                return Err(invalid("--reference aibeta needs --regime edge"));
            }
            let b = params.beta;
            if !(b == 1.0 || b == 2.0 || b == 4.0) {
                return Err(Error::Unsupported(format!(
                    "--reference aibeta has a closed form only for beta in {{1, 2, 4}} (got {b})"
                )));
            }
            edge_density_closed(b as u32, 0.0)?;
            Ok(bin_averages(&d.edges, |t| edge_density_closed(b as u32, t).map(|v| v.value).unwrap_or(f64::NAN)))
        }
    }
}

fn cmd_density(config: &RunConfig, a: &DensityArgs) -> Result<Outcome> {
    let grid = GridSpec::new(a.lo, a.hi, a.bins).map_err(|_| {
        invalid(format!("--lo/--hi/--bins must give finite lo < hi and bins >= 1 (got {}, {}, {})", a.lo, a.hi, a.bins))
    })?;
    let edges = grid.edges();
    let (params, seed) = density_params(a)?;
    let (d, conservation) = match &a.spectra {
        Some(path) => {
            let spectra = read_spectra_csv(path)?;
            if let Some(bad) = spectra.iter().find(|s| s.len() != params.n) {
                return Err(invalid(format!("spectra file has a replicate with {} values, --n is {}", bad.len(), params.n)));
            }
            let scaled: Vec<Vec<f64>> = spectra.iter().map(|s| rescale(s, &params, a.regime)).collect();
            (estimate_density(&scaled, &edges, a.regime, Some(params))?, None)
        }
        None => {
            if a.reps == 0 {
                return Err(invalid("--reps must be at least 1"));
            }
            let (acc, tally) = simulate_histogram(&params, a.seed, a.reps, &edges, a.regime, threads_of(config))?;
            (acc.finish(a.regime, Some(params))?, Some(tally))
        }
    };
    if d.outside_fraction >= 1.0 {
        return Err(invalid(format!(
            "grid --lo {} --hi {} contains none of the {}-rescaled eigenvalues",
            a.lo, a.hi, a.regime
        )));
    }
    let reference = a.reference.map(|r| reference_column(r, &d, &params)).transpose()?;
    let mut buf = Vec::new();
    write_density_csv(&mut buf, &d, reference.as_deref()).expect("write to memory");
    let summary = json!({
        "regime": a.regime,
        "params": params,
        "seed": seed,
        "n_samples": d.n_samples,
        "grid": grid,
        "outside_fraction": d.outside_fraction,
        "mass_on_grid": d.mass(),
        "reference": a.reference,
        "conservation": conservation,
        "tolerances": { "conservation": conservation_tolerances() },
    });
    Ok(Outcome { data: String::from_utf8(buf).expect("ascii csv"), sidecar: Some(sidecar_body(config, summary)), checks_failed: false })
}

fn special_points(a: &SpecialArgs) -> Result<Vec<f64>> {
    let mut xs = a.x.clone();
    if let Some(r) = &a.range {
        let parts: Vec<f64> = r
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(format!("--range must be lo:hi:step, got {r:?}")))?;
        match parts[..] {
            [lo, hi, step] if step > 0.0 && lo <= hi && ((hi - lo) / step) < 1e7 => {
                let k = ((hi - lo) / step + 1e-9).floor() as usize;
                xs.extend((0..=k).map(|i| lo + step * i as f64));
            }
            _ => return Err(invalid(format!("--range must be lo:hi:step with step > 0 and lo <= hi, got {r:?}"))),
        }
    }
    if xs.is_empty() {
        return Err(invalid("give at least one point with --x or --range"));
    }
    if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
        return Err(invalid(format!("--x must be finite, got {bad}")));
    }
    Ok(xs)
}

fn cmd_special(config: &RunConfig, a: &SpecialArgs) -> Result<Outcome> {
    let xs = special_points(a)?;
    let ctrl: QuadratureControls = a.quadrature.into();
    let mut data = String::new();
    let mut degraded = Vec::new();
    let mut unconverged = Vec::new();
    match a.function {
        SpecialFn::Ai | SpecialFn::AiPrime | SpecialFn::AiTail => {
            data.push_str("x,value\n");
            for &x in &xs {
                let e = airy(x);
                if e.accuracy == AiryAccuracy::Degraded {
                    degraded.push(x);
                }
                let v = match a.function {
                    SpecialFn::Ai => e.ai,
                    SpecialFn::AiPrime => e.ai_prime,
                    _ => airy_tail(x),
                };
                writeln!(data, "{x},{v}").expect("write to string");
            }
        }
        SpecialFn::Aibeta => {
            let b = a.beta.ok_or_else(|| invalid("--fn aibeta needs --beta (1, 2 or 4)"))?;
            if !(b == 1.0 || b == 2.0 || b == 4.0) {
                return Err(Error::Unsupported(format!(
                    "--fn aibeta has a closed form for --beta 1, 2 or 4 (got {b}); for other even beta use --fn kontsevich --n <beta> --beta <beta> and multiply by the edge prefactor"
                )));
            }
            data.push_str("x,value\n");
            for &x in &xs {
                writeln!(data, "{x},{}", edge_density_closed(b as u32, x)?.value).expect("write to string");
            }
        }
        SpecialFn::Kontsevich => {
            let n = a.n.ok_or_else(|| invalid("--fn kontsevich needs --n"))?;
            let b = a.beta.ok_or_else(|| invalid("--fn kontsevich needs --beta"))?;
            data.push_str("x,value,error_estimate\n");
            for &x in &xs {
                let k = kontsevich_k_with(n, b, x, a.route, &ctrl)?;
                if !k.converged {
                    unconverged.push(x);
                }
                writeln!(data, "{x},{},{}", k.value, k.error_estimate).expect("write to string");
            }
        }
    }
    let summary = json!({
        "function": a.function,
        "points": xs.len(),
        "airy_degraded_points": degraded,
        "unconverged_points": unconverged,
        "tolerances": { "quadrature": ctrl },
    });
    Ok(Outcome { data, sidecar: Some(sidecar_body(config, summary)), checks_failed: false })
}

fn cmd_verify(config: &RunConfig, a: &VerifyArgs) -> Result<Outcome> {
    if let Some(n) = a.n {
        if n < 2 {
            return Err(invalid("--n must be at least 2"));
        }
    }
    let opts = VerifyOptions {
        n: a.n,
        beta: a.beta,
        seed: a.seed,
        reps: a.reps,
        threads: threads_of(config),
        quadrature: a.quadrature.into(),
    };
    let reports: Vec<CheckReport> = run_checks(&a.check, &opts);
    let all_pass = reports.iter().all(|r| r.pass);
    let body = json!({
        "config": config,
        "versions": { "betatrace": VERSION, "format": 1 },
        "all_pass": all_pass,
        "reports": reports,
    });
    let mut data = serde_json::to_string_pretty(&body)?;
    data.push('\n');
    Ok(Outcome { data, sidecar: None, checks_failed: !all_pass })
}

/// Exit status for an error: usage and input problems are 2, numerical
/// failures 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Unsupported(_) | Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => 2,
        Error::Numeric(_) | Error::NoConvergence { .. } => 1,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

fn emit(config: &RunConfig, outcome: &Outcome) -> Result<()> {
    match config.command.out() {
        Some(p) => write_file(p, &outcome.data)?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(outcome.data.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })?;
        }
    }
    if let (Some(side), Some(body)) = (config.command.sidecar(), &outcome.sidecar) {
        write_file(&side, &(serde_json::to_string_pretty(body)? + "\n"))?;
    }
    Ok(())
}

fn replay(args: &ReplayArgs, threads: Option<usize>) -> Result<i32> {
    let mut config = read_config_json(&args.sidecar)?;
    if threads.is_some() {
        config.threads = threads;
    }
    if let Some(out) = &args.out {
        config.command.set_out(Some(out.clone()));
        let outcome = execute(&config)?;
        emit(&config, &outcome)?;
        return Ok(i32::from(outcome.checks_failed));
    }
    let outcome = execute(&config)?;
    match config.command.out() {
        Some(p) => {
            let recorded = std::fs::read_to_string(p).map_err(|source| Error::Io { path: p.into(), source })?;
            if recorded == outcome.data {
                eprintln!("reproduced {}", p.display());
                Ok(0)
            } else {
                eprintln!("output differs from {}", p.display());
                Ok(1)
            }
        }
        None => {
            std::io::stdout().write_all(outcome.data.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })?;
            Ok(i32::from(outcome.checks_failed))
        }
    }
}

pub fn config_from_cli(cli: Cli) -> std::result::Result<RunConfig, ReplayArgs> {
    let command = match cli.command {
        CliCommand::Sample(a) => Command::Sample(a),
        CliCommand::Density(a) => Command::Density(a),
        CliCommand::Special(a) => Command::Special(a),
        CliCommand::Verify(a) => Command::Verify(a),
        CliCommand::Replay(r) => return Err(r),
    };
    Ok(RunConfig { threads: cli.threads, command })
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let threads = cli.threads;
    let result = match config_from_cli(cli) {
        Ok(config) => execute(&config).and_then(|o| {
            emit(&config, &o)?;
            if let Command::Verify(_) = config.command {
                if let Ok(v) = serde_json::from_str::<Value>(&o.data) {
                    for r in v["reports"].as_array().into_iter().flatten() {
                        eprintln!("{} {} metric={} tolerance={}", if r["pass"] == true { "PASS" } else { "FAIL" }, r["check_name"].as_str().unwrap_or("?"), r["metric"], r["tolerance"]);
                    }
                }
            }
            Ok(i32::from(o.checks_failed))
        }),
        Err(r) => replay(&r, threads),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
