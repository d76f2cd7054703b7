//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 invalid input,
//! 3 solver non-convergence.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cheeger::{cheeger_inner_parallel, cheeger_tv, CheegerSummary, TvParams};
use crate::grid::{build_domain, GridDomain, ShapeTag};
use crate::harness::{run_sweep, QPath, Tolerances};
use crate::plap::{minimize_rayleigh, SolveParams, SolveSummary};
use crate::verify::{Suite, SuiteConfig};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cheeger-lab", version, about = "p-Laplacian constants and Cheeger limits on planar grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimise the Rayleigh quotient for one (p, q).
    Solve(Flags),
    /// Compute the Cheeger constant.
    Cheeger(Flags),
    /// Continuation sweep towards p = 1 along a q-path (CSV).
    Sweep(Flags),
    /// Run the acceptance suite.
    Verify(Flags),
}

#[derive(Debug, Default, Args)]
struct Flags {
    /// square[:side] | disk[:radius] | rectangle:a:b | lshape[:side] | mask:<file>
    #[arg(long)]
    domain: Option<String>,
    /// Grid cells along the longest side.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Disk radius.
    #[arg(long)]
    r: Option<f64>,
    /// one | p | pow:<beta> | list:<file>
    #[arg(long)]
    path: Option<String>,
    /// Comma-separated, strictly decreasing.
    #[arg(long = "p-list", value_delimiter = ',', allow_hyphen_values = true)]
    p_list: Option<Vec<f64>>,
    /// inner | tv
    #[arg(long)]
    method: Option<String>,
    /// Residual tolerance (solve, sweep) or bracket width on h (cheeger).
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; a directory for verify.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flat JSON object with the same keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Flag values, from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Option<String>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub path: Option<String>,
    pub p_list: Option<Vec<f64>>,
    pub method: Option<String>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Overrides of the verification tolerances.
    pub tolerances: Option<Tolerances>,
}

impl RunConfig {
    /// `self` with every value set in `over` replaced.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            domain: over.domain.or(self.domain),
            n: over.n.or(self.n),
            p: over.p.or(self.p),
            q: over.q.or(self.q),
            r: over.r.or(self.r),
            path: over.path.or(self.path),
            p_list: over.p_list.or(self.p_list),
            method: over.method.or(self.method),
            tol: over.tol.or(self.tol),
            out: over.out.or(self.out),
            seed: over.seed.or(self.seed),
            tolerances: over.tolerances.or(self.tolerances),
        }
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut add = |set: bool, k| {
            if set {
                keys.push(k)
            }
        };
        add(self.domain.is_some(), "domain");
        add(self.n.is_some(), "n");
        add(self.p.is_some(), "p");
        add(self.q.is_some(), "q");
        add(self.r.is_some(), "r");
        add(self.path.is_some(), "path");
        add(self.p_list.is_some(), "p_list");
        add(self.method.is_some(), "method");
        add(self.tol.is_some(), "tol");
        add(self.out.is_some(), "out");
        add(self.seed.is_some(), "seed");
        add(self.tolerances.is_some(), "tolerances");
        keys
    }

    fn only(&self, command: &str, allowed: &[&str]) -> crate::Result<()> {
        for k in self.set_keys() {
            if !allowed.contains(&k) {
                return Err(Error::InvalidArgument(format!("`{k}` does not apply to {command}")));
            }
        }
        Ok(())
    }
}

impl From<Flags> for RunConfig {
    fn from(f: Flags) -> Self {
        RunConfig {
            domain: f.domain,
            n: f.n,
            p: f.p,
            q: f.q,
            r: f.r,
            path: f.path,
            p_list: f.p_list,
            method: f.method,
            tol: f.tol,
            out: f.out,
            seed: f.seed,
            tolerances: None,
        }
    }
}

const DEFAULT_N: usize = 128;
const DEFAULT_P_LIST: [f64; 5] = [1.6, 1.4, 1.2, 1.1, 1.05];

#[derive(Debug, Serialize)]
struct SolveOutput {
    domain: String,
    n: usize,
    spacing: f64,
    #[serde(flatten)]
    summary: SolveSummary,
}

#[derive(Debug, Serialize)]
struct CheegerOutput {
    domain: String,
    n: usize,
    spacing: f64,
    #[serde(flatten)]
    summary: CheegerSummary,
}

enum Failure {
    Invalid(Error),
    NoConvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TvNotConverged { .. }
            | Error::NoSignChange(_)
            | Error::Factorization(_)
            | Error::SweepAborted { .. } => Failure::NoConvergence(e.to_string()),
            other => Failure::Invalid(other),
        }
    }
}

fn load_config(path: &Path) -> crate::Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_domain(cfg: &RunConfig) -> crate::Result<Arc<GridDomain>> {
    let arg = cfg.domain.as_deref().unwrap_or("square");
    if let Some(file) = arg.strip_prefix("mask:") {
        if cfg.n.is_some() || cfg.r.is_some() {
            return Err(Error::InvalidArgument("`n` and `r` do not apply to a mask domain".into()));
        }
        let reader = BufReader::new(File::open(file)?);
        return Ok(Arc::new(GridDomain::read_mask(reader)?));
    }
    let mut shape: ShapeTag = arg.parse()?;
    if let Some(r) = cfg.r {
        match &mut shape {
            ShapeTag::Disk { radius } => *radius = r,
            _ => return Err(Error::InvalidArgument("`r` only applies to a disk".into())),
        }
    }
    Ok(Arc::new(build_domain(shape, cfg.n.unwrap_or(DEFAULT_N))?))
}

fn domain_n(domain: &GridDomain) -> usize {
    domain.nx().max(domain.ny()) - 1
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> crate::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> crate::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn solve_params(cfg: &RunConfig) -> SolveParams {
    let mut sp = SolveParams::default();
    if let Some(t) = cfg.tol {
        sp.tol_residual = t;
    }
    if let Some(s) = cfg.seed {
        sp.seed = s;
    }
    sp
}

fn read_q_list(file: &str) -> crate::Result<Vec<f64>> {
    let text = fs::read_to_string(file)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad q value `{s}` in {file}"))))
        .collect()
}

fn cmd_solve(cfg: &RunConfig) -> Result<i32, Failure> {
    cfg.only("solve", &["domain", "n", "p", "q", "r", "tol", "out", "seed"])?;
    let domain = load_domain(cfg)?;
    let p = cfg.p.unwrap_or(2.0);
    let q = cfg.q.unwrap_or(p);
    let result = minimize_rayleigh(&domain, p, q, &solve_params(cfg), None)?;
    let out = SolveOutput {
        domain: domain.shape().to_string(),
        n: domain_n(&domain),
        spacing: domain.spacing(),
        summary: result.summary(),
    };
    write_output(cfg.out.as_deref(), &json_bytes(&out)?)?;
    if result.converged {
        Ok(EXIT_OK)
    } else {
        Err(Failure::NoConvergence(format!(
            "no convergence after {} iterations (residual {:e})",
            result.iterations, result.residual
        )))
    }
}

fn cmd_cheeger(cfg: &RunConfig) -> Result<i32, Failure> {
    cfg.only("cheeger", &["domain", "n", "r", "method", "tol", "out"])?;
    let domain = load_domain(cfg)?;
    let result = match cfg.method.as_deref().unwrap_or("inner") {
        "inner" => cheeger_inner_parallel(&domain, cfg.tol.unwrap_or(1e-6))?,
        "tv" => {
            let mut params = TvParams::default();
            if let Some(t) = cfg.tol {
                params.tol = t;
            }
            cheeger_tv(&domain, &params)?
        }
        other => return Err(Failure::Invalid(Error::InvalidArgument(format!("unknown method `{other}`")))),
    };
    let out = CheegerOutput {
        domain: domain.shape().to_string(),
        n: domain_n(&domain),
        spacing: domain.spacing(),
        summary: result.summary(),
    };
    write_output(cfg.out.as_deref(), &json_bytes(&out)?)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<i32, Failure> {
    cfg.only("sweep", &["domain", "n", "r", "path", "p_list", "tol", "out", "seed"])?;
    let domain = load_domain(cfg)?;
    let p_list = cfg.p_list.clone().unwrap_or_else(|| DEFAULT_P_LIST.to_vec());
    let arg = cfg.path.as_deref().unwrap_or("one");
    let path = match arg.strip_prefix("list:") {
        Some(file) => QPath::Explicit { values: read_q_list(file)? },
        None => arg.parse()?,
    };
    let sweep = run_sweep(&domain, &path, &p_list, &solve_params(cfg))?;
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf)?;
    write_output(cfg.out.as_deref(), &buf)?;
    match sweep.aborted {
        None => Ok(EXIT_OK),
        Some(e) => Err(Failure::NoConvergence(e.to_string())),
    }
}

fn cmd_verify(cfg: &RunConfig) -> Result<i32, Failure> {
    cfg.only("verify", &["n", "out", "seed", "tolerances"])?;
    let mut config = SuiteConfig::at_resolution(cfg.n.unwrap_or(DEFAULT_N));
    if let Some(s) = cfg.seed {
        config.seed = s;
    }
    if let Some(t) = &cfg.tolerances {
        config.tolerances = t.clone();
    }
    let suite = Suite::new(config);
    let report = suite.run();
    for c in &report.criteria {
        eprintln!("{}", c.line());
    }
    let files = suite.artifacts(&report)?;
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(Error::from)?;
            for (name, bytes) in &files {
                fs::write(dir.join(name), bytes).map_err(Error::from)?;
            }
        }
        None => write_output(None, &files[0].1)?,
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (name, flags) = match cli.command {
        Command::Solve(f) => ("solve", f),
        Command::Cheeger(f) => ("cheeger", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Verify(f) => ("verify", f),
    };
    let config_path = flags.config.clone();
    let from_flags = RunConfig::from(flags);
    let cfg = match config_path {
        Some(path) => match load_config(&path) {
            Ok(file) => file.overlay(from_flags),
            Err(e) => {
                eprintln!("error: config {}: {e}", path.display());
                return EXIT_INVALID;
            }
        },
        None => from_flags,
    };
    let outcome = match name {
        "solve" => cmd_solve(&cfg),
        "cheeger" => cmd_cheeger(&cfg),
        "sweep" => cmd_sweep(&cfg),
        _ => cmd_verify(&cfg),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
        Err(Failure::NoConvergence(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NO_CONVERGENCE
        }
    }
}
