use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "hyperbn",
    version,
    about = "Radial solutions of the Brezis-Nirenberg problem on hyperbolic space",
    long_about = "Shooting solver and verification harness for -Δu - λu = |u|^{p-2}u on the \
                  Poincaré ball. Every command writes JSON reports, CSV tables and a run \
                  manifest into its output directory."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the radial solution with a given number of nodes
    #[command(args_override_self = true)]
    Solve(SolveArgs),
    /// Classify a grid of shots below the existence threshold
    #[command(args_override_self = true)]
    Scan(ScanArgs),
    /// Follow a k-node branch along exponents increasing to 2N/(N-2)
    #[command(args_override_self = true)]
    Branch(BranchArgs),
    /// Re-run the diagnostics on a stored solve run
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Radial Dirichlet eigenvalues of the Euclidean unit ball
    #[command(args_override_self = true)]
    Eig(EigArgs),
    /// Minimize the Poincaré-Sobolev quotient over radial profiles
    #[command(args_override_self = true)]
    Sobolev(SobolevArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Scan(_) => "scan",
            Command::Branch(_) => "branch",
            Command::Verify(_) => "verify",
            Command::Eig(_) => "eig",
            Command::Sobolev(_) => "sobolev",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Solve(a) => &a.common,
            Command::Scan(a) => &a.common,
            Command::Branch(a) => &a.common,
            Command::Verify(a) => &a.common,
            Command::Eig(a) => &a.common,
            Command::Sobolev(a) => &a.common,
        }
    }
}

/// Exponent given on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Value(f64),
    Critical,
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Exponent::Value(p) => s.serialize_f64(*p),
            Exponent::Critical => s.serialize_str("critical"),
        }
    }
}

impl Exponent {
    pub fn resolve(self, dim: usize) -> f64 {
        match self {
            Exponent::Value(p) => p,
            Exponent::Critical => {
                let n = dim as f64;
                2.0 * n / (n - 2.0)
            }
        }
    }
}

fn parse_exponent(s: &str) -> Result<Exponent, String> {
    if s == "critical" {
        return Ok(Exponent::Critical);
    }
    s.parse::<f64>()
        .map(Exponent::Value)
        .map_err(|_| format!("expected a number or `critical`, got `{s}`"))
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Output directory [default: $HYPERBN_OUT/<command>-<digest>, or hyperbn-out/...]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized initial data
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File of key=value lines used as flag defaults; explicit flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Problem {
    /// Dimension N >= 3
    #[arg(long)]
    pub dim: usize,
    /// Spectral parameter λ
    #[arg(long)]
    pub lambda: f64,
    /// Exponent p in (2, 2N/(N-2)], or `critical`
    #[arg(long, default_value = "critical", value_parser = parse_exponent)]
    pub p: Exponent,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Shooting {
    /// Relative tolerance of the radial integrator
    #[arg(long, default_value = "1e-10")]
    pub tol: f64,
    /// Largest geodesic radius integrated
    #[arg(long, default_value_t = 60.0)]
    pub rmax: f64,
    /// Relative width at which amplitude bisection stops
    #[arg(long, default_value = "1e-12")]
    pub tol_a: f64,
    /// Smallest amplitude of the scan grid
    #[arg(long, default_value = "1e-3")]
    pub a_min: f64,
    /// Largest amplitude of the scan grid
    #[arg(long, default_value = "1e3")]
    pub a_max: f64,
    /// Number of log-spaced scan amplitudes
    #[arg(long, default_value_t = 60)]
    pub grid_points: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: Problem,
    /// Number of interior sign changes
    #[arg(long, default_value_t = 0)]
    pub nodes: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub shooting: Shooting,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: Problem,
    #[command(flatten)]
    #[serde(flatten)]
    pub shooting: Shooting,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BranchArgs {
    /// Dimension N >= 3
    #[arg(long)]
    pub dim: usize,
    /// Spectral parameter λ
    #[arg(long)]
    pub lambda: f64,
    /// Number of interior sign changes
    #[arg(long, default_value_t = 0)]
    pub nodes: usize,
    /// Offset of the first exponent below 2N/(N-2); later offsets halve
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    /// Number of subcritical exponents before the critical one
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Explicit comma-separated exponents, replacing --delta and --count
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub shooting: Shooting,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    /// Directory of a previous solve run
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Euclidean radii of the local Pohozaev balance
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.6,0.9")]
    pub radii: Vec<f64>,
    /// Annulus widths for the gradient scaling fit
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125,0.00625,0.003125")]
    pub eps: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EigArgs {
    /// Dimension N >= 3
    #[arg(long)]
    pub dim: usize,
    /// Number of eigenvalues
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SobolevArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: Problem,
    /// Finite elements on the graded grid s_i = (i/M)^3
    #[arg(long, default_value_t = 400)]
    pub elements: usize,
    /// Descent iterations
    #[arg(long, default_value_t = 3000)]
    pub max_iter: usize,
    /// Relative decrease below which the descent stops
    #[arg(long, default_value = "1e-12")]
    pub tol: f64,
    /// Relative size of the random perturbation of the initial bubble
    #[arg(long, default_value_t = 0.1)]
    pub perturbation: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Splices the `key=value` lines of a `--config` file into the argument list
/// right after the subcommand, so that later command-line flags override them.
pub fn expand_config(args: Vec<String>) -> anyhow::Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = args.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| crate::Failure::Invalid(format!("cannot read config {path}: {e}")))?;
    let mut inserted = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            crate::Failure::Invalid(format!("{path}:{}: expected key=value", n + 1))
        })?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => inserted.push(flag),
            "false" => {}
            v => {
                inserted.push(flag);
                inserted.push(v.to_string());
            }
        }
    }
    let mut out: Vec<String> = args.iter().take(2).cloned().collect();
    out.extend(inserted);
    out.extend(args.into_iter().skip(2));
    Ok(out)
}
