mod commands;
mod input;
mod suite;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Energies, heights and equilibrium measures of Lattès maps over the rationals.
#[derive(Parser, Debug)]
#[command(name = "arakelov", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Place: `inf`, `trivial`, or a prime.
    #[arg(long, global = true, default_value = "inf")]
    pub place: String,
    /// Exponent applied to the chosen place.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Random seed; the ARAKELOV_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Sample count for archimedean Monte Carlo estimates.
    #[arg(long, global = true, default_value_t = 8000)]
    pub arch_samples: usize,
    /// Atoms per segment for the discretized oracle.
    #[arg(long, global = true, default_value_t = 2000)]
    pub oracle_n: usize,
    /// Matching and quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reduced problem sizes.
    #[arg(long, global = true)]
    pub quick: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Valuations, absolute values and heights.
    #[command(subcommand)]
    Places(commands::PlacesCmd),
    /// Geometry of the ultrametric tree.
    #[command(subcommand)]
    Tree(commands::TreeCmd),
    /// Local energies of segment, circle and sampled measures.
    #[command(subcommand)]
    Energy(commands::EnergyCmd),
    /// Lattès maps, equilibrium segments and torsion images.
    #[command(subcommand)]
    Lattes(commands::LattesCmd),
    /// Global energies, heights and scans over configurations.
    #[command(subcommand)]
    Adelic(commands::AdelicCmd),
    /// Invariant battery.
    Suite,
}

/// Failure of a command, mapped to exit code 1.
#[derive(Debug)]
pub enum Failure {
    Domain(arakelov::Error),
    Io(String),
    /// A check battery ran to completion with failing checks.
    Checks(Value),
}

impl From<arakelov::Error> for Failure {
    fn from(e: arakelov::Error) -> Self {
        Failure::Domain(e)
    }
}

impl Failure {
    fn code(&self) -> &'static str {
        match self {
            Failure::Domain(e) => e.code(),
            Failure::Io(_) => "Io",
            Failure::Checks(_) => "ChecksFailed",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Domain(e) => e.to_string(),
            Failure::Io(m) => m.clone(),
            Failure::Checks(_) => "one or more checks failed".into(),
        }
    }
}

/// Resolved run settings shared by all commands.
pub struct Context {
    pub global: Global,
    pub seed: u64,
}

fn digest(args: &[String], files: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for a in args {
        h.update(a.as_bytes());
        h.update([0]);
    }
    for f in files {
        h.update(f);
        h.update([0]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn emit(doc: &Value, out: Option<&PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| Failure::Io(e.to_string()))? + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn resolve_seed(flag: u64) -> Result<u64, clap::Error> {
    match std::env::var("ARAKELOV_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| {
            clap::Error::raw(
                clap::error::ErrorKind::ValueValidation,
                format!("ARAKELOV_SEED must be an unsigned integer, got {s:?}\n"),
            )
        }),
        Err(_) => Ok(flag),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let seed = match resolve_seed(cli.global.seed) {
        Ok(s) => s,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let ctx = Context { global: cli.global.clone(), seed };
    let mut inputs = Vec::new();
    let outcome = commands::run(&cli.command, &ctx, &mut inputs);
    let manifest = json!({
        "command": argv[1..].join(" "),
        "input_digest": digest(&argv[1..], &inputs),
        "seed": seed,
        "versions": { "arakelov": arakelov::VERSION, "cli": env!("CARGO_PKG_VERSION") },
    });
    let (doc, status) = match outcome {
        Ok(result) => (json!({ "manifest": manifest, "result": result }), 0u8),
        Err(Failure::Checks(result)) => (json!({ "manifest": manifest, "result": result }), 1),
        Err(f) => {
            eprintln!("error: {}: {}", f.code(), f.message());
            (json!({ "manifest": manifest, "error": { "code": f.code(), "message": f.message() } }), 1)
        }
    };
    if let Err(f) = emit(&doc, ctx.global.out.as_ref()) {
        eprintln!("error: {}: {}", f.code(), f.message());
        return ExitCode::from(1);
    }
    eprintln!("wall_time_s: {:.3}", start.elapsed().as_secs_f64());
    ExitCode::from(status)
}
