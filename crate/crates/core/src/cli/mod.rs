//! Command-line front end. Exit codes: 0 pass, 2 assertion failure,
//! 1 usage or input error.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
pub use config::{load_config, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "swl", version, about = "Schrödinger-adapted weights, maximal operators and extrapolation on finite grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Critical radius field of the potential
    Rho,
    /// Reverse Hölder constant of the potential at exponent q
    RhCheck,
    /// Maximal function of the input
    Maximal,
    /// A_p^{ρ,θ} constant of the weight
    Ap,
    /// Penalised BMO norm of the input
    Bmo,
    /// Calderón–Zygmund decomposition of the input at level lambda
    Czd,
    /// Factorisation of the weight into two A_1 factors
    Factorize,
    /// Rubio de Francia majorant of the input
    Rdf,
    /// Exponent budget of the vector-valued maximal theorem
    Budget,
    /// Run a verification suite (or `all`)
    Verify { suite: String },
    /// Aggregate suite results in the output directory into regression.json
    Report,
}

/// Flags override values from `--config`. Defaults: n=2, N=64, L=2,
/// potential=one, weight=one, p=2, q=2, r=2, theta=1, delta=0.5, l0=1,
/// variant=cube, out=out, seed=0.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// JSON config file with flat keys
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "N", global = true)]
    pub points: Option<usize>,
    #[arg(long = "L", global = true)]
    pub half_width: Option<f64>,
    /// one | square_norm | const:<c> | <manifest.gfd.json>
    #[arg(long, global = true)]
    pub potential: Option<String>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub l0: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// one | decay:<gamma> | radial:<a> | <manifest.gfd.json>
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// Input function as a GFD manifest
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// cube | dyadic | centered | phi
    #[arg(long, global = true)]
    pub variant: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn resolve(&self) -> crate::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { c.$f = v.clone(); })*};
        }
        set!(n, points, half_width, potential, p, q, r, theta, delta, l0, weight, variant, out, seed);
        if self.eta.is_some() {
            c.eta = self.eta;
        }
        if self.lambda.is_some() {
            c.lambda = self.lambda;
        }
        if self.input.is_some() {
            c.input = self.input.clone();
        }
        c.validate()?;
        c.check_paths()?;
        Ok(c)
    }
}

/// Outcome of a command: one-line summary and pass flag.
pub struct Outcome {
    pub summary: String,
    pub pass: bool,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Divergence(_) | Error::HypothesisFails(_) => 2,
        _ => 1,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> ExitCode {
    if let Ok(t) = std::env::var("SWL_THREADS") {
        crate::par::init_threads(t.parse().ok());
    }
    let cfg = match cli.overrides.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match commands::dispatch(&cli.command, &cfg) {
        Ok(o) => {
            println!("{}", o.summary);
            ExitCode::from(if o.pass { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { 1 } else { 0 })
        }
    }
}

/// Runs `verify` in-process and returns the regression file bytes.
pub fn verify_to_bytes(suite: &str, cfg: &RunConfig) -> crate::Result<(Vec<u8>, bool)> {
    commands::verify_bytes(suite, cfg)
}
