use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gft_core::classes::DEFAULT_ZETA_SAMPLES;
use gft_core::generators::BaseKind;
use gft_core::sampling::{DEFAULT_QUADRATURE_STEPS, DEFAULT_R_MAX};
use gft_core::series::DEFAULT_DEGREE;

mod commands;

use commands::Verdict;

#[derive(Parser, Debug)]
#[command(name = "gft", version, about = "Membership checks and theorem sweeps for p-valent close-to-convex classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check whether f belongs to the class defined by g.
    Check(CheckArgs),
    /// Build the symmetrized product of g and its reduced form.
    Gk(GkArgs),
    /// Tabulate the distortion and growth bounds.
    Bounds(BoundsArgs),
    /// Synthesize a certified member and write it as JSON fixtures.
    Synth(SynthArgs),
    /// Run every checker over synthesized members across a parameter grid.
    VerifyAll(VerifyAllArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ClassArgs {
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
}

#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    /// Outer sampling radius.
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Sample points per circle.
    #[arg(long)]
    pub angles: Option<usize>,
    /// Comma-separated circle radii.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Margin tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ZETA_SAMPLES)]
    pub zeta_samples: usize,
    /// Quadrature steps for the growth bounds.
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_STEPS)]
    pub steps: usize,
    /// Sampling policy JSON used as the base before the flags above apply.
    #[arg(long, env = "GFT_DEFAULT_POLICY")]
    pub policy_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// JSON series for f.
    #[arg(long)]
    pub f: PathBuf,
    /// JSON series for g.
    #[arg(long)]
    pub g: PathBuf,
    #[command(flatten)]
    pub class: ClassArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Args, Debug)]
pub struct GkArgs {
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub k: u32,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Comma-separated radii in [0, 1).
    #[arg(long, value_delimiter = ',', default_values_t = default_bound_radii())]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_STEPS)]
    pub steps: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn default_bound_radii() -> Vec<f64> {
    let mut r: Vec<f64> = (0..10).map(|i| f64::from(i) / 10.0).collect();
    r.push(DEFAULT_R_MAX);
    r
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Base {
    Perturbed,
    Extremal,
}

impl From<Base> for BaseKind {
    fn from(b: Base) -> Self {
        match b {
            Base::Perturbed => BaseKind::Perturbed,
            Base::Extremal => BaseKind::Extremal,
        }
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub class: ClassArgs,
    /// Degree of the random Schwarz polynomial.
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    /// Cap on the Schwarz function modulus.
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    /// Truncation degree of the member; extremal bases default to an adequate degree.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Base::Perturbed)]
    pub base: Base,
    /// Directory receiving f.json, g.json and certificate.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Args, Debug)]
pub struct VerifyAllArgs {
    /// Members per parameter cell.
    #[arg(long, default_value_t = 2)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Perturb every member; the sweep must then report failures.
    #[arg(long)]
    pub corrupt: bool,
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    pub degree: usize,
    #[arg(long, default_value_t = 4)]
    pub schwarz_degree: usize,
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub p: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub k: Vec<u32>,
    /// Values of gamma as fractions of p.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5])]
    pub gamma_fractions: Vec<f64>,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Verdict::InputError.code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check(a) => commands::check(&a),
        Command::Gk(a) => commands::gk(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::VerifyAll(a) => commands::verify_all(&a),
    };
    match result {
        Ok((report, verdict)) => match serde_json::to_string_pretty(&report) {
            Ok(json) => {
                println!("{json}");
                ExitCode::from(verdict.code())
            }
            Err(e) => {
                eprintln!("error: cannot serialize report: {e}");
                ExitCode::from(Verdict::Inconsistent.code())
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Verdict::InputError.code())
        }
    }
}
