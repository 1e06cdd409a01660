use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use su2tomo::generate::{GeneratorKind, DEFAULT_PLATE_FRACTION};
use su2tomo::parallel::{with_threads, THREADS_ENV};
use su2tomo::reconstruct::{GaConfig, MleConfig};

mod commands;
mod png;
mod report;
mod spec;

/// Simulation and tomography of space-dependent polarization gates.
#[derive(Debug, Parser)]
#[command(name = "su2tomo", version)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = THREADS_ENV, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic training corpus.
    Generate(GenerateArgs),
    /// Simulate the five measurements of a described process.
    Simulate(SimulateArgs),
    /// Reconstruct process maps from measurement stacks.
    Reconstruct(ReconstructArgs),
    /// Time reconstruction methods on a dataset and write a CSV table.
    Bench(BenchArgs),
    /// Score externally predicted maps against a reference dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    Fourier,
    Plate,
    Mixed,
}

impl From<KindArg> for GeneratorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Fourier => GeneratorKind::Fourier,
            KindArg::Plate => GeneratorKind::Plate,
            KindArg::Mixed => GeneratorKind::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    Ga,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mle => "mle",
            Self::Ga => "ga",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// Number of samples.
    #[arg(long, default_value_t = 50_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    /// Pixels per side.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    /// Gaussian noise added to every intensity.
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = KindArg::Fourier)]
    pub kind: KindArg,
    /// Share of plate samples when `--kind mixed`.
    #[arg(long, default_value_t = DEFAULT_PLATE_FRACTION)]
    pub plate_fraction: f64,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// JSON process description.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory (a one-sample dataset holding the stack and the true process).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    /// Also write clamped 8-bit grayscale PNGs of the five images.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MleArgs {
    #[arg(long, default_value_t = MleConfig::default().n_starts)]
    pub n_starts: usize,
    #[arg(long, default_value_t = MleConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = MleConfig::default().tolerance)]
    pub tolerance: f64,
}

impl MleArgs {
    pub fn config(&self) -> MleConfig {
        MleConfig {
            n_starts: self.n_starts,
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            ..MleConfig::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GaArgs {
    #[arg(long, default_value_t = GaConfig::default().population_size)]
    pub population: usize,
    #[arg(long, default_value_t = GaConfig::default().generations)]
    pub generations: usize,
    #[arg(long, default_value_t = GaConfig::default().mutation_std)]
    pub mutation_std: f64,
    #[arg(long, default_value_t = GaConfig::default().rng_seed)]
    pub ga_seed: u64,
    /// Resolve per-pixel signs of the GA output with the stitching pass.
    #[arg(long)]
    pub stitched: bool,
}

impl GaArgs {
    pub fn config(&self) -> GaConfig {
        GaConfig {
            population_size: self.population,
            generations: self.generations,
            mutation_std: self.mutation_std,
            rng_seed: self.ga_seed,
            ..GaConfig::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    /// Dataset directory whose inputs are the measurement stacks.
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Mle)]
    pub method: Method,
    /// Only this sample of the stack dataset.
    #[arg(long)]
    pub index: Option<usize>,
    /// Dataset whose targets are the true processes; adds fidelities to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory: dataset of reconstructions plus `report.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub mle: MleArgs,
    #[command(flatten)]
    pub ga: GaArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mle,ga")]
    pub methods: Vec<Method>,
    /// Timed runs per map.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub repetitions: u64,
    /// Benchmark only the first this many maps.
    #[arg(long)]
    pub limit: Option<usize>,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub mle: MleArgs,
    #[command(flatten)]
    pub ga: GaArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Bare target-layout file (`count × 3 × N × N` float32 LE), e.g. network predictions.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Dataset providing N, the sample count, the measured stacks and the true processes.
    #[arg(long)]
    pub reference: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.map(|t| t as usize);
    let result = with_threads(threads, move || match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
    })
    .map_err(anyhow::Error::from)
    .and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
