//! `tokgraph` command-line driver.
//!
//! Exit codes: 0 on success, 2 on invalid flags or inputs, 3 on I/O failures
//! and malformed files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tokgraph::tokenizer::SourceTag;
use tokgraph::toymodel::PartitionKind;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;

const THREADS_VAR: &str = "TOKGRAPH_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "tokgraph",
    version,
    about = "Toy-model spectra, K-means tokenizers and TCAS scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Brute-force bound report for one toy space and partition.
    ToymodelAnalyze(AnalyzeArgs),
    /// Exhaustive search for the partition minimizing the bound.
    ToymodelTheorem1(TheoremArgs),
    /// Train a K-means codebook on a patch file.
    TokenizerTrain(TrainArgs),
    /// Assign nearest-center tokens with a trained codebook.
    TokenizerApply(ApplyArgs),
    /// Score token assignments against true labels.
    TcasCompute(TcasArgs),
    /// Write a labeled Gaussian-blob patch set.
    SynthGenerate(SynthArgs),
    /// Cut a binary PGM/PPM image into a patch file.
    ImagePatches(ImagePatchesArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Number of classes s.
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Points per class.
    #[arg(long)]
    pub n: usize,
    /// Points shared by each pair of classes.
    #[arg(long)]
    pub m: usize,
    /// mae, class or cross:<l>.
    #[arg(long, value_parser = parse_partition)]
    pub partition: PartitionKind,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 2.5)]
    pub c2: f64,
    /// JSON report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also dump the normalized augmentation matrix as CSV.
    #[arg(long)]
    pub matrix_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 2.5)]
    pub c2: f64,
    /// Only consider partitions with at most this many blocks (default: all).
    #[arg(long)]
    pub max_blocks: Option<usize>,
    /// Drop this many leading eigenvalues from the spectral term.
    #[arg(long, default_value_t = 0)]
    pub skip_leading: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub patches: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub epochs: u32,
    /// Provenance tag stored in the codebook: pixel or feature.
    #[arg(long, default_value = "pixel", value_parser = parse_source)]
    pub source: SourceTag,
    /// Codebook output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON report with the per-epoch inertia.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub patches: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    /// Token file output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TcasArgs {
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Number of true classes l2.
    #[arg(long)]
    pub classes: usize,
    /// JSON report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the co-occurrence counts as CSV.
    #[arg(long)]
    pub cooccurrence_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: usize,
    #[arg(long)]
    pub per_class: usize,
    #[arg(long)]
    pub dim: usize,
    /// Radius of the sphere the class centers are drawn from.
    #[arg(long, default_value_t = 10.0)]
    pub spread: f64,
    /// Standard deviation of the per-coordinate noise.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Patch file output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Label file output path.
    #[arg(long)]
    pub labels_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImagePatchesArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub patch_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_partition(s: &str) -> Result<PartitionKind, String> {
    s.parse().map_err(|e: tokgraph::Error| e.to_string())
}

fn parse_source(s: &str) -> Result<SourceTag, String> {
    match s {
        "pixel" => Ok(SourceTag::Pixel),
        "feature" => Ok(SourceTag::Feature),
        other => Err(format!(
            "unknown source '{other}', expected pixel or feature"
        )),
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => {
            return Err(tokgraph::Error::Validation(format!(
                "{THREADS_VAR} must be a positive integer, got '{raw}'"
            ))
            .into())
        }
    };
    // A pool may already exist when embedded; the cap is best effort then.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Map an error to the documented exit code.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tokgraph::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_VALIDATION };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}

fn run(cli: Cli) -> anyhow::Result<String> {
    configure_threads()?;
    match cli.command {
        Command::ToymodelAnalyze(a) => commands::toymodel_analyze(&a),
        Command::ToymodelTheorem1(a) => commands::toymodel_theorem1(&a),
        Command::TokenizerTrain(a) => commands::tokenizer_train(&a),
        Command::TokenizerApply(a) => commands::tokenizer_apply(&a),
        Command::TcasCompute(a) => commands::tcas_compute(&a),
        Command::SynthGenerate(a) => commands::synth_generate(&a),
        Command::ImagePatches(a) => commands::image_patches(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
