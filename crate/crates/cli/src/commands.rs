use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use tokgraph::dataio::{self, SyntheticSpec, TokenFile};
use tokgraph::tcas::{accumulate, normalize_rows, tcas};
use tokgraph::tokenizer::{assign_tokens, extract_patches, train_kmeans_traced};
use tokgraph::toymodel::{
    build_mask_joint, build_point_space, reconcile_full, verify_theorem1, BoundConstants,
    SpectralObjective, ToySpaceSpec,
};
use tokgraph::Error;

use crate::{
    AnalyzeArgs, ApplyArgs, ImagePatchesArgs, SynthArgs, TcasArgs, TheoremArgs, TrainArgs,
};

#[derive(Serialize)]
struct Report<'a, C, R> {
    command: &'a str,
    config: C,
    #[serde(flatten)]
    result: R,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writeln!(out)
        .and_then(|_| out.flush())
        .with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Serialize)]
struct AnalyzeConfig {
    classes: usize,
    n: usize,
    m: usize,
    partition: String,
    c1: f64,
    c2: f64,
}

pub fn toymodel_analyze(args: &AnalyzeArgs) -> anyhow::Result<String> {
    let spec = ToySpaceSpec::new(args.classes, args.n, args.m)?;
    let constants = BoundConstants::new(args.c1, args.c2)?;
    let output = reconcile_full(&spec, &args.partition, &constants)?;
    let report = &output.report;

    if let Some(path) = &args.matrix_csv {
        let mut out = create(path)?;
        output
            .augmentation
            .write_csv(&mut out)
            .and_then(|_| out.flush())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let config = AnalyzeConfig {
        classes: args.classes,
        n: args.n,
        m: args.m,
        partition: args.partition.to_string(),
        c1: args.c1,
        c2: args.c2,
    };
    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a tokgraph::toymodel::BoundReport,
    }
    write_json(
        &args.out,
        &Report {
            command: "toymodel-analyze",
            config,
            result: Body { report },
        },
    )?;

    Ok(format!(
        "{} s={} n={} m={}: sum_lambda_sq={:.6} alpha={:.6} bound={:.6} checks={}",
        args.partition,
        args.classes,
        args.n,
        args.m,
        report.sum_lambda_sq,
        report.alpha,
        report.bound_raw,
        if report.passed { "pass" } else { "FAIL" },
    ))
}

#[derive(Serialize)]
struct TheoremConfig {
    classes: usize,
    n: usize,
    m: usize,
    c1: f64,
    c2: f64,
    max_blocks: usize,
    objective: SpectralObjective,
}

pub fn toymodel_theorem1(args: &TheoremArgs) -> anyhow::Result<String> {
    let spec = ToySpaceSpec::new(args.classes, args.n, 0)?;
    let constants = BoundConstants::new(args.c1, args.c2)?;
    let space = build_point_space(spec)?;
    let joint = build_mask_joint(&space);
    let objective = match args.skip_leading {
        0 => SpectralObjective::Full,
        skip => SpectralObjective::Tail { skip },
    };
    let max_blocks = args.max_blocks.unwrap_or(space.len());
    let search = verify_theorem1(&space, &joint, &constants, max_blocks, objective)?;

    let config = TheoremConfig {
        classes: args.classes,
        n: args.n,
        m: 0,
        c1: args.c1,
        c2: args.c2,
        max_blocks,
        objective,
    };
    #[derive(Serialize)]
    struct Body<'a> {
        result: &'a tokgraph::toymodel::TheoremSearch,
    }
    write_json(
        &args.out,
        &Report {
            command: "toymodel-theorem1",
            config,
            result: Body { result: &search },
        },
    )?;

    Ok(format!(
        "{} partitions: min={:.6} label={:.6} label_attains_minimum={}",
        search.partitions_enumerated,
        search.min_objective,
        search.label_objective,
        search.label_attains_minimum
    ))
}

pub fn tokenizer_train(args: &TrainArgs) -> anyhow::Result<String> {
    let patches = dataio::read_patches(&args.patches)?;
    let (codebook, history) = train_kmeans_traced(&patches, args.k, args.seed, args.epochs)?;
    let codebook = codebook.with_source(args.source);
    dataio::write_codebook(&args.out, &codebook)?;

    let final_inertia = history.last().copied();
    if let Some(path) = &args.report {
        #[derive(Serialize)]
        struct Config<'a> {
            patches: &'a Path,
            count: usize,
            dim: usize,
            k: usize,
            seed: u64,
            epochs: u32,
            source: tokgraph::tokenizer::SourceTag,
        }
        #[derive(Serialize)]
        struct Body<'a> {
            /// Inertia of the K-means++ seeding.
            initial_inertia: Option<f64>,
            /// Inertia after each Lloyd epoch.
            epoch_inertia: &'a [f64],
        }
        let config = Config {
            patches: &args.patches,
            count: patches.count(),
            dim: patches.dim(),
            k: args.k,
            seed: args.seed,
            epochs: args.epochs,
            source: args.source,
        };
        write_json(
            path,
            &Report {
                command: "tokenizer-train",
                config,
                result: Body {
                    initial_inertia: history.first().copied(),
                    epoch_inertia: history.get(1..).unwrap_or(&[]),
                },
            },
        )?;
    }
    Ok(format!(
        "trained k={} on {}x{} patches, {} epochs, seed {}, inertia {}",
        args.k,
        patches.count(),
        patches.dim(),
        args.epochs,
        args.seed,
        final_inertia.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}")),
    ))
}

pub fn tokenizer_apply(args: &ApplyArgs) -> anyhow::Result<String> {
    let patches = dataio::read_patches(&args.patches)?;
    let codebook = dataio::read_codebook(&args.codebook)?;
    let assignment = assign_tokens(&patches, &codebook)?;
    let k = u32::try_from(codebook.k).context("codebook too large")?;
    let count = assignment.tokens.len();
    let mean = if count == 0 {
        0.0
    } else {
        assignment.distances.iter().sum::<f64>() / count as f64
    };
    dataio::write_tokens(
        &args.out,
        &TokenFile {
            k,
            tokens: assignment.tokens,
        },
    )?;
    Ok(format!(
        "assigned {count} patches to {k} codes, mean squared distance {mean:.6}"
    ))
}

pub fn tcas_compute(args: &TcasArgs) -> anyhow::Result<String> {
    let tokens = dataio::read_tokens(&args.tokens)?;
    let labels = dataio::read_labels(&args.labels)?;
    if tokens.tokens.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: tokens.tokens.len(),
            actual: labels.len(),
            context: "label count vs token count",
        }
        .into());
    }
    if args.classes == 0 {
        return Err(Error::Validation("--classes must be positive".into()).into());
    }
    let co = accumulate(&tokens.tokens, &labels, tokens.k as usize, args.classes)?;
    let score = tcas(&normalize_rows(&co));

    if let Some(path) = &args.cooccurrence_csv {
        let mut out = create(path)?;
        co.write_csv(&mut out)
            .and_then(|_| out.flush())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    #[derive(Serialize)]
    struct Config<'a> {
        tokens: &'a Path,
        labels: &'a Path,
        classes: usize,
        codebook_size: u32,
        patches: usize,
        normalization: &'a str,
        unapplied_reading: &'a str,
    }
    #[derive(Serialize)]
    struct Body {
        score: tokgraph::tcas::TcasScore,
    }
    let config = Config {
        tokens: &args.tokens,
        labels: &args.labels,
        classes: args.classes,
        codebook_size: tokens.k,
        patches: labels.len(),
        normalization: "l1 row normalization of the token-by-class counts",
        unapplied_reading: "softmax applied over the row-normalized counts",
    };
    write_json(
        &args.out,
        &Report {
            command: "tcas-compute",
            config,
            result: Body { score },
        },
    )?;
    Ok(format!(
        "tcas={:.6} term1={:.6} term2={:.6} l1={} l2={} dead_rows={}",
        score.value, score.term1, score.term2, score.l1, score.l2, score.dead_rows
    ))
}

pub fn synth_generate(args: &SynthArgs) -> anyhow::Result<String> {
    let spec = SyntheticSpec {
        num_classes: args.classes,
        patches_per_class: args.per_class,
        dim: args.dim,
        center_spread: args.spread,
        noise_sigma: args.sigma,
        seed: args.seed,
    };
    let (patches, labels) = dataio::generate_synthetic(&spec)?;
    dataio::write_patches(&args.out, &patches)?;
    dataio::write_labels(&args.labels_out, &labels)?;
    Ok(format!(
        "wrote {} patches of dim {} in {} classes (seed {})",
        patches.count(),
        patches.dim(),
        args.classes,
        args.seed
    ))
}

pub fn image_patches(args: &ImagePatchesArgs) -> anyhow::Result<String> {
    let image = dataio::read_pnm(&args.image)?;
    let patches = extract_patches(&image, args.patch_size)?;
    dataio::write_patches(&args.out, &patches)?;
    Ok(format!(
        "{}x{}x{} image -> {} patches of dim {}",
        image.height,
        image.width,
        image.channels,
        patches.count(),
        patches.dim()
    ))
}
