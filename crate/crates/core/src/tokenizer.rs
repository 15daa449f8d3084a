//! K-means patch tokenizer.
//!
//! Training clusters a [`PatchMatrix`] into a [`Codebook`] (K-means++ seeding
//! followed by full-batch Lloyd epochs); inference maps every patch to the
//! index of its nearest center under squared Euclidean distance.
//!
//! Randomness comes from ChaCha8 seeded with the 64-bit codebook seed, so a
//! given (patches, k, seed, epochs) always produces the same codebook.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows per work unit in parallel passes. Fixed so that floating-point
/// reductions happen in the same order regardless of thread count.
const CHUNK_ROWS: usize = 1024;

/// Dense H x W x C image, row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch {
                expected: height * width * channels,
                actual: data.len(),
                context: "image buffer length",
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

/// `count` feature rows of length `dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    count: usize,
    dim: usize,
    data: Vec<f32>,
}

impl PatchMatrix {
    pub fn new(count: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("patch dimension must be positive"));
        }
        if data.len() != count * dim {
            return Err(Error::DimensionMismatch {
                expected: count * dim,
                actual: data.len(),
                context: "patch buffer length",
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite value in patch {} at feature {}",
                i / dim,
                i % dim
            )));
        }
        Ok(Self { count, dim, data })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    /// Per-feature standardization to zero mean and unit variance. Features
    /// with zero variance are only centered.
    pub fn standardized(&self) -> PatchMatrix {
        let mut mean = vec![0.0f64; self.dim];
        let mut sq = vec![0.0f64; self.dim];
        for row in self.rows() {
            for (j, &v) in row.iter().enumerate() {
                mean[j] += v as f64;
                sq[j] += (v as f64) * (v as f64);
            }
        }
        let n = self.count.max(1) as f64;
        let std: Vec<f64> = mean
            .iter_mut()
            .zip(&sq)
            .map(|(m, s)| {
                *m /= n;
                (s / n - *m * *m).max(0.0).sqrt()
            })
            .collect();
        let data = self
            .rows()
            .flat_map(|row| {
                row.iter().enumerate().map(|(j, &v)| {
                    let centered = v as f64 - mean[j];
                    (if std[j] > 0.0 {
                        centered / std[j]
                    } else {
                        centered
                    }) as f32
                })
            })
            .collect();
        PatchMatrix {
            count: self.count,
            dim: self.dim,
            data,
        }
    }
}

/// Origin of the features a codebook was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Pixel = 0,
    Feature = 1,
}

impl SourceTag {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(SourceTag::Pixel),
            1 => Some(SourceTag::Feature),
            _ => None,
        }
    }
}

/// K cluster centers plus how they were trained.
///
/// Centers are kept in f64 while training; the on-disk format stores f32.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub k: usize,
    pub dim: usize,
    pub centers: Vec<f64>,
    pub seed: u64,
    pub epochs: u32,
    pub source: SourceTag,
}

impl Codebook {
    pub fn new(k: usize, dim: usize, centers: Vec<f64>) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(Error::validation("codebook needs k >= 1 and dim >= 1"));
        }
        if centers.len() != k * dim {
            return Err(Error::DimensionMismatch {
                expected: k * dim,
                actual: centers.len(),
                context: "codebook center buffer",
            });
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("codebook center has a non-finite value"));
        }
        Ok(Self {
            k,
            dim,
            centers,
            seed: 0,
            epochs: 0,
            source: SourceTag::Pixel,
        })
    }

    pub fn with_source(mut self, source: SourceTag) -> Self {
        self.source = source;
        self
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenAssignment {
    pub tokens: Vec<u32>,
    pub distances: Vec<f64>,
}

#[inline]
fn sq_dist(patch: &[f32], center: &[f64]) -> f64 {
    patch
        .iter()
        .zip(center)
        .map(|(&p, &c)| {
            let d = p as f64 - c;
            d * d
        })
        .sum()
}

#[inline]
fn nearest(patch: &[f32], codebook: &Codebook) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for i in 0..codebook.k {
        let d = sq_dist(patch, codebook.center(i));
        // strict comparison keeps the lowest index on ties
        if d < best.1 {
            best = (i as u32, d);
        }
    }
    best
}

/// Split an image into non-overlapping `patch_size` x `patch_size` blocks in
/// raster order. Each row is the block flattened as (row, column, channel).
pub fn extract_patches(image: &Image, patch_size: usize) -> Result<PatchMatrix> {
    let p = patch_size;
    if p == 0 || !image.height.is_multiple_of(p) || !image.width.is_multiple_of(p) {
        return Err(Error::validation(format!(
            "image of H={} W={} is not divisible by patch size p={p}",
            image.height, image.width
        )));
    }
    let (gy, gx) = (image.height / p, image.width / p);
    let dim = p * p * image.channels;
    let mut data = Vec::with_capacity(gy * gx * dim);
    for by in 0..gy {
        for bx in 0..gx {
            for y in 0..p {
                let start = ((by * p + y) * image.width + bx * p) * image.channels;
                data.extend_from_slice(&image.data[start..start + p * image.channels]);
            }
        }
    }
    PatchMatrix::new(gy * gx, dim, data)
}

/// K-means++ seeding: the first center is a uniformly drawn patch, every
/// further one is drawn with probability proportional to its squared
/// distance from the nearest center chosen so far. If every remaining patch
/// coincides with a center, the next one is drawn uniformly among patches
/// not yet chosen.
pub fn kmeanspp_init(patches: &PatchMatrix, k: usize, seed: u64) -> Result<Codebook> {
    let count = patches.count();
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if k > count {
        return Err(Error::validation(format!(
            "k={k} exceeds the {count} available patches"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; count];
    let mut picks = Vec::with_capacity(k);

    let first = rng.gen_range(0..count);
    picks.push(first);
    chosen[first] = true;
    let to_f64 = |i: usize| -> Vec<f64> { patches.row(i).iter().map(|&v| v as f64).collect() };
    let mut d2: Vec<f64> = patches.rows().map(|r| sq_dist(r, &to_f64(first))).collect();

    while picks.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    acc += d;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            let free: Vec<usize> = (0..count).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        picks.push(next);
        chosen[next] = true;
        let c = to_f64(next);
        for (d, row) in d2.iter_mut().zip(patches.rows()) {
            *d = d.min(sq_dist(row, &c));
        }
    }

    let centers = picks.iter().flat_map(|&i| to_f64(i)).collect();
    let mut cb = Codebook::new(k, patches.dim(), centers)?;
    cb.seed = seed;
    Ok(cb)
}

fn check_dims(patches: &PatchMatrix, codebook: &Codebook) -> Result<()> {
    if patches.dim() != codebook.dim {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim,
            actual: patches.dim(),
            context: "patch dimension vs codebook dimension",
        });
    }
    Ok(())
}

/// Nearest center for every patch; ties go to the lowest center index.
pub fn assign_tokens(patches: &PatchMatrix, codebook: &Codebook) -> Result<TokenAssignment> {
    check_dims(patches, codebook)?;
    let pairs: Vec<(u32, f64)> = patches
        .as_slice()
        .par_chunks(CHUNK_ROWS * patches.dim())
        .flat_map_iter(|chunk| {
            chunk
                .chunks_exact(patches.dim())
                .map(|row| nearest(row, codebook))
        })
        .collect();
    let (tokens, distances) = pairs.into_iter().unzip();
    Ok(TokenAssignment { tokens, distances })
}

/// Sum of squared distances from each patch to its nearest center.
pub fn inertia(patches: &PatchMatrix, codebook: &Codebook) -> Result<f64> {
    Ok(assign_tokens(patches, codebook)?.distances.iter().sum())
}

/// One Lloyd pass: assign every patch to its nearest center, move each
/// center to the mean of its patches, and return the updated codebook with
/// the inertia measured against the new centers.
///
/// A center left without patches is moved onto the patch farthest from its
/// assigned center (successive farthest patches if several are empty).
pub fn lloyd_epoch(patches: &PatchMatrix, codebook: &Codebook) -> Result<(Codebook, f64)> {
    let assignment = assign_tokens(patches, codebook)?;
    let (k, dim) = (codebook.k, codebook.dim);

    let partials: Vec<(Vec<f64>, Vec<usize>)> = patches
        .as_slice()
        .par_chunks(CHUNK_ROWS * dim)
        .zip(assignment.tokens.par_chunks(CHUNK_ROWS))
        .map(|(rows, tokens)| {
            let mut sums = vec![0.0f64; k * dim];
            let mut counts = vec![0usize; k];
            for (row, &t) in rows.chunks_exact(dim).zip(tokens) {
                let t = t as usize;
                counts[t] += 1;
                for (s, &v) in sums[t * dim..(t + 1) * dim].iter_mut().zip(row) {
                    *s += v as f64;
                }
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (s, c) in &partials {
        for (a, b) in sums.iter_mut().zip(s) {
            *a += b;
        }
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }

    let mut centers = codebook.centers.clone();
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for j in 0..dim {
                centers[c * dim + j] = sums[c * dim + j] / n;
            }
        }
    }
    if !empty.is_empty() {
        let mut order: Vec<usize> = (0..patches.count()).collect();
        order.sort_by(|&a, &b| {
            assignment.distances[b]
                .total_cmp(&assignment.distances[a])
                .then(a.cmp(&b))
        });
        for (&c, &p) in empty.iter().zip(&order) {
            for (j, &v) in patches.row(p).iter().enumerate() {
                centers[c * dim + j] = v as f64;
            }
        }
    }

    let mut updated = Codebook::new(k, dim, centers)?;
    updated.seed = codebook.seed;
    updated.source = codebook.source;
    updated.epochs = codebook.epochs + 1;
    let after = inertia(patches, &updated)?;
    Ok((updated, after))
}

/// K-means++ seeding followed by `epochs` Lloyd passes.
pub fn train_kmeans(patches: &PatchMatrix, k: usize, seed: u64, epochs: u32) -> Result<Codebook> {
    train_kmeans_traced(patches, k, seed, epochs).map(|(cb, _)| cb)
}

/// Like [`train_kmeans`], also returning the inertia after seeding and after
/// every epoch.
pub fn train_kmeans_traced(
    patches: &PatchMatrix,
    k: usize,
    seed: u64,
    epochs: u32,
) -> Result<(Codebook, Vec<f64>)> {
    let mut codebook = kmeanspp_init(patches, k, seed)?;
    let mut history = Vec::with_capacity(epochs as usize + 1);
    history.push(inertia(patches, &codebook)?);
    for _ in 0..epochs {
        let (next, value) = lloyd_epoch(patches, &codebook)?;
        codebook = next;
        history.push(value);
    }
    Ok((codebook, history))
}
