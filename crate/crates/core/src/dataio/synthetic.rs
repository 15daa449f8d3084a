use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::PatchMatrix;

/// Gaussian blobs with known labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub patches_per_class: usize,
    pub dim: usize,
    pub center_spread: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.patches_per_class == 0 || self.dim == 0 {
            return Err(Error::validation(
                "num_classes, patches_per_class and dim must be positive",
            ));
        }
        if !(self.center_spread >= 0.0 && self.center_spread.is_finite()) {
            return Err(Error::validation("center_spread must be finite and >= 0"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::validation("noise_sigma must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Class centers lie on the sphere of radius `center_spread`; patches are
/// grouped by class, labels `0..num_classes`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(PatchMatrix, Vec<u32>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut centers = Vec::with_capacity(spec.num_classes);
    for _ in 0..spec.num_classes {
        let mut c: Vec<f64>;
        loop {
            c = (0..spec.dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                c.iter_mut().for_each(|v| *v *= spec.center_spread / norm);
                break;
            }
        }
        centers.push(c);
    }

    let total = spec.num_classes * spec.patches_per_class;
    let mut data = Vec::with_capacity(total * spec.dim);
    let mut labels = Vec::with_capacity(total);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..spec.patches_per_class {
            for &c in center {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push((c + spec.noise_sigma * z) as f32);
            }
            labels.push(class as u32);
        }
    }
    Ok((PatchMatrix::new(total, spec.dim, data)?, labels))
}
