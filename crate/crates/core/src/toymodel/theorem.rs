//! Exhaustive search for the partition of masked views that minimizes
//! `c1 * spectral term + c2 * alpha`, to check whether grouping views by
//! their true label is optimal when masking never crosses classes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{build_augmentation_matrix, labeling_error, BoundConstants};
use super::joint::MaskJoint;
use super::partition::TokenPartition;
use super::space::{LabelSet, PointSpace};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::partitions::RestrictedGrowthStrings;

/// Bell(10) = 115975 partitions is the largest search allowed.
pub const MAX_THEOREM_VIEWS: usize = 10;
const TIE_TOL: f64 = 1e-12;

/// Which eigenvalues enter the spectral term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectralObjective {
    /// Sum of all squared eigenvalues.
    #[default]
    Full,
    /// Sum of squared eigenvalues after dropping the `skip` largest.
    Tail { skip: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSearch {
    pub views: usize,
    pub constants: BoundConstants,
    pub objective: SpectralObjective,
    pub max_block_count: usize,
    pub partitions_enumerated: u64,
    pub min_objective: f64,
    /// Restricted-growth strings of every minimizer, in enumeration order.
    pub minimizers: Vec<Vec<usize>>,
    pub first_minimizer: Vec<usize>,
    pub label_partition: Vec<usize>,
    pub label_objective: f64,
    pub label_attains_minimum: bool,
}

fn label_partition(space: &PointSpace) -> Vec<usize> {
    let ids: Vec<usize> = space
        .labels()
        .iter()
        .map(|l| match l {
            LabelSet::Single(a) => *a as usize,
            LabelSet::Pair(a, _) => *a as usize,
        })
        .collect();
    crate::partitions::canonical_rgs(&ids)
}

fn evaluate(
    space: &PointSpace,
    joint: &MaskJoint,
    rgs: &[usize],
    constants: &BoundConstants,
    objective: SpectralObjective,
) -> Result<f64> {
    let partition = TokenPartition::from_assignment(rgs)?;
    let aug = build_augmentation_matrix(joint, &partition)?;
    let spectral = match objective {
        SpectralObjective::Full => aug.normalized.frobenius_sq(),
        SpectralObjective::Tail { skip } => symmetric_eigenvalues(&aug.normalized)?
            .iter()
            .skip(skip)
            .map(|l| l * l)
            .sum(),
    };
    let alpha = labeling_error(space, &aug);
    Ok(constants.c1 * spectral + constants.c2 * alpha)
}

/// Enumerate every partition of the masked views with at most
/// `max_block_count` blocks and report the minimizers of the objective.
///
/// Requires `m = 0` so that masking only ever pairs views of the same class,
/// and at most [`MAX_THEOREM_VIEWS`] views.
pub fn verify_theorem1(
    space: &PointSpace,
    joint: &MaskJoint,
    constants: &BoundConstants,
    max_block_count: usize,
    objective: SpectralObjective,
) -> Result<TheoremSearch> {
    if space.spec().pairwise_overlap != 0 {
        return Err(Error::validation(
            "the label-optimality check assumes masked pairs never cross classes, which needs m = 0",
        ));
    }
    let views = space.len();
    if views > MAX_THEOREM_VIEWS {
        return Err(Error::validation(format!(
            "{views} masked views exceed the exhaustive-search limit of {MAX_THEOREM_VIEWS}"
        )));
    }
    if joint.len() != views {
        return Err(Error::DimensionMismatch {
            expected: views,
            actual: joint.len(),
            context: "mask joint vs point space",
        });
    }

    let label = label_partition(space);
    if label.iter().max().map_or(0, |m| m + 1) > max_block_count {
        return Err(Error::validation(format!(
            "max_block_count={max_block_count} excludes the label partition"
        )));
    }

    let candidates: Vec<Vec<usize>> = RestrictedGrowthStrings::new(views)
        .filter(|rgs| rgs.iter().max().map_or(0, |m| m + 1) <= max_block_count)
        .collect();
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|rgs| evaluate(space, joint, rgs, constants, objective))
        .collect::<Result<_>>()?;

    let min_objective = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * min_objective.abs().max(1.0);
    let minimizers: Vec<Vec<usize>> = candidates
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v <= min_objective + tol)
        .map(|(r, _)| r.clone())
        .collect();
    let label_objective = evaluate(space, joint, &label, constants, objective)?;

    Ok(TheoremSearch {
        views,
        constants: *constants,
        objective,
        max_block_count,
        partitions_enumerated: candidates.len() as u64,
        min_objective,
        first_minimizer: minimizers[0].clone(),
        minimizers,
        label_attains_minimum: label_objective <= min_objective + tol,
        label_partition: label,
        label_objective,
    })
}
