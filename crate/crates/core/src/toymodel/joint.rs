use serde::{Deserialize, Serialize};

use super::space::PointSpace;
use crate::linalg::DenseMatrix;

/// Joint masking distribution M(x1, x2) over ordered (unmasked, masked)
/// point pairs, with both marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskJoint {
    pub joint: DenseMatrix,
    pub unmasked_marginal: Vec<f64>,
    pub masked_marginal: Vec<f64>,
}

impl MaskJoint {
    pub fn len(&self) -> usize {
        self.joint.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.joint.rows() == 0
    }

    pub fn total_mass(&self) -> f64 {
        self.joint.sum()
    }
}

/// Pick a class with probability 1/s, then an ordered pair uniformly from
/// that class; pairs shared by several classes accumulate mass from each.
pub fn build_mask_joint(space: &PointSpace) -> MaskJoint {
    let spec = space.spec();
    let n = spec.points_per_class as f64;
    let pair_mass = 1.0 / (spec.num_classes as f64 * n * n);
    let size = space.len();
    let mut joint = DenseMatrix::zeros(size, size);
    for class in 0..spec.num_classes {
        let members = space.members(class);
        for &x1 in members {
            for &x2 in members {
                joint.set(x1, x2, joint.get(x1, x2) + pair_mass);
            }
        }
    }
    let unmasked_marginal = joint.row_sums();
    let masked_marginal = joint.col_sums();
    MaskJoint {
        joint,
        unmasked_marginal,
        masked_marginal,
    }
}
