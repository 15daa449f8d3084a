use std::io::Write;

use serde::{Deserialize, Serialize};

use super::joint::MaskJoint;
use super::partition::TokenPartition;
use super::space::PointSpace;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, DenseMatrix};

/// Largest |a_ij - a_ji| tolerated by [`spectrum_sum_squares`].
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Bipartite mask graph: weight(x1, S_i) = sum over x2 in S_i of M(x1, x2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskGraph {
    pub weights: DenseMatrix,
}

fn check_cover(joint: &MaskJoint, partition: &TokenPartition) -> Result<()> {
    if partition.view_count() != joint.len() {
        return Err(Error::DimensionMismatch {
            expected: joint.len(),
            actual: partition.view_count(),
            context: "partition views vs masked-view space",
        });
    }
    Ok(())
}

pub fn aggregate_mask_graph(joint: &MaskJoint, partition: &TokenPartition) -> Result<MaskGraph> {
    check_cover(joint, partition)?;
    let n = joint.len();
    let mut weights = DenseMatrix::zeros(n, partition.block_count());
    for x1 in 0..n {
        let row = joint.joint.row(x1);
        for (b, block) in partition.blocks().iter().enumerate() {
            weights.set(x1, b, block.iter().map(|&x2| row[x2]).sum());
        }
    }
    Ok(MaskGraph { weights })
}

/// Augmentation graph over unmasked views.
///
/// `pair_weights(x, y) = sum_i M(x, S_i) M(y, S_i) / p(S_i)` is the
/// probability of drawing (x, y) as a positive pair, with p(S_i) the masked
/// marginal mass of block S_i. `normalized` divides it by
/// `sqrt(M(x) M(y))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationMatrix {
    pub normalized: DenseMatrix,
    pub pair_weights: DenseMatrix,
    pub marginal: Vec<f64>,
}

impl AugmentationMatrix {
    pub fn order(&self) -> usize {
        self.normalized.rows()
    }

    /// Normalized matrix as CSV: one row per line, no header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.order() {
            let line: Vec<String> = self
                .normalized
                .row(i)
                .iter()
                .map(|v| format!("{v:e}"))
                .collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

pub fn build_augmentation_matrix(
    joint: &MaskJoint,
    partition: &TokenPartition,
) -> Result<AugmentationMatrix> {
    let graph = aggregate_mask_graph(joint, partition)?;
    let block_mass: Vec<f64> = partition
        .blocks()
        .iter()
        .map(|block| block.iter().map(|&x2| joint.masked_marginal[x2]).sum())
        .collect();
    if let Some(b) = block_mass.iter().position(|&p| p <= 0.0) {
        return Err(Error::validation(format!(
            "block {b} has zero masked-marginal mass (degenerate partition)"
        )));
    }
    let marginal = joint.unmasked_marginal.clone();
    if let Some(x) = marginal.iter().position(|&w| w <= 0.0) {
        return Err(Error::validation(format!(
            "unmasked view {x} has zero marginal mass"
        )));
    }

    let n = joint.len();
    let w = &graph.weights;
    let mut pair_weights = DenseMatrix::zeros(n, n);
    let mut normalized = DenseMatrix::zeros(n, n);
    for x in 0..n {
        let wx = w.row(x);
        for y in x..n {
            let wy = w.row(y);
            let raw: f64 = wx
                .iter()
                .zip(wy)
                .zip(&block_mass)
                .map(|((a, b), p)| a * b / p)
                .sum();
            let norm = raw / (marginal[x] * marginal[y]).sqrt();
            pair_weights.set(x, y, raw);
            pair_weights.set(y, x, raw);
            normalized.set(x, y, norm);
            normalized.set(y, x, norm);
        }
    }
    Ok(AugmentationMatrix {
        normalized,
        pair_weights,
        marginal,
    })
}

/// Sum of squared eigenvalues of the normalized augmentation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSum {
    /// Squared Frobenius norm, equal to the sum for a symmetric matrix.
    pub frobenius: f64,
    /// Same quantity from an explicit Jacobi eigendecomposition.
    pub eigen: Option<f64>,
}

impl SpectrumSum {
    pub fn discrepancy(&self) -> Option<f64> {
        self.eigen.map(|e| (e - self.frobenius).abs())
    }
}

pub fn spectrum_sum_squares(matrix: &DenseMatrix, with_eigensolver: bool) -> Result<SpectrumSum> {
    let asym = matrix.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::validation(format!(
            "matrix is not symmetric: max |a_ij - a_ji| = {asym:e}"
        )));
    }
    let eigen = if with_eigensolver {
        Some(symmetric_eigenvalues(matrix)?.iter().map(|l| l * l).sum())
    } else {
        None
    };
    Ok(SpectrumSum {
        frobenius: matrix.frobenius_sq(),
        eigen,
    })
}

/// Probability that a positive pair has disjoint label sets. Pairs involving
/// a shared point count as same-class whenever the label sets intersect.
pub fn labeling_error(space: &PointSpace, aug: &AugmentationMatrix) -> f64 {
    let labels = space.labels();
    let mut alpha = 0.0;
    for (x, lx) in labels.iter().enumerate() {
        let row = aug.pair_weights.row(x);
        for (y, ly) in labels.iter().enumerate() {
            if lx.is_disjoint(ly) {
                alpha += row[y];
            }
        }
    }
    alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
}

impl BoundConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite() && c1 > 0.0 && c2 > 0.0) {
            return Err(Error::validation(format!(
                "bound constants must be finite and positive, got c1={c1}, c2={c2}"
            )));
        }
        Ok(Self { c1, c2 })
    }
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 2.5 }
    }
}

pub fn downstream_bound(sum_lambda_sq: f64, alpha: f64, constants: &BoundConstants) -> f64 {
    constants.c1 * sum_lambda_sq + constants.c2 * alpha
}

/// Positive-pair weight between two exclusive points of class 0 (intra) and
/// between exclusive points of classes 0 and 1 (inter). Within a region
/// every entry is equal, so one representative pair suffices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights {
    pub intra: Option<f64>,
    pub inter: Option<f64>,
}

pub fn edge_weights(space: &PointSpace, aug: &AugmentationMatrix) -> EdgeWeights {
    let first = space.exclusive(0);
    let intra = match first {
        [] => None,
        [only] => Some(aug.pair_weights.get(*only, *only)),
        [a, .., b] => Some(aug.pair_weights.get(*a, *b)),
    };
    let inter = if space.spec().num_classes >= 2 {
        match (first.first(), space.exclusive(1).first()) {
            (Some(&a), Some(&b)) => Some(aug.pair_weights.get(a, b)),
            _ => None,
        }
    } else {
        None
    };
    EdgeWeights { intra, inter }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toymodel::joint::build_mask_joint;
    use crate::toymodel::partition::{make_partition, PartitionKind};
    use crate::toymodel::space::{build_point_space, ToySpaceSpec};

    fn setup(
        s: usize,
        n: usize,
        m: usize,
        kind: PartitionKind,
    ) -> (PointSpace, MaskJoint, TokenPartition) {
        let sp = build_point_space(ToySpaceSpec::new(s, n, m).unwrap()).unwrap();
        let mj = build_mask_joint(&sp);
        let p = make_partition(&sp, &kind).unwrap();
        (sp, mj, p)
    }

    #[test]
    fn singleton_aggregation_is_the_joint() {
        let (_, mj, p) = setup(2, 10, 2, PartitionKind::MaeLike);
        let g = aggregate_mask_graph(&mj, &p).unwrap();
        assert_eq!(g.weights, mj.joint);
    }

    #[test]
    fn one_block_aggregation_is_the_marginal() {
        let (sp, mj, _) = setup(2, 10, 2, PartitionKind::MaeLike);
        let p = TokenPartition::from_blocks(sp.len(), vec![(0..sp.len()).collect()]).unwrap();
        let g = aggregate_mask_graph(&mj, &p).unwrap();
        for x in 0..sp.len() {
            assert!((g.weights.get(x, 0) - mj.unmasked_marginal[x]).abs() < 1e-15);
        }
    }

    #[test]
    fn class_wise_rows_marginalize() {
        let (sp, mj, p) = setup(2, 10, 2, PartitionKind::ClassWise);
        let g = aggregate_mask_graph(&mj, &p).unwrap();
        for x in 0..sp.len() {
            // independent route: direct summation of the joint row
            let direct: f64 = (0..sp.len()).map(|x2| mj.joint.get(x, x2)).sum();
            let agg: f64 = g.weights.row(x).iter().sum();
            assert!((agg - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn disconnected_classes_give_block_constant_matrix() {
        let (sp, mj, p) = setup(2, 4, 0, PartitionKind::ClassWise);
        let aug = build_augmentation_matrix(&mj, &p).unwrap();
        let (c0, c1) = (sp.exclusive(0), sp.exclusive(1));
        for &a in c0 {
            for &b in c1 {
                assert_eq!(aug.normalized.get(a, b), 0.0);
            }
            for &b in c0 {
                assert!((aug.normalized.get(a, b) - 0.25).abs() < 1e-15);
            }
        }
        assert_eq!(labeling_error(&sp, &aug), 0.0);
    }

    #[test]
    fn mae_intra_entry_matches_hand_trace() {
        // Singleton blocks, two exclusive class-0 points, n=10, m=2:
        // (n-m) masked views at (1/(2n^2))^2 / (1/(2n)) plus m shared views at
        // (1/(2n^2))^2 / (1/n) give (2n-m)/(4n^3); dividing by the marginal
        // 1/(2n) gives (2n-m)/(2n^2) = 0.09.
        let (sp, mj, p) = setup(2, 10, 2, PartitionKind::MaeLike);
        let aug = build_augmentation_matrix(&mj, &p).unwrap();
        let ex = sp.exclusive(0);
        assert!((aug.normalized.get(ex[0], ex[3]) - 0.09).abs() < 1e-15);
        assert!((aug.pair_weights.get(ex[0], ex[3]) - 18.0 / 4000.0).abs() < 1e-16);
    }

    #[test]
    fn pair_weights_are_a_distribution() {
        for kind in [
            PartitionKind::MaeLike,
            PartitionKind::ClassWise,
            PartitionKind::CrossClass(2),
        ] {
            let (_, mj, p) = setup(3, 10, 2, kind);
            let aug = build_augmentation_matrix(&mj, &p).unwrap();
            assert!((aug.pair_weights.sum() - 1.0).abs() < 1e-12);
            for (row_sum, w) in aug.pair_weights.row_sums().iter().zip(&aug.marginal) {
                assert!((row_sum - w).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn frobenius_matches_eigensolver() {
        let (_, mj, p) = setup(2, 10, 2, PartitionKind::CrossClass(2));
        let aug = build_augmentation_matrix(&mj, &p).unwrap();
        let s = spectrum_sum_squares(&aug.normalized, true).unwrap();
        assert!(s.discrepancy().unwrap() < 1e-8);
    }

    #[test]
    fn spectrum_trivial_values() {
        let s = spectrum_sum_squares(&DenseMatrix::identity(3), true).unwrap();
        assert_eq!(s.frobenius, 3.0);
        let n = 5;
        let flat = DenseMatrix::from_fn(n, n, |_, _| 1.0 / n as f64);
        let s = spectrum_sum_squares(&flat, true).unwrap();
        assert!((s.frobenius - 1.0).abs() < 1e-15);
        assert!((s.eigen.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = DenseMatrix::from_vec(2, 2, vec![1.0, 0.5, 0.4, 1.0]).unwrap();
        assert!(spectrum_sum_squares(&m, false).is_err());
    }

    #[test]
    fn bound_arithmetic() {
        let c = BoundConstants::new(1.0, 1.0).unwrap();
        assert!((downstream_bound(0.5, 0.1, &c) - 0.6).abs() < 1e-15);
        assert!(BoundConstants::new(0.0, 1.0).is_err());
        assert!(BoundConstants::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn csv_dump_shape() {
        let (_, mj, p) = setup(2, 2, 0, PartitionKind::MaeLike);
        let aug = build_augmentation_matrix(&mj, &p).unwrap();
        let mut buf = Vec::new();
        aug.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<_> = text.lines().collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.split(',').count() == 4));
        let back: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, aug.normalized.get(0, 0));
    }
}
