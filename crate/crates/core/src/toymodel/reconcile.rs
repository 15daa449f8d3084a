use serde::{Deserialize, Serialize};

use super::closed_form::{
    closed_form_bounds, composition_two_class, exact_two_class_sum_lambda_sq, ClosedForm, FOLDED_C3,
};
use super::graph::{
    aggregate_mask_graph, build_augmentation_matrix, downstream_bound, edge_weights,
    labeling_error, spectrum_sum_squares, AugmentationMatrix, BoundConstants,
};
use super::joint::build_mask_joint;
use super::partition::{make_partition, PartitionKind};
use super::space::{build_point_space, ToySpaceSpec};
use crate::error::Result;
use crate::linalg::JACOBI_MAX_ORDER;

const MATCH_TOL: f64 = 1e-9;
const MARGINAL_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-12;
const FROBENIUS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Match,
    /// brute / closed equals a simple constant (2 or 1/2).
    ConstantFactor {
        factor: f64,
    },
    Differs,
    BothZero,
}

/// One brute-force value against one closed-form candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub brute: f64,
    pub closed: f64,
    pub abs_diff: f64,
    /// brute / closed; absent when closed is zero.
    pub ratio: Option<f64>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

impl Comparison {
    pub fn new(brute: f64, closed: f64) -> Self {
        let abs_diff = (brute - closed).abs();
        let scale = brute.abs().max(closed.abs());
        let ratio = if closed != 0.0 {
            Some(brute / closed)
        } else {
            None
        };
        let verdict = if scale == 0.0 {
            Verdict::BothZero
        } else if abs_diff <= MATCH_TOL * scale {
            Verdict::Match
        } else {
            match ratio {
                Some(r) if (r - 2.0).abs() <= MATCH_TOL * 2.0 => {
                    Verdict::ConstantFactor { factor: 2.0 }
                }
                Some(r) if (r - 0.5).abs() <= MATCH_TOL * 0.5 => {
                    Verdict::ConstantFactor { factor: 0.5 }
                }
                _ => Verdict::Differs,
            }
        };
        Self {
            brute,
            closed,
            abs_diff,
            ratio,
            verdict,
        }
    }

    pub fn matches(&self) -> bool {
        matches!(self.verdict, Verdict::Match | Verdict::BothZero)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Reconciliation {
    pub intra_weight: Option<Comparison>,
    pub inter_weight: Option<Comparison>,
    /// Brute-force sum of squares against the literal composition formula.
    pub sum_lambda_sq_composition: Option<Comparison>,
    /// Brute-force sum of squares against the exact region-count formula.
    pub sum_lambda_sq_exact: Option<Comparison>,
    /// Labeling error against the (a+c)(b+c) composition sum.
    pub alpha_intermediate: Option<Comparison>,
    /// Labeling error against the c^2 composition sum.
    pub alpha_final_line: Option<Comparison>,
    /// Which labeling-error candidate the brute force supports.
    pub alpha_candidate: Option<String>,
    /// Reference bound (c1 = 1, c2 = c3) against the folded composition form.
    pub bound_appendix: Option<Comparison>,
    /// Reference bound against the closed-form polynomial or series.
    pub bound_closed_form: Option<Comparison>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub mass_normalized: bool,
    pub marginalization: bool,
    pub symmetric_nonnegative: bool,
    /// None when the matrix exceeds the eigensolver cap.
    pub frobenius_identity: Option<bool>,
    pub alpha_in_unit_interval: bool,
}

impl Checks {
    pub fn all_pass(&self) -> bool {
        self.mass_normalized
            && self.marginalization
            && self.symmetric_nonnegative
            && self.frobenius_identity.unwrap_or(true)
            && self.alpha_in_unit_interval
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub spec: ToySpaceSpec,
    pub overlap_ratio: f64,
    pub partition: String,
    pub constants: BoundConstants,
    pub c3: f64,
    pub view_count: usize,
    pub block_count: usize,
    pub sum_lambda_sq: f64,
    pub sum_lambda_sq_eigen: Option<f64>,
    pub alpha: f64,
    /// c1 * sum_lambda_sq + c2 * alpha with the requested constants.
    pub bound_raw: f64,
    /// sum_lambda_sq + c3 * alpha, the scale the closed forms use.
    pub bound_reference: f64,
    /// Folded composition form on this partition (two classes only).
    pub bound_appendix: Option<f64>,
    pub closed_form_value: Option<f64>,
    pub closed_form: Option<ClosedForm>,
    pub intra_weight: Option<f64>,
    pub inter_weight: Option<f64>,
    pub reconciliation: Reconciliation,
    pub checks: Checks,
    pub passed: bool,
}

/// Everything computed on the way to a [`BoundReport`]; kept for callers
/// that want the matrix itself.
pub struct ReconcileOutput {
    pub report: BoundReport,
    pub augmentation: AugmentationMatrix,
}

pub fn reconcile(
    spec: &ToySpaceSpec,
    kind: &PartitionKind,
    constants: &BoundConstants,
) -> Result<BoundReport> {
    reconcile_full(spec, kind, constants).map(|o| o.report)
}

pub fn reconcile_full(
    spec: &ToySpaceSpec,
    kind: &PartitionKind,
    constants: &BoundConstants,
) -> Result<ReconcileOutput> {
    let space = build_point_space(*spec)?;
    let joint = build_mask_joint(&space);
    let partition = make_partition(&space, kind)?;
    let graph = aggregate_mask_graph(&joint, &partition)?;
    let aug = build_augmentation_matrix(&joint, &partition)?;

    let with_eigen = aug.order() <= JACOBI_MAX_ORDER;
    let spectrum = spectrum_sum_squares(&aug.normalized, with_eigen)?;
    let alpha = labeling_error(&space, &aug);
    let weights = edge_weights(&space, &aug);
    let bound_raw = downstream_bound(spectrum.frobenius, alpha, constants);
    let bound_reference = spectrum.frobenius + FOLDED_C3 * alpha;

    let marginal_err = graph
        .weights
        .row_sums()
        .iter()
        .zip(&joint.unmasked_marginal)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let checks = Checks {
        mass_normalized: (joint.total_mass() - 1.0).abs() <= MASS_TOL,
        marginalization: marginal_err <= MARGINAL_TOL,
        symmetric_nonnegative: aug.normalized.max_asymmetry() <= MASS_TOL
            && aug
                .normalized
                .as_slice()
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0),
        frobenius_identity: spectrum.discrepancy().map(|d| d <= FROBENIUS_TOL),
        alpha_in_unit_interval: (0.0..=1.0 + MASS_TOL).contains(&alpha),
    };

    let closed = match kind {
        PartitionKind::Explicit(_) => None,
        _ if spec.num_classes < 2 => None,
        _ => Some(closed_form_bounds(spec, kind)?),
    };

    let mut rec = Reconciliation::default();
    if let Some(cf) = &closed {
        rec.intra_weight = weights.intra.map(|b| Comparison::new(b, cf.intra_weight));
        rec.inter_weight = weights.inter.map(|b| Comparison::new(b, cf.inter_weight));
        rec.bound_closed_form = Some(Comparison::new(bound_reference, cf.bound));
    }

    let mut bound_appendix = None;
    if spec.num_classes == 2 {
        let comps: Vec<_> = partition
            .compositions(&space)
            .iter()
            .filter_map(|c| c.two_class())
            .collect();
        let (n, m) = (spec.points_per_class, spec.pairwise_overlap);
        let composition = composition_two_class(n, m, &comps, FOLDED_C3);
        bound_appendix = Some(composition.bound_folded);
        rec.sum_lambda_sq_composition = Some(Comparison::new(
            spectrum.frobenius,
            composition.sum_lambda_sq,
        ));
        rec.sum_lambda_sq_exact = Some(Comparison::new(
            spectrum.frobenius,
            exact_two_class_sum_lambda_sq(n, m, &comps),
        ));
        let inter = Comparison::new(alpha, composition.alpha);
        let fin = Comparison::new(alpha, composition.alpha_final_line);
        rec.alpha_candidate = Some(
            match (inter.matches(), fin.matches()) {
                (true, true) => "both",
                (true, false) => "intermediate",
                (false, true) => "final_line",
                (false, false) => "neither",
            }
            .to_string(),
        );
        rec.alpha_intermediate = Some(inter);
        rec.alpha_final_line = Some(fin);
        rec.bound_appendix = Some(Comparison::new(bound_reference, composition.bound_folded));
    }

    let passed = checks.all_pass();
    let report = BoundReport {
        spec: *spec,
        overlap_ratio: spec.overlap_ratio(),
        partition: kind.to_string(),
        constants: *constants,
        c3: FOLDED_C3,
        view_count: space.len(),
        block_count: partition.block_count(),
        sum_lambda_sq: spectrum.frobenius,
        sum_lambda_sq_eigen: spectrum.eigen,
        alpha,
        bound_raw,
        bound_reference,
        bound_appendix,
        closed_form_value: closed.as_ref().map(|c| c.bound),
        closed_form: closed,
        intra_weight: weights.intra,
        inter_weight: weights.inter,
        reconciliation: rec,
        checks,
        passed,
    };
    Ok(ReconcileOutput {
        report,
        augmentation: aug,
    })
}
