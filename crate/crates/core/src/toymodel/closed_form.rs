//! Closed-form edge weights and bounds for the three reference tokenizers.
//!
//! These are candidates to compare against the brute-force graph, not
//! replacements for it. Two-class bounds are exact polynomials in t = m/n
//! (overall scale 1, labeling-error weight [`FOLDED_C3`]); for more classes
//! only leading-order series are available and the report says so.

use serde::{Deserialize, Serialize};

use super::partition::{check_class_wise, check_cross_class, PartitionKind};
use super::space::ToySpaceSpec;
use crate::error::{Error, Result};

/// Labeling-error weight folded into the two-class closed-form bounds.
pub const FOLDED_C3: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundForm {
    Exact { expression: String },
    Series { expression: String, order: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub intra_weight: f64,
    pub inter_weight: f64,
    pub bound: f64,
    pub bound_form: BoundForm,
    /// Leading terms of the small-t expansion of the bound.
    pub leading_series: f64,
    pub series_order: String,
    /// Composition-sum formulas evaluated for this kind (two classes only).
    pub composition: Option<CompositionForm>,
}

/// Two-class composition-sum formulas, evaluated literally.
///
/// With block compositions (a_i, b_i, c_i) = (class-1-only, class-2-only,
/// shared) and d_i = a_i + b_i + 2 c_i:
/// S11 = sum (a+c)^2/d, S22 = sum (b+c)^2/d, S12 = sum (a+c)(b+c)/d,
/// S13 = sum (a+c)(a+2c)/d, S23 = sum (b+c)(b+2c)/d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionForm {
    /// (n-m)^2/n^4 (S11^2 + S22^2 + 2 S12^2) + (n-m)m/(2n^4) (S13^2 + S23^2) + m^2/n^2
    pub sum_lambda_sq: f64,
    /// (n-m)^2/n^3 * S12
    pub alpha: f64,
    /// Same with S12 replaced by sum c^2/d.
    pub alpha_final_line: f64,
    /// Folded bound: S12 shifted by c3 n / 4 inside the square, minus
    /// C = c3^2 (n-m)^2 / (8 n^2).
    pub bound_folded: f64,
}

struct CompositionSums {
    s11: f64,
    s22: f64,
    s12: f64,
    s12_final: f64,
    s13: f64,
    s23: f64,
}

fn composition_sums(comps: &[(usize, usize, usize)]) -> CompositionSums {
    let mut sums = CompositionSums {
        s11: 0.0,
        s22: 0.0,
        s12: 0.0,
        s12_final: 0.0,
        s13: 0.0,
        s23: 0.0,
    };
    for &(a, b, c) in comps {
        let (a, b, c) = (a as f64, b as f64, c as f64);
        let d = a + b + 2.0 * c;
        if d == 0.0 {
            continue;
        }
        sums.s11 += (a + c) * (a + c) / d;
        sums.s22 += (b + c) * (b + c) / d;
        sums.s12 += (a + c) * (b + c) / d;
        sums.s12_final += c * c / d;
        sums.s13 += (a + c) * (a + 2.0 * c) / d;
        sums.s23 += (b + c) * (b + 2.0 * c) / d;
    }
    sums
}

pub fn composition_two_class(
    n: usize,
    m: usize,
    comps: &[(usize, usize, usize)],
    c3: f64,
) -> CompositionForm {
    let (nf, mf) = (n as f64, m as f64);
    let s = composition_sums(comps);
    let n4 = nf.powi(4);
    let excl = nf - mf;
    let tail = excl * mf / (2.0 * n4) * (s.s13 * s.s13 + s.s23 * s.s23) + mf * mf / (nf * nf);
    let sum_lambda_sq =
        excl * excl / n4 * (s.s11 * s.s11 + s.s22 * s.s22 + 2.0 * s.s12 * s.s12) + tail;
    let alpha = excl * excl / nf.powi(3) * s.s12;
    let alpha_final_line = excl * excl / nf.powi(3) * s.s12_final;
    let shifted = s.s12 + c3 * nf / 4.0;
    let fold_c = c3 * c3 * excl * excl / (8.0 * nf * nf);
    let bound_folded = excl * excl / n4 * (s.s11 * s.s11 + s.s22 * s.s22 + 2.0 * shifted * shifted)
        + tail
        - fold_c;
    CompositionForm {
        sum_lambda_sq,
        alpha,
        alpha_final_line,
        bound_folded,
    }
}

/// Squared Frobenius norm of the two-class normalized augmentation matrix
/// from block compositions alone.
///
/// Entries are constant on the (exclusive-1, exclusive-2, shared) regions:
/// S11/n^2, S22/n^2, S12/n^2 between exclusive points, sqrt(2)/(2n) between
/// an exclusive and a shared point for every partition, and 1/n between
/// shared points. The mixed regions occur twice (above and below the
/// diagonal).
pub fn exact_two_class_sum_lambda_sq(n: usize, m: usize, comps: &[(usize, usize, usize)]) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let s = composition_sums(comps);
    let excl = nf - mf;
    excl * excl / nf.powi(4) * (s.s11 * s.s11 + s.s22 * s.s22 + 2.0 * s.s12 * s.s12)
        + 2.0 * excl * mf / (nf * nf)
        + mf * mf / (nf * nf)
}

fn reference_compositions(
    spec: &ToySpaceSpec,
    kind: &PartitionKind,
) -> Result<Vec<(usize, usize, usize)>> {
    let n = spec.points_per_class;
    let m = spec.pairwise_overlap;
    Ok(match kind {
        PartitionKind::MaeLike => {
            let mut v = vec![(1, 0, 0); n - m];
            v.extend(std::iter::repeat_n((0, 1, 0), n - m));
            v.extend(std::iter::repeat_n((0, 0, 1), m));
            v
        }
        PartitionKind::ClassWise => {
            check_class_wise(spec)?;
            vec![(n - m, 0, m / 2), (0, n - m, m / 2)]
        }
        PartitionKind::CrossClass(l) => {
            check_cross_class(spec, *l)?;
            vec![((n - m) / l, (n - m) / l, m / l); *l]
        }
        PartitionKind::Explicit(_) => unreachable!("explicit partitions have no closed form"),
    })
}

pub(crate) fn mae_polynomial(t: f64) -> f64 {
    2.0 - 15.0 * t / 4.0 + 9.0 * t.powi(2) / 2.0 - 11.0 * t.powi(3) / 4.0 + t.powi(4)
}

pub(crate) fn class_polynomial(t: f64) -> f64 {
    2.0 - 7.0 * t + 16.0 * t.powi(2) - 39.0 / 2.0 * t.powi(3) + 29.0 / 2.0 * t.powi(4)
        - 95.0 / 16.0 * t.powi(5)
        + 15.0 / 16.0 * t.powi(6)
        + FOLDED_C3 * (1.0 - t).powi(2) * (t - t * t / 2.0)
}

pub(crate) fn cross_polynomial(t: f64) -> f64 {
    let u = 1.0 - t;
    u * u + 0.25 * u * t * (t + 1.0).powi(2) + t * t + FOLDED_C3 / 2.0 * u * u
}

pub fn closed_form_bounds(spec: &ToySpaceSpec, kind: &PartitionKind) -> Result<ClosedForm> {
    spec.validate()?;
    if matches!(kind, PartitionKind::Explicit(_)) {
        return Err(Error::validation(
            "closed forms exist only for mae, class and cross partitions",
        ));
    }
    if spec.num_classes < 2 {
        return Err(Error::validation("closed forms need at least two classes"));
    }
    // Divisibility checks run for every class count.
    match kind {
        PartitionKind::ClassWise => check_class_wise(spec)?,
        PartitionKind::CrossClass(l) => check_cross_class(spec, *l)?,
        _ => {}
    }

    let s = spec.num_classes as f64;
    let n = spec.points_per_class as f64;
    let m = spec.pairwise_overlap as f64;
    let t = spec.overlap_ratio();

    let (intra_weight, inter_weight) = if spec.num_classes == 2 {
        match kind {
            PartitionKind::MaeLike => ((2.0 * n - m) / (4.0 * n.powi(3)), m / (4.0 * n.powi(3))),
            PartitionKind::ClassWise => (
                ((n - m / 2.0).powi(2) + (m / 2.0).powi(2)) / (2.0 * n.powi(4)),
                m * (n - m / 2.0) / (4.0 * n.powi(4)),
            ),
            _ => (1.0 / (4.0 * n * n), 1.0 / (4.0 * n * n)),
        }
    } else {
        match kind {
            PartitionKind::MaeLike => (
                (2.0 * n - (s - 1.0) * m) / (2.0 * s * n.powi(3)),
                m / (2.0 * s * n.powi(3)),
            ),
            PartitionKind::ClassWise => {
                let own = n - (s - 1.0) * m / 2.0;
                (
                    (own * own + (s - 1.0) * (m / 2.0).powi(2)) / (2.0 * s * n.powi(4)),
                    m * own / (2.0 * s * n.powi(4)),
                )
            }
            _ => (1.0 / (2.0 * s * n * n), 1.0 / (2.0 * s * n * n)),
        }
    };

    let (leading_series, series_order) = if spec.num_classes == 2 {
        match kind {
            PartitionKind::MaeLike => (2.0 - 15.0 * t / 4.0, "O(t^2)"),
            PartitionKind::ClassWise => (2.0 - 9.0 * t / 2.0 + 39.0 * t * t / 4.0, "O(t^3)"),
            _ => (3.5 - 27.0 * t / 4.0 + 15.0 * t * t / 4.0, "O(t^3)"),
        }
    } else {
        match kind {
            PartitionKind::MaeLike => (s - 15.0 * (s - 1.0) * t / 4.0, "O(t^2)"),
            PartitionKind::ClassWise => (s - 9.0 * (s - 1.0) * t / 2.0, "O(t^2)"),
            _ => (0.5 + 1.5 * s, "O(t)"),
        }
    };

    let (bound, bound_form, composition) = if spec.num_classes == 2 {
        let (value, expression) = match kind {
            PartitionKind::MaeLike => (mae_polynomial(t), "2 - 15t/4 + 9t^2/2 - 11t^3/4 + t^4"),
            PartitionKind::ClassWise => (
                class_polynomial(t),
                "2 - 7t + 16t^2 - 39t^3/2 + 29t^4/2 - 95t^5/16 + 15t^6/16 + (5/2)(1-t)^2 (t - t^2/2)",
            ),
            _ => (
                cross_polynomial(t),
                "(1-t)^2 + (1-t) t (1+t)^2 / 4 + t^2 + (5/4)(1-t)^2",
            ),
        };
        let comps = reference_compositions(spec, kind)?;
        let composition = composition_two_class(
            spec.points_per_class,
            spec.pairwise_overlap,
            &comps,
            FOLDED_C3,
        );
        (
            value,
            BoundForm::Exact {
                expression: expression.to_string(),
            },
            Some(composition),
        )
    } else {
        let expression = match kind {
            PartitionKind::MaeLike => "s - 15(s-1)t/4",
            PartitionKind::ClassWise => "s - 9(s-1)t/2",
            _ => "1/2 + 3s/2",
        };
        (
            leading_series,
            BoundForm::Series {
                expression: expression.to_string(),
                order: series_order.to_string(),
            },
            None,
        )
    };

    Ok(ClosedForm {
        intra_weight,
        inter_weight,
        bound,
        bound_form,
        leading_series,
        series_order: series_order.to_string(),
        composition,
    })
}
