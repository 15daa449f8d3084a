//! The finite toy model of masked image modeling with a discrete tokenizer.
//!
//! Points stand in for image patches. A datum is drawn by picking one of `s`
//! classes uniformly and then an ordered pair (unmasked, masked) uniformly
//! from that class. A tokenizer is reduced to the partition it induces on the
//! masked views; aggregating the joint distribution over that partition gives
//! the mask graph, and two-hop connectivity through it gives the augmentation
//! graph whose spectrum and labeling error feed the downstream bound
//! `c1 * sum(lambda^2) + c2 * alpha`.

mod closed_form;
mod graph;
mod joint;
mod partition;
mod reconcile;
mod space;
mod theorem;

pub use closed_form::{
    closed_form_bounds, composition_two_class, exact_two_class_sum_lambda_sq, BoundForm,
    ClosedForm, CompositionForm, FOLDED_C3,
};
pub use graph::{
    aggregate_mask_graph, build_augmentation_matrix, downstream_bound, edge_weights,
    labeling_error, spectrum_sum_squares, AugmentationMatrix, BoundConstants, EdgeWeights,
    MaskGraph, SpectrumSum,
};
pub use joint::{build_mask_joint, MaskJoint};
pub use partition::{make_partition, BlockComposition, PartitionKind, TokenPartition};
pub use reconcile::{
    reconcile, reconcile_full, BoundReport, Checks, Comparison, ReconcileOutput, Reconciliation,
    Verdict,
};
pub use space::{build_point_space, LabelSet, PointSpace, ToySpaceSpec};
pub use theorem::{verify_theorem1, SpectralObjective, TheoremSearch, MAX_THEOREM_VIEWS};
