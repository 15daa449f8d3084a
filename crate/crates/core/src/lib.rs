//! Tools for studying discrete tokenizers in masked image modeling.
//!
//! The crate has three halves that share a little numerical plumbing:
//!
//! * [`toymodel`] builds the finite toy point space, its masking distribution,
//!   the tokenizer-induced mask and augmentation graphs, and evaluates the
//!   spectral downstream error bound by brute force next to its closed forms.
//! * [`tokenizer`] trains K-means codebooks over image patches and assigns
//!   nearest-center tokens.
//! * [`tcas`] scores a tokenizer against true patch labels with the
//!   token-class alignment similarity.
//!
//! [`dataio`] holds the binary file formats, synthetic data and PNM ingestion.

pub mod dataio;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod partitions;
pub mod tcas;
pub mod tokenizer;
pub mod toymodel;

pub use error::{Error, Result};
