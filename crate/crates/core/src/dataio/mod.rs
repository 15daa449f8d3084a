//! Persistence and data sources.
//!
//! Every binary format is little-endian with a four-byte ASCII magic:
//!
//! | file      | layout                                                                   |
//! |-----------|--------------------------------------------------------------------------|
//! | patches   | `PMIM`, version u32, count u32, dim u32, count*dim f32                   |
//! | labels    | `LBLS`, count u32, count u32                                             |
//! | codebook  | `CBOK`, version u32, k u32, dim u32, seed u64, epochs u32, tag u8, k*dim f32 |
//! | tokens    | `TOKS`, count u32, k u32, count u32                                      |

mod formats;
mod pnm;
mod synthetic;

pub use formats::{
    decode_codebook, decode_labels, decode_patches, decode_tokens, encode_codebook, encode_labels,
    encode_patches, encode_tokens, read_codebook, read_labels, read_patches, read_tokens,
    write_codebook, write_labels, write_patches, write_tokens, TokenFile, FORMAT_VERSION,
};
pub use pnm::{decode_pnm, encode_pnm, read_pnm, write_pnm};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Label files must hold one class id per patch.
pub fn check_label_count(patches: &crate::tokenizer::PatchMatrix, labels: &[u32]) -> Result<()> {
    if patches.count() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: patches.count(),
            actual: labels.len(),
            context: "label count vs patch count",
        });
    }
    Ok(())
}
