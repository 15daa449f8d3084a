use std::path::Path;

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::tokenizer::{Codebook, PatchMatrix, SourceTag};

pub const FORMAT_VERSION: u32 = 1;

const PATCH_MAGIC: &[u8; 4] = b"PMIM";
const LABEL_MAGIC: &[u8; 4] = b"LBLS";
const CODEBOOK_MAGIC: &[u8; 4] = b"CBOK";
const TOKEN_MAGIC: &[u8; 4] = b"TOKS";

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Decoder<'a> {
    fn new(bytes: &'a [u8], format: &'static str) -> Self {
        Self {
            bytes,
            pos: 0,
            format,
        }
    }

    fn take(&mut self, len: usize, field: &'static str) -> Result<&'a [u8]> {
        let remaining = self.bytes.len() - self.pos;
        if remaining < len {
            return Err(Error::format(
                self.format,
                field,
                format!("truncated: need {len} bytes, {remaining} left"),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let found = self.take(4, "magic")?;
        if found != expected {
            return Err(Error::format(
                self.format,
                "magic",
                format!(
                    "expected {:?}, found {:?}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(found)
                ),
            ));
        }
        Ok(())
    }

    fn u8(&mut self, field: &'static str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }

    fn u64(&mut self, field: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, field)?.try_into().unwrap()))
    }

    fn version(&mut self) -> Result<()> {
        let v = self.u32("version")?;
        if v != FORMAT_VERSION {
            return Err(Error::format(
                self.format,
                "version",
                format!("unsupported version {v}, expected {FORMAT_VERSION}"),
            ));
        }
        Ok(())
    }

    /// Exactly `count` 4-byte words must remain.
    fn payload(&mut self, count: usize, field: &'static str) -> Result<&'a [u8]> {
        let expected = count
            .checked_mul(4)
            .ok_or_else(|| Error::format(self.format, field, "declared length overflows"))?;
        let remaining = self.bytes.len() - self.pos;
        if remaining != expected {
            return Err(Error::format(
                self.format,
                field,
                format!("length mismatch: header declares {expected} bytes, file has {remaining}"),
            ));
        }
        self.take(expected, field)
    }
}

fn words_f32(bytes: &[u8]) -> impl Iterator<Item = f32> + '_ {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
}

fn words_u32(bytes: &[u8]) -> impl Iterator<Item = u32> + '_ {
    bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
}

fn header_u32(value: usize, format: &'static str, field: &'static str) -> Result<u32> {
    u32::try_from(value)
        .map_err(|_| Error::format(format, field, format!("{value} does not fit in u32")))
}

pub fn encode_patches(patches: &PatchMatrix) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + patches.as_slice().len() * 4);
    out.extend_from_slice(PATCH_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&header_u32(patches.count(), "patches", "count")?.to_le_bytes());
    out.extend_from_slice(&header_u32(patches.dim(), "patches", "dim")?.to_le_bytes());
    for v in patches.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_patches(bytes: &[u8]) -> Result<PatchMatrix> {
    let mut d = Decoder::new(bytes, "patches");
    d.magic(PATCH_MAGIC)?;
    d.version()?;
    let count = d.u32("count")? as usize;
    let dim = d.u32("dim")? as usize;
    if dim == 0 {
        return Err(Error::format(
            "patches",
            "dim",
            "dimension must be positive",
        ));
    }
    let payload = d.payload(count * dim, "payload")?;
    PatchMatrix::new(count, dim, words_f32(payload).collect())
        .map_err(|e| Error::format("patches", "payload", e.to_string()))
}

pub fn encode_labels(labels: &[u32]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len() * 4);
    out.extend_from_slice(LABEL_MAGIC);
    out.extend_from_slice(&header_u32(labels.len(), "labels", "count")?.to_le_bytes());
    for v in labels {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u32>> {
    let mut d = Decoder::new(bytes, "labels");
    d.magic(LABEL_MAGIC)?;
    let count = d.u32("count")? as usize;
    Ok(words_u32(d.payload(count, "payload")?).collect())
}

pub fn encode_codebook(codebook: &Codebook) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(29 + codebook.centers.len() * 4);
    out.extend_from_slice(CODEBOOK_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&header_u32(codebook.k, "codebook", "k")?.to_le_bytes());
    out.extend_from_slice(&header_u32(codebook.dim, "codebook", "dim")?.to_le_bytes());
    out.extend_from_slice(&codebook.seed.to_le_bytes());
    out.extend_from_slice(&codebook.epochs.to_le_bytes());
    out.push(codebook.source as u8);
    for &v in &codebook.centers {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook> {
    let mut d = Decoder::new(bytes, "codebook");
    d.magic(CODEBOOK_MAGIC)?;
    d.version()?;
    let k = d.u32("k")? as usize;
    let dim = d.u32("dim")? as usize;
    let seed = d.u64("seed")?;
    let epochs = d.u32("epochs")?;
    let tag = d.u8("source_tag")?;
    let source = SourceTag::from_byte(tag)
        .ok_or_else(|| Error::format("codebook", "source_tag", format!("unknown tag {tag}")))?;
    if k == 0 || dim == 0 {
        return Err(Error::format("codebook", "k", "k and dim must be positive"));
    }
    let payload = d.payload(k * dim, "centers")?;
    let centers = words_f32(payload).map(f64::from).collect();
    let mut cb = Codebook::new(k, dim, centers)
        .map_err(|e| Error::format("codebook", "centers", e.to_string()))?;
    cb.seed = seed;
    cb.epochs = epochs;
    cb.source = source;
    Ok(cb)
}

/// Token indices together with the codebook size they index into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFile {
    pub k: u32,
    pub tokens: Vec<u32>,
}

pub fn encode_tokens(tokens: &TokenFile) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(12 + tokens.tokens.len() * 4);
    out.extend_from_slice(TOKEN_MAGIC);
    out.extend_from_slice(&header_u32(tokens.tokens.len(), "tokens", "count")?.to_le_bytes());
    out.extend_from_slice(&tokens.k.to_le_bytes());
    for v in &tokens.tokens {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_tokens(bytes: &[u8]) -> Result<TokenFile> {
    let mut d = Decoder::new(bytes, "tokens");
    d.magic(TOKEN_MAGIC)?;
    let count = d.u32("count")? as usize;
    let k = d.u32("k")?;
    let tokens: Vec<u32> = words_u32(d.payload(count, "indices")?).collect();
    if let Some(i) = tokens.iter().position(|&t| t >= k) {
        return Err(Error::format(
            "tokens",
            "indices",
            format!("index {} at position {i} is not below k={k}", tokens[i]),
        ));
    }
    Ok(TokenFile { k, tokens })
}

pub fn write_patches(path: &Path, patches: &PatchMatrix) -> Result<()> {
    write_file(path, &encode_patches(patches)?)
}

pub fn read_patches(path: &Path) -> Result<PatchMatrix> {
    decode_patches(&read_file(path)?)
}

pub fn write_labels(path: &Path, labels: &[u32]) -> Result<()> {
    write_file(path, &encode_labels(labels)?)
}

pub fn read_labels(path: &Path) -> Result<Vec<u32>> {
    decode_labels(&read_file(path)?)
}

pub fn write_codebook(path: &Path, codebook: &Codebook) -> Result<()> {
    write_file(path, &encode_codebook(codebook)?)
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    decode_codebook(&read_file(path)?)
}

pub fn write_tokens(path: &Path, tokens: &TokenFile) -> Result<()> {
    write_file(path, &encode_tokens(tokens)?)
}

pub fn read_tokens(path: &Path) -> Result<TokenFile> {
    decode_tokens(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(err: Error) -> &'static str {
        match err {
            Error::Format { field, .. } => field,
            other => panic!("expected a format error, got {other}"),
        }
    }

    #[test]
    fn patch_header_layout() {
        let p = PatchMatrix::new(2, 1, vec![1.0, -2.5]).unwrap();
        let bytes = encode_patches(&p).unwrap();
        assert_eq!(&bytes[..4], b"PMIM");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[1, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 24);
    }

    #[test]
    fn codebook_header_layout() {
        let mut cb = Codebook::new(1, 2, vec![0.5, 1.5]).unwrap();
        cb.seed = 0x0102030405060708;
        cb.epochs = 7;
        cb.source = SourceTag::Feature;
        let bytes = encode_codebook(&cb).unwrap();
        assert_eq!(&bytes[..4], b"CBOK");
        assert_eq!(&bytes[16..24], &[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(&bytes[24..28], &[7, 0, 0, 0]);
        assert_eq!(bytes[28], 1);
        assert_eq!(bytes.len(), 29 + 8);
        assert_eq!(decode_codebook(&bytes).unwrap(), cb);
    }

    #[test]
    fn truncated_payload_is_a_length_error() {
        let p = PatchMatrix::new(3, 2, vec![0.0; 6]).unwrap();
        let bytes = encode_patches(&p).unwrap();
        assert_eq!(
            field_of(decode_patches(&bytes[..bytes.len() - 2]).unwrap_err()),
            "payload"
        );
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(field_of(decode_patches(&long).unwrap_err()), "payload");
    }

    #[test]
    fn header_corruption_names_field() {
        let bytes = encode_labels(&[1, 2, 3]).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(field_of(decode_labels(&bad).unwrap_err()), "magic");
        assert_eq!(field_of(decode_labels(&bytes[..6]).unwrap_err()), "count");

        let p = encode_patches(&PatchMatrix::new(1, 1, vec![0.0]).unwrap()).unwrap();
        let mut v2 = p.clone();
        v2[4] = 2;
        assert_eq!(field_of(decode_patches(&v2).unwrap_err()), "version");

        let mut cb = encode_codebook(&Codebook::new(1, 1, vec![0.0]).unwrap()).unwrap();
        cb[28] = 9;
        assert_eq!(field_of(decode_codebook(&cb).unwrap_err()), "source_tag");
    }

    #[test]
    fn token_indices_must_be_below_k() {
        let bytes = encode_tokens(&TokenFile {
            k: 2,
            tokens: vec![0, 2],
        })
        .unwrap();
        assert_eq!(field_of(decode_tokens(&bytes).unwrap_err()), "indices");
    }

    #[test]
    fn wrong_magic_across_formats() {
        let labels = encode_labels(&[0]).unwrap();
        assert_eq!(field_of(decode_tokens(&labels).unwrap_err()), "magic");
        assert_eq!(field_of(decode_codebook(&labels).unwrap_err()), "magic");
        assert_eq!(field_of(decode_patches(&labels).unwrap_err()), "magic");
    }
}
