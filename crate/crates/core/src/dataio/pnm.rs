use std::path::Path;

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::tokenizer::Image;

const MAXVAL: usize = 255;

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    data_start: usize,
}

fn skip_space_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn header_number(bytes: &[u8], pos: &mut usize, field: &'static str) -> Result<usize> {
    *pos = skip_space_and_comments(bytes, *pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format("pnm", field, "expected a decimal integer"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse()
        .map_err(|_| Error::format("pnm", field, "integer out of range"))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::format("pnm", "magic", "not a PNM file"));
    }
    let channels = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        other => {
            return Err(Error::format(
                "pnm",
                "magic",
                format!(
                    "unsupported variant P{}; only binary P5 and P6 are read",
                    other as char
                ),
            ))
        }
    };
    let mut pos = 2;
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != MAXVAL {
        return Err(Error::format(
            "pnm",
            "maxval",
            format!("maxval {maxval} unsupported, expected 255"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(
            "pnm",
            "width",
            "image dimensions must be positive",
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::format(
                "pnm",
                "maxval",
                "missing whitespace before raster",
            ))
        }
    }
    Ok(Header {
        channels,
        width,
        height,
        data_start: pos,
    })
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let h = parse_header(bytes)?;
    let expected = h.width * h.height * h.channels;
    let raster = &bytes[h.data_start..];
    if raster.len() != expected {
        return Err(Error::format(
            "pnm",
            "raster",
            format!(
                "length mismatch: expected {expected} bytes, found {}",
                raster.len()
            ),
        ));
    }
    Image::new(
        h.height,
        h.width,
        h.channels,
        raster.iter().map(|&b| f32::from(b)).collect(),
    )
}

/// Values are rounded and clamped to `0..=255`.
pub fn encode_pnm(image: &Image) -> Result<Vec<u8>> {
    let magic = match image.channels {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(Error::validation(format!(
                "PNM holds 1 or 3 channels, image has {c}"
            )))
        }
    };
    let mut out = format!("{magic}\n{} {}\n{MAXVAL}\n", image.width, image.height).into_bytes();
    out.extend(
        image
            .data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    Ok(out)
}

pub fn read_pnm(path: &Path) -> Result<Image> {
    decode_pnm(&read_file(path)?)
}

pub fn write_pnm(path: &Path, image: &Image) -> Result<()> {
    write_file(path, &encode_pnm(image)?)
}
