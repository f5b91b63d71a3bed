//! Minimal reader/writer for 2-D little-endian float NPY arrays.

use std::path::Path;

use super::Dtype;
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"\x93NUMPY";

pub(crate) struct NpyArray {
    pub rows: usize,
    pub cols: usize,
    pub dtype: Dtype,
    /// Row-major values widened to f64.
    pub values: Vec<f64>,
}

struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

pub(crate) fn decode(path: &Path, bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::format(path, "missing NPY magic string"));
    }
    let major = bytes[6];
    let (header_len, offset) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(Error::format(path, "truncated NPY header"));
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        v => return Err(Error::format(path, format!("unsupported NPY version {v}"))),
    };
    let end = offset + header_len;
    if bytes.len() < end {
        return Err(Error::format(path, "truncated NPY header"));
    }
    let text = std::str::from_utf8(&bytes[offset..end])
        .map_err(|_| Error::format(path, "NPY header is not valid text"))?;
    let header = parse_header(text).map_err(|reason| Error::format(path, reason))?;

    if header.fortran_order {
        return Err(Error::format(path, "Fortran-ordered arrays are not supported"));
    }
    let dtype = match header.descr.as_str() {
        "<f8" => Dtype::F64,
        "<f4" => Dtype::F32,
        other => {
            return Err(Error::format(
                path,
                format!("unsupported dtype {other:?} (expected '<f4' or '<f8')"),
            ))
        }
    };
    let (rows, cols) = match header.shape.as_slice() {
        [r, c] => (*r, *c),
        other => {
            return Err(Error::format(
                path,
                format!("expected a 2-D array, header declares shape {other:?}"),
            ))
        }
    };

    let width = dtype.width();
    let body = &bytes[end..];
    let row_bytes = cols * width;
    let expected = rows * row_bytes;
    if body.len() != expected {
        let held = body.len().checked_div(row_bytes).unwrap_or(0);
        return Err(Error::Shape(format!(
            "{}: header declares {rows}x{cols} but the data holds {held} rows ({} bytes, expected {expected})",
            path.display(),
            body.len()
        )));
    }

    let values = match dtype {
        Dtype::F64 => body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
        Dtype::F32 => body
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("chunk of 4"))))
            .collect(),
    };
    Ok(NpyArray {
        rows,
        cols,
        dtype,
        values,
    })
}

/// Encodes a row-major matrix as NPY version 1.0.
pub(crate) fn encode(rows: usize, cols: usize, dtype: Dtype, values: &[f64]) -> Vec<u8> {
    let descr = match dtype {
        Dtype::F64 => "<f8",
        Dtype::F32 => "<f4",
    };
    let mut dict =
        format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    // magic (6) + version (2) + length (2) + dict + '\n' must be a multiple of 64
    let unpadded = 10 + dict.len() + 1;
    dict.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    dict.push('\n');

    let mut out = Vec::with_capacity(10 + dict.len() + values.len() * dtype.width());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    match dtype {
        Dtype::F64 => values
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Dtype::F32 => values
            .iter()
            .for_each(|v| out.extend_from_slice(&(*v as f32).to_le_bytes())),
    }
    out
}

fn parse_header(text: &str) -> std::result::Result<Header, String> {
    let body = text
        .trim()
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| "header is not a dictionary literal".to_string())?;

    let mut descr = None;
    let mut fortran_order = None;
    let mut shape = None;
    let mut rest = body.trim();
    while !rest.is_empty() {
        let (key, after) = take_quoted(rest).ok_or("expected a quoted key")?;
        let after = after
            .trim_start()
            .strip_prefix(':')
            .ok_or("expected ':' after key")?
            .trim_start();
        let after = match key {
            "descr" => {
                let (v, after) = take_quoted(after).ok_or("descr must be a string")?;
                descr = Some(v.to_string());
                after
            }
            "fortran_order" => {
                if let Some(a) = after.strip_prefix("False") {
                    fortran_order = Some(false);
                    a
                } else if let Some(a) = after.strip_prefix("True") {
                    fortran_order = Some(true);
                    a
                } else {
                    return Err("fortran_order must be True or False".into());
                }
            }
            "shape" => {
                let inner = after.strip_prefix('(').ok_or("shape must be a tuple")?;
                let close = inner.find(')').ok_or("unterminated shape tuple")?;
                let dims = inner[..close]
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.trim_end_matches('L').parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| format!("bad shape entry: {e}"))?;
                shape = Some(dims);
                &inner[close + 1..]
            }
            other => return Err(format!("unexpected header key {other:?}")),
        };
        rest = after.trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(Header {
        descr: descr.ok_or("header lacks 'descr'")?,
        fortran_order: fortran_order.ok_or("header lacks 'fortran_order'")?,
        shape: shape.ok_or("header lacks 'shape'")?,
    })
}

fn take_quoted(s: &str) -> Option<(&str, &str)> {
    let quote = s.chars().next().filter(|c| *c == '\'' || *c == '"')?;
    let inner = &s[1..];
    let close = inner.find(quote)?;
    Some((&inner[..close], &inner[close + 1..]))
}
