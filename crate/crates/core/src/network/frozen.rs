//! Frozen inference model file format.
//!
//! Layout, version 1:
//!
//! ```text
//! poseg-frozen 1
//! input_height <n>
//! input_width <n>
//! channel_widths <a>,<b>,<c>,<d>,<e>
//! fc_channels <n>
//! num_classes <n>
//! width_divisor <n>
//! checksum <16 hex digits, FNV-1a 64 over the blob section>
//! params <count>
//! <name> <d0>x<d1>x<d2>x<d3> <byte offset> <byte length>
//! ...
//! blob <total bytes>
//! <raw little-endian f32 parameter blobs, in manifest order>
//! ```
//!
//! The round trip is bit-exact: loading a frozen file yields a model whose
//! predictions are bitwise identical to the model that was frozen.

use std::path::Path;

use thiserror::Error;

use super::{Model, NetworkConfig, NetworkError};
use crate::numerics::Tensor;

const MAGIC: &str = "poseg-frozen";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FrozenError {
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown format version: {0}")]
    UnknownVersion(String),
    #[error("checksum mismatch: manifest says {expected:016x}, blob hashes to {actual:016x}")]
    ChecksumMismatch { expected: u64, actual: u64 },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error("parameter table does not match the config: {0}")]
    LayoutMismatch(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// FNV-1a 64 over a byte slice.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Documented upper bound on the frozen file size for a config: the header
/// overhead plus four bytes per parameter.
pub fn frozen_size_bound(config: &NetworkConfig) -> u64 {
    let model = Model::<f32>::zeroed(config.clone());
    let header_per_param = 96u64;
    512 + header_per_param * model.tensor_count() as u64 + 4 * model.param_count() as u64
}

pub(super) fn freeze(model: &Model<f32>, path: &Path) -> Result<(), FrozenError> {
    let mut blob: Vec<u8> = Vec::with_capacity(4 * model.param_count());
    let mut table = String::new();
    let mut count = 0usize;
    model.visit_params(&mut |name, p| {
        let offset = blob.len();
        for &v in p.value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        let [d0, d1, d2, d3] = p.value.shape();
        table.push_str(&format!(
            "{name} {d0}x{d1}x{d2}x{d3} {offset} {}\n",
            blob.len() - offset
        ));
        count += 1;
    });

    let cfg = &model.config;
    let mut out = String::new();
    out.push_str(&format!("{MAGIC} {VERSION}\n"));
    out.push_str(&format!("input_height {}\n", cfg.input_height));
    out.push_str(&format!("input_width {}\n", cfg.input_width));
    out.push_str(&format!(
        "channel_widths {}\n",
        cfg.channel_widths.map(|w| w.to_string()).join(",")
    ));
    out.push_str(&format!("fc_channels {}\n", cfg.fc_channels));
    out.push_str(&format!("num_classes {}\n", cfg.num_classes));
    out.push_str(&format!("width_divisor {}\n", cfg.width_divisor));
    out.push_str(&format!("checksum {:016x}\n", fnv1a64(&blob)));
    out.push_str(&format!("params {count}\n"));
    out.push_str(&table);
    out.push_str(&format!("blob {}\n", blob.len()));

    let mut bytes = out.into_bytes();
    bytes.extend_from_slice(&blob);
    std::fs::write(path, bytes).map_err(|e| FrozenError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

struct HeaderLines<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderLines<'a> {
    fn next_line(&mut self) -> Result<&'a str, FrozenError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return Err(FrozenError::Truncated("header ended mid-line".into()));
        }
        let line = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| FrozenError::Malformed("non-utf8 header line".into()))?;
        self.pos += 1;
        Ok(line)
    }
}

fn parse_field<'a>(line: &'a str, key: &str) -> Result<&'a str, FrozenError> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| FrozenError::Malformed(format!("expected '{key} <value>', got '{line}'")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize, FrozenError> {
    s.parse()
        .map_err(|_| FrozenError::Malformed(format!("bad {what}: '{s}'")))
}

/// Loads a frozen model for inference.
pub fn load_frozen(path: &Path) -> Result<Model<f32>, FrozenError> {
    let bytes = std::fs::read(path).map_err(|e| FrozenError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut lines = HeaderLines { bytes: &bytes, pos: 0 };

    let first = lines.next_line()?;
    match first.split_once(' ') {
        Some((MAGIC, v)) if v == VERSION.to_string() => {}
        _ => return Err(FrozenError::UnknownVersion(first.to_string())),
    }

    let input_height = parse_usize(parse_field(lines.next_line()?, "input_height")?, "input_height")?;
    let input_width = parse_usize(parse_field(lines.next_line()?, "input_width")?, "input_width")?;
    let widths_str = parse_field(lines.next_line()?, "channel_widths")?;
    let widths: Vec<usize> = widths_str
        .split(',')
        .map(|s| parse_usize(s, "channel width"))
        .collect::<Result<_, _>>()?;
    if widths.len() != 5 {
        return Err(FrozenError::Malformed(format!(
            "expected 5 channel widths, got {}",
            widths.len()
        )));
    }
    let fc_channels = parse_usize(parse_field(lines.next_line()?, "fc_channels")?, "fc_channels")?;
    let num_classes = parse_usize(parse_field(lines.next_line()?, "num_classes")?, "num_classes")?;
    let width_divisor =
        parse_usize(parse_field(lines.next_line()?, "width_divisor")?, "width_divisor")?;

    let checksum_str = parse_field(lines.next_line()?, "checksum")?;
    let expected_checksum = u64::from_str_radix(checksum_str, 16)
        .map_err(|_| FrozenError::Malformed(format!("bad checksum '{checksum_str}'")))?;

    let count = parse_usize(parse_field(lines.next_line()?, "params")?, "param count")?;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next_line()?;
        let mut parts = line.split(' ');
        let (name, shape_str, off_str, len_str) = match (
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
        ) {
            (Some(a), Some(b), Some(c), Some(d), None) => (a, b, c, d),
            _ => return Err(FrozenError::Malformed(format!("bad param row '{line}'"))),
        };
        let dims: Vec<usize> = shape_str
            .split('x')
            .map(|s| parse_usize(s, "shape extent"))
            .collect::<Result<_, _>>()?;
        if dims.len() != 4 {
            return Err(FrozenError::Malformed(format!("bad shape '{shape_str}'")));
        }
        entries.push((
            name.to_string(),
            [dims[0], dims[1], dims[2], dims[3]],
            parse_usize(off_str, "offset")?,
            parse_usize(len_str, "length")?,
        ));
    }

    let blob_len = parse_usize(parse_field(lines.next_line()?, "blob")?, "blob length")?;
    let blob = &bytes[lines.pos..];
    if blob.len() < blob_len {
        return Err(FrozenError::Truncated(format!(
            "blob section has {} bytes, manifest says {blob_len}",
            blob.len()
        )));
    }
    let blob = &blob[..blob_len];
    let actual = fnv1a64(blob);
    if actual != expected_checksum {
        return Err(FrozenError::ChecksumMismatch {
            expected: expected_checksum,
            actual,
        });
    }

    let config = NetworkConfig {
        input_height,
        input_width,
        channel_widths: [widths[0], widths[1], widths[2], widths[3], widths[4]],
        fc_channels,
        num_classes,
        width_divisor,
    };
    config.validate()?;
    let mut model = Model::<f32>::zeroed(config);

    let mut idx = 0usize;
    let mut failure: Option<FrozenError> = None;
    model.visit_params_mut(&mut |name, p| {
        if failure.is_some() {
            return;
        }
        let Some((e_name, e_shape, e_off, e_len)) = entries.get(idx) else {
            failure = Some(FrozenError::LayoutMismatch(format!(
                "manifest has {count} params, config wants more (at '{name}')"
            )));
            return;
        };
        idx += 1;
        if e_name != name || *e_shape != p.value.shape() {
            failure = Some(FrozenError::LayoutMismatch(format!(
                "expected '{name}' with shape {:?}, manifest row is '{e_name}' {e_shape:?}",
                p.value.shape()
            )));
            return;
        }
        let expected_bytes = 4 * p.value.len();
        if *e_len != expected_bytes || e_off + e_len > blob.len() {
            failure = Some(FrozenError::Truncated(format!(
                "param '{name}' wants {expected_bytes} bytes at offset {e_off}"
            )));
            return;
        }
        let mut data = Vec::with_capacity(p.value.len());
        for chunk in blob[*e_off..e_off + e_len].chunks_exact(4) {
            data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
        p.value = Tensor::from_vec(p.value.shape(), data).expect("length checked");
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if idx != entries.len() {
        return Err(FrozenError::LayoutMismatch(format!(
            "manifest has {} params, config wants {idx}",
            entries.len()
        )));
    }
    Ok(model)
}
