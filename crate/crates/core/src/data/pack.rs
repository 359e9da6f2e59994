//! The `GLYF` packed collection format (little-endian):
//!
//! ```text
//! "GLYF" | u32 version=1 | u32 J | u32 I | u32 H | u32 W
//! J·I·H·W u8 intensities (font, character, row, column)
//! u32 metadata length | UTF-8 metadata
//! ```
//!
//! Metadata is newline-delimited records: `F\t<font_id>`, `C\t<char_label>`,
//! and `M\t<font_id>\t<key>\t<value>` for optional per-font metadata.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::collection::FontCollection;
use crate::error::{Error, Result};

pub const GLYF_MAGIC: &[u8; 4] = b"GLYF";
pub const GLYF_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub fn pack_to_bytes(c: &FontCollection) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + c.raw().len() + 64 * c.num_fonts());
    out.extend_from_slice(GLYF_MAGIC);
    for v in [GLYF_VERSION, c.num_fonts() as u32, c.num_chars() as u32, c.height() as u32, c.width() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(c.raw().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));

    let mut meta = String::new();
    for id in c.font_ids() {
        meta.push_str(&format!("F\t{id}\n"));
    }
    for label in c.char_labels() {
        meta.push_str(&format!("C\t{label}\n"));
    }
    for (j, id) in c.font_ids().iter().enumerate() {
        for (k, v) in c.metadata(j) {
            meta.push_str(&format!("M\t{id}\t{}\t{}\n", escape(k), escape(v)));
        }
    }
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or(Error::Length {
            expected: at + 4,
            found: bytes.len(),
        })
}

pub fn unpack_from_bytes(bytes: &[u8]) -> Result<FontCollection> {
    if bytes.len() < 4 || &bytes[..4] != GLYF_MAGIC {
        return Err(Error::Decode("bad magic, expected GLYF".into()));
    }
    let version = read_u32(bytes, 4)?;
    if version != GLYF_VERSION {
        return Err(Error::Decode(format!("unsupported GLYF version {version}")));
    }
    let dims: Vec<usize> = (0..4)
        .map(|i| read_u32(bytes, 8 + 4 * i).map(|v| v as usize))
        .collect::<Result<_>>()?;
    let (j, i, h, w) = (dims[0], dims[1], dims[2], dims[3]);
    let payload = j
        .checked_mul(i)
        .and_then(|v| v.checked_mul(h))
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::Decode("dimensions overflow".into()))?;
    let body_end = HEADER_LEN + payload;
    if bytes.len() < body_end + 4 {
        return Err(Error::Length {
            expected: body_end + 4,
            found: bytes.len(),
        });
    }
    let glyphs: Vec<f32> = bytes[HEADER_LEN..body_end].iter().map(|&b| b as f32 / 255.0).collect();
    let meta_len = read_u32(bytes, body_end)? as usize;
    let meta_bytes = bytes.get(body_end + 4..body_end + 4 + meta_len).ok_or(Error::Length {
        expected: body_end + 4 + meta_len,
        found: bytes.len(),
    })?;
    let meta = std::str::from_utf8(meta_bytes).map_err(|_| Error::Decode("metadata is not UTF-8".into()))?;

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut extra: Vec<(String, String, String)> = Vec::new();
    for line in meta.lines().filter(|l| !l.is_empty()) {
        let mut parts = line.splitn(4, '\t');
        match (parts.next(), parts.next()) {
            (Some("F"), Some(id)) => ids.push(id.to_string()),
            (Some("C"), Some(label)) => labels.push(label.to_string()),
            (Some("M"), Some(id)) => {
                let key = parts.next().ok_or_else(|| Error::Decode(format!("bad metadata record {line:?}")))?;
                let value = parts.next().unwrap_or("");
                extra.push((id.to_string(), unescape(key), unescape(value)));
            }
            _ => return Err(Error::Decode(format!("bad metadata record {line:?}"))),
        }
    }
    if ids.len() != j || labels.len() != i {
        return Err(Error::Decode(format!(
            "metadata lists {} fonts and {} characters, header says {j} and {i}",
            ids.len(),
            labels.len()
        )));
    }
    let mut metadata = vec![BTreeMap::new(); j];
    for (id, k, v) in extra {
        let idx = ids
            .iter()
            .position(|f| *f == id)
            .ok_or_else(|| Error::Decode(format!("metadata for unknown font {id:?}")))?;
        metadata[idx].insert(k, v);
    }
    FontCollection::new(glyphs, i, h, w, ids, labels)?.with_metadata(metadata)
}

pub fn pack_collection(c: &FontCollection, path: &Path) -> Result<()> {
    fs::write(path, pack_to_bytes(c)).map_err(|e| Error::io(path, e))
}

pub fn unpack_collection(path: &Path) -> Result<FontCollection> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    unpack_from_bytes(&bytes).map_err(|e| e.at(path))
}
