use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};

pub const DEFAULT_CHARS: usize = 26;
pub const DEFAULT_GLYPH_SIZE: usize = 64;

/// `A`..`Z` for the first 26 characters, then `#26`, `#27`, ...
pub fn default_char_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'A' + i as u8) as char).to_string()
            } else {
                format!("#{i}")
            }
        })
        .collect()
}

/// The glyph matrix: `num_fonts × num_chars` grayscale images in `[0, 1]`,
/// stored font-major, character-major, row-major.
///
/// Immutable once built; share it freely between threads.
#[derive(Clone, Debug, PartialEq)]
pub struct FontCollection {
    glyphs: Vec<f32>,
    num_fonts: usize,
    num_chars: usize,
    height: usize,
    width: usize,
    font_ids: Vec<String>,
    char_labels: Vec<String>,
    metadata: Vec<BTreeMap<String, String>>,
}

impl FontCollection {
    pub fn new(
        glyphs: Vec<f32>,
        num_chars: usize,
        height: usize,
        width: usize,
        font_ids: Vec<String>,
        char_labels: Vec<String>,
    ) -> Result<Self> {
        let num_fonts = font_ids.len();
        if num_fonts == 0 {
            return Err(Error::EmptyInput("collection has no fonts".into()));
        }
        if num_chars == 0 || height == 0 || width == 0 {
            return Err(Error::param("collection needs at least one character and a non-empty glyph size"));
        }
        if char_labels.len() != num_chars {
            return Err(Error::param(format!(
                "{} character labels for {num_chars} characters",
                char_labels.len()
            )));
        }
        let expected = num_fonts * num_chars * height * width;
        if glyphs.len() != expected {
            return Err(Error::Length {
                expected,
                found: glyphs.len(),
            });
        }
        if let Some(pos) = glyphs.iter().position(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::Numeric(format!(
                "intensity {} at offset {pos} is outside [0, 1]",
                glyphs[pos]
            )));
        }
        let mut seen = HashSet::new();
        for id in &font_ids {
            if id.is_empty() || id.contains(['\n', '\t', '\r']) {
                return Err(Error::param(format!("invalid font id {id:?}")));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::param(format!("duplicate font id {id:?}")));
            }
        }
        Ok(FontCollection {
            glyphs,
            num_fonts,
            num_chars,
            height,
            width,
            font_ids,
            char_labels,
            metadata: vec![BTreeMap::new(); num_fonts],
        })
    }

    pub fn with_metadata(mut self, metadata: Vec<BTreeMap<String, String>>) -> Result<Self> {
        if metadata.len() != self.num_fonts {
            return Err(Error::param("metadata needs one entry per font"));
        }
        self.metadata = metadata;
        Ok(self)
    }

    pub fn num_fonts(&self) -> usize {
        self.num_fonts
    }

    pub fn num_chars(&self) -> usize {
        self.num_chars
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn glyph_len(&self) -> usize {
        self.height * self.width
    }

    pub fn font_ids(&self) -> &[String] {
        &self.font_ids
    }

    pub fn char_labels(&self) -> &[String] {
        &self.char_labels
    }

    pub fn metadata(&self, font: usize) -> &BTreeMap<String, String> {
        &self.metadata[font]
    }

    pub fn raw(&self) -> &[f32] {
        &self.glyphs
    }

    pub fn glyph(&self, font: usize, ch: usize) -> &[f32] {
        let n = self.glyph_len();
        let start = (font * self.num_chars + ch) * n;
        &self.glyphs[start..start + n]
    }

    /// All glyphs of one font, contiguous.
    pub fn font(&self, font: usize) -> &[f32] {
        let n = self.glyph_len() * self.num_chars;
        &self.glyphs[font * n..(font + 1) * n]
    }

    pub fn index_of(&self, font_id: &str) -> Option<usize> {
        self.font_ids.iter().position(|f| f == font_id)
    }

    pub fn char_index(&self, label: &str) -> Option<usize> {
        self.char_labels.iter().position(|c| c == label)
    }

    /// Shares the character set and glyph size with `other`.
    pub fn compatible_with(&self, other: &FontCollection) -> bool {
        self.num_chars == other.num_chars && self.height == other.height && self.width == other.width
    }

    /// The fonts named in `ids`, in that order.
    pub fn subset(&self, ids: &[String]) -> Result<FontCollection> {
        let mut glyphs = Vec::with_capacity(ids.len() * self.num_chars * self.glyph_len());
        let mut metadata = Vec::with_capacity(ids.len());
        for id in ids {
            let j = self
                .index_of(id)
                .ok_or_else(|| Error::param(format!("font {id:?} is not in the collection")))?;
            glyphs.extend_from_slice(self.font(j));
            metadata.push(self.metadata[j].clone());
        }
        FontCollection::new(
            glyphs,
            self.num_chars,
            self.height,
            self.width,
            ids.to_vec(),
            self.char_labels.clone(),
        )?
        .with_metadata(metadata)
    }

    /// Fonts sorted by id; used where results must not depend on input order.
    pub fn order_by_id(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.num_fonts).collect();
        order.sort_by(|&a, &b| self.font_ids[a].cmp(&self.font_ids[b]));
        order
    }
}
