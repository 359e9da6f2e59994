use std::fs;
use std::path::Path;

use super::collection::FontCollection;
use crate::dct::sq_dist;
use crate::error::{Error, Result};
use crate::par::map_ordered;

/// A named list of font ids drawn from a collection.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitManifest {
    pub split_name: String,
    pub font_ids: Vec<String>,
    pub provenance: String,
}

impl SplitManifest {
    pub fn new(split_name: impl Into<String>, font_ids: Vec<String>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for id in &font_ids {
            if !seen.insert(id) {
                return Err(Error::param(format!("duplicate font id {id:?} in split")));
            }
        }
        Ok(SplitManifest {
            split_name: split_name.into(),
            font_ids,
            provenance: provenance.into(),
        })
    }

    /// Every listed font exists in `collection`.
    pub fn validate_against(&self, collection: &FontCollection) -> Result<()> {
        for id in &self.font_ids {
            if collection.index_of(id).is_none() {
                return Err(Error::param(format!(
                    "split {:?} lists font {id:?} which is not in the collection",
                    self.split_name
                )));
            }
        }
        Ok(())
    }

    /// `# split=<name> <provenance>` followed by one font id per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# split={} {}\n", self.split_name, self.provenance.replace('\n', " "));
        for id in &self.font_ids {
            s.push_str(id);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .filter(|l| l.starts_with("# split="))
            .ok_or_else(|| Error::Decode("split manifest must start with '# split=<name>'".into()))?;
        let rest = &header["# split=".len()..];
        let (name, provenance) = rest.split_once(' ').unwrap_or((rest, ""));
        let ids = lines
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        SplitManifest::new(name, ids, provenance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| e.at(path))
    }
}

/// Smallest summed squared-L2 distance (over all characters) between `font`
/// (`num_chars` glyphs, contiguous) and any font of `set`.
pub fn font_distance_to_set(font: &[f32], set: &FontCollection) -> f64 {
    (0..set.num_fonts())
        .map(|j| sq_dist(font, set.font(j)))
        .fold(f64::INFINITY, f64::min)
}

/// The `ceil(fraction · J)` candidates farthest from their nearest training
/// font, ranked by distance (descending) and then font id.
pub fn mine_hard_split(candidates: &FontCollection, train: &FontCollection, fraction: f64) -> Result<SplitManifest> {
    if train.num_fonts() == 0 {
        return Err(Error::param("training collection is empty"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("fraction must be in (0, 1], got {fraction}")));
    }
    if !candidates.compatible_with(train) {
        return Err(Error::param("candidate and training collections differ in characters or glyph size"));
    }
    let indices: Vec<usize> = (0..candidates.num_fonts()).collect();
    let dists = map_ordered(&indices, |&j| font_distance_to_set(candidates.font(j), train));
    let mut ranked: Vec<(f64, &String)> = dists.into_iter().zip(candidates.font_ids()).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let keep = ((fraction * candidates.num_fonts() as f64).ceil() as usize).min(ranked.len());
    let ids = ranked[..keep].iter().map(|(_, id)| (*id).clone()).collect();
    SplitManifest::new(
        "hard",
        ids,
        format!(
            "fraction={fraction} candidates={} train={} metric=min-summed-squared-l2",
            candidates.num_fonts(),
            train.num_fonts()
        ),
    )
}
