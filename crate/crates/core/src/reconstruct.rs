//! Test-time use of a trained model: posterior-mean reconstruction, the
//! nearest-neighbor baseline, latent interpolation and latent export.

use std::path::Path;

use crate::data::FontCollection;
use crate::dct::sq_dist;
use crate::error::{Error, Result};
use crate::model::{FontLatent, FontModel, ModelParams};
use crate::par::map_ordered;

/// Observed `(character, glyph)` pairs and the characters to emit.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionRequest {
    pub observed: Vec<(usize, Vec<f32>)>,
    pub targets: Vec<usize>,
}

impl ReconstructionRequest {
    pub fn new(observed: Vec<(usize, Vec<f32>)>, targets: Vec<usize>) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::param("reconstruction needs at least one observed glyph"));
        }
        Ok(ReconstructionRequest { observed, targets })
    }

    /// Observes `observed` characters of font `j` and asks for every character.
    pub fn from_font(data: &FontCollection, j: usize, observed: &[usize]) -> Result<Self> {
        let obs = observed
            .iter()
            .map(|&i| {
                if i >= data.num_chars() {
                    Err(Error::param(format!("character index {i} out of range")))
                } else {
                    Ok((i, data.glyph(j, i).to_vec()))
                }
            })
            .collect::<Result<_>>()?;
        Self::new(obs, (0..data.num_chars()).collect())
    }

    fn observed_refs(&self) -> Vec<(usize, &[f32])> {
        self.observed.iter().map(|(i, g)| (*i, g.as_slice())).collect()
    }
}

fn clamp01(mut v: Vec<f32>) -> Vec<f32> {
    for x in &mut v {
        *x = x.clamp(0.0, 1.0);
    }
    v
}

/// Decodes `chars` under `z`, each grid clamped to [0, 1].
pub fn decode_glyphs(model: &FontModel, params: &ModelParams<f32>, z: &FontLatent<f32>, chars: &[usize]) -> Result<Vec<Vec<f32>>> {
    Ok(model.decode_font(params, z, chars)?.into_iter().map(clamp01).collect())
}

/// Posterior mean of the observed glyphs, then one decoded image per target.
pub fn reconstruct(model: &FontModel, params: &ModelParams<f32>, req: &ReconstructionRequest) -> Result<Vec<Vec<f32>>> {
    if req.observed.is_empty() {
        return Err(Error::param("reconstruction needs at least one observed glyph"));
    }
    let post = model.encode(params, &req.observed_refs())?;
    decode_glyphs(model, params, &post.mean_latent(), &req.targets)
}

/// Winner of the nearest-neighbor search.
#[derive(Clone, Debug, PartialEq)]
pub struct NnMatch {
    pub font_index: usize,
    pub font_id: String,
    pub distance: f64,
}

/// The training font with the smallest summed squared distance over the
/// observed characters; ties go to the smaller font id.
pub fn nn_search(train: &FontCollection, observed: &[(usize, &[f32])]) -> Result<NnMatch> {
    for &(i, g) in observed {
        if i >= train.num_chars() || g.len() != train.glyph_len() {
            return Err(Error::param("observed glyph does not match the training collection's shape"));
        }
    }
    let mut best: Option<NnMatch> = None;
    for j in train.order_by_id() {
        let d: f64 = observed.iter().map(|&(i, g)| sq_dist(g, train.glyph(j, i))).sum();
        if best.as_ref().is_none_or(|b| d < b.distance) {
            best = Some(NnMatch {
                font_index: j,
                font_id: train.font_ids()[j].clone(),
                distance: d,
            });
        }
    }
    Ok(best.expect("collections are never empty"))
}

/// Copies the targets verbatim from the nearest training font.
pub fn nn_reconstruct(train: &FontCollection, req: &ReconstructionRequest) -> Result<(NnMatch, Vec<Vec<f32>>)> {
    if req.observed.is_empty() {
        return Err(Error::param("reconstruction needs at least one observed glyph"));
    }
    let m = nn_search(train, &req.observed_refs())?;
    let glyphs = req
        .targets
        .iter()
        .map(|&i| {
            if i >= train.num_chars() {
                Err(Error::param(format!("target character {i} out of range")))
            } else {
                Ok(train.glyph(m.font_index, i).to_vec())
            }
        })
        .collect::<Result<_>>()?;
    Ok((m, glyphs))
}

/// `steps` frames along the segment from `z_a` to `z_b`, each decoding every
/// character in `chars`. The end frames equal direct decodes of the endpoints.
pub fn interpolate(
    model: &FontModel,
    params: &ModelParams<f32>,
    z_a: &FontLatent<f32>,
    z_b: &FontLatent<f32>,
    steps: usize,
    chars: &[usize],
) -> Result<Vec<Vec<Vec<f32>>>> {
    if steps < 2 {
        return Err(Error::param(format!("interpolation needs at least 2 steps, got {steps}")));
    }
    if z_a.z.len() != z_b.z.len() {
        return Err(Error::param("endpoint latents differ in dimension"));
    }
    // a + t·(b − a) keeps every frame equal to z_a when the endpoints agree;
    // the last frame is z_b itself rather than a + (b − a).
    let frames: Vec<FontLatent<f32>> = (0..steps)
        .map(|s| {
            if s == steps - 1 {
                return z_b.clone();
            }
            let t = s as f32 / (steps - 1) as f32;
            FontLatent {
                z: z_a.z.iter().zip(&z_b.z).map(|(&a, &b)| a + t * (b - a)).collect(),
            }
        })
        .collect();
    map_ordered(&frames, |z| decode_glyphs(model, params, z, chars))
        .into_iter()
        .collect()
}

/// One posterior-mean latent per font.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentTable {
    pub font_ids: Vec<String>,
    pub latents: Vec<Vec<f32>>,
}

impl LatentTable {
    pub fn new(font_ids: Vec<String>, latents: Vec<Vec<f32>>) -> Result<Self> {
        if font_ids.len() != latents.len() {
            return Err(Error::param("latent table needs one row per font"));
        }
        if let Some(k) = latents.first().map(Vec::len) {
            if latents.iter().any(|z| z.len() != k) {
                return Err(Error::param("latent rows differ in dimension"));
            }
        }
        Ok(LatentTable { font_ids, latents })
    }

    pub fn dim(&self) -> usize {
        self.latents.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.font_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.font_ids.is_empty()
    }

    /// Header `font_id,z0,…`, one row per font. Values use the shortest
    /// representation that parses back to the same float.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("font_id");
        for d in 0..self.dim() {
            s.push_str(&format!(",z{d}"));
        }
        s.push('\n');
        for (id, z) in self.font_ids.iter().zip(&self.latents) {
            s.push_str(id);
            for v in z {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Decode("empty latent table".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"font_id") || cols[1..].iter().enumerate().any(|(d, c)| *c != format!("z{d}")) {
            return Err(Error::Decode(format!("bad latent table header {header:?}")));
        }
        let k = cols.len() - 1;
        let (mut ids, mut rows) = (Vec::new(), Vec::new());
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or_default().to_string();
            let z: Vec<f32> = fields
                .map(|f| f.trim().parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Decode(format!("row {}: {e}", n + 2)))?;
            if z.len() != k {
                return Err(Error::Decode(format!("row {} has {} values, header has {k}", n + 2, z.len())));
            }
            ids.push(id);
            rows.push(z);
        }
        Self::new(ids, rows).map_err(|e| Error::Decode(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| e.at(path))
    }
}

/// Posterior means with every glyph of each font observed.
pub fn export_latents(model: &FontModel, params: &ModelParams<f32>, data: &FontCollection) -> Result<LatentTable> {
    let fonts: Vec<usize> = (0..data.num_fonts()).collect();
    let rows = map_ordered(&fonts, |&j| {
        let obs: Vec<(usize, &[f32])> = (0..data.num_chars()).map(|i| (i, data.glyph(j, i))).collect();
        model.encode(params, &obs).map(|p| p.mean)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    LatentTable::new(data.font_ids().to_vec(), rows)
}
