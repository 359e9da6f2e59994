//! Reconstruction-error protocol: for each test font and trial, observe a
//! random subset of characters, reconstruct the rest, and average the summed
//! squared pixel error per unobserved glyph.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::data::{mine_hard_split, FontCollection, SplitManifest};
use crate::dct::sq_dist;
use crate::error::{Error, Result};
use crate::model::{FontModel, ModelParams};
use crate::par::map_ordered;
use crate::reconstruct::decode_glyphs;
use crate::rng::{derive_seed, seeded};

/// Fraction of test fonts kept by the hard split.
pub const HARD_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Full,
    Hard,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Full => "full",
            Split::Hard => "hard",
        })
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Split::Full),
            "hard" => Ok(Split::Hard),
            _ => Err(Error::param(format!("unknown split {s:?} (expected full or hard)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub observation_counts: Vec<usize>,
    pub trials_per_font: usize,
    pub seed: u64,
    pub split: Split,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            observation_counts: vec![1, 2, 4, 8],
            trials_per_font: 5,
            seed: 0,
            split: Split::Full,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self, num_chars: usize) -> Result<()> {
        if self.observation_counts.is_empty() {
            return Err(Error::param("no observation counts"));
        }
        for &c in &self.observation_counts {
            if c == 0 || c >= num_chars {
                return Err(Error::param(format!(
                    "observation count {c} leaves nothing to score with {num_chars} characters"
                )));
            }
        }
        if self.trials_per_font == 0 {
            return Err(Error::param("trials_per_font must be at least 1"));
        }
        Ok(())
    }
}

pub enum System<'a> {
    Model {
        name: String,
        model: &'a FontModel,
        params: &'a ModelParams<f32>,
    },
    NearestNeighbor,
}

impl System<'_> {
    pub fn name(&self) -> &str {
        match self {
            System::Model { name, .. } => name,
            System::NearestNeighbor => "nn",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub observations: usize,
    pub mean_error: f64,
    pub n_glyphs: usize,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub split: Split,
    pub config: EvalConfig,
    /// One cell per observation count, in configuration order.
    pub cells: Vec<EvalCell>,
}

/// Observed character subset for one (font, trial, count), independent of
/// every other draw and of font order.
pub fn observed_subset(seed: u64, font_id: &str, trial: usize, count: usize, num_chars: usize) -> Vec<usize> {
    let mut rng = seeded(derive_seed(seed, font_id, &[trial as u64, count as u64]));
    let mut v = sample_indices(&mut rng, num_chars, count).into_vec();
    v.sort_unstable();
    v
}

/// Hard subset of `test`: the `HARD_FRACTION` farthest from `train`.
pub fn hard_subset(test: &FontCollection, train: &FontCollection) -> Result<FontCollection> {
    let m: SplitManifest = mine_hard_split(test, train, HARD_FRACTION)?;
    test.subset(&m.font_ids)
}

/// Runs the protocol on `test` (already restricted to the requested split).
pub fn evaluate(system: &System<'_>, test: &FontCollection, train: &FontCollection, cfg: &EvalConfig) -> Result<EvalReport> {
    let chars = test.num_chars();
    cfg.validate(chars)?;
    if let System::Model { model, params, .. } = system {
        let mc = model.config();
        if mc.char_count != chars || mc.glyph_size != test.height() || mc.glyph_size != test.width() {
            return Err(Error::param("test collection does not match the model's glyph shape"));
        }
        model.check_params(params)?;
    } else if !train.compatible_with(test) {
        return Err(Error::param("train and test collections differ in characters or glyph size"));
    }
    let order = test.order_by_id();
    // errors[font][count][trial] = per-glyph errors in character order
    let per_font = map_ordered(&order, |&j| font_errors(system, test, train, j, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(cfg.observation_counts.len());
    for (ci, &count) in cfg.observation_counts.iter().enumerate() {
        let (mut sum, mut sum_sq, mut n) = (0.0f64, 0.0f64, 0usize);
        for font in &per_font {
            for trial in &font[ci] {
                for &e in trial {
                    sum += e;
                    sum_sq += e * e;
                    n += 1;
                }
            }
        }
        let mean = sum / n as f64;
        let var = if n > 1 {
            ((sum_sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        cells.push(EvalCell {
            observations: count,
            mean_error: mean,
            n_glyphs: n,
            stderr: (var / n as f64).sqrt(),
        });
    }
    Ok(EvalReport {
        system: system.name().to_string(),
        split: cfg.split,
        config: cfg.clone(),
        cells,
    })
}

fn font_errors(
    system: &System<'_>,
    test: &FontCollection,
    train: &FontCollection,
    j: usize,
    cfg: &EvalConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let chars = test.num_chars();
    let id = &test.font_ids()[j];
    // For the baseline every glyph distance to every training font is needed
    // by some trial; compute the table once.
    let nn_table: Option<(Vec<usize>, Vec<f64>)> = match system {
        System::NearestNeighbor => {
            let order = train.order_by_id();
            let mut t = Vec::with_capacity(order.len() * chars);
            for &f in &order {
                for i in 0..chars {
                    t.push(sq_dist(test.glyph(j, i), train.glyph(f, i)));
                }
            }
            Some((order, t))
        }
        System::Model { .. } => None,
    };
    let mut out = Vec::with_capacity(cfg.observation_counts.len());
    for &count in &cfg.observation_counts {
        let mut trials = Vec::with_capacity(cfg.trials_per_font);
        for trial in 0..cfg.trials_per_font {
            let obs = observed_subset(cfg.seed, id, trial, count, chars);
            let mut is_obs = vec![false; chars];
            for &i in &obs {
                is_obs[i] = true;
            }
            let hidden: Vec<usize> = (0..chars).filter(|&i| !is_obs[i]).collect();
            let errors = match (system, &nn_table) {
                (System::NearestNeighbor, Some((order, table))) => {
                    let mut best = (0usize, f64::INFINITY);
                    for r in 0..order.len() {
                        let d: f64 = obs.iter().map(|&i| table[r * chars + i]).sum();
                        if d < best.1 {
                            best = (r, d);
                        }
                    }
                    hidden.iter().map(|&i| table[best.0 * chars + i]).collect()
                }
                (System::Model { model, params, .. }, _) => {
                    let observed: Vec<(usize, &[f32])> = obs.iter().map(|&i| (i, test.glyph(j, i))).collect();
                    let post = model.encode(params, &observed)?;
                    let recon = decode_glyphs(model, params, &post.mean_latent(), &hidden)?;
                    hidden
                        .iter()
                        .zip(&recon)
                        .map(|(&i, g)| sq_dist(g.as_slice(), test.glyph(j, i)))
                        .collect()
                }
                _ => unreachable!(),
            };
            trials.push(errors);
        }
        out.push(trials);
    }
    Ok(out)
}

/// Aligned text table, one row per report and one column per observation count.
pub fn render_table(reports: &[EvalReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let counts: Vec<usize> = first.cells.iter().map(|c| c.observations).collect();
    let mut rows = vec![std::iter::once("system".to_string())
        .chain(std::iter::once("split".to_string()))
        .chain(counts.iter().map(|c| c.to_string()))
        .collect::<Vec<_>>()];
    for r in reports {
        let mut row = vec![r.system.clone(), r.split.to_string()];
        for &c in &counts {
            row.push(
                r.cells
                    .iter()
                    .find(|cell| cell.observations == c)
                    .map_or("-".into(), |cell| format!("{:.2}", cell.mean_error)),
            );
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap())
        .collect();
    let mut s = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| if c < 2 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

pub const CSV_HEADER: &str = "system,split,observations,mean_error,n_glyphs,stderr";

/// Full-precision CSV; [`parse_csv`] recovers the same values.
pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in reports {
        for c in &r.cells {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.system, r.split, c.observations, c.mean_error, c.n_glyphs, c.stderr
            ));
        }
    }
    s
}

/// `(system, split, cell)` per CSV row.
pub fn parse_csv(text: &str) -> Result<Vec<(String, Split, EvalCell)>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Decode("missing report CSV header".into()));
    }
    let bad = |n: usize| Error::Decode(format!("malformed report CSV row {n}"));
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(n + 2));
            }
            Ok((
                f[0].to_string(),
                f[1].parse()?,
                EvalCell {
                    observations: f[2].parse().map_err(|_| bad(n + 2))?,
                    mean_error: f[3].parse().map_err(|_| bad(n + 2))?,
                    n_glyphs: f[4].parse().map_err(|_| bad(n + 2))?,
                    stderr: f[5].parse().map_err(|_| bad(n + 2))?,
                },
            ))
        })
        .collect()
}
