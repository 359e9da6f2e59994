//! Procedural stroke fonts for tests and demos. Each capital is a fixed
//! skeleton of polylines; a font is a style (stroke weight, slant, box
//! proportions, serifs) applied to every skeleton. Ink is 0, paper is 1.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::data::{default_char_labels, FontCollection};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthStyle {
    /// Stroke width as a fraction of the glyph size.
    pub thickness: f64,
    /// Horizontal shear of the top edge relative to the bottom, in box widths.
    pub slant: f64,
    /// Box width and height as fractions of the glyph size.
    pub width: f64,
    pub height: f64,
    /// Half-length of serif bars in box widths; 0 means sans.
    pub serif: f64,
}

impl Default for SynthStyle {
    fn default() -> Self {
        SynthStyle {
            thickness: 0.1,
            slant: 0.0,
            width: 0.8,
            height: 0.85,
            serif: 0.0,
        }
    }
}

impl SynthStyle {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let serif = rng.random_bool(0.5);
        SynthStyle {
            thickness: rng.random_range(0.06..0.17),
            slant: rng.random_range(-0.25..0.25),
            width: rng.random_range(0.6..0.9),
            height: rng.random_range(0.7..0.9),
            serif: if serif { rng.random_range(0.08..0.16) } else { 0.0 },
        }
    }

    fn metadata(&self) -> BTreeMap<String, String> {
        [
            ("thickness", self.thickness),
            ("slant", self.slant),
            ("width", self.width),
            ("height", self.height),
            ("serif", self.serif),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), format!("{v:.4}")))
        .collect()
    }
}

type Stroke = Vec<(f64, f64)>;

fn line(pts: &[(f64, f64)]) -> Stroke {
    pts.to_vec()
}

/// Elliptical arc, angles in degrees, counterclockwise with y pointing down
/// (so 90° is the top of the ellipse).
fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64) -> Stroke {
    let n = 16;
    (0..=n)
        .map(|i| {
            let a = (from + (to - from) * i as f64 / n as f64) * PI / 180.0;
            (cx + rx * a.cos(), cy - ry * a.sin())
        })
        .collect()
}

fn join(mut a: Stroke, b: Stroke) -> Stroke {
    a.extend(b);
    a
}

fn skeleton(ch: usize) -> Vec<Stroke> {
    let bowl_top = || join(line(&[(0.15, 0.0), (0.55, 0.0)]), join(arc(0.55, 0.25, 0.3, 0.25, 90.0, -90.0), line(&[(0.15, 0.5)])));
    match ch {
        0 => vec![line(&[(0.05, 1.0), (0.5, 0.0), (0.95, 1.0)]), line(&[(0.25, 0.6), (0.75, 0.6)])],
        1 => vec![
            line(&[(0.15, 0.0), (0.15, 1.0)]),
            bowl_top(),
            join(line(&[(0.15, 0.5), (0.6, 0.5)]), join(arc(0.6, 0.75, 0.3, 0.25, 90.0, -90.0), line(&[(0.15, 1.0)]))),
        ],
        2 => vec![arc(0.55, 0.5, 0.42, 0.5, 45.0, 315.0)],
        3 => vec![join(line(&[(0.15, 1.0), (0.15, 0.0), (0.45, 0.0)]), join(arc(0.45, 0.5, 0.42, 0.5, 90.0, -90.0), line(&[(0.15, 1.0)])))],
        4 => vec![
            line(&[(0.85, 0.0), (0.15, 0.0), (0.15, 1.0), (0.85, 1.0)]),
            line(&[(0.15, 0.5), (0.7, 0.5)]),
        ],
        5 => vec![line(&[(0.85, 0.0), (0.15, 0.0), (0.15, 1.0)]), line(&[(0.15, 0.5), (0.7, 0.5)])],
        6 => vec![arc(0.55, 0.5, 0.42, 0.5, 45.0, 340.0), line(&[(0.55, 0.55), (0.94, 0.55), (0.94, 0.8)])],
        7 => vec![
            line(&[(0.15, 0.0), (0.15, 1.0)]),
            line(&[(0.85, 0.0), (0.85, 1.0)]),
            line(&[(0.15, 0.5), (0.85, 0.5)]),
        ],
        8 => vec![line(&[(0.5, 0.0), (0.5, 1.0)]), line(&[(0.3, 0.0), (0.7, 0.0)]), line(&[(0.3, 1.0), (0.7, 1.0)])],
        9 => vec![join(line(&[(0.75, 0.0), (0.75, 0.7)]), arc(0.45, 0.7, 0.3, 0.3, 0.0, -180.0))],
        10 => vec![
            line(&[(0.15, 0.0), (0.15, 1.0)]),
            line(&[(0.85, 0.0), (0.15, 0.65)]),
            line(&[(0.38, 0.45), (0.88, 1.0)]),
        ],
        11 => vec![line(&[(0.15, 0.0), (0.15, 1.0), (0.85, 1.0)])],
        12 => vec![line(&[(0.08, 1.0), (0.1, 0.0), (0.5, 0.65), (0.9, 0.0), (0.92, 1.0)])],
        13 => vec![line(&[(0.15, 1.0), (0.15, 0.0), (0.85, 1.0), (0.85, 0.0)])],
        14 => vec![arc(0.5, 0.5, 0.42, 0.5, 0.0, 360.0)],
        15 => vec![line(&[(0.15, 0.0), (0.15, 1.0)]), bowl_top()],
        16 => vec![arc(0.5, 0.5, 0.42, 0.5, 0.0, 360.0), line(&[(0.6, 0.72), (0.92, 1.0)])],
        17 => vec![line(&[(0.15, 0.0), (0.15, 1.0)]), bowl_top(), line(&[(0.45, 0.5), (0.88, 1.0)])],
        18 => vec![join(arc(0.5, 0.26, 0.34, 0.26, 20.0, 270.0), arc(0.5, 0.74, 0.36, 0.26, 90.0, -160.0))],
        19 => vec![line(&[(0.05, 0.0), (0.95, 0.0)]), line(&[(0.5, 0.0), (0.5, 1.0)])],
        20 => vec![join(line(&[(0.15, 0.0), (0.15, 0.62)]), join(arc(0.5, 0.62, 0.35, 0.38, 180.0, 360.0), line(&[(0.85, 0.0)])))],
        21 => vec![line(&[(0.07, 0.0), (0.5, 1.0), (0.93, 0.0)])],
        22 => vec![line(&[(0.03, 0.0), (0.26, 1.0), (0.5, 0.35), (0.74, 1.0), (0.97, 0.0)])],
        23 => vec![line(&[(0.1, 0.0), (0.9, 1.0)]), line(&[(0.9, 0.0), (0.1, 1.0)])],
        24 => vec![line(&[(0.07, 0.0), (0.5, 0.5), (0.93, 0.0)]), line(&[(0.5, 0.5), (0.5, 1.0)])],
        25 => vec![line(&[(0.12, 0.0), (0.88, 0.0), (0.12, 1.0), (0.88, 1.0)])],
        _ => {
            // Characters past Z: a deterministic random scribble.
            let mut rng = seeded(0x5eed_0000 + ch as u64);
            (0..2)
                .map(|_| (0..3).map(|_| (rng.random_range(0.1..0.9), rng.random_range(0.0..1.0))).collect())
                .collect()
        }
    }
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

/// Renders character `ch` at `size × size`, row-major, values in [0, 1].
pub fn render_glyph(ch: usize, style: &SynthStyle, size: usize) -> Vec<f32> {
    let s = size as f64;
    let (bw, bh) = (style.width * s, style.height * s);
    let to_px = |(u, v): (f64, f64)| {
        let x = s / 2.0 + (u - 0.5) * bw + style.slant * (0.5 - v) * bw;
        let y = s / 2.0 + (v - 0.5) * bh;
        (x, y)
    };
    let mut strokes = skeleton(ch);
    if style.serif > 0.0 {
        let mut bars = Vec::new();
        for st in &strokes {
            for &(u, v) in [st[0], st[st.len() - 1]].iter() {
                if v <= 0.02 || v >= 0.98 {
                    bars.push(vec![(u - style.serif, v), (u + style.serif, v)]);
                }
            }
        }
        strokes.extend(bars);
    }
    let segs: Vec<((f64, f64), (f64, f64))> = strokes
        .iter()
        .flat_map(|st| st.windows(2).map(|w| (to_px(w[0]), to_px(w[1]))))
        .collect();
    let half = style.thickness * s / 2.0;
    let mut out = vec![1.0f32; size * size];
    for r in 0..size {
        for c in 0..size {
            let p = (c as f64 + 0.5, r as f64 + 0.5);
            let d = segs.iter().map(|&(a, b)| seg_dist(p, a, b)).fold(f64::INFINITY, f64::min);
            let coverage = (half - d + 0.5).clamp(0.0, 1.0);
            out[r * size + c] = (1.0 - coverage) as f32;
        }
    }
    out
}

/// All `num_chars` glyphs of one style, contiguous.
pub fn synth_font(style: &SynthStyle, num_chars: usize, size: usize) -> Vec<f32> {
    (0..num_chars).flat_map(|ch| render_glyph(ch, style, size)).collect()
}

/// `num_fonts` random styles drawn from `seed`; ids `synth-000`, `synth-001`, …
/// and the style factors recorded as metadata.
pub fn synthetic_collection(num_fonts: usize, num_chars: usize, size: usize, seed: u64) -> Result<FontCollection> {
    if size == 0 {
        return Err(Error::param("glyph size must be positive"));
    }
    let mut rng = seeded(seed);
    let styles: Vec<SynthStyle> = (0..num_fonts).map(|_| SynthStyle::sample(&mut rng)).collect();
    let glyphs = styles.iter().flat_map(|s| synth_font(s, num_chars, size)).collect();
    let ids = (0..num_fonts).map(|j| format!("synth-{j:03}")).collect();
    FontCollection::new(glyphs, num_chars, size, size, ids, default_char_labels(num_chars))?
        .with_metadata(styles.iter().map(SynthStyle::metadata).collect())
}
