//! WebAssembly front end for a single static page (`www/index.html`).
//!
//! Three operations, all on procedurally generated fonts so nothing has to be
//! downloaded:
//!
//! * render a font from style sliders,
//! * reconstruct the unobserved glyphs of that font from a few observed ones
//!   by nearest-neighbor search over a synthetic library,
//! * keep only the largest DCT coefficients of one glyph and compare the
//!   squared-L2 error with the Cauchy log-likelihood.
//!
//! Every exported method is infallible; out-of-range inputs are clamped so
//! the page never has to handle exceptions.

use glyphfactor::data::FontCollection;
use glyphfactor::dct::{squared_l2_glyph_distance, Dct2, DEFAULT_GAMMA};
use glyphfactor::reconstruct::{nn_reconstruct, ReconstructionRequest};
use glyphfactor::synth::{synth_font, synthetic_collection, SynthStyle};
use wasm_bindgen::prelude::*;

pub const CHARS: usize = 26;
pub const GLYPH_SIZE: usize = 32;

#[wasm_bindgen]
pub struct Demo {
    library: FontCollection,
    font: Vec<f32>,
    match_id: String,
    match_distance: f64,
    unobserved_error: f64,
    cauchy: f64,
    l2: f64,
}

#[wasm_bindgen]
impl Demo {
    /// A library of `library_fonts` random styles drawn from `seed`.
    #[wasm_bindgen(constructor)]
    pub fn new(library_fonts: usize, seed: u32) -> Demo {
        let library = synthetic_collection(library_fonts.clamp(1, 500), CHARS, GLYPH_SIZE, seed as u64)
            .expect("synthetic library parameters are valid");
        let mut demo = Demo {
            library,
            font: Vec::new(),
            match_id: String::new(),
            match_distance: f64::NAN,
            unobserved_error: f64::NAN,
            cauchy: f64::NAN,
            l2: f64::NAN,
        };
        demo.set_style(0.1, 0.0, 0.8, 0.85, 0.0);
        demo
    }

    #[wasm_bindgen(getter)]
    pub fn glyph_size(&self) -> usize {
        GLYPH_SIZE
    }

    #[wasm_bindgen(getter)]
    pub fn chars(&self) -> usize {
        CHARS
    }

    #[wasm_bindgen(getter)]
    pub fn library_size(&self) -> usize {
        self.library.num_fonts()
    }

    /// Renders the working font; returns all glyphs back to back
    /// (ink 0, paper 1).
    pub fn set_style(&mut self, thickness: f64, slant: f64, width: f64, height: f64, serif: f64) -> Vec<f32> {
        let style = SynthStyle {
            thickness: finite_or(thickness, 0.1).clamp(0.03, 0.25),
            slant: finite_or(slant, 0.0).clamp(-0.4, 0.4),
            width: finite_or(width, 0.8).clamp(0.4, 0.95),
            height: finite_or(height, 0.85).clamp(0.4, 0.95),
            serif: finite_or(serif, 0.0).clamp(0.0, 0.25),
        };
        self.font = synth_font(&style, CHARS, GLYPH_SIZE);
        self.font.clone()
    }

    /// Library font `index` (clamped), all glyphs back to back.
    pub fn library_font(&self, index: usize) -> Vec<f32> {
        self.library.font(index.min(self.library.num_fonts() - 1)).to_vec()
    }

    /// Makes library font `index` (clamped) the working font.
    pub fn use_library_font(&mut self, index: usize) -> Vec<f32> {
        self.font = self.library_font(index);
        self.font.clone()
    }

    /// Reconstructs the working font from the characters named in
    /// `observed` (letters A–Z, anything else ignored). Observed glyphs are
    /// passed through; the rest come from the nearest library font. With no
    /// valid letter the working font is returned unchanged.
    pub fn reconstruct(&mut self, observed: &str) -> Vec<f32> {
        let chars = parse_letters(observed);
        if chars.is_empty() {
            self.match_id.clear();
            self.match_distance = f64::NAN;
            self.unobserved_error = f64::NAN;
            return self.font.clone();
        }
        let n = GLYPH_SIZE * GLYPH_SIZE;
        let glyph = |i: usize| self.font[i * n..(i + 1) * n].to_vec();
        let req = ReconstructionRequest::new(chars.iter().map(|&i| (i, glyph(i))).collect(), (0..CHARS).collect())
            .expect("letters are in range");
        let (m, out) = nn_reconstruct(&self.library, &req).expect("library matches the working font");
        self.match_id = m.font_id;
        self.match_distance = m.distance;
        let hidden: Vec<usize> = (0..CHARS).filter(|i| !chars.contains(i)).collect();
        self.unobserved_error = if hidden.is_empty() {
            0.0
        } else {
            hidden
                .iter()
                .map(|&i| squared_l2_glyph_distance(&self.font[i * n..(i + 1) * n], &out[i]).unwrap())
                .sum::<f64>()
                / hidden.len() as f64
        };
        (0..CHARS).flat_map(|i| if chars.contains(&i) { glyph(i) } else { out[i].clone() }).collect()
    }

    #[wasm_bindgen(getter)]
    pub fn match_id(&self) -> String {
        self.match_id.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn match_distance(&self) -> f64 {
        self.match_distance
    }

    /// Mean squared-L2 error over the unobserved glyphs of the last
    /// reconstruction.
    #[wasm_bindgen(getter)]
    pub fn unobserved_error(&self) -> f64 {
        self.unobserved_error
    }

    /// Working-font glyph `ch` rebuilt from its `keep` largest-magnitude DCT
    /// coefficients.
    pub fn dct_truncate(&mut self, ch: usize, keep: usize) -> Vec<f32> {
        let n = GLYPH_SIZE * GLYPH_SIZE;
        let ch = ch.min(CHARS - 1);
        let target: Vec<f64> = self.font[ch * n..(ch + 1) * n].iter().map(|&v| v as f64).collect();
        let plan = Dct2::<f64>::new(GLYPH_SIZE, GLYPH_SIZE);
        let coeffs = plan.forward(&target);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| coeffs[b].abs().total_cmp(&coeffs[a].abs()).then(a.cmp(&b)));
        let mut kept = vec![0.0; n];
        for &i in order.iter().take(keep.min(n)) {
            kept[i] = coeffs[i];
        }
        let approx = plan.inverse(&kept);
        self.cauchy = plan.cauchy_with_grad(&coeffs, &approx, DEFAULT_GAMMA).0;
        self.l2 = squared_l2_glyph_distance(&target, &approx).unwrap();
        approx.into_iter().map(|v| v as f32).collect()
    }

    /// Cauchy log-likelihood (γ = 0.001) of the glyph under the last
    /// truncation.
    #[wasm_bindgen(getter)]
    pub fn cauchy(&self) -> f64 {
        self.cauchy
    }

    #[wasm_bindgen(getter)]
    pub fn l2(&self) -> f64 {
        self.l2
    }
}

fn finite_or(v: f64, fallback: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        fallback
    }
}

/// Distinct letter indices in first-seen order; case-insensitive.
pub fn parse_letters(s: &str) -> Vec<usize> {
    let mut out = Vec::new();
    for c in s.chars() {
        if c.is_ascii_alphabetic() {
            let i = (c.to_ascii_uppercase() as u8 - b'A') as usize;
            if !out.contains(&i) {
                out.push(i);
            }
        }
    }
    out
}
