//! Prints a few procedural glyphs as ASCII art.
use glyphfactor::synth::{render_glyph, SynthStyle};

fn main() {
    let style = SynthStyle { serif: 0.12, slant: 0.15, ..Default::default() };
    let size = 24;
    for ch in [0usize, 1, 6, 17, 18, 9] {
        let g = render_glyph(ch, &style, size);
        for r in 0..size {
            let row: String = (0..size).map(|c| if g[r * size + c] < 0.5 { '#' } else { '.' }).collect();
            println!("{row}");
        }
        println!();
    }
}
