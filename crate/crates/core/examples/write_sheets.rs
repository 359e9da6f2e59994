//! Writes procedural fonts as sprite sheets, one PNG per font.
//!
//! usage: write_sheets <dir> [fonts] [seed] [glyph_size] [prefix]
use glyphfactor::data::save_sprite_sheet;
use glyphfactor::synth::synthetic_collection;
use std::path::PathBuf;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dir = PathBuf::from(args.get(1).expect("usage: write_sheets <dir> [fonts] [seed] [glyph_size] [prefix]"));
    let fonts: usize = args.get(2).map_or(8, |s| s.parse().unwrap());
    let seed: u64 = args.get(3).map_or(0, |s| s.parse().unwrap());
    let size: usize = args.get(4).map_or(64, |s| s.parse().unwrap());
    let prefix = args.get(5).cloned().unwrap_or_else(|| "synth".into());
    std::fs::create_dir_all(&dir).unwrap();
    let c = synthetic_collection(fonts, 26, size, seed).unwrap();
    for j in 0..c.num_fonts() {
        let glyphs: Vec<Vec<f32>> = (0..26).map(|i| c.glyph(j, i).to_vec()).collect();
        save_sprite_sheet(&dir.join(format!("{prefix}-{j:03}.png")), &glyphs, size, size).unwrap();
    }
}
