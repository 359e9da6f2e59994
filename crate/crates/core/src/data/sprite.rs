//! Sprite-sheet PNGs: one 8-bit grayscale row of glyphs per font, left to right
//! in character order. The file stem is the font id.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use super::collection::{default_char_labels, FontCollection};
use crate::error::{Error, Result};

/// Decodes an 8-bit grayscale PNG into `(width, height, pixels)`.
pub fn decode_gray_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode(format!("invalid PNG: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Decode(format!(
            "expected 8-bit grayscale, found {:?} at {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode("PNG dimensions overflow".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode(format!("invalid PNG: {e}")))?;
    buf.truncate(frame.buffer_size());
    Ok((frame.width as usize, frame.height as usize, buf))
}

pub fn encode_gray_png(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    assert_eq!(pixels.len(), width * height);
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Decode(format!("PNG encode: {e}")))?;
        writer
            .write_image_data(pixels)
            .map_err(|e| Error::Decode(format!("PNG encode: {e}")))?;
    }
    Ok(out)
}

pub fn write_gray_png(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let bytes = encode_gray_png(width, height, pixels).map_err(|e| e.at(path))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Lays glyphs out left to right and writes them as one sheet. Values are
/// clamped to `[0, 1]` before quantization.
pub fn save_sprite_sheet(path: &Path, glyphs: &[Vec<f32>], glyph_height: usize, glyph_width: usize) -> Result<()> {
    let n = glyphs.len();
    let sheet_w = n * glyph_width;
    let mut pixels = vec![0u8; sheet_w * glyph_height];
    for (g, glyph) in glyphs.iter().enumerate() {
        assert_eq!(glyph.len(), glyph_height * glyph_width);
        for y in 0..glyph_height {
            for x in 0..glyph_width {
                pixels[y * sheet_w + g * glyph_width + x] = quantize(glyph[y * glyph_width + x]);
            }
        }
    }
    write_gray_png(path, sheet_w, glyph_height, &pixels)
}

/// Reads one font's sheet, returning glyph-major intensities in `[0, 1]`.
pub fn load_sprite_sheet(path: &Path, chars_per_font: usize, glyph_size: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h, pixels) = decode_gray_png(&bytes).map_err(|e| e.at(path))?;
    if h != glyph_size || w != chars_per_font * glyph_size {
        return Err(Error::format(
            path,
            format!(
                "sheet is {w}x{h}, expected {}x{glyph_size} ({chars_per_font} glyphs of {glyph_size}px)",
                chars_per_font * glyph_size
            ),
        ));
    }
    let mut out = Vec::with_capacity(pixels.len());
    for c in 0..chars_per_font {
        for y in 0..glyph_size {
            let row = &pixels[y * w + c * glyph_size..y * w + (c + 1) * glyph_size];
            out.extend(row.iter().map(|&p| p as f32 / 255.0));
        }
    }
    Ok(out)
}

/// Loads every `*.png` in `dir` as one font, ordered by file name.
pub fn load_sprite_sheet_dir(dir: &Path, chars_per_font: usize, glyph_size: usize) -> Result<FontCollection> {
    if chars_per_font == 0 || glyph_size == 0 {
        return Err(Error::param("chars_per_font and glyph_size must be positive"));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("png")))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(Error::EmptyInput(format!("no PNG sprite sheets in {}", dir.display())));
    }
    let mut glyphs = Vec::with_capacity(files.len() * chars_per_font * glyph_size * glyph_size);
    let mut ids = Vec::with_capacity(files.len());
    for file in &files {
        glyphs.extend(load_sprite_sheet(file, chars_per_font, glyph_size)?);
        let id = file
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::format(file, "file name is not valid UTF-8"))?;
        ids.push(id.to_string());
    }
    FontCollection::new(
        glyphs,
        chars_per_font,
        glyph_size,
        glyph_size,
        ids,
        default_char_labels(chars_per_font),
    )
}
