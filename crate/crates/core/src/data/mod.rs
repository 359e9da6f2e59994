//! Glyph collections and everything that reads, writes, masks or splits them.

mod collection;
mod mask;
mod pack;
mod split;
mod sprite;

pub use collection::{default_char_labels, FontCollection, DEFAULT_CHARS, DEFAULT_GLYPH_SIZE};
pub use mask::{sample_observation_mask, ObservationMask};
pub use pack::{pack_collection, pack_to_bytes, unpack_collection, unpack_from_bytes, GLYF_MAGIC, GLYF_VERSION};
pub use split::{font_distance_to_set, mine_hard_split, SplitManifest};
pub use sprite::{
    decode_gray_png, encode_gray_png, load_sprite_sheet, load_sprite_sheet_dir, save_sprite_sheet,
    write_gray_png,
};
