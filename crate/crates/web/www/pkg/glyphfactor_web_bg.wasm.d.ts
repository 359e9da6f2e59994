/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_cauchy: (a: number) => number;
export const demo_chars: (a: number) => number;
export const demo_dct_truncate: (a: number, b: number, c: number) => [number, number];
export const demo_glyph_size: (a: number) => number;
export const demo_l2: (a: number) => number;
export const demo_library_font: (a: number, b: number) => [number, number];
export const demo_library_size: (a: number) => number;
export const demo_match_distance: (a: number) => number;
export const demo_match_id: (a: number) => [number, number];
export const demo_new: (a: number, b: number) => number;
export const demo_reconstruct: (a: number, b: number, c: number) => [number, number];
export const demo_set_style: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const demo_unobserved_error: (a: number) => number;
export const demo_use_library_font: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
