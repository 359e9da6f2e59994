/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Working-font glyph `ch` rebuilt from its `keep` largest-magnitude DCT
     * coefficients.
     */
    dct_truncate(ch: number, keep: number): Float32Array;
    /**
     * Library font `index` (clamped), all glyphs back to back.
     */
    library_font(index: number): Float32Array;
    /**
     * A library of `library_fonts` random styles drawn from `seed`.
     */
    constructor(library_fonts: number, seed: number);
    /**
     * Reconstructs the working font from the characters named in
     * `observed` (letters A–Z, anything else ignored). Observed glyphs are
     * passed through; the rest come from the nearest library font. With no
     * valid letter the working font is returned unchanged.
     */
    reconstruct(observed: string): Float32Array;
    /**
     * Renders the working font; returns all glyphs back to back
     * (ink 0, paper 1).
     */
    set_style(thickness: number, slant: number, width: number, height: number, serif: number): Float32Array;
    /**
     * Makes library font `index` (clamped) the working font.
     */
    use_library_font(index: number): Float32Array;
    /**
     * Cauchy log-likelihood (γ = 0.001) of the glyph under the last
     * truncation.
     */
    readonly cauchy: number;
    readonly chars: number;
    readonly glyph_size: number;
    readonly l2: number;
    readonly library_size: number;
    readonly match_distance: number;
    readonly match_id: string;
    /**
     * Mean squared-L2 error over the unobserved glyphs of the last
     * reconstruction.
     */
    readonly unobserved_error: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_cauchy: (a: number) => number;
    readonly demo_chars: (a: number) => number;
    readonly demo_dct_truncate: (a: number, b: number, c: number) => [number, number];
    readonly demo_glyph_size: (a: number) => number;
    readonly demo_l2: (a: number) => number;
    readonly demo_library_font: (a: number, b: number) => [number, number];
    readonly demo_library_size: (a: number) => number;
    readonly demo_match_distance: (a: number) => number;
    readonly demo_match_id: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number) => number;
    readonly demo_reconstruct: (a: number, b: number, c: number) => [number, number];
    readonly demo_set_style: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly demo_unobserved_error: (a: number) => number;
    readonly demo_use_library_font: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
