/* tslint:disable */
/* eslint-disable */

/**
 * Editable binary annotation panel. Cells are 1 (yes), 0 (no) or -1 (missing).
 */
export class Panel {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Krippendorff's alpha, or NaN when no item has two labels.
     */
    alpha(): number;
    /**
     * Row-major cell values.
     */
    cells(): Int8Array;
    /**
     * Random panel where each item leans towards one label by `sharpness`.
     */
    constructor(items: number, annotators: number, sharpness: number, missing: number, seed: number);
    /**
     * Per-item share of "yes" among present labels; NaN for empty items.
     */
    softLabels(): Float64Array;
    /**
     * "agreement", "disagreement", or "undefined" at `threshold` (default when not finite).
     */
    subset(threshold: number): string;
    /**
     * Cycles a cell yes -> no -> missing -> yes and returns the new value.
     */
    toggle(item: number, annotator: number): number;
    readonly annotators: number;
    readonly items: number;
}

/**
 * Squared error against `p_human` at `steps + 1` evenly spaced `p_model` values in `[0, 1]`.
 */
export function brierCurve(p_human: number, steps: number): Float64Array;

/**
 * Sampled frame indices for a video of `total_frames` at `fps`, capped at `max_frames`.
 */
export function framePlan(total_frames: number, fps: number, max_frames: number): Float64Array;

export function jsdCurve(p_human: number, steps: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_panel_free: (a: number, b: number) => void;
    readonly brierCurve: (a: number, b: number) => [number, number];
    readonly framePlan: (a: number, b: number, c: number) => [number, number, number, number];
    readonly jsdCurve: (a: number, b: number) => [number, number];
    readonly panel_alpha: (a: number) => number;
    readonly panel_annotators: (a: number) => number;
    readonly panel_cells: (a: number) => [number, number];
    readonly panel_items: (a: number) => number;
    readonly panel_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly panel_softLabels: (a: number) => [number, number];
    readonly panel_subset: (a: number, b: number) => [number, number];
    readonly panel_toggle: (a: number, b: number, c: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
