/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_panel_free: (a: number, b: number) => void;
export const brierCurve: (a: number, b: number) => [number, number];
export const framePlan: (a: number, b: number, c: number) => [number, number, number, number];
export const jsdCurve: (a: number, b: number) => [number, number];
export const panel_alpha: (a: number) => number;
export const panel_annotators: (a: number) => number;
export const panel_cells: (a: number) => [number, number];
export const panel_items: (a: number) => number;
export const panel_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const panel_softLabels: (a: number) => [number, number];
export const panel_subset: (a: number, b: number) => [number, number];
export const panel_toggle: (a: number, b: number, c: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
