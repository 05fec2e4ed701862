/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_series_free: (a: number, b: number) => void;
export const mollifier_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const oscillator_extremal: (a: number, b: number, c: number, d: number) => [number, number, number];
export const propagator_convergence: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const series_column: (a: number, b: number) => [number, number];
export const series_is_empty: (a: number) => number;
export const series_len: (a: number) => number;
export const series_n_columns: (a: number) => number;
export const series_name: (a: number, b: number) => [number, number];
export const series_slope: (a: number) => [number, number];
export const series_x: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
