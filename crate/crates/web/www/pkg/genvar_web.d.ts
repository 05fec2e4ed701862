/* tslint:disable */
/* eslint-disable */

export class Series {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    column(i: number): Float64Array;
    is_empty(): boolean;
    len(): number;
    n_columns(): number;
    name(i: number): string;
    slope(): number | undefined;
    x(): Float64Array;
}

export function mollifier_curve(kind: string, q_max: number, eps: number, samples: number): Series;

export function oscillator_extremal(kind: string, eps: number, samples: number): Series;

export function propagator_convergence(bi_re: number, bi_im: number, bf_re: number, bf_im: number, omega: number, t: number, slices: Uint32Array): Series;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_series_free: (a: number, b: number) => void;
    readonly mollifier_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly oscillator_extremal: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly propagator_convergence: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly series_column: (a: number, b: number) => [number, number];
    readonly series_is_empty: (a: number) => number;
    readonly series_len: (a: number) => number;
    readonly series_n_columns: (a: number) => number;
    readonly series_name: (a: number, b: number) => [number, number];
    readonly series_slope: (a: number) => [number, number];
    readonly series_x: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
