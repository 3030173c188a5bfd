/* tslint:disable */
/* eslint-disable */

/**
 * Rows: `x, Ai(x), Ai'(x), Ai_1(x), Ai_2(x), Ai_4(x)` on `points` evenly
 * spaced abscissae.
 */
export function airy_curves(lo: number, hi: number, points: number): Float64Array;

/**
 * Bulk histogram on `[-1.2, 1.2]` with the semicircle.
 * Rows: `bin_lo, bin_hi, height, std_err, semicircle`.
 */
export function bulk_histogram(n: number, beta: number, fixed_trace: boolean, reps: number, seed: number, bins: number): Float64Array;

/**
 * Soft-edge histogram on `[-5, 2]`. The last column is `Ai_beta` for
 * beta in {1, 2, 4} and NaN otherwise.
 */
export function edge_histogram(n: number, beta: number, fixed_trace: boolean, reps: number, seed: number, bins: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly airy_curves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly bulk_histogram: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly edge_histogram: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
