/* tslint:disable */
/* eslint-disable */

/**
 * A network fitted to a one-dimensional regime-switching oracle on
 * `[0, train_hi]`, probed over the whole unit interval.
 */
export class SliceDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `n` grid rows over `[0, 1]`, flattened as `x, oracle, prediction, SA, SV, JA, JV`.
     */
    curve(n: number, delta: number, n_perturb: number): Float64Array;
    constructor(train_hi: number, n_train: number, epochs: number, seed: bigint);
    training_inputs(): Float64Array;
}

/**
 * `n` Latin hypercube points on the unit square, flattened as `x0, y0, x1, ...`.
 */
export function lhs_square(n: number, seed: bigint): Float64Array;

/**
 * `[S_pure, S_hybrid]` for per-call times in seconds and surrogate share `p`.
 */
export function speedups(t_oracle: number, t_surrogate: number, t_detector: number, p: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_slicedemo_free: (a: number, b: number) => void;
    readonly lhs_square: (a: number, b: bigint) => [number, number, number, number];
    readonly slicedemo_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly slicedemo_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly slicedemo_training_inputs: (a: number) => [number, number];
    readonly speedups: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
