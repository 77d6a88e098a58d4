/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_slicedemo_free: (a: number, b: number) => void;
export const lhs_square: (a: number, b: bigint) => [number, number, number, number];
export const slicedemo_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const slicedemo_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const slicedemo_training_inputs: (a: number) => [number, number];
export const speedups: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
