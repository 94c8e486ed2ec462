/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_tractionrun_free: (a: number, b: number) => void;
export const criticalTraction: (a: number) => [number, number, number];
export const runTraction: (a: number, b: number, c: number) => [number, number, number];
export const tractionrun_alpha: (a: number) => [number, number];
export const tractionrun_amIterations: (a: number) => [number, number];
export const tractionrun_dissipated: (a: number) => [number, number];
export const tractionrun_elastic: (a: number) => [number, number];
export const tractionrun_failure: (a: number) => [number, number];
export const tractionrun_load: (a: number) => [number, number];
export const tractionrun_triangles: (a: number) => [number, number];
export const tractionrun_vertices: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
