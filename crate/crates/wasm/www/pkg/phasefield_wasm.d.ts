/* tslint:disable */
/* eslint-disable */

/**
 * Result of a traction run. Per-step columns are flat arrays of equal length.
 */
export class TractionRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Final damage per vertex.
     */
    readonly alpha: Float64Array;
    readonly amIterations: Float64Array;
    readonly dissipated: Float64Array;
    readonly elastic: Float64Array;
    /**
     * Solver failure message, if the run stopped early.
     */
    readonly failure: string | undefined;
    readonly load: Float64Array;
    /**
     * Vertex indices, three per triangle.
     */
    readonly triangles: Uint32Array;
    /**
     * Vertex coordinates as `x0, y0, x1, y1, ...`.
     */
    readonly vertices: Float64Array;
}

/**
 * Critical traction of a homogeneous bar for internal length `ell`
 * (unit modulus and toughness).
 */
export function criticalTraction(ell: number): number;

/**
 * Loads the bar from zero to 1.5 t_c in `increments` steps with
 * over-relaxed alternate minimization.
 */
export function runTraction(ell: number, omega: number, increments: number): TractionRun;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_tractionrun_free: (a: number, b: number) => void;
    readonly criticalTraction: (a: number) => [number, number, number];
    readonly runTraction: (a: number, b: number, c: number) => [number, number, number];
    readonly tractionrun_alpha: (a: number) => [number, number];
    readonly tractionrun_amIterations: (a: number) => [number, number];
    readonly tractionrun_dissipated: (a: number) => [number, number];
    readonly tractionrun_elastic: (a: number) => [number, number];
    readonly tractionrun_failure: (a: number) => [number, number];
    readonly tractionrun_load: (a: number) => [number, number];
    readonly tractionrun_triangles: (a: number) => [number, number];
    readonly tractionrun_vertices: (a: number) => [number, number];
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
