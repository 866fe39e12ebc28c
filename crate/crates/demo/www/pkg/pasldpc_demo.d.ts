/* tslint:disable */
/* eslint-disable */

/**
 * JSON `{points, probs, entropy}` of the operating PMF.
 */
export function mbPmf(se: number, num: number, den: number, m: number): string;

/**
 * JSON rows of required SNR and gaps, shaped versus uniform.
 */
export function rateCurve(num: number, den: number, m: number, start: number, stop: number, step: number): string;

/**
 * Text form of the built-in robust base matrix, for the editor.
 */
export function robustMatrix(): string;

/**
 * JSON `[{R, gap_db}]` of PEXIT threshold gaps for a base matrix in text form.
 */
export function thresholdCurve(matrix: string, num: number, den: number, m: number, start: number, stop: number, step: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly mbPmf: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly rateCurve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly robustMatrix: () => [number, number];
    readonly thresholdCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
