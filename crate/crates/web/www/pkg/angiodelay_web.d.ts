/* tslint:disable */
/* eslint-disable */

/**
 * Stationary state and its radial profiles.
 */
export class Stationary {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    nodes(): Float64Array;
    /**
     * First-order delay correction to the nutrient.
     */
    nutrient_correction(): Float64Array;
    nutrient(): Float64Array;
    pressure(): Float64Array;
    r0(): number;
    r1(): number;
}

export function critical_supply_radius(): number;

export function simulate(alpha: number, sigma_bar: number, sigma_tilde: number, mu: number, tau: number, start_factor: number, t_end: number, dt: number): Float64Array;

export function stationary(alpha: number, sigma_bar: number, sigma_tilde: number, mu: number): Stationary;

export function threshold_curve(r0: number, sigma_bar: number, alpha_min: number, alpha_max: number, count: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_stationary_free: (a: number, b: number) => void;
    readonly critical_supply_radius: () => number;
    readonly simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly stationary: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly stationary_nodes: (a: number) => [number, number];
    readonly stationary_nutrient: (a: number) => [number, number];
    readonly stationary_nutrient_correction: (a: number) => [number, number];
    readonly stationary_pressure: (a: number) => [number, number];
    readonly stationary_r0: (a: number) => number;
    readonly stationary_r1: (a: number) => number;
    readonly threshold_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
