/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_stationary_free: (a: number, b: number) => void;
export const critical_supply_radius: () => number;
export const simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
export const stationary: (a: number, b: number, c: number, d: number) => [number, number, number];
export const stationary_nodes: (a: number) => [number, number];
export const stationary_nutrient: (a: number) => [number, number];
export const stationary_nutrient_correction: (a: number) => [number, number];
export const stationary_pressure: (a: number) => [number, number];
export const stationary_r0: (a: number) => number;
export const stationary_r1: (a: number) => number;
export const threshold_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
