/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_flowdemo_free: (a: number, b: number) => void;
export const classify: (a: number, b: number, c: number) => [number, number];
export const flowdemo_advance: (a: number, b: number) => [number, number, number];
export const flowdemo_converged: (a: number) => number;
export const flowdemo_eta: (a: number) => number;
export const flowdemo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const flowdemo_profile: (a: number) => [number, number];
export const flowdemo_speed: (a: number) => number;
export const flowdemo_steps: (a: number) => number;
export const flowdemo_time: (a: number) => number;
export const flowdemo_volume_drift: (a: number) => [number, number, number];
export const polar_profiles: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
