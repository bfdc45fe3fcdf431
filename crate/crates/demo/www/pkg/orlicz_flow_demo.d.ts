/* tslint:disable */
/* eslint-disable */

/**
 * Normalized flow of `u₀ = 1 + amplitude·(x₃³ + x₃²)` with `φ = (f s^{1-p})^{β/n}`,
 * `f = 1 + anisotropy·x₃²`, `G = r^{(q-n-1)β/n}` on `S²` (`n = β = 2`).
 */
export class FlowDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Take up to `steps` accepted steps; stops early once converged.
     */
    advance(steps: number): boolean;
    converged(): boolean;
    eta(): number;
    constructor(p: number, q: number, anisotropy: number, amplitude: number, nodes: number);
    profile(): Float64Array;
    speed(): number;
    steps(): number;
    time(): number;
    /**
     * `V(t)/V(0) - 1`, zero up to discretization error.
     */
    volume_drift(): number;
}

/**
 * Human-readable classification of the power pair `(p, q)` on `S^n`.
 */
export function classify(p: number, q: number, n: number): string;

/**
 * Meridian profiles of the ellipsoid with semi-axes `(a, a, c)` followed by
 * its polar dual, each `2·nodes` numbers long.
 */
export function polar_profiles(a: number, c: number, nodes: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_flowdemo_free: (a: number, b: number) => void;
    readonly classify: (a: number, b: number, c: number) => [number, number];
    readonly flowdemo_advance: (a: number, b: number) => [number, number, number];
    readonly flowdemo_converged: (a: number) => number;
    readonly flowdemo_eta: (a: number) => number;
    readonly flowdemo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly flowdemo_profile: (a: number) => [number, number];
    readonly flowdemo_speed: (a: number) => number;
    readonly flowdemo_steps: (a: number) => number;
    readonly flowdemo_time: (a: number) => number;
    readonly flowdemo_volume_drift: (a: number) => [number, number, number];
    readonly polar_profiles: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
