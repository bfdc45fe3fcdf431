//! Browser bindings: evolve an axisymmetric body, draw a body and its polar
//! dual, and classify power pairs `(p, q)`.
//!
//! Profiles are flat `[x0, z0, x1, z1, ...]` arrays of boundary points in the
//! meridian half-plane, ordered from the north pole to the south pole.

use std::sync::Arc;

use wasm_bindgen::prelude::*;

use orlicz_flow::expr::parse;
use orlicz_flow::flow::{Flow, FlowConfig, FlowMode, FlowState, GridSpec, InitialBody, MonitorSettings, Stepping};
use orlicz_flow::geometry::{geometry_of, polar_dual_refined, BodyGeometry, SupportFunction};
use orlicz_flow::grid::SphereGrid;
use orlicz_flow::integrand::{classify_power_case, direction_variables, qstar, IntegrandSpec};
use orlicz_flow::monitors::{v_value, MonitorConfig};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn profile(geometry: &BodyGeometry, n: usize) -> Vec<f64> {
    (0..geometry.rho.len()).flat_map(|k| [geometry.point(k)[0], geometry.point(k)[n]]).collect()
}

/// Normalized flow of `u₀ = 1 + amplitude·(x₃³ + x₃²)` with `φ = (f s^{1-p})^{β/n}`,
/// `f = 1 + anisotropy·x₃²`, `G = r^{(q-n-1)β/n}` on `S²` (`n = β = 2`).
#[wasm_bindgen]
pub struct FlowDemo {
    flow: Flow,
    state: FlowState,
    monitor: MonitorConfig,
    v0: f64,
}

#[wasm_bindgen]
impl FlowDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(p: f64, q: f64, anisotropy: f64, amplitude: f64, nodes: usize) -> Result<FlowDemo, JsValue> {
        let vars = direction_variables(2);
        let f = parse(&format!("1 + ({anisotropy})*x3^2"), &vars).map_err(js_err)?;
        let spec = IntegrandSpec::power(2, 2.0, f, p, q, false).map_err(js_err)?;
        let shape = parse("x3^3 + x3^2", &vars).map_err(js_err)?;
        let config = FlowConfig {
            spec,
            mode: FlowMode::Normalized,
            grid: GridSpec::Axisymmetric { n: 2, count: nodes },
            initial: InitialBody::Perturbed { radius: 1.0, amplitude, shape, even: false },
            stepping: Stepping { max_steps: usize::MAX, ..Stepping::default() },
            monitor: MonitorSettings::default(),
            cadence: 1,
            barrier_radii: None,
        };
        let (flow, u0) = Flow::from_config(&config).map_err(js_err)?;
        let state = flow.initial_state(&u0).map_err(js_err)?;
        let monitor = *flow.monitor_config();
        let v0 = Self::volume(&flow, &state, &monitor)?;
        Ok(FlowDemo { flow, state, monitor, v0 })
    }

    fn volume(flow: &Flow, state: &FlowState, monitor: &MonitorConfig) -> Result<f64, JsValue> {
        let nodes = flow.spec().on_grid(flow.grid()).map_err(js_err)?;
        v_value(&state.u, &state.geometry, &nodes, monitor).map_err(js_err)
    }

    /// Take up to `steps` accepted steps; stops early once converged.
    pub fn advance(&mut self, steps: usize) -> Result<bool, JsValue> {
        for _ in 0..steps {
            if self.converged() {
                return Ok(true);
            }
            self.flow.step(&mut self.state).map_err(js_err)?;
        }
        Ok(self.converged())
    }

    pub fn converged(&self) -> bool {
        self.state.relative_speed() < 1e-8
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn eta(&self) -> f64 {
        self.state.eta
    }

    pub fn steps(&self) -> usize {
        self.state.accepted
    }

    pub fn speed(&self) -> f64 {
        self.state.relative_speed()
    }

    /// `V(t)/V(0) - 1`, zero up to discretization error.
    pub fn volume_drift(&self) -> Result<f64, JsValue> {
        Ok(Self::volume(&self.flow, &self.state, &self.monitor)? / self.v0 - 1.0)
    }

    pub fn profile(&self) -> Vec<f64> {
        profile(&self.state.geometry, 2)
    }
}

/// Meridian profiles of the ellipsoid with semi-axes `(a, a, c)` followed by
/// its polar dual, each `2·nodes` numbers long.
#[wasm_bindgen]
pub fn polar_profiles(a: f64, c: f64, nodes: usize) -> Result<Vec<f64>, JsValue> {
    let grid = Arc::new(SphereGrid::axisymmetric(2, nodes).map_err(js_err)?);
    let u = SupportFunction::ellipsoid(grid, &[a, a, c]).map_err(js_err)?;
    let dual = polar_dual_refined(&u).map_err(js_err)?;
    let mut out = profile(&geometry_of(&u).map_err(js_err)?, 2);
    out.extend(profile(&geometry_of(&dual).map_err(js_err)?, 2));
    Ok(out)
}

/// Human-readable classification of the power pair `(p, q)` on `S^n`.
#[wasm_bindgen]
pub fn classify(p: f64, q: f64, n: usize) -> String {
    let cases = classify_power_case(p, q, n);
    let star = match qstar(q, n) {
        Ok(v) if v.is_infinite() => "q* = inf".to_string(),
        Ok(v) => format!("q* = {v}"),
        Err(_) => "q* undefined (q <= 0)".to_string(),
    };
    if cases.is_empty() {
        format!("no existence case applies; {star}")
    } else {
        format!("cases {cases}; {star}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_demo_preserves_volume() {
        let mut demo = FlowDemo::new(4.0, 2.0, 0.2, 0.1, 24).unwrap();
        demo.advance(50).unwrap();
        assert!(demo.steps() == 50 && demo.time() > 0.0);
        assert!(demo.volume_drift().unwrap().abs() < 1e-4);
        assert_eq!(demo.profile().len(), 48);
    }

    #[test]
    fn polar_profiles_of_sphere() {
        let out = polar_profiles(2.0, 2.0, 16).unwrap();
        assert_eq!(out.len(), 64);
        let radius = |pts: &[f64]| pts.chunks(2).map(|p| p[0].hypot(p[1])).collect::<Vec<_>>();
        assert!(radius(&out[..32]).iter().all(|r| (r - 2.0).abs() < 1e-12));
        assert!(radius(&out[32..]).iter().all(|r| (r - 0.5).abs() < 1e-12));
    }

    #[test]
    fn classify_text() {
        assert_eq!(classify(4.0, 1.0, 2), "cases {barrier, even}; q* = inf");
        assert!(classify(-5.0, 2.0, 2).starts_with("no existence case"));
    }
}
