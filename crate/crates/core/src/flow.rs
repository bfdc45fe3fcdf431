//! Time integration of the normalized anisotropic flow
//! `∂ₜu = (η φ(x,u) G(X) σₙ^{β/n} - 1) u` and its `η ≡ 1` variant.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{geometry_of, BodyGeometry, RadialFunction, SupportFunction};
use crate::grid::SphereGrid;
use crate::integrand::{IntegrandSpec, NodeIntegrand};
use crate::monitors::{
    barrier_condition, stationary_residual, BarrierCheck, JOrientation, MonitorConfig, MonitorRow, MonitorSeries,
    Residual, VOrientation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowMode {
    /// `η(t)` from the global normalization, conserving `V`.
    #[default]
    Normalized,
    /// `η ≡ 1`.
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Axisymmetric { n: usize, count: usize },
    Full2d { n_theta: usize, n_phi: usize },
}

impl GridSpec {
    pub fn build(&self) -> Result<SphereGrid> {
        match *self {
            Self::Axisymmetric { n, count } => SphereGrid::axisymmetric(n, count),
            Self::Full2d { n_theta, n_phi } => SphereGrid::full2d(n_theta, n_phi),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::Axisymmetric { n, .. } => n,
            Self::Full2d { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialBody {
    Sphere { radius: f64 },
    Ellipsoid { axes: Vec<f64> },
    /// `u = radius (1 + amplitude · shape(x))`, with `shape` over
    /// `x1..x{n+1}`; `even` replaces `shape` by its even part.
    Perturbed { radius: f64, amplitude: f64, shape: Expr, even: bool },
    /// Nodal samples in grid order.
    Samples(Vec<f64>),
}

impl InitialBody {
    pub fn build(&self, grid: Arc<SphereGrid>) -> Result<SupportFunction> {
        match self {
            Self::Sphere { radius } => SupportFunction::sphere(grid, *radius),
            Self::Ellipsoid { axes } => SupportFunction::ellipsoid(grid, axes),
            Self::Perturbed { radius, amplitude, shape, even } => {
                if !(*radius > 0.0) {
                    return Err(Error::NonPositiveValue("radius", *radius));
                }
                let mut values = Vec::with_capacity(grid.len());
                for k in 0..grid.len() {
                    let x = grid.direction(k);
                    let mut s = shape.eval(x)?;
                    if *even {
                        let minus: Vec<f64> = x.iter().map(|c| -c).collect();
                        s = 0.5 * (s + shape.eval(&minus)?);
                    }
                    values.push(radius * (1.0 + amplitude * s));
                }
                SupportFunction::new(grid, values)
            }
            Self::Samples(values) => SupportFunction::new(grid, values.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepping {
    pub dt_init: f64,
    pub dt_max: f64,
    pub cfl_factor: f64,
    /// Stop once `max_k |∂ₜu/u| < stop_tol`.
    pub stop_tol: f64,
    pub max_steps: usize,
    /// Stop (not converged) once `t` reaches this time; the last step is
    /// shortened to land on it.
    pub t_end: Option<f64>,
    /// Convexity guard `ε_b`; `None` means `10⁻⁸ · min u₀`.
    pub convexity_floor: Option<f64>,
    pub max_halvings: u32,
    pub growth: f64,
    /// Replace `u` by its even part after every accepted step.
    pub project_even: bool,
}

impl Default for Stepping {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_max: 0.1,
            cfl_factor: 0.1,
            stop_tol: 1e-8,
            max_steps: 100_000,
            t_end: None,
            convexity_floor: None,
            max_halvings: 30,
            growth: 1.2,
            project_even: false,
        }
    }
}

impl Stepping {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("dt_max", self.dt_max),
            ("cfl_factor", self.cfl_factor),
            ("stop_tol", self.stop_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("stepping {name} must be positive and finite (got {v})")));
            }
        }
        if let Some(e) = self.convexity_floor {
            if !(e > 0.0) {
                return Err(Error::Config(format!("stepping convexity_floor must be positive (got {e})")));
            }
        }
        if !(self.growth >= 1.0) {
            return Err(Error::Config(format!("stepping growth must be at least 1 (got {})", self.growth)));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("stepping t_end must be positive and finite (got {t})")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("stepping max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Monitor parameters; unset values default from the initial body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonitorSettings {
    pub c0: Option<f64>,
    pub r_outer: Option<f64>,
    pub s_max: Option<f64>,
    pub j_orientation: JOrientation,
    pub v_orientation: VOrientation,
}

impl MonitorSettings {
    pub fn resolve(&self, u0: &SupportFunction) -> MonitorConfig {
        let d = MonitorConfig::for_body(u0);
        MonitorConfig {
            c0: self.c0.unwrap_or(d.c0),
            r_outer: self.r_outer.unwrap_or(d.r_outer),
            s_max: self.s_max.unwrap_or(d.s_max),
            j_orientation: self.j_orientation,
            v_orientation: self.v_orientation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub spec: IntegrandSpec,
    pub mode: FlowMode,
    pub grid: GridSpec,
    pub initial: InitialBody,
    pub stepping: Stepping,
    pub monitor: MonitorSettings,
    /// Record monitors every `cadence` accepted steps.
    pub cadence: usize,
    /// Radii `(r₁, r₂)` whose spheres are checked as barriers in barrier mode.
    pub barrier_radii: Option<(f64, f64)>,
}

/// An accepted flow state with everything derived from `u`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: SupportFunction,
    pub t: f64,
    /// Step size for the next attempt.
    pub dt: f64,
    pub eta: f64,
    pub geometry: BodyGeometry,
    /// `∂ₜu` at every node.
    pub velocity: Vec<f64>,
    pub accepted: usize,
}

impl FlowState {
    /// `max_k |∂ₜu/u|`.
    pub fn relative_speed(&self) -> f64 {
        self.velocity.iter().zip(self.u.values()).map(|(v, u)| (v / u).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    NotConverged,
    Breakdown(String),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::NotConverged => "not-converged",
            Self::Breakdown(_) => "breakdown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub state: FlowState,
    pub series: MonitorSeries,
    pub termination: Termination,
    pub rejected_steps: usize,
    pub residual: Residual,
    /// Smallest and largest `u` over all accepted states.
    pub u_range: (f64, f64),
    pub barrier: Option<BarrierCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub rejections: u32,
}

pub struct Flow {
    spec: IntegrandSpec,
    mode: FlowMode,
    stepping: Stepping,
    monitor: MonitorConfig,
    cadence: usize,
    barrier_radii: Option<(f64, f64)>,
    grid: Arc<SphereGrid>,
    floor: f64,
    h_min: f64,
}

struct Evaluation {
    geometry: BodyGeometry,
    eta: f64,
    velocity: Vec<f64>,
}

impl Flow {
    /// Build the grid and initial body described by `config`.
    pub fn from_config(config: &FlowConfig) -> Result<(Self, SupportFunction)> {
        let grid = Arc::new(config.grid.build()?);
        let u0 = config.initial.build(grid.clone())?;
        let flow = Self::new(config, &u0)?;
        Ok((flow, u0))
    }

    /// Flow for an explicit initial body on its own grid.
    pub fn new(config: &FlowConfig, u0: &SupportFunction) -> Result<Self> {
        config.stepping.validate()?;
        if config.cadence == 0 {
            return Err(Error::Config("monitor cadence must be at least 1".into()));
        }
        let grid = u0.grid().clone();
        if grid.dim() != config.spec.n() {
            return Err(Error::Config(format!(
                "problem dimension n = {} does not match grid dimension {}",
                config.spec.n(),
                grid.dim()
            )));
        }
        let monitor = config.monitor.resolve(u0);
        monitor.validate(&config.spec)?;
        let floor = config.stepping.convexity_floor.unwrap_or(1e-8 * u0.min());
        let h_min = grid.min_spacing();
        Ok(Self {
            spec: config.spec.clone(),
            mode: config.mode,
            stepping: config.stepping,
            monitor,
            cadence: config.cadence,
            barrier_radii: config.barrier_radii,
            grid,
            floor,
            h_min,
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn spec(&self) -> &IntegrandSpec {
        &self.spec
    }

    pub fn mode(&self) -> FlowMode {
        self.mode
    }

    pub fn monitor_config(&self) -> &MonitorConfig {
        &self.monitor
    }

    pub fn convexity_floor(&self) -> f64 {
        self.floor
    }

    fn nodes(&self) -> Result<NodeIntegrand<'_>> {
        self.spec.on_grid(&self.grid)
    }

    /// Numerator and denominator of `η` in normal coordinates:
    /// `∫ G(X)^{n/β} u σₙ dx` and `∫ u φ G^{n/β+1} σₙ^{β/n+1} dx`.
    pub fn eta_parts(&self, u: &SupportFunction, geometry: &BodyGeometry) -> Result<(f64, f64)> {
        let nodes = self.nodes()?;
        self.eta_parts_with(&nodes, u, geometry)
    }

    fn eta_parts_with(
        &self,
        nodes: &NodeIntegrand<'_>,
        u: &SupportFunction,
        geometry: &BodyGeometry,
    ) -> Result<(f64, f64)> {
        let ratio = self.spec.ratio();
        let len = u.values().len();
        let mut num = Vec::with_capacity(len);
        let mut den = Vec::with_capacity(len);
        for k in 0..len {
            let uk = u.values()[k];
            let sigma = geometry.sigma[k];
            let x = geometry.point(k);
            let gp = nodes.g_power(k, x)?;
            let g = nodes.g(k, x)?;
            let phi = nodes.phi(k, uk)?;
            num.push(gp * uk * sigma);
            den.push(uk * phi * gp * g * sigma.powf(ratio + 1.0));
        }
        Ok((self.grid.integrate(&num)?, self.grid.integrate(&den)?))
    }

    /// `η` for the given body (`1` in barrier mode).
    pub fn eta(&self, u: &SupportFunction, geometry: &BodyGeometry) -> Result<f64> {
        if self.mode == FlowMode::Barrier {
            return Ok(1.0);
        }
        let (num, den) = self.eta_parts(u, geometry)?;
        if !(den > 0.0) {
            return Err(Error::Integrand(format!(
                "eta denominator {den} is not positive (lost convexity or integrand failure)"
            )));
        }
        Ok(num / den)
    }

    /// Numerator of `η` in radial coordinates,
    /// `∫ G(ρ(ξ)ξ)^{n/β} ρ(ξ)ⁿ⁺¹ dξ`, sampling `ρ` on grid directions with the
    /// refined radial function.
    pub fn eta_numerator_radial(&self, u: &SupportFunction) -> Result<f64> {
        let radial = RadialFunction::new(u);
        let d = self.spec.n() as i32 + 1;
        let mut field = Vec::with_capacity(self.grid.len());
        for k in 0..self.grid.len() {
            let xi = self.grid.direction(k);
            let rho = radial.eval(xi)?;
            let y: Vec<f64> = xi.iter().map(|c| rho * c).collect();
            let gp = self
                .spec
                .eval_g_power(&y)
                .map_err(|e| Error::IntegrandAt { node: k, source: Box::new(e) })?;
            field.push(gp * rho.powi(d));
        }
        self.grid.integrate(&field)
    }

    /// `(η φ G σₙ^{β/n} - 1) u` at every node.
    pub fn rhs(&self, u: &SupportFunction, geometry: &BodyGeometry, eta: f64) -> Result<Vec<f64>> {
        let nodes = self.nodes()?;
        self.rhs_with(&nodes, u, geometry, eta)
    }

    fn rhs_with(
        &self,
        nodes: &NodeIntegrand<'_>,
        u: &SupportFunction,
        geometry: &BodyGeometry,
        eta: f64,
    ) -> Result<Vec<f64>> {
        let ratio = self.spec.ratio();
        (0..u.values().len())
            .map(|k| {
                let uk = u.values()[k];
                let q = nodes.phi(k, uk)? * nodes.g(k, geometry.point(k))? * geometry.sigma[k].powf(ratio);
                Ok((eta * q - 1.0) * uk)
            })
            .collect()
    }

    fn evaluate(&self, nodes: &NodeIntegrand<'_>, u: &SupportFunction) -> Result<Evaluation> {
        let geometry = geometry_of(u)?;
        let (margin, node) = geometry.convexity_margin();
        if !(margin > self.floor) {
            return Err(Error::NonConvex {
                node,
                margin,
                theta: self.grid.theta(node),
                phi: self.grid.phi(node),
            });
        }
        let eta = match self.mode {
            FlowMode::Barrier => 1.0,
            FlowMode::Normalized => {
                let (num, den) = self.eta_parts_with(nodes, u, &geometry)?;
                if !(den > 0.0) {
                    return Err(Error::Integrand(format!("eta denominator {den} is not positive")));
                }
                num / den
            }
        };
        let velocity = self.rhs_with(nodes, u, &geometry, eta)?;
        Ok(Evaluation { geometry, eta, velocity })
    }

    pub fn initial_state(&self, u0: &SupportFunction) -> Result<FlowState> {
        let g = u0.grid();
        let same = Arc::ptr_eq(g, &self.grid)
            || (g.mode() == self.grid.mode()
                && g.dim() == self.grid.dim()
                && g.n_theta() == self.grid.n_theta()
                && g.n_phi() == self.grid.n_phi());
        if !same {
            return Err(Error::Config("initial body lives on a different grid".into()));
        }
        let nodes = self.nodes()?;
        let e = self.evaluate(&nodes, u0)?;
        let mut state = FlowState {
            u: u0.clone(),
            t: 0.0,
            dt: self.stepping.dt_init,
            eta: e.eta,
            geometry: e.geometry,
            velocity: e.velocity,
            accepted: 0,
        };
        state.dt = state.dt.min(self.dt_limit(&state));
        Ok(state)
    }

    /// `min(dt_max, cfl · h_min² / stiffness)`, where the stiffness bounds the
    /// coefficient of the second-order part of the linearized operator,
    /// `η φ G u (β/n) σₙ^{β/n} / λ_min`.
    pub fn dt_limit(&self, state: &FlowState) -> f64 {
        let ratio = self.spec.ratio();
        let mut stiffness: f64 = 0.0;
        for (k, (&v, &u)) in state.velocity.iter().zip(state.u.values()).enumerate() {
            let eta_q = v / u + 1.0;
            stiffness = stiffness.max(eta_q * u * ratio / state.geometry.min_radius[k]);
        }
        let cfl = if stiffness > 0.0 {
            self.stepping.cfl_factor * self.h_min * self.h_min / stiffness
        } else {
            f64::INFINITY
        };
        self.stepping.dt_max.min(cfl)
    }

    fn advance(&self, base: &[f64], dt: f64, slopes: &[&[f64]]) -> Result<SupportFunction> {
        let weight = dt / slopes.len() as f64;
        let mut incr: Vec<f64> = (0..base.len()).map(|k| weight * slopes.iter().map(|s| s[k]).sum::<f64>()).collect();
        self.grid.filter_poles(&mut incr)?;
        let values = base.iter().zip(&incr).map(|(u, d)| u + d).collect();
        SupportFunction::new(self.grid.clone(), values)
    }

    fn attempt(&self, nodes: &NodeIntegrand<'_>, state: &FlowState, dt: f64) -> Result<(SupportFunction, Evaluation)> {
        let base = state.u.values();
        let trial = self.advance(base, dt, &[&state.velocity])?;
        let mid = self.evaluate(nodes, &trial)?;
        let mut next = self.advance(base, dt, &[&state.velocity, &mid.velocity])?;
        if self.stepping.project_even {
            let g = &self.grid;
            let v = next.values();
            let even = (0..v.len()).map(|k| 0.5 * (v[k] + v[g.antipode(k)])).collect();
            next = SupportFunction::new(g.clone(), even)?;
        }
        let e = self.evaluate(nodes, &next)?;
        Ok((next, e))
    }

    /// One Heun step. A failed trial (non-positive `u`, convexity margin at or
    /// below the floor, integrand failure) halves `dt` and retries; the state
    /// is only modified on acceptance.
    pub fn step(&self, state: &mut FlowState) -> Result<StepReport> {
        let nodes = self.nodes()?;
        let mut dt = state.dt;
        let mut last = None;
        for rejections in 0..=self.stepping.max_halvings {
            match self.attempt(&nodes, state, dt) {
                Ok((u, e)) => {
                    state.u = u;
                    state.t += dt;
                    state.eta = e.eta;
                    state.geometry = e.geometry;
                    state.velocity = e.velocity;
                    state.accepted += 1;
                    state.dt = (dt * self.stepping.growth).min(self.dt_limit(state));
                    return Ok(StepReport { dt, rejections });
                }
                Err(e) => {
                    last = Some(e);
                    dt *= 0.5;
                }
            }
        }
        Err(Error::Breakdown {
            t: state.t,
            reason: format!(
                "step rejected after {} halvings; last failure: {}",
                self.stepping.max_halvings,
                last.map(|e| e.to_string()).unwrap_or_default()
            ),
        })
    }

    fn record(&self, nodes: &NodeIntegrand<'_>, series: &mut MonitorSeries, state: &FlowState) -> Result<()> {
        let row = MonitorRow::evaluate(state.t, state.eta, &state.u, &state.geometry, nodes, &self.monitor)?;
        series.record(row)
    }

    /// Check the barrier condition on the configured spheres.
    pub fn check_barrier(&self) -> Result<Option<BarrierCheck>> {
        match (self.mode, self.barrier_radii) {
            (FlowMode::Barrier, Some((r1, r2))) => {
                let check = barrier_condition(&self.spec, &self.grid, r1, r2)?;
                if !check.holds() {
                    return Err(Error::Config(format!(
                        "barrier condition fails: min phi*G*r^beta at r1 = {r1} is {}, max at r2 = {r2} is {}",
                        check.inner_min, check.outer_max
                    )));
                }
                Ok(Some(check))
            }
            _ => Ok(None),
        }
    }

    pub fn run(&self, u0: &SupportFunction) -> Result<FlowResult> {
        self.run_with(u0, |_| {})
    }

    /// Run to convergence, `max_steps` or breakdown, calling `observe` on the
    /// initial state and after every accepted step.
    pub fn run_with<F: FnMut(&FlowState)>(&self, u0: &SupportFunction, mut observe: F) -> Result<FlowResult> {
        let barrier = self.check_barrier()?;
        let nodes = self.nodes()?;
        let mut state = self.initial_state(u0)?;
        let mut series = MonitorSeries::new(self.monitor);
        self.record(&nodes, &mut series, &state)?;
        observe(&state);
        let mut rejected = 0usize;
        let mut u_range = (state.u.min(), state.u.max());
        let termination = loop {
            if state.relative_speed() < self.stepping.stop_tol {
                break Termination::Converged;
            }
            if state.accepted >= self.stepping.max_steps {
                break Termination::NotConverged;
            }
            if let Some(t_end) = self.stepping.t_end {
                if state.t >= t_end * (1.0 - 1e-14) {
                    break Termination::NotConverged;
                }
                state.dt = state.dt.min(t_end - state.t);
            }
            match self.step(&mut state) {
                Ok(report) => {
                    rejected += report.rejections as usize;
                    u_range = (u_range.0.min(state.u.min()), u_range.1.max(state.u.max()));
                    observe(&state);
                    if state.accepted % self.cadence == 0 {
                        if let Err(e) = self.record(&nodes, &mut series, &state) {
                            break Termination::Breakdown(e.to_string());
                        }
                    }
                }
                Err(e) => break Termination::Breakdown(e.to_string()),
            }
        };
        if series.last().map(|r| r.t) != Some(state.t) {
            if let Err(e) = self.record(&nodes, &mut series, &state) {
                if !matches!(termination, Termination::Breakdown(_)) {
                    return Err(e);
                }
            }
        }
        let eta = (self.mode == FlowMode::Normalized).then_some(state.eta);
        let residual = stationary_residual(&state.u, &state.geometry, &nodes, eta)?;
        Ok(FlowResult { state, series, termination, rejected_steps: rejected, residual, u_range, barrier })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::integrand::direction_variables;

    fn config(spec: IntegrandSpec, mode: FlowMode, grid: GridSpec, initial: InitialBody) -> FlowConfig {
        FlowConfig {
            spec,
            mode,
            grid,
            initial,
            stepping: Stepping::default(),
            monitor: MonitorSettings::default(),
            cadence: 10,
            barrier_radii: None,
        }
    }

    fn unit_spec() -> IntegrandSpec {
        IntegrandSpec::isotropic_power(2, 2.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn sphere_eta_and_rhs() {
        for r in [0.7, 2.0] {
            let c = config(
                unit_spec(),
                FlowMode::Normalized,
                GridSpec::Axisymmetric { n: 2, count: 32 },
                InitialBody::Sphere { radius: r },
            );
            let (flow, u) = Flow::from_config(&c).unwrap();
            let geo = geometry_of(&u).unwrap();
            let eta = flow.eta(&u, &geo).unwrap();
            assert!((eta - r.powi(-2)).abs() < 1e-13);
            let v = flow.rhs(&u, &geo, eta).unwrap();
            assert!(v.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn eta_in_higher_dimension() {
        // β = 1, n = 3: η = r^{-β}
        let spec = IntegrandSpec::isotropic_power(3, 1.0, 1.0, 4.0).unwrap();
        let c = config(spec, FlowMode::Normalized, GridSpec::Axisymmetric { n: 3, count: 24 }, InitialBody::Sphere {
            radius: 1.5,
        });
        let (flow, u) = Flow::from_config(&c).unwrap();
        let geo = geometry_of(&u).unwrap();
        assert!((flow.eta(&u, &geo).unwrap() - 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn barrier_rhs_sign() {
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        for (r, sign) in [(0.8, 1.0), (1.3, -1.0)] {
            let c = config(spec.clone(), FlowMode::Barrier, GridSpec::Axisymmetric { n: 2, count: 16 }, InitialBody::Sphere {
                radius: r,
            });
            let (flow, u) = Flow::from_config(&c).unwrap();
            let geo = geometry_of(&u).unwrap();
            let v = flow.rhs(&u, &geo, 1.0).unwrap();
            let exact = (r.powi(-3) - 1.0) * r;
            assert!(v.iter().all(|v| v * sign > 0.0 && (v - exact).abs() < 1e-12));
        }
    }

    #[test]
    fn rejected_step_leaves_state_untouched() {
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let mut c = config(spec, FlowMode::Barrier, GridSpec::Axisymmetric { n: 2, count: 16 }, InitialBody::Sphere {
            radius: 0.5,
        });
        // a huge step drives u negative on the trial, and no halving budget
        c.stepping.dt_init = 50.0;
        c.stepping.dt_max = 50.0;
        c.stepping.cfl_factor = 1e9;
        c.stepping.max_halvings = 0;
        let (flow, u) = Flow::from_config(&c).unwrap();
        let mut state = flow.initial_state(&u).unwrap();
        state.dt = 50.0;
        let before = state.clone();
        let err = flow.step(&mut state).unwrap_err();
        assert!(matches!(err, Error::Breakdown { .. }));
        assert_eq!(state.u.values(), before.u.values());
        assert_eq!(state.t.to_bits(), before.t.to_bits());
        assert_eq!(state.dt.to_bits(), before.dt.to_bits());
        assert_eq!(state.velocity, before.velocity);
    }

    #[test]
    fn halving_recovers() {
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let c = config(spec, FlowMode::Barrier, GridSpec::Axisymmetric { n: 2, count: 16 }, InitialBody::Sphere {
            radius: 0.5,
        });
        let (flow, u) = Flow::from_config(&c).unwrap();
        let mut state = flow.initial_state(&u).unwrap();
        state.dt = 50.0;
        let report = flow.step(&mut state).unwrap();
        assert!(report.rejections > 0);
        assert!(state.u.min() > 0.5);
    }

    #[test]
    fn barrier_run_converges_to_unit_sphere() {
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let mut c = config(spec, FlowMode::Barrier, GridSpec::Axisymmetric { n: 2, count: 16 }, InitialBody::Sphere {
            radius: 1.3,
        });
        c.stepping.stop_tol = 1e-9;
        c.barrier_radii = Some((0.5, 2.0));
        let (flow, u) = Flow::from_config(&c).unwrap();
        let result = flow.run(&u).unwrap();
        assert_eq!(result.termination, Termination::Converged);
        assert!(result.state.u.values().iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert!(result.barrier.unwrap().holds());
        let n = result.state.accepted;
        assert_eq!(result.series.len(), n.div_ceil(10) + 1);
    }

    #[test]
    fn not_converged_is_reported() {
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let mut c = config(spec, FlowMode::Barrier, GridSpec::Axisymmetric { n: 2, count: 16 }, InitialBody::Sphere {
            radius: 1.3,
        });
        c.stepping.max_steps = 5;
        let (flow, u) = Flow::from_config(&c).unwrap();
        let result = flow.run(&u).unwrap();
        assert_eq!(result.termination, Termination::NotConverged);
        assert_eq!(result.state.accepted, 5);
        assert_eq!(result.series.len(), 2);
    }

    #[test]
    fn normalized_run_conserves_v_and_orders_j() {
        let f = parse("1 + 0.2*x3^2", &direction_variables(2)).unwrap();
        let spec = IntegrandSpec::power(2, 2.0, f, 4.0, 2.0, true).unwrap();
        let shape = parse("x3^2", &direction_variables(2)).unwrap();
        let mut c = config(spec, FlowMode::Normalized, GridSpec::Axisymmetric { n: 2, count: 24 }, InitialBody::Perturbed {
            radius: 1.0,
            amplitude: 0.1,
            shape,
            even: true,
        });
        c.cadence = 1;
        c.stepping.max_steps = 200;
        let (flow, u) = Flow::from_config(&c).unwrap();
        let result = flow.run(&u).unwrap();
        assert!(result.series.relative_v_drift() < 1e-4, "{}", result.series.relative_v_drift());
        let trend = flow.monitor_config().j_orientation.trend();
        assert!(result.series.worst_j_violation(trend) < 1e-8);
    }

    #[test]
    fn perturbed_even_part() {
        let shape = parse("x1 + x3^2", &direction_variables(2)).unwrap();
        let grid = Arc::new(SphereGrid::full2d(8, 8).unwrap());
        let body = InitialBody::Perturbed { radius: 1.0, amplitude: 0.1, shape, even: true };
        let u = body.build(grid).unwrap();
        assert!(u.symmetry_defect() < 1e-15);
    }
}
