//! Functionals and identities tracked along the flow.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::geometry::{geometry_of, BodyGeometry, RadialFunction, SupportFunction};
use crate::grid::SphereGrid;
use crate::integrand::{GFun, IntegrandSpec, NodeIntegrand};
use crate::quadrature::GaussTable;

const INNER_TOL: f64 = 1e-10;
const INNER_DEPTH: usize = 40;
const INNER_POINTS: usize = 10;

/// Segment of the inner `s`-integral in `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JOrientation {
    /// `∫_{C₀}^{u} φ^{-n/β} ds`; non-increasing along the normalized flow.
    #[default]
    FromC0,
    /// `∫_{u}^{C₀} φ^{-n/β} ds`; non-decreasing.
    ToC0,
    /// `∫_{u}^{s_max} φ^{-n/β} ds`, a truncation of the improper integral to
    /// infinity; non-decreasing.
    ToInfinity,
}

/// Radial segment of the inner integral in `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VOrientation {
    /// `∫_0^ρ G(rξ)^{n/β} rⁿ dr`.
    #[default]
    Inner,
    /// `∫_ρ^R G(rξ)^{n/β} rⁿ dr`.
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    NonIncreasing,
    NonDecreasing,
}

impl JOrientation {
    /// Direction in which `J` moves along the normalized flow.
    pub fn trend(self) -> Trend {
        match self {
            Self::FromC0 => Trend::NonIncreasing,
            Self::ToC0 | Self::ToInfinity => Trend::NonDecreasing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    pub c0: f64,
    pub r_outer: f64,
    pub s_max: f64,
    pub j_orientation: JOrientation,
    pub v_orientation: VOrientation,
}

impl MonitorConfig {
    /// `C₀ = 1`, `R = 2 max u₀`, `s_max = 10 max u₀`.
    pub fn for_body(u0: &SupportFunction) -> Self {
        Self {
            c0: 1.0,
            r_outer: 2.0 * u0.max(),
            s_max: 10.0 * u0.max(),
            j_orientation: JOrientation::default(),
            v_orientation: VOrientation::default(),
        }
    }

    /// Reject combinations whose integrals cannot be finite.
    pub fn validate(&self, spec: &IntegrandSpec) -> Result<()> {
        for (name, v) in [("C0", self.c0), ("R", self.r_outer), ("s_max", self.s_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("monitor {name} must be positive and finite (got {v})")));
            }
        }
        if let (VOrientation::Inner, GFun::Power { q }) = (self.v_orientation, spec.g()) {
            if *q <= 0.0 {
                return Err(Error::Config(format!(
                    "the inner radial integral of V, int_0^rho r^(q-1) dr, diverges for q = {q} <= 0; \
                     use the outer orientation"
                )));
            }
        }
        Ok(())
    }
}

/// Fallible integrand adapter for the adaptive rule.
fn integrate_fallible<F: FnMut(f64) -> Result<f64>>(lo: f64, hi: f64, table: &GaussTable, mut f: F) -> Result<Option<f64>> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let value = table.integrate_adaptive(lo, hi, INNER_TOL, INNER_DEPTH, |s| match f(s) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(value)
}

/// `J = ∫_{𝕊ⁿ} ∫ φ(x,s)^{-n/β} ds dx` over the oriented segment.
pub fn j_value(u: &SupportFunction, nodes: &NodeIntegrand<'_>, config: &MonitorConfig) -> Result<f64> {
    let grid = u.grid();
    let table = GaussTable::new(INNER_POINTS);
    let mut field = Vec::with_capacity(grid.len());
    for (k, &uk) in u.values().iter().enumerate() {
        let (lo, hi) = match config.j_orientation {
            JOrientation::FromC0 => (config.c0, uk),
            JOrientation::ToC0 => (uk, config.c0),
            JOrientation::ToInfinity => (uk, config.s_max),
        };
        let inner = integrate_fallible(lo, hi, &table, |s| nodes.phi_neg_power(k, s))?
            .ok_or(Error::NonFinite { what: "inner J integral", node: k })?;
        field.push(inner);
    }
    grid.integrate(&field)
}

/// `V = ∫_{𝕊ⁿ} ∫ G(rξ)^{n/β} rⁿ dr dξ`, evaluated in normal coordinates with
/// density `u σₙ / ρⁿ⁺¹`.
pub fn v_value(
    u: &SupportFunction,
    geometry: &BodyGeometry,
    nodes: &NodeIntegrand<'_>,
    config: &MonitorConfig,
) -> Result<f64> {
    let grid = u.grid();
    let spec = nodes.spec();
    let n = spec.n() as i32;
    let table = GaussTable::new(INNER_POINTS);
    let mut field = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let rho = geometry.rho[k];
        let inner = match spec.g() {
            GFun::Power { q } => power_radial(*q, rho, config),
            GFun::Expr(_) => {
                let xi = geometry.radial_direction(k);
                let (lo, hi) = match config.v_orientation {
                    VOrientation::Inner => (0.0, rho),
                    VOrientation::Outer => (rho, config.r_outer),
                };
                let mut y = vec![0.0; xi.len()];
                integrate_fallible(lo, hi, &table, |r| {
                    y.iter_mut().zip(&xi).for_each(|(y, x)| *y = r * x);
                    Ok(nodes.g_power(k, &y)? * r.powi(n))
                })?
                .ok_or_else(|| {
                    Error::Config(format!(
                        "radial integral of V does not converge at node {k}; the {:?} orientation may not suit this G",
                        config.v_orientation
                    ))
                })?
            }
        };
        field.push(inner * geometry.reverse_jacobian[k]);
    }
    grid.integrate(&field)
}

/// Antiderivative of `r^{q-1}` over the oriented radial segment.
fn power_radial(q: f64, rho: f64, config: &MonitorConfig) -> f64 {
    let prim = |r: f64| if q == 0.0 { r.ln() } else { r.powf(q) / q };
    match config.v_orientation {
        VOrientation::Inner => rho.powf(q) / q,
        VOrientation::Outer => prim(config.r_outer) - prim(rho),
    }
}

/// `Q_k = φ(x_k, u_k) G(X_k) σₙ^{β/n}` at every node.
pub fn curvature_function(
    u: &SupportFunction,
    geometry: &BodyGeometry,
    nodes: &NodeIntegrand<'_>,
) -> Result<Vec<f64>> {
    let ratio = nodes.spec().ratio();
    (0..u.values().len())
        .map(|k| {
            let phi = nodes.phi(k, u.values()[k])?;
            let g = nodes.g(k, geometry.point(k))?;
            Ok(phi * g * geometry.sigma[k].powf(ratio))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    /// `max_k |Q_k - c| / c`.
    pub max: f64,
    /// Quadrature mean of `Q`.
    pub c_estimate: f64,
    /// `|c η - 1|`, normalized mode only.
    pub eta_consistency: Option<f64>,
}

/// Distance of `u` from solving `φ G σₙ^{β/n} = c`.
pub fn stationary_residual(
    u: &SupportFunction,
    geometry: &BodyGeometry,
    nodes: &NodeIntegrand<'_>,
    eta: Option<f64>,
) -> Result<Residual> {
    let q = curvature_function(u, geometry, nodes)?;
    let grid = u.grid();
    let c = grid.integrate(&q)? / grid.total_area();
    let max = q.iter().map(|v| (v - c).abs() / c).fold(0.0, f64::max);
    Ok(Residual { max, c_estimate: c, eta_consistency: eta.map(|e| (c * e - 1.0).abs()) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub eta: f64,
    pub j: f64,
    pub v: f64,
    pub residual_max: f64,
    pub c_estimate: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub convexity_margin: f64,
    pub symmetry_defect: f64,
}

impl MonitorRow {
    pub const HEADER: &'static str =
        "t,eta,J,V,residual_max,c_estimate,min_u,max_u,min_rho,max_rho,convexity_margin,symmetry_defect";

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.eta,
            self.j,
            self.v,
            self.residual_max,
            self.c_estimate,
            self.min_u,
            self.max_u,
            self.min_rho,
            self.max_rho,
            self.convexity_margin,
            self.symmetry_defect,
        ]
    }

    /// Evaluate every monitored quantity for one state.
    pub fn evaluate(
        t: f64,
        eta: f64,
        u: &SupportFunction,
        geometry: &BodyGeometry,
        nodes: &NodeIntegrand<'_>,
        config: &MonitorConfig,
    ) -> Result<Self> {
        let residual = stationary_residual(u, geometry, nodes, None)?;
        Ok(Self {
            t,
            eta,
            j: j_value(u, nodes, config)?,
            v: v_value(u, geometry, nodes, config)?,
            residual_max: residual.max,
            c_estimate: residual.c_estimate,
            min_u: u.min(),
            max_u: u.max(),
            min_rho: geometry.rho.iter().copied().fold(f64::INFINITY, f64::min),
            max_rho: geometry.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            convexity_margin: geometry.convexity_margin().0,
            symmetry_defect: u.symmetry_defect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSeries {
    pub config: MonitorConfig,
    rows: Vec<MonitorRow>,
}

impl MonitorSeries {
    pub fn new(config: MonitorConfig) -> Self {
        Self { config, rows: Vec::new() }
    }

    pub fn rows(&self) -> &[MonitorRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&MonitorRow> {
        self.rows.last()
    }

    /// Append a row; times must increase and every value must be finite.
    pub fn record(&mut self, row: MonitorRow) -> Result<()> {
        let names = MonitorRow::HEADER.split(',');
        for (name, v) in names.zip(row.values()) {
            if !v.is_finite() {
                return Err(Error::Breakdown { t: row.t, reason: format!("monitor {name} is not finite ({v})") });
            }
        }
        if let Some(prev) = self.rows.last() {
            if row.t <= prev.t {
                return Err(Error::Breakdown {
                    t: row.t,
                    reason: format!("monitor time {} does not follow {}", row.t, prev.t),
                });
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// `max_t |V(t) - V(0)| / |V(0)|`.
    pub fn relative_v_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else { return 0.0 };
        self.rows.iter().map(|r| (r.v - first.v).abs() / first.v.abs()).fold(0.0, f64::max)
    }

    /// Largest step against the expected trend of `J`, relative to `|J|`.
    pub fn worst_j_violation(&self, trend: Trend) -> f64 {
        self.rows
            .windows(2)
            .map(|w| {
                let d = w[1].j - w[0].j;
                let against = match trend {
                    Trend::NonIncreasing => d,
                    Trend::NonDecreasing => -d,
                };
                against.max(0.0) / w[0].j.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierCheck {
    /// `min_x φ(x, r₁) G(r₁x) r₁^β`, must be at least 1.
    pub inner_min: f64,
    /// `max_x φ(x, r₂) G(r₂x) r₂^β`, must be at most 1.
    pub outer_max: f64,
}

impl BarrierCheck {
    pub fn holds(&self) -> bool {
        self.inner_min >= 1.0 && self.outer_max <= 1.0
    }
}

/// Evaluate the barrier condition on the spheres of radii `r1 < r2` at every
/// grid direction.
pub fn barrier_condition(spec: &IntegrandSpec, grid: &SphereGrid, r1: f64, r2: f64) -> Result<BarrierCheck> {
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::Config(format!("barrier radii need 0 < r1 < r2 (got {r1}, {r2})")));
    }
    let mut inner_min = f64::INFINITY;
    let mut outer_max = f64::NEG_INFINITY;
    for k in 0..grid.len() {
        let x = grid.direction(k);
        inner_min = inner_min.min(spec.barrier_function(x, r1)?);
        outer_max = outer_max.max(spec.barrier_function(x, r2)?);
    }
    Ok(BarrierCheck { inner_min, outer_max })
}

/// Bounds `[min(r₁, min u₀), max(r₂, max u₀)]` for barrier runs.
pub fn barrier_bounds(r1: f64, r2: f64, u0: &SupportFunction) -> (f64, f64) {
    (r1.min(u0.min()), r2.max(u0.max()))
}

/// `max |Δ log ρ(ξ_k) - Δ log u(x_k)| / dt` over sampled nodes, with
/// `ξ_k = X_k/|X_k|` taken from `before` and `ρ` from the refined radial
/// function of each state.
pub fn radial_rate_defect(before: &SupportFunction, after: &SupportFunction, dt: f64, stride: usize) -> Result<f64> {
    let geometry = geometry_of(before)?;
    let rb = RadialFunction::new(before);
    let ra = RadialFunction::new(after);
    let mut worst: f64 = 0.0;
    for k in (0..before.values().len()).step_by(stride.max(1)) {
        let xi = geometry.radial_direction(k);
        let drho = (ra.eval(&xi)? / rb.eval(&xi)?).ln() / dt;
        let du = (after.values()[k] / before.values()[k]).ln() / dt;
        worst = worst.max((drho - du).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::integrand::{direction_variables, g_variables, Phi};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<SphereGrid> {
        Arc::new(SphereGrid::axisymmetric(2, 32).unwrap())
    }

    fn config(u: &SupportFunction) -> MonitorConfig {
        MonitorConfig::for_body(u)
    }

    #[test]
    fn j_examples() {
        let g = grid();
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 1.0, 3.0).unwrap();
        let nodes = spec.on_grid(&g).unwrap();
        let u = SupportFunction::sphere(g.clone(), 2.0).unwrap();
        let j = j_value(&u, &nodes, &config(&u)).unwrap();
        assert!((j - 4.0 * PI).abs() < 1e-12);

        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let nodes = spec.on_grid(&g).unwrap();
        for r in [1.0, 1.7, 0.6] {
            let u = SupportFunction::sphere(g.clone(), r).unwrap();
            let j = j_value(&u, &nodes, &config(&u)).unwrap();
            let exact = 4.0 * PI * (r.powi(4) - 1.0) / 4.0;
            assert!((j - exact).abs() < 1e-11, "{r}: {j} vs {exact}");
            let mut c = config(&u);
            c.j_orientation = JOrientation::ToC0;
            assert!((j_value(&u, &nodes, &c).unwrap() + exact).abs() < 1e-11);
        }
    }

    #[test]
    fn v_examples() {
        let g = grid();
        let one = IntegrandSpec::isotropic_power(2, 2.0, 1.0, 3.0).unwrap();
        let nodes = one.on_grid(&g).unwrap();
        let u = SupportFunction::sphere(g.clone(), 1.5).unwrap();
        let geo = geometry_of(&u).unwrap();
        let v = v_value(&u, &geo, &nodes, &config(&u)).unwrap();
        assert!((v - 4.0 * PI * 1.5f64.powi(3) / 3.0).abs() < 1e-11);

        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let nodes = spec.on_grid(&g).unwrap();
        let u = SupportFunction::sphere(g.clone(), 2.0).unwrap();
        let geo = geometry_of(&u).unwrap();
        assert!((v_value(&u, &geo, &nodes, &config(&u)).unwrap() - 8.0 * PI).abs() < 1e-11);

        let mut c = config(&u);
        c.v_orientation = VOrientation::Outer;
        c.r_outer = 2.0;
        assert!(v_value(&u, &geo, &one.on_grid(&g).unwrap(), &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn expression_g_matches_power_g_for_v() {
        let g = Arc::new(SphereGrid::full2d(24, 24).unwrap());
        let u = SupportFunction::ellipsoid(g.clone(), &[1.2, 1.0, 0.9]).unwrap();
        let geo = geometry_of(&u).unwrap();
        let f = parse("1", &direction_variables(2)).unwrap();
        let power = IntegrandSpec::power(2, 2.0, f.clone(), 4.0, 2.0, true).unwrap();
        let expr = IntegrandSpec::new(
            2,
            2.0,
            Phi::Power { f, p: 4.0 },
            GFun::Expr(parse("pow(r, -1)", &g_variables(2)).unwrap()),
            true,
        )
        .unwrap();
        for orientation in [VOrientation::Inner, VOrientation::Outer] {
            let mut c = config(&u);
            c.v_orientation = orientation;
            let a = v_value(&u, &geo, &power.on_grid(&g).unwrap(), &c).unwrap();
            let b = v_value(&u, &geo, &expr.on_grid(&g).unwrap(), &c).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs(), "{orientation:?}: {a} vs {b}");
        }
    }

    #[test]
    fn inner_orientation_rejects_nonpositive_q() {
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 0.0).unwrap();
        let u = SupportFunction::sphere(grid(), 1.0).unwrap();
        let err = config(&u).validate(&spec).unwrap_err();
        assert!(err.to_string().contains("inner radial integral"));
        let mut c = config(&u);
        c.v_orientation = VOrientation::Outer;
        assert!(c.validate(&spec).is_ok());
    }

    #[test]
    fn residual_examples() {
        let g = grid();
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let nodes = spec.on_grid(&g).unwrap();
        let u = SupportFunction::sphere(g.clone(), 1.0).unwrap();
        let geo = geometry_of(&u).unwrap();
        let r = stationary_residual(&u, &geo, &nodes, None).unwrap();
        assert!(r.max < 1e-8 && (r.c_estimate - 1.0).abs() < 1e-8);

        let one = IntegrandSpec::isotropic_power(2, 2.0, 1.0, 3.0).unwrap();
        let nodes = one.on_grid(&g).unwrap();
        let u = SupportFunction::sphere(g.clone(), 1.7).unwrap();
        let geo = geometry_of(&u).unwrap();
        let r = stationary_residual(&u, &geo, &nodes, Some(1.7f64.powi(-2))).unwrap();
        assert!(r.max < 1e-12);
        assert!((r.c_estimate - 1.7 * 1.7).abs() < 1e-12);
        assert!(r.eta_consistency.unwrap() < 1e-12);

        let u = SupportFunction::from_fn(g.clone(), |x| 1.0 + 0.05 * x[2] * x[2]).unwrap();
        let geo = geometry_of(&u).unwrap();
        assert!(stationary_residual(&u, &geo, &nodes, None).unwrap().max > 0.0);
    }

    #[test]
    fn record_rules() {
        let g = grid();
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 1.0, 3.0).unwrap();
        let nodes = spec.on_grid(&g).unwrap();
        let u = SupportFunction::sphere(g.clone(), 1.3).unwrap();
        let geo = geometry_of(&u).unwrap();
        let c = config(&u);
        let mut series = MonitorSeries::new(c);
        let row = MonitorRow::evaluate(0.0, 1.0, &u, &geo, &nodes, &c).unwrap();
        assert_eq!(row.min_u, row.max_u);
        assert!((row.min_rho - row.max_rho).abs() < 1e-14 && (row.min_rho - 1.3).abs() < 1e-14);
        assert!(row.symmetry_defect < 1e-14);
        series.record(row).unwrap();
        assert_eq!(series.len(), 1);
        assert!(series.record(row).is_err());
        let mut bad = row;
        bad.t = 1.0;
        bad.j = f64::NAN;
        assert!(series.record(bad).is_err());
        assert_eq!(series.len(), 1);
    }

    #[test]
    fn barrier_condition_for_power_family() {
        let g = grid();
        // φ G r^β = r^{(1-p) + (q-3) + 2} = r^{q-p} for n = β = 2
        let spec = IntegrandSpec::isotropic_power(2, 2.0, 4.0, 1.0).unwrap();
        let check = barrier_condition(&spec, &g, 0.5, 2.0).unwrap();
        assert!(check.holds());
        assert!((check.inner_min - 8.0).abs() < 1e-12);
        assert!((check.outer_max - 0.125).abs() < 1e-12);
        assert!(!barrier_condition(&spec, &g, 1.5, 2.0).unwrap().holds());
    }

    #[test]
    fn radial_rate_of_homothety() {
        // u(t) = e^{at} u₀ scales ρ by the same factor
        let g = Arc::new(SphereGrid::full2d(16, 16).unwrap());
        let u0 = SupportFunction::ellipsoid(g.clone(), &[1.2, 1.0, 0.9]).unwrap();
        let u1 = SupportFunction::new(g, u0.values().iter().map(|v| v * 1.01).collect()).unwrap();
        assert!(radial_rate_defect(&u0, &u1, 0.01, 3).unwrap() < 1e-8);
    }
}
