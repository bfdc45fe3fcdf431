//! Convex bodies through their support functions.
//!
//! A body is stored as nodal samples of its support function `u` on a
//! [`SphereGrid`]. From `u` we derive the curvature-radii matrix
//! `b = D²u + u I`, its determinant `σₙ` (the reciprocal Gauss curvature),
//! the boundary point `X = Du + u x` with normal `x`, the radial function
//! `ρ = |X|`, and the density `u σₙ / ρⁿ⁺¹` of the reverse radial Gauss map.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Derivatives, GridMode, SphereGrid, SphereInterpolant};

#[derive(Debug, Clone)]
pub struct SupportFunction {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl SupportFunction {
    /// Wrap nodal samples; every value must be positive and finite.
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        for (node, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { what: "support value", node });
            }
            if value <= 0.0 {
                return Err(Error::NonPositiveSupport { node, value });
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: Arc<SphereGrid>, mut f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.direction(k))).collect();
        Self::new(grid, values)
    }

    pub fn sphere(grid: Arc<SphereGrid>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::NonPositiveValue("sphere radius", radius));
        }
        let n = grid.len();
        Self::new(grid, vec![radius; n])
    }

    /// Centered ellipsoid with the given semi-axes (one per ambient
    /// coordinate). On axisymmetric grids all but the last must agree.
    pub fn ellipsoid(grid: Arc<SphereGrid>, axes: &[f64]) -> Result<Self> {
        let d = grid.dim() + 1;
        if axes.len() != d {
            return Err(Error::Config(format!("ellipsoid needs {d} semi-axes, got {}", axes.len())));
        }
        if let Some(&a) = axes.iter().find(|a| !(**a > 0.0)) {
            return Err(Error::NonPositiveValue("ellipsoid semi-axis", a));
        }
        if grid.mode() == GridMode::Axisymmetric && axes[..d - 1].iter().any(|a| *a != axes[0]) {
            return Err(Error::Config(
                "axisymmetric grids need equal semi-axes orthogonal to the symmetry axis".into(),
            ));
        }
        Self::from_fn(grid, |x| x.iter().zip(axes).map(|(x, a)| a * a * x * x).sum::<f64>().sqrt())
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_k |u(x_k) - u(-x_k)|` over exact antipodal node pairs.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.values.len())
            .map(|k| (self.values[k] - self.values[self.grid.antipode(k)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn interpolant(&self) -> SphereInterpolant {
        self.grid.interpolant(&self.values).expect("sample count checked at construction")
    }
}

/// Per-node geometry derived from a support function.
#[derive(Debug, Clone)]
pub struct BodyGeometry {
    dim: usize,
    derivatives: Derivatives,
    /// `[b₁₁, b₂₂, b₁₂]` in the orthonormal frame.
    pub radii_matrix: Vec<[f64; 3]>,
    /// Smallest eigenvalue of `b` per node.
    pub min_radius: Vec<f64>,
    /// Largest eigenvalue of `b` per node.
    pub max_radius: Vec<f64>,
    /// `σₙ = det b`.
    pub sigma: Vec<f64>,
    /// Boundary points `X = Du + u x`, flattened with stride `n + 1`.
    pub position: Vec<f64>,
    /// `ρ = |X|`.
    pub rho: Vec<f64>,
    /// `u σₙ / ρⁿ⁺¹`, the Jacobian of the reverse radial Gauss map.
    pub reverse_jacobian: Vec<f64>,
}

impl BodyGeometry {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn derivatives(&self) -> &Derivatives {
        &self.derivatives
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let d = self.dim + 1;
        &self.position[k * d..(k + 1) * d]
    }

    /// Minimum over nodes of the smallest curvature radius, with its node.
    pub fn convexity_margin(&self) -> (f64, usize) {
        self.min_radius
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(m, i), (k, &v)| if v < m { (v, k) } else { (m, i) })
    }

    /// Fails with the offending node if any curvature radius is not positive.
    pub fn check_convex(&self, grid: &SphereGrid) -> Result<()> {
        let (margin, node) = self.convexity_margin();
        if !(margin > 0.0) {
            return Err(Error::NonConvex { node, margin, theta: grid.theta(node), phi: grid.phi(node) });
        }
        Ok(())
    }

    /// Unit radial direction `ξ = X/|X|` of the boundary point with normal `x_k`.
    pub fn radial_direction(&self, k: usize) -> Vec<f64> {
        let r = self.rho[k];
        self.point(k).iter().map(|v| v / r).collect()
    }
}

/// Derive curvature radii, `σₙ`, boundary points and `ρ` at every node.
pub fn geometry_of(u: &SupportFunction) -> Result<BodyGeometry> {
    let grid = u.grid();
    let values = u.values();
    let derivatives = grid.covariant_derivatives(values)?;
    let n = grid.dim();
    let d = n + 1;
    let len = values.len();

    let mut radii_matrix = Vec::with_capacity(len);
    let mut min_radius = Vec::with_capacity(len);
    let mut max_radius = Vec::with_capacity(len);
    let mut sigma = Vec::with_capacity(len);
    let mut position = vec![0.0; len * d];
    let mut rho = Vec::with_capacity(len);
    let mut reverse_jacobian = Vec::with_capacity(len);

    for k in 0..len {
        let uk = values[k];
        let [h11, h22, h12] = derivatives.hess[k];
        let [g1, g2] = derivatives.grad[k];
        if ![h11, h22, h12, g1, g2].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "derivative", node: k });
        }
        let b = [h11 + uk, h22 + uk, h12];
        let (lo, hi, det) = match grid.mode() {
            GridMode::Axisymmetric => {
                let (l1, l2) = (b[0], b[1]);
                (l1.min(l2), l1.max(l2), l1 * l2.powi(n as i32 - 1))
            }
            GridMode::Full2d => {
                let mean = 0.5 * (b[0] + b[1]);
                let rad = (0.25 * (b[0] - b[1]).powi(2) + b[2] * b[2]).sqrt();
                (mean - rad, mean + rad, b[0] * b[1] - b[2] * b[2])
            }
        };
        let x = grid.direction(k);
        let (e1, e2) = grid.frame(k);
        let p = &mut position[k * d..(k + 1) * d];
        for c in 0..d {
            p[c] = uk * x[c] + g1 * e1[c] + g2 * e2[c];
        }
        let r = (uk * uk + g1 * g1 + g2 * g2).sqrt();
        radii_matrix.push(b);
        min_radius.push(lo);
        max_radius.push(hi);
        sigma.push(det);
        rho.push(r);
        reverse_jacobian.push(uk * det / r.powi(d as i32));
    }

    Ok(BodyGeometry {
        dim: n,
        derivatives,
        radii_matrix,
        min_radius,
        max_radius,
        sigma,
        position,
        rho,
        reverse_jacobian,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let r = dot(v, v).sqrt();
    v.iter_mut().for_each(|c| *c /= r);
}

/// On axisymmetric grids every direction is rotated into the `φ = 0`
/// meridian half-plane before comparing with the nodes.
fn meridian_angle(xi: &[f64]) -> f64 {
    let last = xi[xi.len() - 1].clamp(-1.0, 1.0);
    let transverse: f64 = xi[..xi.len() - 1].iter().map(|c| c * c).sum::<f64>().sqrt();
    transverse.atan2(last)
}

/// Support-envelope radial function: `ρ(ξ) = min_k u_k / <x_k, ξ>` over
/// nodes in the open hemisphere around `ξ`. Returns the value and the
/// minimizing node.
pub fn radial_envelope(u: &SupportFunction, xi: &[f64]) -> Result<(f64, usize)> {
    let grid = u.grid();
    let values = u.values();
    let mut best = (f64::INFINITY, usize::MAX);
    match grid.mode() {
        GridMode::Axisymmetric => {
            let psi = meridian_angle(xi);
            for k in 0..values.len() {
                let c = (grid.theta(k) - psi).cos();
                if c > 0.0 {
                    let v = values[k] / c;
                    if v < best.0 {
                        best = (v, k);
                    }
                }
            }
        }
        GridMode::Full2d => {
            for k in 0..values.len() {
                let c = dot(grid.direction(k), xi);
                if c > 0.0 {
                    let v = values[k] / c;
                    if v < best.0 {
                        best = (v, k);
                    }
                }
            }
        }
    }
    if best.1 == usize::MAX {
        return Err(Error::EmptyHemisphere);
    }
    Ok(best)
}

/// Radial function by the support envelope over grid nodes.
pub fn radial_function_at(u: &SupportFunction, xi: &[f64]) -> Result<f64> {
    check_unit(xi, u.grid().dim())?;
    radial_envelope(u, xi).map(|(v, _)| v)
}

fn check_unit(xi: &[f64], n: usize) -> Result<()> {
    if xi.len() != n + 1 {
        return Err(Error::ShapeMismatch { expected: n + 1, got: xi.len() });
    }
    let norm = dot(xi, xi).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Config(format!("direction must be a unit vector (|ξ| = {norm})")));
    }
    Ok(())
}

/// Radial function evaluator that refines the envelope minimizer by
/// continuous minimization of `u(x)/<x, ξ>` on the spectral interpolant.
///
/// For a convex body containing the origin this minimum is exactly `ρ(ξ)`,
/// so the result is accurate to interpolation error rather than node
/// spacing.
pub struct RadialFunction<'a> {
    u: &'a SupportFunction,
    interp: SphereInterpolant,
}

impl<'a> RadialFunction<'a> {
    pub fn new(u: &'a SupportFunction) -> Self {
        Self { u, interp: u.interpolant() }
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        check_unit(xi, self.u.grid().dim())?;
        let (seed, node) = radial_envelope(self.u, xi)?;
        let grid = self.u.grid();
        let value = match grid.mode() {
            GridMode::Axisymmetric => self.refine_meridian(meridian_angle(xi), grid.theta(node)),
            GridMode::Full2d => self.refine_chart(xi, node),
        };
        // The envelope is an upper bound; never return something worse.
        Ok(value.min(seed))
    }

    fn refine_meridian(&self, psi: f64, start: f64) -> f64 {
        let h = std::f64::consts::PI / self.u.grid().n_theta() as f64;
        let f = |t: f64| self.interp.eval_angles(t, 0.0) / (t - psi).cos();
        let (mut a, mut b) = (start - 2.0 * h, start + 2.0 * h);
        let lim = 0.5 * std::f64::consts::PI - 1e-6;
        a = a.max(psi - lim);
        b = b.min(psi + lim);
        golden_min(f, a, b, 1e-11)
    }

    fn refine_chart(&self, xi: &[f64], node: usize) -> f64 {
        let grid = self.u.grid();
        let x0 = grid.direction(node).to_vec();
        let (t1, t2) = grid.frame(node);
        let point = |a: f64, b: f64| {
            let mut y: Vec<f64> = (0..3).map(|c| x0[c] + a * t1[c] + b * t2[c]).collect();
            normalize(&mut y);
            y
        };
        let f = |a: f64, b: f64| {
            let y = point(a, b);
            let c = dot(&y, xi);
            if c <= 1e-3 {
                f64::INFINITY
            } else {
                self.interp.eval(&y) / c
            }
        };
        let fd = 1e-4;
        let (mut a, mut b) = (0.0, 0.0);
        let mut fc = f(a, b);
        for _ in 0..30 {
            let fpa = f(a + fd, b);
            let fma = f(a - fd, b);
            let fpb = f(a, b + fd);
            let fmb = f(a, b - fd);
            let fpp = f(a + fd, b + fd);
            let fmm = f(a - fd, b - fd);
            let fpm = f(a + fd, b - fd);
            let fmp = f(a - fd, b + fd);
            let ga = (fpa - fma) / (2.0 * fd);
            let gb = (fpb - fmb) / (2.0 * fd);
            let haa = (fpa - 2.0 * fc + fma) / (fd * fd);
            let hbb = (fpb - 2.0 * fc + fmb) / (fd * fd);
            let hab = (fpp - fpm - fmp + fmm) / (4.0 * fd * fd);
            let det = haa * hbb - hab * hab;
            let (mut da, mut db) = if haa > 0.0 && det > 0.0 {
                (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det)
            } else {
                let scale = 1e-2 / (ga * ga + gb * gb).sqrt().max(1e-300);
                (-ga * scale, -gb * scale)
            };
            let mut improved = false;
            for _ in 0..20 {
                let trial = f(a + da, b + db);
                if trial <= fc {
                    a += da;
                    b += db;
                    fc = trial;
                    improved = true;
                    break;
                }
                da *= 0.5;
                db *= 0.5;
            }
            if !improved || (da * da + db * db).sqrt() < 1e-10 {
                break;
            }
        }
        fc
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Support function of the polar body, `u*(x_k) = 1/ρ(x_k)`, sampled on
/// the same grid. Uses the support envelope for `ρ`.
pub fn polar_dual(u: &SupportFunction) -> Result<SupportFunction> {
    let grid = u.grid().clone();
    let values = (0..grid.len())
        .map(|k| radial_function_at(u, grid.direction(k)).map(|r| 1.0 / r))
        .collect::<Result<Vec<_>>>()?;
    SupportFunction::new(grid, values)
}

/// Polar dual with the refined radial function.
pub fn polar_dual_refined(u: &SupportFunction) -> Result<SupportFunction> {
    let grid = u.grid().clone();
    let radial = RadialFunction::new(u);
    let values = (0..grid.len())
        .map(|k| radial.eval(grid.direction(k)).map(|r| 1.0 / r))
        .collect::<Result<Vec<_>>>()?;
    SupportFunction::new(grid, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    /// `∫ u σₙ / ρⁿ⁺¹ dx`
    pub integral: f64,
    /// `|S^n|`
    pub area: f64,
    /// `|integral - area|`
    pub integral_defect: f64,
    /// `max |Jac 𝒜(ξ_k) · Jac 𝒜*(x_k) - 1|` over the sampled nodes.
    pub product_defect: f64,
    pub samples: usize,
}

/// Gauss-map Jacobian identities. The product check pairs each sampled node
/// `x_k` with `ξ_k = X_k/|X_k|` and evaluates `ρ(ξ_k)` independently with the
/// refined radial function; `stride` thins the sampled nodes.
pub fn jacobian_checks(u: &SupportFunction, stride: usize) -> Result<JacobianReport> {
    let geometry = geometry_of(u)?;
    let grid = u.grid();
    let integral = grid.integrate(&geometry.reverse_jacobian)?;
    let area = grid.total_area();
    let radial = RadialFunction::new(u);
    let d = grid.dim() as i32 + 1;
    let mut product_defect: f64 = 0.0;
    let mut samples = 0;
    for k in (0..grid.len()).step_by(stride.max(1)) {
        let xi = geometry.radial_direction(k);
        let rho_xi = radial.eval(&xi)?;
        let curvature = 1.0 / geometry.sigma[k];
        let forward = rho_xi.powi(d) * curvature / u.values()[k];
        let reverse = geometry.reverse_jacobian[k];
        product_defect = product_defect.max((forward * reverse - 1.0).abs());
        samples += 1;
    }
    Ok(JacobianReport { integral, area, integral_defect: (integral - area).abs(), product_defect, samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaReport {
    pub max_u: f64,
    pub max_rho: f64,
    pub min_u: f64,
    pub min_rho: f64,
    /// `max_k (<x_k, x_max> u(x_max) - u(x_k))⁺`
    pub support_cone_violation: f64,
    /// `max_k (ρ(ξ_k)<ξ_k, ξ_min> - ρ(ξ_min))⁺`
    pub radial_cone_violation: f64,
}

impl ExtremaReport {
    pub fn max_defect(&self) -> f64 {
        (self.max_u - self.max_rho).abs().max((self.min_u - self.min_rho).abs())
    }
}

/// Sampled extremal relations between `u` and `ρ` for bodies containing
/// the origin: `max u = max ρ`, `min u = min ρ`, and the two cone bounds.
pub fn extrema_checks(u: &SupportFunction, geometry: &BodyGeometry) -> ExtremaReport {
    let grid = u.grid();
    let values = u.values();
    let argmax = (0..values.len()).fold(0, |m, k| if values[k] > values[m] { k } else { m });
    let argmin_rho = (0..values.len()).fold(0, |m, k| if geometry.rho[k] < geometry.rho[m] { k } else { m });
    let x_max = grid.direction(argmax);
    let xi_min = geometry.radial_direction(argmin_rho);

    let mut support_cone_violation: f64 = 0.0;
    let mut radial_cone_violation: f64 = 0.0;
    for k in 0..values.len() {
        let c = directional_cos(grid, grid.direction(k), x_max);
        support_cone_violation = support_cone_violation.max(c * values[argmax] - values[k]);
        let xi = geometry.radial_direction(k);
        let c = directional_cos(grid, &xi, &xi_min);
        radial_cone_violation = radial_cone_violation.max(geometry.rho[k] * c - geometry.rho[argmin_rho]);
    }
    ExtremaReport {
        max_u: u.max(),
        max_rho: geometry.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_u: u.min(),
        min_rho: geometry.rho.iter().copied().fold(f64::INFINITY, f64::min),
        support_cone_violation,
        radial_cone_violation,
    }
}

/// `max <a, R b>` over rotations `R` about the symmetry axis on
/// axisymmetric grids (the worst case for the cone bounds); plain dot
/// product otherwise.
fn directional_cos(grid: &SphereGrid, a: &[f64], b: &[f64]) -> f64 {
    match grid.mode() {
        GridMode::Full2d => dot(a, b),
        GridMode::Axisymmetric => (meridian_angle(a) - meridian_angle(b)).cos(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn axis(n: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::axisymmetric(2, n).unwrap())
    }

    fn full(n: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::full2d(n, n).unwrap())
    }

    #[test]
    fn sphere_geometry() {
        for g in [axis(32), full(16)] {
            let u = SupportFunction::sphere(g.clone(), 1.5).unwrap();
            let geo = geometry_of(&u).unwrap();
            for k in 0..g.len() {
                assert!((geo.sigma[k] - 2.25).abs() < 1e-10);
                assert!((geo.rho[k] - 1.5).abs() < 1e-12);
                let x = g.direction(k);
                for c in 0..3 {
                    assert!((geo.point(k)[c] - 1.5 * x[c]).abs() < 1e-10);
                }
                assert!((geo.min_radius[k] - 1.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sphere_in_higher_dimension() {
        let g = Arc::new(SphereGrid::axisymmetric(4, 24).unwrap());
        let u = SupportFunction::sphere(g, 2.0).unwrap();
        let geo = geometry_of(&u).unwrap();
        assert!(geo.sigma.iter().all(|s| (s - 16.0).abs() < 1e-9));
    }

    #[test]
    fn ellipsoid_sigma_at_equator() {
        // (a,b,c) = (1,1,0.5): at x = e₁ the principal radii are b²/a and c²/a.
        let g = full(64);
        let u = SupportFunction::ellipsoid(g.clone(), &[1.0, 1.0, 0.5]).unwrap();
        let geo = geometry_of(&u).unwrap();
        let k = (0..g.len())
            .max_by(|&i, &j| g.direction(i)[0].partial_cmp(&g.direction(j)[0]).unwrap())
            .unwrap();
        // the nearest node is off e₁ by half a polar spacing; compare with the
        // closed-form σ₂ = a²b²c²/u⁴ at that node
        let x = g.direction(k);
        let exact = 0.25 / u.values()[k].powi(4);
        assert!((geo.sigma[k] - exact).abs() < 1e-10);
        assert!((geo.sigma[k] - 0.25).abs() < 2e-3 * (1.0 - x[0]).max(1e-3) * 1e3);
    }

    #[test]
    fn ellipsoid_sigma_matches_closed_form_everywhere() {
        // det(D²u + uI) = (abc)² / u⁴ for the ellipsoid support function
        let g = full(48);
        let axes = [1.2, 1.0, 0.9];
        let u = SupportFunction::ellipsoid(g.clone(), &axes).unwrap();
        let geo = geometry_of(&u).unwrap();
        let p: f64 = axes.iter().product();
        for k in 0..g.len() {
            let exact = p * p / u.values()[k].powi(4);
            assert!((geo.sigma[k] - exact).abs() < 1e-9 * exact, "{k}");
            // ρ² = u² + |Du|² and <X, x> = u
            let x = g.direction(k);
            let xp = geo.point(k);
            assert!((dot(xp, x) - u.values()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_sphere_stays_convex() {
        let g = axis(64);
        let u = SupportFunction::from_fn(g, |x| 1.0 + 0.01 * (3.0 * x[2] * x[2] - 1.0)).unwrap();
        let geo = geometry_of(&u).unwrap();
        let (margin, _) = geo.convexity_margin();
        assert!(margin > 0.9);
        // analytic: u'' + u = 1 - 0.01 + 0.03(cos²-6... ) bounded in [0.92, 1.1]
    }

    #[test]
    fn nonconvex_body_is_located() {
        let g = full(24);
        let u = SupportFunction::from_fn(g.clone(), |x| 1.0 + 0.15 * (5.0 * x[2].powi(3) - 3.0 * x[2])).unwrap();
        let geo = geometry_of(&u).unwrap();
        match geo.check_convex(&g) {
            Err(Error::NonConvex { margin, .. }) => assert!(margin < 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_support() {
        let g = axis(16);
        let mut v = vec![1.0; 16];
        v[3] = 0.0;
        assert!(matches!(SupportFunction::new(g, v), Err(Error::NonPositiveSupport { node: 3, .. })));
    }

    #[test]
    fn radial_function_of_sphere_and_ellipsoid() {
        let g = full(64);
        let s = SupportFunction::sphere(g.clone(), 0.7).unwrap();
        let xi = [0.6, 0.0, 0.8];
        let env = radial_function_at(&s, &xi).unwrap();
        assert!(env >= 0.7 && env < 0.7 * (1.0 + 1e-2), "{env}");
        let e = SupportFunction::ellipsoid(g.clone(), &[2.0, 1.0, 0.5]).unwrap();
        let rad = RadialFunction::new(&e);
        assert!((rad.eval(&[1.0, 0.0, 0.0]).unwrap() - 2.0).abs() < 1e-8);
        let exact = |xi: &[f64]| (xi[0].powi(2) / 4.0 + xi[1].powi(2) + xi[2].powi(2) / 0.25).powf(-0.5);
        for xi in [[0.6, 0.0, 0.8], [0.0, 0.6, -0.8], [0.48, 0.6, 0.64]] {
            let refined = rad.eval(&xi).unwrap();
            assert!((refined - exact(&xi)).abs() < 1e-8, "{refined} vs {}", exact(&xi));
            let env = radial_function_at(&e, &xi).unwrap();
            assert!(env >= refined - 1e-14);
            let minus: Vec<f64> = xi.iter().map(|v| -v).collect();
            assert!((rad.eval(&minus).unwrap() - refined).abs() < 1e-9);
        }
    }

    #[test]
    fn axisymmetric_radial_function() {
        let g = axis(64);
        let e = SupportFunction::ellipsoid(g, &[1.0, 1.0, 0.5]).unwrap();
        let rad = RadialFunction::new(&e);
        let psi: f64 = 0.7;
        let xi = [psi.sin(), 0.0, psi.cos()];
        let exact = (psi.sin().powi(2) + psi.cos().powi(2) / 0.25).powf(-0.5);
        assert!((rad.eval(&xi).unwrap() - exact).abs() < 1e-10);
        // azimuth is irrelevant
        let xi2 = [0.0, psi.sin(), psi.cos()];
        assert!((rad.eval(&xi2).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn polar_of_sphere_and_involution() {
        let g = axis(48);
        let s = SupportFunction::sphere(g.clone(), 2.0).unwrap();
        let p = polar_dual(&s).unwrap();
        assert!(p.values().iter().all(|v| (v - 0.5).abs() < 1e-12));
        let u = SupportFunction::from_fn(g, |x| 1.0 + 0.05 * (3.0 * x[2] * x[2] - 1.0)).unwrap();
        let once = polar_dual_refined(&u).unwrap();
        let twice = polar_dual_refined(&once).unwrap();
        let err = u.values().iter().zip(twice.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn jacobian_integral_of_sphere_is_exact() {
        let g = full(16);
        let u = SupportFunction::sphere(g, 2.0).unwrap();
        let r = jacobian_checks(&u, 1).unwrap();
        assert!(r.integral_defect < 1e-12);
        assert!(r.product_defect < 1e-12);
    }

    #[test]
    fn extrema_relations_for_ellipsoid() {
        let g = full(32);
        let u = SupportFunction::ellipsoid(g, &[1.2, 1.0, 0.9]).unwrap();
        let geo = geometry_of(&u).unwrap();
        let r = extrema_checks(&u, &geo);
        assert!(r.max_defect() < 1e-2);
        assert!(r.support_cone_violation < 1e-12);
        assert!(r.radial_cone_violation < 1e-12);
        let _ = PI;
    }
}
