//! Spherical grids: nodes, quadrature weights and covariant derivatives.
//!
//! Two layouts are supported:
//!
//! * [`GridMode::Axisymmetric`]: functions of the polar angle only, on `S^n`
//!   for any `n ≥ 2`. Nodes are Gauss points in `z = cos θ` for the weight
//!   `(1 - z²)^{(n-2)/2}` (Gauss–Legendre when `n = 2`), so the weights carry
//!   the full `S^n` measure. Derivatives come from the barycentric
//!   differentiation matrices in `z` and the chain rule to `θ`.
//! * [`GridMode::Full2d`]: a tensor grid on `S²`, Gauss–Legendre in `cos θ`
//!   and uniform in `φ`. `φ`-derivatives are Fourier-spectral; `θ`-derivatives
//!   are trigonometric-spectral along the great circles formed by the
//!   meridians `φ` and `φ + π`.
//!
//! No node lies on a pole, so `cot θ` is always finite. Every node's
//! antipode is itself a node (see [`SphereGrid::antipode`]).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::quadrature::{
    barycentric_diff_matrices, barycentric_eval, barycentric_weights, compensated_sum,
    gauss_gegenbauer, sphere_area, CompensatedSum,
};

/// Smallest supported node count per direction.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    Axisymmetric,
    Full2d,
}

/// Gradient and Hessian of a scalar field in the orthonormal frame
/// `e₁ = ∂_θ`, `e₂ = (1/sin θ) ∂_φ`.
///
/// In axisymmetric mode `grad[k][1] = 0`, `hess[k] = [u'', u' cot θ, 0]`;
/// the second entry is the repeated tangential eigenvalue shared by the
/// `n - 1` directions orthogonal to the meridian.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub grad: Vec<[f64; 2]>,
    /// `[H₁₁, H₂₂, H₁₂]`
    pub hess: Vec<[f64; 3]>,
}

#[derive(Clone)]
pub struct CircleOps {
    /// Circle abscissae: `θ_i` then `2π - θ_{nθ-1-r}`.
    nodes: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    /// Inverse of the trigonometric Vandermonde matrix.
    inverse: DMatrix<f64>,
    /// Whether the top basis function is `cos(nθ s)` (else `sin`).
    top_is_cos: bool,
}

#[derive(Clone)]
struct FourierOps {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Highest azimuthal wavenumber kept per θ-row by [`SphereGrid::filter_poles`].
    cutoff: Vec<usize>,
}

#[derive(Clone)]
enum DiffOps {
    Axisymmetric {
        d1: DMatrix<f64>,
        d2: DMatrix<f64>,
        bary: Vec<f64>,
    },
    Full2d {
        circle: Box<CircleOps>,
        fourier: Box<FourierOps>,
    },
}

#[derive(Clone)]
pub struct SphereGrid {
    mode: GridMode,
    dim: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    phi: Vec<f64>,
    cos_phi: Vec<f64>,
    sin_phi: Vec<f64>,
    directions: Vec<f64>,
    weights: Vec<f64>,
    ops: DiffOps,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("mode", &self.mode)
            .field("dim", &self.dim)
            .field("n_theta", &self.n_theta)
            .field("n_phi", &self.n_phi)
            .finish_non_exhaustive()
    }
}

fn trig_basis(l: usize, top: usize, top_is_cos: bool, s: f64) -> (f64, f64, f64) {
    // l = 0: 1; l = 2m-1: cos(ms); l = 2m: sin(ms); last: cos/sin(top·s)
    if l == 0 {
        return (1.0, 0.0, 0.0);
    }
    if l == 2 * top - 1 {
        let m = top as f64;
        let (sn, cs) = (m * s).sin_cos();
        return if top_is_cos {
            (cs, -m * sn, -m * m * cs)
        } else {
            (sn, m * cs, -m * m * sn)
        };
    }
    let m = ((l + 1) / 2) as f64;
    let (sn, cs) = (m * s).sin_cos();
    if l % 2 == 1 {
        (cs, -m * sn, -m * m * cs)
    } else {
        (sn, m * cs, -m * m * sn)
    }
}

impl CircleOps {
    fn new(theta: &[f64]) -> Result<Self> {
        let nt = theta.len();
        let m = 2 * nt;
        let mut nodes = Vec::with_capacity(m);
        nodes.extend_from_slice(theta);
        nodes.extend((0..nt).map(|r| 2.0 * PI - theta[nt - 1 - r]));

        let build = |top_is_cos: bool, deriv: usize| {
            DMatrix::from_fn(m, m, |i, l| {
                let b = trig_basis(l, nt, top_is_cos, nodes[i]);
                match deriv {
                    0 => b.0,
                    1 => b.1,
                    _ => b.2,
                }
            })
        };
        let cond = |v: &DMatrix<f64>| {
            let sv = v.clone().singular_values();
            let max = sv.max();
            let min = sv.min();
            if min > 0.0 {
                max / min
            } else {
                f64::INFINITY
            }
        };
        let v_cos = build(true, 0);
        let v_sin = build(false, 0);
        let top_is_cos = cond(&v_cos) <= cond(&v_sin);
        let v = if top_is_cos { v_cos } else { v_sin };
        let inverse = v
            .try_inverse()
            .ok_or_else(|| Error::InvalidGrid("singular trigonometric Vandermonde matrix".into()))?;
        let d1 = build(top_is_cos, 1) * &inverse;
        let d2 = build(top_is_cos, 2) * &inverse;
        Ok(Self { nodes, d1, d2, inverse, top_is_cos })
    }

    /// Basis values at `s`, by angle-addition recurrence.
    fn basis(&self, s: f64) -> DVector<f64> {
        let m = self.nodes.len();
        let top = m / 2;
        let mut out = DVector::zeros(m);
        out[0] = 1.0;
        let (s1, c1) = s.sin_cos();
        let (mut sn, mut cs) = (0.0, 1.0);
        for k in 1..=top {
            (sn, cs) = (sn * c1 + cs * s1, cs * c1 - sn * s1);
            if k < top {
                out[2 * k - 1] = cs;
                out[2 * k] = sn;
            } else {
                out[2 * k - 1] = if self.top_is_cos { cs } else { sn };
            }
        }
        out
    }
}

impl FourierOps {
    fn new(n_phi: usize, sin_theta: &[f64]) -> Self {
        let mut planner = FftPlanner::new();
        let half = n_phi / 2;
        // Row θ keeps azimuthal arc length comparable to the equator.
        let cutoff = sin_theta
            .iter()
            .map(|&s| ((s * half as f64).ceil() as usize).clamp(1, half - 1))
            .collect();
        Self {
            forward: planner.plan_fft_forward(n_phi),
            inverse: planner.plan_fft_inverse(n_phi),
            cutoff,
        }
    }
}

impl SphereGrid {
    /// Axisymmetric grid on `S^n` with `count` polar nodes.
    pub fn axisymmetric(n: usize, count: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("dimension n = {n} must be at least 2")));
        }
        if count < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "node count {count} is below the minimum {MIN_NODES}"
            )));
        }
        let a = (n as f64 - 2.0) / 2.0;
        let (z, gw) = gauss_gegenbauer(count, a);
        let ring = sphere_area(n - 1);
        let weights: Vec<f64> = gw.iter().map(|w| w * ring).collect();
        let sin_theta: Vec<f64> = z.iter().map(|&z| ((1.0 - z) * (1.0 + z)).sqrt()).collect();
        // θ ascending ⇔ z descending; store rows by ascending θ.
        let rev = |v: &Vec<f64>| v.iter().rev().copied().collect::<Vec<_>>();
        let z = rev(&z);
        let weights = rev(&weights);
        let sin_theta = rev(&sin_theta);
        let theta: Vec<f64> = z.iter().map(|&z| z.acos()).collect();

        let mut directions = vec![0.0; count * (n + 1)];
        for i in 0..count {
            directions[i * (n + 1)] = sin_theta[i];
            directions[i * (n + 1) + n] = z[i];
        }
        let (d1, d2) = barycentric_diff_matrices(&z);
        let bary = barycentric_weights(&z);
        Ok(Self {
            mode: GridMode::Axisymmetric,
            dim: n,
            n_theta: count,
            n_phi: 1,
            theta,
            cos_theta: z,
            sin_theta,
            phi: vec![0.0],
            cos_phi: vec![1.0],
            sin_phi: vec![0.0],
            directions,
            weights,
            ops: DiffOps::Axisymmetric { d1, d2, bary },
        })
    }

    /// Tensor grid on `S²` with `n_theta` polar and `n_phi` azimuthal nodes.
    pub fn full2d(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < MIN_NODES || n_phi < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "node counts ({n_theta}, {n_phi}) are below the minimum {MIN_NODES}"
            )));
        }
        if n_phi % 2 != 0 {
            return Err(Error::InvalidGrid(format!("azimuthal count {n_phi} must be even")));
        }
        let (z, gw) = gauss_gegenbauer(n_theta, 0.0);
        let z: Vec<f64> = z.iter().rev().copied().collect();
        let gw: Vec<f64> = gw.iter().rev().copied().collect();
        let sin_theta: Vec<f64> = z.iter().map(|&z| ((1.0 - z) * (1.0 + z)).sqrt()).collect();
        let theta: Vec<f64> = z.iter().map(|&z| z.acos()).collect();

        let half = n_phi / 2;
        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|j| j as f64 * dphi).collect();
        let mut cos_phi = vec![0.0; n_phi];
        let mut sin_phi = vec![0.0; n_phi];
        for j in 0..half {
            let (s, c) = phi[j].sin_cos();
            cos_phi[j] = c;
            sin_phi[j] = s;
            cos_phi[j + half] = -c;
            sin_phi[j + half] = -s;
        }

        let count = n_theta * n_phi;
        let mut directions = vec![0.0; count * 3];
        let mut weights = vec![0.0; count];
        for i in 0..n_theta {
            for j in 0..n_phi {
                let k = i * n_phi + j;
                directions[3 * k] = sin_theta[i] * cos_phi[j];
                directions[3 * k + 1] = sin_theta[i] * sin_phi[j];
                directions[3 * k + 2] = z[i];
                weights[k] = gw[i] * dphi;
            }
        }
        let circle = Box::new(CircleOps::new(&theta)?);
        let fourier = Box::new(FourierOps::new(n_phi, &sin_theta));
        Ok(Self {
            mode: GridMode::Full2d,
            dim: 2,
            n_theta,
            n_phi,
            theta,
            cos_theta: z,
            sin_theta,
            phi,
            cos_phi,
            sin_phi,
            directions,
            weights,
            ops: DiffOps::Full2d { circle, fourier },
        })
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    /// Sphere dimension `n` (the grid discretizes `S^n ⊂ R^{n+1}`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit vector of node `k` (length `n + 1`).
    pub fn direction(&self, k: usize) -> &[f64] {
        let d = self.dim + 1;
        &self.directions[k * d..(k + 1) * d]
    }

    /// Row-major `(θ, φ)` indices of node `k`.
    pub fn row_col(&self, k: usize) -> (usize, usize) {
        (k / self.n_phi, k % self.n_phi)
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.theta[k / self.n_phi]
    }

    pub fn phi(&self, k: usize) -> f64 {
        self.phi[k % self.n_phi]
    }

    pub fn sin_theta(&self, k: usize) -> f64 {
        self.sin_theta[k / self.n_phi]
    }

    pub fn cos_theta(&self, k: usize) -> f64 {
        self.cos_theta[k / self.n_phi]
    }

    pub fn theta_rows(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi_cols(&self) -> &[f64] {
        &self.phi
    }

    /// Orthonormal tangent frame `(e₁, e₂)` at node `k`; `e₁ = ∂_θ`.
    /// In axisymmetric mode `e₂` is unused and returned as zero.
    pub fn frame(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let (i, j) = self.row_col(k);
        let (st, ct) = (self.sin_theta[i], self.cos_theta[i]);
        let d = self.dim + 1;
        let mut e1 = vec![0.0; d];
        let mut e2 = vec![0.0; d];
        match self.mode {
            GridMode::Axisymmetric => {
                e1[0] = ct;
                e1[d - 1] = -st;
            }
            GridMode::Full2d => {
                let (sp, cp) = (self.sin_phi[j], self.cos_phi[j]);
                e1.copy_from_slice(&[ct * cp, ct * sp, -st]);
                e2.copy_from_slice(&[-sp, cp, 0.0]);
            }
        }
        (e1, e2)
    }

    /// Index of the node at `-x_k`.
    pub fn antipode(&self, k: usize) -> usize {
        let (i, j) = self.row_col(k);
        let i2 = self.n_theta - 1 - i;
        match self.mode {
            GridMode::Axisymmetric => i2,
            GridMode::Full2d => i2 * self.n_phi + (j + self.n_phi / 2) % self.n_phi,
        }
    }

    /// `|S^n|`.
    pub fn total_area(&self) -> f64 {
        sphere_area(self.dim)
    }

    /// Truncate high azimuthal wavenumbers near the poles (full2d only).
    /// Row `θ` keeps `|m| ≤ ⌈sin θ · Nφ/2⌉`, so its shortest resolved arc is
    /// comparable to the equatorial spacing. Applied to time increments, not
    /// to derivatives.
    pub fn filter_poles(&self, field: &mut [f64]) -> Result<()> {
        self.check_len(field)?;
        let DiffOps::Full2d { fourier, .. } = &self.ops else {
            return Ok(());
        };
        let np = self.n_phi;
        let scale = 1.0 / np as f64;
        let mut buf = vec![Complex::new(0.0, 0.0); np];
        for (i, &cut) in fourier.cutoff.iter().enumerate() {
            let row = &mut field[i * np..(i + 1) * np];
            for (b, &v) in buf.iter_mut().zip(row.iter()) {
                *b = Complex::new(v, 0.0);
            }
            fourier.forward.process(&mut buf);
            for (m, b) in buf.iter_mut().enumerate() {
                let k = m.min(np - m);
                if k > cut {
                    *b = Complex::new(0.0, 0.0);
                }
            }
            fourier.inverse.process(&mut buf);
            for (r, b) in row.iter_mut().zip(&buf) {
                *r = b.re * scale;
            }
        }
        Ok(())
    }

    /// Smallest effective node spacing (arc length) after pole filtering.
    pub fn min_spacing(&self) -> f64 {
        let mut h = 2.0 * self.theta[0];
        for w in self.theta.windows(2) {
            h = h.min(w[1] - w[0]);
        }
        if let DiffOps::Full2d { fourier, .. } = &self.ops {
            for (i, &m) in fourier.cutoff.iter().enumerate() {
                h = h.min(PI * self.sin_theta[i] / m as f64);
            }
        }
        h
    }

    pub fn check_len(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.len() {
            return Err(Error::ShapeMismatch { expected: self.len(), got: samples.len() });
        }
        Ok(())
    }

    /// `Σ_k w_k f_k`, compensated, in node order.
    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        self.check_len(field)?;
        let mut acc = CompensatedSum::new();
        for (k, (&w, &f)) in self.weights.iter().zip(field).enumerate() {
            if !f.is_finite() {
                return Err(Error::NonFinite { what: "integrand sample", node: k });
            }
            acc.add(w * f);
        }
        Ok(acc.value())
    }

    /// Integrate a function of the node direction.
    pub fn integrate_fn<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Result<f64> {
        let field: Vec<f64> = (0..self.len()).map(|k| f(self.direction(k))).collect();
        self.integrate(&field)
    }

    /// Gradient and covariant Hessian in the orthonormal frame.
    pub fn covariant_derivatives(&self, u: &[f64]) -> Result<Derivatives> {
        self.check_len(u)?;
        if let Some(k) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "sample", node: k });
        }
        match &self.ops {
            DiffOps::Axisymmetric { d1, d2, .. } => {
                let v = DVector::from_column_slice(u);
                let uz = d1 * &v;
                let uzz = d2 * &v;
                let mut grad = Vec::with_capacity(u.len());
                let mut hess = Vec::with_capacity(u.len());
                for i in 0..u.len() {
                    let (st, ct) = (self.sin_theta[i], self.cos_theta[i]);
                    let du = -st * uz[i];
                    let ddu = st * st * uzz[i] - ct * uz[i];
                    grad.push([du, 0.0]);
                    hess.push([ddu, -ct * uz[i], 0.0]);
                }
                Ok(Derivatives { grad, hess })
            }
            DiffOps::Full2d { circle, fourier } => Ok(self.full2d_derivatives(circle, fourier, u)),
        }
    }

    fn phi_derivatives(&self, fourier: &FourierOps, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let np = self.n_phi;
        let half = np / 2;
        let mut first = vec![0.0; u.len()];
        let mut second = vec![0.0; u.len()];
        let mut buf = vec![Complex::new(0.0, 0.0); np];
        let mut buf2 = vec![Complex::new(0.0, 0.0); np];
        let scale = 1.0 / np as f64;
        for i in 0..self.n_theta {
            let row = &u[i * np..(i + 1) * np];
            for (b, &v) in buf.iter_mut().zip(row) {
                *b = Complex::new(v, 0.0);
            }
            fourier.forward.process(&mut buf);
            for m in 0..np {
                let k = if m <= half { m as f64 } else { m as f64 - np as f64 };
                if m != half {
                    let c = buf[m];
                    buf2[m] = Complex::new(-k * k * c.re, -k * k * c.im);
                    buf[m] = Complex::new(-k * c.im, k * c.re);
                } else {
                    buf[m] = Complex::new(0.0, 0.0);
                    buf2[m] = Complex::new(0.0, 0.0);
                }
            }
            fourier.inverse.process(&mut buf);
            fourier.inverse.process(&mut buf2);
            for j in 0..np {
                first[i * np + j] = buf[j].re * scale;
                second[i * np + j] = buf2[j].re * scale;
            }
        }
        (first, second)
    }

    /// Arrange a field as great circles: column `j < nφ/2` holds meridian `j`
    /// followed by meridian `j + nφ/2` traversed from south to north.
    fn to_circles(&self, u: &[f64]) -> DMatrix<f64> {
        let (nt, np) = (self.n_theta, self.n_phi);
        let half = np / 2;
        DMatrix::from_fn(2 * nt, half, |r, j| {
            if r < nt {
                u[r * np + j]
            } else {
                u[(2 * nt - 1 - r) * np + j + half]
            }
        })
    }

    /// Differentiate circle data in `s` and map back to `∂_θ` per node.
    fn from_circles(&self, data: &DMatrix<f64>, odd: bool) -> Vec<f64> {
        let (nt, np) = (self.n_theta, self.n_phi);
        let half = np / 2;
        let mut out = vec![0.0; nt * np];
        for j in 0..half {
            for r in 0..2 * nt {
                if r < nt {
                    out[r * np + j] = data[(r, j)];
                } else {
                    let v = data[(r, j)];
                    out[(2 * nt - 1 - r) * np + j + half] = if odd { -v } else { v };
                }
            }
        }
        out
    }

    fn full2d_derivatives(&self, circle: &CircleOps, fourier: &FourierOps, u: &[f64]) -> Derivatives {
        let (u_phi, u_phiphi) = self.phi_derivatives(fourier, u);
        let circ = self.to_circles(u);
        let u_theta = self.from_circles(&(&circle.d1 * &circ), true);
        let u_thetatheta = self.from_circles(&(&circle.d2 * &circ), false);
        let u_thetaphi = self.from_circles(&(&circle.d1 * self.to_circles(&u_phi)), true);

        let mut grad = Vec::with_capacity(u.len());
        let mut hess = Vec::with_capacity(u.len());
        for k in 0..u.len() {
            let i = k / self.n_phi;
            let (st, ct) = (self.sin_theta[i], self.cos_theta[i]);
            let cot = ct / st;
            grad.push([u_theta[k], u_phi[k] / st]);
            hess.push([
                u_thetatheta[k],
                u_phiphi[k] / (st * st) + u_theta[k] * cot,
                (u_thetaphi[k] - u_phi[k] * cot) / st,
            ]);
        }
        Derivatives { grad, hess }
    }

    /// Spectral interpolant of nodal samples, evaluable at any direction.
    pub fn interpolant(&self, u: &[f64]) -> Result<SphereInterpolant> {
        self.check_len(u)?;
        match &self.ops {
            DiffOps::Axisymmetric { bary, .. } => Ok(SphereInterpolant::Axisymmetric {
                z: self.cos_theta.clone(),
                bary: bary.clone(),
                values: u.to_vec(),
            }),
            DiffOps::Full2d { circle, fourier } => {
                let (nt, np) = (self.n_theta, self.n_phi);
                let half = np / 2;
                // Real Fourier coefficients per row.
                let mut cos_coef = DMatrix::<f64>::zeros(nt, half + 1);
                let mut sin_coef = DMatrix::<f64>::zeros(nt, half + 1);
                let mut buf = vec![Complex::new(0.0, 0.0); np];
                for i in 0..nt {
                    for j in 0..np {
                        buf[j] = Complex::new(u[i * np + j], 0.0);
                    }
                    fourier.forward.process(&mut buf);
                    for m in 0..=half {
                        let scale = if m == 0 || m == half { 1.0 } else { 2.0 };
                        cos_coef[(i, m)] = scale * buf[m].re / np as f64;
                        sin_coef[(i, m)] = -scale * buf[m].im / np as f64;
                    }
                }
                let extend = |coef: &DMatrix<f64>| {
                    DMatrix::from_fn(2 * nt, half + 1, |r, m| {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        if r < nt {
                            coef[(r, m)]
                        } else {
                            sign * coef[(2 * nt - 1 - r, m)]
                        }
                    })
                };
                let cos_trig = &circle.inverse * extend(&cos_coef);
                let sin_trig = &circle.inverse * extend(&sin_coef);
                Ok(SphereInterpolant::Full2d {
                    circle: circle.clone(),
                    cos_trig: cos_trig.transpose(),
                    sin_trig: sin_trig.transpose(),
                })
            }
        }
    }

    /// Mean of a field under the quadrature measure.
    pub fn mean(&self, field: &[f64]) -> Result<f64> {
        Ok(self.integrate(field)? / compensated_sum(self.weights.iter().copied()))
    }
}

/// Global spectral interpolant on the sphere.
#[derive(Clone)]
pub enum SphereInterpolant {
    #[doc(hidden)]
    Axisymmetric {
        z: Vec<f64>,
        bary: Vec<f64>,
        values: Vec<f64>,
    },
    Full2d {
        circle: Box<CircleOps>,
        /// `(nφ/2 + 1) × 2nθ` trigonometric coefficients per azimuthal mode.
        cos_trig: DMatrix<f64>,
        sin_trig: DMatrix<f64>,
    },
}

impl fmt::Debug for SphereInterpolant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Axisymmetric { values, .. } => write!(f, "SphereInterpolant::Axisymmetric({})", values.len()),
            Self::Full2d { cos_trig, .. } => write!(f, "SphereInterpolant::Full2d({}x{})", cos_trig.nrows(), cos_trig.ncols()),
        }
    }
}

impl SphereInterpolant {
    /// Value at unit direction `y`. Axisymmetric interpolants read the polar
    /// angle from the last component.
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Self::Axisymmetric { z, bary, values } => {
                let c = y[y.len() - 1].clamp(-1.0, 1.0);
                barycentric_eval(z, bary, values, c).0
            }
            Self::Full2d { .. } => {
                let theta = y[2].clamp(-1.0, 1.0).acos();
                let phi = y[1].atan2(y[0]);
                self.eval_angles(theta, phi)
            }
        }
    }

    /// Value at polar angle `θ` (any real; negative values cross the pole)
    /// and azimuth `φ`.
    pub fn eval_angles(&self, theta: f64, phi: f64) -> f64 {
        match self {
            Self::Axisymmetric { z, bary, values } => barycentric_eval(z, bary, values, theta.cos()).0,
            Self::Full2d { circle, cos_trig, sin_trig } => {
                let s = theta.rem_euclid(2.0 * PI);
                let basis = circle.basis(s);
                let a = cos_trig * &basis;
                let b = sin_trig * &basis;
                let (s1, c1) = phi.sin_cos();
                let (mut sn, mut cs) = (0.0, 1.0);
                let mut acc = a[0];
                for m in 1..a.len() {
                    (sn, cs) = (sn * c1 + cs * s1, cs * c1 - sn * s1);
                    acc += a[m] * cs + b[m] * sn;
                }
                acc
            }
        }
    }
}
