//! One-dimensional Gauss rules, spectral differentiation matrices and
//! compensated summation.

use nalgebra::{DMatrix, SymmetricEigen};

/// Neumaier-compensated running sum. Order of `add` calls fixes the result.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// `∫_{-1}^{1} (1 - z²)^a dz`, for `a` a non-negative integer or half-integer.
pub fn gegenbauer_mass(a: f64) -> f64 {
    let twice = (2.0 * a).round() as i64;
    debug_assert!(twice >= 0 && ((2.0 * a) - twice as f64).abs() < 1e-12);
    // μ(a) = μ(a - 1) · 2a / (2a + 1), μ(0) = 2, μ(1/2) = π/2.
    let (mut mass, mut current) = if twice % 2 == 0 {
        (2.0, 0.0)
    } else {
        (std::f64::consts::FRAC_PI_2, 0.5)
    };
    while current + 0.5 < a {
        current += 1.0;
        mass *= 2.0 * current / (2.0 * current + 1.0);
    }
    mass
}

/// Surface area of the unit sphere `S^m ⊂ R^{m+1}`.
pub fn sphere_area(m: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^m| = 2π/(m-1) |S^{m-2}|
    let (mut area, mut k) = if m % 2 == 0 { (2.0, 0usize) } else { (2.0 * PI, 1usize) };
    while k < m {
        k += 2;
        area *= 2.0 * PI / (k as f64 - 1.0);
    }
    area
}

fn jacobi_offdiag(j: usize, a: f64) -> f64 {
    let j = j as f64;
    (j * (j + 2.0 * a) / ((2.0 * j + 2.0 * a + 1.0) * (2.0 * j + 2.0 * a - 1.0))).sqrt()
}

/// Gauss rule for the weight `(1 - z²)^a` on `(-1, 1)` (Gauss–Gegenbauer;
/// `a = 0` is Gauss–Legendre). Nodes ascend and are exactly antisymmetric.
pub fn gauss_gegenbauer(count: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(count >= 1);
    let mass = gegenbauer_mass(a);
    let offdiag: Vec<f64> = (1..count).map(|j| jacobi_offdiag(j, a)).collect();

    let mut jacobi = DMatrix::<f64>::zeros(count, count);
    for (i, &b) in offdiag.iter().enumerate() {
        jacobi[(i, i + 1)] = b;
        jacobi[(i + 1, i)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    // Orthonormal recurrence: p_{j+1} = (z p_j - b_j p_{j-1}) / b_{j+1}.
    let orthonormal = |z: f64| -> (f64, f64, f64) {
        // returns (p_{N}, p_{N}', Σ_{j<N} p_j²), with p_N unnormalised by b_N
        let mut p_prev = 0.0;
        let mut p = 1.0 / mass.sqrt();
        let mut dp_prev = 0.0;
        let mut dp = 0.0;
        let mut sum_sq = p * p;
        for j in 0..count {
            let b_next = if j + 1 < count { offdiag[j] } else { 1.0 };
            let b_curr = if j >= 1 { offdiag[j - 1] } else { 0.0 };
            let p_next = (z * p - b_curr * p_prev) / b_next;
            let dp_next = (p + z * dp - b_curr * dp_prev) / b_next;
            p_prev = p;
            p = p_next;
            dp_prev = dp;
            dp = dp_next;
            if j + 1 < count {
                sum_sq += p * p;
            }
        }
        (p, dp, sum_sq)
    };

    for z in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, dp, _) = orthonormal(*z);
            let step = p / dp;
            *z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }

    for i in 0..count / 2 {
        let j = count - 1 - i;
        let m = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -m;
        nodes[j] = m;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes.iter().map(|&z| 1.0 / orthonormal(z).2).collect();
    for i in 0..count / 2 {
        let j = count - 1 - i;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    // Remove the last ulp-level disagreement with the exact mass.
    let total = compensated_sum(weights.iter().copied());
    for w in weights.iter_mut() {
        *w *= mass / total;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(count: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (z, w) = gauss_gegenbauer(count, 0.0);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    (
        z.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| half * t).collect(),
    )
}

/// Fixed-order Gauss–Legendre table reused by the adaptive integrator.
#[derive(Debug, Clone)]
pub struct GaussTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussTable {
    pub fn new(count: usize) -> Self {
        let (nodes, weights) = gauss_gegenbauer(count, 0.0);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = CompensatedSum::new();
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * z));
        }
        half * acc.value()
    }

    /// Adaptive bisection on `[lo, hi]` until the panel estimate and its two
    /// halves agree to `tol` (absolute, scaled by the running magnitude).
    /// Returns `None` if the integral fails to settle or becomes non-finite.
    pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        tol: f64,
        max_depth: usize,
        mut f: F,
    ) -> Option<f64> {
        if lo == hi {
            return Some(0.0);
        }
        let whole = self.integrate(lo, hi, &mut f);
        let value = self.adapt(lo, hi, whole, tol, max_depth, &mut f)?;
        value.is_finite().then_some(value)
    }

    fn adapt<F: FnMut(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        whole: f64,
        tol: f64,
        depth: usize,
        f: &mut F,
    ) -> Option<f64> {
        let mid = 0.5 * (lo + hi);
        let left = self.integrate(lo, mid, &mut *f);
        let right = self.integrate(mid, hi, &mut *f);
        let refined = left + right;
        if !refined.is_finite() {
            return None;
        }
        if (refined - whole).abs() <= tol * refined.abs().max(1.0) {
            return Some(refined);
        }
        if depth == 0 {
            return None;
        }
        let l = self.adapt(lo, mid, left, tol, depth - 1, f)?;
        let r = self.adapt(mid, hi, right, tol, depth - 1, f)?;
        Some(l + r)
    }
}

/// Barycentric weights for polynomial interpolation on distinct nodes,
/// computed in log form to avoid over/underflow, scaled to max modulus 1.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut logs = vec![0.0; n];
    let mut signs = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                let d = nodes[j] - nodes[k];
                logs[j] -= d.abs().ln();
                if d < 0.0 {
                    signs[j] = -signs[j];
                }
            }
        }
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    logs.iter()
        .zip(&signs)
        .map(|(l, s)| s * (l - top).exp())
        .collect()
}

/// First and second polynomial differentiation matrices on arbitrary nodes
/// (barycentric form; diagonals by the negative-sum trick).
pub fn barycentric_diff_matrices(nodes: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = nodes.len();
    let w = barycentric_weights(nodes);
    let mut d1 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d1[(i, j)] = v;
                diag -= v;
            }
        }
        d1[(i, i)] = diag;
    }
    let mut d2 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = 2.0 * d1[(i, j)] * (d1[(i, i)] - 1.0 / (nodes[i] - nodes[j]));
                d2[(i, j)] = v;
                diag -= v;
            }
        }
        d2[(i, i)] = diag;
    }
    (d1, d2)
}

/// Evaluate the barycentric interpolant and its first two derivatives at `z`.
pub fn barycentric_eval(nodes: &[f64], weights: &[f64], values: &[f64], z: f64) -> (f64, f64, f64) {
    // Exact node hit: fall back to differentiating through a nearby offset
    // would lose accuracy, so use the derivative-matrix row formulas instead.
    if let Some(i) = nodes.iter().position(|&x| x == z) {
        let mut d1 = 0.0;
        let mut diag1 = 0.0;
        let mut row = Vec::with_capacity(nodes.len());
        for j in 0..nodes.len() {
            if j != i {
                let v = (weights[j] / weights[i]) / (nodes[i] - nodes[j]);
                row.push((j, v));
                diag1 -= v;
                d1 += v * values[j];
            }
        }
        d1 += diag1 * values[i];
        let mut d2 = 0.0;
        let mut diag2 = 0.0;
        for &(j, v) in &row {
            let s = 2.0 * v * (diag1 - 1.0 / (nodes[i] - nodes[j]));
            diag2 -= s;
            d2 += s * values[j];
        }
        d2 += diag2 * values[i];
        return (values[i], d1, d2);
    }
    // p(z) = N/D with N = Σ c_j f_j, D = Σ c_j, c_j = w_j/(z - z_j).
    let (mut n0, mut n1, mut n2) = (0.0, 0.0, 0.0);
    let (mut d0, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for ((&x, &w), &f) in nodes.iter().zip(weights).zip(values) {
        let r = 1.0 / (z - x);
        let c0 = w * r;
        let c1 = -c0 * r;
        let c2 = -2.0 * c1 * r;
        n0 += c0 * f;
        n1 += c1 * f;
        n2 += c2 * f;
        d0 += c0;
        d1 += c1;
        d2 += c2;
    }
    let p = n0 / d0;
    let dp = (n1 - p * d1) / d0;
    let ddp = (n2 - 2.0 * dp * d1 - p * d2) / d0;
    (p, dp, ddp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn gegenbauer_masses() {
        assert_eq!(gegenbauer_mass(0.0), 2.0);
        assert!((gegenbauer_mass(0.5) - PI / 2.0).abs() < 1e-15);
        assert!((gegenbauer_mass(1.0) - 4.0 / 3.0).abs() < 1e-15);
        assert!((gegenbauer_mass(1.5) - 3.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_rule_is_exact_to_degree_2n_minus_1() {
        let n = 12;
        let (z, w) = gauss_gegenbauer(n, 0.0);
        for deg in 0..(2 * n) {
            let got: f64 = z.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - exact).abs() < 1e-14, "deg {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn half_integer_rule_integrates_semicircle_moments() {
        let (z, w) = gauss_gegenbauer(20, 0.5);
        // ∫ z² sqrt(1-z²) = π/8
        let got: f64 = z.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((got - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_are_antisymmetric() {
        let (z, w) = gauss_gegenbauer(33, 0.0);
        for i in 0..33 {
            assert_eq!(z[i], -z[32 - i]);
            assert_eq!(w[i], w[32 - i]);
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let table = GaussTable::new(10);
        let v = table.integrate_adaptive(0.0, 1.0, 1e-12, 40, |x| x.sqrt()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn barycentric_derivatives_of_polynomial() {
        let (z, _) = gauss_gegenbauer(10, 0.0);
        let (d1, d2) = barycentric_diff_matrices(&z);
        let f: Vec<f64> = z.iter().map(|x| x.powi(5) - 2.0 * x * x).collect();
        for i in 0..10 {
            let g1: f64 = (0..10).map(|j| d1[(i, j)] * f[j]).sum();
            let g2: f64 = (0..10).map(|j| d2[(i, j)] * f[j]).sum();
            let x = z[i];
            assert!((g1 - (5.0 * x.powi(4) - 4.0 * x)).abs() < 1e-12);
            assert!((g2 - (20.0 * x.powi(3) - 4.0)).abs() < 1e-11);
        }
        let w = barycentric_weights(&z);
        let (p, dp, ddp) = barycentric_eval(&z, &w, &f, 0.3);
        assert!((p - (0.3f64.powi(5) - 0.18)).abs() < 1e-13);
        assert!((dp - (5.0 * 0.3f64.powi(4) - 1.2)).abs() < 1e-12);
        assert!((ddp - (20.0 * 0.027 - 4.0)).abs() < 1e-11);
        let (p, dp, ddp) = barycentric_eval(&z, &w, &f, z[3]);
        let x = z[3];
        assert!((p - f[3]).abs() < 1e-15);
        assert!((dp - (5.0 * x.powi(4) - 4.0 * x)).abs() < 1e-12);
        assert!((ddp - (20.0 * x.powi(3) - 4.0)).abs() < 1e-11);
    }
}
