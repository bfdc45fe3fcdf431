//! The integrand bundle `(φ, G, β, n)`.
//!
//! The power family is configured the way it is usually written:
//! `φ(x, s)^{n/β} = f(x) s^{1-p}` and `G(y)^{n/β} = |y|^{q-n-1}`. The `β/n`
//! power is applied here. Expression-backed integrands give `φ` and `G`
//! directly.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::grid::SphereGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum Phi {
    /// `φ^{n/β} = f(x) s^{1-p}` with `f` over `x1..x{n+1}`.
    Power { f: Expr, p: f64 },
    /// `φ` over `x1..x{n+1}, s`.
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GFun {
    /// `G^{n/β} = |y|^{q-n-1}`.
    Power { q: f64 },
    /// `G` over `y1..y{n+1}, r` with `r = |y|`.
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandSpec {
    n: usize,
    beta: f64,
    phi: Phi,
    g: GFun,
    even_claimed: bool,
}

/// Variable names for `φ`: `x1..x{n+1}, s`.
pub fn phi_variables(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n + 1).map(|i| format!("x{i}")).collect();
    v.push("s".into());
    v
}

/// Variable names for `f` in the power family: `x1..x{n+1}`.
pub fn direction_variables(n: usize) -> Vec<String> {
    (1..=n + 1).map(|i| format!("x{i}")).collect()
}

/// Variable names for `G`: `y1..y{n+1}, r`.
pub fn g_variables(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n + 1).map(|i| format!("y{i}")).collect();
    v.push("r".into());
    v
}

/// Range of support values and radii sampled when probing an integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRange {
    pub lo: f64,
    pub hi: f64,
    pub directions: usize,
    pub seed: u64,
}

impl Default for ProbeRange {
    fn default() -> Self {
        Self { lo: 0.25, hi: 4.0, directions: 1000, seed: 0x5eed }
    }
}

impl IntegrandSpec {
    /// Build and probe with [`ProbeRange::default`].
    pub fn new(n: usize, beta: f64, phi: Phi, g: GFun, even_claimed: bool) -> Result<Self> {
        Self::with_probe(n, beta, phi, g, even_claimed, ProbeRange::default())
    }

    pub fn with_probe(
        n: usize,
        beta: f64,
        phi: Phi,
        g: GFun,
        even_claimed: bool,
        probe: ProbeRange,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Integrand(format!("dimension n must be at least 2 (got {n})")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::NonPositiveValue("beta", beta));
        }
        check_variables("phi", &phi_expr_vars(&phi), &match phi {
            Phi::Power { .. } => direction_variables(n),
            Phi::Expr(_) => phi_variables(n),
        })?;
        if let Phi::Power { p, .. } = phi {
            if !p.is_finite() {
                return Err(Error::Integrand(format!("p must be finite (got {p})")));
            }
        }
        match &g {
            GFun::Power { q } if !q.is_finite() => {
                return Err(Error::Integrand(format!("q must be finite (got {q})")));
            }
            GFun::Expr(e) => check_variables("G", e.variables(), &g_variables(n))?,
            _ => {}
        }
        let spec = Self { n, beta, phi, g, even_claimed };
        spec.probe(probe)?;
        Ok(spec)
    }

    /// Power family: `φ^{n/β} = f(x) s^{1-p}`, `G^{n/β} = r^{q-n-1}`.
    pub fn power(n: usize, beta: f64, f: Expr, p: f64, q: f64, even_claimed: bool) -> Result<Self> {
        Self::new(n, beta, Phi::Power { f, p }, GFun::Power { q }, even_claimed)
    }

    /// Power family with constant `f ≡ 1`.
    pub fn isotropic_power(n: usize, beta: f64, p: f64, q: f64) -> Result<Self> {
        let f = parse("1", &direction_variables(n))?;
        Self::power(n, beta, f, p, q, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn g(&self) -> &GFun {
        &self.g
    }

    pub fn even_claimed(&self) -> bool {
        self.even_claimed
    }

    /// `(p, q)` if both halves are from the power family.
    pub fn power_exponents(&self) -> Option<(f64, f64)> {
        match (&self.phi, &self.g) {
            (Phi::Power { p, .. }, GFun::Power { q }) => Some((*p, *q)),
            _ => None,
        }
    }

    /// `β / n`.
    pub fn ratio(&self) -> f64 {
        self.beta / self.n as f64
    }

    fn check_direction(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n + 1 {
            return Err(Error::ShapeMismatch { expected: self.n + 1, got: x.len() });
        }
        Ok(())
    }

    /// `φ(x, s)`.
    pub fn eval_phi(&self, x: &[f64], s: f64) -> Result<f64> {
        self.check_direction(x)?;
        let f = match &self.phi {
            Phi::Power { f, .. } => Some(f.eval(x)?),
            Phi::Expr(_) => None,
        };
        self.phi_from_factor(x, f, s)
    }

    /// `φ(x, s)^{-n/β}`, the integrand of the monotone functional.
    pub fn eval_phi_neg_power(&self, x: &[f64], s: f64) -> Result<f64> {
        self.check_direction(x)?;
        match &self.phi {
            Phi::Power { f, p } => {
                check_support(s)?;
                let f = positive("f(x)", f.eval(x)?)?;
                finite(s.powf(p - 1.0) / f)
            }
            Phi::Expr(_) => finite(self.eval_phi(x, s)?.powf(-1.0 / self.ratio())),
        }
    }

    /// `φ` with `f(x)` supplied (power family) to avoid re-evaluating it.
    fn phi_from_factor(&self, x: &[f64], f: Option<f64>, s: f64) -> Result<f64> {
        check_support(s)?;
        let value = match (&self.phi, f) {
            (Phi::Power { p, .. }, Some(f)) => {
                let f = positive("f(x)", f)?;
                (f * s.powf(1.0 - p)).powf(self.ratio())
            }
            (Phi::Expr(e), _) => {
                let mut vars = x.to_vec();
                vars.push(s);
                e.eval(&vars)?
            }
            (Phi::Power { f, .. }, None) => return self.phi_from_factor(x, Some(f.eval(x)?), s),
        };
        positive("phi", finite(value)?)
    }

    /// `G(y)`.
    pub fn eval_g(&self, y: &[f64]) -> Result<f64> {
        self.check_direction(y)?;
        let r = norm(y);
        if !(r > 0.0) {
            return Err(Error::Integrand("G evaluated at the zero vector".into()));
        }
        let value = match &self.g {
            GFun::Power { q } => r.powf((q - self.n as f64 - 1.0) * self.ratio()),
            GFun::Expr(e) => {
                let mut vars = y.to_vec();
                vars.push(r);
                e.eval(&vars)?
            }
        };
        positive("G", finite(value)?)
    }

    /// `G(y)^{n/β}`.
    pub fn eval_g_power(&self, y: &[f64]) -> Result<f64> {
        match &self.g {
            GFun::Power { q } => {
                self.check_direction(y)?;
                let r = norm(y);
                if !(r > 0.0) {
                    return Err(Error::Integrand("G evaluated at the zero vector".into()));
                }
                finite(r.powf(q - self.n as f64 - 1.0))
            }
            GFun::Expr(_) => finite(self.eval_g(y)?.powf(1.0 / self.ratio())),
        }
    }

    /// `φ(x, r) G(r x) r^β`, the quantity bounded in the barrier condition.
    pub fn barrier_function(&self, x: &[f64], r: f64) -> Result<f64> {
        let y: Vec<f64> = x.iter().map(|c| r * c).collect();
        finite(self.eval_phi(x, r)? * self.eval_g(&y)? * r.powf(self.beta))
    }

    /// Same integrand with the power family rewritten as expressions, for
    /// cross-checking the closed-form path.
    pub fn expression_form(&self) -> Result<Self> {
        let n = self.n;
        let r = self.ratio();
        let phi = match &self.phi {
            Phi::Power { f, p } => {
                let src = format!("pow(({f})*pow(s, {:?}), {r:?})", 1.0 - p);
                Phi::Expr(parse(&src, &phi_variables(n))?)
            }
            other => other.clone(),
        };
        let g = match &self.g {
            GFun::Power { q } => {
                let src = format!("pow(r, {:?})", (q - n as f64 - 1.0) * r);
                GFun::Expr(parse(&src, &g_variables(n))?)
            }
            other => other.clone(),
        };
        Ok(Self { n, beta: self.beta, phi, g, even_claimed: self.even_claimed })
    }

    /// Positivity (and evenness when claimed) on random directions with
    /// support values and radii spread log-uniformly over the range.
    pub fn probe(&self, range: ProbeRange) -> Result<()> {
        if !(range.lo > 0.0 && range.hi >= range.lo) {
            return Err(Error::Integrand(format!("bad probe range [{}, {}]", range.lo, range.hi)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(range.seed);
        let d = self.n + 1;
        let (llo, lhi) = (range.lo.ln(), range.hi.ln());
        for i in 0..range.directions {
            let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = norm(&x);
            x.iter_mut().for_each(|c| *c /= r);
            let t = if range.directions > 1 { i as f64 / (range.directions - 1) as f64 } else { 0.5 };
            let s = (llo + t * (lhi - llo)).exp();
            let minus: Vec<f64> = x.iter().map(|c| -c).collect();
            let y: Vec<f64> = x.iter().map(|c| s * c).collect();
            let my: Vec<f64> = y.iter().map(|c| -c).collect();
            let at = |e: Error, what: &str, v: &[f64]| {
                Error::Integrand(format!("{what} fails on probe {v:?} with s = r = {s}: {e}"))
            };
            let a = self.eval_phi(&x, s).map_err(|e| at(e, "phi", &x))?;
            let g = self.eval_g(&y).map_err(|e| at(e, "G", &y))?;
            if self.even_claimed {
                let b = self.eval_phi(&minus, s).map_err(|e| at(e, "phi", &minus))?;
                let h = self.eval_g(&my).map_err(|e| at(e, "G", &my))?;
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::Integrand(format!(
                        "phi claimed even but phi(x,s) = {a} and phi(-x,s) = {b} at x = {x:?}, s = {s}"
                    )));
                }
                if (g - h).abs() > 1e-12 * g.abs().max(1.0) {
                    return Err(Error::Integrand(format!(
                        "G claimed even but G(y) = {g} and G(-y) = {h} at y = {y:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Cached per-node evaluator on a grid.
    pub fn on_grid<'a>(&'a self, grid: &'a SphereGrid) -> Result<NodeIntegrand<'a>> {
        if grid.dim() != self.n {
            return Err(Error::Integrand(format!(
                "integrand dimension {} does not match grid dimension {}",
                self.n,
                grid.dim()
            )));
        }
        let factors = match &self.phi {
            Phi::Power { f, .. } => Some(
                (0..grid.len())
                    .map(|k| {
                        f.eval(grid.direction(k))
                            .map_err(Error::from)
                            .and_then(|v| positive("f(x)", v))
                            .map_err(|e| Error::IntegrandAt { node: k, source: Box::new(e) })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Phi::Expr(_) => None,
        };
        Ok(NodeIntegrand { spec: self, grid, factors })
    }
}

fn phi_expr_vars(phi: &Phi) -> Vec<String> {
    match phi {
        Phi::Power { f, .. } => f.variables().to_vec(),
        Phi::Expr(e) => e.variables().to_vec(),
    }
}

fn check_variables(what: &str, got: &[String], expected: &[String]) -> Result<()> {
    if got != expected {
        return Err(Error::Integrand(format!(
            "{what} expression must be declared over ({}), got ({})",
            expected.join(", "),
            got.join(", ")
        )));
    }
    Ok(())
}

/// Integrand evaluation at grid nodes, with `f(x_k)` cached for the power family.
pub struct NodeIntegrand<'a> {
    spec: &'a IntegrandSpec,
    grid: &'a SphereGrid,
    factors: Option<Vec<f64>>,
}

impl NodeIntegrand<'_> {
    pub fn spec(&self) -> &IntegrandSpec {
        self.spec
    }

    fn wrap<T>(k: usize, r: Result<T>) -> Result<T> {
        r.map_err(|e| Error::IntegrandAt { node: k, source: Box::new(e) })
    }

    /// `φ(x_k, s)`.
    pub fn phi(&self, k: usize, s: f64) -> Result<f64> {
        let f = self.factors.as_ref().map(|v| v[k]);
        Self::wrap(k, self.spec.phi_from_factor(self.grid.direction(k), f, s))
    }

    /// `φ(x_k, s)^{-n/β}`.
    pub fn phi_neg_power(&self, k: usize, s: f64) -> Result<f64> {
        match (&self.spec.phi, &self.factors) {
            (Phi::Power { p, .. }, Some(f)) => {
                Self::wrap(k, check_support(s).and_then(|_| finite(s.powf(p - 1.0) / f[k])))
            }
            _ => Self::wrap(k, self.spec.eval_phi_neg_power(self.grid.direction(k), s)),
        }
    }

    /// `G(y)` for the boundary point of node `k`.
    pub fn g(&self, k: usize, y: &[f64]) -> Result<f64> {
        Self::wrap(k, self.spec.eval_g(y))
    }

    /// `G(y)^{n/β}` for the boundary point of node `k`.
    pub fn g_power(&self, k: usize, y: &[f64]) -> Result<f64> {
        Self::wrap(k, self.spec.eval_g_power(y))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn check_support(s: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::NonPositiveValue("support value", s));
    }
    Ok(())
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Integrand(format!("non-finite value {v}")))
    }
}

fn positive(what: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonPositiveValue(what, v))
    }
}

/// Conjugate exponent `q*` of the power family.
pub fn qstar(q: f64, n: usize) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Integrand(format!("q* needs q > 0 (got {q})")));
    }
    let n = n as f64;
    Ok(if q >= n + 1.0 {
        q / (q - n)
    } else if q > 1.0 {
        n * q / (q - 1.0)
    } else {
        f64::INFINITY
    })
}

/// Which existence results apply to the power pair `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PowerCases {
    /// `p > q`: the unnormalized flow has barriers.
    pub barrier: bool,
    /// `p > 0 ≥ q` or `p ≥ 0 > q`: general (not necessarily even) data.
    pub general: bool,
    /// `p > -1`, or `q < 1`, or `-q* < p < 0 < q`: even data.
    pub even: bool,
}

impl PowerCases {
    pub fn is_empty(&self) -> bool {
        !(self.barrier || self.general || self.even)
    }
}

impl fmt::Display for PowerCases {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.barrier, "barrier"), (self.general, "general"), (self.even, "even")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

pub fn classify_power_case(p: f64, q: f64, n: usize) -> PowerCases {
    let even_window = q > 0.0 && qstar(q, n).is_ok_and(|qs| -qs < p && p < 0.0);
    PowerCases {
        barrier: p > q,
        general: (p > 0.0 && q <= 0.0) || (p >= 0.0 && q < 0.0),
        even: p > -1.0 || q < 1.0 || even_window,
    }
}
