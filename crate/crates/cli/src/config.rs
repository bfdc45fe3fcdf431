//! Run configuration files.
//!
//! ```toml
//! [problem]
//! n = 2
//! beta = 2.0
//! mode = "normalized"        # or "barrier"
//! phi = "power"              # or an expression in x1..x{n+1}, s
//! G = "power"                # or an expression in y1..y{n+1}, r
//! p = 4.0
//! q = 2.0
//! f_expr = "1 + 0.2*x3^2"    # f(x) of the power family
//! even = true
//!
//! [grid]
//! mode = "full2d"            # or "axisymmetric"
//! N_theta = 64
//! N_phi = 64
//!
//! [initial]
//! shape = "ellipsoid"        # sphere | ellipsoid | perturbed | file
//! semi_axes = [1.2, 1.0, 0.9]
//! ```

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::export::{read_support_csv, SupportRow};
use orlicz_flow::expr::parse;
use orlicz_flow::flow::{FlowConfig, FlowMode, GridSpec, InitialBody, MonitorSettings, Stepping};
use orlicz_flow::integrand::{direction_variables, g_variables, phi_variables, GFun, IntegrandSpec, Phi};
use orlicz_flow::monitors::{JOrientation, VOrientation};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("[{section}] {message}")]
    Section { section: &'static str, message: String },
    #[error("[{section}] {key}: {message}")]
    Key { section: &'static str, key: &'static str, message: String },
}

fn key_err(section: &'static str, key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Key { section, key, message: message.into() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    n: Option<usize>,
    beta: Option<f64>,
    mode: Option<String>,
    phi: Option<String>,
    #[serde(rename = "G")]
    g: Option<String>,
    p: Option<f64>,
    q: Option<f64>,
    f_expr: Option<String>,
    even: Option<bool>,
    r1: Option<f64>,
    r2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    mode: Option<String>,
    #[serde(rename = "N_theta")]
    n_theta: Option<usize>,
    #[serde(rename = "N_phi")]
    n_phi: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    shape: Option<String>,
    radius: Option<f64>,
    semi_axes: Option<Vec<f64>>,
    perturbation: Option<String>,
    amplitude: Option<f64>,
    even: Option<bool>,
    path: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SteppingSection {
    dt_init: Option<f64>,
    dt_max: Option<f64>,
    cfl_factor: Option<f64>,
    stop_tol: Option<f64>,
    max_steps: Option<usize>,
    t_end: Option<f64>,
    convexity_floor: Option<f64>,
    project_even: Option<bool>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct MonitorSection {
    #[serde(rename = "C0")]
    c0: Option<f64>,
    #[serde(rename = "R")]
    r: Option<f64>,
    cadence: Option<usize>,
    s_max: Option<f64>,
    #[serde(rename = "J_orientation")]
    j_orientation: Option<String>,
    #[serde(rename = "V_orientation")]
    v_orientation: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    directory: Option<PathBuf>,
    formats: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub obj: bool,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub flow: FlowConfig,
    /// Rows of an `initial.shape = "file"` body, checked against the grid when it is built.
    pub initial_rows: Option<Vec<SupportRow>>,
    pub output_dir: PathBuf,
    pub formats: Formats,
}

const SECTIONS: [&str; 6] = ["problem", "grid", "initial", "stepping", "monitor", "output"];

fn section<T: DeserializeOwned>(
    table: &mut toml::Table,
    name: &'static str,
    required: bool,
) -> Result<Option<T>, ConfigError> {
    match table.remove(name) {
        None if required => Err(ConfigError::Section { section: name, message: "section is missing".into() }),
        None => Ok(None),
        Some(value) => {
            if !value.is_table() {
                return Err(ConfigError::Section { section: name, message: "must be a table".into() });
            }
            T::deserialize(value)
                .map(Some)
                .map_err(|e| ConfigError::Section { section: name, message: e.message().to_string() })
        }
    }
}

fn positive(section: &'static str, key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(key_err(section, key, format!("must be positive and finite (got {v})")))
    }
}

fn finite(section: &'static str, key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(key_err(section, key, format!("must be finite (got {v})")))
    }
}

fn require<T>(section: &'static str, key: &'static str, v: Option<T>) -> Result<T, ConfigError> {
    v.ok_or_else(|| key_err(section, key, "is required"))
}

pub fn load(path: &Path, seed_grid: Option<usize>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    from_str(&text, base, seed_grid)
}

/// Parse configuration text; relative paths resolve against `base`.
pub fn from_str(text: &str, base: &Path, seed_grid: Option<usize>) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    if let Some(extra) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(ConfigError::Syntax(format!(
            "unknown section or top-level key `{extra}` (expected one of {})",
            SECTIONS.join(", ")
        )));
    }
    let problem: ProblemSection = section(&mut table, "problem", true)?.expect("required");
    let grid: GridSection = section(&mut table, "grid", true)?.expect("required");
    let initial: InitialSection = section(&mut table, "initial", true)?.expect("required");
    let stepping: SteppingSection = section(&mut table, "stepping", false)?.unwrap_or_default();
    let monitor: MonitorSection = section(&mut table, "monitor", false)?.unwrap_or_default();
    let output: OutputSection = section(&mut table, "output", false)?.unwrap_or_default();

    let n = problem.n.unwrap_or(2);
    let grid_spec = build_grid(&grid, n, seed_grid)?;
    if n != grid_spec.dim() {
        return Err(key_err("problem", "n", format!("full2d grids need n = 2 (got {n})")));
    }
    let spec = build_spec(&problem, n)?;
    let mode = match problem.mode.as_deref().unwrap_or("normalized") {
        "normalized" => FlowMode::Normalized,
        "barrier" => FlowMode::Barrier,
        other => return Err(key_err("problem", "mode", format!("expected \"normalized\" or \"barrier\", got \"{other}\""))),
    };
    let barrier_radii = match (problem.r1, problem.r2) {
        (None, None) => None,
        (Some(r1), Some(r2)) => {
            positive("problem", "r1", r1)?;
            positive("problem", "r2", r2)?;
            if r1 >= r2 {
                return Err(key_err("problem", "r2", format!("must exceed r1 (got r1 = {r1}, r2 = {r2})")));
            }
            Some((r1, r2))
        }
        (Some(_), None) => return Err(key_err("problem", "r2", "is required when r1 is given")),
        (None, Some(_)) => return Err(key_err("problem", "r1", "is required when r2 is given")),
    };

    let (initial_body, initial_rows) = build_initial(&initial, n, base)?;
    let stepping = build_stepping(&stepping)?;
    let (monitor_settings, cadence) = build_monitor(&monitor)?;
    if let (VOrientation::Inner, GFun::Power { q }) = (monitor_settings.v_orientation, spec.g()) {
        if *q <= 0.0 {
            return Err(key_err(
                "monitor",
                "V_orientation",
                format!(
                    "the inner radial integral int_0^rho G^(n/beta) r^n dr = int_0^rho r^(q-1) dr diverges for q = {q} <= 0; \
                     set V_orientation = \"outer\""
                ),
            ));
        }
    }

    let formats = match &output.formats {
        None => Formats { csv: true, obj: true },
        Some(list) => {
            let mut f = Formats { csv: false, obj: false };
            for item in list {
                match item.as_str() {
                    "csv" => f.csv = true,
                    "obj" => f.obj = true,
                    other => return Err(key_err("output", "formats", format!("unknown format \"{other}\" (csv, obj)"))),
                }
            }
            f
        }
    };
    let output_dir = output.directory.map(|d| base.join(d)).unwrap_or_else(|| base.join("out"));

    Ok(RunConfig {
        flow: FlowConfig {
            spec,
            mode,
            grid: grid_spec,
            initial: initial_body,
            stepping,
            monitor: monitor_settings,
            cadence,
            barrier_radii,
        },
        initial_rows,
        output_dir,
        formats,
    })
}

fn build_grid(grid: &GridSection, n: usize, seed: Option<usize>) -> Result<GridSpec, ConfigError> {
    let mode = grid.mode.as_deref().unwrap_or("axisymmetric");
    let check = |key: &'static str, v: usize| {
        if v < 8 {
            Err(key_err("grid", key, format!("must be at least 8 (got {v})")))
        } else if v % 2 != 0 {
            Err(key_err("grid", key, format!("must be even (got {v})")))
        } else {
            Ok(v)
        }
    };
    match mode {
        "axisymmetric" => {
            if grid.n_phi.is_some() {
                return Err(key_err("grid", "N_phi", "is only used by full2d grids"));
            }
            let count = check("N_theta", seed.or(grid.n_theta).unwrap_or(64))?;
            Ok(GridSpec::Axisymmetric { n, count })
        }
        "full2d" => {
            let n_theta = check("N_theta", seed.or(grid.n_theta).unwrap_or(64))?;
            let n_phi = check("N_phi", seed.or(grid.n_phi).unwrap_or(n_theta))?;
            Ok(GridSpec::Full2d { n_theta, n_phi })
        }
        other => Err(key_err("grid", "mode", format!("expected \"axisymmetric\" or \"full2d\", got \"{other}\""))),
    }
}

fn build_spec(problem: &ProblemSection, n: usize) -> Result<IntegrandSpec, ConfigError> {
    if n < 2 {
        return Err(key_err("problem", "n", format!("must be at least 2 (got {n})")));
    }
    let beta = positive("problem", "beta", problem.beta.unwrap_or(n as f64))?;
    let phi = match problem.phi.as_deref().unwrap_or("power") {
        "power" => {
            let p = finite("problem", "p", require("problem", "p", problem.p)?)?;
            let src = problem.f_expr.as_deref().unwrap_or("1");
            let f = parse(src, &direction_variables(n)).map_err(|e| key_err("problem", "f_expr", e.to_string()))?;
            Phi::Power { f, p }
        }
        src => {
            if problem.f_expr.is_some() || problem.p.is_some() {
                return Err(key_err("problem", "phi", "f_expr and p only apply when phi = \"power\""));
            }
            Phi::Expr(parse(src, &phi_variables(n)).map_err(|e| key_err("problem", "phi", e.to_string()))?)
        }
    };
    let g = match problem.g.as_deref().unwrap_or("power") {
        "power" => GFun::Power { q: finite("problem", "q", require("problem", "q", problem.q)?)? },
        src => {
            if problem.q.is_some() {
                return Err(key_err("problem", "G", "q only applies when G = \"power\""));
            }
            GFun::Expr(parse(src, &g_variables(n)).map_err(|e| key_err("problem", "G", e.to_string()))?)
        }
    };
    let even = problem.even.unwrap_or(false);
    IntegrandSpec::new(n, beta, phi, g, even).map_err(|e| ConfigError::Section { section: "problem", message: e.to_string() })
}

fn build_initial(
    initial: &InitialSection,
    n: usize,
    base: &Path,
) -> Result<(InitialBody, Option<Vec<SupportRow>>), ConfigError> {
    let shape = require("initial", "shape", initial.shape.as_deref())?;
    let unused = |key: &'static str, present: bool| {
        if present {
            Err(key_err("initial", key, format!("is not used by shape \"{shape}\"")))
        } else {
            Ok(())
        }
    };
    match shape {
        "sphere" => {
            unused("semi_axes", initial.semi_axes.is_some())?;
            unused("perturbation", initial.perturbation.is_some())?;
            unused("path", initial.path.is_some())?;
            Ok((InitialBody::Sphere { radius: positive("initial", "radius", initial.radius.unwrap_or(1.0))? }, None))
        }
        "ellipsoid" => {
            unused("radius", initial.radius.is_some())?;
            unused("perturbation", initial.perturbation.is_some())?;
            unused("path", initial.path.is_some())?;
            let axes = require("initial", "semi_axes", initial.semi_axes.clone())?;
            if axes.len() != n + 1 {
                return Err(key_err("initial", "semi_axes", format!("needs {} entries, got {}", n + 1, axes.len())));
            }
            for &a in &axes {
                positive("initial", "semi_axes", a)?;
            }
            Ok((InitialBody::Ellipsoid { axes }, None))
        }
        "perturbed" => {
            unused("semi_axes", initial.semi_axes.is_some())?;
            unused("path", initial.path.is_some())?;
            let src = require("initial", "perturbation", initial.perturbation.as_deref())?;
            let shape = parse(src, &direction_variables(n)).map_err(|e| key_err("initial", "perturbation", e.to_string()))?;
            let body = InitialBody::Perturbed {
                radius: positive("initial", "radius", initial.radius.unwrap_or(1.0))?,
                amplitude: finite("initial", "amplitude", require("initial", "amplitude", initial.amplitude)?)?,
                shape,
                even: initial.even.unwrap_or(false),
            };
            Ok((body, None))
        }
        "file" => {
            let path = require("initial", "path", initial.path.clone())?;
            let rows = read_support_csv(&base.join(&path)).map_err(|e| key_err("initial", "path", e))?;
            Ok((InitialBody::Samples(rows.iter().map(|r| r.u).collect()), Some(rows)))
        }
        other => Err(key_err(
            "initial",
            "shape",
            format!("expected sphere, ellipsoid, perturbed or file, got \"{other}\""),
        )),
    }
}

fn build_stepping(s: &SteppingSection) -> Result<Stepping, ConfigError> {
    let d = Stepping::default();
    let out = Stepping {
        dt_init: positive("stepping", "dt_init", s.dt_init.unwrap_or(d.dt_init))?,
        dt_max: positive("stepping", "dt_max", s.dt_max.unwrap_or(d.dt_max))?,
        cfl_factor: positive("stepping", "cfl_factor", s.cfl_factor.unwrap_or(d.cfl_factor))?,
        stop_tol: positive("stepping", "stop_tol", s.stop_tol.unwrap_or(d.stop_tol))?,
        max_steps: match s.max_steps.unwrap_or(d.max_steps) {
            0 => return Err(key_err("stepping", "max_steps", "must be at least 1")),
            m => m,
        },
        t_end: s.t_end.map(|t| positive("stepping", "t_end", t)).transpose()?,
        convexity_floor: s.convexity_floor.map(|e| positive("stepping", "convexity_floor", e)).transpose()?,
        project_even: s.project_even.unwrap_or(false),
        ..d
    };
    if out.dt_init > out.dt_max {
        return Err(key_err("stepping", "dt_init", format!("must not exceed dt_max ({} > {})", out.dt_init, out.dt_max)));
    }
    Ok(out)
}

fn build_monitor(m: &MonitorSection) -> Result<(MonitorSettings, usize), ConfigError> {
    let j_orientation = match m.j_orientation.as_deref().unwrap_or("from_c0") {
        "from_c0" => JOrientation::FromC0,
        "to_c0" => JOrientation::ToC0,
        "to_infinity" => JOrientation::ToInfinity,
        other => {
            return Err(key_err(
                "monitor",
                "J_orientation",
                format!("expected from_c0, to_c0 or to_infinity, got \"{other}\""),
            ))
        }
    };
    let v_orientation = match m.v_orientation.as_deref().unwrap_or("inner") {
        "inner" => VOrientation::Inner,
        "outer" => VOrientation::Outer,
        other => return Err(key_err("monitor", "V_orientation", format!("expected inner or outer, got \"{other}\""))),
    };
    let cadence = match m.cadence.unwrap_or(1) {
        0 => return Err(key_err("monitor", "cadence", "must be at least 1")),
        c => c,
    };
    Ok((
        MonitorSettings {
            c0: m.c0.map(|v| positive("monitor", "C0", v)).transpose()?,
            r_outer: m.r.map(|v| positive("monitor", "R", v)).transpose()?,
            s_max: m.s_max.map(|v| positive("monitor", "s_max", v)).transpose()?,
            j_orientation,
            v_orientation,
        },
        cadence,
    ))
}
