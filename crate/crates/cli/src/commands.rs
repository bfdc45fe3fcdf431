use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use orlicz_flow::flow::{Flow, FlowMode, Termination};
use orlicz_flow::geometry::{extrema_checks, geometry_of, jacobian_checks, polar_dual_refined, SupportFunction};
use orlicz_flow::monitors::radial_rate_defect;

use crate::config::{self, RunConfig};
use crate::export;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_BREAKDOWN: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

/// Tolerances used by `check`.
pub const JACOBIAN_INTEGRAL_TOL: f64 = 1e-6;
pub const JACOBIAN_PRODUCT_TOL: f64 = 1e-3;
pub const POLAR_INVOLUTION_TOL: f64 = 2e-3;
pub const EXTREMA_TOL: f64 = 1e-3;
pub const ETA_PATHS_TOL: f64 = 1e-6;
pub const RADIAL_RATE_TOL: f64 = 1e-3;
const RADIAL_RATE_STEPS: usize = 3;
const CHECK_SAMPLES: usize = 600;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed_grid: Option<usize>,
}

/// A failure that ends the process with `code`.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn fail(message: impl fmt::Display) -> Failure {
    Failure { code: EXIT_FAILURE, message: message.to_string() }
}

fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, Failure> {
    let mut cfg = config::load(path, overrides.seed_grid).map_err(fail)?;
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn build(cfg: &RunConfig) -> Result<(Flow, SupportFunction), Failure> {
    let grid = Arc::new(cfg.flow.grid.build().map_err(fail)?);
    if let Some(rows) = &cfg.initial_rows {
        export::check_rows_match(rows, &grid).map_err(|e| fail(format!("[initial] path: {e}")))?;
    }
    let u0 = cfg.flow.initial.build(grid).map_err(|e| fail(format!("initial body: {e}")))?;
    let flow = Flow::new(&cfg.flow, &u0).map_err(fail)?;
    Ok((flow, u0))
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| fail(format!("cannot create {}: {e}", dir.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    export::write(&path, contents).map_err(|e| fail(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// `run`: evolve the configured body and write all artifacts. Returns the exit code.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<u8, Failure> {
    let cfg = load(config_path, overrides)?;
    let (flow, u0) = build(&cfg)?;
    let result = flow.run(&u0).map_err(|e| fail(format!("cannot start the flow: {e}")))?;

    prepare_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    if cfg.formats.csv {
        write(dir, "series.csv", &export::series_csv(&result.series))?;
        write(dir, "final_u.csv", &export::support_csv(&result.state.u))?;
    }
    if cfg.formats.obj {
        if let Some(obj) = export::obj(&result.state.geometry, flow.grid()) {
            write(dir, "final.obj", &obj)?;
        }
    }
    write(dir, "summary.txt", &export::summary(&result, config_path))?;

    let t = &result.state;
    println!(
        "{}: {} accepted steps, t = {:.6e}, residual_max = {:.3e}",
        result.termination.label(),
        t.accepted,
        t.t,
        result.residual.max
    );
    Ok(match &result.termination {
        Termination::Converged => EXIT_OK,
        Termination::NotConverged => EXIT_NOT_CONVERGED,
        Termination::Breakdown(reason) => {
            eprintln!("flow breakdown: {reason}");
            EXIT_BREAKDOWN
        }
    })
}

/// `polar`: write the polar dual of the configured initial body.
pub fn polar(config_path: &Path, overrides: &Overrides) -> Result<u8, Failure> {
    let cfg = load(config_path, overrides)?;
    let (_, u0) = build(&cfg)?;
    let dual = polar_dual_refined(&u0).map_err(fail)?;
    prepare_dir(&cfg.output_dir)?;
    let path = write(&cfg.output_dir, "final_u_dual.csv", &export::support_csv(&dual))?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn line(name: &'static str, pass: bool, detail: String) -> CheckLine {
    CheckLine { name, pass, detail }
}

fn errored(name: &'static str, e: impl fmt::Display) -> CheckLine {
    line(name, false, format!("error: {e}"))
}

/// Run the identity suite on the configured initial body.
pub fn check_lines(cfg: &RunConfig) -> Result<Vec<CheckLine>, Failure> {
    let (flow, u) = build(cfg)?;
    let grid = u.grid().clone();
    let stride = grid.len().div_ceil(CHECK_SAMPLES);
    let mut out = Vec::new();

    let geometry = match geometry_of(&u).and_then(|g| g.check_convex(&grid).map(|_| g)) {
        Ok(g) => {
            let (margin, node) = g.convexity_margin();
            out.push(line("convexity", true, format!("min curvature radius {margin:.3e} at node {node}")));
            g
        }
        Err(e) => {
            out.push(errored("convexity", e));
            out.push(line("remaining identities", false, "skipped: the body is not uniformly convex".into()));
            return Ok(out);
        }
    };

    match jacobian_checks(&u, stride) {
        Ok(r) => {
            let rel = r.integral_defect / r.area;
            out.push(line(
                "Jacobian integral",
                rel < JACOBIAN_INTEGRAL_TOL,
                format!("int u*sigma/rho^(n+1) = {:.15e}, |S^n| = {:.15e}, relative defect {rel:.3e} (tol {JACOBIAN_INTEGRAL_TOL:e})", r.integral, r.area),
            ));
            out.push(line(
                "Jacobian product",
                r.product_defect < JACOBIAN_PRODUCT_TOL,
                format!("max |Jac A * Jac A* - 1| = {:.3e} over {} nodes (tol {JACOBIAN_PRODUCT_TOL:e})", r.product_defect, r.samples),
            ));
        }
        Err(e) => out.push(errored("Jacobian identities", e)),
    }

    match polar_dual_refined(&u).and_then(|d| polar_dual_refined(&d)) {
        Ok(back) => {
            let rel = back
                .values()
                .iter()
                .zip(u.values())
                .map(|(b, a)| ((b - a) / a).abs())
                .fold(0.0, f64::max);
            out.push(line(
                "polar involution",
                rel < POLAR_INVOLUTION_TOL,
                format!("max relative |u** - u| / u = {rel:.3e} (tol {POLAR_INVOLUTION_TOL:e})"),
            ));
        }
        Err(e) => out.push(errored("polar involution", e)),
    }

    let ex = extrema_checks(&u, &geometry);
    let scale = ex.max_u;
    let worst = (ex.max_defect() / scale)
        .max(ex.support_cone_violation / scale)
        .max(ex.radial_cone_violation / scale);
    out.push(line(
        "extrema",
        worst < EXTREMA_TOL,
        format!(
            "max u {:.6e} vs max rho {:.6e}, min u {:.6e} vs min rho {:.6e}, cone violations {:.3e}/{:.3e} (relative tol {EXTREMA_TOL:e})",
            ex.max_u, ex.max_rho, ex.min_u, ex.min_rho, ex.support_cone_violation, ex.radial_cone_violation
        ),
    ));

    match flow.eta_parts(&u, &geometry).and_then(|(normal, _)| Ok((normal, flow.eta_numerator_radial(&u)?))) {
        Ok((normal, radial)) => {
            let rel = (normal - radial).abs() / normal.abs();
            out.push(line(
                "eta two-path",
                rel < ETA_PATHS_TOL,
                format!("normal path {normal:.15e}, radial path {radial:.15e}, relative gap {rel:.3e} (tol {ETA_PATHS_TOL:e})"),
            ));
        }
        Err(e) => out.push(errored("eta two-path", e)),
    }

    out.push(radial_rate_line(&flow, &u, stride));
    Ok(out)
}

/// `|∂ₜρ/ρ - ∂ₜu/u|` along a few flow steps.
fn radial_rate_line(flow: &Flow, u: &SupportFunction, stride: usize) -> CheckLine {
    const NAME: &str = "radial rate identity";
    let mut state = match flow.initial_state(u) {
        Ok(s) => s,
        Err(e) => return errored(NAME, e),
    };
    let mut worst: f64 = 0.0;
    for _ in 0..RADIAL_RATE_STEPS {
        let before = state.u.clone();
        let report = match flow.step(&mut state) {
            Ok(r) => r,
            Err(e) => return errored(NAME, e),
        };
        match radial_rate_defect(&before, &state.u, report.dt, stride) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return errored(NAME, e),
        }
    }
    let mode = if flow.mode() == FlowMode::Barrier { "barrier" } else { "normalized" };
    line(
        NAME,
        worst < RADIAL_RATE_TOL,
        format!("max |drho/rho - du/u| = {worst:.3e} over {RADIAL_RATE_STEPS} {mode} steps (tol {RADIAL_RATE_TOL:e})"),
    )
}

/// `check`: print one PASS/FAIL line per identity; exit 0 iff all pass.
pub fn check(config_path: &Path, overrides: &Overrides) -> Result<u8, Failure> {
    let cfg = load(config_path, overrides)?;
    let lines = check_lines(&cfg)?;
    for l in &lines {
        println!("{l}");
    }
    Ok(if lines.iter().all(|l| l.pass) { EXIT_OK } else { EXIT_FAILURE })
}
