//! Output files: `series.csv`, support samples, OBJ meshes and summaries.
//!
//! Numbers are written with `{:.16e}` (17 significant digits), which
//! round-trips every `f64` and keeps repeated runs byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use orlicz_flow::flow::FlowResult;
use orlicz_flow::geometry::{BodyGeometry, SupportFunction};
use orlicz_flow::grid::{GridMode, SphereGrid};
use orlicz_flow::monitors::{MonitorRow, MonitorSeries};

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

pub fn series_csv(series: &MonitorSeries) -> String {
    let mut out = String::from(MonitorRow::HEADER);
    out.push('\n');
    for row in series.rows() {
        for (i, v) in row.values().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            num(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

/// `theta,u` (axisymmetric) or `theta,phi,u` (full2d), one node per line in grid order.
pub fn support_csv(u: &SupportFunction) -> String {
    let grid = u.grid();
    let full = grid.mode() == GridMode::Full2d;
    let mut out = String::from(if full { "theta,phi,u\n" } else { "theta,u\n" });
    for (k, &v) in u.values().iter().enumerate() {
        num(&mut out, grid.theta(k));
        out.push(',');
        if full {
            num(&mut out, grid.phi(k));
            out.push(',');
        }
        num(&mut out, v);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportRow {
    pub theta: f64,
    pub phi: Option<f64>,
    pub u: f64,
}

/// Read a file written by [`support_csv`].
pub fn read_support_csv(path: &Path) -> Result<Vec<SupportRow>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_support_csv(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse_support_csv(text: &str) -> Result<Vec<SupportRow>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty file")?;
    let full = match header.trim() {
        "theta,u" => false,
        "theta,phi,u" => true,
        other => return Err(format!("header must be `theta,u` or `theta,phi,u`, got `{other}`")),
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let want = if full { 3 } else { 2 };
        if fields.len() != want {
            return Err(format!("line {}: expected {want} fields, got {}", i + 1, fields.len()));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: `{s}`: {e}", i + 1));
        let theta = parse(fields[0])?;
        let (phi, u) = if full { (Some(parse(fields[1])?), parse(fields[2])?) } else { (None, parse(fields[1])?) };
        rows.push(SupportRow { theta, phi, u });
    }
    if rows.is_empty() {
        return Err("no samples".into());
    }
    Ok(rows)
}

/// Check that `rows` sit on the nodes of `grid` in grid order.
pub fn check_rows_match(rows: &[SupportRow], grid: &SphereGrid) -> Result<(), String> {
    if rows.len() != grid.len() {
        return Err(format!("file has {} samples but the grid has {} nodes", rows.len(), grid.len()));
    }
    let full = grid.mode() == GridMode::Full2d;
    for (k, row) in rows.iter().enumerate() {
        let phi_ok = match (full, row.phi) {
            (true, Some(p)) => (p - grid.phi(k)).abs() < 1e-9,
            (false, None) => true,
            _ => return Err("column layout does not match the grid mode".into()),
        };
        if (row.theta - grid.theta(k)).abs() > 1e-9 || !phi_ok {
            return Err(format!("sample {k} is not at grid node {k} (different grid size or order?)"));
        }
    }
    Ok(())
}

/// Wavefront OBJ of the boundary points `X_k` on a full2d grid.
///
/// Vertices are the nodes in grid order. Neighbouring rows are joined by
/// split quads and each polar row is closed by a triangle fan, all wound
/// counter-clockwise seen from outside.
pub fn obj(geometry: &BodyGeometry, grid: &SphereGrid) -> Option<String> {
    if grid.mode() != GridMode::Full2d {
        return None;
    }
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let idx = |i: usize, j: usize| i * np + (j % np) + 1;
    let mut out = String::from("# support-function flow boundary\n");
    for k in 0..grid.len() {
        let p = geometry.point(k);
        out.push('v');
        for c in p {
            out.push(' ');
            num(&mut out, *c);
        }
        out.push('\n');
    }
    for j in 1..np - 1 {
        writeln!(out, "f {} {} {}", idx(0, 0), idx(0, j), idx(0, j + 1)).unwrap();
    }
    for i in 0..nt - 1 {
        for j in 0..np {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            writeln!(out, "f {a} {b} {c}").unwrap();
            writeln!(out, "f {a} {c} {d}").unwrap();
        }
    }
    let last = nt - 1;
    for j in 1..np - 1 {
        writeln!(out, "f {} {} {}", idx(last, 0), idx(last, j + 1), idx(last, j)).unwrap();
    }
    Some(out)
}

pub fn summary(result: &FlowResult, config_path: &Path) -> String {
    let mut out = String::new();
    let s = &result.state;
    writeln!(out, "config: {}", config_path.display()).unwrap();
    writeln!(out, "termination: {}", result.termination.label()).unwrap();
    if let orlicz_flow::flow::Termination::Breakdown(reason) = &result.termination {
        writeln!(out, "breakdown_reason: {reason}").unwrap();
    }
    writeln!(out, "accepted_steps: {}", s.accepted).unwrap();
    writeln!(out, "rejected_steps: {}", result.rejected_steps).unwrap();
    writeln!(out, "t_final: {:.16e}", s.t).unwrap();
    writeln!(out, "eta_final: {:.16e}", s.eta).unwrap();
    writeln!(out, "relative_speed: {:.16e}", s.relative_speed()).unwrap();
    writeln!(out, "residual_max: {:.16e}", result.residual.max).unwrap();
    writeln!(out, "c_estimate: {:.16e}", result.residual.c_estimate).unwrap();
    if let Some(e) = result.residual.eta_consistency {
        writeln!(out, "eta_consistency: {e:.16e}").unwrap();
    }
    writeln!(out, "min_u: {:.16e}", s.u.min()).unwrap();
    writeln!(out, "max_u: {:.16e}", s.u.max()).unwrap();
    writeln!(out, "u_range_over_run: [{:.16e}, {:.16e}]", result.u_range.0, result.u_range.1).unwrap();
    writeln!(out, "symmetry_defect: {:.16e}", s.u.symmetry_defect()).unwrap();
    if result.series.len() > 1 {
        writeln!(out, "relative_V_drift: {:.16e}", result.series.relative_v_drift()).unwrap();
    }
    let cfg = result.series.config;
    writeln!(out, "J_orientation: {:?}", cfg.j_orientation).unwrap();
    writeln!(out, "J_truncation_s_max: {:.16e}", cfg.s_max).unwrap();
    if let Some(b) = &result.barrier {
        writeln!(out, "barrier_inner_min: {:.16e}", b.inner_min).unwrap();
        writeln!(out, "barrier_outer_max: {:.16e}", b.outer_max).unwrap();
    }
    out
}

pub fn write(path: &Path, contents: &str) -> io::Result<()> {
    fs::write(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use orlicz_flow::geometry::geometry_of;
    use std::sync::Arc;

    #[test]
    fn support_csv_round_trips() {
        let grid = Arc::new(SphereGrid::full2d(8, 8).unwrap());
        let u = SupportFunction::ellipsoid(grid.clone(), &[1.2, 1.0, 0.9]).unwrap();
        let rows = parse_support_csv(&support_csv(&u)).unwrap();
        check_rows_match(&rows, &grid).unwrap();
        assert!(rows.iter().zip(u.values()).all(|(r, v)| r.u == *v));
    }

    #[test]
    fn mismatched_grid_is_reported() {
        let grid = Arc::new(SphereGrid::axisymmetric(2, 8).unwrap());
        let other = Arc::new(SphereGrid::axisymmetric(2, 10).unwrap());
        let u = SupportFunction::sphere(grid, 1.0).unwrap();
        let rows = parse_support_csv(&support_csv(&u)).unwrap();
        assert!(check_rows_match(&rows, &other).unwrap_err().contains("10 nodes"));
        assert!(parse_support_csv("theta,v\n1,2\n").is_err());
        assert!(parse_support_csv("theta,u\n1\n").unwrap_err().contains("line 2"));
    }

    #[test]
    fn obj_faces_are_valid_and_outward() {
        let grid = Arc::new(SphereGrid::full2d(8, 10).unwrap());
        let u = SupportFunction::sphere(grid.clone(), 1.0).unwrap();
        let geo = geometry_of(&u).unwrap();
        let text = obj(&geo, &grid).unwrap();
        let verts: Vec<[f64; 3]> = text
            .lines()
            .filter_map(|l| l.strip_prefix("v "))
            .map(|l| {
                let v: Vec<f64> = l.split(' ').map(|s| s.parse().unwrap()).collect();
                [v[0], v[1], v[2]]
            })
            .collect();
        assert_eq!(verts.len(), grid.len());
        let mut faces = 0;
        for l in text.lines().filter_map(|l| l.strip_prefix("f ")) {
            let f: Vec<usize> = l.split(' ').map(|s| s.parse().unwrap()).collect();
            assert!(f.iter().all(|&i| (1..=verts.len()).contains(&i)));
            let [a, b, c] = [verts[f[0] - 1], verts[f[1] - 1], verts[f[2] - 1]];
            let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
            let centroid = [a[0] + b[0] + c[0], a[1] + b[1] + c[1], a[2] + b[2] + c[2]];
            assert!(n[0] * centroid[0] + n[1] * centroid[1] + n[2] * centroid[2] > 0.0);
            faces += 1;
        }
        // closed genus-0 triangulation: F = 2V - 4
        assert_eq!(faces, 2 * grid.len() - 4);
    }
}
