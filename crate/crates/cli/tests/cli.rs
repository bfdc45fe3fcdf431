use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orlicz-flow"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn support_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

fn summary_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in summary:\n{text}"))
        .to_string()
}

fn barrier_sphere(radius: f64, cadence: usize) -> String {
    format!(
        r#"
[problem]
n = 2
beta = 2.0
mode = "barrier"
p = 4.0
q = 1.0
r1 = 0.5
r2 = 2.0

[grid]
mode = "axisymmetric"
N_theta = 32

[initial]
shape = "sphere"
radius = {radius}

[monitor]
cadence = {cadence}

[output]
directory = "out"
"#
    )
}

#[test]
fn barrier_sphere_converges_to_unit_sphere() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "barrier.toml", &barrier_sphere(0.8, 1));
    let o = exec(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let out = tmp.path().join("out");
    assert_eq!(summary_value(&out, "termination"), "converged");
    let u = support_values(&out.join("final_u.csv"));
    assert_eq!(u.len(), 32);
    assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-6), "{u:?}");
    assert!(!out.join("final.obj").exists(), "OBJ is only written for full2d grids");
}

#[test]
fn series_rows_follow_cadence() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &barrier_sphere(1.3, 10));
    let o = exec(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let accepted: usize = summary_value(&out, "accepted_steps").parse().unwrap();
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,eta,J,V,residual_max,c_estimate,min_u,max_u,min_rho,max_rho,convexity_margin,symmetry_defect"
    );
    assert_eq!(lines.count(), accepted.div_ceil(10) + 1);
    // 17 significant digits
    let first = series.lines().nth(1).unwrap().split(',').next().unwrap();
    assert_eq!(first, "0.0000000000000000e0");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let text = r#"
[problem]
mode = "normalized"
p = 4.0
q = 2.0
f_expr = "1 + 0.2*x3^2"
even = true

[grid]
mode = "full2d"
N_theta = 12
N_phi = 12

[initial]
shape = "ellipsoid"
semi_axes = [1.2, 1.0, 0.9]

[stepping]
max_steps = 20
"#;
    let cfg = write_config(tmp.path(), "r.toml", text);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let o = exec(&["--output-dir", dir.to_str().unwrap(), "run", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(3), "max_steps reached means not converged: {}", stderr(&o));
        outputs.push(dir);
    }
    for file in ["series.csv", "final_u.csv", "final.obj"] {
        let a = fs::read(outputs[0].join(file)).unwrap();
        let b = fs::read(outputs[1].join(file)).unwrap();
        assert!(a == b, "{file} differs between runs");
    }
    let obj = fs::read_to_string(outputs[0].join("final.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 144);
    assert_eq!(summary_value(&outputs[0], "termination"), "not-converged");
    assert_eq!(summary_value(&outputs[0], "accepted_steps"), "20");
}

#[test]
fn divergent_inner_integral_exits_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q0.toml", &barrier_sphere(0.8, 1).replace("q = 1.0", "q = 0.0"));
    let o = exec(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("inner radial integral"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_one_and_cite_the_key() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("radius = 0.8", "radius = -0.8", "[initial] radius"),
        ("cadence = 1", "cadence = 1\nbogus = 2", "[monitor]"),
        ("N_theta = 32", "N_theta = 31", "[grid] N_theta"),
        ("r2 = 2.0", "r2 = 0.4", "[problem] r2"),
    ];
    for (from, to, cited) in cases {
        let cfg = write_config(tmp.path(), "bad.toml", &barrier_sphere(0.8, 1).replace(from, to));
        let o = exec(&["run", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{to}");
        assert!(stderr(&o).contains(cited), "{to}: {}", stderr(&o));
    }
    let o = exec(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failing_barrier_condition_exits_one() {
    let tmp = TempDir::new().unwrap();
    // the unit sphere is the fixed point, so r2 = 0.9 < 1 cannot be a supersolution
    let text = barrier_sphere(0.8, 1).replace("r1 = 0.5", "r1 = 0.4").replace("r2 = 2.0", "r2 = 0.9");
    let cfg = write_config(tmp.path(), "b.toml", &text);
    let o = exec(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("barrier condition"), "{}", stderr(&o));
}

fn body_config(initial: &str, grid: &str) -> String {
    format!(
        r#"
[problem]
p = 4.0
q = 2.0

[grid]
{grid}

[initial]
{initial}

[output]
directory = "out"
"#
    )
}

const FULL96: &str = "mode = \"full2d\"\nN_theta = 96\nN_phi = 96";

#[test]
fn check_passes_on_ellipsoid() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "e.toml",
        &body_config("shape = \"ellipsoid\"\nsemi_axes = [1.2, 1.0, 0.9]", FULL96),
    );
    let o = exec(&["check", cfg.to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}{}", stderr(&o));
    let names = [
        "convexity",
        "Jacobian integral",
        "Jacobian product",
        "polar involution",
        "extrema",
        "eta two-path",
        "radial rate identity",
    ];
    for name in names {
        assert!(text.lines().any(|l| l.starts_with(&format!("PASS {name}:"))), "{name}:\n{text}");
    }
}

#[test]
fn check_sphere_jacobian_integral_is_four_pi() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.toml",
        &body_config("shape = \"sphere\"\nradius = 2.0", "mode = \"full2d\"\nN_theta = 16\nN_phi = 16"),
    );
    let o = exec(&["check", cfg.to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    let line = text.lines().find(|l| l.starts_with("PASS Jacobian integral")).unwrap();
    let value: f64 = line
        .split("= ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 4.0 * std::f64::consts::PI).abs() < 1e-12, "{value}");
}

#[test]
fn check_locates_non_convex_node() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "n.toml",
        &body_config(
            "shape = \"perturbed\"\nradius = 1.0\namplitude = 0.3\nperturbation = \"x1^4 - x2^6 + 2*x3^8\"",
            "mode = \"full2d\"\nN_theta = 32\nN_phi = 32",
        ),
    );
    let o = exec(&["check", cfg.to_str().unwrap()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{text}");
    let line = text.lines().find(|l| l.starts_with("FAIL convexity")).expect(&text);
    assert!(line.contains("at node") && line.contains("theta="), "{line}");
}

#[test]
fn polar_of_sphere_is_reciprocal_sphere() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.toml",
        &body_config("shape = \"sphere\"\nradius = 2.5", "mode = \"axisymmetric\"\nN_theta = 24"),
    );
    let o = exec(&["polar", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dual = support_values(&tmp.path().join("out/final_u_dual.csv"));
    assert_eq!(dual.len(), 24);
    assert!(dual.iter().all(|v| (v - 0.4).abs() < 1e-12), "{dual:?}");
}

#[test]
fn polar_of_ellipsoid_and_double_polar() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "e.toml", &body_config("shape = \"ellipsoid\"\nsemi_axes = [2.0, 1.0, 0.5]", FULL96));
    let o = exec(&["polar", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dual_path = tmp.path().join("out/final_u_dual.csv");
    let dual = support_values(&dual_path);

    // oracle: the polar of an ellipsoid with semi-axes a has semi-axes 1/a
    let text = fs::read_to_string(&dual_path).unwrap();
    let mut worst: f64 = 0.0;
    for (l, v) in text.lines().skip(1).zip(&dual) {
        let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        let (theta, phi) = (f[0], f[1]);
        let x = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let exact = ((0.5 * x[0]).powi(2) + x[1].powi(2) + (2.0 * x[2]).powi(2)).sqrt();
        worst = worst.max((v - exact).abs() / exact);
    }
    assert!(worst < 1e-3, "{worst}");

    // second application through shape = "file"
    let second = write_config(
        tmp.path(),
        "dual.toml",
        &body_config("shape = \"file\"\npath = \"out/final_u_dual.csv\"", FULL96).replace("\"out\"", "\"out2\""),
    );
    let o = exec(&["polar", second.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let back = support_values(&tmp.path().join("out2/final_u_dual.csv"));
    let mut worst: f64 = 0.0;
    for (l, v) in text.lines().skip(1).zip(&back) {
        let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        let (theta, phi) = (f[0], f[1]);
        let x = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let exact = ((2.0 * x[0]).powi(2) + x[1].powi(2) + (0.5 * x[2]).powi(2)).sqrt();
        worst = worst.max((v - exact).abs() / exact);
    }
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn file_on_wrong_grid_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.toml",
        &body_config("shape = \"sphere\"\nradius = 1.5", "mode = \"axisymmetric\"\nN_theta = 24"),
    );
    assert_eq!(exec(&["polar", cfg.to_str().unwrap()]).status.code(), Some(0));
    let other = write_config(
        tmp.path(),
        "q.toml",
        &body_config("shape = \"file\"\npath = \"out/final_u_dual.csv\"", "mode = \"axisymmetric\"\nN_theta = 24"),
    );
    let o = exec(&["--seed-grid", "16", "polar", other.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[initial] path"), "{}", stderr(&o));
}
