use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64;
use screenbem::assembly::NitscheParams;
use screenbem::geometry::build_unit_square;
use screenbem::postproc::CSV_HEADER;
use screenbem::quadrature::QuadratureOrders;
use screenbem::spaces::SpaceKind;
use screenbem::study::solve_on_screen;
use screenbem::WaveNumber;

fn screenbem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screenbem"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Rows of a field-slice CSV as `(x, y, z, value)`.
fn slice_rows(path: &Path) -> Vec<([f64; 3], Complex64)> {
    let text = read(path);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,z,re,im"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            ([v[0], v[1], v[2]], Complex64::new(v[3], v[4]))
        })
        .collect()
}

fn solution(path: &Path) -> Vec<Complex64> {
    read(path)
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<&str> = l.split(',').collect();
            Complex64::new(v[1].parse().unwrap(), v[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = screenbem(&["convergence", "--method", "nitsche", "--k", "-1", "--levels", "1..2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("k must be ≥ 0"), "{err}");
    assert!(err.contains("nu is required"), "{err}");
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "# small study\nmethod = conforming\nk = -3\nlevels = 0..2\n").unwrap();
    let out = screenbem(&["convergence", "--config", file.to_str().unwrap(), "--k", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&dir.path().join("energy.csv")).starts_with("k,e_star,alpha,c,levels\n1e0,"));
}

#[test]
fn failed_extrapolation_exits_with_code_3() {
    // At k = 20 the coarsest levels do not resolve the wave and the energies oscillate.
    let dir = tempfile::tempdir().unwrap();
    let out = screenbem(&["convergence", "--method", "conforming", "--k", "20", "--levels", "0..2"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extrapolation error"));
}

#[test]
fn conforming_tables_and_repeat_runs_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["convergence", "--method", "conforming", "--k", "5", "--levels", "1..3"];
    for dir in [&a, &b] {
        let out = screenbem(&args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let table = read(&a.path().join("conforming.csv"));
    assert_eq!(table.lines().next(), Some(CSV_HEADER));
    assert_eq!(table.lines().count(), 4);
    for name in ["conforming.csv", "summary.csv", "energy.csv"] {
        assert_eq!(read(&a.path().join(name)), read(&b.path().join(name)), "{name} differs between runs");
    }
}

#[test]
fn laplace_slice_is_real() {
    let dir = tempfile::tempdir().unwrap();
    let out = screenbem(
        &["field-slice", "--method", "conforming", "--k", "0", "--levels", "2", "--plane", "z=0.25", "--resolution", "9"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = slice_rows(&dir.path().join("slice_conforming_level2.csv"));
    assert_eq!(rows.len(), 81);
    let scale = rows.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    assert!(scale > 1e-3);
    for (p, v) in &rows {
        assert!(v.im.abs() <= 1e-10, "imaginary part {} at {p:?}", v.im);
    }
}

#[test]
fn nitsche_slice_is_finite_off_the_screen() {
    let dir = tempfile::tempdir().unwrap();
    let out = screenbem(
        &[
            "field-slice", "--method", "nitsche", "--k", "5", "--nu", "10", "--levels", "3", "--plane", "z=0.3", "--extent",
            "-1,1,-1,1", "--resolution", "11",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = slice_rows(&dir.path().join("slice_nitsche_level3_nu1e1.csv"));
    assert_eq!(rows.len(), 121, "no grid point lies on the screen");
    assert!(rows.iter().all(|(_, v)| v.re.is_finite() && v.im.is_finite()));
    assert!(rows.iter().any(|(_, v)| v.norm() > 1e-3));
}

#[test]
fn conforming_slice_is_point_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let out = screenbem(
        &["field-slice", "--method", "conforming", "--k", "5", "--levels", "2", "--plane", "z=0.3", "--resolution", "11"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = slice_rows(&dir.path().join("slice_conforming_level2.csv"));
    assert_eq!(rows.len(), 121);
    // Grid index i maps to (-x, -y) under i -> 120 - i.
    let scale = rows.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    for (i, (p, v)) in rows.iter().enumerate() {
        let (q, w) = &rows[120 - i];
        assert!((p[0] + q[0]).abs() < 1e-12 && (p[1] + q[1]).abs() < 1e-12);
        assert!((v - w).norm() <= 1e-8 * scale, "asymmetry {} at {p:?}", (v - w).norm());
    }
}

#[test]
fn large_penalty_approaches_the_conforming_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = screenbem(
        &[
            "convergence", "--method", "nitsche", "--screen", "square", "--k", "0", "--nu", "1e4,1e6", "--levels", "2",
            "--energy-levels", "1..3", "--dump-solution",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let u4 = solution(&dir.path().join("solution_nitsche_level2_nu1e4.csv"));
    let u6 = solution(&dir.path().join("solution_nitsche_level2_nu1e6.csv"));

    let k = WaveNumber::new(0.0).unwrap();
    let orders = QuadratureOrders::default();
    let conforming = solve_on_screen(k, build_unit_square(2), SpaceKind::Conforming, &[], &orders, 2).unwrap();
    let nonconforming =
        solve_on_screen(k, build_unit_square(2), SpaceKind::Nonconforming, &[NitscheParams::Constant { nu: 1.0 }], &orders, 2)
            .unwrap();
    let injected = conforming.dofs.inject(&nonconforming.dofs, conforming.runs[0].solution.as_slice().unwrap()).unwrap();
    let dist = |u: &[Complex64]| u.iter().zip(&injected).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert_eq!(u4.len(), injected.len());
    let (d4, d6) = (dist(&u4), dist(&u6));
    assert!(d6 < d4, "distance to conforming: nu 1e4 {d4:.3e}, nu 1e6 {d6:.3e}");
}
