use ndarray::Array1;
use num_complex::Complex64;
use screenbem::assembly::{NitscheParams, SystemTerms};
use screenbem::geometry::{build_model_screen, build_unit_square, MeshedScreen};
use screenbem::quadrature::{gauss, QuadratureOrders};
use screenbem::solver::{evaluate_potential, solve_dense, solve_matrix};
use screenbem::spaces::{shape_values, DofSystem, SpaceKind};
use screenbem::study::{solve_level, unit_load, Method};
use screenbem::{Vec3, WaveNumber};

fn l2_norm(screen: &MeshedScreen, dofs: &DofSystem, x: &[Complex64]) -> f64 {
    let g = gauss(4);
    let mut sum = 0.0;
    for el in dofs.elements(screen) {
        for (t, wt) in g.on(0.0, 1.0) {
            for (s, ws) in g.on(0.0, 1.0) {
                let n = shape_values([s, t]);
                let v: Complex64 = el.dofs.iter().zip(n).filter_map(|(d, n)| d.map(|d| x[d] * n)).sum();
                sum += ws * wt * el.panel.area() * v.norm_sqr();
            }
        }
    }
    sum.sqrt()
}

#[test]
fn growing_penalty_approaches_the_conforming_solution() {
    let orders = QuadratureOrders::default();
    for level in 1..=2 {
        let screen = build_unit_square(level);
        let conf = solve_level(Method::Conforming, WaveNumber(0.0), level, &[], &orders).unwrap();
        let nc = DofSystem::build(&screen, SpaceKind::Nonconforming).unwrap();
        let uc = conf.dofs.inject(&nc, conf.runs[0].solution.as_slice().unwrap()).unwrap();
        let params: Vec<NitscheParams> = [1e2, 1e3, 1e4, 1e6].iter().map(|&nu| NitscheParams::constant(nu).unwrap()).collect();
        let runs = screenbem::study::solve_on_screen(WaveNumber(0.0), screen.clone(), SpaceKind::Nonconforming, &params, &orders, level)
            .unwrap()
            .runs;
        let dist: Vec<f64> = runs
            .iter()
            .map(|r| {
                let d: Vec<Complex64> = r.solution.iter().zip(&uc).map(|(a, b)| a - b).collect();
                l2_norm(&screen, &nc, &d)
            })
            .collect();
        println!("level {level}: {dist:?}");
        assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
    }
}

#[test]
fn manufactured_laplace_solution() {
    let screen = build_unit_square(1);
    let dofs = DofSystem::build(&screen, SpaceKind::Conforming).unwrap();
    let t = SystemTerms::assemble(WaveNumber(0.0), &screen, &dofs, &QuadratureOrders::default(), unit_load).unwrap();
    let one = Array1::from_elem(dofs.n, Complex64::new(1.0, 0.0));
    let r = solve_matrix(&t.single_layer, &t.single_layer.dot(&one)).unwrap();
    assert!(r.x.iter().all(|v| (v - 1.0).norm() < 1e-10));
}

#[test]
fn nitsche_regression_at_level_two() {
    let screen = build_model_screen(2);
    let dofs = DofSystem::build(&screen, SpaceKind::Nonconforming).unwrap();
    let t = SystemTerms::assemble(WaveNumber(5.0), &screen, &dofs, &QuadratureOrders::default(), unit_load).unwrap();
    let rep = solve_dense(&t.system(Some(1000.0))).unwrap();
    assert!(rep.residual <= 1e-10, "residual {:.3e}", rep.residual);
    let norm = rep.x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let sum: Complex64 = rep.x.iter().sum();
    assert_eq!(dofs.n, 239);
    assert!((norm - 8.450066348454259).abs() <= 1e-9 * norm, "norm {norm:.15e}");
    let frozen = Complex64::new(32.24779435038803, 101.3558352890890);
    assert!((sum - frozen).norm() <= 1e-9 * frozen.norm(), "sum {sum:.15e}");
    assert!(1.0 / rep.rcond < 1e12);
}

#[test]
fn laplace_potential_is_real() {
    let s = solve_level(Method::Conforming, WaveNumber(0.0), 1, &[], &QuadratureOrders::default()).unwrap();
    let u = s.runs[0].solution.as_slice().unwrap();
    let v = evaluate_potential(WaveNumber(0.0), u, &s.screen, &s.dofs, Vec3::new(0.0, 0.0, 1.0)).unwrap();
    assert!(v.im.abs() <= 1e-12 && v.re.abs() > 0.0, "{v}");
}

#[test]
fn potential_is_point_symmetric() {
    let s = solve_level(Method::Conforming, WaveNumber(5.0), 1, &[], &QuadratureOrders::default()).unwrap();
    let u = s.runs[0].solution.as_slice().unwrap();
    for (x, y, z) in [(0.1, 0.2, 0.3), (-0.4, 0.05, 0.1), (0.7, -0.6, 0.02)] {
        let a = evaluate_potential(WaveNumber(5.0), u, &s.screen, &s.dofs, Vec3::new(x, y, z)).unwrap();
        let b = evaluate_potential(WaveNumber(5.0), u, &s.screen, &s.dofs, Vec3::new(-x, -y, z)).unwrap();
        assert!((a - b).norm() <= 1e-8 * a.norm(), "{a} vs {b}");
    }
}

#[test]
fn point_values_converge_monotonically() {
    let x = Vec3::new(0.1, 0.2, 0.5);
    let orders = QuadratureOrders::default();
    let vals: Vec<Complex64> = (1..=4)
        .map(|l| {
            let s = solve_level(Method::Conforming, WaveNumber(5.0), l, &[], &orders).unwrap();
            evaluate_potential(WaveNumber(5.0), s.runs[0].solution.as_slice().unwrap(), &s.screen, &s.dofs, x).unwrap()
        })
        .collect();
    // Aitken extrapolation through the last three values
    let (a, b, c) = (vals[1], vals[2], vals[3]);
    let ex = c - (c - b) * (c - b) / ((c - b) - (b - a));
    let err: Vec<f64> = vals.iter().map(|v| (v - ex).norm()).collect();
    println!("values {vals:?}\nerrors {err:?}");
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
}
