//! Dense direct solution and evaluation of the representation potential.

use std::io::Write;

use log::info;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Factorize, ReciprocalConditionNum, Solve};
use num_complex::Complex64;

use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::geometry::MeshedScreen;
use crate::kernels::{double_layer_at, WaveNumber};
use crate::quadrature::gauss;
use crate::spaces::{shape_values, DofSystem, SpaceKind};
use crate::vec3::Vec3;

/// Largest accepted `||Ax - b||_inf / ||b||_inf`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionVector {
    pub coefficients: Array1<Complex64>,
    pub kind: SpaceKind,
    pub level: Option<u32>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Array1<Complex64>,
    pub residual: f64,
    /// LAPACK estimate of the reciprocal 1-norm condition number.
    pub rcond: f64,
}

fn inf_norm(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// LU with partial pivoting. Fails if the factorization breaks down or the
/// relative residual exceeds [`RESIDUAL_TOL`].
pub fn solve_dense(sys: &AssembledSystem) -> Result<SolveReport> {
    solve_matrix(&sys.matrix, &sys.rhs)
}

pub fn solve_matrix(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Result<SolveReport> {
    let (r, c) = a.dim();
    if r != c || b.len() != r {
        return Err(Error::Solver(format!("matrix {r}x{c} does not match right-hand side of length {}", b.len())));
    }
    if a.iter().chain(b.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Solver("system contains non-finite entries".into()));
    }
    let t0 = std::time::Instant::now();
    let lu = a.factorize().map_err(|e| Error::Solver(format!("LU factorization failed: {e}")))?;
    let x = lu.solve(b).map_err(|e| Error::Solver(format!("triangular solve failed: {e}")))?;
    let rcond = lu.rcond().map_err(|e| Error::Solver(format!("condition estimate failed: {e}")))?;
    let bn = inf_norm(b);
    let res = inf_norm(&(a.dot(&x) - b));
    let residual = if bn > 0.0 { res / bn } else { res };
    info!("solved N = {r} in {:.1?}: residual {residual:.2e}, condition estimate {:.2e}", t0.elapsed(), 1.0 / rcond);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Solver(format!("relative residual {residual:.3e} exceeds {RESIDUAL_TOL:e}")));
    }
    Ok(SolveReport { x, residual, rcond })
}

/// Distance from `x` to the screen.
pub fn distance_to_screen(screen: &MeshedScreen, x: Vec3) -> f64 {
    (0..screen.geometry.subdomains.len())
        .map(|j| screen.geometry.panel(j).distance_to(x))
        .fold(f64::INFINITY, f64::min)
}

/// `U_h(x) = sum_j u_j int_Gamma K(x, y) phi_j(y) dS_y` with the
/// double-layer kernel `K`; Gauss order 12 per direction when `x` is within
/// `2h` of the screen, else 6.
pub fn evaluate_potential(
    k: WaveNumber,
    u: &[Complex64],
    screen: &MeshedScreen,
    dofs: &DofSystem,
    x: Vec3,
) -> Result<Complex64> {
    if u.len() != dofs.n {
        return Err(Error::Config(format!("solution has {} entries, space has {}", u.len(), dofs.n)));
    }
    let dist = distance_to_screen(screen, x);
    if dist <= 1e-12 {
        return Err(Error::Domain(format!("potential evaluated on the screen at {:?}", x.0)));
    }
    let g = gauss(if dist < 2.0 * screen.h() { 12 } else { 6 });
    let mut sum = Complex64::new(0.0, 0.0);
    for el in dofs.elements(screen) {
        let coef: Vec<(usize, Complex64)> =
            el.dofs.iter().enumerate().filter_map(|(i, d)| d.map(|d| (i, u[d]))).collect();
        if coef.iter().all(|(_, c)| *c == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let n = el.panel.normal();
        let area = el.panel.area();
        for (t, wt) in g.on(0.0, 1.0) {
            for (s, ws) in g.on(0.0, 1.0) {
                let y = el.panel.point(s, t);
                let d = x - y;
                let kern = double_layer_at(k.0, d, d.norm(), n) * (ws * wt * area);
                let phi = shape_values([s, t]);
                let val: Complex64 = coef.iter().map(|(i, c)| c * phi[*i]).sum();
                sum += kern * val;
            }
        }
    }
    Ok(sum)
}

/// CSV `global_dof,re,im`.
pub fn write_solution_csv<W: Write>(mut w: W, u: &[Complex64]) -> std::io::Result<()> {
    writeln!(w, "global_dof,re,im")?;
    for (i, z) in u.iter().enumerate() {
        writeln!(w, "{i},{:e},{:e}", z.re, z.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = Array2::<Complex64>::eye(5);
        let b = Array1::from_shape_fn(5, |i| Complex64::new(i as f64, 1.0));
        let r = solve_matrix(&a, &b).unwrap();
        assert_eq!(r.x, b);
        assert!((r.rcond - 1.0).abs() < 1e-14);
    }

    #[test]
    fn manufactured_solution() {
        let n = 30;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                Complex64::new(4.0, 0.0)
            } else {
                Complex64::new(1.0 / (1.0 + (i + j) as f64), 0.0)
            }
        });
        let x = Array1::from_elem(n, Complex64::new(1.0, 0.0));
        let r = solve_matrix(&a, &a.dot(&x)).unwrap();
        assert!(r.x.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn singular_and_mismatched_systems_fail() {
        let a = Array2::<Complex64>::zeros((3, 3));
        let b = Array1::from_elem(3, Complex64::new(1.0, 0.0));
        assert!(matches!(solve_matrix(&a, &b), Err(Error::Solver(_))));
        let b = Array1::from_elem(2, Complex64::new(1.0, 0.0));
        assert!(matches!(solve_matrix(&Array2::eye(3), &b), Err(Error::Solver(_))));
    }

    #[test]
    fn potential_of_zero_solution_and_on_screen_point() {
        let s = crate::geometry::build_unit_square(0);
        let d = DofSystem::build(&s, SpaceKind::Conforming).unwrap();
        let u = vec![Complex64::new(0.0, 0.0); d.n];
        assert_eq!(evaluate_potential(WaveNumber(5.0), &u, &s, &d, Vec3::new(0.0, 0.0, 1.0)).unwrap().norm(), 0.0);
        assert!(matches!(
            evaluate_potential(WaveNumber(5.0), &u, &s, &d, Vec3::new(0.1, 0.1, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn solution_csv_format() {
        let mut buf = Vec::new();
        write_solution_csv(&mut buf, &[Complex64::new(1.5, -2.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "global_dof,re,im\n0,1.5e0,-2e0\n");
    }
}
