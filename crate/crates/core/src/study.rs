//! Mesh ladders for the convergence experiment: the conforming method on the
//! square as one subdomain, and the Nitsche method on the three-subdomain
//! decomposition of the same square, with data `f = 1`.

use log::info;
use ndarray::Array1;
use num_complex::Complex64;

use crate::assembly::{AssembledSystem, NitscheParams, SystemTerms};
use crate::error::{Error, Result};
use crate::geometry::{build_model_screen, build_unit_square, MeshedScreen};
use crate::kernels::WaveNumber;
use crate::postproc::{discrete_energy, empirical_rates, error_surrogate, extrapolate_energy, ConvergenceRecord, EnergyEstimate};
use crate::quadrature::QuadratureOrders;
use crate::solver::solve_dense;
use crate::spaces::{jump_l2_norm, jump_trace, DofSystem, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Conforming,
    Nitsche,
}

impl Method {
    pub fn screen(self, level: u32) -> MeshedScreen {
        match self {
            Method::Conforming => build_unit_square(level),
            Method::Nitsche => build_model_screen(level),
        }
    }

    pub fn space(self) -> SpaceKind {
        match self {
            Method::Conforming => SpaceKind::Conforming,
            Method::Nitsche => SpaceKind::Nonconforming,
        }
    }
}

/// One solve on one level.
#[derive(Debug, Clone)]
pub struct Run {
    /// Penalty used; `None` for the conforming method.
    pub nu: Option<f64>,
    pub solution: Array1<Complex64>,
    pub energy: f64,
    pub jumps: f64,
    pub residual: f64,
    pub rcond: f64,
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub level: u32,
    pub h: f64,
    pub ndofs: usize,
    pub screen: MeshedScreen,
    pub dofs: DofSystem,
    pub runs: Vec<Run>,
}

pub fn unit_load(_: crate::vec3::Vec3) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Assembles once and solves for every penalty in `params` (a single solve
/// for the conforming method, which ignores them).
pub fn solve_on_screen(
    k: WaveNumber,
    screen: MeshedScreen,
    kind: SpaceKind,
    params: &[NitscheParams],
    orders: &QuadratureOrders,
    level: u32,
) -> Result<LevelResult> {
    solve_on_screen_with(k, screen, kind, params, orders, level, |_| Ok(()))
}

/// [`solve_on_screen`], handing every assembled system to `inspect` before
/// it is solved.
pub fn solve_on_screen_with(
    k: WaveNumber,
    screen: MeshedScreen,
    kind: SpaceKind,
    params: &[NitscheParams],
    orders: &QuadratureOrders,
    level: u32,
    mut inspect: impl FnMut(&AssembledSystem) -> Result<()>,
) -> Result<LevelResult> {
    let dofs = DofSystem::build(&screen, kind)?;
    let terms = SystemTerms::assemble(k, &screen, &dofs, orders, unit_load)?;
    let h = screen.h();
    let nus: Vec<Option<f64>> = match kind {
        SpaceKind::Conforming => vec![None],
        SpaceKind::Nonconforming => {
            if params.is_empty() {
                return Err(Error::Config("the Nitsche method needs a penalty".into()));
            }
            params.iter().map(|p| Some(p.nu(h))).collect()
        }
    };
    let mut runs = Vec::with_capacity(nus.len());
    for nu in nus {
        let sys = terms.system(nu);
        inspect(&sys)?;
        let rep = solve_dense(&sys).map_err(|e| Error::Solver(format!("level {level}: {e}")))?;
        drop(sys);
        let u = rep.x.as_slice().expect("contiguous solution");
        let energy = discrete_energy(&terms.single_layer, u);
        let jumps = match kind {
            SpaceKind::Conforming => 0.0,
            SpaceKind::Nonconforming => jump_l2_norm(&jump_trace(&dofs, &screen, u)),
        };
        info!("level {level}, nu {nu:?}: energy {energy:.10e}, jumps {jumps:.4e}");
        runs.push(Run { nu, solution: rep.x, energy, jumps, residual: rep.residual, rcond: rep.rcond });
    }
    Ok(LevelResult { level, h, ndofs: dofs.n, screen, dofs, runs })
}

pub fn solve_level(
    method: Method,
    k: WaveNumber,
    level: u32,
    params: &[NitscheParams],
    orders: &QuadratureOrders,
) -> Result<LevelResult> {
    solve_on_screen(k, method.screen(level), method.space(), params, orders, level)
}

/// Conforming ladder and its extrapolated limit energy.
pub fn conforming_ladder(
    k: WaveNumber,
    levels: std::ops::RangeInclusive<u32>,
    orders: &QuadratureOrders,
) -> Result<(Vec<LevelResult>, EnergyEstimate)> {
    let results: Vec<LevelResult> =
        levels.map(|l| solve_level(Method::Conforming, k, l, &[], orders)).collect::<Result<_>>()?;
    let ladder: Vec<(f64, f64)> = results.iter().map(|r| (r.h, r.runs[0].energy)).collect();
    let est = extrapolate_energy(&ladder)?;
    info!("extrapolated energy {:.10e} (alpha {:.4}, C {:.4e})", est.value, est.alpha, est.c);
    Ok((results, est))
}

/// Convergence records of run `run` on each level against the limit energy.
pub fn records(levels: &[LevelResult], run: usize, e_star: f64) -> Vec<ConvergenceRecord> {
    let mut out: Vec<ConvergenceRecord> = levels
        .iter()
        .map(|l| {
            let r = &l.runs[run];
            let (res, jumps) = error_surrogate(e_star, r.energy, r.jumps);
            ConvergenceRecord::new(l.level, l.h, l.ndofs, r.nu, res, jumps)
        })
        .collect();
    empirical_rates(&mut out);
    out
}
