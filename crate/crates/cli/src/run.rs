//! Convergence study and field slice drivers writing CSV output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;

use screenbem::assembly::{write_matrix_dump, AssembledSystem, NitscheParams};
use screenbem::postproc::{extrapolate_energy, write_records_csv, ConvergenceRecord, EnergyEstimate};
use screenbem::solver::{distance_to_screen, evaluate_potential, write_solution_csv};
use screenbem::study::{records, solve_on_screen_with, LevelResult, Method};
use screenbem::{Result, Vec3, WaveNumber};

use crate::config::{RunConfig, SliceSpec};

pub const SUMMARY_HEADER: &str = "method,level,h,ndofs,nu,residual,jumps,total,rate";
pub const ENERGY_HEADER: &str = "k,e_star,alpha,c,levels";

#[derive(Debug, Clone)]
pub struct ConvergenceOutput {
    pub estimate: EnergyEstimate,
    /// One table per penalty (a single one for the conforming method), with its file.
    pub tables: Vec<(PathBuf, Vec<ConvergenceRecord>)>,
    pub summary: PathBuf,
    pub energy: PathBuf,
}

#[derive(Debug, Clone)]
pub struct FieldSliceOutput {
    pub path: PathBuf,
    pub written: usize,
    /// Grid points on the screen, where the potential jumps.
    pub skipped: usize,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn params_and_labels(cfg: &RunConfig) -> (Vec<NitscheParams>, Vec<String>) {
    match &cfg.penalty {
        Some(p) => (p.params(), p.labels()),
        None => (Vec::new(), vec![String::new()]),
    }
}

fn suffix(label: &str) -> String {
    if label.is_empty() {
        String::new()
    } else {
        format!("_{label}")
    }
}

/// Solves `cfg.method` on one level, writing the requested dumps.
fn solve_dumping(cfg: &RunConfig, level: u32, dump: bool) -> Result<LevelResult> {
    let k = WaveNumber::new(cfg.k)?;
    let (params, labels) = params_and_labels(cfg);
    let screen = cfg.screen.build(level);
    let stem = format!("{}_level{level}", cfg.method_name());
    if dump && cfg.dump_mesh {
        let mut w = create(&cfg.out.join(format!("mesh_{stem}.txt")))?;
        screen.dump(&mut w)?;
        w.flush()?;
    }
    let mut run = 0;
    let result = solve_on_screen_with(k, screen, cfg.method.space(), &params, &cfg.orders, level, |sys: &AssembledSystem| {
        if dump && cfg.dump_matrix {
            let mut w = create(&cfg.out.join(format!("matrix_{stem}{}.bin", suffix(&labels[run]))))?;
            write_matrix_dump(&mut w, sys)?;
            w.flush()?;
        }
        run += 1;
        Ok(())
    })?;
    if dump && cfg.dump_solution {
        for (r, label) in result.runs.iter().zip(&labels) {
            let mut w = create(&cfg.out.join(format!("solution_{stem}{}.csv", suffix(label))))?;
            write_solution_csv(&mut w, r.solution.as_slice().expect("contiguous solution"))?;
            w.flush()?;
        }
    }
    Ok(result)
}

/// Runs the convergence study of `cfg` and writes its tables to `cfg.out`.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceOutput> {
    fs::create_dir_all(&cfg.out)?;
    let (_, labels) = params_and_labels(cfg);
    let conforming_square = cfg.method == Method::Conforming;

    // The conforming study shares its solves with the energy ladder.
    let mut energies: Vec<(u32, f64, f64)> = Vec::new();
    let mut study: Vec<LevelResult> = Vec::new();
    if conforming_square {
        let lo = (*cfg.levels.start()).min(*cfg.energy_levels.start());
        let hi = (*cfg.levels.end()).max(*cfg.energy_levels.end());
        for level in lo..=hi {
            let wanted = cfg.levels.contains(&level);
            let r = solve_dumping(cfg, level, wanted)?;
            energies.push((level, r.h, r.runs[0].energy));
            if wanted {
                study.push(r);
            }
        }
    } else {
        let energy_cfg = RunConfig { method: Method::Conforming, screen: crate::ScreenKind::Square, penalty: None, ..cfg.clone() };
        for level in cfg.energy_levels.clone() {
            let r = solve_dumping(&energy_cfg, level, false)?;
            energies.push((level, r.h, r.runs[0].energy));
        }
        for level in cfg.levels.clone() {
            study.push(solve_dumping(cfg, level, true)?);
        }
    }
    let ladder: Vec<(f64, f64)> =
        energies.iter().filter(|(l, _, _)| cfg.energy_levels.contains(l)).map(|&(_, h, e)| (h, e)).collect();
    let estimate = extrapolate_energy(&ladder)?;
    info!("extrapolated energy {:.10e} (alpha {:.4})", estimate.value, estimate.alpha);

    let mut tables = Vec::new();
    for (run, label) in labels.iter().enumerate() {
        let recs = records(&study, run, estimate.value);
        let path = cfg.out.join(format!("{}{}.csv", cfg.method_name(), suffix(label)));
        let mut w = create(&path)?;
        write_records_csv(&mut w, &recs)?;
        w.flush()?;
        tables.push((path, recs));
    }

    let summary = cfg.out.join("summary.csv");
    let mut w = create(&summary)?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    for (_, recs) in &tables {
        for r in recs {
            let nu = r.nu.map(|v| format!("{v:e}")).unwrap_or_default();
            let rate = r.rate.map(|v| format!("{v:.6}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{:e},{},{nu},{:e},{:e},{:e},{rate}",
                cfg.method_name(),
                r.level,
                r.h,
                r.ndofs,
                r.residual,
                r.jumps,
                r.total
            )?;
        }
    }
    w.flush()?;

    let energy = cfg.out.join("energy.csv");
    let mut w = create(&energy)?;
    writeln!(w, "{ENERGY_HEADER}")?;
    let levels = format!("{}..{}", cfg.energy_levels.start(), cfg.energy_levels.end());
    writeln!(w, "{:e},{:.15e},{:.15e},{:.15e},{levels}", cfg.k, estimate.value, estimate.alpha, estimate.c)?;
    writeln!(w)?;
    writeln!(w, "level,h,energy")?;
    for (l, h, e) in energies.iter().filter(|(l, _, _)| cfg.energy_levels.contains(l)) {
        writeln!(w, "{l},{h:e},{e:.15e}")?;
    }
    w.flush()?;

    Ok(ConvergenceOutput { estimate, tables, summary, energy })
}

/// Solves on the finest configured level with the first penalty and
/// evaluates the potential on the grid of `slice`.
pub fn run_field_slice(cfg: &RunConfig, slice: &SliceSpec) -> Result<FieldSliceOutput> {
    fs::create_dir_all(&cfg.out)?;
    let k = WaveNumber::new(cfg.k)?;
    let level = *cfg.levels.end();
    let (params, labels) = params_and_labels(cfg);
    let screen = cfg.screen.build(level);
    let result = solve_on_screen_with(k, screen, cfg.method.space(), &params[..params.len().min(1)], &cfg.orders, level, |_| Ok(()))?;
    let u = result.runs[0].solution.as_slice().expect("contiguous solution");

    let points = slice.points();
    let values: Vec<Option<Complex64>> = points
        .par_iter()
        .map(|p| {
            let x = Vec3::new(p[0], p[1], p[2]);
            if distance_to_screen(&result.screen, x) <= 1e-12 {
                Ok(None)
            } else {
                evaluate_potential(k, u, &result.screen, &result.dofs, x).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let path = cfg.out.join(format!("slice_{}_level{level}{}.csv", cfg.method_name(), suffix(&labels[0])));
    let mut w = create(&path)?;
    writeln!(w, "x,y,z,re,im")?;
    let mut skipped = 0;
    for (p, v) in points.iter().zip(&values) {
        match v {
            Some(z) => writeln!(w, "{:e},{:e},{:e},{:e},{:e}", p[0], p[1], p[2], z.re, z.im)?,
            None => skipped += 1,
        }
    }
    w.flush()?;
    if skipped > 0 {
        warn!("skipped {skipped} grid points on the screen");
    }
    Ok(FieldSliceOutput { path, written: points.len() - skipped, skipped })
}
