//! Energy, extrapolated limit energy, the residual + jumps error surrogate
//! and empirical convergence rates.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `Re(u^H S u)` for the single-layer part `S` (curl-curl plus normal term)
/// of the system matrix.
pub fn discrete_energy(single_layer: &Array2<Complex64>, u: &[Complex64]) -> f64 {
    assert_eq!(single_layer.nrows(), u.len(), "energy: size mismatch");
    single_layer
        .outer_iter()
        .zip(u)
        .map(|(row, ui)| {
            let su: Complex64 = row.iter().zip(u).map(|(a, b)| a * b).sum();
            (ui.conj() * su).re
        })
        .sum()
}

/// Limit energy of a ladder under the model `E(h) = E* - C h^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEstimate {
    pub value: f64,
    pub c: f64,
    pub alpha: f64,
    /// The `(h, E)` pairs the model was fitted through.
    pub levels: Vec<(f64, f64)>,
}

/// Fits `E(h) = E* - C h^alpha` through the last three `(h, E)` pairs.
pub fn extrapolate_energy(ladder: &[(f64, f64)]) -> Result<EnergyEstimate> {
    if ladder.len() < 3 {
        return Err(Error::Extrapolation(format!("need at least 3 levels, got {}", ladder.len())));
    }
    let w = &ladder[ladder.len() - 3..];
    let [(h1, e1), (h2, e2), (h3, e3)] = [w[0], w[1], w[2]];
    if !(h1 > h2 && h2 > h3 && h3 > 0.0) {
        return Err(Error::Extrapolation("mesh sizes must decrease".into()));
    }
    let (d1, d2) = (e2 - e1, e3 - e2);
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return Err(Error::Extrapolation(format!("energies {e1}, {e2}, {e3} are not strictly monotone")));
    }
    let rho = d1 / d2;
    // (h1^a - h2^a) / (h2^a - h3^a) = rho
    let g = |a: f64| (h1.powf(a) - h2.powf(a)) / (h2.powf(a) - h3.powf(a)) - rho;
    let (q1, q2) = (h1 / h2, h2 / h3);
    let alpha = if (q1 - q2).abs() <= 1e-14 * q1 {
        rho.ln() / q1.ln()
    } else {
        let (mut lo, mut hi) = (1e-8, 2.0);
        if g(lo).signum() == g(hi).signum() {
            return Err(Error::Extrapolation(format!("no rate in (0, 2) fits the energies (ratio {rho})")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid).signum() == g(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Extrapolation(format!("fitted rate {alpha} outside (0, 2)")));
    }
    let c = d1 / (h1.powf(alpha) - h2.powf(alpha));
    Ok(EnergyEstimate { value: e3 + c * h3.powf(alpha), c, alpha, levels: w.to_vec() })
}

/// `(|E* - E_h|^(1/2), ||[u_h]||_{L2(gamma)})`.
pub fn error_surrogate(e_star: f64, energy: f64, jump_norm: f64) -> (f64, f64) {
    ((e_star - energy).abs().sqrt(), jump_norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub level: u32,
    pub h: f64,
    pub ndofs: usize,
    /// `None` for the conforming method.
    pub nu: Option<f64>,
    pub residual: f64,
    pub jumps: f64,
    pub total: f64,
    pub rate: Option<f64>,
}

impl ConvergenceRecord {
    pub fn new(level: u32, h: f64, ndofs: usize, nu: Option<f64>, residual: f64, jumps: f64) -> Self {
        ConvergenceRecord { level, h, ndofs, nu, residual, jumps, total: residual + jumps, rate: None }
    }
}

/// `rate_l = log2(total_{l-1} / total_l)`; the first record has none.
pub fn empirical_rates(records: &mut [ConvergenceRecord]) {
    if let Some(first) = records.first_mut() {
        first.rate = None;
    }
    for i in 1..records.len() {
        records[i].rate = Some((records[i - 1].total / records[i].total).log2());
    }
}

pub const CSV_HEADER: &str = "level,h,ndofs,nu,residual,jumps,total,rate";

pub fn write_records_csv<W: Write>(mut w: W, records: &[ConvergenceRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let nu = r.nu.map(|v| format!("{v:e}")).unwrap_or_default();
        let rate = r.rate.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(w, "{},{:e},{},{},{:e},{:e},{:e},{}", r.level, r.h, r.ndofs, nu, r.residual, r.jumps, r.total, rate)?;
    }
    Ok(())
}
