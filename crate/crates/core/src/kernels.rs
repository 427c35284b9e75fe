//! Helmholtz kernels.
//!
//! The single-layer kernel is `G_k(x, y) = e^{ik|x-y|} / (4 pi |x-y|)`. The
//! double-layer kernel is its normal derivative in `y`,
//! `(1/4pi) d/dn_y [e^{ikr}/r]`, which for `k = 0` reduces to
//! `n_y . (x - y) / (4 pi r^3)`. Any global sign or prefactor of an integral
//! operator lives with the operator, not here.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

const FOUR_PI: f64 = 4.0 * PI;

/// Below this value of `k r` the smooth remainder is evaluated by its series.
pub const SERIES_THRESHOLD: f64 = 1e-2;

/// Real wave number; `k = 0` is the Laplace case. Negative values are
/// accepted and give the complex-conjugate (incoming-wave) kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveNumber(pub f64);

impl WaveNumber {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Domain(format!("wave number must be finite, got {k}")));
        }
        Ok(WaveNumber(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn negated(self) -> Self {
        WaveNumber(-self.0)
    }
}

/// `G_k` as a function of the distance `r > 0`.
#[inline]
pub fn single_layer_at(k: f64, r: f64) -> Complex64 {
    let (s, c) = (k * r).sin_cos();
    Complex64::new(c, s) / (FOUR_PI * r)
}

pub fn single_layer_kernel(k: WaveNumber, x: Vec3, y: Vec3) -> Result<Complex64> {
    let r = x.dist(y);
    if r == 0.0 {
        return Err(Error::Domain("single-layer kernel evaluated at x = y".into()));
    }
    Ok(single_layer_at(k.0, r))
}

/// Static/smooth splitting `G_k = 1/(4 pi r) + (e^{ikr} - 1)/(4 pi r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSplit {
    /// `1/(4 pi r)`; `+inf` at `r = 0`.
    pub static_part: f64,
    /// Continuous remainder, equal to `ik/(4 pi)` at `r = 0`.
    pub remainder: Complex64,
}

impl KernelSplit {
    pub fn total(&self) -> Complex64 {
        self.remainder + self.static_part
    }
}

/// `(e^{ikr} - 1)/(4 pi r)`, by a six-term Taylor series for small `k r`.
pub fn smooth_remainder(k: f64, r: f64) -> Complex64 {
    let kr = k * r;
    if kr.abs() < SERIES_THRESHOLD {
        // sum_{m=1..6} (ik)^m r^(m-1) / m!
        let ik = Complex64::new(0.0, k);
        let mut term = ik;
        let mut sum = term;
        for m in 2..=6 {
            term = term * ik * r / m as f64;
            sum += term;
        }
        sum / FOUR_PI
    } else {
        let (s, c) = kr.sin_cos();
        Complex64::new(c - 1.0, s) / (FOUR_PI * r)
    }
}

pub fn kernel_split(k: WaveNumber, x: Vec3, y: Vec3) -> KernelSplit {
    let r = x.dist(y);
    KernelSplit {
        static_part: if r == 0.0 { f64::INFINITY } else { 1.0 / (FOUR_PI * r) },
        remainder: smooth_remainder(k.0, r),
    }
}

/// `(1/4pi) d/dn_y [e^{ikr}/r]` for `x != y`.
pub fn double_layer_kernel(k: WaveNumber, x: Vec3, y: Vec3, n_y: Vec3) -> Result<Complex64> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Domain("double-layer kernel evaluated at x = y".into()));
    }
    Ok(double_layer_at(k.0, d, r, n_y))
}

/// Hot-path variant taking `d = x - y` and `r = |d|`.
#[inline]
pub fn double_layer_at(k: f64, d: Vec3, r: f64, n_y: Vec3) -> Complex64 {
    let (s, c) = (k * r).sin_cos();
    let e = Complex64::new(c, s);
    // d/dr [e^{ikr}/r] = e^{ikr}(ikr - 1)/r^2 and dr/dn_y = -n_y.d/r
    e * Complex64::new(1.0, -k * r) * (n_y.dot(d) / (FOUR_PI * r * r * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(v: f64) -> WaveNumber {
        WaveNumber::new(v).unwrap()
    }

    #[test]
    fn static_kernel_at_unit_distance() {
        let g = single_layer_kernel(k(0.0), Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((g.re - 0.079_577_471_545_947_67).abs() < 1e-16);
        assert_eq!(g.im, 0.0);
    }

    #[test]
    fn helmholtz_kernel_direct_formula() {
        let g = single_layer_kernel(k(5.0), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let expect = Complex64::new(5f64.cos(), 5f64.sin()) / (4.0 * PI);
        assert!((g - expect).norm() < 1e-16);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let p = Vec3::new(0.3, 0.1, 0.0);
        assert!(matches!(single_layer_kernel(k(1.0), p, p), Err(Error::Domain(_))));
        assert!(matches!(double_layer_kernel(k(1.0), p, p, Vec3::new(0.0, 0.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(WaveNumber::new(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn split_limits() {
        let s = kernel_split(k(0.0), Vec3::ZERO, Vec3::new(0.3, 0.0, 0.0));
        assert_eq!(s.remainder, Complex64::new(0.0, 0.0));
        let s = kernel_split(k(5.0), Vec3::ZERO, Vec3::ZERO);
        assert!(s.static_part.is_infinite());
        assert!((s.remainder - Complex64::new(0.0, 5.0 / (4.0 * PI))).norm() < 1e-16);
        let s = kernel_split(k(5.0), Vec3::ZERO, Vec3::new(0.0, 0.3, 0.0));
        let g = single_layer_kernel(k(5.0), Vec3::ZERO, Vec3::new(0.0, 0.3, 0.0)).unwrap();
        assert!((s.total() - g).norm() <= 1e-15 * g.norm());
    }

    #[test]
    fn series_branch_is_continuous_at_threshold() {
        let kk = 5.0;
        let r = SERIES_THRESHOLD / kk;
        let below = smooth_remainder(kk, r * (1.0 - 1e-9));
        let above = smooth_remainder(kk, r * (1.0 + 1e-9));
        assert!((below - above).norm() < 1e-9);
    }

    #[test]
    fn double_layer_static_value() {
        let v = double_layer_kernel(k(0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((v.re - 1.0 / (4.0 * PI)).abs() < 1e-16 && v.im == 0.0);
    }

    #[test]
    fn double_layer_vanishes_for_tangential_normal() {
        for kk in [0.0, 1.0, 5.0] {
            let v = double_layer_kernel(k(kk), Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)).unwrap();
            assert_eq!(v.norm(), 0.0);
        }
    }

    #[test]
    fn double_layer_matches_finite_difference() {
        let x = Vec3::new(0.0, 0.0, 2.0);
        let n = Vec3::new(0.0, 0.0, 1.0);
        let step = 1e-6;
        let g = |y: Vec3| single_layer_kernel(k(5.0), x, y).unwrap();
        let fd = (g(n * step) - g(n * -step)) / (2.0 * step);
        let dl = double_layer_kernel(k(5.0), x, Vec3::ZERO, n).unwrap();
        assert!((dl - fd).norm() <= 1e-6 * dl.norm());
    }

    proptest! {
        #[test]
        fn reciprocity_and_conjugation(
            kk in 0.0f64..20.0,
            a in prop::array::uniform3(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let (x, y) = (Vec3(a), Vec3(b));
            prop_assume!(x.dist(y) > 1e-6);
            let g = single_layer_kernel(k(kk), x, y).unwrap();
            prop_assert_eq!(g, single_layer_kernel(k(kk), y, x).unwrap());
            prop_assert_eq!(single_layer_kernel(k(-kk), x, y).unwrap(), g.conj());
            prop_assert!((g.norm() - 1.0 / (4.0 * PI * x.dist(y))).abs() <= 1e-14 * g.norm());
        }

        #[test]
        fn split_consistency(kr in 1e-8f64..10.0, kk in 0.5f64..10.0) {
            let r = kr / kk;
            let s = kernel_split(k(kk), Vec3::ZERO, Vec3::new(r, 0.0, 0.0));
            let g = single_layer_at(kk, r);
            prop_assert!((s.total() - g).norm() <= 1e-14 * g.norm());
        }
    }
}
