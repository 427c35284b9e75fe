//! Reference integrators for coplanar panels, independent of the library's
//! singular rules. The inner integral over a polygon is taken in polar form
//! over the triangles fanned from the target point, which cancels the `1/r`
//! singularity. Outer integrals use tensor Gauss graded toward every line
//! where the inner potential loses smoothness.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use screenbem::geometry::{MeshedScreen, Panel};
use screenbem::quadrature::{gauss, Adjacency};
use screenbem::spaces::{jump_trace, shape_values, DofSystem, ElementCurls};
use screenbem::Vec3;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Cells of `[a, b]` refined geometrically toward both ends.
pub fn graded_cells(a: f64, b: f64, levels: usize) -> Vec<(f64, f64)> {
    let m = 0.5 * (a + b);
    let mut cells = Vec::new();
    let mut x = m;
    for _ in 0..levels {
        let y = a + 0.5 * (x - a);
        cells.push((y, x));
        x = y;
    }
    cells.push((a, x));
    let mut x = m;
    for _ in 0..levels {
        let y = b - 0.5 * (b - x);
        cells.push((x, y));
        x = y;
    }
    cells.push((x, b));
    cells
}

/// Graded cells of `[0, 1]` with breakpoints at `extra` (clipped to `(0, 1)`).
pub fn graded_unit(extra: &[f64], levels: usize) -> Vec<(f64, f64)> {
    let mut br: Vec<f64> = vec![0.0, 1.0];
    br.extend(extra.iter().copied().filter(|v| *v > 1e-12 && *v < 1.0 - 1e-12));
    br.sort_by(f64::total_cmp);
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    br.windows(2).flat_map(|w| graded_cells(w[0], w[1], levels)).collect()
}

/// `int_P G_k(x, y) rho(y) dS_y` for `x` in the plane of the convex polygon
/// `corners` (counterclockwise w.r.t. +z).
pub fn polygon_potential(k: f64, x: Vec3, corners: &[Vec3], rho: &dyn Fn(Vec3) -> f64) -> Complex64 {
    let gu = gauss(12);
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..corners.len() {
        let (p, q) = (corners[i], corners[(i + 1) % corners.len()]);
        let e = q - p;
        let l2 = e.dot(e);
        let cross = (p - x).cross(q - x).z();
        if cross.abs() <= 1e-14 * l2 {
            continue;
        }
        let d = cross.abs() / l2.sqrt();
        let u0 = ((x - p).dot(e) / l2).clamp(0.0, 1.0);
        let levels = ((l2.sqrt() / d).log2().ceil().max(0.0) as usize + 3).min(60);
        let mut cells = Vec::new();
        for (a, b) in [(0.0, u0), (u0, 1.0)] {
            if b - a <= 0.0 {
                continue;
            }
            // toward u0
            let toward_a = a == u0;
            let mut edge = if toward_a { b } else { a };
            for _ in 0..levels {
                let next = if toward_a { u0 + 0.5 * (edge - u0) } else { u0 - 0.5 * (u0 - edge) };
                cells.push(if toward_a { (next, edge) } else { (edge, next) });
                edge = next;
            }
            cells.push(if toward_a { (u0, edge) } else { (edge, u0) });
        }
        for (a, b) in cells {
            for (u, wu) in gu.on(a, b) {
                let qp = p + e * u;
                let rq = qp.dist(x);
                let mut inner = Complex64::new(0.0, 0.0);
                let gt = gauss((10 + (1.5 * k * rq).ceil() as usize).min(64));
                for (tau, wt) in gt.on(0.0, 1.0) {
                    let y = x + (qp - x) * tau;
                    let ph = k * tau * rq;
                    inner += Complex64::new(ph.cos(), ph.sin()) * (wt * rho(y));
                }
                sum += inner * (wu * cross / (FOUR_PI * rq));
            }
        }
    }
    sum
}

/// `int_b db(x) int_a G_k(x, y) da(y) dS_y dS_x` for two axis-aligned
/// rectangles in the plane `z = 0`; densities in reference coordinates.
pub fn pair_oracle(
    k: f64,
    a: &Panel,
    b: &Panel,
    da: &(dyn Fn([f64; 2]) -> f64 + Sync),
    db: &(dyn Fn([f64; 2]) -> f64 + Sync),
) -> Complex64 {
    let ca = a.corners();
    let (bs, bt): (Vec<f64>, Vec<f64>) = ca.iter().map(|c| b.local_coords(*c).0).map(|[s, t]| (s, t)).unzip();
    let (cs, ct) = (graded_unit(&bs, 10), graded_unit(&bt, 10));
    let g = gauss(6);
    let rho = |y: Vec3| da(a.local_coords(y).0);
    let area = b.area();
    cs.par_iter()
        .map(|&(s0, s1)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(t0, t1) in &ct {
                for (s, ws) in g.on(s0, s1) {
                    for (t, wt) in g.on(t0, t1) {
                        let x = b.point(s, t);
                        acc += polygon_potential(k, x, &ca, &rho) * (ws * wt * area * db([s, t]));
                    }
                }
            }
            acc
        })
        .sum()
}

/// `int_seg psi(lam) t . int_panel G_k(x, y) c(y) dS_y ds_x` for a segment
/// and a panel in the plane `z = 0`.
pub fn segment_oracle(
    k: f64,
    start: Vec3,
    end: Vec3,
    panel: &Panel,
    psi: &(dyn Fn(f64) -> f64 + Sync),
    c: &(dyn Fn([f64; 2]) -> Vec3 + Sync),
) -> Complex64 {
    let e = end - start;
    let len = e.norm();
    let t = e * (1.0 / len);
    let corners = panel.corners();
    let lams: Vec<f64> = corners.iter().map(|p| (*p - start).dot(e) / (len * len)).collect();
    let cells = graded_unit(&lams, 30);
    let g = gauss(10);
    let rho = |y: Vec3| t.dot(c(panel.local_coords(y).0));
    cells
        .par_iter()
        .map(|&(l0, l1)| {
            g.on(l0, l1)
                .map(|(lam, w)| polygon_potential(k, start + e * lam, &corners, &rho) * (w * len * psi(lam)))
                .sum::<Complex64>()
        })
        .sum()
}

/// Plain tensor Gauss of the full kernel over two panels; smooth integrands only.
pub fn tensor_pair(
    k: f64,
    a: &Panel,
    b: &Panel,
    da: &dyn Fn([f64; 2]) -> f64,
    db: &dyn Fn([f64; 2]) -> f64,
    q: usize,
) -> Complex64 {
    let g = gauss(q);
    let pts = |p: &Panel| -> Vec<(Vec3, [f64; 2], f64)> {
        let mut v = Vec::new();
        for (s, ws) in g.on(0.0, 1.0) {
            for (t, wt) in g.on(0.0, 1.0) {
                v.push((p.point(s, t), [s, t], ws * wt * p.area()));
            }
        }
        v
    };
    let (pa, pb) = (pts(a), pts(b));
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, sx, wx) in &pb {
        for (y, sy, wy) in &pa {
            let r = x.dist(*y);
            sum += Complex64::new((k * r).cos(), (k * r).sin()) * (wx * wy * db(*sx) * da(*sy) / (FOUR_PI * r));
        }
    }
    sum
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Panel {
    Panel::rectangle(x0, y0, x1, y1, 0.0)
}

pub fn da(st: [f64; 2]) -> f64 {
    1.0 + 0.5 * st[0] - 0.3 * st[1] + 0.7 * st[0] * st[1]
}

pub fn db(st: [f64; 2]) -> f64 {
    0.8 - 0.4 * st[0] + 0.6 * st[1] - 0.2 * st[0] * st[1]
}

/// Three pairs per adjacency class, including nonmatching contacts.
pub fn frozen_pairs() -> Vec<(Adjacency, Panel, Panel)> {
    use Adjacency::*;
    vec![
        (Coincident, rect(0.0, 0.0, 1.0, 1.0), rect(0.0, 0.0, 1.0, 1.0)),
        (Coincident, rect(0.0, 0.0, 2.0, 0.5), rect(0.0, 0.0, 2.0, 0.5)),
        (Coincident, rect(0.3, -0.2, 0.4, -0.1), rect(0.3, -0.2, 0.4, -0.1)),
        (Edge, rect(0.0, 0.0, 1.0, 1.0), rect(1.0, 0.0, 2.0, 1.0)),
        (Edge, rect(0.0, 0.0, 1.0, 1.0), rect(1.0, 0.0, 1.5, 0.5)),
        (Edge, rect(0.0, 0.0, 1.0, 1.0), rect(0.25, 1.0, 0.75, 1.5)),
        (Vertex, rect(0.0, 0.0, 1.0, 1.0), rect(1.0, 1.0, 2.0, 2.0)),
        (Vertex, rect(0.0, 0.0, 1.0, 1.0), rect(1.0, -0.5, 1.5, 0.0)),
        (Vertex, rect(0.0, 0.0, 0.25, 1.0), rect(-0.5, 1.0, 0.0, 1.125)),
        (Disjoint, rect(0.0, 0.0, 1.0, 1.0), rect(1.1, 0.0, 2.1, 1.0)),
        (Disjoint, rect(0.0, 0.0, 1.0, 1.0), rect(2.0, 1.5, 2.5, 2.0)),
        (Disjoint, rect(0.0, 0.0, 1.0, 1.0), rect(5.0, 3.0, 6.0, 4.0)),
    ]
}

/// `phi = (a0 + a1 x + a2 y + a3 sin(2x + y), b0 + b1 x + b2 y + b3 cos(x - 3y), 0)`.
pub struct Field([f64; 4], [f64; 4]);

impl Field {
    pub fn random(rng: &mut impl Rng) -> Self {
        Field(std::array::from_fn(|_| rng.random_range(-1.0..1.0)), std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
    }

    pub fn at(&self, p: Vec3) -> Vec3 {
        let (a, b, x, y) = (self.0, self.1, p.x(), p.y());
        Vec3::new(
            a[0] + a[1] * x + a[2] * y + a[3] * (2.0 * x + y).sin(),
            b[0] + b[1] * x + b[2] * y + b[3] * (x - 3.0 * y).cos(),
            0.0,
        )
    }

    /// `d phi_2 / dx - d phi_1 / dy`
    pub fn rot(&self, p: Vec3) -> f64 {
        let (a, b, x, y) = (self.0, self.1, p.x(), p.y());
        (b[1] - b[3] * (x - 3.0 * y).sin()) - (a[2] + a[3] * (2.0 * x + y).cos())
    }
}

/// Both sides of `sum_pieces int (t . phi) [v] ds = sum_elements int (rot phi) v - curl v . phi dA`,
/// and the sum of the absolute values of all terms.
pub fn both_sides(screen: &MeshedScreen, dofs: &DofSystem, v: &[Complex64], phi: &Field) -> (Complex64, Complex64, f64) {
    let g = gauss(8);
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (piece, jump) in screen.skeleton.pieces.iter().zip(jump_trace(dofs, screen, v)) {
        for (l, w) in g.on(0.0, 1.0) {
            let x = piece.start + (piece.end - piece.start) * l;
            let j = jump.start * (1.0 - l) + jump.end * l;
            let term = j * (w * piece.length() * piece.tangent.dot(phi.at(x)));
            lhs += term;
            scale += term.norm();
        }
    }
    let mut rhs = Complex64::new(0.0, 0.0);
    for el in dofs.elements(screen) {
        let curls = ElementCurls::new(&el.panel);
        let area = el.panel.area();
        for (t, wt) in g.on(0.0, 1.0) {
            for (s, ws) in g.on(0.0, 1.0) {
                let x = el.panel.point(s, t);
                let (phi_x, c, n) = (phi.at(x), curls.at([s, t]), shape_values([s, t]));
                let mut val = Complex64::new(0.0, 0.0);
                let mut cv = Complex64::new(0.0, 0.0);
                for (i, d) in el.dofs.iter().enumerate() {
                    if let Some(d) = d {
                        val += v[*d] * n[i];
                        cv += v[*d] * c[i].dot(phi_x);
                    }
                }
                let term = (val * phi.rot(x) - cv) * (ws * wt * area);
                rhs += term;
                scale += term.norm();
            }
        }
    }
    (lhs, rhs, scale)
}
