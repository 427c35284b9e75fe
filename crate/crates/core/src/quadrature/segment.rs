use num_complex::Complex64;

use super::pair::{on_segment, split_at, tensor_points, SNAP_TOL};
use super::{gauss, graded_intervals, on_edges, OrderPolicy, PanelView, QuadratureOrders, TensorPoint};
use super::{MAX_SUBDIVISION_DEPTH, NEAR_FIELD_RATIO};
use crate::error::{Error, Result};
use crate::geometry::Panel;
use crate::kernels::{single_layer_at, WaveNumber};
use crate::vec3::{segment_segment_dist, Vec3};

/// Straight segment `start + lambda (end - start)`, `lambda in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Vec3,
    pub end: Vec3,
}

impl Segment {
    pub fn new(start: Vec3, end: Vec3) -> Self {
        Segment { start, end }
    }

    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }

    pub fn tangent(&self) -> Vec3 {
        (self.end - self.start).normalized()
    }

    pub fn point(&self, lam: f64) -> Vec3 {
        self.start + (self.end - self.start) * lam
    }
}

/// Segment parameter, panel parent reference coordinates, weight (line and
/// area elements included) and `|x - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentNode {
    pub lam: f64,
    pub b: [f64; 2],
    pub w: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPoint {
    pub lam: f64,
    pub x: Vec3,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentRulePart {
    Nodes(Vec<SegmentNode>),
    Tensor { seg: Vec<SegmentPoint>, panel: Vec<TensorPoint> },
}

/// Quadrature for `int_seg int_panel f(x, y) dS_y ds_x` with a `1/|x - y|`
/// singularity where the segment touches the closed panel.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPanelRule {
    pub parts: Vec<SegmentRulePart>,
}

impl SegmentPanelRule {
    pub fn new(seg: &Segment, panel: &Panel, orders: &QuadratureOrders) -> Result<Self> {
        Self::build(seg, panel, OrderPolicy::Graded(*orders))
    }

    pub fn with_order(seg: &Segment, panel: &Panel, q: usize) -> Result<Self> {
        Self::build(seg, panel, OrderPolicy::Uniform(q))
    }

    fn build(seg: &Segment, panel: &Panel, policy: OrderPolicy) -> Result<Self> {
        let tol = SNAP_TOL * seg.length().max(panel.diameter());
        let mut parts = Vec::new();
        let view = SegView { p0: seg.start, p1: seg.end, lam0: 0.0, lam1: 1.0 };
        build_seg(view, PanelView::whole(panel), policy, tol, 0, &mut parts)?;
        Ok(SegmentPanelRule { parts })
    }

    /// Calls `f(lambda, b, w, r)` for every node.
    pub fn for_each(&self, mut f: impl FnMut(f64, [f64; 2], f64, f64)) {
        for part in &self.parts {
            match part {
                SegmentRulePart::Nodes(nodes) => {
                    for n in nodes {
                        f(n.lam, n.b, n.w, n.r);
                    }
                }
                SegmentRulePart::Tensor { seg, panel } => {
                    for ps in seg {
                        for pp in panel {
                            f(ps.lam, pp.st, ps.w * pp.w, ps.x.dist(pp.x));
                        }
                    }
                }
            }
        }
    }
}

/// `int_seg psi(x) t . int_panel G_k(x, y) c(y) dS_y ds_x`, with `t` the
/// segment tangent, `psi` a real density in the segment parameter and `c` a
/// vector density in panel reference coordinates. One order `q` throughout.
pub fn segment_panel_integrate(
    k: WaveNumber,
    seg: &Segment,
    panel: &Panel,
    psi: impl Fn(f64) -> f64,
    c: impl Fn([f64; 2]) -> Vec3,
    q: usize,
) -> Result<Complex64> {
    if q == 0 || q > 64 {
        return Err(Error::Config(format!("quadrature order {q} outside 1..=64")));
    }
    let t = seg.tangent();
    let rule = SegmentPanelRule::with_order(seg, panel, q)?;
    let mut sum = Complex64::new(0.0, 0.0);
    rule.for_each(|lam, b, w, r| sum += single_layer_at(k.0, r) * (w * psi(lam) * t.dot(c(b))));
    Ok(sum)
}

#[derive(Debug, Clone, Copy)]
struct SegView {
    p0: Vec3,
    p1: Vec3,
    lam0: f64,
    lam1: f64,
}

impl SegView {
    fn lam(&self, sigma: f64) -> f64 {
        self.lam0 + sigma * (self.lam1 - self.lam0)
    }

    fn len(&self) -> f64 {
        self.p0.dist(self.p1)
    }

    fn cut(&self, sigmas: &[f64]) -> Vec<SegView> {
        let mut cs = vec![0.0, 1.0];
        cs.extend_from_slice(sigmas);
        cs.sort_by(f64::total_cmp);
        cs.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        cs.windows(2)
            .map(|w| SegView {
                p0: self.p0 + (self.p1 - self.p0) * w[0],
                p1: self.p0 + (self.p1 - self.p0) * w[1],
                lam0: self.lam(w[0]),
                lam1: self.lam(w[1]),
            })
            .collect()
    }

    fn param_of(&self, p: Vec3) -> f64 {
        let d = self.p1 - self.p0;
        (p - self.p0).dot(d) / d.dot(d)
    }
}

fn seg_panel_distance(s: &SegView, v: &PanelView) -> f64 {
    let c = v.panel.corners();
    let mut d = v.panel.distance_to(s.p0).min(v.panel.distance_to(s.p1));
    for i in 0..4 {
        d = d.min(segment_segment_dist(s.p0, s.p1, c[i], c[(i + 1) % 4]));
    }
    d
}

fn build_seg(
    s: SegView,
    v: PanelView,
    policy: OrderPolicy,
    tol: f64,
    depth: u32,
    parts: &mut Vec<SegmentRulePart>,
) -> Result<()> {
    // panel corners inside the segment: cut the segment there first
    let len = s.len();
    let inner: Vec<f64> = v
        .panel
        .corners()
        .iter()
        .filter(|&&c| on_segment(c, s.p0, s.p1, tol) && c.dist(s.p0) > tol && c.dist(s.p1) > tol)
        .map(|&c| s.param_of(c))
        .collect();
    if !inner.is_empty() {
        for sub in s.cut(&inner) {
            build_seg(sub, v, policy, tol, depth, parts)?;
        }
        return Ok(());
    }
    let mut ends = Vec::new();
    for (i, p) in [s.p0, s.p1].into_iter().enumerate() {
        if let Some(st) = v.locate(p, tol) {
            let e = on_edges(&v, st, tol);
            if !e.iter().any(|&x| x) {
                return Err(Error::Quadrature("segment enters the panel interior".into()));
            }
            ends.push((i, st, e));
        }
    }
    match ends.len() {
        0 => {
            let dist = seg_panel_distance(&s, &v);
            if dist <= tol {
                return Err(Error::Quadrature("unsupported segment-panel contact".into()));
            }
            let scale = len.max(v.panel.diameter());
            if dist < NEAR_FIELD_RATIO * scale && depth < MAX_SUBDIVISION_DEPTH {
                if len >= v.panel.diameter() {
                    for sub in s.cut(&[0.5]) {
                        build_seg(sub, v, policy, tol, depth + 1, parts)?;
                    }
                } else {
                    for sub in v.quarters() {
                        build_seg(s, sub, policy, tol, depth + 1, parts)?;
                    }
                }
                return Ok(());
            }
            let q = policy.disjoint(dist / scale);
            let g = gauss(q);
            let seg_pts = g
                .on(0.0, 1.0)
                .map(|(x, w)| SegmentPoint { lam: s.lam(x), x: s.p0 + (s.p1 - s.p0) * x, w: w * len })
                .collect();
            parts.push(SegmentRulePart::Tensor { seg: seg_pts, panel: tensor_points(&v, q) });
            Ok(())
        }
        2 => {
            let (e0, e1) = (ends[0].2, ends[1].2);
            let Some(edge) = (0..4).find(|&i| e0[i] && e1[i]) else {
                return Err(Error::Quadrature("segment crosses the panel".into()));
            };
            // re-orient so that the edge is t = 0 with e1 along it
            let (o, to) = match edge {
                2 => (0, 1),
                1 => (1, 2),
                3 => (2, 3),
                _ => (3, 0),
            };
            let w = v.reoriented(o, to);
            let sa = w.locate(s.p0, tol).unwrap()[0];
            let sb = w.locate(s.p1, tol).unwrap()[0];
            parts.push(SegmentRulePart::Nodes(on_edge_nodes(&s, &w, sa, sb, policy.edge())));
            Ok(())
        }
        _ => {
            let (i, _, _) = ends[0];
            let p = if i == 0 { s.p0 } else { s.p1 };
            match v.corner_at(p, tol) {
                Some(c) => {
                    let w = v.reoriented(c, (c + 1) % 4);
                    parts.push(SegmentRulePart::Nodes(point_contact_nodes(&s, i == 0, &w, policy.vertex())));
                    Ok(())
                }
                None => {
                    for sub in split_at(&v, &[p], tol) {
                        build_seg(s, sub, policy, tol, depth, parts)?;
                    }
                    Ok(())
                }
            }
        }
    }
}

/// The segment lies on the edge `t = 0` of `v`, from `s = sa` to `s = sb`.
/// With `z = u - s` (`u` the panel coordinate along the edge) the kernel
/// depends on `(z, t)` only and is singular at `z = t = 0`. The `(z, t)`
/// domain is cut at the kinks of the `s`-range, the cells touching `z = 0`
/// get a corner Duffy square plus graded strips, the rest graded tensor
/// cells; the `s` integral of the polynomial remainder is done by Gauss.
fn on_edge_nodes(seg: &SegView, v: &PanelView, sa: f64, sb: f64, q: usize) -> Vec<SegmentNode> {
    let g = gauss(q);
    let gs = gauss(3);
    let (s0, s1) = (sa.min(sb), sa.max(sb));
    let (e, f) = (v.panel.e1, v.panel.e2);
    let scale = e.norm() * v.panel.area();
    let mut cells: Vec<(f64, f64, f64)> = Vec::new(); // (z, t, w)

    let mut bps = vec![-s1, -s0, 0.0, 1.0 - s1, 1.0 - s0];
    bps.retain(|&z| z >= -s1 - 1e-15 && z <= 1.0 - s0 + 1e-15);
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let tensor = |z0: f64, z1: f64, t0: f64, t1: f64, cells: &mut Vec<(f64, f64, f64)>| {
        for (t, wt) in g.on(t0, t1) {
            for (z, wz) in g.on(z0, z1) {
                cells.push((z, t, wz * wt));
            }
        }
    };
    for iv in bps.windows(2) {
        let (za, zb) = (iv[0], iv[1]);
        if zb - za < 1e-14 {
            continue;
        }
        if za.abs() < 1e-14 || zb.abs() < 1e-14 {
            let sign = if za.abs() < 1e-14 { 1.0 } else { -1.0 };
            let a = zb - za;
            for tri in 0..2 {
                for (&rho, &wr) in g.points.iter().zip(&g.weights) {
                    for (&xi, &wx) in g.points.iter().zip(&g.weights) {
                        let (zz, tt) = if tri == 0 { (a * rho, a * rho * xi) } else { (a * rho * xi, a * rho) };
                        cells.push((sign * zz, tt, wr * wx * a * a * rho));
                    }
                }
            }
            if a < 1.0 {
                for (t0, t1) in graded_intervals(a, 1.0, a) {
                    let (z0, z1) = if sign > 0.0 { (0.0, a) } else { (-a, 0.0) };
                    tensor(z0, z1, t0, t1, &mut cells);
                }
            }
        } else {
            let (near, far) = if za.abs() < zb.abs() { (za, zb) } else { (zb, za) };
            let d = near.abs();
            let zs = if d < zb - za { graded_intervals(near, far, d) } else { vec![(near, far)] };
            for (z0, z1) in zs {
                let dz = z0.abs().min(z1.abs());
                for (t0, t1) in graded_intervals(0.0, 1.0, dz.max(1e-300)) {
                    tensor(z0.min(z1), z0.max(z1), t0, t1, &mut cells);
                }
            }
        }
    }

    let mut out = Vec::with_capacity(cells.len() * 3);
    for (z, t, wzt) in cells {
        let lo = s0.max(-z);
        let hi = s1.min(1.0 - z);
        if hi <= lo {
            continue;
        }
        let r = (e * z + f * t).norm();
        for (s, ws) in gs.on(lo, hi) {
            let sigma = (s - sa) / (sb - sa);
            out.push(SegmentNode { lam: seg.lam(sigma), b: v.to_parent(s + z, t), w: wzt * ws * scale, r });
        }
    }
    out
}

/// The segment touches the panel only at the panel's origin corner, which is
/// the segment's start (`at_start`) or end. Three pyramids of the cube in
/// `(sigma, s, t)`.
fn point_contact_nodes(seg: &SegView, at_start: bool, v: &PanelView, q: usize) -> Vec<SegmentNode> {
    let g = gauss(q);
    let d = if at_start { seg.p1 - seg.p0 } else { seg.p0 - seg.p1 };
    let (e1, e2) = (v.panel.e1, v.panel.e2);
    let scale = d.norm() * v.panel.area();
    let mut out = Vec::with_capacity(3 * q * q * q);
    for pyr in 0..3 {
        for (&rho, &wr) in g.points.iter().zip(&g.weights) {
            for (&x1, &w1) in g.points.iter().zip(&g.weights) {
                for (&x2, &w2) in g.points.iter().zip(&g.weights) {
                    let (o1, o2) = (rho * x1, rho * x2);
                    let [sigma, s, t] = match pyr {
                        0 => [rho, o1, o2],
                        1 => [o1, rho, o2],
                        _ => [o1, o2, rho],
                    };
                    let r = (d * sigma - e1 * s - e2 * t).norm();
                    let lam = seg.lam(if at_start { sigma } else { 1.0 - sigma });
                    out.push(SegmentNode { lam, b: v.to_parent(s, t), w: wr * w1 * w2 * rho * rho * scale, r });
                }
            }
        }
    }
    out
}
