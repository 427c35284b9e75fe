use num_complex::Complex64;

use super::{gauss, on_edges, OrderPolicy, PanelView, QuadratureOrders, MAX_SUBDIVISION_DEPTH, NEAR_FIELD_RATIO};
use crate::error::{Error, Result};
use crate::geometry::Panel;
use crate::kernels::{single_layer_at, WaveNumber};
use crate::vec3::{point_segment_dist, segment_segment_dist, Vec3};

/// Relative snapping tolerance of the geometric contact analysis.
pub(crate) const SNAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Adjacency {
    Coincident,
    Edge,
    Vertex,
    Disjoint,
}

/// One node of a transformed 4D rule: parent reference coordinates on both
/// panels, weight (including both area elements) and `|x - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairNode {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub w: f64,
    pub r: f64,
}

/// One factor of a tensor-product rule over a well-separated sub-pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorPoint {
    pub st: [f64; 2],
    pub x: Vec3,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairRulePart {
    Nodes(Vec<PairNode>),
    Tensor { a: Vec<TensorPoint>, b: Vec<TensorPoint> },
}

/// Quadrature for `int_A int_B f(x, y) dS_y dS_x` with `f` carrying the
/// `1/|x - y|` singularity.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelPairRule {
    pub adjacency: Adjacency,
    pub parts: Vec<PairRulePart>,
}

impl PanelPairRule {
    /// Rule with per-class orders and distance-graded disjoint orders.
    pub fn new(a: &Panel, b: &Panel, orders: &QuadratureOrders) -> Result<Self> {
        Self::build(a, b, OrderPolicy::Graded(*orders))
    }

    /// Rule with the same 1D order `q` for every sub-rule.
    pub fn with_order(a: &Panel, b: &Panel, q: usize) -> Result<Self> {
        Self::build(a, b, OrderPolicy::Uniform(q))
    }

    fn build(a: &Panel, b: &Panel, policy: OrderPolicy) -> Result<Self> {
        let adjacency = classify_adjacency(a, b);
        let mut parts = Vec::new();
        let tol = SNAP_TOL * a.diameter().max(b.diameter());
        build_pair(PanelView::whole(a), PanelView::whole(b), policy, tol, 0, &mut parts)?;
        Ok(PanelPairRule { adjacency, parts })
    }

    /// Calls `f(a, b, w, r)` for every node.
    pub fn for_each(&self, mut f: impl FnMut([f64; 2], [f64; 2], f64, f64)) {
        for part in &self.parts {
            match part {
                PairRulePart::Nodes(nodes) => {
                    for n in nodes {
                        f(n.a, n.b, n.w, n.r);
                    }
                }
                PairRulePart::Tensor { a, b } => {
                    for pa in a {
                        for pb in b {
                            f(pa.st, pb.st, pa.w * pb.w, pa.x.dist(pb.x));
                        }
                    }
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.parts
            .iter()
            .map(|p| match p {
                PairRulePart::Nodes(n) => n.len(),
                PairRulePart::Tensor { a, b } => a.len() * b.len(),
            })
            .sum()
    }
}

/// Geometric adjacency of two panels. A shared segment of positive length
/// counts as an edge contact even when it is only part of an edge of either
/// panel (nonmatching meshes); a single shared point is a vertex contact.
/// Panels with overlapping interiors are reported as coincident.
pub fn classify_adjacency(a: &Panel, b: &Panel) -> Adjacency {
    let tol = SNAP_TOL * a.diameter().max(b.diameter());
    let (va, vb) = (PanelView::whole(a), PanelView::whole(b));
    if same_region(&va, &vb, tol) {
        return Adjacency::Coincident;
    }
    match contacts(&va, &vb, tol) {
        Err(_) => Adjacency::Coincident,
        Ok(pts) => match pts.len() {
            0 => Adjacency::Disjoint,
            1 => Adjacency::Vertex,
            _ => Adjacency::Edge,
        },
    }
}

/// `int_A int_B db(x) G_k(x, y) da(y)` with `x` on `b`, `y` on `a`, using
/// one order `q` for every sub-rule. Densities take parent reference
/// coordinates.
pub fn panel_pair_integrate(
    k: WaveNumber,
    a: &Panel,
    b: &Panel,
    da: impl Fn([f64; 2]) -> f64,
    db: impl Fn([f64; 2]) -> f64,
    q: usize,
) -> Result<Complex64> {
    if q == 0 || q > 64 {
        return Err(Error::Config(format!("quadrature order {q} outside 1..=64")));
    }
    let rule = PanelPairRule::with_order(a, b, q)?;
    let mut sum = Complex64::new(0.0, 0.0);
    rule.for_each(|sa, sb, w, r| sum += single_layer_at(k.0, r) * (w * da(sa) * db(sb)));
    Ok(sum)
}

fn same_region(a: &PanelView, b: &PanelView, tol: f64) -> bool {
    let cb = b.panel.corners();
    a.panel.corners().iter().all(|c| cb.iter().any(|d| c.dist(*d) <= tol))
}

fn push_unique(pts: &mut Vec<Vec3>, p: Vec3, tol: f64) {
    if !pts.iter().any(|q| q.dist(p) <= tol) {
        pts.push(p);
    }
}

/// Points where the closed panels touch: corners of either one lying on the
/// other. Errors if a corner lies in the open interior of the other panel.
fn contacts(a: &PanelView, b: &PanelView, tol: f64) -> Result<Vec<Vec3>> {
    let mut pts = Vec::new();
    for (p, q) in [(a, b), (b, a)] {
        for c in p.panel.corners() {
            if let Some(st) = q.locate(c, tol) {
                if !on_edges(q, st, tol).iter().any(|&e| e) {
                    return Err(Error::Quadrature("panels overlap".into()));
                }
                push_unique(&mut pts, c, tol);
            }
        }
    }
    Ok(pts)
}

pub(crate) fn panel_distance(a: &Panel, b: &Panel) -> f64 {
    let (ca, cb) = (a.corners(), b.corners());
    let mut d = f64::INFINITY;
    for i in 0..4 {
        for j in 0..4 {
            d = d.min(segment_segment_dist(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
        }
        d = d.min(b.distance_to(ca[i])).min(a.distance_to(cb[i]));
    }
    d
}

/// Cuts `v` along the lines through the given boundary points.
pub(crate) fn split_at(v: &PanelView, pts: &[Vec3], tol: f64) -> Vec<PanelView> {
    let mut cs = vec![0.0, 1.0];
    let mut ct = vec![0.0, 1.0];
    let es = tol / v.panel.e1.norm();
    let et = tol / v.panel.e2.norm();
    for &p in pts {
        let Some(st) = v.locate(p, tol) else { continue };
        let e = on_edges(v, st, tol);
        if (e[2] || e[3]) && st[0] > es && st[0] < 1.0 - es {
            cs.push(st[0]);
        }
        if (e[0] || e[1]) && st[1] > et && st[1] < 1.0 - et {
            ct.push(st[1]);
        }
    }
    let norm = |v: &mut Vec<f64>, eps: f64| {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|x, y| (*x - *y).abs() <= eps);
    };
    norm(&mut cs, es);
    norm(&mut ct, et);
    let mut out = Vec::with_capacity((cs.len() - 1) * (ct.len() - 1));
    for t in ct.windows(2) {
        for s in cs.windows(2) {
            out.push(v.sub(s[0], s[1], t[0], t[1]));
        }
    }
    out
}

fn adjacent_corners(i: usize, j: usize) -> bool {
    (i + 1) % 4 == j || (j + 1) % 4 == i
}

fn build_pair(
    a: PanelView,
    b: PanelView,
    policy: OrderPolicy,
    tol: f64,
    depth: u32,
    parts: &mut Vec<PairRulePart>,
) -> Result<()> {
    if same_region(&a, &b, tol) {
        let i0 = b.corner_at(a.panel.origin, tol).expect("coincident corner");
        let i1 = b.corner_at(a.panel.origin + a.panel.e1, tol).expect("coincident corner");
        let b = b.reoriented(i0, i1);
        parts.push(PairRulePart::Nodes(coincident_nodes(&a, &b, policy.coincident())));
        return Ok(());
    }
    let pts = contacts(&a, &b, tol)?;
    if pts.is_empty() {
        let dist = panel_distance(&a.panel, &b.panel);
        if dist <= tol {
            return Err(Error::Quadrature("unsupported panel contact".into()));
        }
        let diam = a.panel.diameter().max(b.panel.diameter());
        if dist < NEAR_FIELD_RATIO * diam && depth < MAX_SUBDIVISION_DEPTH {
            if a.panel.diameter() >= b.panel.diameter() {
                for sa in a.quarters() {
                    build_pair(sa, b, policy, tol, depth + 1, parts)?;
                }
            } else {
                for sb in b.quarters() {
                    build_pair(a, sb, policy, tol, depth + 1, parts)?;
                }
            }
            return Ok(());
        }
        let q = policy.disjoint(dist / diam);
        parts.push(PairRulePart::Tensor { a: tensor_points(&a, q), b: tensor_points(&b, q) });
        return Ok(());
    }
    let ia: Vec<Option<usize>> = pts.iter().map(|&p| a.corner_at(p, tol)).collect();
    let ib: Vec<Option<usize>> = pts.iter().map(|&p| b.corner_at(p, tol)).collect();
    let all_corners = ia.iter().chain(&ib).all(Option::is_some);
    if all_corners && pts.len() == 1 {
        let (i, j) = (ia[0].unwrap(), ib[0].unwrap());
        let (a, b) = (a.reoriented(i, (i + 1) % 4), b.reoriented(j, (j + 1) % 4));
        parts.push(PairRulePart::Nodes(vertex_nodes(&a, &b, policy.vertex())));
        return Ok(());
    }
    if all_corners && pts.len() == 2 {
        let (a0, a1, b0, b1) = (ia[0].unwrap(), ia[1].unwrap(), ib[0].unwrap(), ib[1].unwrap());
        if !(adjacent_corners(a0, a1) && adjacent_corners(b0, b1)) {
            return Err(Error::Quadrature("panels overlap".into()));
        }
        let (a, b) = (a.reoriented(a0, a1), b.reoriented(b0, b1));
        parts.push(PairRulePart::Nodes(edge_nodes(&a, &b, policy.edge())));
        return Ok(());
    }
    let cut_a: Vec<Vec3> = pts.iter().zip(&ia).filter(|(_, c)| c.is_none()).map(|(p, _)| *p).collect();
    let cut_b: Vec<Vec3> = pts.iter().zip(&ib).filter(|(_, c)| c.is_none()).map(|(p, _)| *p).collect();
    if cut_a.is_empty() && cut_b.is_empty() {
        return Err(Error::Quadrature("panels overlap".into()));
    }
    let subs_a = if cut_a.is_empty() { vec![a] } else { split_at(&a, &cut_a, tol) };
    let subs_b = if cut_b.is_empty() { vec![b] } else { split_at(&b, &cut_b, tol) };
    for sa in &subs_a {
        for sb in &subs_b {
            build_pair(*sa, *sb, policy, tol, depth, parts)?;
        }
    }
    Ok(())
}

pub(crate) fn tensor_points(v: &PanelView, q: usize) -> Vec<TensorPoint> {
    let g = gauss(q);
    let area = v.panel.area();
    let mut out = Vec::with_capacity(q * q);
    for (t, wt) in g.on(0.0, 1.0) {
        for (s, ws) in g.on(0.0, 1.0) {
            out.push(TensorPoint { st: v.to_parent(s, t), x: v.panel.point(s, t), w: ws * wt * area });
        }
    }
    out
}

/// Both views describe the same parallelogram with the same orientation.
/// Relative coordinates `z = s - t` per direction; each of the 4 sign
/// quadrants of `z` is split into two triangles and Duffy-transformed.
fn coincident_nodes(a: &PanelView, b: &PanelView, q: usize) -> Vec<PairNode> {
    let g = gauss(q);
    let (e1, e2) = (a.panel.e1, a.panel.e2);
    let area2 = a.panel.area() * b.panel.area();
    let mut out = Vec::with_capacity(8 * q.pow(4));
    for sg1 in [1.0, -1.0] {
        for sg2 in [1.0, -1.0] {
            for tri in 0..2 {
                for (&rho, &wr) in g.points.iter().zip(&g.weights) {
                    for (&xi, &wx) in g.points.iter().zip(&g.weights) {
                        let (m1, m2) = if tri == 0 { (rho, rho * xi) } else { (rho * xi, rho) };
                        let (z1, z2) = (sg1 * m1, sg2 * m2);
                        let (l1, l2) = (1.0 - m1, 1.0 - m2);
                        let r = (e1 * z1 + e2 * z2).norm();
                        let w0 = wr * wx * rho * l1 * l2 * area2;
                        for (&u1, &w1) in g.points.iter().zip(&g.weights) {
                            let t1 = (-z1).max(0.0) + l1 * u1;
                            for (&u2, &w2) in g.points.iter().zip(&g.weights) {
                                let t2 = (-z2).max(0.0) + l2 * u2;
                                out.push(PairNode {
                                    a: a.to_parent(t1 + z1, t2 + z2),
                                    b: b.to_parent(t1, t2),
                                    w: w0 * w1 * w2,
                                    r,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// The views share the edge `origin + s e1`, `s in [0, 1]`. With
/// `z = s_a - s_b` the singular set is `z = s2_a = s2_b = 0`; each sign of
/// `z` splits into three pyramids over `(|z|, s2_a, s2_b)`.
fn edge_nodes(a: &PanelView, b: &PanelView, q: usize) -> Vec<PairNode> {
    let g = gauss(q);
    let e = a.panel.e1;
    let (a2, b2) = (a.panel.e2, b.panel.e2);
    let area2 = a.panel.area() * b.panel.area();
    let mut out = Vec::with_capacity(6 * q.pow(4));
    for sg in [1.0, -1.0] {
        for pyr in 0..3 {
            for (&rho, &wr) in g.points.iter().zip(&g.weights) {
                for (&x1, &w1) in g.points.iter().zip(&g.weights) {
                    for (&x2, &w2) in g.points.iter().zip(&g.weights) {
                        let (o1, o2) = (rho * x1, rho * x2);
                        let [m, sa2, sb2] = match pyr {
                            0 => [rho, o1, o2],
                            1 => [o1, rho, o2],
                            _ => [o1, o2, rho],
                        };
                        let z = sg * m;
                        let len = 1.0 - m;
                        let r = (e * z + a2 * sa2 - b2 * sb2).norm();
                        let w0 = wr * w1 * w2 * rho * rho * len * area2;
                        for (&u, &wu) in g.points.iter().zip(&g.weights) {
                            let tb = (-z).max(0.0) + len * u;
                            out.push(PairNode {
                                a: a.to_parent(tb + z, sa2),
                                b: b.to_parent(tb, sb2),
                                w: w0 * wu,
                                r,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// The views share their origin. Four pyramids of `[0, 1]^4`, one per
/// coordinate attaining the maximum.
fn vertex_nodes(a: &PanelView, b: &PanelView, q: usize) -> Vec<PairNode> {
    let g = gauss(q);
    let (a1, a2, b1, b2) = (a.panel.e1, a.panel.e2, b.panel.e1, b.panel.e2);
    let area2 = a.panel.area() * b.panel.area();
    let mut out = Vec::with_capacity(4 * q.pow(4));
    for pyr in 0..4 {
        for (&rho, &wr) in g.points.iter().zip(&g.weights) {
            for (&x1, &w1) in g.points.iter().zip(&g.weights) {
                for (&x2, &w2) in g.points.iter().zip(&g.weights) {
                    for (&x3, &w3) in g.points.iter().zip(&g.weights) {
                        let c = [rho * x1, rho * x2, rho * x3];
                        let mut v = [0.0; 4];
                        let mut it = c.iter();
                        for (i, slot) in v.iter_mut().enumerate() {
                            *slot = if i == pyr { rho } else { *it.next().unwrap() };
                        }
                        let r = (a1 * v[0] + a2 * v[1] - b1 * v[2] - b2 * v[3]).norm();
                        out.push(PairNode {
                            a: a.to_parent(v[0], v[1]),
                            b: b.to_parent(v[2], v[3]),
                            w: wr * w1 * w2 * w3 * rho * rho * rho * area2,
                            r,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Whether `p` lies on the closed segment `[s0, s1]` within `tol`.
pub(crate) fn on_segment(p: Vec3, s0: Vec3, s1: Vec3, tol: f64) -> bool {
    point_segment_dist(p, s0, s1) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Panel {
        Panel::rectangle(0.0, 0.0, 1.0, 1.0, 0.0)
    }

    #[test]
    fn adjacency_examples() {
        let a = unit();
        assert_eq!(classify_adjacency(&a, &a), Adjacency::Coincident);
        assert_eq!(classify_adjacency(&a, &Panel::rectangle(1.0, 0.0, 2.0, 1.0, 0.0)), Adjacency::Edge);
        assert_eq!(classify_adjacency(&a, &Panel::rectangle(1.0, 1.0, 2.0, 2.0, 0.0)), Adjacency::Vertex);
        assert_eq!(classify_adjacency(&a, &Panel::rectangle(2.0, 0.0, 3.0, 1.0, 0.0)), Adjacency::Disjoint);
        // half of an edge shared across a nonmatching interface
        assert_eq!(classify_adjacency(&a, &Panel::rectangle(1.0, 0.0, 1.5, 0.5, 0.0)), Adjacency::Edge);
        // a corner of one panel touching the interior of an edge of the other
        assert_eq!(classify_adjacency(&a, &Panel::rectangle(1.0, 1.0, 1.5, 1.5, 0.0)), Adjacency::Vertex);
        assert_eq!(classify_adjacency(&a, &Panel::rectangle(1.0, 0.5, 1.5, 1.5, 0.0)), Adjacency::Edge);
        // reversed orientation of the same square
        let rev = Panel::new(Vec3::new(1.0, 1.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), Vec3::new(0.0, -1.0, 0.0));
        assert_eq!(classify_adjacency(&a, &rev), Adjacency::Coincident);
    }

    #[test]
    fn weights_positive_and_rules_integrate_constants() {
        let a = unit();
        let others = [
            a,
            Panel::rectangle(1.0, 0.0, 2.0, 1.0, 0.0),
            Panel::rectangle(1.0, 1.0, 2.0, 2.0, 0.0),
            Panel::rectangle(1.0, 0.25, 1.5, 0.75, 0.0),
            Panel::rectangle(1.0, 1.0, 1.25, 1.25, 0.0),
            Panel::rectangle(1.1, 0.0, 1.6, 0.5, 0.0),
        ];
        for b in others {
            let rule = PanelPairRule::with_order(&a, &b, 6).unwrap();
            let mut sum = 0.0;
            let mut ok = true;
            rule.for_each(|sa, sb, w, r| {
                ok &= w > 0.0 && r > 0.0;
                ok &= (-1e-12..=1.0 + 1e-12).contains(&sa[0]) && (-1e-12..=1.0 + 1e-12).contains(&sb[1]);
                sum += w;
            });
            assert!(ok);
            assert!((sum - a.area() * b.area()).abs() < 1e-12, "{b:?}: {sum}");
        }
    }

    #[test]
    fn nodes_map_to_consistent_distances() {
        let a = unit();
        for b in [a, Panel::rectangle(1.0, 0.0, 2.0, 1.0, 0.0), Panel::rectangle(1.0, 0.5, 1.5, 1.5, 0.0)] {
            let rule = PanelPairRule::with_order(&a, &b, 4).unwrap();
            rule.for_each(|sa, sb, _, r| {
                let d = a.point(sa[0], sa[1]).dist(b.point(sb[0], sb[1]));
                assert!((d - r).abs() < 1e-13, "{d} vs {r}");
            });
        }
    }

    #[test]
    fn overlapping_panels_are_rejected() {
        let a = unit();
        let b = Panel::rectangle(0.5, 0.5, 1.5, 1.5, 0.0);
        assert!(PanelPairRule::with_order(&a, &b, 4).is_err());
    }
}
