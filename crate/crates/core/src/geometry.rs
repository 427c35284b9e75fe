//! Screen geometry: the open surface, its decomposition into plane
//! parallelogram subdomains, uniform quadrilateral meshes per subdomain and
//! the oriented skeleton (interfaces plus screen boundary).
//!
//! Orientation conventions:
//! - subdomain corners and element vertices run counterclockwise with respect
//!   to the subdomain normal `n`;
//! - every skeleton segment carries a tangent `t` fixed at construction. The
//!   *left* subdomain of a segment is the one into which `n x t` points. On
//!   the screen boundary the only adjacent subdomain is always the left one,
//!   so the boundary tangent runs counterclockwise around that subdomain.

use std::io::Write;

use crate::error::{Error, Result};
use crate::vec3::{point_segment_dist, Vec3};

/// Absolute tolerance for planarity, overlap and incidence tests.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// Upper bound accepted for `h_max / h_min` inside one subdomain mesh.
pub const MAX_SHAPE_RATIO: f64 = 16.0;

/// A plane parallelogram `origin + s e1 + t e2`, `(s, t) in [0, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl Panel {
    pub fn new(origin: Vec3, e1: Vec3, e2: Vec3) -> Self {
        Panel { origin, e1, e2 }
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in the plane `z`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64, z: f64) -> Self {
        Panel {
            origin: Vec3::new(x0, y0, z),
            e1: Vec3::new(x1 - x0, 0.0, 0.0),
            e2: Vec3::new(0.0, y1 - y0, 0.0),
        }
    }

    pub fn point(&self, s: f64, t: f64) -> Vec3 {
        self.origin + self.e1 * s + self.e2 * t
    }

    /// Corners in counterclockwise order: (0,0), (1,0), (1,1), (0,1).
    pub fn corners(&self) -> [Vec3; 4] {
        [
            self.origin,
            self.origin + self.e1,
            self.origin + self.e1 + self.e2,
            self.origin + self.e2,
        ]
    }

    pub fn normal(&self) -> Vec3 {
        self.e1.cross(self.e2).normalized()
    }

    pub fn area(&self) -> f64 {
        self.e1.cross(self.e2).norm()
    }

    pub fn diameter(&self) -> f64 {
        (self.e1 + self.e2).norm().max((self.e1 - self.e2).norm())
    }

    pub fn centroid(&self) -> Vec3 {
        self.point(0.5, 0.5)
    }

    /// Dual basis `(g1, g2)` with `gi . ej = delta_ij`, spanning the panel plane.
    pub fn dual_basis(&self) -> (Vec3, Vec3) {
        let a = self.e1.dot(self.e1);
        let b = self.e1.dot(self.e2);
        let c = self.e2.dot(self.e2);
        let det = a * c - b * b;
        let g1 = (self.e1 * c - self.e2 * b) * (1.0 / det);
        let g2 = (self.e2 * a - self.e1 * b) * (1.0 / det);
        (g1, g2)
    }

    /// Reference coordinates of the orthogonal projection of `p` onto the
    /// panel plane, and the signed distance of `p` from that plane.
    pub fn local_coords(&self, p: Vec3) -> ([f64; 2], f64) {
        let (g1, g2) = self.dual_basis();
        let d = p - self.origin;
        ([d.dot(g1), d.dot(g2)], d.dot(self.normal()))
    }

    /// Euclidean distance from `p` to the closed panel.
    pub fn distance_to(&self, p: Vec3) -> f64 {
        let ([s, t], h) = self.local_coords(p);
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            return h.abs();
        }
        let c = self.corners();
        (0..4)
            .map(|i| point_segment_dist(p, c[i], c[(i + 1) % 4]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// One plane parallelogram subdomain of the screen.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    /// Indices into [`ScreenGeometry::vertices`], counterclockwise w.r.t. `normal`.
    pub corners: [usize; 4],
    pub normal: Vec3,
}

/// The screen `Gamma` as a union of interior-disjoint plane subdomains.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenGeometry {
    pub vertices: Vec<Vec3>,
    pub subdomains: Vec<Subdomain>,
}

impl ScreenGeometry {
    /// Validates parallelogram shape (hence planarity), non-degeneracy and
    /// pairwise interior-disjointness.
    pub fn new(vertices: Vec<Vec3>, quads: Vec<[usize; 4]>) -> Result<Self> {
        let mut subdomains = Vec::with_capacity(quads.len());
        for (j, q) in quads.iter().enumerate() {
            if q.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Geometry(format!("subdomain {j}: vertex index out of range")));
            }
            let [a, b, c, d] = q.map(|i| vertices[i]);
            let defect = (a + (c - b) - d).norm();
            if defect > GEOMETRY_TOL {
                return Err(Error::Geometry(format!(
                    "subdomain {j} is not a plane parallelogram (defect {defect:e})"
                )));
            }
            let n = (b - a).cross(d - a);
            if n.norm() <= GEOMETRY_TOL {
                return Err(Error::Geometry(format!("subdomain {j} is degenerate")));
            }
            subdomains.push(Subdomain { corners: *q, normal: n.normalized() });
        }
        let geometry = ScreenGeometry { vertices, subdomains };
        for i in 0..geometry.subdomains.len() {
            for j in i + 1..geometry.subdomains.len() {
                if geometry.interiors_overlap(i, j) {
                    return Err(Error::Geometry(format!("subdomains {i} and {j} overlap")));
                }
            }
        }
        Ok(geometry)
    }

    /// Axis-aligned rectangles `[x0, y0, x1, y1]` in the plane `z = 0`,
    /// normal `+z`. Shared corners are merged.
    pub fn from_rectangles(rects: &[[f64; 4]]) -> Result<Self> {
        let mut vertices: Vec<Vec3> = Vec::new();
        let index_of = |p: Vec3, vertices: &mut Vec<Vec3>| -> usize {
            if let Some(i) = vertices.iter().position(|v| v.dist(p) <= GEOMETRY_TOL) {
                i
            } else {
                vertices.push(p);
                vertices.len() - 1
            }
        };
        let mut quads = Vec::with_capacity(rects.len());
        for &[x0, y0, x1, y1] in rects {
            let corners = [
                Vec3::new(x0, y0, 0.0),
                Vec3::new(x1, y0, 0.0),
                Vec3::new(x1, y1, 0.0),
                Vec3::new(x0, y1, 0.0),
            ];
            quads.push(corners.map(|p| index_of(p, &mut vertices)));
        }
        ScreenGeometry::new(vertices, quads)
    }

    pub fn panel(&self, j: usize) -> Panel {
        let [a, b, _, d] = self.subdomains[j].corners.map(|i| self.vertices[i]);
        Panel::new(a, b - a, d - a)
    }

    pub fn area(&self) -> f64 {
        (0..self.subdomains.len()).map(|j| self.panel(j).area()).sum()
    }

    fn interiors_overlap(&self, i: usize, j: usize) -> bool {
        let (pi, pj) = (self.panel(i), self.panel(j));
        let n = pi.normal();
        let coplanar = pi.normal().cross(pj.normal()).norm() <= GEOMETRY_TOL
            && (pj.origin - pi.origin).dot(n).abs() <= GEOMETRY_TOL;
        if !coplanar {
            return false;
        }
        // Separating axis test in the common plane.
        let ci = pi.corners();
        let cj = pj.corners();
        let axes = [pi.e1, pi.e2, pj.e1, pj.e2].map(|e| n.cross(e).normalized());
        for axis in axes {
            let (lo_i, hi_i) = extent(&ci, axis);
            let (lo_j, hi_j) = extent(&cj, axis);
            if hi_i <= lo_j + GEOMETRY_TOL || hi_j <= lo_i + GEOMETRY_TOL {
                return false;
            }
        }
        true
    }
}

fn extent(points: &[Vec3; 4], axis: Vec3) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let v = p.dot(axis);
        (lo.min(v), hi.max(v))
    })
}

/// Uniform `nx x ny` quadrilateral mesh of one subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainMesh {
    pub subdomain: usize,
    pub nodes: Vec<Vec3>,
    /// Node indices per element, counterclockwise w.r.t. the subdomain normal,
    /// starting at the element's `(0, 0)` reference corner.
    pub elements: Vec<[usize; 4]>,
    pub divisions: (usize, usize),
    pub h_max: f64,
    pub h_min: f64,
}

impl SubdomainMesh {
    pub fn uniform(geometry: &ScreenGeometry, subdomain: usize, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Geometry("mesh divisions must be positive".into()));
        }
        let p = geometry.panel(subdomain);
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(p.point(i as f64 / nx as f64, j as f64 / ny as f64));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut mesh = SubdomainMesh { subdomain, nodes, elements, divisions: (nx, ny), h_max: 0.0, h_min: 0.0 };
        let (h_max, h_min) = (0..mesh.elements.len())
            .map(|e| mesh.panel(e).diameter())
            .fold((0.0f64, f64::INFINITY), |(a, b), d| (a.max(d), b.min(d)));
        if h_max / h_min > MAX_SHAPE_RATIO {
            return Err(Error::Geometry(format!("subdomain {subdomain}: h/h_min exceeds {MAX_SHAPE_RATIO}")));
        }
        mesh.h_max = h_max;
        mesh.h_min = h_min;
        Ok(mesh)
    }

    pub fn panel(&self, e: usize) -> Panel {
        let [a, b, _, d] = self.elements[e].map(|i| self.nodes[i]);
        Panel::new(a, b - a, d - a)
    }
}

/// Global maximal and minimal element diameters `(h, h_min)`.
pub fn mesh_stats(meshes: &[SubdomainMesh]) -> (f64, f64) {
    meshes
        .iter()
        .fold((0.0f64, f64::INFINITY), |(h, hm), m| (h.max(m.h_max), hm.min(m.h_min)))
}

/// An element edge, as local edge `l` of an element: from vertex `l` to `l + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRef {
    pub element: usize,
    pub local_edge: usize,
}

/// A maximal straight part of the skeleton between subdomain vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSegment {
    pub start: Vec3,
    pub end: Vec3,
    pub tangent: Vec3,
    pub left: usize,
    /// `None` on the screen boundary.
    pub right: Option<usize>,
    pub left_edges: Vec<EdgeRef>,
    pub right_edges: Vec<EdgeRef>,
    pub chain: usize,
}

impl SkeletonSegment {
    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }

    pub fn is_interior(&self) -> bool {
        self.right.is_some()
    }
}

/// Collinear run of consecutive segments of the same kind (interface or boundary).
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub start: Vec3,
    pub end: Vec3,
    pub tangent: Vec3,
    pub interior: bool,
    pub segments: Vec<usize>,
}

impl Chain {
    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PieceSide {
    pub subdomain: usize,
    pub element: usize,
}

/// Part of a segment between consecutive breakpoints of the merged edge
/// subdivisions of both sides. On a piece, the trace from either side is a
/// single linear function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonPiece {
    pub start: Vec3,
    pub end: Vec3,
    pub tangent: Vec3,
    pub segment: usize,
    pub left: PieceSide,
    pub right: Option<PieceSide>,
}

impl SkeletonPiece {
    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }
}

/// The skeleton `gamma`: interfaces and `partial Gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub chains: Vec<Chain>,
    pub segments: Vec<SkeletonSegment>,
    pub pieces: Vec<SkeletonPiece>,
}

impl Skeleton {
    pub fn interior_length(&self) -> f64 {
        self.segments.iter().filter(|s| s.is_interior()).map(SkeletonSegment::length).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.segments.iter().filter(|s| !s.is_interior()).map(SkeletonSegment::length).sum()
    }
}

struct DirectedSide {
    subdomain: usize,
    start: Vec3,
    end: Vec3,
}

/// Builds the skeleton of `geometry` and attaches the mesh edges of each side.
pub fn extract_skeleton(geometry: &ScreenGeometry, meshes: &[SubdomainMesh]) -> Result<Skeleton> {
    if meshes.len() != geometry.subdomains.len()
        || meshes.iter().enumerate().any(|(j, m)| m.subdomain != j)
    {
        return Err(Error::Geometry("expected exactly one mesh per subdomain, in order".into()));
    }

    // Subdomain sides, cut at every geometry vertex lying on them.
    let mut sides = Vec::new();
    for (j, sub) in geometry.subdomains.iter().enumerate() {
        for l in 0..4 {
            let a = geometry.vertices[sub.corners[l]];
            let b = geometry.vertices[sub.corners[(l + 1) % 4]];
            let dir = b - a;
            let len = dir.norm();
            let mut params: Vec<f64> = geometry
                .vertices
                .iter()
                .filter(|&&v| point_segment_dist(v, a, b) <= GEOMETRY_TOL)
                .map(|&v| (v - a).dot(dir) / (len * len))
                .filter(|&s| s > GEOMETRY_TOL && s < 1.0 - GEOMETRY_TOL)
                .collect();
            params.push(0.0);
            params.push(1.0);
            params.sort_by(f64::total_cmp);
            params.dedup_by(|x, y| (*x - *y).abs() <= GEOMETRY_TOL);
            for w in params.windows(2) {
                sides.push(DirectedSide { subdomain: j, start: a + dir * w[0], end: a + dir * w[1] });
            }
        }
    }

    let same = |p: Vec3, q: Vec3| p.dist(q) <= 1e3 * GEOMETRY_TOL;
    let mut used = vec![false; sides.len()];
    let mut segments = Vec::new();
    for i in 0..sides.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let partners: Vec<usize> = (i + 1..sides.len())
            .filter(|&k| {
                !used[k]
                    && ((same(sides[k].start, sides[i].end) && same(sides[k].end, sides[i].start))
                        || (same(sides[k].start, sides[i].start) && same(sides[k].end, sides[i].end)))
            })
            .collect();
        match partners.as_slice() {
            [] => {
                let s = &sides[i];
                segments.push(SkeletonSegment {
                    start: s.start,
                    end: s.end,
                    tangent: (s.end - s.start).normalized(),
                    left: s.subdomain,
                    right: None,
                    left_edges: Vec::new(),
                    right_edges: Vec::new(),
                    chain: usize::MAX,
                });
            }
            [k] => {
                let k = *k;
                used[k] = true;
                let (a, b) = (&sides[i], &sides[k]);
                if same(a.start, b.start) {
                    return Err(Error::Geometry(format!(
                        "subdomains {} and {} are inconsistently oriented",
                        a.subdomain, b.subdomain
                    )));
                }
                let (start, end) = if a.start.lex_cmp(&a.end).is_lt() { (a.start, a.end) } else { (a.end, a.start) };
                let tangent = (end - start).normalized();
                let mid = (start + end) * 0.5;
                let into = |j: usize| {
                    let n = geometry.subdomains[j].normal;
                    (geometry.panel(j).centroid() - mid).dot(n.cross(tangent))
                };
                let (left, right) = if into(a.subdomain) > 0.0 {
                    (a.subdomain, b.subdomain)
                } else {
                    (b.subdomain, a.subdomain)
                };
                if into(left) <= 0.0 || into(right) >= 0.0 {
                    return Err(Error::Geometry(format!(
                        "interface between subdomains {left} and {right} is not two-sided"
                    )));
                }
                segments.push(SkeletonSegment {
                    start,
                    end,
                    tangent,
                    left,
                    right: Some(right),
                    left_edges: Vec::new(),
                    right_edges: Vec::new(),
                    chain: usize::MAX,
                });
            }
            _ => {
                return Err(Error::Geometry("more than two subdomains share a skeleton segment".into()));
            }
        }
    }

    let chains = build_chains(&mut segments);

    for seg in segments.iter_mut() {
        seg.left_edges = edges_on_segment(&meshes[seg.left], seg.start, seg.end);
        if let Some(r) = seg.right {
            seg.right_edges = edges_on_segment(&meshes[r], seg.start, seg.end);
        }
        let covered: f64 = seg
            .left_edges
            .iter()
            .map(|e| edge_endpoints(&meshes[seg.left], *e))
            .map(|(a, b)| a.dist(b))
            .sum();
        if (covered - seg.length()).abs() > 1e-9 * seg.length().max(1.0) {
            return Err(Error::Geometry("mesh edges do not cover a skeleton segment".into()));
        }
    }

    let mut pieces = Vec::new();
    for (si, seg) in segments.iter().enumerate() {
        pieces.extend(segment_pieces(si, seg, meshes)?);
    }

    Ok(Skeleton { chains, segments, pieces })
}

fn build_chains(segments: &mut [SkeletonSegment]) -> Vec<Chain> {
    let n = segments.len();
    let continues = |a: &SkeletonSegment, b: &SkeletonSegment| {
        a.is_interior() == b.is_interior()
            && a.end.dist(b.start) <= 1e3 * GEOMETRY_TOL
            && a.tangent.dot(b.tangent) >= 1.0 - 1e-12
    };
    let successor: Vec<Option<usize>> = (0..n)
        .map(|i| (0..n).find(|&k| k != i && continues(&segments[i], &segments[k])))
        .collect();
    let mut has_pred = vec![false; n];
    for s in successor.iter().flatten() {
        has_pred[*s] = true;
    }
    let mut chains = Vec::new();
    for first in 0..n {
        if has_pred[first] {
            continue;
        }
        let mut members = vec![first];
        let mut cur = first;
        while let Some(next) = successor[cur] {
            members.push(next);
            cur = next;
        }
        let ci = chains.len();
        for &m in &members {
            segments[m].chain = ci;
        }
        chains.push(Chain {
            start: segments[first].start,
            end: segments[cur].end,
            tangent: segments[first].tangent,
            interior: segments[first].is_interior(),
            segments: members,
        });
    }
    chains
}

pub fn edge_endpoints(mesh: &SubdomainMesh, e: EdgeRef) -> (Vec3, Vec3) {
    let el = mesh.elements[e.element];
    (mesh.nodes[el[e.local_edge]], mesh.nodes[el[(e.local_edge + 1) % 4]])
}

fn edges_on_segment(mesh: &SubdomainMesh, a: Vec3, b: Vec3) -> Vec<EdgeRef> {
    let tol = 1e3 * GEOMETRY_TOL;
    let mut out = Vec::new();
    for element in 0..mesh.elements.len() {
        for local_edge in 0..4 {
            let e = EdgeRef { element, local_edge };
            let (p, q) = edge_endpoints(mesh, e);
            if point_segment_dist(p, a, b) <= tol && point_segment_dist(q, a, b) <= tol && p.dist(q) > tol {
                out.push(e);
            }
        }
    }
    let t = b - a;
    out.sort_by(|x, y| {
        let px = edge_endpoints(mesh, *x).0.dot(t) + edge_endpoints(mesh, *x).1.dot(t);
        let py = edge_endpoints(mesh, *y).0.dot(t) + edge_endpoints(mesh, *y).1.dot(t);
        px.total_cmp(&py)
    });
    out
}

fn segment_pieces(si: usize, seg: &SkeletonSegment, meshes: &[SubdomainMesh]) -> Result<Vec<SkeletonPiece>> {
    let len = seg.length();
    let param = |p: Vec3| (p - seg.start).dot(seg.tangent);
    let ranges = |sub: usize, edges: &[EdgeRef]| -> Vec<(f64, f64, usize)> {
        edges
            .iter()
            .map(|e| {
                let (p, q) = edge_endpoints(&meshes[sub], *e);
                let (a, b) = (param(p), param(q));
                (a.min(b), a.max(b), e.element)
            })
            .collect()
    };
    let left = ranges(seg.left, &seg.left_edges);
    let right = seg.right.map(|r| ranges(r, &seg.right_edges)).unwrap_or_default();

    let mut breaks: Vec<f64> = left.iter().chain(right.iter()).flat_map(|&(a, b, _)| [a, b]).collect();
    breaks.push(0.0);
    breaks.push(len);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * len);

    let find = |list: &[(f64, f64, usize)], m: f64| list.iter().find(|&&(a, b, _)| a <= m && m <= b).map(|r| r.2);
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let le = find(&left, mid).ok_or_else(|| Error::Geometry("skeleton piece without left element".into()))?;
        let right_side = match seg.right {
            Some(r) => Some(PieceSide {
                subdomain: r,
                element: find(&right, mid)
                    .ok_or_else(|| Error::Geometry("skeleton piece without right element".into()))?,
            }),
            None => None,
        };
        out.push(SkeletonPiece {
            start: seg.start + seg.tangent * w[0],
            end: seg.start + seg.tangent * w[1],
            tangent: seg.tangent,
            segment: si,
            left: PieceSide { subdomain: seg.left, element: le },
            right: right_side,
        });
    }
    Ok(out)
}

/// Geometry, meshes and skeleton bundled together.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshedScreen {
    pub geometry: ScreenGeometry,
    pub meshes: Vec<SubdomainMesh>,
    pub skeleton: Skeleton,
}

impl MeshedScreen {
    pub fn new(geometry: ScreenGeometry, divisions: &[(usize, usize)]) -> Result<Self> {
        if divisions.len() != geometry.subdomains.len() {
            return Err(Error::Geometry("one (nx, ny) pair per subdomain required".into()));
        }
        let meshes = divisions
            .iter()
            .enumerate()
            .map(|(j, &(nx, ny))| SubdomainMesh::uniform(&geometry, j, nx, ny))
            .collect::<Result<Vec<_>>>()?;
        let skeleton = extract_skeleton(&geometry, &meshes)?;
        Ok(MeshedScreen { geometry, meshes, skeleton })
    }

    pub fn h(&self) -> f64 {
        mesh_stats(&self.meshes).0
    }

    pub fn element_count(&self) -> usize {
        self.meshes.iter().map(|m| m.elements.len()).sum()
    }

    /// Writes the plain-text `screenbem-mesh v1` dump.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "screenbem-mesh v1")?;
        for m in &self.meshes {
            for p in &m.nodes {
                writeln!(w, "v {} {} {}", p.x(), p.y(), p.z())?;
            }
        }
        let mut offset = 0;
        for m in &self.meshes {
            for el in &m.elements {
                writeln!(
                    w,
                    "q {} {} {} {} {}",
                    m.subdomain,
                    el[0] + offset,
                    el[1] + offset,
                    el[2] + offset,
                    el[3] + offset
                )?;
            }
            offset += m.nodes.len();
        }
        for s in &self.skeleton.segments {
            let right = s.right.map_or(-1, |r| r as i64);
            writeln!(
                w,
                "s {} {} {} {} {} {} {} {}",
                s.start.x(),
                s.start.y(),
                s.start.z(),
                s.end.x(),
                s.end.y(),
                s.end.z(),
                s.left,
                right
            )?;
        }
        Ok(())
    }
}

/// The square `(-1/2, 1/2)^2 x {0}` split into the left half `Gamma_1` and
/// the lower and upper right quarters `Gamma_2`, `Gamma_3`.
///
/// Level `l` uses `2^l x 2^(l+1)` cells on `Gamma_1`, `3 2^l x 3 2^l` on
/// `Gamma_2` and `2^l x 2^l` on `Gamma_3`, so both interfaces carry
/// nonmatching meshes and `h = sqrt(2) 2^-(l+1)`.
pub fn build_model_screen(level: u32) -> MeshedScreen {
    let geometry = ScreenGeometry::from_rectangles(&[
        [-0.5, -0.5, 0.0, 0.5],
        [0.0, -0.5, 0.5, 0.0],
        [0.0, 0.0, 0.5, 0.5],
    ])
    .expect("model screen layout is valid");
    let m = 1usize << level;
    MeshedScreen::new(geometry, &[(m, 2 * m), (3 * m, 3 * m), (m, m)]).expect("model screen meshes are valid")
}

/// The same square as a single subdomain with `2^(l+1) x 2^(l+1)` cells; the
/// mesh size matches [`build_model_screen`] at equal level.
pub fn build_unit_square(level: u32) -> MeshedScreen {
    let geometry = ScreenGeometry::from_rectangles(&[[-0.5, -0.5, 0.5, 0.5]]).expect("unit square is valid");
    let m = 2usize << level;
    MeshedScreen::new(geometry, &[(m, m)]).expect("unit square mesh is valid")
}
