//! Discrete spaces of subdomain-wise continuous bilinear functions.
//!
//! The nonconforming space `X_h` carries one coefficient per subdomain node,
//! so traces on both sides of an interface are independent. The conforming
//! space shares interface nodes (matching meshes only) and drops the nodes on
//! the screen boundary.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{MeshedScreen, Panel, SkeletonPiece, GEOMETRY_TOL};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Nonconforming,
    Conforming,
}

/// Global numbering of basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct DofSystem {
    pub kind: SpaceKind,
    /// `node_dofs[j][i]`: global index of node `i` of subdomain `j`, if any.
    pub node_dofs: Vec<Vec<Option<usize>>>,
    pub n: usize,
}

type NodeKey = (i64, i64, i64);

fn node_key(p: Vec3) -> NodeKey {
    let q = |x: f64| (x * 1e9).round() as i64;
    (q(p.x()), q(p.y()), q(p.z()))
}

fn sorted_nodes(nodes: &[Vec3]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].lex_cmp(&nodes[b]));
    order
}

impl DofSystem {
    /// Numbering subdomain by subdomain, nodes in lexicographic coordinate order.
    pub fn build(screen: &MeshedScreen, kind: SpaceKind) -> Result<Self> {
        match kind {
            SpaceKind::Nonconforming => {
                let mut n = 0;
                let node_dofs = screen
                    .meshes
                    .iter()
                    .map(|m| {
                        let mut map = vec![None; m.nodes.len()];
                        for i in sorted_nodes(&m.nodes) {
                            map[i] = Some(n);
                            n += 1;
                        }
                        map
                    })
                    .collect();
                Ok(DofSystem { kind, node_dofs, n })
            }
            SpaceKind::Conforming => Self::build_conforming(screen),
        }
    }

    fn build_conforming(screen: &MeshedScreen) -> Result<Self> {
        let tol = 1e3 * GEOMETRY_TOL;
        for seg in screen.skeleton.segments.iter().filter(|s| s.is_interior()) {
            let right = seg.right.unwrap();
            let keys = |sub: usize, edges: &[crate::geometry::EdgeRef]| {
                let mut k: Vec<NodeKey> = edges
                    .iter()
                    .flat_map(|e| {
                        let (a, b) = crate::geometry::edge_endpoints(&screen.meshes[sub], *e);
                        [node_key(a), node_key(b)]
                    })
                    .collect();
                k.sort();
                k.dedup();
                k
            };
            if keys(seg.left, &seg.left_edges) != keys(right, &seg.right_edges) {
                return Err(Error::Config("conforming space requires matching interface meshes".into()));
            }
        }
        let on_boundary = |p: Vec3| {
            screen
                .skeleton
                .segments
                .iter()
                .filter(|s| !s.is_interior())
                .any(|s| crate::vec3::point_segment_dist(p, s.start, s.end) <= tol)
        };
        let mut index: HashMap<NodeKey, usize> = HashMap::new();
        let mut n = 0;
        let mut node_dofs = Vec::with_capacity(screen.meshes.len());
        for m in &screen.meshes {
            let mut map = vec![None; m.nodes.len()];
            for i in sorted_nodes(&m.nodes) {
                let p = m.nodes[i];
                if on_boundary(p) {
                    continue;
                }
                let d = *index.entry(node_key(p)).or_insert_with(|| {
                    n += 1;
                    n - 1
                });
                map[i] = Some(d);
            }
            node_dofs.push(map);
        }
        Ok(DofSystem { kind: SpaceKind::Conforming, node_dofs, n })
    }

    pub fn element_dofs(&self, screen: &MeshedScreen, subdomain: usize, element: usize) -> [Option<usize>; 4] {
        screen.meshes[subdomain].elements[element].map(|i| self.node_dofs[subdomain][i])
    }

    /// Flat list of all elements with their panels and global indices.
    pub fn elements(&self, screen: &MeshedScreen) -> Vec<GlobalElement> {
        let mut out = Vec::with_capacity(screen.element_count());
        for (j, m) in screen.meshes.iter().enumerate() {
            for e in 0..m.elements.len() {
                out.push(GlobalElement {
                    subdomain: j,
                    element: e,
                    panel: m.panel(e),
                    dofs: self.element_dofs(screen, j, e),
                });
            }
        }
        out
    }

    /// Coefficients of a conforming function in the nonconforming numbering
    /// of `target` (zero on boundary nodes).
    pub fn inject(&self, target: &DofSystem, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.kind != SpaceKind::Conforming || target.kind != SpaceKind::Nonconforming {
            return Err(Error::Config("injection maps a conforming vector into X_h".into()));
        }
        if x.len() != self.n || self.node_dofs.len() != target.node_dofs.len() {
            return Err(Error::Config("vector or mesh does not match the space".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); target.n];
        for (src, dst) in self.node_dofs.iter().zip(&target.node_dofs) {
            for (s, d) in src.iter().zip(dst) {
                if let (Some(s), Some(d)) = (s, d) {
                    out[*d] = x[*s];
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalElement {
    pub subdomain: usize,
    pub element: usize,
    pub panel: Panel,
    pub dofs: [Option<usize>; 4],
}

/// Bilinear shape values at reference coordinates, corner order
/// `(0,0), (1,0), (1,1), (0,1)`.
#[inline]
pub fn shape_values(st: [f64; 2]) -> [f64; 4] {
    let [s, t] = st;
    [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t]
}

/// Surface curl `grad_G phi x n` of one shape function, linear in the
/// reference coordinates: `constant + s * s_coeff + t * t_coeff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisCurl {
    pub constant: Vec3,
    pub s_coeff: Vec3,
    pub t_coeff: Vec3,
}

impl BasisCurl {
    pub fn eval(&self, st: [f64; 2]) -> Vec3 {
        self.constant + self.s_coeff * st[0] + self.t_coeff * st[1]
    }
}

/// Per-element data for evaluating shape curls quickly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementCurls {
    /// `g1 x n` and `g2 x n` for the dual basis `g1, g2` of the panel.
    pub a: Vec3,
    pub b: Vec3,
}

impl ElementCurls {
    pub fn new(panel: &Panel) -> Self {
        let n = panel.normal();
        let (g1, g2) = panel.dual_basis();
        ElementCurls { a: g1.cross(n), b: g2.cross(n) }
    }

    #[inline]
    pub fn at(&self, st: [f64; 2]) -> [Vec3; 4] {
        let [s, t] = st;
        let ds = [-(1.0 - t), 1.0 - t, t, -t];
        let dt = [-(1.0 - s), -s, s, 1.0 - s];
        std::array::from_fn(|i| self.a * ds[i] + self.b * dt[i])
    }
}

pub fn shape_curl(panel: &Panel, i: usize) -> BasisCurl {
    assert!(i < 4, "bilinear element has four shape functions");
    let c = ElementCurls::new(panel);
    // d/ds and d/dt of the shape function as (constant, s, t) coefficients
    let (ds, dt): ([f64; 3], [f64; 3]) = match i {
        0 => ([-1.0, 0.0, 1.0], [-1.0, 1.0, 0.0]),
        1 => ([1.0, 0.0, -1.0], [0.0, -1.0, 0.0]),
        2 => ([0.0, 0.0, 1.0], [0.0, 1.0, 0.0]),
        _ => ([0.0, 0.0, -1.0], [1.0, -1.0, 0.0]),
    };
    BasisCurl {
        constant: c.a * ds[0] + c.b * dt[0],
        s_coeff: c.a * ds[1] + c.b * dt[1],
        t_coeff: c.a * ds[2] + c.b * dt[2],
    }
}

/// Contribution of one basis function to the jump on a skeleton piece:
/// the jump is linear along the piece with these end values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpShape {
    pub dof: usize,
    pub start: f64,
    pub end: f64,
}

/// Basis functions with a nonzero jump on `piece`, `[v] = v_left - v_right`
/// (the trace itself on the screen boundary). Entries of the same index from
/// both sides are merged.
pub fn piece_jump_shapes(dofs: &DofSystem, screen: &MeshedScreen, piece: &SkeletonPiece) -> Vec<JumpShape> {
    let mut out: Vec<JumpShape> = Vec::with_capacity(4);
    let sides = std::iter::once((piece.left, 1.0)).chain(piece.right.map(|r| (r, -1.0)));
    for (side, sign) in sides {
        let panel = screen.meshes[side.subdomain].panel(side.element);
        let (st0, _) = panel.local_coords(piece.start);
        let (st1, _) = panel.local_coords(piece.end);
        let (v0, v1) = (shape_values(st0), shape_values(st1));
        for (i, d) in dofs.element_dofs(screen, side.subdomain, side.element).iter().enumerate() {
            let Some(d) = *d else { continue };
            let (a, b) = (sign * v0[i], sign * v1[i]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            match out.iter_mut().find(|j| j.dof == d) {
                Some(j) => {
                    j.start += a;
                    j.end += b;
                }
                None => out.push(JumpShape { dof: d, start: a, end: b }),
            }
        }
    }
    out
}

/// End values of `[v]` on one skeleton piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PieceJump {
    pub start: Complex64,
    pub end: Complex64,
    pub length: f64,
}

/// The jump of the discrete function with coefficients `x` on every piece.
pub fn jump_trace(dofs: &DofSystem, screen: &MeshedScreen, x: &[Complex64]) -> Vec<PieceJump> {
    screen
        .skeleton
        .pieces
        .iter()
        .map(|p| {
            let mut j = PieceJump { start: Complex64::new(0.0, 0.0), end: Complex64::new(0.0, 0.0), length: p.length() };
            for s in piece_jump_shapes(dofs, screen, p) {
                j.start += x[s.dof] * s.start;
                j.end += x[s.dof] * s.end;
            }
            j
        })
        .collect()
}

/// `||[v]||_{L2(gamma)}`, integrated exactly piece by piece.
pub fn jump_l2_norm(jumps: &[PieceJump]) -> f64 {
    jumps
        .iter()
        .map(|j| j.length / 3.0 * (j.start.norm_sqr() + j.end.norm_sqr() + (j.start * j.end.conj()).re))
        .sum::<f64>()
        .sqrt()
}
