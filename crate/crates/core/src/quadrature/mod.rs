//! Quadrature: Gauss-Legendre rules, singularity-removing panel-pair rules for
//! the weakly singular single-layer kernel, and segment-vs-panel rules for the
//! skeleton operator.
//!
//! All rules are produced as node lists in the *parent* reference coordinates
//! of the two entities, independent of the wave number, so the same rule
//! serves `k` and `-k`.

mod pair;
mod segment;

use std::sync::OnceLock;

pub use pair::{classify_adjacency, panel_pair_integrate, Adjacency, PairNode, PairRulePart, PanelPairRule, TensorPoint};
pub use segment::{segment_panel_integrate, Segment, SegmentNode, SegmentPanelRule, SegmentRulePart, SegmentPoint};

use crate::error::{Error, Result};
use crate::geometry::Panel;
use crate::vec3::Vec3;

/// Gauss-Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule1D {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss order must be positive");
        let n = order;
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p0 = 1.0;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussRule1D { points, weights }
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = b - a;
        self.points.iter().zip(&self.weights).map(move |(&x, &w)| (a + len * x, len * w))
    }
}

const MAX_CACHED_ORDER: usize = 64;

/// Shared Gauss rule of the given order (cached up to order 64).
pub fn gauss(order: usize) -> &'static GaussRule1D {
    static TABLE: [OnceLock<GaussRule1D>; MAX_CACHED_ORDER + 1] = [const { OnceLock::new() }; MAX_CACHED_ORDER + 1];
    assert!((1..=MAX_CACHED_ORDER).contains(&order), "Gauss order {order} outside 1..=64");
    TABLE[order].get_or_init(|| GaussRule1D::new(order))
}

/// Per-adjacency 1D orders of the panel-pair and segment-panel rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureOrders {
    pub disjoint: usize,
    pub vertex: usize,
    pub edge: usize,
    pub coincident: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        QuadratureOrders { disjoint: 8, vertex: 10, edge: 10, coincident: 12 }
    }
}

impl QuadratureOrders {
    pub fn uniform(q: usize) -> Self {
        QuadratureOrders { disjoint: q, vertex: q, edge: q, coincident: q }
    }

    pub fn validate(&self) -> Result<()> {
        for q in [self.disjoint, self.vertex, self.edge, self.coincident] {
            if !(1..=MAX_CACHED_ORDER).contains(&q) {
                return Err(Error::Config(format!("quadrature order {q} outside 1..=64")));
            }
        }
        Ok(())
    }
}

/// How the order of a well-separated tensor rule is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum OrderPolicy {
    /// One order for every adjacency class and distance.
    Uniform(usize),
    /// Class orders; the disjoint order is lowered with separation.
    Graded(QuadratureOrders),
}

/// Separation (distance over the larger diameter) below which a disjoint
/// pair is subdivided before tensor integration.
pub(crate) const NEAR_FIELD_RATIO: f64 = 0.5;
pub(crate) const MAX_SUBDIVISION_DEPTH: u32 = 8;

impl OrderPolicy {
    pub(crate) fn coincident(&self) -> usize {
        match self {
            OrderPolicy::Uniform(q) => *q,
            OrderPolicy::Graded(o) => o.coincident,
        }
    }

    pub(crate) fn edge(&self) -> usize {
        match self {
            OrderPolicy::Uniform(q) => *q,
            OrderPolicy::Graded(o) => o.edge,
        }
    }

    pub(crate) fn vertex(&self) -> usize {
        match self {
            OrderPolicy::Uniform(q) => *q,
            OrderPolicy::Graded(o) => o.vertex,
        }
    }

    /// Tensor order for a disjoint pair at separation ratio `dist / diam`.
    ///
    /// Gauss error for an integrand analytic up to a singularity at relative
    /// distance `rho` decays like `(rho + sqrt(rho^2 + 1))^(-2q)`, so the
    /// order needed for a fixed accuracy drops as the pair separates.
    pub(crate) fn disjoint(&self, ratio: f64) -> usize {
        match self {
            OrderPolicy::Uniform(q) => *q,
            OrderPolicy::Graded(o) => {
                let q = o.disjoint;
                let reduced = if ratio >= 4.0 {
                    q.saturating_sub(4)
                } else if ratio >= 2.0 {
                    q.saturating_sub(3)
                } else if ratio >= 1.0 {
                    q.saturating_sub(1)
                } else {
                    q
                };
                reduced.max(3).min(q)
            }
        }
    }
}

/// Affine map between reference squares, `p = base + s d1 + t d2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Affine2 {
    base: [f64; 2],
    d1: [f64; 2],
    d2: [f64; 2],
}

impl Affine2 {
    pub(crate) const IDENTITY: Affine2 = Affine2 { base: [0.0, 0.0], d1: [1.0, 0.0], d2: [0.0, 1.0] };

    pub(crate) fn apply(&self, s: f64, t: f64) -> [f64; 2] {
        [
            self.base[0] + s * self.d1[0] + t * self.d2[0],
            self.base[1] + s * self.d1[1] + t * self.d2[1],
        ]
    }

    /// `self` after `inner`.
    fn compose(&self, inner: &Affine2) -> Affine2 {
        let base = self.apply(inner.base[0], inner.base[1]);
        let lin = |v: [f64; 2]| [v[0] * self.d1[0] + v[1] * self.d2[0], v[0] * self.d1[1] + v[1] * self.d2[1]];
        Affine2 { base, d1: lin(inner.d1), d2: lin(inner.d2) }
    }
}

const CORNER_REF: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

/// A parallelogram region of a parent panel, possibly re-oriented, together
/// with the map from its own reference square to the parent's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PanelView {
    pub(crate) panel: Panel,
    pub(crate) map: Affine2,
}

impl PanelView {
    pub(crate) fn whole(panel: &Panel) -> Self {
        PanelView { panel: *panel, map: Affine2::IDENTITY }
    }

    pub(crate) fn to_parent(&self, s: f64, t: f64) -> [f64; 2] {
        self.map.apply(s, t)
    }

    pub(crate) fn sub(&self, s0: f64, s1: f64, t0: f64, t1: f64) -> PanelView {
        let inner = Affine2 { base: [s0, t0], d1: [s1 - s0, 0.0], d2: [0.0, t1 - t0] };
        PanelView {
            panel: Panel::new(self.panel.point(s0, t0), self.panel.e1 * (s1 - s0), self.panel.e2 * (t1 - t0)),
            map: self.map.compose(&inner),
        }
    }

    /// Same region with corner `origin` at `(0, 0)` and the adjacent corner
    /// `toward` at `(1, 0)`.
    pub(crate) fn reoriented(&self, origin: usize, toward: usize) -> PanelView {
        let other = if (origin + 1) % 4 == toward { (origin + 3) % 4 } else { (origin + 1) % 4 };
        debug_assert!(toward == (origin + 1) % 4 || toward == (origin + 3) % 4);
        let c = self.panel.corners();
        let r = CORNER_REF;
        let inner = Affine2 {
            base: r[origin],
            d1: [r[toward][0] - r[origin][0], r[toward][1] - r[origin][1]],
            d2: [r[other][0] - r[origin][0], r[other][1] - r[origin][1]],
        };
        PanelView {
            panel: Panel::new(c[origin], c[toward] - c[origin], c[other] - c[origin]),
            map: self.map.compose(&inner),
        }
    }

    /// Splits into four quarters.
    pub(crate) fn quarters(&self) -> [PanelView; 4] {
        [
            self.sub(0.0, 0.5, 0.0, 0.5),
            self.sub(0.5, 1.0, 0.0, 0.5),
            self.sub(0.0, 0.5, 0.5, 1.0),
            self.sub(0.5, 1.0, 0.5, 1.0),
        ]
    }

    /// If `p` lies on the closed panel (within `tol`), its view coordinates.
    /// Points in the open interior are reported as well; callers decide.
    pub(crate) fn locate(&self, p: Vec3, tol: f64) -> Option<[f64; 2]> {
        if self.panel.distance_to(p) > tol {
            return None;
        }
        let ([s, t], _) = self.panel.local_coords(p);
        Some([s, t])
    }

    /// Index of the corner within `tol` of `p`.
    pub(crate) fn corner_at(&self, p: Vec3, tol: f64) -> Option<usize> {
        self.panel.corners().iter().position(|c| c.dist(p) <= tol)
    }
}

/// Boundary classification of view coordinates: which of the lines
/// `s = 0, s = 1, t = 0, t = 1` the point lies on.
pub(crate) fn on_edges(view: &PanelView, st: [f64; 2], tol: f64) -> [bool; 4] {
    let es = tol / view.panel.e1.norm();
    let et = tol / view.panel.e2.norm();
    [st[0].abs() <= es, (st[0] - 1.0).abs() <= es, st[1].abs() <= et, (st[1] - 1.0).abs() <= et]
}

/// Geometric intervals from `near` towards `far`, the first of width `w0`,
/// each next one twice as wide.
pub(crate) fn graded_intervals(near: f64, far: f64, w0: f64) -> Vec<(f64, f64)> {
    let dir = if far >= near { 1.0 } else { -1.0 };
    let total = (far - near).abs();
    let mut out = Vec::new();
    let mut a = 0.0;
    let mut w = w0.min(total);
    while a < total {
        let b = (a + w).min(total);
        if total - b < 0.5 * w {
            out.push((near + dir * a, far));
            break;
        }
        out.push((near + dir * a, near + dir * b));
        a = b;
        w *= 2.0;
    }
    out
}
