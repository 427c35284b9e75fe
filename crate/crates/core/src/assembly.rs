//! Galerkin matrices of the Nitsche form and of the conforming hypersingular
//! form (via the Maue identity), and the load vector.
//!
//! Convention: `A[i][j] = a(phi_j, phi_i)`. Basis functions are real, so no
//! conjugation appears in any entry.
//!
//! Element-pair and segment-element blocks depend only on the shapes of the
//! two entities and their relative position. Blocks are computed once per
//! distinct (quantized) configuration from a fixed representative, then
//! scattered in a fixed order, so the result does not depend on the thread
//! schedule.

use std::collections::HashMap;
use std::io::Write;

use log::{debug, info};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{MeshedScreen, Panel};
use crate::kernels::{single_layer_at, WaveNumber};
use crate::quadrature::{
    PairRulePart, PanelPairRule, QuadratureOrders, Segment, SegmentPanelRule, SegmentRulePart,
};
use crate::spaces::{piece_jump_shapes, shape_values, DofSystem, ElementCurls, GlobalElement, SpaceKind};
use crate::vec3::Vec3;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Penalty parameter: a constant, or `nu0 h^-epsilon` evaluated per mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NitscheParams {
    Constant { nu: f64 },
    Policy { nu0: f64, epsilon: f64 },
}

impl NitscheParams {
    pub fn constant(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {nu}")));
        }
        Ok(NitscheParams::Constant { nu })
    }

    pub fn policy(nu0: f64, epsilon: f64) -> Result<Self> {
        if !(nu0.is_finite() && nu0 > 0.0) {
            return Err(Error::Config(format!("nu0 must be positive, got {nu0}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be non-negative, got {epsilon}")));
        }
        Ok(NitscheParams::Policy { nu0, epsilon })
    }

    pub fn nu(&self, h: f64) -> f64 {
        match *self {
            NitscheParams::Constant { nu } => nu,
            NitscheParams::Policy { nu0, epsilon } => nu0 * h.powf(-epsilon),
        }
    }
}

// Bilinear shapes, their s- and t-derivatives, as coefficients in the
// monomials (1, s, t, st).
const PHI: [[f64; 4]; 4] = [[1.0, -1.0, -1.0, 1.0], [0.0, 1.0, 0.0, -1.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, -1.0]];
const DS: [[f64; 4]; 4] = [[-1.0, 0.0, 1.0, 0.0], [1.0, 0.0, -1.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, -1.0, 0.0]];
const DT: [[f64; 4]; 4] = [[-1.0, 1.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0]];

#[inline]
fn mono(st: [f64; 2]) -> [f64; 4] {
    [1.0, st[0], st[1], st[0] * st[1]]
}

type Block4 = [[Complex64; 4]; 4];
type Block24 = [[Complex64; 4]; 2];

/// `sum w G(r) m_p(a) m_q(b)` over a pair rule.
fn pair_moments(k: f64, rule: &PanelPairRule) -> Block4 {
    let mut m = [[C0; 4]; 4];
    for part in &rule.parts {
        match part {
            PairRulePart::Nodes(nodes) => {
                for n in nodes {
                    let g = single_layer_at(k, n.r) * n.w;
                    let (ma, mb) = (mono(n.a), mono(n.b));
                    for p in 0..4 {
                        let gp = g * ma[p];
                        for q in 0..4 {
                            m[p][q] += gp * mb[q];
                        }
                    }
                }
            }
            PairRulePart::Tensor { a, b } => {
                let mbs: Vec<[f64; 4]> = b.iter().map(|pb| mono(pb.st)).collect();
                for pa in a {
                    let mut v = [C0; 4];
                    for (pb, mb) in b.iter().zip(&mbs) {
                        let g = single_layer_at(k, pa.x.dist(pb.x)) * pb.w;
                        for q in 0..4 {
                            v[q] += g * mb[q];
                        }
                    }
                    let ma = mono(pa.st);
                    for p in 0..4 {
                        let f = pa.w * ma[p];
                        for q in 0..4 {
                            m[p][q] += v[q] * f;
                        }
                    }
                }
            }
        }
    }
    m
}

/// `sum_pq U[a][p] M[p][q] V[b][q]`.
fn sandwich(u: &[[f64; 4]; 4], m: &Block4, v: &[[f64; 4]; 4]) -> Block4 {
    let mut um = [[C0; 4]; 4];
    for a in 0..4 {
        for q in 0..4 {
            um[a][q] = (0..4).map(|p| m[p][q] * u[a][p]).sum();
        }
    }
    let mut out = [[C0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = (0..4).map(|q| um[a][q] * v[b][q]).sum();
        }
    }
    out
}

/// Weights of the two single-layer terms in an assembled block.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TermWeights {
    curl: f64,
    normal: f64,
}

/// `curl * <V curl phi_b, curl phi_a> + normal * <V n phi_b, n phi_a>` for
/// shapes `a` on `pa` and `b` on `pb`.
fn single_layer_block(k: f64, pa: &Panel, pb: &Panel, orders: &QuadratureOrders, tw: TermWeights) -> Result<Block4> {
    let rule = PanelPairRule::new(pa, pb, orders)?;
    let m = pair_moments(k, &rule);
    let (ca, cb) = (ElementCurls::new(pa), ElementCurls::new(pb));
    let mut out = [[C0; 4]; 4];
    let mut add = |blk: Block4, f: f64| {
        if f != 0.0 {
            for a in 0..4 {
                for b in 0..4 {
                    out[a][b] += blk[a][b] * f;
                }
            }
        }
    };
    if tw.curl != 0.0 {
        add(sandwich(&DS, &m, &DS), tw.curl * ca.a.dot(cb.a));
        add(sandwich(&DS, &m, &DT), tw.curl * ca.a.dot(cb.b));
        add(sandwich(&DT, &m, &DS), tw.curl * ca.b.dot(cb.a));
        add(sandwich(&DT, &m, &DT), tw.curl * ca.b.dot(cb.b));
    }
    if tw.normal != 0.0 {
        add(sandwich(&PHI, &m, &PHI), tw.normal * pa.normal().dot(pb.normal()));
    }
    Ok(out)
}

const KEY_SCALE: f64 = 1e10;

fn quantize(v: Vec3) -> [i64; 3] {
    v.0.map(|x| (x * KEY_SCALE).round() as i64)
}

/// Ids of distinct element shapes and quantized element origins.
fn shape_table(panels: impl Iterator<Item = Panel>) -> (Vec<u32>, Vec<[i64; 3]>) {
    let mut ids: HashMap<[i64; 6], u32> = HashMap::new();
    let mut shape = Vec::new();
    let mut origin = Vec::new();
    for p in panels {
        let [a, b, c] = quantize(p.e1);
        let [d, e, f] = quantize(p.e2);
        let n = ids.len() as u32;
        shape.push(*ids.entry([a, b, c, d, e, f]).or_insert(n));
        origin.push(quantize(p.origin));
    }
    (shape, origin)
}

fn translated(p: &Panel, by: Vec3) -> Panel {
    Panel::new(p.origin - by, p.e1, p.e2)
}

/// `curl * (curl-curl term) + normal * (normal term)` over all element pairs.
fn single_layer_matrix(
    k: WaveNumber,
    screen: &MeshedScreen,
    dofs: &DofSystem,
    orders: &QuadratureOrders,
    tw: TermWeights,
) -> Result<Array2<Complex64>> {
    orders.validate()?;
    let elems = dofs.elements(screen);
    let (shape, origin) = shape_table(elems.iter().map(|e| e.panel));
    let ne = elems.len();

    let mut keys: HashMap<(u32, u32, [i64; 3]), u32> = HashMap::new();
    let mut reps: Vec<(usize, usize)> = Vec::new();
    let mut slots: Vec<u32> = Vec::with_capacity(ne * (ne + 1) / 2);
    for a in 0..ne {
        for b in a..ne {
            let off = [origin[b][0] - origin[a][0], origin[b][1] - origin[a][1], origin[b][2] - origin[a][2]];
            let next = reps.len() as u32;
            let slot = *keys.entry((shape[a], shape[b], off)).or_insert_with(|| {
                reps.push((a, b));
                next
            });
            slots.push(slot);
        }
    }
    drop(keys);
    debug!("single-layer: {} element pairs, {} distinct blocks", slots.len(), reps.len());

    let blocks: Vec<Block4> = reps
        .par_iter()
        .map(|&(a, b)| {
            let o = elems[a].panel.origin;
            let pa = translated(&elems[a].panel, o);
            let pb = translated(&elems[b].panel, o);
            single_layer_block(k.0, &pa, &pb, orders, tw)
        })
        .collect::<Result<_>>()?;

    let mut m = Array2::<Complex64>::zeros((dofs.n, dofs.n));
    let mut it = slots.iter();
    for a in 0..ne {
        let da = elems[a].dofs;
        for b in a..ne {
            let blk = &blocks[*it.next().unwrap() as usize];
            let db = elems[b].dofs;
            for (i, di) in da.iter().enumerate() {
                let Some(di) = *di else { continue };
                for (j, dj) in db.iter().enumerate() {
                    let Some(dj) = *dj else { continue };
                    m[(di, dj)] += blk[i][j];
                    if a != b {
                        m[(dj, di)] += blk[i][j];
                    }
                }
            }
        }
    }
    Ok(m)
}

/// `M[i][j] = <V_k curl phi_j, curl phi_i>` over all element pairs of all
/// subdomains.
pub fn assemble_curl_curl_block(
    k: WaveNumber,
    screen: &MeshedScreen,
    dofs: &DofSystem,
    orders: &QuadratureOrders,
) -> Result<Array2<Complex64>> {
    single_layer_matrix(k, screen, dofs, orders, TermWeights { curl: 1.0, normal: 0.0 })
}

/// `-k^2 <V_k n phi_j, n phi_i>`.
pub fn assemble_normal_block(
    k: WaveNumber,
    screen: &MeshedScreen,
    dofs: &DofSystem,
    orders: &QuadratureOrders,
) -> Result<Array2<Complex64>> {
    if k.0 == 0.0 {
        return Ok(Array2::zeros((dofs.n, dofs.n)));
    }
    single_layer_matrix(k, screen, dofs, orders, TermWeights { curl: 0.0, normal: -k.0 * k.0 })
}

/// Sum of the curl-curl and normal blocks, i.e. the Galerkin matrix of the
/// hypersingular operator on the conforming space.
pub fn assemble_single_layer_terms(
    k: WaveNumber,
    screen: &MeshedScreen,
    dofs: &DofSystem,
    orders: &QuadratureOrders,
) -> Result<Array2<Complex64>> {
    single_layer_matrix(k, screen, dofs, orders, TermWeights { curl: 1.0, normal: -k.0 * k.0 })
}

/// Rows of `C1[i][j] = <T_k phi_j, [phi_i]>_gamma` for the indices `i` with a
/// nonzero jump somewhere on the skeleton; all other rows vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBlock {
    pub rows: Vec<usize>,
    /// `c1[(r, j)] = C1[rows[r]][j]`.
    pub c1: Array2<Complex64>,
}

impl CouplingBlock {
    pub fn dense_c1(&self, n: usize) -> Array2<Complex64> {
        let mut out = Array2::zeros((n, n));
        for (r, &i) in self.rows.iter().enumerate() {
            out.row_mut(i).assign(&self.c1.row(r));
        }
        out
    }

    /// `C2[i][j] = <[phi_j], T_{-k} phi_i>_gamma`, which for a real basis is
    /// the transpose of `C1`.
    pub fn dense_c2(&self, n: usize) -> Array2<Complex64> {
        self.dense_c1(n).reversed_axes().as_standard_layout().to_owned()
    }

    /// `m += C1 + C2`.
    pub fn add_to(&self, m: &mut Array2<Complex64>) {
        for (r, &i) in self.rows.iter().enumerate() {
            let row = self.c1.row(r);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] += *v;
                m[(j, i)] += *v;
            }
        }
    }
}

/// `I[b][a] = int_seg psi_b t . int_elem G_k curl phi_a`, with the hat
/// functions `psi_0 = 1 - lambda`, `psi_1 = lambda` on the segment.
fn segment_block(k: f64, seg: &Segment, panel: &Panel, orders: &QuadratureOrders) -> Result<Block24> {
    let rule = SegmentPanelRule::new(seg, panel, orders)?;
    let mut j = [[C0; 4]; 2];
    for part in &rule.parts {
        match part {
            SegmentRulePart::Nodes(nodes) => {
                for n in nodes {
                    let g = single_layer_at(k, n.r) * n.w;
                    let mb = mono(n.b);
                    for q in 0..4 {
                        j[0][q] += g * mb[q];
                        j[1][q] += g * (mb[q] * n.lam);
                    }
                }
            }
            SegmentRulePart::Tensor { seg: sp, panel: pp } => {
                let mbs: Vec<[f64; 4]> = pp.iter().map(|p| mono(p.st)).collect();
                for s in sp {
                    let mut v = [C0; 4];
                    for (p, mb) in pp.iter().zip(&mbs) {
                        let g = single_layer_at(k, s.x.dist(p.x)) * p.w;
                        for q in 0..4 {
                            v[q] += g * mb[q];
                        }
                    }
                    for q in 0..4 {
                        j[0][q] += v[q] * s.w;
                        j[1][q] += v[q] * (s.w * s.lam);
                    }
                }
            }
        }
    }
    let t = seg.tangent();
    let c = ElementCurls::new(panel);
    let (ta, tb) = (t.dot(c.a), t.dot(c.b));
    let mut out = [[C0; 4]; 2];
    for a in 0..4 {
        let coef: [f64; 4] = std::array::from_fn(|q| ta * DS[a][q] + tb * DT[a][q]);
        let m0: Complex64 = (0..4).map(|q| j[0][q] * coef[q]).sum();
        let m1: Complex64 = (0..4).map(|q| j[1][q] * coef[q]).sum();
        // psi_0 = 1 - lambda, psi_1 = lambda
        out[0][a] = m0 - m1;
        out[1][a] = m1;
    }
    Ok(out)
}

pub fn assemble_coupling_blocks(
    k: WaveNumber,
    screen: &MeshedScreen,
    dofs: &DofSystem,
    orders: &QuadratureOrders,
) -> Result<CouplingBlock> {
    orders.validate()?;
    let elems: Vec<GlobalElement> = dofs.elements(screen);
    let (shape, origin) = shape_table(elems.iter().map(|e| e.panel));
    let pieces = &screen.skeleton.pieces;
    let jumps: Vec<_> = pieces.iter().map(|p| piece_jump_shapes(dofs, screen, p)).collect();

    let mut rows: Vec<usize> = jumps.iter().flatten().map(|j| j.dof).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut row_of = vec![usize::MAX; dofs.n];
    for (r, &i) in rows.iter().enumerate() {
        row_of[i] = r;
    }

    let mut keys: HashMap<([i64; 3], u32, [i64; 3]), u32> = HashMap::new();
    let mut reps: Vec<(usize, usize)> = Vec::new();
    let mut slots: Vec<u32> = Vec::with_capacity(pieces.len() * elems.len());
    for (pi, p) in pieces.iter().enumerate() {
        let dir = quantize(p.end - p.start);
        let s0 = quantize(p.start);
        for e in 0..elems.len() {
            let off = [origin[e][0] - s0[0], origin[e][1] - s0[1], origin[e][2] - s0[2]];
            let next = reps.len() as u32;
            let slot = *keys.entry((dir, shape[e], off)).or_insert_with(|| {
                reps.push((pi, e));
                next
            });
            slots.push(slot);
        }
    }
    drop(keys);
    debug!("coupling: {} segment-element pairs, {} distinct blocks", slots.len(), reps.len());

    let blocks: Vec<Block24> = reps
        .par_iter()
        .map(|&(pi, e)| {
            let p = &pieces[pi];
            let seg = Segment::new(Vec3::ZERO, p.end - p.start);
            segment_block(k.0, &seg, &translated(&elems[e].panel, p.start), orders)
        })
        .collect::<Result<_>>()?;

    let mut c1 = Array2::<Complex64>::zeros((rows.len(), dofs.n));
    let mut it = slots.iter();
    for js in &jumps {
        for el in &elems {
            let blk = &blocks[*it.next().unwrap() as usize];
            for s in js {
                let r = row_of[s.dof];
                for (a, d) in el.dofs.iter().enumerate() {
                    if let Some(d) = *d {
                        c1[(r, d)] += blk[0][a] * s.start + blk[1][a] * s.end;
                    }
                }
            }
        }
    }
    Ok(CouplingBlock { rows, c1 })
}

/// Entries of the `L2(gamma)` Gram matrix of the jumps, `(i, j, value)`
/// sorted by `(i, j)`.
pub fn assemble_penalty_block(screen: &MeshedScreen, dofs: &DofSystem) -> Vec<(usize, usize, f64)> {
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for p in &screen.skeleton.pieces {
        let l = p.length();
        let js = piece_jump_shapes(dofs, screen, p);
        for a in &js {
            for b in &js {
                let v = l / 6.0 * (2.0 * a.start * b.start + a.start * b.end + a.end * b.start + 2.0 * a.end * b.end);
                *acc.entry((a.dof, b.dof)).or_insert(0.0) += v;
            }
        }
    }
    let mut out: Vec<(usize, usize, f64)> = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    out.sort_by_key(|&(i, j, _)| (i, j));
    out
}

pub const RHS_ORDER: usize = 4;

/// `b[i] = int_Gamma f conj(phi_i)` by tensor Gauss of order 4 per element.
pub fn assemble_rhs(screen: &MeshedScreen, dofs: &DofSystem, f: impl Fn(Vec3) -> Complex64) -> Array1<Complex64> {
    let g = crate::quadrature::gauss(RHS_ORDER);
    let mut b = Array1::<Complex64>::zeros(dofs.n);
    for el in dofs.elements(screen) {
        let area = el.panel.area();
        for (t, wt) in g.on(0.0, 1.0) {
            for (s, ws) in g.on(0.0, 1.0) {
                let v = f(el.panel.point(s, t)) * (ws * wt * area);
                let phi = shape_values([s, t]);
                for (i, d) in el.dofs.iter().enumerate() {
                    if let Some(d) = *d {
                        b[d] += v * phi[i];
                    }
                }
            }
        }
    }
    b
}

/// Terms of the discrete system that do not depend on the penalty, so that
/// several `nu` reuse one assembly.
#[derive(Debug, Clone)]
pub struct SystemTerms {
    pub k: WaveNumber,
    pub kind: SpaceKind,
    pub h: f64,
    /// Curl-curl plus normal term.
    pub single_layer: Array2<Complex64>,
    /// `None` for the conforming space.
    pub coupling: Option<CouplingBlock>,
    pub penalty: Vec<(usize, usize, f64)>,
    pub rhs: Array1<Complex64>,
}

impl SystemTerms {
    pub fn assemble(
        k: WaveNumber,
        screen: &MeshedScreen,
        dofs: &DofSystem,
        orders: &QuadratureOrders,
        f: impl Fn(Vec3) -> Complex64,
    ) -> Result<Self> {
        let t0 = std::time::Instant::now();
        let single_layer = assemble_single_layer_terms(k, screen, dofs, orders)?;
        let t1 = t0.elapsed();
        let (coupling, penalty) = match dofs.kind {
            SpaceKind::Nonconforming => (
                Some(assemble_coupling_blocks(k, screen, dofs, orders)?),
                assemble_penalty_block(screen, dofs),
            ),
            SpaceKind::Conforming => (None, Vec::new()),
        };
        let rhs = assemble_rhs(screen, dofs, f);
        info!(
            "assembled N = {} (k = {}): single layer {:.1?}, total {:.1?}",
            dofs.n,
            k.0,
            t1,
            t0.elapsed()
        );
        Ok(SystemTerms { k, kind: dofs.kind, h: screen.h(), single_layer, coupling, penalty, rhs })
    }

    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    /// The full matrix for penalty `nu` (ignored for the conforming space).
    pub fn matrix(&self, nu: f64) -> Array2<Complex64> {
        let mut m = self.single_layer.clone();
        if let Some(c) = &self.coupling {
            c.add_to(&mut m);
        }
        for &(i, j, v) in &self.penalty {
            m[(i, j)] += nu * v;
        }
        m
    }

    pub fn system(&self, nu: Option<f64>) -> AssembledSystem {
        let nu = match self.kind {
            SpaceKind::Conforming => None,
            SpaceKind::Nonconforming => nu,
        };
        AssembledSystem { matrix: self.matrix(nu.unwrap_or(0.0)), rhs: self.rhs.clone(), nu }
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: Array2<Complex64>,
    pub rhs: Array1<Complex64>,
    pub nu: Option<f64>,
}

/// Matrix and load vector of the Nitsche scheme (nonconforming `dofs`) or of
/// the conforming scheme (coupling and penalty omitted).
pub fn assemble_full(
    k: WaveNumber,
    screen: &MeshedScreen,
    dofs: &DofSystem,
    params: &NitscheParams,
    orders: &QuadratureOrders,
    f: impl Fn(Vec3) -> Complex64,
) -> Result<AssembledSystem> {
    let terms = SystemTerms::assemble(k, screen, dofs, orders, f)?;
    Ok(terms.system(Some(params.nu(screen.h()))))
}

pub const MATRIX_MAGIC: &[u8; 8] = b"SBEMMAT1";

/// Binary dump: magic, rows and cols as little-endian `u64`, the matrix
/// row-major as `(re, im)` little-endian `f64` pairs, then the load vector
/// in the same pair format.
pub fn write_matrix_dump<W: Write>(mut w: W, sys: &AssembledSystem) -> std::io::Result<()> {
    let (r, c) = sys.matrix.dim();
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(r as u64).to_le_bytes())?;
    w.write_all(&(c as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * c);
    for row in sys.matrix.rows() {
        buf.clear();
        for v in row {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    for v in &sys.rhs {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}
