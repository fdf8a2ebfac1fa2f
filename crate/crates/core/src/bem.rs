//! Galerkin matrices of the Laplace layer operators on the closed panel
//! loop `Γ²`, the discrete Steklov–Poincaré matrix and the Calderón check.
//!
//! Kernels are `G(x, y) = -ln|x - y| / 2π` and its normal derivative in `y`.
//! The hypersingular operator is never integrated directly: it is assembled
//! from the single layer acting on arc-length derivatives.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{consistency, param};
use crate::geometry::{BoundaryMesh, Panel, Point2, Tag};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::quadrature::{gauss, panel_pair_rule, PairNode, PairOrders, PairRelation};
use crate::space::{flux_shape, trace_shape, BeFluxSpace, BeTraceSpace, DegreeVector};
use crate::{Error, Result};

const INV_2PI: f64 = 0.5 / PI;

/// Fundamental solution `-ln|x - y| / 2π`.
pub fn kernel_g(x: Point2, y: Point2) -> Result<f64> {
    let r = x.dist(y);
    if r == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(-INV_2PI * r.ln())
}

/// `∇_y G(x, y) · n_y = (x - y)·n_y / (2π |x - y|²)`.
pub fn kernel_double_layer(x: Point2, y: Point2, ny: Point2) -> Result<f64> {
    let d = x - y;
    let r2 = d.dot(d);
    if r2 == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(INV_2PI * d.dot(ny) / r2)
}

/// Similarity `x ↦ c + s (x - c)` applied to `Γ²` before assembly, so that
/// the single layer operator is positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleTransform {
    pub center: Point2,
    pub s: f64,
}

impl ScaleTransform {
    pub const DEFAULT_FACTOR: f64 = 0.25;

    /// Factor ¼ about the corner barycenter, reduced further if the scaled
    /// diameter would not stay below ½.
    pub fn for_boundary(mesh: &BoundaryMesh) -> Self {
        let d = mesh.diameter();
        let s = if d * Self::DEFAULT_FACTOR < 0.5 {
            Self::DEFAULT_FACTOR
        } else {
            0.5 / d
        };
        ScaleTransform {
            center: mesh.center(),
            s,
        }
    }

    pub fn identity() -> Self {
        ScaleTransform {
            center: Point2::default(),
            s: 1.0,
        }
    }

    pub fn apply(&self, mesh: &BoundaryMesh) -> BoundaryMesh {
        mesh.scaled(self.center, self.s)
    }
}

/// Dense Galerkin matrices. Rows of `v`, `k`, `m` and `d` index the flux
/// space; columns of `k`, `m`, `d` and both sides of `w` the trace space.
#[derive(Debug, Clone)]
pub struct LayerMatrices {
    /// `⟨Vψ_j, ψ_i⟩`.
    pub v: DenseMatrix,
    /// `⟨Kφ_j, ψ_i⟩`.
    pub k: DenseMatrix,
    /// `⟨φ_j, ψ_i⟩`.
    pub m: DenseMatrix,
    /// `⟨Wφ_j, φ_i⟩ = ⟨V ∂_s φ_j, ∂_s φ_i⟩`.
    pub w: DenseMatrix,
    /// Flux coefficients of `∂_s φ_j`.
    pub d: DenseMatrix,
}

/// Local blocks of one unordered panel pair `a <= b`.
#[derive(Debug, Clone)]
pub struct PairBlocks {
    pub a: usize,
    pub b: usize,
    /// Flux on `a` × flux on `b`.
    pub v: DenseMatrix,
    /// Flux test on `a` × trace trial on `b`.
    pub k_ab: DenseMatrix,
    /// Flux test on `b` × trace trial on `a`; empty for `a == b`.
    pub k_ba: DenseMatrix,
}

/// Panel-pair integration over one boundary mesh. The pairs are
/// independent, so callers may compute them in any order or in parallel
/// and hand the blocks to [`LayerAssembler::finish`].
pub struct LayerAssembler<'a> {
    mesh: &'a BoundaryMesh,
    trace: &'a BeTraceSpace,
    flux: &'a BeFluxSpace,
    orders: PairOrders,
    /// `∫∫ ln|s - t| L_i(2s-1) L_j(2t-1)` over `[0,1]²`.
    log_moments: DenseMatrix,
}

impl<'a> LayerAssembler<'a> {
    pub fn new(mesh: &'a BoundaryMesh, trace: &'a BeTraceSpace, flux: &'a BeFluxSpace) -> Result<Self> {
        Self::with_orders(mesh, trace, flux, PairOrders::default())
    }

    pub fn with_orders(
        mesh: &'a BoundaryMesh,
        trace: &'a BeTraceSpace,
        flux: &'a BeFluxSpace,
        orders: PairOrders,
    ) -> Result<Self> {
        let n = mesh.len();
        if trace.panels.len() != n || flux.degrees.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: trace.panels.len().min(flux.degrees.len()),
            });
        }
        for j in 0..n {
            if flux.degrees.get(j) + 1 < trace.panels[j].degree {
                return Err(consistency(
                    "flux degree must be at least the trace degree minus one",
                ));
            }
        }
        let q = flux.degrees.max();
        let rule = panel_pair_rule(PairRelation::Identical, &orders.for_degrees(q, q))?;
        let mut log_moments = DenseMatrix::zeros(q as usize + 1, q as usize + 1);
        let (mut ls, mut lt) = (Vec::new(), Vec::new());
        for node in &rule {
            flux_shape(q, node.s, &mut ls);
            flux_shape(q, node.t, &mut lt);
            let f = node.w * node.diff.abs().ln();
            for i in 0..ls.len() {
                for j in 0..lt.len() {
                    log_moments[(i, j)] += f * ls[i] * lt[j];
                }
            }
        }
        log_moments.symmetrize();
        Ok(LayerAssembler {
            mesh,
            trace,
            flux,
            orders,
            log_moments,
        })
    }

    /// All unordered pairs `a <= b`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.mesh.len();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for a in 0..n {
            for b in a..n {
                out.push((a, b));
            }
        }
        out
    }

    pub fn relation(&self, a: usize, b: usize) -> PairRelation {
        if a == b {
            PairRelation::Identical
        } else if self.mesh.next(a) == b || self.mesh.next(b) == a {
            PairRelation::Adjacent
        } else {
            PairRelation::Disjoint
        }
    }

    pub fn pair(&self, a: usize, b: usize) -> Result<PairBlocks> {
        let (qa, qb) = (self.flux.degrees.get(a), self.flux.degrees.get(b));
        let (pa, pb) = (self.trace.panels[a].degree, self.trace.panels[b].degree);
        let mut blocks = PairBlocks {
            a,
            b,
            v: DenseMatrix::zeros(qa as usize + 1, qb as usize + 1),
            k_ab: DenseMatrix::zeros(qa as usize + 1, pb as usize + 1),
            k_ba: DenseMatrix::zeros(0, 0),
        };
        let (pan_a, pan_b) = (&self.mesh.panels[a], &self.mesh.panels[b]);
        let orders = self.orders.for_degrees(qa.max(pa), qb.max(pb));
        match self.relation(a, b) {
            PairRelation::Identical => {
                // Straight panel: the double layer kernel vanishes and the
                // single layer splits into ln h and the reference moments.
                let h = pan_a.length();
                let c = -INV_2PI * h * h;
                for i in 0..=qa as usize {
                    for j in 0..=qa as usize {
                        let lnh = if i == 0 && j == 0 { h.ln() } else { 0.0 };
                        blocks.v[(i, j)] = c * (lnh + self.log_moments[(i, j)]);
                    }
                }
            }
            PairRelation::Adjacent => {
                blocks.k_ba = DenseMatrix::zeros(qb as usize + 1, pa as usize + 1);
                // Shared vertex at s = t = 0 in rule coordinates.
                let a_ends_at_b = pan_a.b.dist(pan_b.a) <= pan_a.a.dist(pan_b.b);
                let (vtx, far_a, far_b) = if a_ends_at_b {
                    (pan_a.b, pan_a.a, pan_b.b)
                } else {
                    (pan_a.a, pan_a.b, pan_b.a)
                };
                let (da, db) = (far_a - vtx, far_b - vtx);
                let rule = panel_pair_rule(PairRelation::Adjacent, &orders)?;
                let mut acc = Accumulator::new(pan_a, pan_b, qa, qb, pa, pb);
                for node in &rule {
                    let sa = if a_ends_at_b { 1.0 - node.s } else { node.s };
                    let tb = if a_ends_at_b { node.t } else { 1.0 - node.t };
                    let diff = da * node.s - db * node.t;
                    acc.add(&mut blocks, sa, tb, diff, node.w);
                }
            }
            PairRelation::Disjoint => {
                blocks.k_ba = DenseMatrix::zeros(qb as usize + 1, pa as usize + 1);
                let rule = panel_pair_rule(PairRelation::Disjoint, &orders)?;
                let mut acc = Accumulator::new(pan_a, pan_b, qa, qb, pa, pb);
                let mut stack = vec![((0.0, 1.0), (0.0, 1.0), 0u32)];
                while let Some(((s0, s1), (t0, t1), depth)) = stack.pop() {
                    let (xa, xb) = (pan_a.point(s0), pan_a.point(s1));
                    let (ya, yb) = (pan_b.point(t0), pan_b.point(t1));
                    let (la, lb) = (xa.dist(xb), ya.dist(yb));
                    let dist = segment_distance(xa, xb, ya, yb);
                    if dist >= la.max(lb) || depth >= 40 {
                        add_tensor(&mut acc, &mut blocks, &rule, (s0, s1), (t0, t1));
                    } else if la >= lb {
                        let sm = 0.5 * (s0 + s1);
                        stack.push(((s0, sm), (t0, t1), depth + 1));
                        stack.push(((sm, s1), (t0, t1), depth + 1));
                    } else {
                        let tm = 0.5 * (t0 + t1);
                        stack.push(((s0, s1), (t0, tm), depth + 1));
                        stack.push(((s0, s1), (tm, t1), depth + 1));
                    }
                }
            }
        }
        Ok(blocks)
    }

    /// Scatters the pair blocks and adds the mass and derivative matrices.
    pub fn finish(&self, blocks: &[PairBlocks]) -> LayerMatrices {
        let (nf, nt) = (self.flux.n_dofs, self.trace.n_dofs);
        let mut v = DenseMatrix::zeros(nf, nf);
        let mut k = DenseMatrix::zeros(nf, nt);
        for bl in blocks {
            let (oa, ob) = (self.flux.offsets[bl.a], self.flux.offsets[bl.b]);
            for i in 0..bl.v.rows() {
                for j in 0..bl.v.cols() {
                    v[(oa + i, ob + j)] = bl.v[(i, j)];
                    v[(ob + j, oa + i)] = bl.v[(i, j)];
                }
            }
            let dofs_b = &self.trace.panels[bl.b].dofs;
            for i in 0..bl.k_ab.rows() {
                for (j, d) in dofs_b.iter().enumerate() {
                    if let Some(d) = d {
                        k[(oa + i, *d)] += bl.k_ab[(i, j)];
                    }
                }
            }
            let dofs_a = &self.trace.panels[bl.a].dofs;
            for i in 0..bl.k_ba.rows() {
                for (j, d) in dofs_a.iter().enumerate() {
                    if let Some(d) = d {
                        k[(ob + i, *d)] += bl.k_ba[(i, j)];
                    }
                }
            }
        }
        let m = self.mass();
        let d = self.derivative_map();
        let mut w = d.transpose().mul(&v.mul(&d));
        w.symmetrize();
        LayerMatrices { v, k, m, w, d }
    }

    fn mass(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.flux.n_dofs, self.trace.n_dofs);
        let (mut lf, mut lt, mut dt) = (Vec::new(), Vec::new(), Vec::new());
        for (j, pd) in self.trace.panels.iter().enumerate() {
            let q = self.flux.degrees.get(j);
            let h = self.mesh.panels[j].length();
            let off = self.flux.offsets[j];
            for (t, w) in gauss(((q + pd.degree) / 2 + 1) as usize).iter() {
                flux_shape(q, t, &mut lf);
                trace_shape(pd.degree, t, &mut lt, &mut dt);
                for (i, fi) in lf.iter().enumerate() {
                    for (l, d) in pd.dofs.iter().enumerate() {
                        if let Some(d) = d {
                            m[(off + i, *d)] += w * h * fi * lt[l];
                        }
                    }
                }
            }
        }
        m
    }

    /// Arc-length derivatives of trace modes in the Legendre flux basis:
    /// `∓1/h` on `L_0` for the vertex modes and `2 sqrt((2k-1)/2) / h` on
    /// `L_{k-1}` for bubble `k`.
    fn derivative_map(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.flux.n_dofs, self.trace.n_dofs);
        for (j, pd) in self.trace.panels.iter().enumerate() {
            let h = self.mesh.panels[j].length();
            let off = self.flux.offsets[j];
            for (l, dof) in pd.dofs.iter().enumerate() {
                let Some(dof) = dof else { continue };
                match l {
                    0 => d[(off, *dof)] -= 1.0 / h,
                    1 => d[(off, *dof)] += 1.0 / h,
                    k => {
                        let kf = k as f64;
                        d[(off + k - 1, *dof)] += 2.0 * ((2.0 * kf - 1.0) / 2.0).sqrt() / h;
                    }
                }
            }
        }
        d
    }
}

/// Evaluates kernels and bases at one node pair and accumulates the blocks.
struct Accumulator<'p> {
    pa: &'p Panel,
    pb: &'p Panel,
    degrees: (u32, u32, u32, u32),
    scale: f64,
    fa: Vec<f64>,
    fb: Vec<f64>,
    ta: Vec<f64>,
    tb: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'p> Accumulator<'p> {
    fn new(pa: &'p Panel, pb: &'p Panel, qa: u32, qb: u32, ta: u32, tb: u32) -> Self {
        Accumulator {
            pa,
            pb,
            degrees: (qa, qb, ta, tb),
            scale: pa.length() * pb.length(),
            fa: Vec::new(),
            fb: Vec::new(),
            ta: Vec::new(),
            tb: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// `diff = x(s) - y(t)`, passed separately to avoid cancellation.
    fn add(&mut self, blocks: &mut PairBlocks, s: f64, t: f64, diff: Point2, w: f64) {
        let (qa, qb, pa, pb) = self.degrees;
        flux_shape(qa, s, &mut self.fa);
        flux_shape(qb, t, &mut self.fb);
        trace_shape(pa, s, &mut self.ta, &mut self.scratch);
        trace_shape(pb, t, &mut self.tb, &mut self.scratch);
        let r2 = diff.dot(diff);
        let w = w * self.scale;
        let g = -0.5 * INV_2PI * r2.ln() * w;
        let kab = INV_2PI * diff.dot(self.pb.normal()) / r2 * w;
        let kba = -INV_2PI * diff.dot(self.pa.normal()) / r2 * w;
        for (i, fi) in self.fa.iter().enumerate() {
            let row = blocks.v.row_mut(i);
            for (j, fj) in self.fb.iter().enumerate() {
                row[j] += g * fi * fj;
            }
            let row = blocks.k_ab.row_mut(i);
            for (j, tj) in self.tb.iter().enumerate() {
                row[j] += kab * fi * tj;
            }
        }
        for (i, fi) in self.fb.iter().enumerate() {
            let row = blocks.k_ba.row_mut(i);
            for (j, tj) in self.ta.iter().enumerate() {
                row[j] += kba * fi * tj;
            }
        }
    }
}

fn add_tensor(
    acc: &mut Accumulator<'_>,
    blocks: &mut PairBlocks,
    rule: &[PairNode],
    (s0, s1): (f64, f64),
    (t0, t1): (f64, f64),
) {
    let (ls, lt) = (s1 - s0, t1 - t0);
    for node in rule {
        let s = s0 + ls * node.s;
        let t = t0 + lt * node.t;
        let diff = acc.pa.point(s) - acc.pb.point(t);
        acc.add(blocks, s, t, diff, node.w * ls * lt);
    }
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// Distance of two non-crossing segments.
fn segment_distance(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> f64 {
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// Assembles all layer matrices on `mesh` (already rescaled by the caller).
pub fn assemble_layers(
    mesh: &BoundaryMesh,
    trace: &BeTraceSpace,
    flux: &BeFluxSpace,
) -> Result<LayerMatrices> {
    let asm = LayerAssembler::new(mesh, trace, flux)?;
    let blocks = asm
        .pairs()
        .into_iter()
        .map(|(a, b)| asm.pair(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.finish(&blocks))
}

/// Cholesky factor of the single layer matrix. A non-positive pivot means
/// the boundary is too large in logarithmic capacity.
pub fn discrete_v_inverse(v: &DenseMatrix) -> Result<Cholesky> {
    Cholesky::new(v).map_err(|e| match e {
        Error::Singular { pivot_index, pivot } => Error::Capacity { pivot_index, pivot },
        other => other,
    })
}

/// `Ŝ = W + (K + M/2)ᵀ V⁻¹ (K + M/2)` with the factorization of `V`.
#[derive(Debug, Clone)]
pub struct SteklovMatrix {
    pub s_hat: DenseMatrix,
    pub v_factor: Cholesky,
    /// `K + M/2`.
    pub coupling: DenseMatrix,
}

impl SteklovMatrix {
    /// Flux coefficients `φ = V⁻¹ (K + M/2) u` of the discrete Neumann
    /// datum belonging to the trace `u`.
    pub fn flux_of(&self, u: &[f64]) -> Vec<f64> {
        self.v_factor.solve(&self.coupling.mul_vec(u))
    }
}

pub fn discrete_steklov(layers: &LayerMatrices) -> Result<SteklovMatrix> {
    let factor = discrete_v_inverse(&layers.v)?;
    let mut coupling = layers.k.clone();
    coupling.add_scaled(0.5, &layers.m)?;
    let (nf, nt) = (coupling.rows(), coupling.cols());
    // Y = L⁻¹ B column by column, then Ŝ = W + YᵀY.
    let mut y = DenseMatrix::zeros(nt, nf);
    let mut col = vec![0.0; nf];
    for j in 0..nt {
        for i in 0..nf {
            col[i] = coupling[(i, j)];
        }
        factor.forward(&mut col);
        y.row_mut(j).copy_from_slice(&col);
    }
    let mut s_hat = layers.w.clone();
    for i in 0..nt {
        for j in 0..=i {
            let v = crate::linalg::dot(y.row(i), y.row(j));
            s_hat[(i, j)] += v;
            if i != j {
                s_hat[(j, i)] += v;
            }
        }
    }
    Ok(SteklovMatrix {
        s_hat,
        v_factor: factor,
        coupling,
    })
}

/// Discrete `L²(Γ²)` norm of the first Calderón row `Vφ - (K + ½)u` for a
/// Cauchy pair `(u, ∂_n u)` given pointwise; `flux` receives the point and
/// the outward normal. Uses the full trace space of the given degrees and
/// flux degrees equal to them.
pub fn calderon_residual(
    mesh: &BoundaryMesh,
    degrees: &DegreeVector,
    u: impl Fn(Point2) -> f64,
    flux: impl Fn(Point2, Point2) -> f64,
) -> Result<f64> {
    let trace = BeTraceSpace::unconstrained(mesh, degrees.clone())?;
    let fs = BeFluxSpace::new(mesh, degrees.clone())?;
    let layers = assemble_layers(mesh, &trace, &fs)?;
    let uh = trace.interpolate(mesh, &u)?;
    let phi = fs.project(mesh, |x| {
        let j = nearest_panel(mesh, x);
        flux(x, mesh.panels[j].normal())
    });
    let mut r = layers.v.mul_vec(&phi);
    let ku = layers.k.mul_vec(&uh);
    let mu = layers.m.mul_vec(&uh);
    for i in 0..r.len() {
        r[i] -= ku[i] + 0.5 * mu[i];
    }
    let mut norm2 = 0.0;
    for j in 0..mesh.len() {
        let h = mesh.panels[j].length();
        for (k, i) in fs.dofs(j).enumerate() {
            norm2 += r[i] * r[i] * (2 * k + 1) as f64 / h;
        }
    }
    Ok(norm2.sqrt())
}

fn nearest_panel(mesh: &BoundaryMesh, x: Point2) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, p) in mesh.panels.iter().enumerate() {
        let d = point_segment_distance(x, p.a, p.b);
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// Newton potential contribution to the trace-side load. Only the source
/// `f ≡ 0` (passed as `None`) is supported, for which it vanishes.
pub fn newton_rhs(trace: &BeTraceSpace, f: Option<&dyn Fn(Point2) -> f64>) -> Result<Vec<f64>> {
    match f {
        None => Ok(vec![0.0; trace.n_dofs]),
        Some(_) => Err(Error::Unsupported(alloc::string::String::from(
            "volume sources in the BE subdomain (Newton potential)",
        ))),
    }
}

/// `⟨g, φ⟩_{Γ²_N}` for the Neumann flux `g(x, n)`, `n` the outward normal.
pub fn neumann_load(mesh: &BoundaryMesh, trace: &BeTraceSpace, g: impl Fn(Point2, Point2) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; trace.n_dofs];
    let (mut vals, mut ders) = (Vec::new(), Vec::new());
    for (j, panel) in mesh.panels.iter().enumerate() {
        if panel.tag != Tag::Neumann {
            continue;
        }
        let pd = &trace.panels[j];
        let (n, len) = (panel.normal(), panel.length());
        for (t, w) in gauss(pd.degree as usize + 4).iter() {
            trace_shape(pd.degree, t, &mut vals, &mut ders);
            let gx = g(panel.point(t), n) * w * len;
            for (i, d) in pd.dofs.iter().enumerate() {
                if let Some(d) = d {
                    b[*d] += gx * vals[i];
                }
            }
        }
    }
    b
}

/// Validates a scale factor given by the user.
pub fn check_scale(mesh: &BoundaryMesh, s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(param("BEM scale factor must be positive"));
    }
    if mesh.diameter() * s >= 1.0 {
        return Err(param("scaled boundary diameter must be below 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArcPartition;
    use crate::linalg::symmetric_eigenvalues;

    fn square(side: f64, h: f64, tags: [Tag; 4]) -> BoundaryMesh {
        let c = [
            Point2::new(0.0, 0.0),
            Point2::new(side, 0.0),
            Point2::new(side, side),
            Point2::new(0.0, side),
        ];
        BoundaryMesh::new(&c, &tags, ArcPartition::MaxLength(h)).unwrap()
    }

    fn full(m: &BoundaryMesh, p: u32) -> (BeTraceSpace, BeFluxSpace) {
        let d = DegreeVector::uniform(m.len(), p).unwrap();
        (
            BeTraceSpace::unconstrained(m, d.clone()).unwrap(),
            BeFluxSpace::new(m, d).unwrap(),
        )
    }

    #[test]
    fn kernel_values() {
        let o = Point2::new(0.3, -0.2);
        assert_eq!(kernel_g(o, o + Point2::new(0.6, 0.8)).unwrap(), 0.0);
        let e = core::f64::consts::E;
        let g = kernel_g(o, o + Point2::new(0.0, e)).unwrap();
        assert!((g + 0.159_154_943_091_895_33).abs() < 1e-15);
        let y = Point2::new(-1.1, 0.7);
        assert_eq!(kernel_g(o, y).unwrap(), kernel_g(y, o).unwrap());
        assert_eq!(kernel_g(o, o), Err(Error::SingularEvaluation));
    }

    #[test]
    fn single_layer_self_entry() {
        for side in [1.0, 0.5] {
            let m = square(side, side, [Tag::Interface; 4]);
            let (t, f) = full(&m, 1);
            let asm = LayerAssembler::new(&m, &t, &f).unwrap();
            let b = asm.pair(0, 0).unwrap();
            // ∫∫ -ln|x - y| over a segment of length h is h²(3/2 - ln h).
            let want = INV_2PI * side * side * (1.5 - side.ln());
            assert!((b.v[(0, 0)] - want).abs() < 1e-12 * want, "{}", b.v[(0, 0)]);
        }
    }

    #[test]
    fn collinear_double_layer_vanishes() {
        let m = square(0.5, 0.125, [Tag::Interface; 4]);
        let (t, f) = full(&m, 2);
        let asm = LayerAssembler::new(&m, &t, &f).unwrap();
        for (a, b) in [(0, 1), (0, 3), (1, 2)] {
            let bl = asm.pair(a, b).unwrap();
            assert!(bl.k_ab.max_abs() < 1e-15 && bl.k_ba.max_abs() < 1e-15);
        }
        assert!(asm.pair(0, 5).unwrap().k_ab.max_abs() > 1e-3);
    }

    #[test]
    fn constants_in_kernels() {
        let m = square(0.5, 0.125, [Tag::Interface; 4]);
        let (t, f) = full(&m, 3);
        let l = assemble_layers(&m, &t, &f).unwrap();
        let mut one = vec![0.0; t.n_dofs];
        for p in &t.panels {
            one[p.dofs[0].unwrap()] = 1.0;
        }
        let w1 = l.w.mul_vec(&one);
        assert!(w1.iter().all(|v| v.abs() < 1e-10));
        // K1 = -1/2 on a closed curve.
        let k1 = l.k.mul_vec(&one);
        let m1 = l.m.mul_vec(&one);
        let res = k1.iter().zip(&m1).map(|(a, b)| (a + 0.5 * b).abs()).fold(0.0, f64::max);
        assert!(res < 1e-9, "{res}");
        assert!(l.v.asymmetry() < 1e-12);
    }

    #[test]
    fn capacity_guard() {
        let big = square(4.0, 1.0, [Tag::Interface; 4]);
        let (t, f) = full(&big, 1);
        let l = assemble_layers(&big, &t, &f).unwrap();
        assert!(matches!(discrete_v_inverse(&l.v), Err(Error::Capacity { .. })));
        let small = ScaleTransform::for_boundary(&big).apply(&big);
        let l = assemble_layers(&small, &t, &f).unwrap();
        let chol = discrete_v_inverse(&l.v).unwrap();
        let e3: Vec<f64> = (0..f.n_dofs).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect();
        let back = chol.solve(&l.v.mul_vec(&e3));
        assert!(back.iter().zip(&e3).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn steklov_symmetric_semidefinite() {
        let m = square(0.5, 0.25, [Tag::Interface, Tag::Interface, Tag::Dirichlet, Tag::Neumann]);
        let d = DegreeVector::uniform(m.len(), 2).unwrap();
        let t = BeTraceSpace::new(&m, d.clone()).unwrap();
        let f = BeFluxSpace::new(&m, d).unwrap();
        let s = discrete_steklov(&assemble_layers(&m, &t, &f).unwrap()).unwrap();
        assert!(s.s_hat.asymmetry() < 1e-12 * s.s_hat.max_abs());
        let ev = symmetric_eigenvalues(&s.s_hat);
        assert!(ev.iter().all(|&l| l > 0.0), "{ev:?}");
    }

    #[test]
    fn newton_potential_only_for_zero_source() {
        let m = square(0.5, 0.25, [Tag::Interface; 4]);
        let (t, _) = full(&m, 2);
        assert!(newton_rhs(&t, None).unwrap().iter().all(|&v| v == 0.0));
        let one = |_: Point2| 1.0;
        assert!(matches!(newton_rhs(&t, Some(&one)), Err(Error::Unsupported(_))));
    }
}
