//! Interface terms of the Nitsche coupling on the overlay of the two trace
//! meshes: the flux consistency block `𝔅`, the penalty block `ℭ`, the local
//! stabilization `η = η₀ κ 𝒢` and the lifting operator.
//!
//! Global vectors are the FE coefficients followed by the BE trace
//! coefficients, so indices run `U¹_O, U¹_I, U²_I, U²_O`. The jump is
//! `[v] = v¹ - v²` and `n¹` points out of the FE subdomain.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{consistency, param};
use crate::fem::Coefficient;
use crate::geometry::{
    BoundaryMesh, ElementGeometry, ElementKind, InterfaceOverlay, Mesh2D, OverlaySegment, Point2,
    Tag,
};
use crate::linalg::{Cholesky, CsrMatrix, DenseMatrix};
use crate::quadrature::gauss;
use crate::space::{element_rule, BeTraceSpace, DegreeVector, FeSpace, LocalBasis};
use crate::{Error, Result};

/// Default `η₀`.
pub const DEFAULT_ETA0: f64 = 2.0;

/// Sharp constant of `‖ψ‖²_{L²(J)} ≤ 𝒢 ‖ψ‖²_{L²(K)}` for polynomials of
/// degree `p` on `K`, where `J` has length `edge_length`.
pub fn trace_constant_raw(kind: ElementKind, p: u32, edge_length: f64, area: f64) -> f64 {
    let p = p as f64;
    let c = match kind {
        ElementKind::Triangle => 0.5 * (p + 1.0) * (p + 2.0),
        ElementKind::Parallelogram => (p + 1.0) * (p + 1.0),
    };
    c * edge_length / area
}

/// `𝒢_K` for local edge `edge` of an element.
pub fn trace_constant(geo: &ElementGeometry, p: u32, edge: usize) -> Result<f64> {
    if edge >= geo.kind.n_vertices() {
        return Err(param("trace edge is not an edge of the element"));
    }
    Ok(trace_constant_raw(geo.kind, p, geo.edge_length(edge), geo.area))
}

/// The stabilization `η = η₀ κ_K 𝒢_K`, constant on each FE trace cell.
///
/// `𝒢_K` is taken with `|J| = |K ∩ Γ_I|`, which for an element touching
/// the interface along two edges is their total length.
#[derive(Debug, Clone, PartialEq)]
pub struct Stabilization {
    pub eta0: f64,
    /// `κ_K 𝒢_K` per FE element; zero away from the interface.
    pub kappa_g: Vec<f64>,
}

impl Stabilization {
    /// The theory needs `η₀ > δ > 1`.
    pub fn below_theory(&self) -> bool {
        self.eta0 <= 1.0
    }

    pub fn eta(&self, element: usize) -> f64 {
        self.eta0 * self.kappa_g[element]
    }
}

/// Computes `η` and writes it into the overlay segments.
pub fn stabilize(
    mesh: &Mesh2D,
    space: &FeSpace,
    kappa: &Coefficient,
    overlay: &mut InterfaceOverlay,
    eta0: f64,
) -> Result<Stabilization> {
    if !(eta0 > 0.0 && eta0.is_finite()) {
        return Err(param("eta0 must be positive"));
    }
    let mut kappa_g = vec![0.0; mesh.n_elements()];
    for k in 0..mesh.n_elements() {
        let geo = mesh.geometry(k);
        let mut len = 0.0;
        for e in 0..geo.kind.n_vertices() {
            if mesh.edge_tag(k, e) == Some(Tag::Interface) {
                len += geo.edge_length(e);
            }
        }
        if len > 0.0 {
            let g = trace_constant_raw(geo.kind, space.degrees.get(k), len, geo.area);
            kappa_g[k] = kappa.values[k] * g;
        }
    }
    let s = Stabilization { eta0, kappa_g };
    for seg in overlay.segments.iter_mut() {
        seg.eta = s.eta(seg.element);
    }
    Ok(s)
}

/// Everything the interface terms need.
#[derive(Clone, Copy)]
pub struct InterfaceContext<'a> {
    pub fe_mesh: &'a Mesh2D,
    pub fe: &'a FeSpace,
    pub be_mesh: &'a BoundaryMesh,
    pub be: &'a BeTraceSpace,
    pub overlay: &'a InterfaceOverlay,
    pub kappa: &'a Coefficient,
}

/// Basis values on both sides at the quadrature points of one segment.
pub struct SegmentPoint {
    pub x: Point2,
    /// Quadrature weight times segment length.
    pub w: f64,
    /// Local FE values and `κ ∇φ · n¹`.
    pub fe_vals: Vec<f64>,
    pub fe_flux: Vec<f64>,
    pub be_vals: Vec<f64>,
}

impl InterfaceContext<'_> {
    pub fn n_total(&self) -> usize {
        self.fe.n_dofs + self.be.n_dofs
    }

    /// Gauss points `p_K + p_J + 2` per segment.
    pub fn segment_points(&self, seg: &OverlaySegment) -> Vec<SegmentPoint> {
        let ed = &self.fe.elements[seg.element];
        let pd = &self.be.panels[seg.panel];
        let geo = self.fe_mesh.geometry(seg.element);
        let inv = geo.map.inverse_jac();
        let normal = geo.edge_normal(seg.local_edge);
        let kappa = self.kappa.values[seg.element];
        let panel = &self.be_mesh.panels[seg.panel];
        let dp = panel.b - panel.a;
        let len = seg.length();
        let rule = gauss((ed.basis.degree + pd.degree + 2) as usize);
        let (mut vals, mut grads) = (Vec::new(), Vec::new());
        let mut ders = Vec::new();
        rule.iter()
            .map(|(tau, w)| {
                let x = seg.a.lerp(seg.b, tau);
                ed.basis.eval(geo.map.to_reference(x), &mut vals, &mut grads);
                let fe_flux = grads
                    .iter()
                    .map(|g| {
                        let g = geo.map.push_gradient(&inv, *g);
                        kappa * (g[0] * normal.x + g[1] * normal.y)
                    })
                    .collect();
                let t = ((x - panel.a).dot(dp) / dp.dot(dp)).clamp(0.0, 1.0);
                let mut be_vals = Vec::new();
                crate::space::trace_shape(pd.degree, t, &mut be_vals, &mut ders);
                SegmentPoint {
                    x,
                    w: w * len,
                    fe_vals: vals.clone(),
                    fe_flux,
                    be_vals,
                }
            })
            .collect()
    }

    /// Global indices of the local jump vector `[φ¹; -φ²]`.
    fn jump_dofs(&self, seg: &OverlaySegment) -> Vec<Option<usize>> {
        let nf = self.fe.n_dofs;
        let mut d: Vec<Option<usize>> = self.fe.elements[seg.element].dofs.clone();
        d.extend(self.be.panels[seg.panel].dofs.iter().map(|x| x.map(|i| nf + i)));
        d
    }

    /// `[v]` and `κ∇v¹·n¹` at the quadrature points of `seg`.
    pub fn jump_and_flux(&self, seg: &OverlaySegment, u_fe: &[f64], u_be: &[f64]) -> Vec<(f64, f64, f64)> {
        let lf = self.fe.local_coefficients(seg.element, u_fe);
        let lb = self.be.local_coefficients(seg.panel, u_be);
        self.segment_points(seg)
            .into_iter()
            .map(|sp| {
                let v1: f64 = sp.fe_vals.iter().zip(&lf).map(|(a, b)| a * b).sum();
                let q: f64 = sp.fe_flux.iter().zip(&lf).map(|(a, b)| a * b).sum();
                let v2: f64 = sp.be_vals.iter().zip(&lb).map(|(a, b)| a * b).sum();
                (v1 - v2, q, sp.w)
            })
            .collect()
    }
}

fn scatter_local(
    t: &mut Vec<(usize, usize, f64)>,
    dofs: &[Option<usize>],
    local: &DenseMatrix,
) {
    for (i, di) in dofs.iter().enumerate() {
        let Some(gi) = di else { continue };
        for (j, dj) in dofs.iter().enumerate() {
            let Some(gj) = dj else { continue };
            let v = local[(i, j)];
            if v != 0.0 {
                t.push((*gi, *gj, v));
            }
        }
    }
}

/// Local matrices `(−q jᵀ − j qᵀ, η j jᵀ)` of one overlay segment, indexed
/// like `jump_dofs`.
pub fn segment_matrices(ctx: &InterfaceContext<'_>, seg: &OverlaySegment) -> (DenseMatrix, DenseMatrix) {
    let nfl = ctx.fe.elements[seg.element].dofs.len();
    let nbl = ctx.be.panels[seg.panel].dofs.len();
    let n = nfl + nbl;
    let mut b = DenseMatrix::zeros(n, n);
    let mut c = DenseMatrix::zeros(n, n);
    let mut jv = vec![0.0; n];
    let mut qv = vec![0.0; n];
    for sp in ctx.segment_points(seg) {
        jv[..nfl].copy_from_slice(&sp.fe_vals);
        qv[..nfl].copy_from_slice(&sp.fe_flux);
        for (i, v) in sp.be_vals.iter().enumerate() {
            jv[nfl + i] = -v;
            qv[nfl + i] = 0.0;
        }
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] -= sp.w * (qv[i] * jv[j] + jv[i] * qv[j]);
                c[(i, j)] += sp.w * seg.eta * jv[i] * jv[j];
            }
        }
    }
    (b, c)
}

/// `ℭ`: `⟨η[U], [Φ]⟩_{Γ_I}`.
pub fn assemble_penalty(ctx: &InterfaceContext<'_>) -> Result<CsrMatrix> {
    if ctx.overlay.segments.is_empty() {
        return Err(consistency("interface overlay is empty"));
    }
    let mut t = Vec::new();
    for seg in &ctx.overlay.segments {
        let (_, c) = segment_matrices(ctx, seg);
        scatter_local(&mut t, &ctx.jump_dofs(seg), &c);
    }
    let n = ctx.n_total();
    Ok(CsrMatrix::from_triplets(n, n, t))
}

/// `𝔅`: `−⟨q_κ(U), [Φ]⟩ − ⟨[U], q_κ(Φ)⟩` with the one-sided FE flux.
pub fn assemble_flux_coupling(ctx: &InterfaceContext<'_>) -> CsrMatrix {
    let mut t = Vec::new();
    for seg in &ctx.overlay.segments {
        let (b, _) = segment_matrices(ctx, seg);
        scatter_local(&mut t, &ctx.jump_dofs(seg), &b);
    }
    let n = ctx.n_total();
    CsrMatrix::from_triplets(n, n, t)
}

/// Both interface blocks in one pass over the overlay.
pub fn assemble_interface(ctx: &InterfaceContext<'_>) -> Result<(CsrMatrix, CsrMatrix)> {
    if ctx.overlay.segments.is_empty() {
        return Err(consistency("interface overlay is empty"));
    }
    let (mut tb, mut tc) = (Vec::new(), Vec::new());
    for seg in &ctx.overlay.segments {
        let (b, c) = segment_matrices(ctx, seg);
        let dofs = ctx.jump_dofs(seg);
        scatter_local(&mut tb, &dofs, &b);
        scatter_local(&mut tc, &dofs, &c);
    }
    let n = ctx.n_total();
    Ok((CsrMatrix::from_triplets(n, n, tb), CsrMatrix::from_triplets(n, n, tc)))
}

/// `𝐋(v)` restricted to one element: two component coefficient vectors in
/// the uniform basis of the lifting degree.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLifting {
    pub basis: LocalBasis,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Elementwise lifting; `None` on elements away from the interface.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    pub elements: Vec<Option<LocalLifting>>,
}

impl Lifting {
    /// Value of `𝐋(v)` at reference point `xi` of element `k`.
    pub fn eval(&self, k: usize, xi: [f64; 2]) -> [f64; 2] {
        let Some(l) = &self.elements[k] else {
            return [0.0; 2];
        };
        let (mut vals, mut grads) = (Vec::new(), Vec::new());
        l.basis.eval(xi, &mut vals, &mut grads);
        let x = vals.iter().zip(&l.x).map(|(a, b)| a * b).sum();
        let y = vals.iter().zip(&l.y).map(|(a, b)| a * b).sum();
        [x, y]
    }
}

/// Solves `(𝐋(v), Ψ)_K = ⟨[v], Ψ·n¹⟩_{K∩Γ_I}` for all `Ψ` in the vector
/// polynomials of degree `degrees[K]` (the element degrees if `None`).
pub fn lifting_apply(
    ctx: &InterfaceContext<'_>,
    u_fe: &[f64],
    u_be: &[f64],
    degrees: Option<&DegreeVector>,
) -> Result<Lifting> {
    let ne = ctx.fe_mesh.n_elements();
    let degrees = degrees.unwrap_or(&ctx.fe.degrees);
    if degrees.len() != ne {
        return Err(Error::Dimension {
            expected: ne,
            found: degrees.len(),
        });
    }
    let mut rhs: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; ne];
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    for seg in &ctx.overlay.segments {
        let k = seg.element;
        let geo = ctx.fe_mesh.geometry(k);
        let normal = geo.edge_normal(seg.local_edge);
        let basis = LocalBasis::uniform(geo.kind, degrees.get(k));
        let n = basis.len();
        let entry = rhs[k].get_or_insert_with(|| (vec![0.0; n], vec![0.0; n]));
        let pts = ctx.segment_points(seg);
        let jumps = ctx.jump_and_flux(seg, u_fe, u_be);
        for (sp, (jump, _, w)) in pts.iter().zip(jumps) {
            basis.eval(geo.map.to_reference(sp.x), &mut vals, &mut grads);
            for i in 0..n {
                entry.0[i] += w * jump * vals[i] * normal.x;
                entry.1[i] += w * jump * vals[i] * normal.y;
            }
        }
    }
    let mut elements = vec![None; ne];
    for (k, r) in rhs.into_iter().enumerate() {
        let Some((bx, by)) = r else { continue };
        let geo = ctx.fe_mesh.geometry(k);
        let basis = LocalBasis::uniform(geo.kind, degrees.get(k));
        let chol = Cholesky::new(&local_mass(&geo, &basis))
            .map_err(|_| consistency("element mass matrix is singular"))?;
        elements[k] = Some(LocalLifting {
            basis,
            x: chol.solve(&bx),
            y: chol.solve(&by),
        });
    }
    Ok(Lifting { elements })
}

/// `(φ_i, φ_j)_K` of the given basis.
pub fn local_mass(geo: &ElementGeometry, basis: &LocalBasis) -> DenseMatrix {
    let n = basis.len();
    let det = geo.map.det().abs();
    let mut m = DenseMatrix::zeros(n, n);
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    for (xi, w) in element_rule(basis.kind, basis.degree as usize + 2).iter() {
        basis.eval(xi, &mut vals, &mut grads);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * det * vals[i] * vals[j];
            }
        }
    }
    m
}

/// `(κ∇u¹, 𝐋)_{Ω¹}` over the elements where `𝐋` is nonzero.
pub fn gradient_lifting_pairing(ctx: &InterfaceContext<'_>, u_fe: &[f64], lifting: &Lifting) -> f64 {
    let mut s = 0.0;
    for (k, l) in lifting.elements.iter().enumerate() {
        let Some(l) = l else { continue };
        let geo = ctx.fe_mesh.geometry(k);
        let det = geo.map.det().abs();
        let p = ctx.fe.degrees.get(k).max(l.basis.degree);
        for (xi, w) in element_rule(geo.kind, p as usize + 2).iter() {
            let (_, g) = ctx.fe.eval(ctx.fe_mesh, u_fe, k, xi);
            let lv = lifting.eval(k, xi);
            s += w * det * ctx.kappa.values[k] * (g[0] * lv[0] + g[1] * lv[1]);
        }
    }
    s
}

/// `‖κ^{1/2} 𝐋‖²_{L²(Ω¹)}`.
pub fn lifting_norm2(ctx: &InterfaceContext<'_>, lifting: &Lifting) -> f64 {
    let mut s = 0.0;
    for (k, l) in lifting.elements.iter().enumerate() {
        let Some(l) = l else { continue };
        let geo = ctx.fe_mesh.geometry(k);
        let m = local_mass(&geo, &l.basis);
        s += ctx.kappa.values[k] * (m.bilinear(&l.x, &l.x) + m.bilinear(&l.y, &l.y));
    }
    s
}

/// `|a_hp(U, Φ) − ã_hp(U, Φ)|`. The volume and Steklov terms are shared
/// by both forms, so only the consistency terms are compared: the
/// assembled `𝔅` against the lifted pairings.
pub fn formulation_gap(
    ctx: &InterfaceContext<'_>,
    b: &CsrMatrix,
    u: (&[f64], &[f64]),
    phi: (&[f64], &[f64]),
    lifting_degrees: Option<&DegreeVector>,
) -> Result<f64> {
    let concat = |a: &[f64], c: &[f64]| {
        let mut v = a.to_vec();
        v.extend_from_slice(c);
        v
    };
    let uu = concat(u.0, u.1);
    let pp = concat(phi.0, phi.1);
    let by = b.mul_vec(&pp);
    let assembled: f64 = uu.iter().zip(&by).map(|(a, c)| a * c).sum();
    let lu = lifting_apply(ctx, u.0, u.1, lifting_degrees)?;
    let lp = lifting_apply(ctx, phi.0, phi.1, lifting_degrees)?;
    let lifted = -gradient_lifting_pairing(ctx, u.0, &lp) - gradient_lifting_pairing(ctx, phi.0, &lu);
    Ok((assembled - lifted).abs())
}
