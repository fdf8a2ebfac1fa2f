//! Hierarchic shape functions, degree vectors and global DOF maps.
//!
//! Reference elements: `[0,1]` for panels, the unit right triangle and the
//! unit square. Local edge `e` runs from local vertex `e` to `e + 1`.
//! Edge modes are integrated Legendre bubbles in the edge parameter,
//! oriented from the lower to the higher global vertex index so that the
//! two elements sharing an edge agree on them.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{consistency, param};
use crate::geometry::{BoundaryMesh, ElementKind, Mesh2D, Point2, Tag};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::poly::{bubble, edge_kernel, LegendreTable, MAX_DEGREE};
use crate::quadrature::{gauss, square_rule, triangle_rule, QuadRule2d};
use crate::{Error, Result};

/// Per-element (or per-panel) polynomial degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<u32>);

impl DegreeVector {
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if degrees.iter().any(|&p| p == 0 || p > MAX_DEGREE) {
            return Err(param("element degrees must lie in 1..=30"));
        }
        Ok(DegreeVector(degrees))
    }

    pub fn uniform(n: usize, p: u32) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }
}

/// Which layer rule a linear degree vector follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerRule {
    /// Panels: layers `j = 1, 2, ...` from the graded vertex,
    /// `p_1 = 1`, `p_j = max(2, ⌊μj⌋)`. Untagged panels count as `j = n + 1`.
    Boundary,
    /// Elements: layers `j = 0, 1, ...` from the corner,
    /// `p_j = max(j + 1, ⌊μ(j + 1)⌋)`. Regular elements count as `j = n`.
    Domain,
}

fn floor_mu(mu: f64, j: u32) -> u32 {
    let x = mu * j as f64;
    (x + 1e-9 * x.max(1.0)).floor() as u32
}

/// Linear degree vector with slope `mu` for layer tags from a geometric
/// mesh with `n` layers.
pub fn assign_linear_degrees(
    layers: &[Option<u32>],
    n: u32,
    mu: f64,
    rule: LayerRule,
) -> Result<DegreeVector> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(param("degree slope mu must be positive"));
    }
    let degrees = layers
        .iter()
        .map(|l| match rule {
            LayerRule::Boundary => {
                let j = l.unwrap_or(n + 1);
                if j <= 1 {
                    1
                } else {
                    floor_mu(mu, j).max(2)
                }
            }
            LayerRule::Domain => {
                let j = l.unwrap_or(n);
                floor_mu(mu, j + 1).max(j + 1)
            }
        })
        .collect();
    DegreeVector::new(degrees)
}

/// Shape functions on one reference element. Edge degrees may be lower
/// than the element degree (minimum rule); `flip[e]` reverses the
/// orientation of the modes on edge `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalBasis {
    pub kind: ElementKind,
    pub degree: u32,
    pub edge_degree: [u32; 4],
    pub flip: [bool; 4],
}

/// Modes grouped as vertex, edge and interior functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeGroups {
    pub vertex: Range<usize>,
    pub edges: [Range<usize>; 4],
    pub interior: Range<usize>,
}

impl LocalBasis {
    pub fn uniform(kind: ElementKind, degree: u32) -> Self {
        LocalBasis {
            kind,
            degree,
            edge_degree: [degree; 4],
            flip: [false; 4],
        }
    }

    fn n_interior(&self) -> usize {
        let p = self.degree as usize;
        match self.kind {
            ElementKind::Parallelogram => (p - 1) * (p - 1),
            ElementKind::Triangle => (p.saturating_sub(1)) * (p.saturating_sub(2)) / 2,
        }
    }

    pub fn groups(&self) -> ModeGroups {
        let nv = self.kind.n_vertices();
        let mut edges: [Range<usize>; 4] = Default::default();
        let mut at = nv;
        for e in 0..nv {
            let n = self.edge_degree[e] as usize - 1;
            edges[e] = at..at + n;
            at += n;
        }
        for e in nv..4 {
            edges[e] = at..at;
        }
        ModeGroups {
            vertex: 0..nv,
            edges,
            interior: at..at + self.n_interior(),
        }
    }

    pub fn len(&self) -> usize {
        self.groups().interior.end
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values and reference gradients of all modes at `xi`.
    pub fn eval(&self, xi: [f64; 2], vals: &mut Vec<f64>, grads: &mut Vec<[f64; 2]>) {
        vals.clear();
        grads.clear();
        match self.kind {
            ElementKind::Parallelogram => self.eval_square(xi, vals, grads),
            ElementKind::Triangle => self.eval_triangle(xi, vals, grads),
        }
    }

    fn eval_square(&self, [x, y]: [f64; 2], vals: &mut Vec<f64>, grads: &mut Vec<[f64; 2]>) {
        let p = self.degree as usize;
        let tx = LegendreTable::new(p, 2.0 * x - 1.0);
        let ty = LegendreTable::new(p, 2.0 * y - 1.0);
        vals.extend_from_slice(&[(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y]);
        grads.extend_from_slice(&[
            [-(1.0 - y), -(1.0 - x)],
            [1.0 - y, -x],
            [y, x],
            [-y, 1.0 - x],
        ]);
        for e in 0..4 {
            for k in 2..=self.edge_degree[e] as usize {
                let parity = if k % 2 == 1 { -1.0 } else { 1.0 };
                let mut s = if self.flip[e] { parity } else { 1.0 };
                // Edges 2 and 3 run against the reference axes.
                if e >= 2 {
                    s *= parity;
                }
                let (v, g) = match e {
                    0 => {
                        let (b, db) = bubble(&tx, k);
                        (b * (1.0 - y), [2.0 * db * (1.0 - y), -b])
                    }
                    1 => {
                        let (b, db) = bubble(&ty, k);
                        (b * x, [b, 2.0 * db * x])
                    }
                    2 => {
                        let (b, db) = bubble(&tx, k);
                        (b * y, [2.0 * db * y, b])
                    }
                    _ => {
                        let (b, db) = bubble(&ty, k);
                        (b * (1.0 - x), [-b, 2.0 * db * (1.0 - x)])
                    }
                };
                vals.push(s * v);
                grads.push([s * g[0], s * g[1]]);
            }
        }
        for i in 2..=p {
            let (bi, dbi) = bubble(&tx, i);
            for j in 2..=p {
                let (bj, dbj) = bubble(&ty, j);
                vals.push(bi * bj);
                grads.push([2.0 * dbi * bj, 2.0 * bi * dbj]);
            }
        }
    }

    fn eval_triangle(&self, [x, y]: [f64; 2], vals: &mut Vec<f64>, grads: &mut Vec<[f64; 2]>) {
        let l = [1.0 - x - y, x, y];
        let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 0..3 {
            vals.push(l[i]);
            grads.push(dl[i]);
        }
        for e in 0..3 {
            let (a, b) = (e, (e + 1) % 3);
            let pe = self.edge_degree[e] as usize;
            if pe < 2 {
                continue;
            }
            let t = LegendreTable::new(pe, l[b] - l[a]);
            let prod = l[a] * l[b];
            let dprod = [
                l[b] * dl[a][0] + l[a] * dl[b][0],
                l[b] * dl[a][1] + l[a] * dl[b][1],
            ];
            let darg = [dl[b][0] - dl[a][0], dl[b][1] - dl[a][1]];
            for k in 2..=pe {
                let s = if self.flip[e] && k % 2 == 1 { -1.0 } else { 1.0 };
                let (q, dq) = edge_kernel(&t, k);
                vals.push(s * prod * q);
                grads.push([
                    s * (dprod[0] * q + prod * dq * darg[0]),
                    s * (dprod[1] * q + prod * dq * darg[1]),
                ]);
            }
        }
        let p = self.degree as usize;
        if p >= 3 {
            let u = l[1] - l[0];
            let v = 2.0 * l[2] - 1.0;
            let du = [dl[1][0] - dl[0][0], dl[1][1] - dl[0][1]];
            let dv = [2.0 * dl[2][0], 2.0 * dl[2][1]];
            let tu = LegendreTable::new(p - 3, u);
            let tv = LegendreTable::new(p - 3, v);
            let bub = l[0] * l[1] * l[2];
            let dbub = [
                dl[0][0] * l[1] * l[2] + l[0] * dl[1][0] * l[2] + l[0] * l[1] * dl[2][0],
                dl[0][1] * l[1] * l[2] + l[0] * dl[1][1] * l[2] + l[0] * l[1] * dl[2][1],
            ];
            for total in 0..=p - 3 {
                for a in (0..=total).rev() {
                    let b = total - a;
                    let (la, dla) = (tu.value[a], tu.d1[a]);
                    let (lb, dlb) = (tv.value[b], tv.d1[b]);
                    let w = la * lb;
                    vals.push(bub * w);
                    grads.push([
                        dbub[0] * w + bub * (dla * du[0] * lb + la * dlb * dv[0]),
                        dbub[1] * w + bub * (dla * du[1] * lb + la * dlb * dv[1]),
                    ]);
                }
            }
        }
    }
}

/// Reference element of [`shape_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefElement {
    Interval,
    Triangle,
    Square,
}

/// Values, and first derivatives if asked, of the uniform-degree
/// hierarchic basis. Interval derivatives are stored in `grads[i][0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

pub fn shape_eval(kind: RefElement, degree: u32, point: [f64; 2], derivatives: bool) -> Result<ShapeValues> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(param("degree must lie in 1..=30"));
    }
    let [x, y] = point;
    let tol = 1e-12;
    let inside = match kind {
        RefElement::Interval => (-tol..=1.0 + tol).contains(&x),
        RefElement::Square => (-tol..=1.0 + tol).contains(&x) && (-tol..=1.0 + tol).contains(&y),
        RefElement::Triangle => x >= -tol && y >= -tol && x + y <= 1.0 + tol,
    };
    if !inside || !x.is_finite() || !y.is_finite() {
        return Err(Error::OutsideReference { x, y });
    }
    let mut values = Vec::new();
    let mut grads = Vec::new();
    match kind {
        RefElement::Interval => {
            let mut d = Vec::new();
            trace_shape(degree, x, &mut values, &mut d);
            grads = d.into_iter().map(|g| [g, 0.0]).collect();
        }
        RefElement::Triangle => {
            LocalBasis::uniform(ElementKind::Triangle, degree).eval(point, &mut values, &mut grads)
        }
        RefElement::Square => LocalBasis::uniform(ElementKind::Parallelogram, degree)
            .eval(point, &mut values, &mut grads),
    }
    if !derivatives {
        grads.clear();
    }
    Ok(ShapeValues { values, grads })
}

/// Continuous panel basis `1 - t, t, b_k(2t - 1)` and its `t`-derivative.
pub fn trace_shape(degree: u32, t: f64, vals: &mut Vec<f64>, ders: &mut Vec<f64>) {
    vals.clear();
    ders.clear();
    vals.extend_from_slice(&[1.0 - t, t]);
    ders.extend_from_slice(&[-1.0, 1.0]);
    let tab = LegendreTable::new(degree as usize, 2.0 * t - 1.0);
    for k in 2..=degree as usize {
        let (b, db) = bubble(&tab, k);
        vals.push(b);
        ders.push(2.0 * db);
    }
}

/// Discontinuous panel basis `L_k(2t - 1)`, `k = 0..=degree`.
pub fn flux_shape(degree: u32, t: f64, vals: &mut Vec<f64>) {
    let tab = LegendreTable::new(degree as usize, 2.0 * t - 1.0);
    vals.clear();
    vals.extend_from_slice(&tab.value[..=degree as usize]);
}

/// Local basis and global DOF indices of one element; `None` marks modes
/// removed by the Dirichlet condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementDofs {
    pub basis: LocalBasis,
    pub dofs: Vec<Option<usize>>,
}

/// Conforming space `V_hp(Ω¹)` with homogeneous Dirichlet conditions.
///
/// DOFs are numbered outer first, then interface DOFs (those whose trace
/// on `Γ_I` does not vanish): `0..n_outer` is `U¹_O`, `n_outer..n_dofs` is
/// `U¹_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    pub degrees: DegreeVector,
    pub elements: Vec<ElementDofs>,
    pub n_dofs: usize,
    pub n_outer: usize,
    /// Modes removed by the Dirichlet condition, counted once globally.
    pub n_constrained: usize,
    /// DOFs on `Γ_D`; empty unless built by [`FeSpace::unconstrained`].
    pub dirichlet: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Outer,
    Interface,
    Dirichlet,
}

impl FeSpace {
    pub fn new(mesh: &Mesh2D, degrees: DegreeVector) -> Result<Self> {
        Self::build(mesh, degrees, true)
    }

    /// The space without the Dirichlet condition. Modes on `Γ_D` are
    /// numbered with the outer ones (or the interface ones where they touch
    /// `Γ_I`) and listed in `dirichlet`.
    pub fn unconstrained(mesh: &Mesh2D, degrees: DegreeVector) -> Result<Self> {
        Self::build(mesh, degrees, false)
    }

    fn build(mesh: &Mesh2D, degrees: DegreeVector, constrain: bool) -> Result<Self> {
        if degrees.len() != mesh.n_elements() {
            return Err(Error::Dimension {
                expected: mesh.n_elements(),
                found: degrees.len(),
            });
        }
        let class_of = |t: Option<Tag>| match t {
            Some(Tag::Interface) => Class::Interface,
            Some(Tag::Dirichlet) if constrain => Class::Dirichlet,
            _ => Class::Outer,
        };
        let nv = mesh.vertices.len();
        let mut vclass = vec![Class::Outer; nv];
        for e in mesh.edges() {
            let c = class_of(e.tag);
            for v in [e.a, e.b] {
                vclass[v] = vclass[v].max(c);
            }
        }
        let edges = mesh.edges();
        let mut edeg = vec![u32::MAX; edges.len()];
        let mut eclass = vec![Class::Outer; edges.len()];
        for (g, e) in edges.iter().enumerate() {
            for &(k, _) in &e.elements[..e.n_elements] {
                edeg[g] = edeg[g].min(degrees.get(k));
            }
            eclass[g] = class_of(e.tag);
        }

        // Vertices, edges and interiors of the outer group first, then the
        // interface group.
        let mut vdof = vec![None; nv];
        let mut edof: Vec<Option<usize>> = vec![None; edges.len()];
        let mut idof = vec![0usize; mesh.n_elements()];
        let mut next = 0;
        let mut n_constrained = 0;
        let mut n_outer = 0;
        for pass in [Class::Outer, Class::Interface] {
            for v in 0..nv {
                if vclass[v] == pass {
                    vdof[v] = Some(next);
                    next += 1;
                }
            }
            for g in 0..edges.len() {
                if eclass[g] == pass {
                    edof[g] = Some(next);
                    next += edeg[g] as usize - 1;
                }
            }
            if pass == Class::Outer {
                for k in 0..mesh.n_elements() {
                    idof[k] = next;
                    let b = LocalBasis::uniform(mesh.elements[k].kind, degrees.get(k));
                    next += b.n_interior();
                }
                n_outer = next;
            }
        }
        let mut on_d = vec![false; nv];
        let mut dirichlet = Vec::new();
        for (g, e) in edges.iter().enumerate() {
            if e.tag == Some(Tag::Dirichlet) {
                on_d[e.a] = true;
                on_d[e.b] = true;
                n_constrained += edeg[g] as usize - 1;
                if let Some(s) = edof[g] {
                    dirichlet.extend(s..s + edeg[g] as usize - 1);
                }
            }
        }
        for v in 0..nv {
            if on_d[v] {
                n_constrained += 1;
                dirichlet.extend(vdof[v]);
            }
        }
        dirichlet.sort_unstable();

        let mut elements = Vec::with_capacity(mesh.n_elements());
        for (k, el) in mesh.elements.iter().enumerate() {
            let n = el.kind.n_vertices();
            let mut basis = LocalBasis::uniform(el.kind, degrees.get(k));
            let ids = mesh.element_edges(k);
            for e in 0..n {
                let (a, b) = el.edge(e);
                basis.edge_degree[e] = edeg[ids[e]];
                basis.flip[e] = a > b;
            }
            let groups = basis.groups();
            let mut dofs = vec![None; basis.len()];
            for (i, &v) in el.vertices().iter().enumerate() {
                dofs[i] = vdof[v];
            }
            for e in 0..n {
                if let Some(start) = edof[ids[e]] {
                    for (j, slot) in groups.edges[e].clone().enumerate() {
                        dofs[slot] = Some(start + j);
                    }
                }
            }
            for (j, slot) in groups.interior.clone().enumerate() {
                dofs[slot] = Some(idof[k] + j);
            }
            elements.push(ElementDofs { basis, dofs });
        }
        Ok(FeSpace {
            degrees,
            elements,
            n_dofs: next,
            n_outer,
            n_constrained,
            dirichlet,
        })
    }

    pub fn n_interface(&self) -> usize {
        self.n_dofs - self.n_outer
    }

    /// Coefficients of the local modes of element `k`.
    pub fn local_coefficients(&self, k: usize, coeffs: &[f64]) -> Vec<f64> {
        self.elements[k]
            .dofs
            .iter()
            .map(|d| d.map_or(0.0, |i| coeffs[i]))
            .collect()
    }

    /// Value and physical gradient of the discrete function at reference
    /// point `xi` of element `k`.
    pub fn eval(&self, mesh: &Mesh2D, coeffs: &[f64], k: usize, xi: [f64; 2]) -> (f64, [f64; 2]) {
        let map = mesh.geometry(k).map;
        let inv = map.inverse_jac();
        let local = self.local_coefficients(k, coeffs);
        let (mut vals, mut grads) = (Vec::new(), Vec::new());
        self.elements[k].basis.eval(xi, &mut vals, &mut grads);
        let mut u = 0.0;
        let mut g = [0.0; 2];
        for i in 0..vals.len() {
            u += local[i] * vals[i];
            g[0] += local[i] * grads[i][0];
            g[1] += local[i] * grads[i][1];
        }
        (u, map.push_gradient(&inv, g))
    }

    /// Projection-based interpolant: exact at vertices, edge modes by
    /// `L²(e)` projection of the remainder, interior modes by `L²(K)`
    /// projection. Constrained modes stay zero.
    pub fn interpolate(&self, mesh: &Mesh2D, f: impl Fn(Point2) -> f64) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.n_dofs];
        let mut done = vec![false; self.n_dofs];
        for (k, el) in mesh.elements.iter().enumerate() {
            for (i, &v) in el.vertices().iter().enumerate() {
                if let Some(d) = self.elements[k].dofs[i] {
                    c[d] = f(mesh.vertices[v]);
                    done[d] = true;
                }
            }
        }
        for g in 0..mesh.edges().len() {
            let e = mesh.edges()[g];
            let (k, le) = e.elements[0];
            let ed = &self.elements[k];
            let range = ed.basis.groups().edges[le].clone();
            let Some(first) = range.clone().next().and_then(|s| ed.dofs[s]) else {
                continue;
            };
            let pe = ed.basis.edge_degree[le];
            let (pa, pb) = (mesh.vertices[e.a], mesh.vertices[e.b]);
            let va = vertex_value(self, mesh, e.a, &c);
            let vb = vertex_value(self, mesh, e.b, &c);
            // Modes in global orientation a -> b are b_k(2t - 1).
            let coef = project_1d(pe, |t| f(pa.lerp(pb, t)) - va * (1.0 - t) - vb * t)?;
            for (j, v) in coef.into_iter().enumerate() {
                c[first + j] = v;
                done[first + j] = true;
            }
        }
        for k in 0..mesh.n_elements() {
            let ed = &self.elements[k];
            let interior = ed.basis.groups().interior;
            if interior.is_empty() {
                continue;
            }
            let map = mesh.geometry(k).map;
            let local = self.local_coefficients(k, &c);
            let rule = element_rule(ed.basis.kind, ed.basis.degree as usize + 3);
            let m = interior.len();
            let mut mass = DenseMatrix::zeros(m, m);
            let mut rhs = vec![0.0; m];
            let (mut vals, mut grads) = (Vec::new(), Vec::new());
            for (xi, w) in rule.iter() {
                ed.basis.eval(xi, &mut vals, &mut grads);
                let mut r = f(map.apply(xi));
                for i in 0..interior.start {
                    r -= local[i] * vals[i];
                }
                for a in 0..m {
                    let va = vals[interior.start + a];
                    rhs[a] += w * va * r;
                    for b in 0..=a {
                        mass[(a, b)] += w * va * vals[interior.start + b];
                    }
                }
            }
            let sol = Cholesky::new(&mass)
                .map_err(|_| consistency("interior mass matrix is singular"))?
                .solve(&rhs);
            for (j, slot) in interior.enumerate() {
                let d = ed.dofs[slot].expect("interior modes are free");
                c[d] = sol[j];
                done[d] = true;
            }
        }
        debug_assert!(done.iter().all(|&d| d));
        Ok(c)
    }
}

fn vertex_value(space: &FeSpace, mesh: &Mesh2D, v: usize, c: &[f64]) -> f64 {
    for (k, el) in mesh.elements.iter().enumerate() {
        if let Some(i) = el.vertices().iter().position(|&x| x == v) {
            return space.elements[k].dofs[i].map_or(0.0, |d| c[d]);
        }
    }
    0.0
}

/// Quadrature rule on the reference element of `kind` with `n` points per
/// direction.
pub fn element_rule(kind: ElementKind, n: usize) -> QuadRule2d {
    match kind {
        ElementKind::Parallelogram => square_rule(n),
        ElementKind::Triangle => triangle_rule(n),
    }
}

/// `L²(0,1)` projection of `g` onto the bubbles `b_2, ..., b_p`.
fn project_1d(p: u32, g: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let m = p as usize - 1;
    let rule = gauss(p as usize + 3);
    let mut mass = DenseMatrix::zeros(m, m);
    let mut rhs = vec![0.0; m];
    let (mut vals, mut ders) = (Vec::new(), Vec::new());
    for (t, w) in rule.iter() {
        trace_shape(p, t, &mut vals, &mut ders);
        let r = g(t);
        for a in 0..m {
            rhs[a] += w * vals[a + 2] * r;
            for b in 0..=a {
                mass[(a, b)] += w * vals[a + 2] * vals[b + 2];
            }
        }
    }
    Ok(Cholesky::new(&mass)
        .map_err(|_| consistency("edge mass matrix is singular"))?
        .solve(&rhs))
}

/// DOF indices of one panel: start vertex, end vertex, bubbles.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDofs {
    pub degree: u32,
    pub dofs: Vec<Option<usize>>,
}

/// Continuous trace space `V_hp(Γ²)`, vanishing on `Γ²_D`.
///
/// Interface DOFs come first: `0..n_interface` is `U²_I`, the rest `U²_O`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeTraceSpace {
    pub degrees: DegreeVector,
    pub panels: Vec<PanelDofs>,
    pub n_dofs: usize,
    pub n_interface: usize,
    /// DOFs on `Γ²_D`; empty unless built by
    /// [`BeTraceSpace::unconstrained`].
    pub dirichlet: Vec<usize>,
}

impl BeTraceSpace {
    pub fn new(mesh: &BoundaryMesh, degrees: DegreeVector) -> Result<Self> {
        Self::build(mesh, degrees, true)
    }

    /// The full continuous space on `Γ²`, without the Dirichlet constraint.
    /// Dirichlet panels are numbered with the outer ones.
    pub fn unconstrained(mesh: &BoundaryMesh, degrees: DegreeVector) -> Result<Self> {
        Self::build(mesh, degrees, false)
    }

    fn build(mesh: &BoundaryMesh, degrees: DegreeVector, constrain: bool) -> Result<Self> {
        let n = mesh.len();
        if degrees.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: degrees.len(),
            });
        }
        // Loop vertex i is the start of panel i.
        let class_of = |t: Tag| match t {
            Tag::Interface => Class::Interface,
            Tag::Dirichlet if constrain => Class::Dirichlet,
            _ => Class::Outer,
        };
        let mut vclass = vec![Class::Outer; n];
        for i in 0..n {
            let c = class_of(mesh.panels[i].tag);
            vclass[i] = vclass[i].max(c);
            let j = mesh.next(i);
            vclass[j] = vclass[j].max(c);
        }
        let mut vdof = vec![None; n];
        let mut bdof = vec![None; n];
        let mut next = 0;
        let mut n_interface = 0;
        for pass in [Class::Interface, Class::Outer] {
            for i in 0..n {
                if vclass[i] == pass {
                    vdof[i] = Some(next);
                    next += 1;
                }
            }
            for i in 0..n {
                if class_of(mesh.panels[i].tag) == pass {
                    bdof[i] = Some(next);
                    next += degrees.get(i) as usize - 1;
                }
            }
            if pass == Class::Interface {
                n_interface = next;
            }
        }
        let mut dirichlet = Vec::new();
        if !constrain {
            for i in 0..n {
                if mesh.panels[i].tag == Tag::Dirichlet {
                    dirichlet.extend(vdof[i]);
                    dirichlet.extend(vdof[mesh.next(i)]);
                    if let Some(s) = bdof[i] {
                        dirichlet.extend(s..s + degrees.get(i) as usize - 1);
                    }
                }
            }
            dirichlet.sort_unstable();
            dirichlet.dedup();
        }
        let panels = (0..n)
            .map(|i| {
                let p = degrees.get(i);
                let mut dofs = vec![vdof[i], vdof[mesh.next(i)]];
                for k in 0..p as usize - 1 {
                    dofs.push(bdof[i].map(|s| s + k));
                }
                PanelDofs { degree: p, dofs }
            })
            .collect();
        Ok(BeTraceSpace {
            degrees,
            panels,
            n_dofs: next,
            n_interface,
            dirichlet,
        })
    }

    pub fn local_coefficients(&self, j: usize, coeffs: &[f64]) -> Vec<f64> {
        self.panels[j]
            .dofs
            .iter()
            .map(|d| d.map_or(0.0, |i| coeffs[i]))
            .collect()
    }

    /// Value and arc-length derivative on panel `j` at parameter `t`.
    pub fn eval(&self, mesh: &BoundaryMesh, coeffs: &[f64], j: usize, t: f64) -> (f64, f64) {
        let local = self.local_coefficients(j, coeffs);
        let (mut vals, mut ders) = (Vec::new(), Vec::new());
        trace_shape(self.panels[j].degree, t, &mut vals, &mut ders);
        let h = mesh.panels[j].length();
        let mut u = 0.0;
        let mut du = 0.0;
        for i in 0..vals.len() {
            u += local[i] * vals[i];
            du += local[i] * ders[i];
        }
        (u, du / h)
    }

    /// Vertex values plus `L²` projection of the remainder on each panel.
    pub fn interpolate(&self, mesh: &BoundaryMesh, f: impl Fn(Point2) -> f64) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.n_dofs];
        for (j, p) in self.panels.iter().enumerate() {
            if let Some(d) = p.dofs[0] {
                c[d] = f(mesh.panels[j].a);
            }
        }
        for (j, p) in self.panels.iter().enumerate() {
            if p.degree < 2 || p.dofs[2].is_none() {
                continue;
            }
            let panel = &mesh.panels[j];
            let va = p.dofs[0].map_or(0.0, |d| c[d]);
            let vb = p.dofs[1].map_or(0.0, |d| c[d]);
            let coef = project_1d(p.degree, |t| f(panel.point(t)) - va * (1.0 - t) - vb * t)?;
            for (k, v) in coef.into_iter().enumerate() {
                c[p.dofs[2 + k].unwrap()] = v;
            }
        }
        Ok(c)
    }
}

/// Discontinuous flux space `W_hp(Γ²)` of Legendre polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct BeFluxSpace {
    pub degrees: DegreeVector,
    pub offsets: Vec<usize>,
    pub n_dofs: usize,
}

impl BeFluxSpace {
    pub fn new(mesh: &BoundaryMesh, degrees: DegreeVector) -> Result<Self> {
        if degrees.len() != mesh.len() {
            return Err(Error::Dimension {
                expected: mesh.len(),
                found: degrees.len(),
            });
        }
        let mut offsets = Vec::with_capacity(degrees.len());
        let mut next = 0;
        for &p in &degrees.0 {
            offsets.push(next);
            next += p as usize + 1;
        }
        Ok(BeFluxSpace {
            degrees,
            offsets,
            n_dofs: next,
        })
    }

    pub fn dofs(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j] + self.degrees.get(j) as usize + 1
    }

    pub fn eval(&self, coeffs: &[f64], j: usize, t: f64) -> f64 {
        let mut vals = Vec::new();
        flux_shape(self.degrees.get(j), t, &mut vals);
        vals.iter().zip(&coeffs[self.dofs(j)]).map(|(a, b)| a * b).sum()
    }

    /// `L²(Γ²)` projection; the Legendre basis is orthogonal.
    pub fn project(&self, mesh: &BoundaryMesh, f: impl Fn(Point2) -> f64) -> Vec<f64> {
        let mut c = vec![0.0; self.n_dofs];
        let mut vals = Vec::new();
        for j in 0..mesh.len() {
            let p = self.degrees.get(j);
            let rule = gauss(p as usize + 8);
            for (t, w) in rule.iter() {
                flux_shape(p, t, &mut vals);
                let fx = f(mesh.panels[j].point(t));
                for (k, v) in vals.iter().enumerate() {
                    c[self.offsets[j] + k] += w * fx * v * (2 * k + 1) as f64;
                }
            }
        }
        c
    }
}
