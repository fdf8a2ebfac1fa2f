//! Meshes of the FE subdomain, panel meshes of the BE boundary and the
//! interface trace meshes.

mod boundary;
mod build;
mod interface;
mod refine;

pub use boundary::{Arc, ArcPartition, BoundaryMesh, Panel};
pub use build::{
    build_lshape_decomposition, build_square_decomposition, LShapeConfig, LShapeDecomposition,
    SquareDecomposition,
};
pub use interface::{
    overlay, trace_partition_be, trace_partition_fe, InterfaceCurve, InterfaceOverlay,
    OverlaySegment, TraceCell, TracePartition,
};
pub use refine::{refine_geometric_corner, refine_uniform};

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{consistency, param};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Boundary condition label of a boundary edge or panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Dirichlet,
    Neumann,
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Triangle,
    Parallelogram,
}

impl ElementKind {
    pub fn n_vertices(self) -> usize {
        match self {
            ElementKind::Triangle => 3,
            ElementKind::Parallelogram => 4,
        }
    }
}

/// `x = offset + jac · ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub jac: [[f64; 2]; 2],
    pub offset: Point2,
}

impl AffineMap {
    pub fn det(&self) -> f64 {
        self.jac[0][0] * self.jac[1][1] - self.jac[0][1] * self.jac[1][0]
    }

    pub fn apply(&self, xi: [f64; 2]) -> Point2 {
        let j = &self.jac;
        Point2::new(
            self.offset.x + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.offset.y + j[1][0] * xi[0] + j[1][1] * xi[1],
        )
    }

    /// `J⁻¹`, so that `ξ = J⁻¹(x - offset)` and `∇ = J⁻ᵀ ∇̂`.
    pub fn inverse_jac(&self) -> [[f64; 2]; 2] {
        let d = self.det();
        let j = &self.jac;
        [[j[1][1] / d, -j[0][1] / d], [-j[1][0] / d, j[0][0] / d]]
    }

    pub fn to_reference(&self, p: Point2) -> [f64; 2] {
        let inv = self.inverse_jac();
        let d = p - self.offset;
        [inv[0][0] * d.x + inv[0][1] * d.y, inv[1][0] * d.x + inv[1][1] * d.y]
    }

    /// Physical gradient from a reference gradient.
    pub fn push_gradient(&self, inv: &[[f64; 2]; 2], g: [f64; 2]) -> [f64; 2] {
        [inv[0][0] * g[0] + inv[1][0] * g[1], inv[0][1] * g[0] + inv[1][1] * g[1]]
    }
}

/// An element of the FE mesh. `nodes[3]` is unused for triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    pub nodes: [usize; 4],
    /// Grading layer, `0` at the singular corner; `None` for regular elements.
    pub layer: Option<u32>,
    pub kappa: f64,
}

impl Element {
    pub fn triangle(a: usize, b: usize, c: usize) -> Self {
        Element {
            kind: ElementKind::Triangle,
            nodes: [a, b, c, usize::MAX],
            layer: None,
            kappa: 1.0,
        }
    }

    pub fn parallelogram(a: usize, b: usize, c: usize, d: usize) -> Self {
        Element {
            kind: ElementKind::Parallelogram,
            nodes: [a, b, c, d],
            layer: None,
            kappa: 1.0,
        }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.nodes[..self.kind.n_vertices()]
    }

    /// Local edge `e` runs from local vertex `e` to local vertex `e + 1`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        let n = self.kind.n_vertices();
        (self.nodes[e], self.nodes[(e + 1) % n])
    }
}

/// Geometry of one element resolved against the vertex table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub kind: ElementKind,
    pub corners: [Point2; 4],
    pub map: AffineMap,
    pub area: f64,
    pub diameter: f64,
    /// Diameter of the largest inscribed disc.
    pub inscribed: f64,
}

impl ElementGeometry {
    pub fn new(kind: ElementKind, corners: &[Point2]) -> Self {
        let v0 = corners[0];
        let e1 = corners[1] - v0;
        let e2 = match kind {
            ElementKind::Triangle => corners[2] - v0,
            ElementKind::Parallelogram => corners[3] - v0,
        };
        let map = AffineMap {
            jac: [[e1.x, e2.x], [e1.y, e2.y]],
            offset: v0,
        };
        let n = kind.n_vertices();
        let mut c = [Point2::default(); 4];
        c[..n].copy_from_slice(&corners[..n]);
        let mut diameter: f64 = 0.0;
        let mut perimeter = 0.0;
        for i in 0..n {
            perimeter += c[i].dist(c[(i + 1) % n]);
            for j in i + 1..n {
                diameter = diameter.max(c[i].dist(c[j]));
            }
        }
        let (area, inscribed) = match kind {
            ElementKind::Triangle => {
                let a = 0.5 * map.det().abs();
                (a, 4.0 * a / perimeter)
            }
            ElementKind::Parallelogram => {
                let a = map.det().abs();
                (a, a / e1.norm().max(e2.norm()))
            }
        };
        ElementGeometry {
            kind,
            corners: c,
            map,
            area,
            diameter,
            inscribed,
        }
    }

    pub fn shape_ratio(&self) -> f64 {
        self.diameter / self.inscribed
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let n = self.kind.n_vertices();
        self.corners[e].dist(self.corners[(e + 1) % n])
    }

    /// Outward unit normal of local edge `e` (vertices are counterclockwise).
    pub fn edge_normal(&self, e: usize) -> Point2 {
        let n = self.kind.n_vertices();
        let d = self.corners[(e + 1) % n] - self.corners[e];
        Point2::new(d.y, -d.x) * (1.0 / d.norm())
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.kind.n_vertices();
        let mut s = Point2::default();
        for c in &self.corners[..n] {
            s = s + *c;
        }
        s * (1.0 / n as f64)
    }
}

/// A straight piece of the subdomain boundary carrying one label. Boundary
/// edges of the mesh inherit the label of the segment containing them,
/// which keeps labels valid through refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedSegment {
    pub a: Point2,
    pub b: Point2,
    pub tag: Tag,
}

impl TaggedSegment {
    pub fn new(a: Point2, b: Point2, tag: Tag) -> Self {
        TaggedSegment { a, b, tag }
    }

    /// Whether `p` lies on the closed segment, up to `tol`.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let d = self.b - self.a;
        let len = d.norm();
        let q = p - self.a;
        let t = q.dot(d) / (len * len);
        (q.cross(d) / len).abs() <= tol && t >= -tol / len && t <= 1.0 + tol / len
    }
}

/// An edge of the mesh topology; `a < b` are global vertex indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshEdge {
    pub a: usize,
    pub b: usize,
    /// Adjacent `(element, local edge)` pairs; the second is `None` on the
    /// boundary.
    pub elements: [(usize, usize); 2],
    pub n_elements: usize,
    pub tag: Option<Tag>,
}

/// Conforming mesh of the FE subdomain.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub vertices: Vec<Point2>,
    pub elements: Vec<Element>,
    pub boundary: Vec<TaggedSegment>,
    /// Corners `A_i` of the subdomain polygon.
    pub corners: Vec<Point2>,
    edges: Vec<MeshEdge>,
    element_edges: Vec<[usize; 4]>,
}

impl Mesh2D {
    /// Builds the mesh and its edge topology. Elements are reoriented
    /// counterclockwise. Fails on degenerate elements, edges shared by more
    /// than two elements, and one-sided edges off the tagged boundary (the
    /// signature of a hanging node).
    pub fn new(
        vertices: Vec<Point2>,
        mut elements: Vec<Element>,
        boundary: Vec<TaggedSegment>,
        corners: Vec<Point2>,
    ) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(param("vertex coordinates must be finite"));
        }
        for el in elements.iter_mut() {
            let n = el.kind.n_vertices();
            if el.nodes[..n].iter().any(|&v| v >= vertices.len()) {
                return Err(consistency("element references a missing vertex"));
            }
            if !(el.kappa > 0.0 && el.kappa.is_finite()) {
                return Err(param("coefficient kappa must be positive"));
            }
            let c: Vec<Point2> = el.vertices().iter().map(|&v| vertices[v]).collect();
            let g = ElementGeometry::new(el.kind, &c);
            let scale = g.diameter * g.diameter;
            if g.map.det().abs() <= 1e-14 * scale {
                return Err(consistency("degenerate element"));
            }
            if el.kind == ElementKind::Parallelogram {
                let r = c[0] - c[1] + c[2] - c[3];
                if r.norm() > 1e-12 * g.diameter {
                    return Err(consistency("quadrilateral is not a parallelogram"));
                }
            }
            if g.map.det() < 0.0 {
                el.nodes[..n].reverse();
            }
        }

        let mut by_key: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<MeshEdge> = Vec::new();
        let mut element_edges = Vec::with_capacity(elements.len());
        for (k, el) in elements.iter().enumerate() {
            let mut ids = [usize::MAX; 4];
            for e in 0..el.kind.n_vertices() {
                let (u, v) = el.edge(e);
                let key = (u.min(v), u.max(v));
                let id = *by_key.entry(key).or_insert_with(|| {
                    edges.push(MeshEdge {
                        a: key.0,
                        b: key.1,
                        elements: [(usize::MAX, 0); 2],
                        n_elements: 0,
                        tag: None,
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[id];
                if edge.n_elements == 2 {
                    return Err(consistency("edge shared by more than two elements"));
                }
                edge.elements[edge.n_elements] = (k, e);
                edge.n_elements += 1;
                ids[e] = id;
            }
            element_edges.push(ids);
        }

        let mut scale: f64 = 0.0;
        for p in &vertices {
            scale = scale.max(p.x.abs()).max(p.y.abs());
        }
        let tol = 1e-10 * scale.max(1.0);
        for edge in edges.iter_mut().filter(|e| e.n_elements == 1) {
            let (p, q) = (vertices[edge.a], vertices[edge.b]);
            let seg = boundary
                .iter()
                .find(|s| s.contains(p, tol) && s.contains(q, tol))
                .ok_or_else(|| {
                    consistency("one-sided edge off the tagged boundary (hanging node or gap)")
                })?;
            edge.tag = Some(seg.tag);
        }

        Ok(Mesh2D {
            vertices,
            elements,
            boundary,
            corners,
            edges,
            element_edges,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    /// Global edge ids of the local edges of element `k`.
    pub fn element_edges(&self, k: usize) -> &[usize] {
        &self.element_edges[k][..self.elements[k].kind.n_vertices()]
    }

    pub fn geometry(&self, k: usize) -> ElementGeometry {
        let el = &self.elements[k];
        let mut c = [Point2::default(); 4];
        for (i, &v) in el.vertices().iter().enumerate() {
            c[i] = self.vertices[v];
        }
        ElementGeometry::new(el.kind, &c[..el.kind.n_vertices()])
    }

    /// Label of local edge `e` of element `k`, `None` for interior edges.
    pub fn edge_tag(&self, k: usize, e: usize) -> Option<Tag> {
        self.edges[self.element_edges[k][e]].tag
    }

    pub fn area(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.geometry(k).area).sum()
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_elements())
            .map(|k| self.geometry(k).diameter)
            .fold(0.0, f64::max)
    }

    pub fn max_shape_ratio(&self) -> f64 {
        (0..self.n_elements())
            .map(|k| self.geometry(k).shape_ratio())
            .fold(0.0, f64::max)
    }

    /// Fails if some element exceeds the shape-regularity bound `τ`.
    pub fn check_shape_regular(&self, tau: f64) -> Result<()> {
        let worst = self.max_shape_ratio();
        if worst > tau {
            return Err(Error::Consistency(alloc::format!(
                "shape ratio {worst:.3} exceeds bound {tau}"
            )));
        }
        Ok(())
    }

    /// Vertices lying on a boundary edge with the given label.
    pub fn vertices_on(&self, tag: Tag) -> Vec<bool> {
        let mut on = alloc::vec![false; self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.tag == Some(tag)) {
            on[e.a] = true;
            on[e.b] = true;
        }
        on
    }

    /// Index of the vertex at `p`, if any.
    pub fn find_vertex(&self, p: Point2) -> Option<usize> {
        let tol = 1e-12 * (1.0 + p.norm());
        self.vertices.iter().position(|v| v.dist(p) <= tol)
    }

    /// Elements with a vertex at global vertex `v`.
    pub fn elements_at(&self, v: usize) -> Vec<usize> {
        (0..self.n_elements())
            .filter(|&k| self.elements[k].vertices().contains(&v))
            .collect()
    }
}

/// Parameters of a geometric mesh with linear degree vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradingParams {
    pub sigma: f64,
    pub layers: u32,
    pub slope: f64,
}

impl GradingParams {
    pub fn new(sigma: f64, layers: u32, slope: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(param("grading factor sigma must lie in (0, 1)"));
        }
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(param("degree slope mu must be positive"));
        }
        Ok(GradingParams {
            sigma,
            layers,
            slope,
        })
    }
}

/// Breakpoints `x_0 = 0 < x_1 < ... < x_{n+1} = 1` with
/// `x_j = σ^{n+1-j}`.
pub fn geometric_partition_1d(sigma: f64, layers: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(param("grading factor sigma must lie in (0, 1)"));
    }
    let mut x = alloc::vec![0.0; layers + 2];
    let mut v = 1.0;
    for j in (1..=layers + 1).rev() {
        x[j] = v;
        v *= sigma;
    }
    Ok(x)
}

/// Deduplicating vertex table keyed on quantized coordinates.
#[derive(Debug, Default)]
pub(crate) struct VertexPool {
    pub points: Vec<Point2>,
    index: BTreeMap<(i64, i64), usize>,
}

const POOL_CELL: f64 = 1e-11;

impl VertexPool {
    pub fn insert(&mut self, p: Point2) -> usize {
        let kx = (p.x / POOL_CELL).round() as i64;
        let ky = (p.y / POOL_CELL).round() as i64;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&i) = self.index.get(&(kx + dx, ky + dy)) {
                    if self.points[i].dist(p) <= POOL_CELL {
                        return i;
                    }
                }
            }
        }
        self.points.push(p);
        self.index.insert((kx, ky), self.points.len() - 1);
        self.points.len() - 1
    }
}
