use alloc::vec::Vec;

use super::{BoundaryMesh, Mesh2D, Point2, Tag};
use crate::error::consistency;
use crate::Result;

/// The interface `Γ_I` as an open polyline with arc-length parameter,
/// oriented like the BE boundary loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCurve {
    pub points: Vec<Point2>,
    /// Arc length at each polyline vertex.
    pub cum: Vec<f64>,
}

impl InterfaceCurve {
    /// Extracts the run of interface-labelled arcs of the BE boundary.
    pub fn from_boundary(mesh: &BoundaryMesh) -> Result<Self> {
        let arcs = &mesh.arcs;
        let n = arcs.len();
        let is_i = |i: usize| arcs[i % n].tag == Tag::Interface;
        let start = (0..n)
            .find(|&i| is_i(i) && !is_i(i + n - 1))
            .ok_or_else(|| consistency("boundary has no open interface arc run"))?;
        let mut points = alloc::vec![arcs[start].a];
        let mut k = start;
        while is_i(k) && points.len() <= n {
            points.push(arcs[k % n].b);
            k += 1;
        }
        let run = k - start;
        if (0..n).filter(|&i| is_i(i)).count() != run {
            return Err(consistency("interface must be a single connected arc run"));
        }
        Ok(Self::from_points(points))
    }

    pub fn from_points(points: Vec<Point2>) -> Self {
        let mut cum = alloc::vec![0.0; points.len()];
        for i in 1..points.len() {
            cum[i] = cum[i - 1] + points[i - 1].dist(points[i]);
        }
        InterfaceCurve { points, cum }
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    /// Arc-length position of `p`, if it lies on the curve.
    pub fn locate(&self, p: Point2) -> Option<f64> {
        let tol = 1e-10 * self.length().max(1.0);
        for k in 0..self.points.len() - 1 {
            let (a, b) = (self.points[k], self.points[k + 1]);
            let d = b - a;
            let len = d.norm();
            let q = p - a;
            let t = q.dot(d) / (len * len);
            if (q.cross(d) / len).abs() <= tol && t >= -tol / len && t <= 1.0 + tol / len {
                return Some(self.cum[k] + t.clamp(0.0, 1.0) * len);
            }
        }
        None
    }

    pub fn point_at(&self, s: f64) -> Point2 {
        let k = match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => return self.points[i],
            Err(i) => i.clamp(1, self.points.len() - 1) - 1,
        };
        let len = self.cum[k + 1] - self.cum[k];
        self.points[k].lerp(self.points[k + 1], (s - self.cum[k]) / len)
    }
}

/// One cell of a trace partition of `Γ_I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceCell {
    pub s0: f64,
    pub s1: f64,
    /// Parent element (FE) or panel (BE).
    pub parent: usize,
    /// Local edge of the parent element; `0` for panels.
    pub local: usize,
    pub degree: u32,
}

/// Ordered partition of `Γ_I` induced by one side's mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePartition {
    pub cells: Vec<TraceCell>,
    pub length: f64,
}

impl TracePartition {
    pub fn breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.cells.iter().map(|c| c.s0).collect();
        b.push(self.length);
        b
    }

    /// Index of the cell containing `s`.
    pub fn find(&self, s: f64) -> usize {
        let i = self.cells.partition_point(|c| c.s1 <= s);
        i.min(self.cells.len() - 1)
    }

    fn from_cells(mut cells: Vec<TraceCell>, length: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(consistency("no mesh edges are tagged as interface"));
        }
        cells.sort_by(|a, b| a.s0.partial_cmp(&b.s0).unwrap());
        let tol = 1e-10 * length.max(1.0);
        let mut prev = 0.0;
        for c in cells.iter_mut() {
            if (c.s0 - prev).abs() > tol {
                return Err(consistency("trace cells do not cover the interface"));
            }
            c.s0 = prev;
            prev = c.s1;
        }
        if (prev - length).abs() > tol {
            return Err(consistency("trace cells do not cover the interface"));
        }
        cells.last_mut().unwrap().s1 = length;
        Ok(TracePartition { cells, length })
    }
}

/// Trace mesh of the FE mesh on `Γ_I`; `degrees` are the element degrees.
pub fn trace_partition_fe(
    mesh: &Mesh2D,
    curve: &InterfaceCurve,
    degrees: &[u32],
) -> Result<TracePartition> {
    let mut cells = Vec::new();
    for k in 0..mesh.n_elements() {
        let el = &mesh.elements[k];
        for e in 0..el.kind.n_vertices() {
            if mesh.edge_tag(k, e) != Some(Tag::Interface) {
                continue;
            }
            let (u, v) = el.edge(e);
            let sa = curve.locate(mesh.vertices[u]);
            let sb = curve.locate(mesh.vertices[v]);
            let (Some(sa), Some(sb)) = (sa, sb) else {
                return Err(consistency("interface edge lies off the interface curve"));
            };
            cells.push(TraceCell {
                s0: sa.min(sb),
                s1: sa.max(sb),
                parent: k,
                local: e,
                degree: degrees.get(k).copied().unwrap_or(1),
            });
        }
    }
    TracePartition::from_cells(cells, curve.length())
}

/// Trace mesh of the BE panels on `Γ_I`; `degrees` are the panel degrees.
pub fn trace_partition_be(
    mesh: &BoundaryMesh,
    curve: &InterfaceCurve,
    degrees: &[u32],
) -> Result<TracePartition> {
    let mut cells = Vec::new();
    for (j, p) in mesh.panels.iter().enumerate() {
        if p.tag != Tag::Interface {
            continue;
        }
        let (Some(sa), Some(sb)) = (curve.locate(p.a), curve.locate(p.b)) else {
            return Err(consistency("interface panel lies off the interface curve"));
        };
        cells.push(TraceCell {
            s0: sa.min(sb),
            s1: sa.max(sb),
            parent: j,
            local: 0,
            degree: degrees.get(j).copied().unwrap_or(1),
        });
    }
    TracePartition::from_cells(cells, curve.length())
}

/// A cell of the common refinement of the two trace meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlaySegment {
    pub s0: f64,
    pub s1: f64,
    pub a: Point2,
    pub b: Point2,
    /// Cell of the FE trace partition (`J¹`).
    pub fe_cell: usize,
    /// Cell of the BE trace partition (`J²`).
    pub be_cell: usize,
    /// Parent FE element, its local edge, and the parent BE panel.
    pub element: usize,
    pub local_edge: usize,
    pub panel: usize,
    pub eta: f64,
}

impl OverlaySegment {
    pub fn length(&self) -> f64 {
        self.s1 - self.s0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceOverlay {
    pub segments: Vec<OverlaySegment>,
    pub length: f64,
}

impl InterfaceOverlay {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(OverlaySegment::length).sum()
    }
}

/// Merges the FE trace partition `fe` and the BE trace partition `be`.
/// Breakpoints closer than `1e-12 |Γ_I|` are identified.
pub fn overlay(
    fe: &TracePartition,
    be: &TracePartition,
    curve: &InterfaceCurve,
) -> Result<InterfaceOverlay> {
    let len = fe.length;
    if (fe.length - be.length).abs() > 1e-12 * len.max(be.length) {
        return Err(consistency("trace partitions cover different curves"));
    }
    let mut breaks = fe.breaks();
    breaks.extend(be.breaks());
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = 1e-12 * len;
    let mut merged: Vec<f64> = Vec::with_capacity(breaks.len());
    for s in breaks {
        match merged.last() {
            Some(&last) if s - last <= tol => {}
            _ => merged.push(s),
        }
    }
    *merged.last_mut().unwrap() = len;
    let mut segments = Vec::with_capacity(merged.len() - 1);
    for w in merged.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let fi = fe.find(mid);
        let bi = be.find(mid);
        segments.push(OverlaySegment {
            s0: w[0],
            s1: w[1],
            a: curve.point_at(w[0]),
            b: curve.point_at(w[1]),
            fe_cell: fi,
            be_cell: bi,
            element: fe.cells[fi].parent,
            local_edge: fe.cells[fi].local,
            panel: be.cells[bi].parent,
            eta: 0.0,
        });
    }
    Ok(InterfaceOverlay {
        segments,
        length: len,
    })
}
