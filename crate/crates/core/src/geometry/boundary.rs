#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;
use core::ops::Range;

use super::{geometric_partition_1d, Point2, Tag};
use crate::error::{consistency, param};
use crate::Result;

/// Straight boundary element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: Point2,
    pub b: Point2,
    pub tag: Tag,
    /// Index of the straight arc containing the panel.
    pub arc: usize,
    /// Position `[t0, t1]` of the panel on its arc, as arc fractions.
    pub on_arc: (f64, f64),
    /// One-dimensional grading layer, `1` at the arc endpoint.
    pub layer: Option<u32>,
}

impl Panel {
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn point(&self, t: f64) -> Point2 {
        self.a.lerp(self.b, t)
    }

    pub fn tangent(&self) -> Point2 {
        (self.b - self.a) * (1.0 / self.length())
    }

    /// Outward unit normal; panels run counterclockwise around the
    /// subdomain.
    pub fn normal(&self) -> Point2 {
        let t = self.tangent();
        Point2::new(t.y, -t.x)
    }
}

/// Straight piece of the boundary polygon with one label.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub a: Point2,
    pub b: Point2,
    pub tag: Tag,
    pub panels: Range<usize>,
}

/// How each straight arc is split into panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcPartition {
    /// Equal panels no longer than `h`.
    MaxLength(f64),
    /// Cut at the midpoint; both halves geometrically graded toward the arc
    /// endpoints.
    Graded { sigma: f64, layers: u32 },
}

/// Closed loop of panels around the BE subdomain.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    pub panels: Vec<Panel>,
    pub arcs: Vec<Arc>,
}

impl BoundaryMesh {
    /// Meshes the counterclockwise polygon `corners`, where arc `i` runs from
    /// `corners[i]` to `corners[i + 1]` and carries `tags[i]`.
    pub fn new(corners: &[Point2], tags: &[Tag], partition: ArcPartition) -> Result<Self> {
        let n = corners.len();
        if n < 3 || tags.len() != n {
            return Err(param("boundary polygon needs at least 3 corners and one tag per arc"));
        }
        let mut signed = 0.0;
        for i in 0..n {
            signed += corners[i].cross(corners[(i + 1) % n]);
        }
        if signed <= 0.0 {
            return Err(consistency("boundary polygon must be counterclockwise"));
        }
        let mut panels = Vec::new();
        let mut arcs = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (corners[i], corners[(i + 1) % n]);
            let len = a.dist(b);
            if len <= 0.0 {
                return Err(consistency("repeated boundary corner"));
            }
            let cells = arc_cells(len, partition)?;
            let start = panels.len();
            for (t0, t1, layer) in cells {
                panels.push(Panel {
                    a: a.lerp(b, t0),
                    b: if t1 == 1.0 { b } else { a.lerp(b, t1) },
                    tag: tags[i],
                    arc: i,
                    on_arc: (t0, t1),
                    layer,
                });
            }
            arcs.push(Arc {
                a,
                b,
                tag: tags[i],
                panels: start..panels.len(),
            });
        }
        Ok(BoundaryMesh { panels, arcs })
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    /// Panel following panel `i` around the loop.
    pub fn next(&self, i: usize) -> usize {
        (i + 1) % self.panels.len()
    }

    pub fn prev(&self, i: usize) -> usize {
        (i + self.panels.len() - 1) % self.panels.len()
    }

    pub fn perimeter(&self) -> f64 {
        self.panels.iter().map(Panel::length).sum()
    }

    pub fn h_max(&self) -> f64 {
        self.panels.iter().map(Panel::length).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.arcs {
            for b in &self.arcs {
                d = d.max(a.a.dist(b.a));
            }
        }
        d
    }

    /// Barycenter of the polygon corners.
    pub fn center(&self) -> Point2 {
        let mut c = Point2::default();
        for a in &self.arcs {
            c = c + a.a;
        }
        c * (1.0 / self.arcs.len() as f64)
    }

    /// Checks that consecutive panels share endpoints and close the loop.
    pub fn check_closed(&self, tol: f64) -> Result<()> {
        for i in 0..self.panels.len() {
            let j = self.next(i);
            if self.panels[i].b.dist(self.panels[j].a) > tol {
                return Err(consistency("boundary panels do not close the loop"));
            }
        }
        Ok(())
    }

    /// Splits every panel into two halves. Layer tags are dropped.
    pub fn refine_uniform(&self) -> BoundaryMesh {
        let mut panels = Vec::with_capacity(2 * self.panels.len());
        let mut arcs = self.arcs.clone();
        for (i, arc) in self.arcs.iter().enumerate() {
            let start = panels.len();
            for p in &self.panels[arc.panels.clone()] {
                let tm = 0.5 * (p.on_arc.0 + p.on_arc.1);
                let m = arc.a.lerp(arc.b, tm);
                panels.push(Panel {
                    b: m,
                    on_arc: (p.on_arc.0, tm),
                    layer: None,
                    ..*p
                });
                panels.push(Panel {
                    a: m,
                    on_arc: (tm, p.on_arc.1),
                    layer: None,
                    ..*p
                });
            }
            arcs[i].panels = start..panels.len();
        }
        BoundaryMesh { panels, arcs }
    }

    /// The same mesh with every point mapped by `p ↦ c + s (p - c)`.
    pub fn scaled(&self, center: Point2, s: f64) -> BoundaryMesh {
        let f = |p: Point2| center + (p - center) * s;
        BoundaryMesh {
            panels: self
                .panels
                .iter()
                .map(|p| Panel {
                    a: f(p.a),
                    b: f(p.b),
                    ..*p
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| Arc {
                    a: f(a.a),
                    b: f(a.b),
                    ..a.clone()
                })
                .collect(),
        }
    }
}

fn arc_cells(len: f64, partition: ArcPartition) -> Result<Vec<(f64, f64, Option<u32>)>> {
    match partition {
        ArcPartition::MaxLength(h) => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(param("panel size must be positive"));
            }
            let n = ((len / h) - 1e-9).ceil().max(1.0) as usize;
            Ok((0..n)
                .map(|k| (k as f64 / n as f64, (k + 1) as f64 / n as f64, None))
                .collect())
        }
        ArcPartition::Graded { sigma, layers } => {
            let x = geometric_partition_1d(sigma, layers as usize)?;
            let m = x.len() - 1;
            let mut cells = Vec::with_capacity(2 * m);
            for j in 1..=m {
                cells.push((0.5 * x[j - 1], 0.5 * x[j], Some(j as u32)));
            }
            for j in (1..=m).rev() {
                cells.push((1.0 - 0.5 * x[j], 1.0 - 0.5 * x[j - 1], Some(j as u32)));
            }
            Ok(cells)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn uniform_panels_close_the_loop() {
        let tags = [Tag::Interface, Tag::Neumann, Tag::Neumann, Tag::Dirichlet];
        let m = BoundaryMesh::new(&square(), &tags, ArcPartition::MaxLength(0.2)).unwrap();
        assert_eq!(m.len(), 20);
        m.check_closed(1e-14).unwrap();
        assert!((m.perimeter() - 4.0).abs() < 1e-13);
        assert_eq!(m.panels[0].normal(), Point2::new(0.0, -1.0));
        assert_eq!(m.refine_uniform().len(), 40);
    }

    #[test]
    fn graded_arc_breakpoints() {
        let tags = [Tag::Neumann; 4];
        let m = BoundaryMesh::new(
            &square(),
            &tags,
            ArcPartition::Graded {
                sigma: 0.5,
                layers: 3,
            },
        )
        .unwrap();
        let first: Vec<f64> = m.panels[m.arcs[0].panels.clone()]
            .iter()
            .map(|p| p.on_arc.1)
            .collect();
        let want = [0.0625, 0.125, 0.25, 0.5, 0.75, 0.875, 0.9375, 1.0];
        for (a, b) in first.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let layers: Vec<u32> = m.panels[..8].iter().map(|p| p.layer.unwrap()).collect();
        assert_eq!(layers, vec![1, 2, 3, 4, 4, 3, 2, 1]);
    }

    #[test]
    fn clockwise_polygon_rejected() {
        let mut c = square();
        c.reverse();
        assert!(BoundaryMesh::new(&c, &[Tag::Neumann; 4], ArcPartition::MaxLength(0.5)).is_err());
    }
}
