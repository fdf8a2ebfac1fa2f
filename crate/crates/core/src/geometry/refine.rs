#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;

use super::{Element, ElementKind, GradingParams, Mesh2D, Point2, VertexPool};
use crate::error::param;
use crate::Result;

#[derive(Default)]
struct Builder {
    pool: VertexPool,
    elements: Vec<Element>,
}

impl Builder {
    fn push(&mut self, pts: &[Point2], layer: Option<u32>, kappa: f64) {
        let mut ids = [usize::MAX; 4];
        for (i, p) in pts.iter().enumerate() {
            ids[i] = self.pool.insert(*p);
        }
        let kind = if pts.len() == 3 {
            ElementKind::Triangle
        } else {
            ElementKind::Parallelogram
        };
        self.elements.push(Element {
            kind,
            nodes: ids,
            layer,
            kappa,
        });
    }

    fn finish(self, like: &Mesh2D) -> Result<Mesh2D> {
        Mesh2D::new(
            self.pool.points,
            self.elements,
            like.boundary.clone(),
            like.corners.clone(),
        )
    }
}

fn element_points(mesh: &Mesh2D, k: usize) -> Vec<Point2> {
    mesh.elements[k]
        .vertices()
        .iter()
        .map(|&v| mesh.vertices[v])
        .collect()
}

/// Splits quadrilaterals into four and triangles into four (red
/// refinement). Layer tags are inherited.
pub fn refine_uniform(mesh: &Mesh2D) -> Result<Mesh2D> {
    let mut b = Builder::default();
    for (k, el) in mesh.elements.iter().enumerate() {
        let v = element_points(mesh, k);
        let n = v.len();
        let m: Vec<Point2> = (0..n).map(|i| v[i].lerp(v[(i + 1) % n], 0.5)).collect();
        match el.kind {
            ElementKind::Parallelogram => {
                let c = v[0].lerp(v[2], 0.5);
                b.push(&[v[0], m[0], c, m[3]], el.layer, el.kappa);
                b.push(&[m[0], v[1], m[1], c], el.layer, el.kappa);
                b.push(&[c, m[1], v[2], m[2]], el.layer, el.kappa);
                b.push(&[m[3], c, m[2], v[3]], el.layer, el.kappa);
            }
            ElementKind::Triangle => {
                b.push(&[v[0], m[0], m[2]], el.layer, el.kappa);
                b.push(&[m[0], v[1], m[1]], el.layer, el.kappa);
                b.push(&[m[2], m[1], v[2]], el.layer, el.kappa);
                b.push(&[m[0], m[1], m[2]], el.layer, el.kappa);
            }
        }
    }
    b.finish(mesh)
}

/// Geometric refinement toward the mesh vertex `corner` with `n` layers:
/// elements at the corner are replaced by the layered pattern whose
/// terminal element has size `σⁿ` relative to its parent, and neighbours
/// that acquire a hanging node are split into triangles fanned from it.
///
/// Elements at the corner get layers `0..=n` (`0` at the corner); all other
/// elements are tagged regular.
pub fn refine_geometric_corner(
    mesh: &Mesh2D,
    corner: Point2,
    grading: &GradingParams,
) -> Result<Mesh2D> {
    let c = mesh
        .find_vertex(corner)
        .ok_or_else(|| param("grading corner is not a vertex of the mesh"))?;
    let n = grading.layers;
    let sigma = grading.sigma;
    if sigma.powi(n as i32) < 1e-8 {
        return Err(param("innermost layer below vertex resolution; use fewer layers"));
    }
    let at_corner = mesh.elements_at(c);
    let mut b = Builder::default();
    for &k in &at_corner {
        let el = &mesh.elements[k];
        let v = element_points(mesh, k);
        let ci = el.vertices().iter().position(|&x| x == c).unwrap();
        match el.kind {
            ElementKind::Parallelogram => square_pattern(&mut b, &v, ci, sigma, n, el.kappa),
            ElementKind::Triangle => triangle_pattern(&mut b, &v, ci, sigma, n, el.kappa),
        }
    }
    let pattern_points = b.pool.points.clone();
    for (k, el) in mesh.elements.iter().enumerate() {
        if at_corner.contains(&k) {
            continue;
        }
        let v = element_points(mesh, k);
        let nv = v.len();
        let mut poly = Vec::with_capacity(nv + 2);
        let mut hanging = Vec::new();
        for i in 0..nv {
            let (p, q) = (v[i], v[(i + 1) % nv]);
            poly.push(p);
            let d = q - p;
            let len2 = d.dot(d);
            let mut on: Vec<(f64, Point2)> = pattern_points
                .iter()
                .filter_map(|&x| {
                    let t = (x - p).dot(d) / len2;
                    let off = (x - p).cross(d).abs() / len2.sqrt();
                    (off < 1e-11 && t > 1e-10 && t < 1.0 - 1e-10).then_some((t, x))
                })
                .collect();
            on.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for (_, x) in on {
                hanging.push(poly.len());
                poly.push(x);
            }
        }
        match hanging.len() {
            0 => b.push(&v, None, el.kappa),
            1 => {
                let h = hanging[0];
                let m = poly.len();
                for j in 1..m - 1 {
                    b.push(
                        &[poly[h], poly[(h + j) % m], poly[(h + j + 1) % m]],
                        None,
                        el.kappa,
                    );
                }
            }
            _ => {
                let mut centroid = Point2::default();
                for p in &v {
                    centroid = centroid + *p;
                }
                let centroid = centroid * (1.0 / nv as f64);
                let m = poly.len();
                for j in 0..m {
                    b.push(&[centroid, poly[j], poly[(j + 1) % m]], None, el.kappa);
                }
            }
        }
    }
    b.finish(mesh)
}

fn square_pattern(b: &mut Builder, v: &[Point2], ci: usize, sigma: f64, n: u32, kappa: f64) {
    let o = v[ci];
    let ea = v[(ci + 1) % 4] - o;
    let eb = v[(ci + 3) % 4] - o;
    let at = |a: f64, bb: f64| o + ea * a + eb * bb;
    let s = |k: u32| sigma.powi(k as i32);
    let t = s(n);
    b.push(&[at(0.0, 0.0), at(t, 0.0), at(t, t), at(0.0, t)], Some(0), kappa);
    for m in 0..n {
        let layer = Some(n - m);
        let (s0, s1) = (s(m + 1), s(m));
        b.push(&[at(s0, s0), at(s1, s0), at(s1, s1), at(s0, s1)], layer, kappa);
        if m + 2 <= n {
            // The inner ring splits the rectangles' inner edges once.
            let h = s(m + 2);
            for mirror in [false, true] {
                let p = |a: f64, bb: f64| if mirror { at(bb, a) } else { at(a, bb) };
                let (pa, pb, pc, pd, ph) = (p(s0, 0.0), p(s1, 0.0), p(s1, s0), p(s0, s0), p(s0, h));
                b.push(&oriented([pa, pb, ph]), layer, kappa);
                b.push(&oriented([ph, pb, pc]), layer, kappa);
                b.push(&oriented([ph, pc, pd]), layer, kappa);
            }
        } else {
            b.push(&[at(s0, 0.0), at(s1, 0.0), at(s1, s0), at(s0, s0)], layer, kappa);
            b.push(&[at(0.0, s0), at(s0, s0), at(s0, s1), at(0.0, s1)], layer, kappa);
        }
    }
}

fn triangle_pattern(b: &mut Builder, v: &[Point2], ci: usize, sigma: f64, n: u32, kappa: f64) {
    let o = v[ci];
    let ea = v[(ci + 1) % 3] - o;
    let eb = v[(ci + 2) % 3] - o;
    let s = |k: u32| sigma.powi(k as i32);
    let p = |k: u32| o + ea * s(k);
    let q = |k: u32| o + eb * s(k);
    b.push(&[o, p(n), q(n)], Some(0), kappa);
    for m in 0..n {
        let layer = Some(n - m);
        b.push(&[p(m + 1), p(m), q(m)], layer, kappa);
        b.push(&[p(m + 1), q(m), q(m + 1)], layer, kappa);
    }
}

fn oriented(t: [Point2; 3]) -> [Point2; 3] {
    if (t[1] - t[0]).cross(t[2] - t[0]) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::super::{TaggedSegment, Tag};
    use super::*;
    use alloc::vec;

    fn unit_square() -> Mesh2D {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let b = (0..4)
            .map(|i| TaggedSegment::new(v[i], v[(i + 1) % 4], Tag::Neumann))
            .collect();
        Mesh2D::new(v.clone(), vec![Element::parallelogram(0, 1, 2, 3)], b, v).unwrap()
    }

    fn two_by_two() -> Mesh2D {
        refine_uniform(&unit_square()).unwrap()
    }

    #[test]
    fn uniform_refinement_counts_and_area() {
        let m = two_by_two();
        assert_eq!(m.n_elements(), 4);
        assert_eq!(m.vertices.len(), 9);
        assert!((m.area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_grading_innermost_size() {
        let g = GradingParams::new(0.5, 4, 1.0).unwrap();
        let m = refine_geometric_corner(&unit_square(), Point2::new(0.0, 0.0), &g).unwrap();
        let inner: Vec<usize> = (0..m.n_elements())
            .filter(|&k| m.elements[k].layer == Some(0))
            .collect();
        assert_eq!(inner.len(), 1);
        let d = m.geometry(inner[0]).diameter;
        assert!((d - 2f64.sqrt() * 0.5f64.powi(4)).abs() < 1e-15);
        assert!((m.area() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_layers_only_tags() {
        let g = GradingParams::new(0.5, 0, 1.0).unwrap();
        let m = refine_geometric_corner(&two_by_two(), Point2::new(0.0, 0.0), &g).unwrap();
        assert_eq!(m.n_elements(), 4);
        assert_eq!(m.elements.iter().filter(|e| e.layer == Some(0)).count(), 1);
    }

    #[test]
    fn neighbours_of_graded_corner_are_closed() {
        let g = GradingParams::new(0.2, 3, 1.0).unwrap();
        let m = refine_geometric_corner(&two_by_two(), Point2::new(0.5, 0.5), &g).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-13);
        let m = refine_geometric_corner(&two_by_two(), Point2::new(0.0, 0.0), &g).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-13);
        let terminal = m
            .elements
            .iter()
            .position(|e| e.layer == Some(0))
            .unwrap();
        let side = m.geometry(terminal).diameter / 2f64.sqrt();
        assert!((side - 0.5 * 0.008).abs() < 1e-15);
    }

    #[test]
    fn corner_must_be_a_vertex() {
        let g = GradingParams::new(0.5, 2, 1.0).unwrap();
        assert!(refine_geometric_corner(&unit_square(), Point2::new(0.3, 0.0), &g).is_err());
    }
}
