//! Stiffness matrix and load vector of the FE subdomain.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{Mesh2D, Point2, Tag};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::quadrature::gauss;
use crate::space::{element_rule, FeSpace};
use crate::{Error, Result};

/// Piecewise constant diffusion coefficient `κ_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl Coefficient {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(crate::error::param("coefficient kappa must be positive"));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(0.0, f64::max);
        Ok(Coefficient { values, min, max })
    }

    /// The values carried by the mesh elements.
    pub fn from_mesh(mesh: &Mesh2D) -> Self {
        Self::new(mesh.elements.iter().map(|e| e.kappa).collect()).expect("mesh validates kappa")
    }

    pub fn constant(n: usize, kappa: f64) -> Result<Self> {
        Self::new(vec![kappa; n])
    }
}

/// Gauss points per direction for a pairing of two degree-`p` functions.
pub(crate) fn pairing_points(p: u32) -> usize {
    2 * p as usize + 2
}

/// `κ_K ∫_K ∇φ_i · ∇φ_j` over the local modes of element `k`.
pub fn element_stiffness(mesh: &Mesh2D, space: &FeSpace, k: usize, kappa: f64) -> DenseMatrix {
    let geo = mesh.geometry(k);
    let inv = geo.map.inverse_jac();
    let det = geo.map.det().abs();
    let basis = &space.elements[k].basis;
    let n = basis.len();
    let rule = element_rule(basis.kind, pairing_points(basis.degree));
    let mut a = DenseMatrix::zeros(n, n);
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut phys = vec![[0.0; 2]; n];
    for (xi, w) in rule.iter() {
        basis.eval(xi, &mut vals, &mut grads);
        for i in 0..n {
            phys[i] = geo.map.push_gradient(&inv, grads[i]);
        }
        let s = kappa * w * det;
        for i in 0..n {
            for j in 0..=i {
                a[(i, j)] += s * (phys[i][0] * phys[j][0] + phys[i][1] * phys[j][1]);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
        }
    }
    a
}

/// Scatters element matrices (in element order) into a sparse global
/// matrix. Constrained modes are dropped.
pub fn scatter(space: &FeSpace, locals: &[DenseMatrix]) -> CsrMatrix {
    let mut t = Vec::new();
    for (k, a) in locals.iter().enumerate() {
        let dofs = &space.elements[k].dofs;
        for (i, di) in dofs.iter().enumerate() {
            let Some(gi) = di else { continue };
            for (j, dj) in dofs.iter().enumerate() {
                let Some(gj) = dj else { continue };
                t.push((*gi, *gj, a[(i, j)]));
            }
        }
    }
    CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, t)
}

/// The stiffness matrix `𝒜` of `(κ∇u, ∇v)_{Ω¹}`.
pub fn assemble_stiffness(mesh: &Mesh2D, space: &FeSpace, kappa: &Coefficient) -> Result<CsrMatrix> {
    if kappa.values.len() != mesh.n_elements() {
        return Err(Error::Dimension {
            expected: mesh.n_elements(),
            found: kappa.values.len(),
        });
    }
    let locals: Vec<DenseMatrix> = (0..mesh.n_elements())
        .map(|k| element_stiffness(mesh, space, k, kappa.values[k]))
        .collect();
    Ok(scatter(space, &locals))
}

/// Volume source `f` and Neumann flux `g(x, n)` on `Γ¹_N`, where `n` is the
/// outward unit normal.
pub struct LoadData<'a> {
    pub f: Option<&'a dyn Fn(Point2) -> f64>,
    pub g: Option<&'a dyn Fn(Point2, Point2) -> f64>,
}

/// `(f, φ)_{Ω¹} + ⟨g, φ⟩_{Γ¹_N}`.
pub fn assemble_load(mesh: &Mesh2D, space: &FeSpace, data: &LoadData<'_>) -> Vec<f64> {
    let mut b = vec![0.0; space.n_dofs];
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    for k in 0..mesh.n_elements() {
        let ed = &space.elements[k];
        let geo = mesh.geometry(k);
        if let Some(f) = data.f {
            let det = geo.map.det().abs();
            let rule = element_rule(ed.basis.kind, ed.basis.degree as usize + 4);
            for (xi, w) in rule.iter() {
                ed.basis.eval(xi, &mut vals, &mut grads);
                let fx = f(geo.map.apply(xi)) * w * det;
                for (i, d) in ed.dofs.iter().enumerate() {
                    if let Some(d) = d {
                        b[*d] += fx * vals[i];
                    }
                }
            }
        }
        let Some(g) = data.g else { continue };
        for e in 0..geo.kind.n_vertices() {
            if mesh.edge_tag(k, e) != Some(Tag::Neumann) {
                continue;
            }
            let len = geo.edge_length(e);
            let normal = geo.edge_normal(e);
            let rule = gauss(pairing_points(ed.basis.degree) + 2);
            for (t, w) in rule.iter() {
                let xi = edge_point(geo.kind, e, t);
                ed.basis.eval(xi, &mut vals, &mut grads);
                let gx = g(geo.map.apply(xi), normal) * w * len;
                for (i, d) in ed.dofs.iter().enumerate() {
                    if let Some(d) = d {
                        b[*d] += gx * vals[i];
                    }
                }
            }
        }
    }
    b
}

/// Reference point at parameter `t` along local edge `e`.
pub fn edge_point(kind: crate::geometry::ElementKind, e: usize, t: f64) -> [f64; 2] {
    use crate::geometry::ElementKind::*;
    match (kind, e) {
        (Triangle, 0) => [t, 0.0],
        (Triangle, 1) => [1.0 - t, t],
        (Triangle, _) => [0.0, 1.0 - t],
        (Parallelogram, 0) => [t, 0.0],
        (Parallelogram, 1) => [1.0, t],
        (Parallelogram, 2) => [1.0 - t, 1.0],
        (Parallelogram, _) => [0.0, 1.0 - t],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Element, TaggedSegment};
    use crate::space::DegreeVector;

    fn unit_square(tag: Tag) -> Mesh2D {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let b = (0..4).map(|i| TaggedSegment::new(v[i], v[(i + 1) % 4], tag)).collect();
        Mesh2D::new(v.clone(), vec![Element::parallelogram(0, 1, 2, 3)], b, v).unwrap()
    }

    #[test]
    fn bilinear_square_stiffness() {
        let m = unit_square(Tag::Neumann);
        let s = FeSpace::new(&m, DegreeVector::uniform(1, 1).unwrap()).unwrap();
        let a = assemble_stiffness(&m, &s, &Coefficient::from_mesh(&m)).unwrap().to_dense();
        // Hand computation: 2/3 on the diagonal, -1/6 along edges, -1/3
        // across the diagonal.
        let want = [
            [4.0, -1.0, -2.0, -1.0],
            [-1.0, 4.0, -1.0, -2.0],
            [-2.0, -1.0, 4.0, -1.0],
            [-1.0, -2.0, -1.0, 4.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((a[(i, j)] - want[i][j] / 6.0).abs() < 1e-14);
            }
        }
        let ten = assemble_stiffness(&m, &s, &Coefficient::constant(1, 10.0).unwrap()).unwrap();
        assert!((ten.to_dense()[(0, 0)] - 10.0 * a[(0, 0)]).abs() < 1e-13);
        let ones = a.mul_vec(&[1.0; 4]);
        assert!(ones.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn unit_source_load() {
        let m = unit_square(Tag::Neumann);
        let s = FeSpace::new(&m, DegreeVector::uniform(1, 1).unwrap()).unwrap();
        let one = |_: Point2| 1.0;
        let b = assemble_load(&m, &s, &LoadData { f: Some(&one), g: None });
        assert!(b.iter().all(|v| (v - 0.25).abs() < 1e-15));
        let zero = assemble_load(&m, &s, &LoadData { f: None, g: None });
        assert!(zero.iter().all(|&v| v == 0.0));
    }
}
