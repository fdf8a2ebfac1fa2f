//! Domain decompositions of the two model problems.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;

use super::{
    refine_geometric_corner, refine_uniform, ArcPartition, BoundaryMesh, Element, GradingParams,
    Mesh2D, Point2, Tag, TaggedSegment, VertexPool,
};
use crate::error::param;
use crate::Result;

const fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

/// Square `[-1,1]²` with the BE block `[-1,0]×[-½,½]` attached to the
/// Dirichlet side `x = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareDecomposition {
    /// FE element size at the interface.
    pub fe_h: f64,
    /// Maximal BE panel length.
    pub be_h: f64,
    /// Use elements of twice the width in `x > 0`, away from the BE block.
    pub coarse_far_field: bool,
}

impl Default for SquareDecomposition {
    /// 32 finite elements of size 1/4 at the interface and 20 panels of
    /// length 1/5.
    fn default() -> Self {
        SquareDecomposition {
            fe_h: 0.25,
            be_h: 0.2,
            coarse_far_field: true,
        }
    }
}

fn breaks(pieces: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
    let mut out = alloc::vec![pieces[0].0];
    for &(a, b, h) in pieces {
        if !(h > 0.0 && h.is_finite()) {
            return Err(param("mesh size must be positive"));
        }
        let n = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(if k == n { b } else { a + (b - a) * k as f64 / n as f64 });
        }
    }
    Ok(out)
}

fn tensor_mesh(
    xs: &[f64],
    ys: &[f64],
    keep: impl Fn(Point2) -> bool,
    boundary: Vec<TaggedSegment>,
    corners: Vec<Point2>,
) -> Result<Mesh2D> {
    let mut pool = VertexPool::default();
    let mut elements = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..xs.len() - 1 {
            let c = p(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            if !keep(c) {
                continue;
            }
            let a = pool.insert(p(xs[i], ys[j]));
            let b = pool.insert(p(xs[i + 1], ys[j]));
            let cc = pool.insert(p(xs[i + 1], ys[j + 1]));
            let d = pool.insert(p(xs[i], ys[j + 1]));
            elements.push(Element::parallelogram(a, b, cc, d));
        }
    }
    Mesh2D::new(pool.points, elements, boundary, corners)
}

fn segments(chain: &[(Point2, Point2, Tag)]) -> Vec<TaggedSegment> {
    chain
        .iter()
        .map(|&(a, b, t)| TaggedSegment::new(a, b, t))
        .collect()
}

/// FE mesh of `Ω¹ = [-1,1]² \ Ω²` and BE mesh of `∂Ω²`,
/// `Ω² = [-1,0]×[-½,½]`, `Γ_D = {-1}×[-1,1]`.
pub fn build_square_decomposition(cfg: &SquareDecomposition) -> Result<(Mesh2D, BoundaryMesh)> {
    if !(cfg.fe_h > 0.0 && cfg.be_h > 0.0) {
        return Err(param("mesh sizes must be positive"));
    }
    let h = cfg.fe_h;
    let far = if cfg.coarse_far_field { 2.0 * h } else { h };
    let xs = breaks(&[(-1.0, 0.0, h), (0.0, 1.0, far)])?;
    let ys = breaks(&[(-1.0, -0.5, h), (-0.5, 0.5, h), (0.5, 1.0, h)])?;
    let in_block = |c: Point2| c.x < 0.0 && c.y.abs() < 0.5;
    let (d, n, i) = (Tag::Dirichlet, Tag::Neumann, Tag::Interface);
    let boundary = segments(&[
        (p(-1.0, -1.0), p(1.0, -1.0), n),
        (p(1.0, -1.0), p(1.0, 1.0), n),
        (p(1.0, 1.0), p(-1.0, 1.0), n),
        (p(-1.0, 1.0), p(-1.0, 0.5), d),
        (p(-1.0, -0.5), p(-1.0, -1.0), d),
        (p(-1.0, -0.5), p(0.0, -0.5), i),
        (p(0.0, -0.5), p(0.0, 0.5), i),
        (p(0.0, 0.5), p(-1.0, 0.5), i),
    ]);
    let corners = alloc::vec![
        p(-1.0, -1.0),
        p(1.0, -1.0),
        p(1.0, 1.0),
        p(-1.0, 1.0),
        p(-1.0, 0.5),
        p(0.0, 0.5),
        p(0.0, -0.5),
        p(-1.0, -0.5),
    ];
    let fe = tensor_mesh(&xs, &ys, |c| !in_block(c), boundary, corners)?;
    let be = BoundaryMesh::new(
        &[p(-1.0, -0.5), p(0.0, -0.5), p(0.0, 0.5), p(-1.0, 0.5)],
        &[i, i, i, d],
        ArcPartition::MaxLength(cfg.be_h),
    )?;
    Ok((fe, be))
}

/// Which of the two splittings of the L-shaped domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LShapeConfig {
    /// `Ω² = [-½,½]² \ [0,½]²` contains the reentrant corner.
    Encapsulated,
    /// The domain is cut along the diagonal from `(-1,-1)` to the origin.
    Split,
}

impl LShapeConfig {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(LShapeConfig::Encapsulated),
            2 => Ok(LShapeConfig::Split),
            _ => Err(param("unknown L-shape configuration (expected 1 or 2)")),
        }
    }
}

/// Meshes of `Ω = [-1,1]² \ [0,1]²` with `Γ_D = {0}×[0,1] ∪ [0,1]×{0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LShapeDecomposition {
    pub config: LShapeConfig,
    /// Uniform refinements of the coarse FE mesh.
    pub fe_levels: u32,
    /// Geometric FE refinement toward the origin (split configuration only).
    pub fe_grading: Option<GradingParams>,
    pub be: ArcPartition,
}

/// FE mesh of `Ω¹` and BE mesh of `∂Ω²` for the L-shaped domain.
///
/// The coarse FE mesh is the tensor mesh of size ½ for the encapsulated
/// configuration (9 squares) and one square plus one triangle for the
/// split configuration.
pub fn build_lshape_decomposition(cfg: &LShapeDecomposition) -> Result<(Mesh2D, BoundaryMesh)> {
    let (d, n, i) = (Tag::Dirichlet, Tag::Neumann, Tag::Interface);
    let (mut fe, be) = match cfg.config {
        LShapeConfig::Encapsulated => {
            let boundary = segments(&[
                (p(-1.0, -1.0), p(1.0, -1.0), n),
                (p(1.0, -1.0), p(1.0, 0.0), n),
                (p(1.0, 0.0), p(0.5, 0.0), d),
                (p(0.0, 0.5), p(0.0, 1.0), d),
                (p(0.0, 1.0), p(-1.0, 1.0), n),
                (p(-1.0, 1.0), p(-1.0, -1.0), n),
                (p(0.5, 0.0), p(0.5, -0.5), i),
                (p(0.5, -0.5), p(-0.5, -0.5), i),
                (p(-0.5, -0.5), p(-0.5, 0.5), i),
                (p(-0.5, 0.5), p(0.0, 0.5), i),
            ]);
            let corners = alloc::vec![
                p(-1.0, -1.0),
                p(1.0, -1.0),
                p(1.0, 0.0),
                p(0.5, 0.0),
                p(0.5, -0.5),
                p(-0.5, -0.5),
                p(-0.5, 0.5),
                p(0.0, 0.5),
                p(0.0, 1.0),
                p(-1.0, 1.0),
            ];
            let xs = breaks(&[(-1.0, 1.0, 0.5)])?;
            let in_l = |c: Point2| !(c.x > 0.0 && c.y > 0.0);
            let in_block = |c: Point2| c.x.abs() < 0.5 && c.y.abs() < 0.5 && in_l(c);
            let fe = tensor_mesh(&xs, &xs, |c| in_l(c) && !in_block(c), boundary, corners)?;
            let be = BoundaryMesh::new(
                &[
                    p(-0.5, -0.5),
                    p(0.5, -0.5),
                    p(0.5, 0.0),
                    p(0.0, 0.0),
                    p(0.0, 0.5),
                    p(-0.5, 0.5),
                ],
                &[i, i, d, d, i, i],
                cfg.be,
            )?;
            (fe, be)
        }
        LShapeConfig::Split => {
            let boundary = segments(&[
                (p(-1.0, -1.0), p(1.0, -1.0), n),
                (p(1.0, -1.0), p(1.0, 0.0), n),
                (p(1.0, 0.0), p(0.0, 0.0), d),
                (p(-1.0, -1.0), p(0.0, 0.0), i),
            ]);
            let vertices = alloc::vec![
                p(0.0, -1.0),
                p(1.0, -1.0),
                p(1.0, 0.0),
                p(0.0, 0.0),
                p(-1.0, -1.0),
            ];
            let corners = alloc::vec![p(-1.0, -1.0), p(1.0, -1.0), p(1.0, 0.0), p(0.0, 0.0)];
            let elements = alloc::vec![Element::parallelogram(0, 1, 2, 3), Element::triangle(3, 4, 0)];
            let fe = Mesh2D::new(vertices, elements, boundary, corners)?;
            let be = BoundaryMesh::new(
                &[p(0.0, 0.0), p(0.0, 1.0), p(-1.0, 1.0), p(-1.0, -1.0)],
                &[d, n, n, i],
                cfg.be,
            )?;
            (fe, be)
        }
    };
    for _ in 0..cfg.fe_levels {
        fe = refine_uniform(&fe)?;
    }
    if let Some(g) = cfg.fe_grading {
        if cfg.config != LShapeConfig::Split {
            return Err(param("FE grading toward the origin needs the split configuration"));
        }
        fe = refine_geometric_corner(&fe, p(0.0, 0.0), &g)?;
    }
    Ok((fe, be))
}
