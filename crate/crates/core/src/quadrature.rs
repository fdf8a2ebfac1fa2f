//! Quadrature rules on the reference elements.
//!
//! Reference interval is `[0, 1]`, reference triangle the unit right
//! triangle with vertices `(0,0), (1,0), (0,1)`, reference square `[0, 1]²`.

use alloc::vec::Vec;

use crate::error::param;
use crate::poly::gauss_nodes;
use crate::Result;

/// One-dimensional rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// The rule affinely mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> QuadRule {
        let h = b - a;
        QuadRule {
            nodes: self.nodes.iter().map(|x| a + h * x).collect(),
            weights: self.weights.iter().map(|w| h * w).collect(),
        }
    }
}

/// Two-dimensional rule on a reference element.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule2d {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule2d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `n`-point Gauss–Legendre rule on `[0, 1]`, exact up to degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    if n == 0 {
        return Err(param("Gauss rule needs at least one point"));
    }
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    gauss_nodes(n, &mut x, &mut w);
    Ok(QuadRule {
        nodes: x.iter().map(|xi| 0.5 * (xi + 1.0)).collect(),
        weights: w.iter().map(|wi| 0.5 * wi).collect(),
    })
}

pub(crate) fn gauss(n: usize) -> QuadRule {
    gauss_legendre(n.max(1)).expect("n >= 1")
}

/// Composite Gauss rule on the geometric partition `x_j = σ^{layers+1-j}`
/// of `[0, 1]`, graded toward 0. Integrates `x^α`, `ln x` and similar
/// endpoint singularities at 0 to high relative accuracy.
pub fn graded_rule(sigma: f64, layers: usize, per_cell_order: usize) -> Result<QuadRule> {
    let breaks = crate::geometry::geometric_partition_1d(sigma, layers)?;
    if per_cell_order == 0 {
        return Err(param("per-cell order must be positive"));
    }
    let base = gauss(per_cell_order);
    let mut nodes = Vec::with_capacity(base.len() * (layers + 1));
    let mut weights = Vec::with_capacity(base.len() * (layers + 1));
    for cell in breaks.windows(2) {
        let r = base.mapped(cell[0], cell[1]);
        nodes.extend_from_slice(&r.nodes);
        weights.extend_from_slice(&r.weights);
    }
    Ok(QuadRule { nodes, weights })
}

/// Parameters of a graded rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedParams {
    pub sigma: f64,
    pub layers: usize,
    pub order: usize,
}

impl GradedParams {
    /// Grading used for error integrals near `r^α` corner singularities.
    pub fn corner(degree: u32) -> Self {
        GradedParams {
            sigma: 0.15,
            layers: 20,
            order: (2 * degree as usize + 2).max(8),
        }
    }

    pub fn rule(&self) -> Result<QuadRule> {
        graded_rule(self.sigma, self.layers, self.order)
    }
}

/// Tensor Gauss rule with `n × n` points on the unit square.
pub fn square_rule(n: usize) -> QuadRule2d {
    tensor(&gauss(n), &gauss(n))
}

fn tensor(a: &QuadRule, b: &QuadRule) -> QuadRule2d {
    let mut nodes = Vec::with_capacity(a.len() * b.len());
    let mut weights = Vec::with_capacity(a.len() * b.len());
    for (x, wx) in a.iter() {
        for (y, wy) in b.iter() {
            nodes.push([x, y]);
            weights.push(wx * wy);
        }
    }
    QuadRule2d { nodes, weights }
}

/// Tensor rule on the unit square whose first factor is graded toward the
/// given reference vertex `(0,0), (1,0), (1,1), (0,1)` in both directions.
pub fn graded_square_rule(corner: usize, graded: &QuadRule) -> QuadRule2d {
    let mut r = tensor(graded, graded);
    for n in r.nodes.iter_mut() {
        let [x, y] = *n;
        *n = match corner % 4 {
            0 => [x, y],
            1 => [1.0 - x, y],
            2 => [1.0 - x, 1.0 - y],
            _ => [x, 1.0 - y],
        };
    }
    r
}

/// Collapsed (Duffy) rule on the reference triangle, with the collapsed
/// edge mapped to the reference vertex `apex`. The radial rule carries the
/// Jacobian factor, so a graded radial rule resolves singularities at the
/// apex.
pub fn collapsed_triangle_rule(radial: &QuadRule, angular: &QuadRule, apex: usize) -> QuadRule2d {
    let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let a = verts[apex % 3];
    let b = verts[(apex + 1) % 3];
    let c = verts[(apex + 2) % 3];
    let mut nodes = Vec::with_capacity(radial.len() * angular.len());
    let mut weights = Vec::with_capacity(radial.len() * angular.len());
    for (r, wr) in radial.iter() {
        for (s, ws) in angular.iter() {
            let px = a[0] + r * ((b[0] - a[0]) * (1.0 - s) + (c[0] - a[0]) * s);
            let py = a[1] + r * ((b[1] - a[1]) * (1.0 - s) + (c[1] - a[1]) * s);
            nodes.push([px, py]);
            // |det(b - a, c - a)| = 1 for the unit triangle.
            weights.push(wr * ws * r);
        }
    }
    QuadRule2d { nodes, weights }
}

/// Rule on the reference triangle exact for polynomials of degree
/// `2n - 2` in the collapsed coordinates.
pub fn triangle_rule(n: usize) -> QuadRule2d {
    collapsed_triangle_rule(&gauss(n + 1), &gauss(n), 0)
}

/// Geometric relation of two panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    Identical,
    /// Panels share exactly one endpoint.
    Adjacent,
    Disjoint,
}

/// Quadrature node for a double integral over `[0,1]²`.
///
/// `diff` holds `s - t` computed without cancellation; it is only
/// meaningful for identical panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairNode {
    pub s: f64,
    pub t: f64,
    pub diff: f64,
    pub w: f64,
}

/// Orders of a panel-pair rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOrders {
    /// Outer direction of the singular cases, where the integrand behaves
    /// like `r ln r`.
    pub outer: GradedParams,
    /// Inner direction of the identical case, carrying `ln r`.
    pub log: GradedParams,
    /// Gauss points in the smooth inner direction of the adjacent case.
    pub smooth: usize,
    /// Gauss points per direction for disjoint panels.
    pub regular: usize,
}

impl Default for PairOrders {
    /// Relative accuracy about `1e-12` for polynomial densities up to
    /// degree 8.
    fn default() -> Self {
        PairOrders {
            outer: GradedParams {
                sigma: 0.3,
                layers: 8,
                order: 10,
            },
            log: GradedParams {
                sigma: 0.15,
                layers: 14,
                order: 16,
            },
            smooth: 20,
            regular: 10,
        }
    }
}

impl PairOrders {
    /// Orders raised so that densities of degrees `pa` and `pb` stay
    /// resolved.
    pub fn for_degrees(&self, pa: u32, pb: u32) -> PairOrders {
        let half = (pa + pb) as usize / 2;
        let mut o = *self;
        o.outer.order = o.outer.order.max(half + 4);
        o.log.order = o.log.order.max(half + 8);
        o.smooth = o.smooth.max(half + 12);
        o.regular = o.regular.max(half + 6);
        o
    }
}

/// Product rule for `∫₀¹∫₀¹ F(s, t) ds dt` over a panel pair.
///
/// * `Identical`: `F` may be log-singular on the diagonal `s = t`.
/// * `Adjacent`: the shared endpoint sits at `s = 0` on the first panel and
///   `t = 0` on the second; `F` may be log-singular or `1/r`-singular there.
/// * `Disjoint`: plain tensor Gauss.
pub fn panel_pair_rule(relation: PairRelation, orders: &PairOrders) -> Result<Vec<PairNode>> {
    match relation {
        PairRelation::Identical => {
            let graded = orders.outer.rule()?;
            let log = orders.log.rule()?;
            let mut out = Vec::with_capacity(2 * graded.len() * log.len());
            for (outer, wo) in graded.iter() {
                for (v, wv) in log.iter() {
                    let inner = outer * (1.0 - v);
                    let diff = outer * v;
                    let w = wo * wv * outer;
                    out.push(PairNode {
                        s: outer,
                        t: inner,
                        diff,
                        w,
                    });
                    out.push(PairNode {
                        s: inner,
                        t: outer,
                        diff: -diff,
                        w,
                    });
                }
            }
            Ok(out)
        }
        PairRelation::Adjacent => {
            let graded = orders.outer.rule()?;
            let smooth = gauss_legendre(orders.smooth)?;
            let mut out = Vec::with_capacity(2 * graded.len() * smooth.len());
            for (outer, wo) in graded.iter() {
                for (u, wu) in smooth.iter() {
                    let inner = outer * u;
                    let w = wo * wu * outer;
                    out.push(PairNode {
                        s: outer,
                        t: inner,
                        diff: outer - inner,
                        w,
                    });
                    out.push(PairNode {
                        s: inner,
                        t: outer,
                        diff: inner - outer,
                        w,
                    });
                }
            }
            Ok(out)
        }
        PairRelation::Disjoint => {
            let r = gauss_legendre(orders.regular)?;
            let mut out = Vec::with_capacity(r.len() * r.len());
            for (s, ws) in r.iter() {
                for (t, wt) in r.iter() {
                    out.push(PairNode {
                        s,
                        t,
                        diff: s - t,
                        w: ws * wt,
                    });
                }
            }
            Ok(out)
        }
    }
}
