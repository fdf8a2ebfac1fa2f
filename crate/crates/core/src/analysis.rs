//! Mesh-dependent norms, error measurement and convergence-rate fits.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::param;
use crate::fem::Coefficient;
use crate::geometry::{ElementKind, InterfaceOverlay, Mesh2D, Point2};
use crate::linalg::DenseMatrix;
use crate::nitsche::InterfaceContext;
use crate::quadrature::{collapsed_triangle_rule, gauss, graded_square_rule, GradedParams, QuadRule2d};
use crate::space::{element_rule, FeSpace};
use crate::Result;

/// Error components in the energy norm
/// `‖φ‖² = (κ∇φ¹, ∇φ¹) + ⟨Ŝφ², φ²⟩ + ‖[φ]‖²_η`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorBreakdown {
    pub fe_energy: f64,
    pub be_energy: f64,
    pub jump: f64,
    pub total: f64,
}

impl ErrorBreakdown {
    pub fn new(fe_energy: f64, be_energy: f64, jump: f64) -> Self {
        ErrorBreakdown {
            fe_energy,
            be_energy,
            jump,
            total: (fe_energy * fe_energy + be_energy * be_energy + jump * jump).sqrt(),
        }
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub study: String,
    pub step: usize,
    pub n_fe: usize,
    pub n_be: usize,
    pub h_max: f64,
    pub p_max: u32,
    pub sigma: f64,
    pub mu: f64,
    pub layers: u32,
    pub errors: ErrorBreakdown,
    /// Seconds; filled in by the driver.
    pub wall_time: f64,
}

impl ConvergenceRecord {
    pub fn n(&self) -> usize {
        self.n_fe + self.n_be
    }
}

/// `(Σ_seg η_seg ∫_seg φ²)^{1/2}` for a jump given pointwise per segment.
pub fn jump_norm_with(overlay: &InterfaceOverlay, points: usize, phi: impl Fn(usize, Point2) -> f64) -> f64 {
    let rule = gauss(points);
    let mut s = 0.0;
    for (i, seg) in overlay.segments.iter().enumerate() {
        let len = seg.length();
        for (t, w) in rule.iter() {
            let v = phi(i, seg.a.lerp(seg.b, t));
            s += seg.eta * w * len * v * v;
        }
    }
    s.sqrt()
}

/// `‖[v]‖_η` of a discrete pair. The exact solution is continuous, so this
/// is also the jump part of the error.
pub fn jump_norm(ctx: &InterfaceContext<'_>, u_fe: &[f64], u_be: &[f64]) -> f64 {
    let mut s = 0.0;
    for seg in &ctx.overlay.segments {
        for (jump, _, w) in ctx.jump_and_flux(seg, u_fe, u_be) {
            s += seg.eta * w * jump * jump;
        }
    }
    s.sqrt()
}

/// Quadrature on element `k`: graded toward `corner` if it is a vertex of
/// the element, Gauss with `2p + 4` points otherwise.
pub fn error_rule(mesh: &Mesh2D, k: usize, p: u32, corner: Option<Point2>) -> Result<QuadRule2d> {
    let geo = mesh.geometry(k);
    let nv = geo.kind.n_vertices();
    let at = corner.and_then(|c| {
        let tol = 1e-12 * geo.diameter;
        (0..nv).find(|&i| geo.corners[i].dist(c) <= tol)
    });
    let Some(v) = at else {
        return Ok(element_rule(geo.kind, 2 * p as usize + 4));
    };
    let graded = GradedParams::corner(p).rule()?;
    Ok(match geo.kind {
        ElementKind::Parallelogram => graded_square_rule(v, &graded),
        ElementKind::Triangle => collapsed_triangle_rule(&graded, &gauss(2 * p as usize + 4), v),
    })
}

/// `‖κ^{1/2} ∇(u − U¹)‖_{L²(Ω¹)}`.
pub fn fe_energy_error(
    mesh: &Mesh2D,
    space: &FeSpace,
    kappa: &Coefficient,
    coeffs: &[f64],
    grad_exact: impl Fn(Point2) -> [f64; 2],
    corner: Option<Point2>,
) -> Result<f64> {
    let mut s = 0.0;
    for k in 0..mesh.n_elements() {
        let geo = mesh.geometry(k);
        let det = geo.map.det().abs();
        let rule = error_rule(mesh, k, space.degrees.get(k), corner)?;
        let mut sk = 0.0;
        for (xi, w) in rule.iter() {
            let (_, g) = space.eval(mesh, coeffs, k, xi);
            let ge = grad_exact(geo.map.apply(xi));
            let (dx, dy) = (ge[0] - g[0], ge[1] - g[1]);
            sk += w * (dx * dx + dy * dy);
        }
        s += kappa.values[k] * det * sk;
    }
    Ok(s.sqrt())
}

/// Discrete surrogate `⟨Ŝ(I u² − U²), I u² − U²⟩^{1/2}` of the BE energy
/// error; `interpolant` are the coefficients of `I u²`.
pub fn be_energy_error(s_hat: &DenseMatrix, interpolant: &[f64], coeffs: &[f64]) -> f64 {
    let d: Vec<f64> = interpolant.iter().zip(coeffs).map(|(a, b)| a - b).collect();
    s_hat.bilinear(&d, &d).max(0.0).sqrt()
}

/// Straight-line fit `y = a + b x` with the Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Zero when either variable is constant.
    pub correlation: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(param("line fit needs at least two matching points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(param("line fit needs finite data"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(param("line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let correlation = if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        correlation,
    })
}

/// What the error is fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateVariable {
    /// `e ~ h^r`.
    MeshSize,
    /// `e ~ p^{-r}`.
    Degree,
}

/// Algebraic rate `r` in the study variable and `r_N` in `e ~ N^{-r_N}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicRate {
    pub rate: f64,
    pub n_rate: f64,
    pub correlation: f64,
}

/// Least-squares rates over at least three records.
pub fn fit_algebraic_rate(records: &[ConvergenceRecord], variable: RateVariable) -> Result<AlgebraicRate> {
    if records.len() < 3 {
        return Err(param("an algebraic rate needs at least 3 records"));
    }
    let ln = |v: f64| v.ln();
    let x: Vec<f64> = records
        .iter()
        .map(|r| match variable {
            RateVariable::MeshSize => ln(r.h_max),
            RateVariable::Degree => ln(r.p_max as f64),
        })
        .collect();
    let y: Vec<f64> = records.iter().map(|r| ln(r.errors.total)).collect();
    let n: Vec<f64> = records.iter().map(|r| ln(r.n() as f64)).collect();
    let fit = fit_line(&x, &y)?;
    let rate = match variable {
        RateVariable::MeshSize => fit.slope,
        RateVariable::Degree => -fit.slope,
    };
    Ok(AlgebraicRate {
        rate,
        n_rate: -fit_line(&n, &y)?.slope,
        correlation: fit.correlation.abs(),
    })
}

/// Root `θ` in `e ~ exp(-b N^θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofRoot {
    Square,
    Cube,
}

impl DofRoot {
    pub fn exponent(self) -> f64 {
        match self {
            DofRoot::Square => 0.5,
            DofRoot::Cube => 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialRate {
    /// Decay constant; positive for decaying errors.
    pub b: f64,
    /// `|r|` of the fit of `ln e` against `N^θ`.
    pub correlation: f64,
}

pub fn fit_exponential_rate(n: &[usize], errors: &[f64], root: DofRoot) -> Result<ExponentialRate> {
    if n.len() < 4 {
        return Err(param("an exponential rate needs at least 4 records"));
    }
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).powf(root.exponent())).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let fit = fit_line(&x, &y)?;
    Ok(ExponentialRate {
        b: -fit.slope,
        correlation: fit.correlation.abs(),
    })
}

/// `c = δ/(δ−1) · (η₀+1)/min(η₀−δ, 1)` for `1 < δ < η₀`.
pub fn quasi_optimality_constant(delta: f64, eta0: f64) -> Result<f64> {
    if !(delta > 1.0 && eta0 > delta && eta0.is_finite()) {
        return Err(param("need 1 < delta < eta0"));
    }
    Ok(delta / (delta - 1.0) * (eta0 + 1.0) / (eta0 - delta).min(1.0))
}
