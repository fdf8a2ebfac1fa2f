//! Model problems with known solutions and the assemble/solve pipeline.
//!
//! Dirichlet data are imposed strongly: both spaces are built without the
//! Dirichlet constraint, the modes on `Γ_D` are fixed to the interpolant of
//! the exact solution and eliminated from the system.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::analysis::{
    be_energy_error, fe_energy_error, jump_norm, ConvergenceRecord, ErrorBreakdown,
};
use crate::bem::{
    assemble_layers, check_scale, discrete_steklov, neumann_load, newton_rhs, LayerMatrices,
    ScaleTransform, SteklovMatrix,
};
use crate::error::param;
use crate::fem::{assemble_load, assemble_stiffness, Coefficient, LoadData};
use crate::geometry::{
    build_lshape_decomposition, build_square_decomposition, overlay, trace_partition_be,
    trace_partition_fe, ArcPartition, BoundaryMesh, GradingParams, InterfaceCurve,
    InterfaceOverlay, LShapeConfig, LShapeDecomposition, Mesh2D, Point2, SquareDecomposition,
};
use crate::linalg::DenseMatrix;
use crate::nitsche::{assemble_interface, stabilize, InterfaceContext, Stabilization, DEFAULT_ETA0};
use crate::space::{assign_linear_degrees, BeFluxSpace, BeTraceSpace, DegreeVector, FeSpace, LayerRule};
use crate::system::{assemble_global, solve, BlockSystem, Factorization, IndexPartition, SystemBlocks};
use crate::Result;

/// The two harmonic model solutions, plus affine functions for patch tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    /// `u = (x+1)/((x+1)² + (y+2)²)` on the square.
    SquareSmooth,
    /// `u = r^{2/3} sin(⅔(θ − π/2))` on the L-shape, `θ ∈ [π/2, 2π]`.
    LShapeCorner,
    /// `u = a + b x + c y`.
    Affine { a: f64, b: f64, c: f64 },
}

fn lshape_polar(p: Point2) -> (f64, f64) {
    let mut theta = p.y.atan2(p.x);
    if theta < FRAC_PI_2 {
        theta += 2.0 * PI;
    }
    (p.norm(), theta)
}

impl ExactSolution {
    pub fn value(self, p: Point2) -> f64 {
        match self {
            ExactSolution::SquareSmooth => {
                let (x, y) = (p.x + 1.0, p.y + 2.0);
                x / (x * x + y * y)
            }
            ExactSolution::LShapeCorner => {
                let (r, theta) = lshape_polar(p);
                r.powf(2.0 / 3.0) * (2.0 / 3.0 * (theta - FRAC_PI_2)).sin()
            }
            ExactSolution::Affine { a, b, c } => a + b * p.x + c * p.y,
        }
    }

    /// Gradient; zero at the singular point itself.
    pub fn gradient(self, p: Point2) -> [f64; 2] {
        match self {
            ExactSolution::SquareSmooth => {
                let (x, y) = (p.x + 1.0, p.y + 2.0);
                let r4 = (x * x + y * y).powi(2);
                [(y * y - x * x) / r4, -2.0 * x * y / r4]
            }
            ExactSolution::LShapeCorner => {
                let (r, theta) = lshape_polar(p);
                if r == 0.0 {
                    return [0.0, 0.0];
                }
                let phi = 2.0 / 3.0 * (theta - FRAC_PI_2);
                let c = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
                [c * (phi - theta).sin(), c * (phi - theta).cos()]
            }
            ExactSolution::Affine { b, c, .. } => [b, c],
        }
    }

    pub fn normal_derivative(self, p: Point2, n: Point2) -> f64 {
        let g = self.gradient(p);
        g[0] * n.x + g[1] * n.y
    }

    pub fn singular_corner(self) -> Option<Point2> {
        match self {
            ExactSolution::SquareSmooth | ExactSolution::Affine { .. } => None,
            ExactSolution::LShapeCorner => Some(Point2::new(0.0, 0.0)),
        }
    }
}

/// Meshes, degrees and data of one run.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub fe_mesh: Mesh2D,
    pub be_mesh: BoundaryMesh,
    pub fe_degrees: DegreeVector,
    pub be_degrees: DegreeVector,
    pub exact: ExactSolution,
    /// Grading metadata for reporting; zero for uniform meshes.
    pub sigma: f64,
    pub mu: f64,
    pub layers: u32,
}

impl ProblemSetup {
    pub fn h_max(&self) -> f64 {
        self.fe_mesh.h_max().max(self.be_mesh.h_max())
    }

    pub fn p_max(&self) -> u32 {
        self.fe_degrees.max().max(self.be_degrees.max())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub eta0: f64,
    /// Scale factor of the BE geometry; `None` picks one from the diameter.
    pub bem_scale: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eta0: DEFAULT_ETA0,
            bem_scale: None,
        }
    }
}

/// Spaces, interface overlay and stabilization of a setup.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub fe: FeSpace,
    pub be: BeTraceSpace,
    pub flux: BeFluxSpace,
    pub kappa: Coefficient,
    pub overlay: InterfaceOverlay,
    pub stabilization: Stabilization,
}

impl Discretization {
    pub fn new(setup: &ProblemSetup, eta0: f64) -> Result<Self> {
        let fe = FeSpace::unconstrained(&setup.fe_mesh, setup.fe_degrees.clone())?;
        let be = BeTraceSpace::unconstrained(&setup.be_mesh, setup.be_degrees.clone())?;
        let flux = BeFluxSpace::new(&setup.be_mesh, setup.be_degrees.clone())?;
        let kappa = Coefficient::from_mesh(&setup.fe_mesh);
        let curve = InterfaceCurve::from_boundary(&setup.be_mesh)?;
        let tf = trace_partition_fe(&setup.fe_mesh, &curve, &setup.fe_degrees.0)?;
        let tb = trace_partition_be(&setup.be_mesh, &curve, &setup.be_degrees.0)?;
        let mut ov = overlay(&tf, &tb, &curve)?;
        let stabilization = stabilize(&setup.fe_mesh, &fe, &kappa, &mut ov, eta0)?;
        Ok(Discretization {
            fe,
            be,
            flux,
            kappa,
            overlay: ov,
            stabilization,
        })
    }

    pub fn context<'a>(&'a self, setup: &'a ProblemSetup) -> InterfaceContext<'a> {
        InterfaceContext {
            fe_mesh: &setup.fe_mesh,
            fe: &self.fe,
            be_mesh: &setup.be_mesh,
            be: &self.be,
            overlay: &self.overlay,
            kappa: &self.kappa,
        }
    }

    /// Partition of the unconstrained index range.
    pub fn full_partition(&self) -> IndexPartition {
        IndexPartition {
            fe_outer: self.fe.n_outer,
            fe_interface: self.fe.n_interface(),
            be_interface: self.be.n_interface,
            be_outer: self.be.n_dofs - self.be.n_interface,
        }
    }
}

/// Assembles the layer matrices of the (rescaled) boundary mesh. The std
/// crate passes a parallel version.
pub type LayerAssembly<'a> = &'a dyn Fn(&BoundaryMesh, &BeTraceSpace, &BeFluxSpace) -> Result<LayerMatrices>;

/// The assembled problem before and after eliminating the Dirichlet modes.
#[derive(Debug, Clone)]
pub struct AssembledProblem {
    pub disc: Discretization,
    pub steklov: SteklovMatrix,
    pub full: BlockSystem,
    /// Global indices kept in `reduced`, increasing.
    pub free: Vec<usize>,
    /// Values of all unknowns on `Γ_D`, zero elsewhere.
    pub boundary_values: Vec<f64>,
    pub reduced: BlockSystem,
}

impl AssembledProblem {
    /// Full coefficient vector from the reduced unknowns.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut u = self.boundary_values.clone();
        for (&i, &v) in self.free.iter().zip(reduced) {
            u[i] = v;
        }
        u
    }
}

pub fn assemble_problem(setup: &ProblemSetup, opts: &SolveOptions) -> Result<AssembledProblem> {
    assemble_problem_with(setup, opts, &|m, t, f| assemble_layers(m, t, f))
}

pub fn assemble_problem_with(
    setup: &ProblemSetup,
    opts: &SolveOptions,
    layers: LayerAssembly<'_>,
) -> Result<AssembledProblem> {
    let disc = Discretization::new(setup, opts.eta0)?;
    let exact = setup.exact;
    let scale = match opts.bem_scale {
        Some(s) => {
            check_scale(&setup.be_mesh, s)?;
            ScaleTransform {
                center: setup.be_mesh.center(),
                s,
            }
        }
        None => ScaleTransform::for_boundary(&setup.be_mesh),
    };
    let scaled = scale.apply(&setup.be_mesh);
    let steklov = discrete_steklov(&layers(&scaled, &disc.be, &disc.flux)?)?;
    let stiffness = assemble_stiffness(&setup.fe_mesh, &disc.fe, &disc.kappa)?;
    let (coupling, penalty) = assemble_interface(&disc.context(setup))?;
    let g = |x: Point2, n: Point2| exact.normal_derivative(x, n);
    let fe_load = assemble_load(&setup.fe_mesh, &disc.fe, &LoadData { f: None, g: Some(&g) });
    let mut be_load = neumann_load(&setup.be_mesh, &disc.be, g);
    for (b, n) in be_load.iter_mut().zip(newton_rhs(&disc.be, None)?) {
        *b += n;
    }
    let partition = disc.full_partition();
    let full = assemble_global(
        partition,
        &SystemBlocks {
            stiffness: &stiffness,
            steklov: &steklov.s_hat,
            coupling: Some(&coupling),
            penalty: Some(&penalty),
            fe_load: &fe_load,
            be_load: &be_load,
        },
    )?;

    let nf = disc.fe.n_dofs;
    let n = partition.len();
    let mut boundary_values = vec![0.0; n];
    let mut fixed = vec![false; n];
    let u = |x: Point2| exact.value(x);
    if !disc.fe.dirichlet.is_empty() {
        let c = disc.fe.interpolate(&setup.fe_mesh, u)?;
        for &i in &disc.fe.dirichlet {
            boundary_values[i] = c[i];
            fixed[i] = true;
        }
    }
    if !disc.be.dirichlet.is_empty() {
        let c = disc.be.interpolate(&setup.be_mesh, u)?;
        for &i in &disc.be.dirichlet {
            boundary_values[nf + i] = c[i];
            fixed[nf + i] = true;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let off = partition.offsets();
    let count = |b: usize| free.iter().filter(|&&i| i >= off[b] && i < off[b + 1]).count();
    let reduced_partition = IndexPartition {
        fe_outer: count(0),
        fe_interface: count(1),
        be_interface: count(2),
        be_outer: count(3),
    };
    let shift = full.matrix.mul_vec(&boundary_values);
    let matrix = DenseMatrix::from_fn(free.len(), free.len(), |a, b| full.matrix[(free[a], free[b])]);
    let rhs = free.iter().map(|&i| full.rhs[i] - shift[i]).collect();
    let reduced = BlockSystem {
        matrix,
        rhs,
        partition: reduced_partition,
    };
    Ok(AssembledProblem {
        disc,
        steklov,
        full,
        free,
        boundary_values,
        reduced,
    })
}

/// Result of one assemble/solve/measure cycle.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Full coefficient vectors including the Dirichlet modes.
    pub fe: Vec<f64>,
    pub be: Vec<f64>,
    pub errors: ErrorBreakdown,
    /// Free unknowns of each subproblem; `N_BE` counts trace unknowns only.
    pub n_fe: usize,
    pub n_be: usize,
    pub h_max: f64,
    pub p_max: u32,
    pub residual: f64,
    pub asymmetry: f64,
    pub factorization: Factorization,
    /// `η₀ ≤ 1`: outside the range covered by the coercivity argument.
    pub below_theory: bool,
}

impl RunOutcome {
    pub fn record(&self, setup: &ProblemSetup, study: &str, step: usize) -> ConvergenceRecord {
        ConvergenceRecord {
            study: String::from(study),
            step,
            n_fe: self.n_fe,
            n_be: self.n_be,
            h_max: self.h_max,
            p_max: self.p_max,
            sigma: setup.sigma,
            mu: setup.mu,
            layers: setup.layers,
            errors: self.errors,
            wall_time: 0.0,
        }
    }
}

pub fn run(setup: &ProblemSetup, opts: &SolveOptions) -> Result<RunOutcome> {
    run_with(setup, opts, &|m, t, f| assemble_layers(m, t, f))
}

pub fn run_with(setup: &ProblemSetup, opts: &SolveOptions, layers: LayerAssembly<'_>) -> Result<RunOutcome> {
    let asm = assemble_problem_with(setup, opts, layers)?;
    let sol = solve(&asm.reduced)?;
    let u = asm.expand(&sol.stacked());
    let nf = asm.disc.fe.n_dofs;
    let (fe, be) = (u[..nf].to_vec(), u[nf..].to_vec());
    let errors = measure_errors(setup, &asm, &fe, &be)?;
    Ok(RunOutcome {
        fe,
        be,
        errors,
        n_fe: asm.reduced.partition.n_fe(),
        n_be: asm.reduced.partition.n_be(),
        h_max: setup.h_max(),
        p_max: setup.p_max(),
        residual: sol.residual,
        asymmetry: asm.reduced.matrix.asymmetry(),
        factorization: sol.factorization,
        below_theory: asm.disc.stabilization.below_theory(),
    })
}

/// Energy-norm error of the discrete pair `(fe, be)` against the exact
/// solution of the setup.
pub fn measure_errors(setup: &ProblemSetup, asm: &AssembledProblem, fe: &[f64], be: &[f64]) -> Result<ErrorBreakdown> {
    let exact = setup.exact;
    let fe_err = fe_energy_error(
        &setup.fe_mesh,
        &asm.disc.fe,
        &asm.disc.kappa,
        fe,
        |x| exact.gradient(x),
        exact.singular_corner(),
    )?;
    let interp = asm.disc.be.interpolate(&setup.be_mesh, |x| exact.value(x))?;
    let be_err = be_energy_error(&asm.steklov.s_hat, &interp, be);
    // The exact solution is continuous across Γ_I.
    let jump = jump_norm(&asm.disc.context(setup), fe, be);
    Ok(ErrorBreakdown::new(fe_err, be_err, jump))
}

/// Example 1 on the square: uniform degree `p` on both meshes.
pub fn example1(fe_h: f64, be_h: f64, p: u32) -> Result<ProblemSetup> {
    let (fe_mesh, be_mesh) = build_square_decomposition(&SquareDecomposition {
        fe_h,
        be_h,
        coarse_far_field: true,
    })?;
    uniform_setup(fe_mesh, be_mesh, p, ExactSolution::SquareSmooth)
}

fn uniform_setup(fe_mesh: Mesh2D, be_mesh: BoundaryMesh, p: u32, exact: ExactSolution) -> Result<ProblemSetup> {
    if p == 0 {
        return Err(param("polynomial degree must be at least 1"));
    }
    Ok(ProblemSetup {
        fe_degrees: DegreeVector::uniform(fe_mesh.n_elements(), p)?,
        be_degrees: DegreeVector::uniform(be_mesh.len(), p)?,
        fe_mesh,
        be_mesh,
        exact,
        sigma: 0.0,
        mu: 0.0,
        layers: 0,
    })
}

/// Example 2 on quasi-uniform meshes: `fe_levels` uniform refinements of
/// the coarse FE mesh, panels no longer than `be_h`, uniform degree `p`.
pub fn example2_uniform(config: LShapeConfig, fe_levels: u32, be_h: f64, p: u32) -> Result<ProblemSetup> {
    let (fe_mesh, be_mesh) = build_lshape_decomposition(&LShapeDecomposition {
        config,
        fe_levels,
        fe_grading: None,
        be: ArcPartition::MaxLength(be_h),
    })?;
    uniform_setup(fe_mesh, be_mesh, p, ExactSolution::LShapeCorner)
}

/// Grading of the hp meshes of Example 2: `layers` geometric layers, factor
/// `σ` and degree slope `μ` on each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpGrading {
    pub layers: u32,
    pub fe_sigma: f64,
    pub fe_mu: f64,
    pub be_sigma: f64,
    pub be_mu: f64,
}

impl HpGrading {
    pub fn uniform(layers: u32, sigma: f64, mu: f64) -> Self {
        HpGrading {
            layers,
            fe_sigma: sigma,
            fe_mu: mu,
            be_sigma: sigma,
            be_mu: mu,
        }
    }
}

/// Example 2 on geometric meshes with linear degree vectors.
///
/// The panels are graded toward the arc endpoints. For the encapsulated
/// configuration the FE subdomain stays away from the singularity and gets
/// the uniform degree of the outermost layer; for the split configuration
/// the FE mesh is graded toward the origin as well. The reported `σ`, `μ`
/// are those of the side that contains the singular corner in its interior
/// grading: BE for the encapsulated, FE for the split configuration.
pub fn example2_hp(config: LShapeConfig, g: HpGrading) -> Result<ProblemSetup> {
    let n = g.layers;
    if n == 0 {
        return Err(param("hp meshes need at least one layer"));
    }
    let fe_grading = GradingParams::new(g.fe_sigma, n, g.fe_mu)?;
    let be_grading = GradingParams::new(g.be_sigma, n, g.be_mu)?;
    let (fe_mesh, be_mesh) = build_lshape_decomposition(&LShapeDecomposition {
        config,
        fe_levels: 0,
        fe_grading: (config == LShapeConfig::Split).then_some(fe_grading),
        be: ArcPartition::Graded {
            sigma: be_grading.sigma,
            layers: n,
        },
    })?;
    let panel_layers: Vec<_> = be_mesh.panels.iter().map(|p| p.layer).collect();
    let be_degrees = assign_linear_degrees(&panel_layers, n, be_grading.slope, LayerRule::Boundary)?;
    let (fe_degrees, reported) = match config {
        LShapeConfig::Encapsulated => {
            let top = assign_linear_degrees(&[None], n, fe_grading.slope, LayerRule::Domain)?.get(0);
            (DegreeVector::uniform(fe_mesh.n_elements(), top)?, be_grading)
        }
        LShapeConfig::Split => {
            let layers: Vec<_> = fe_mesh.elements.iter().map(|e| e.layer).collect();
            (
                assign_linear_degrees(&layers, n, fe_grading.slope, LayerRule::Domain)?,
                fe_grading,
            )
        }
    };
    Ok(ProblemSetup {
        fe_mesh,
        be_mesh,
        fe_degrees,
        be_degrees,
        exact: ExactSolution::LShapeCorner,
        sigma: reported.sigma,
        mu: reported.slope,
        layers: n,
    })
}
