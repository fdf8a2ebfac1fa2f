use hpcouple_core::analysis::jump_norm;
use hpcouple_core::geometry::LShapeConfig;
use hpcouple_core::nitsche::{formulation_gap, lifting_apply, lifting_norm2};
use hpcouple_core::problem::{
    assemble_problem, example1, example2_uniform, run, Discretization, ExactSolution, ProblemSetup,
    SolveOptions,
};
use hpcouple_core::space::DegreeVector;
use hpcouple_core::system::solve;
use hpcouple_core::Point2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Example 1 fixed mesh pair with mixed degrees, so that the minimum rule
/// and unequal degrees across the interface are exercised.
fn mixed_setup() -> ProblemSetup {
    let mut s = example1(0.25, 0.2, 2).unwrap();
    let fe: Vec<u32> = (0..s.fe_mesh.n_elements()).map(|k| 1 + (k % 3) as u32).collect();
    let be: Vec<u32> = (0..s.be_mesh.len()).map(|j| 1 + ((j + 1) % 4) as u32).collect();
    s.fe_degrees = DegreeVector::new(fe).unwrap();
    s.be_degrees = DegreeVector::new(be).unwrap();
    s
}

#[test]
fn consistency_terms_equal_lifted_form() {
    let setup = mixed_setup();
    let asm = assemble_problem(&setup, &SolveOptions::default()).unwrap();
    let d = &asm.disc;
    let ctx = d.context(&setup);
    let (b, c) = hpcouple_core::nitsche::assemble_interface(&ctx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (nf, nb) = (d.fe.n_dofs, d.be.n_dofs);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (u1, u2) = (random(&mut rng, nf), random(&mut rng, nb));
        let (p1, p2) = (random(&mut rng, nf), random(&mut rng, nb));
        let gap = formulation_gap(&ctx, &b, (&u1, &u2), (&p1, &p2), None).unwrap();
        let mut u = u1.clone();
        u.extend_from_slice(&u2);
        let mut p = p1.clone();
        p.extend_from_slice(&p2);
        let scale = (c.mul_vec(&u).iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
            * c.mul_vec(&p).iter().zip(&p).map(|(a, b)| a * b).sum::<f64>())
        .sqrt();
        worst = worst.max(gap / scale);
    }
    assert!(worst < 1e-10, "{worst:e}");

    // Control: a lifting space one degree too small breaks the identity.
    let low = DegreeVector::new(setup.fe_degrees.0.iter().map(|&p| p.saturating_sub(1).max(1)).collect()).unwrap();
    let mut worst_low: f64 = 0.0;
    for _ in 0..10 {
        let (u1, u2) = (random(&mut rng, nf), random(&mut rng, nb));
        let (p1, p2) = (random(&mut rng, nf), random(&mut rng, nb));
        let gap = formulation_gap(&ctx, &b, (&u1, &u2), (&p1, &p2), Some(&low)).unwrap();
        worst_low = worst_low.max(gap);
    }
    assert!(worst_low > 1e-4, "{worst_low:e}");
}

#[test]
fn lifting_is_bounded_by_jump() {
    let setup = mixed_setup();
    // η₀ = 1 turns the jump norm into the κ𝒢-weighted one.
    let d = Discretization::new(&setup, 1.0).unwrap();
    let ctx = d.context(&setup);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ratio: f64 = 0.0;
    for _ in 0..100 {
        let (v1, v2) = (random(&mut rng, d.fe.n_dofs), random(&mut rng, d.be.n_dofs));
        let l = lifting_apply(&ctx, &v1, &v2, None).unwrap();
        let j = jump_norm(&ctx, &v1, &v2);
        ratio = ratio.max(lifting_norm2(&ctx, &l) / (j * j));
    }
    assert!(ratio <= 1.0 + 1e-12, "{ratio}");
    assert!(ratio > 0.05, "bound far from attained: {ratio}");
}

#[test]
fn coercive_with_eta0_three() {
    let setup = mixed_setup();
    let opts = SolveOptions {
        eta0: 3.0,
        ..SolveOptions::default()
    };
    let asm = assemble_problem(&setup, &opts).unwrap();
    let d = &asm.disc;
    let ctx = d.context(&setup);
    let stiff = hpcouple_core::fem::assemble_stiffness(&setup.fe_mesh, &d.fe, &d.kappa).unwrap();
    let nf = d.fe.n_dofs;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let psi = random(&mut rng, asm.full.matrix.rows());
        let a = asm.full.matrix.bilinear(&psi, &psi);
        let (p1, p2) = psi.split_at(nf);
        let fe = stiff.mul_vec(p1).iter().zip(p1).map(|(a, b)| a * b).sum::<f64>();
        let be = asm.steklov.s_hat.bilinear(p2, p2);
        // η − 2κ𝒢 = η/3 for η₀ = 3.
        let j = jump_norm(&ctx, p1, p2);
        let norm = fe + be + j * j / 3.0;
        assert!(a >= 0.5 * norm * (1.0 - 1e-12), "{a} < 0.5 * {norm}");
    }
}

/// Independent evaluation of both traces at physical points.
fn traces(setup: &ProblemSetup, d: &Discretization, seg: usize, x: Point2, u: &[f64]) -> (f64, f64, [f64; 2]) {
    let s = &d.overlay.segments[seg];
    let geo = setup.fe_mesh.geometry(s.element);
    let (u1, g) = d.fe.eval(&setup.fe_mesh, &u[..d.fe.n_dofs], s.element, geo.map.to_reference(x));
    let panel = &setup.be_mesh.panels[s.panel];
    let t = (x - panel.a).dot(panel.b - panel.a) / panel.length().powi(2);
    let (u2, _) = d.be.eval(&setup.be_mesh, &u[d.fe.n_dofs..], s.panel, t);
    (u1, u2, g)
}

#[test]
fn interface_matrices_match_pointwise_oracle() {
    let setup = mixed_setup();
    let asm = assemble_problem(&setup, &SolveOptions::default()).unwrap();
    let d = &asm.disc;
    let (b, c) = hpcouple_core::nitsche::assemble_interface(&d.context(&setup)).unwrap();
    let n = d.fe.n_dofs + d.be.n_dofs;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Composite 3-point Gauss on 64 subintervals; the integrands have
    // degree up to 8, so the oracle error is O(64⁻⁶).
    let g3 = [(0.5 - 0.1 * 15f64.sqrt(), 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + 0.1 * 15f64.sqrt(), 5.0 / 18.0)];
    for _ in 0..5 {
        let (u, v) = (random(&mut rng, n), random(&mut rng, n));
        let (mut pen, mut flux) = (0.0, 0.0);
        for (i, s) in d.overlay.segments.iter().enumerate() {
            let normal = setup.fe_mesh.geometry(s.element).edge_normal(s.local_edge);
            let kappa = d.kappa.values[s.element];
            let len = s.a.dist(s.b);
            for m in 0..64 {
                for &(t, w) in &g3 {
                    let x = s.a.lerp(s.b, (m as f64 + t) / 64.0);
                    let ww = w * len / 64.0;
                    let (u1, u2, gu) = traces(&setup, d, i, x, &u);
                    let (v1, v2, gv) = traces(&setup, d, i, x, &v);
                    let qu = kappa * (gu[0] * normal.x + gu[1] * normal.y);
                    let qv = kappa * (gv[0] * normal.x + gv[1] * normal.y);
                    pen += s.eta * ww * (u1 - u2) * (v1 - v2);
                    flux -= ww * (qu * (v1 - v2) + qv * (u1 - u2));
                }
            }
        }
        let dot = |m: &hpcouple_core::linalg::CsrMatrix| m.mul_vec(&v).iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        assert!((dot(&c) - pen).abs() < 1e-9 * pen.abs().max(1.0), "{} vs {pen}", dot(&c));
        assert!((dot(&b) - flux).abs() < 1e-9 * flux.abs().max(1.0), "{} vs {flux}", dot(&b));
    }
}

#[test]
fn global_matrix_symmetry_and_zero_blocks() {
    let setup = mixed_setup();
    let asm = assemble_problem(&setup, &SolveOptions::default()).unwrap();
    let m = &asm.full.matrix;
    assert!(m.asymmetry() < 1e-12 * m.max_abs());
    let off = asm.full.partition.offsets();
    for i in off[0]..off[1] {
        for j in off[3]..off[4] {
            assert_eq!(m[(i, j)], 0.0);
            assert_eq!(m[(j, i)], 0.0);
        }
    }
}

#[test]
fn solution_is_invariant_under_reordering() {
    let setup = example1(0.5, 0.5, 2).unwrap();
    let asm = assemble_problem(&setup, &SolveOptions::default()).unwrap();
    let sys = &asm.reduced;
    let x = solve(sys).unwrap().stacked();
    let n = sys.matrix.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut permuted = sys.clone();
    permuted.matrix = sys.matrix.permuted(&perm);
    permuted.rhs = perm.iter().map(|&i| sys.rhs[i]).collect();
    permuted.partition = hpcouple_core::system::IndexPartition {
        fe_outer: n,
        fe_interface: 0,
        be_interface: 0,
        be_outer: 0,
    };
    let y = solve(&permuted).unwrap().stacked();
    for (k, &i) in perm.iter().enumerate() {
        assert!((y[k] - x[i]).abs() < 1e-10, "{} vs {}", y[k], x[i]);
    }
}

#[test]
fn affine_solutions_are_reproduced() {
    let exact = ExactSolution::Affine {
        a: 0.3,
        b: -1.1,
        c: 0.7,
    };
    let mut setups = vec![example1(0.25, 0.2, 1).unwrap(), mixed_setup()];
    setups.push(example2_uniform(LShapeConfig::Split, 1, 0.4, 2).unwrap());
    setups.push(example2_uniform(LShapeConfig::Encapsulated, 0, 0.3, 1).unwrap());
    for mut s in setups {
        s.exact = exact;
        let out = run(&s, &SolveOptions::default()).unwrap();
        assert!(out.errors.total < 1e-9, "{:?}", out.errors);
    }
}

#[test]
fn reported_errors_do_not_depend_on_bem_scaling() {
    let setup = example1(0.25, 0.2, 2).unwrap();
    let base = run(&setup, &SolveOptions::default()).unwrap().errors;
    for s in [0.1, 0.2, 0.3] {
        let opts = SolveOptions {
            bem_scale: Some(s),
            ..SolveOptions::default()
        };
        let e = run(&setup, &opts).unwrap().errors;
        for (a, b) in [(e.total, base.total), (e.be_energy, base.be_energy), (e.jump, base.jump)] {
            assert!((a - b).abs() < 1e-6 * b, "scale {s}: {a} vs {b}");
        }
    }
    let too_large = SolveOptions {
        bem_scale: Some(1.0),
        ..SolveOptions::default()
    };
    assert!(run(&setup, &too_large).is_err());
}
