//! Quick self-checks run by `hpcouple verify`.

use std::f64::consts::PI;

use hpcouple_core::analysis::{jump_norm, quasi_optimality_constant};
use hpcouple_core::bem::assemble_layers;
use hpcouple_core::geometry::{ArcPartition, BoundaryMesh, Tag};
use hpcouple_core::nitsche::{assemble_interface, formulation_gap, lifting_apply, lifting_norm2};
use hpcouple_core::problem::{assemble_problem, example1, run, Discretization, SolveOptions};
use hpcouple_core::space::{BeFluxSpace, BeTraceSpace, DegreeVector};
use hpcouple_core::system::Factorization;
use hpcouple_core::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            value,
            limit,
            passed: value < limit,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{s} {:<28} {:.3e} (limit {:.1e})", self.name, self.value, self.limit)
    }
}

fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the checks on small meshes; takes a few seconds.
pub fn quick_checks(seed: u64) -> hpcouple_core::Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let setup = example1(0.5, 0.5, 2)?;
    let asm = assemble_problem(&setup, &SolveOptions::default())?;
    let ctx = asm.disc.context(&setup);
    let (b, c) = assemble_interface(&ctx)?;
    let (nf, nb) = (asm.disc.fe.n_dofs, asm.disc.be.n_dofs);
    let mut gap: f64 = 0.0;
    for _ in 0..20 {
        let (u1, u2, p1, p2) = (random(&mut rng, nf), random(&mut rng, nb), random(&mut rng, nf), random(&mut rng, nb));
        let g = formulation_gap(&ctx, &b, (&u1, &u2), (&p1, &p2), None)?;
        let u = [u1, u2].concat();
        let p = [p1, p2].concat();
        gap = gap.max(g / (dot(&c.mul_vec(&u), &u) * dot(&c.mul_vec(&p), &p)).sqrt());
    }
    out.push(Check::below("consistency gap (relative)", gap, 1e-10));

    let d1 = Discretization::new(&setup, 1.0)?;
    let ctx1 = d1.context(&setup);
    let mut ratio: f64 = 0.0;
    for _ in 0..20 {
        let (v1, v2) = (random(&mut rng, d1.fe.n_dofs), random(&mut rng, d1.be.n_dofs));
        let l = lifting_apply(&ctx1, &v1, &v2, None)?;
        let j = jump_norm(&ctx1, &v1, &v2);
        ratio = ratio.max(lifting_norm2(&ctx1, &l) / (j * j));
    }
    out.push(Check::below("lifting / jump bound", ratio, 1.0 + 1e-12));

    let mut self_entry: f64 = 0.0;
    let mut w_one: f64 = 0.0;
    for h in [1.0, 0.5, 0.1] {
        let tri = [Point2::new(0.0, 0.0), Point2::new(h, 0.0), Point2::new(0.3 * h, 0.8 * h)];
        let mesh = BoundaryMesh::new(&tri, &[Tag::Interface; 3], ArcPartition::MaxLength(10.0))?;
        let deg = DegreeVector::uniform(mesh.len(), 2)?;
        let trace = BeTraceSpace::unconstrained(&mesh, deg.clone())?;
        let flux = BeFluxSpace::new(&mesh, deg)?;
        let l = assemble_layers(&mesh, &trace, &flux)?;
        let want = h * h * (1.5 - h.ln()) / (2.0 * PI);
        self_entry = self_entry.max((l.v[(0, 0)] - want).abs() / want);
        let one = trace.interpolate(&mesh, |_| 1.0)?;
        w_one = w_one.max(l.w.mul_vec(&one).iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    out.push(Check::below("single layer self entry", self_entry, 1e-9));
    out.push(Check::below("hypersingular kernel on 1", w_one, 1e-10));

    let c = quasi_optimality_constant(1.0 + 3f64.sqrt(), 2.0 + 3f64.sqrt())?;
    let want = 2.0 * (2.0 + 3f64.sqrt());
    out.push(Check::below("quasi-optimality constant", (c - want).abs(), 1e-9));

    let r = run(&setup, &SolveOptions::default())?;
    out.push(Check::below("solver residual", r.residual, 1e-10));
    out.push(Check {
        name: "Cholesky factorization",
        value: (r.factorization != Factorization::Cholesky) as u8 as f64,
        limit: 0.5,
        passed: r.factorization == Factorization::Cholesky,
    });
    Ok(out)
}
