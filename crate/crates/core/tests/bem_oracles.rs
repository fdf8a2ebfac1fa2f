use hpcouple_core::bem::{
    assemble_layers, calderon_residual, discrete_steklov, LayerAssembler, ScaleTransform,
};
use hpcouple_core::geometry::{
    build_square_decomposition, ArcPartition, BoundaryMesh, SquareDecomposition, Tag,
};
use hpcouple_core::space::{BeFluxSpace, BeTraceSpace, DegreeVector};
use hpcouple_core::Point2;

use std::f64::consts::PI;

/// `∫₀ᴸ ln|x - (A + τe)| dτ` in closed form.
fn log_segment(x: Point2, a: Point2, b: Point2) -> f64 {
    let len = a.dist(b);
    let e = (b - a) * (1.0 / len);
    let along = (x - a).dot(e);
    let d = (x - a).cross(e).abs();
    let f = |u: f64| {
        if d == 0.0 {
            if u == 0.0 {
                0.0
            } else {
                u * u.abs().ln() - u
            }
        } else {
            0.5 * (u * (u * u + d * d).ln() - 2.0 * u + 2.0 * d * (u / d).atan())
        }
    };
    f(len - along) - f(-along)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn loop_mesh(pts: &[Point2]) -> BoundaryMesh {
    BoundaryMesh::new(pts, &vec![Tag::Interface; pts.len()], ArcPartition::MaxLength(10.0)).unwrap()
}

#[test]
fn single_layer_matches_adaptive_oracle() {
    let meshes = [
        loop_mesh(&[Point2::new(0.0, 0.0), Point2::new(0.4, 0.0), Point2::new(0.1, 0.3)]),
        loop_mesh(&[
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 0.1),
            Point2::new(0.45, 0.4),
            Point2::new(-0.1, 0.35),
        ]),
    ];
    for m in &meshes {
        let d = DegreeVector::uniform(m.len(), 1).unwrap();
        let t = BeTraceSpace::unconstrained(m, d.clone()).unwrap();
        let f = BeFluxSpace::new(m, d).unwrap();
        let l = assemble_layers(m, &t, &f).unwrap();
        for a in 0..m.len() {
            for b in 0..m.len() {
                let (pa, pb) = (m.panels[a], m.panels[b]);
                let inner = |s: f64| -log_segment(pa.point(s), pb.a, pb.b) / (2.0 * PI);
                let want = pa.length() * simpson(&inner, 0.0, 1.0, 1e-13);
                let got = l.v[(f.offsets[a], f.offsets[b])];
                assert!((got - want).abs() < 1e-8 * want.abs().max(1e-3), "{a} {b}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn steklov_reproduces_normal_derivative() {
    // Linear data are reproduced exactly, so use the harmonic u1 against
    // v = x² + y.
    let mut errs = Vec::new();
    for h in [0.5, 0.25, 0.125, 0.0625] {
        let (_, be) = build_square_decomposition(&SquareDecomposition {
            fe_h: 0.25,
            be_h: h,
            coarse_far_field: true,
        })
        .unwrap();
        let d = DegreeVector::uniform(be.len(), 1).unwrap();
        let t = BeTraceSpace::unconstrained(&be, d.clone()).unwrap();
        let f = BeFluxSpace::new(&be, d).unwrap();
        let scaled = ScaleTransform::for_boundary(&be).apply(&be);
        let s = discrete_steklov(&assemble_layers(&scaled, &t, &f).unwrap()).unwrap();
        let u = t.interpolate(&be, u1).unwrap();
        let v = t.interpolate(&be, |p| p.x * p.x + p.y).unwrap();
        let got = s.s_hat.bilinear(&u, &v);
        let mut want = 0.0;
        for arc in &be.arcs {
            let n = Point2::new((arc.b - arc.a).y, -(arc.b - arc.a).x) * (1.0 / arc.a.dist(arc.b));
            let len = arc.a.dist(arc.b);
            for k in 0..2000 {
                let p = arc.a.lerp(arc.b, (k as f64 + 0.5) / 2000.0);
                want += du1(p, n) * (p.x * p.x + p.y) * len / 2000.0;
            }
        }
        errs.push((got - want).abs());
        let one = t.interpolate(&be, |_| 1.0).unwrap();
        assert!(s.s_hat.bilinear(&one, &one).abs() < 1e-8);
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.0, "{errs:?}");
    }
}

fn u1(p: Point2) -> f64 {
    let (x, y) = (p.x + 1.0, p.y + 2.0);
    x / (x * x + y * y)
}

fn du1(p: Point2, n: Point2) -> f64 {
    let (x, y) = (p.x + 1.0, p.y + 2.0);
    let r4 = (x * x + y * y).powi(2);
    ((y * y - x * x) * n.x - 2.0 * x * y * n.y) / r4
}

fn calderon_sweep(u: &dyn Fn(Point2) -> f64, du: &dyn Fn(Point2, Point2) -> f64) -> Vec<f64> {
    [0.5, 0.25, 0.125, 0.0625]
        .iter()
        .map(|&h| {
            let (_, be) = build_square_decomposition(&SquareDecomposition {
                fe_h: 0.25,
                be_h: h,
                coarse_far_field: true,
            })
            .unwrap();
            let d = DegreeVector::uniform(be.len(), 1).unwrap();
            calderon_residual(&be, &d, u, du).unwrap()
        })
        .collect()
}

#[test]
fn calderon_residual_converges_for_harmonic_data() {
    let r = calderon_sweep(&u1, &du1);
    for w in r.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.5, "{r:?}");
    }
    let z = calderon_sweep(&|_| 0.0, &|_, _| 0.0);
    assert!(z.iter().all(|&v| v == 0.0));
}

#[test]
fn calderon_residual_stalls_for_non_harmonic_data() {
    let r = calderon_sweep(&|p| p.x * p.x, &|p, n| 2.0 * p.x * n.x);
    assert!(r[3] > 0.5 * r[0], "{r:?}");
}

#[test]
fn pair_blocks_are_order_independent() {
    let m = loop_mesh(&[Point2::new(0.0, 0.0), Point2::new(0.4, 0.0), Point2::new(0.1, 0.3)]);
    let d = DegreeVector::new(vec![2, 3, 1]).unwrap();
    let t = BeTraceSpace::unconstrained(&m, d.clone()).unwrap();
    let f = BeFluxSpace::new(&m, d).unwrap();
    let asm = LayerAssembler::new(&m, &t, &f).unwrap();
    let mut blocks: Vec<_> = asm.pairs().into_iter().map(|(a, b)| asm.pair(a, b).unwrap()).collect();
    let l1 = asm.finish(&blocks);
    blocks.reverse();
    let l2 = asm.finish(&blocks);
    assert_eq!(l1.v.as_slice(), l2.v.as_slice());
    assert_eq!(l1.k.as_slice(), l2.k.as_slice());
}
