//! Legendre and integrated Legendre polynomials on `[-1, 1]`.

#[allow(unused_imports)]
use num_traits::Float as _;



/// Values `L_0(x), ..., L_n(x)` and first and second derivatives.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub value: [f64; MAX_TABLE],
    pub d1: [f64; MAX_TABLE],
    pub d2: [f64; MAX_TABLE],
}

/// Highest polynomial index the fixed tables hold.
pub const MAX_TABLE: usize = 32;

/// Highest supported element degree.
pub const MAX_DEGREE: u32 = (MAX_TABLE - 2) as u32;

impl LegendreTable {
    pub fn new(n: usize, x: f64) -> Self {
        assert!(n < MAX_TABLE, "Legendre degree {n} exceeds table size");
        let mut t = LegendreTable {
            value: [0.0; MAX_TABLE],
            d1: [0.0; MAX_TABLE],
            d2: [0.0; MAX_TABLE],
        };
        t.value[0] = 1.0;
        if n >= 1 {
            t.value[1] = x;
            t.d1[1] = 1.0;
        }
        for k in 1..n {
            let kf = k as f64;
            t.value[k + 1] = ((2.0 * kf + 1.0) * x * t.value[k] - kf * t.value[k - 1]) / (kf + 1.0);
            // L'_{k+1} = L'_{k-1} + (2k+1) L_k, and the same for L''.
            t.d1[k + 1] = t.d1[k - 1] + (2.0 * kf + 1.0) * t.value[k];
            t.d2[k + 1] = t.d2[k - 1] + (2.0 * kf + 1.0) * t.d1[k];
        }
        t
    }
}

pub fn legendre(n: usize, x: f64) -> f64 {
    LegendreTable::new(n, x).value[n]
}

/// Normalized integrated Legendre bubble `b_k = (L_k - L_{k-2}) / sqrt(2(2k-1))`
/// for `k >= 2`, together with its derivative in `x`.
#[inline]
pub fn bubble(t: &LegendreTable, k: usize) -> (f64, f64) {
    debug_assert!(k >= 2);
    let kf = k as f64;
    let c = 1.0 / (2.0 * (2.0 * kf - 1.0)).sqrt();
    let d = ((2.0 * kf - 1.0) / 2.0).sqrt();
    (c * (t.value[k] - t.value[k - 2]), d * t.value[k - 1])
}

/// Kernel `4 b_k(x) / (1 - x²)` used for triangle edge modes, with its
/// derivative. This is a polynomial of degree `k - 2`.
#[inline]
pub fn edge_kernel(t: &LegendreTable, k: usize) -> (f64, f64) {
    debug_assert!(k >= 2);
    let kf = k as f64;
    let c = -4.0 * ((2.0 * kf - 1.0) / 2.0).sqrt() / (kf * (kf - 1.0));
    (c * t.d1[k - 1], c * t.d2[k - 1])
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_nodes(n: usize, nodes: &mut [f64], weights: &mut [f64]) {
    let pi = core::f64::consts::PI;
    for i in 0..n {
        let mut x = -(pi * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}
