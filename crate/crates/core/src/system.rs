//! Global block system `(𝔄 + 𝔅 + ℭ) U = l` and its dense solve.

use alloc::vec::Vec;

use crate::linalg::{norm_inf, Cholesky, CsrMatrix, DenseMatrix, PivotedLu};
use crate::{Error, Result};

/// Sizes of the index blocks `U¹_O, U¹_I, U²_I, U²_O`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexPartition {
    pub fe_outer: usize,
    pub fe_interface: usize,
    pub be_interface: usize,
    pub be_outer: usize,
}

impl IndexPartition {
    pub fn n_fe(&self) -> usize {
        self.fe_outer + self.fe_interface
    }

    pub fn n_be(&self) -> usize {
        self.be_interface + self.be_outer
    }

    pub fn len(&self) -> usize {
        self.n_fe() + self.n_be()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start offsets of the four blocks and the end.
    pub fn offsets(&self) -> [usize; 5] {
        let a = self.fe_outer;
        let b = a + self.fe_interface;
        let c = b + self.be_interface;
        [0, a, b, c, c + self.be_outer]
    }
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub partition: IndexPartition,
}

/// Blocks of the coupled system. `coupling` and `penalty` act on the full
/// index range; passing `None` drops them.
pub struct SystemBlocks<'a> {
    pub stiffness: &'a CsrMatrix,
    pub steklov: &'a DenseMatrix,
    pub coupling: Option<&'a CsrMatrix>,
    pub penalty: Option<&'a CsrMatrix>,
    pub fe_load: &'a [f64],
    pub be_load: &'a [f64],
}

pub fn assemble_global(partition: IndexPartition, blocks: &SystemBlocks<'_>) -> Result<BlockSystem> {
    let (nf, nb, n) = (partition.n_fe(), partition.n_be(), partition.len());
    let check = |expected: usize, found: usize| {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension { expected, found })
        }
    };
    check(nf, blocks.stiffness.rows())?;
    check(nf, blocks.stiffness.cols())?;
    check(nb, blocks.steklov.rows())?;
    check(nb, blocks.steklov.cols())?;
    check(nf, blocks.fe_load.len())?;
    check(nb, blocks.be_load.len())?;
    let mut matrix = DenseMatrix::zeros(n, n);
    blocks.stiffness.add_into(&mut matrix, 0, 0);
    for i in 0..nb {
        for j in 0..nb {
            matrix[(nf + i, nf + j)] = blocks.steklov[(i, j)];
        }
    }
    for extra in [blocks.coupling, blocks.penalty].into_iter().flatten() {
        check(n, extra.rows())?;
        check(n, extra.cols())?;
        extra.add_into(&mut matrix, 0, 0);
    }
    let mut rhs = blocks.fe_load.to_vec();
    rhs.extend_from_slice(blocks.be_load);
    Ok(BlockSystem {
        matrix,
        rhs,
        partition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    Cholesky,
    /// Cholesky failed; partial-pivoting LU was used instead.
    PivotedLu,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub fe: Vec<f64>,
    pub be: Vec<f64>,
    pub factorization: Factorization,
    /// `‖AU − l‖∞ / ‖l‖∞`.
    pub residual: f64,
}

impl Solution {
    pub fn stacked(&self) -> Vec<f64> {
        let mut u = self.fe.clone();
        u.extend_from_slice(&self.be);
        u
    }
}

/// Relative pivot threshold of the LU fallback.
pub const LU_PIVOT_TOL: f64 = 1e-14;

/// Cholesky first; on failure partial-pivoting LU.
pub fn solve(sys: &BlockSystem) -> Result<Solution> {
    let (x, factorization) = match Cholesky::new(&sys.matrix) {
        Ok(c) => (c.solve(&sys.rhs), Factorization::Cholesky),
        Err(Error::Singular { .. }) => {
            let lu = PivotedLu::new(&sys.matrix, LU_PIVOT_TOL)?;
            (lu.solve(&sys.rhs), Factorization::PivotedLu)
        }
        Err(e) => return Err(e),
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(crate::error::consistency("solution has non-finite entries"));
    }
    let nf = sys.partition.n_fe();
    let mut sol = Solution {
        fe: x[..nf].to_vec(),
        be: x[nf..].to_vec(),
        factorization,
        residual: 0.0,
    };
    sol.residual = galerkin_residual(sys, &sol);
    Ok(sol)
}

/// `‖AU − l‖∞ / ‖l‖∞`, or the absolute residual for `l = 0`.
pub fn galerkin_residual(sys: &BlockSystem, sol: &Solution) -> f64 {
    let u = sol.stacked();
    let mut r = sys.matrix.mul_vec(&u);
    for (ri, li) in r.iter_mut().zip(&sys.rhs) {
        *ri -= li;
    }
    let scale = norm_inf(&sys.rhs);
    if scale > 0.0 {
        norm_inf(&r) / scale
    } else {
        norm_inf(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy() -> BlockSystem {
        let part = IndexPartition {
            fe_outer: 1,
            fe_interface: 1,
            be_interface: 1,
            be_outer: 1,
        };
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        let s = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let b = CsrMatrix::from_triplets(4, 4, vec![(1, 2, -0.25), (2, 1, -0.25)]);
        let c = CsrMatrix::from_triplets(4, 4, vec![(1, 1, 1.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 1.0)]);
        assemble_global(
            part,
            &SystemBlocks {
                stiffness: &a,
                steklov: &s,
                coupling: Some(&b),
                penalty: Some(&c),
                fe_load: &[1.0, 0.0],
                be_load: &[0.0, 2.0],
            },
        )
        .unwrap()
    }

    #[test]
    fn block_layout_and_solve() {
        let sys = toy();
        assert_eq!(sys.matrix[(0, 3)], 0.0);
        assert_eq!(sys.matrix[(1, 2)], -1.25);
        assert!(sys.matrix.asymmetry() == 0.0);
        let sol = solve(&sys).unwrap();
        assert_eq!(sol.factorization, Factorization::Cholesky);
        assert!(sol.residual < 1e-14);
    }

    #[test]
    fn manufactured_solution_is_recovered() {
        let mut sys = toy();
        let x = [0.3, -1.2, 2.5, 0.7];
        sys.rhs = sys.matrix.mul_vec(&x);
        let sol = solve(&sys).unwrap();
        for (a, b) in sol.stacked().iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut perturbed = sol.clone();
        perturbed.fe[0] += 1e-3;
        assert!(galerkin_residual(&sys, &perturbed) > 1e-4);
    }

    #[test]
    fn indefinite_falls_back_to_lu() {
        let mut sys = toy();
        sys.matrix[(3, 3)] = -5.0;
        let sol = solve(&sys).unwrap();
        assert_eq!(sol.factorization, Factorization::PivotedLu);
        assert!(sol.residual < 1e-14);
        sys.rhs = vec![0.0; 4];
        let z = solve(&sys).unwrap();
        assert!(z.stacked().iter().all(|&v| v == 0.0) && z.residual == 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let part = IndexPartition {
            fe_outer: 1,
            fe_interface: 1,
            be_interface: 1,
            be_outer: 0,
        };
        let a = CsrMatrix::from_triplets(2, 2, vec![]);
        let s = DenseMatrix::zeros(2, 2);
        let r = assemble_global(
            part,
            &SystemBlocks {
                stiffness: &a,
                steklov: &s,
                coupling: None,
                penalty: None,
                fe_load: &[0.0; 2],
                be_load: &[0.0; 2],
            },
        );
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }
}
