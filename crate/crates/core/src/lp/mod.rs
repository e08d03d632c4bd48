//! Row-box linear programs
//!
//! ```text
//!     maximize  c . x   subject to  |a_k . x| <= 1  for k = 0..N,   x in R^m free
//! ```
//!
//! with dual `minimize sum_k |y_k|  s.t.  A^T y = c`.
//!
//! A primal-dual interior-point method approaches the optimal face. Each late
//! iterate is polished into a feasible primal point, and its dual is
//! repaired to satisfy `A^T y = c` through the Gram matrix of all rows. If
//! that leaves a gap and the dimension is small, a dense simplex finishes the
//! job. The
//! trigonometric instances are highly degenerate on both sides, so the solve
//! reports a certified bracket rather than a single vertex; it fails if the
//! bracket stays wider than `ACCEPT_TOL`.
//!
//! The returned `value` is a certified upper bound: for every feasible `x`,
//! `c . x = y . A x + r . x <= |y|_1 + |r|_1 max_j |x_j|` with `r = c - A^T y`,
//! and callers supply the bound on `|x_j|` that holds for their rows.
//! `primal_value` is attained by the returned feasible `x`.
//!
//! Reductions run over fixed row blocks in a fixed order, so sequential and
//! parallel runs produce bit-identical results.

mod crossover;
mod ipm;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::par::Execution;

/// Rows per block in the dense reductions.
const BLOCK_ROWS: usize = 256;

/// Relative width of the certified bracket at which the solve stops.
pub const OPTIMALITY_TOL: f64 = 1e-10;

/// Widest relative bracket accepted when the interior-point phase stalls.
pub const ACCEPT_TOL: f64 = 1e-7;

/// Constraint rows of a row-box LP.
#[derive(Debug, Clone)]
pub struct RowBoxLp {
    dim: usize,
    n_rows: usize,
    /// Column `k` of block `b` is row `b * BLOCK_ROWS + k`.
    blocks: Vec<DMatrix<f64>>,
    coeff_bound: f64,
    /// Factor of `A^T A`, used to restore `A^T y = c` exactly.
    gram: Cholesky<f64, Dyn>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Certified upper bound on the optimum.
    pub value: f64,
    /// `c . x` at the returned point.
    pub primal_value: f64,
    /// Maximizer, scaled if needed so that `max_k |a_k . x| <= 1`.
    pub x: Vec<f64>,
    /// `max_k |a_k . x|` before any rescaling.
    pub max_activity: f64,
    pub iterations: usize,
}

impl RowBoxLp {
    /// `rows` holds `N` consecutive rows of length `dim`. `coeff_bound` must
    /// bound `max_j |x_j|` over the feasible set. Fails if the rows do not
    /// span `R^dim`, since the LP would then be unbounded for some `c`.
    pub fn new(dim: usize, rows: &[f64], coeff_bound: f64) -> Result<Self> {
        if dim == 0 || rows.is_empty() || !rows.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} row entries do not split into rows of length {dim}",
                rows.len()
            )));
        }
        let n_rows = rows.len() / dim;
        if n_rows < dim {
            return Err(Error::LpUnbounded { dim });
        }
        let blocks: Vec<DMatrix<f64>> = rows
            .chunks(BLOCK_ROWS * dim)
            .map(|chunk| DMatrix::from_column_slice(dim, chunk.len() / dim, chunk))
            .collect();
        let gram = gram_of(&blocks, dim);
        let eig = gram.clone().symmetric_eigenvalues();
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if lo.is_nan() || lo <= 1e-10 * hi {
            return Err(Error::LpUnbounded { dim });
        }
        let gram = Cholesky::new(gram).ok_or(Error::LpUnbounded { dim })?;
        Ok(RowBoxLp {
            dim,
            n_rows,
            blocks,
            coeff_bound,
            gram,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    fn row(&self, k: usize) -> &[f64] {
        let off = (k % BLOCK_ROWS) * self.dim;
        &self.blocks[k / BLOCK_ROWS].as_slice()[off..off + self.dim]
    }

    /// `A^T diag(w) A`, summed block by block in order.
    fn weighted_gram(&self, w: &[f64], exec: Execution) -> DMatrix<f64> {
        let partial = exec.map_range(self.blocks.len(), |b| {
            let mut scaled = self.blocks[b].clone();
            let off = b * BLOCK_ROWS;
            for (k, mut col) in scaled.column_iter_mut().enumerate() {
                col *= w[off + k].sqrt();
            }
            &scaled * scaled.transpose()
        });
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for p in partial {
            h += p;
        }
        h
    }

    /// `A x`.
    fn apply(&self, x: &[f64], exec: Execution) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        exec.map_range(self.blocks.len(), |b| self.blocks[b].tr_mul(&x).as_slice().to_vec())
            .concat()
    }

    /// `A^T y`.
    fn apply_t(&self, y: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (b, block) in self.blocks.iter().enumerate() {
            let off = b * BLOCK_ROWS;
            out.gemv(
                1.0,
                block,
                &DVector::from_column_slice(&y[off..off + block.ncols()]),
                1.0,
            );
        }
        out
    }

    /// `|y|_1 + coeff_bound |c - A^T y|_1`.
    /// Adds the least-norm correction `A G^-1 (c - A^T y)` to `y`.
    fn repair_dual(&self, c: &[f64], y: &[f64], exec: Execution) -> Vec<f64> {
        let r = DVector::from_column_slice(c) - self.apply_t(y);
        let w = self.apply(self.gram.solve(&r).as_slice(), exec);
        y.iter().zip(&w).map(|(a, b)| a + b).collect()
    }

    fn dual_bound(&self, c: &[f64], y: &[f64]) -> f64 {
        let r = DVector::from_column_slice(c) - self.apply_t(y);
        y.iter().map(|v| v.abs()).sum::<f64>() + self.coeff_bound * r.lp_norm(1)
    }

    /// Solves the LP for objective `c`.
    pub fn solve(&self, c: &[f64], exec: Execution) -> Result<LpSolution> {
        let m = self.dim;
        if c.len() != m {
            return Err(Error::InvalidArgument(format!(
                "objective has {} entries, need {m}",
                c.len()
            )));
        }
        if c.iter().all(|v| *v == 0.0) {
            return Ok(LpSolution {
                value: 0.0,
                primal_value: 0.0,
                x: vec![0.0; m],
                max_activity: 0.0,
                iterations: 0,
            });
        }

        self.interior_point(c, exec)
    }
}

fn gram_of(blocks: &[DMatrix<f64>], dim: usize) -> DMatrix<f64> {
    blocks
        .iter()
        .fold(DMatrix::zeros(dim, dim), |acc, b| acc + b * b.transpose())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
