//! Recovers an accurate feasible point from an interior-point iterate.
//!
//! The point is moved by least squares onto `a_k . x = sign(y_k)` for the
//! rows carrying dual mass, then scaled back into the box. The same support
//! gives a dual candidate from `A_S^T y_S = c`. On a degenerate face that
//! system can force wrong signs. Small problems can instead be solved by a
//! dense simplex, with the certificate minimised over the rows active at the
//! vertex it finds.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use nalgebra::{DMatrix, DVector};

use super::RowBoxLp;
use crate::par::Execution;

/// Dual entries below this fraction of the largest are treated as zero.
const SUPPORT_CUTOFF: f64 = 1e-6;

/// Distances below the largest activity at which a row counts as active.
const ACTIVE_SLACKS: [f64; 4] = [1e-9, 1e-7, 1e-5, 1e-3];

/// Largest dimension handed to the full simplex.
const FULL_SIMPLEX_DIM: usize = 32;

/// Largest candidate set, in multiples of the dimension, for the restricted dual.
const MAX_CANDIDATES: usize = 8;

pub(super) struct Polished {
    pub value: f64,
    /// Dual supported on the same rows, not yet repaired.
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub max_activity: f64,
}

impl RowBoxLp {
    pub(super) fn polish(&self, c: &[f64], x: &[f64], y: &[f64], exec: Execution) -> Option<Polished> {
        let ymax = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let support: Vec<usize> = (0..self.n_rows)
            .filter(|&k| y[k].abs() > SUPPORT_CUTOFF * ymax)
            .collect();
        if support.is_empty() {
            return None;
        }
        let a_s = DMatrix::from_fn(support.len(), self.dim, |i, j| self.row(support[i])[j]);
        let x0 = DVector::from_column_slice(x);
        let target = DVector::from_fn(support.len(), |i, _| y[support[i]].signum());
        let svd = a_s.clone().svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        let shift = svd.solve(&(target - &a_s * &x0), cutoff).ok()?;

        // a_s^T = V S U^T, so y_S = U S^+ V^T c.
        let (u, v_t) = (svd.u.as_ref()?, svd.v_t.as_ref()?);
        let mut t = v_t * DVector::from_column_slice(c);
        for (ti, sv) in t.iter_mut().zip(svd.singular_values.iter()) {
            *ti = if *sv > cutoff { *ti / sv } else { 0.0 };
        }
        let y_s = u * t;
        let mut y_full = vec![0.0; self.n_rows];
        for (i, &k) in support.iter().enumerate() {
            y_full[k] = y_s[i];
        }
        let x = (x0 + shift).as_slice().to_vec();

        let p = self.scaled_into_box(c, &x, exec);
        if !p.value.is_finite() {
            return None;
        }
        Some(Polished { y: y_full, ..p })
    }

    /// Dense simplex on every row, for problems small enough that this is
    /// cheap and accurate. The dual minimises the certificate over the rows
    /// nearly active at the vertex found, trying several slacks.
    pub(super) fn full_simplex(&self, c: &[f64], exec: Execution) -> Option<(Polished, Option<Vec<f64>>)> {
        if self.dim > FULL_SIMPLEX_DIM {
            return None;
        }
        let x = self.simplex_primal(c)?;
        let primal = self.scaled_into_box(c, &x, exec);
        let ax = self.apply(&primal.x, exec);
        let top = primal.max_activity;
        let mut dual: Option<(f64, Vec<f64>)> = None;
        for slack in ACTIVE_SLACKS {
            let rows: Vec<usize> = (0..self.n_rows).filter(|&k| ax[k].abs() >= top - slack).collect();
            if rows.is_empty() || rows.len() > MAX_CANDIDATES * self.dim {
                continue;
            }
            if let Some(y) = self.restricted_dual(c, &rows) {
                let y = self.repair_dual(c, &y, exec);
                let bound = self.dual_bound(c, &y);
                if dual.as_ref().is_none_or(|(b, _)| bound < *b) {
                    dual = Some((bound, y));
                }
            }
        }
        Some((primal, dual.map(|(_, y)| y)))
    }

    fn simplex_primal(&self, c: &[f64]) -> Option<Vec<f64>> {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let b = self.coeff_bound;
        let vars: Vec<Variable> = c.iter().map(|&ci| lp.add_var(ci, (-b, b))).collect();
        for k in 0..self.n_rows {
            let expr = || -> LinearExpr {
                vars.iter()
                    .zip(self.row(k))
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(v, a)| (*v, *a))
                    .collect()
            };
            lp.add_constraint(expr(), ComparisonOp::Le, 1.0);
            lp.add_constraint(expr(), ComparisonOp::Ge, -1.0);
        }
        let microlp::SolveOutcome::Solution(sol) = lp.solve().ok()? else {
            return None;
        };
        Some(vars.iter().map(|v| sol.var_value(*v)).collect())
    }

    /// Dual minimising `sum |y_k| + coeff_bound |c - A^T y|_1` over `rows`.
    fn restricted_dual(&self, c: &[f64], rows: &[usize]) -> Option<Vec<f64>> {
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let pairs: Vec<(Variable, Variable)> = rows
            .iter()
            .map(|_| {
                (
                    lp.add_var(1.0, (0.0, f64::INFINITY)),
                    lp.add_var(1.0, (0.0, f64::INFINITY)),
                )
            })
            .collect();
        for (i, &ci) in c.iter().enumerate() {
            let mut expr = LinearExpr::empty();
            for (&k, &(p, n)) in rows.iter().zip(&pairs) {
                let a = self.row(k)[i];
                if a != 0.0 {
                    expr.add(p, a);
                    expr.add(n, -a);
                }
            }
            expr.add(lp.add_var(self.coeff_bound, (0.0, f64::INFINITY)), 1.0);
            expr.add(lp.add_var(self.coeff_bound, (0.0, f64::INFINITY)), -1.0);
            lp.add_constraint(expr, ComparisonOp::Eq, ci);
        }
        let microlp::SolveOutcome::Solution(sol) = lp.solve().ok()? else {
            return None;
        };
        let mut y_full = vec![0.0; self.n_rows];
        for (&k, &(p, n)) in rows.iter().zip(&pairs) {
            y_full[k] = sol.var_value(p) - sol.var_value(n);
        }
        Some(y_full)
    }

    /// `x / max(1, max_k |a_k . x|)`, which is feasible.
    pub(super) fn scaled_into_box(&self, c: &[f64], x: &[f64], exec: Execution) -> Polished {
        let max_activity = self.apply(x, exec).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let scale = max_activity.max(1.0);
        let x: Vec<f64> = x.iter().map(|v| v / scale).collect();
        Polished {
            value: super::dot(c, &x),
            y: Vec::new(),
            x,
            max_activity: max_activity / scale,
        }
    }
}
