//! Mehrotra predictor-corrector on the normal equations `A^T D A dx = rhs`.
//!
//! Iterates are never reported directly. Once the duality gap is small each
//! one is handed to the crossover, and the best certified lower and upper
//! values seen are kept. Numerical trouble in the normal equations ends the
//! iteration. A small problem whose bracket is still too wide to accept is
//! handed to a dense simplex.

use nalgebra::{Cholesky, DVector};

use super::{LpSolution, RowBoxLp, ACCEPT_TOL, OPTIMALITY_TOL};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Interior-point duality gap below which crossover is attempted.
const CROSSOVER_GAP: f64 = 1e-5;

const IPM_MAX_ITERATIONS: usize = 100;

/// Consecutive crossovers without a better bound before giving up.
const STALL_LIMIT: usize = 4;

/// Fraction of the step to the boundary actually taken.
const STEP_DAMPING: f64 = 0.995;

impl RowBoxLp {
    pub(super) fn interior_point(&self, c: &[f64], exec: Execution) -> Result<LpSolution> {
        let m = self.dim;
        let n = self.n_rows;
        let cv = DVector::from_column_slice(c);
        let c_scale = 1.0 + cv.amax();

        // Ax + s = 1, -Ax + t = 1; duals u, v with A^T (u - v) = c.
        let mut x = vec![0.0; m];
        let mut s = vec![1.0; n];
        let mut t = vec![1.0; n];
        let mut u = vec![c_scale; n];
        let mut v = vec![c_scale; n];
        let signed = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<f64>>();

        let mut best: Option<LpSolution> = None;
        let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut stalled = 0;
        let mut iterations = 0;
        while iterations < IPM_MAX_ITERATIONS {
            let ax = self.apply(&x, exec);
            let y = signed(&u, &v);
            let r_d = &cv - self.apply_t(&y);
            let r_s: Vec<f64> = (0..n).map(|k| 1.0 - ax[k] - s[k]).collect();
            let r_t: Vec<f64> = (0..n).map(|k| 1.0 + ax[k] - t[k]).collect();
            let comp: f64 = (0..n).map(|k| s[k] * u[k] + t[k] * v[k]).sum();
            let mu = comp / (2 * n) as f64;

            let primal = super::dot(c, &x);
            let dual: f64 = u.iter().chain(&v).sum();
            let p_inf = r_s.iter().chain(&r_t).fold(0.0f64, |a, r| a.max(r.abs()));
            let d_inf = r_d.amax() / c_scale;
            let gap = (dual - primal).abs() / (1.0 + primal.abs());
            if gap < CROSSOVER_GAP && p_inf < CROSSOVER_GAP && d_inf < CROSSOVER_GAP {
                let before = (lower, upper);
                upper = upper.min(self.dual_bound(c, &self.repair_dual(c, &y, exec)));
                let polished = self.polish(c, &x, &y, exec);
                if let Some(p) = &polished {
                    upper = upper.min(self.dual_bound(c, &self.repair_dual(c, &p.y, exec)));
                }
                for p in polished
                    .into_iter()
                    .chain(std::iter::once(self.scaled_into_box(c, &x, exec)))
                {
                    if p.value > lower {
                        lower = p.value;
                        best = Some(LpSolution {
                            value: 0.0,
                            primal_value: p.value,
                            x: p.x,
                            max_activity: p.max_activity,
                            iterations,
                        });
                    }
                }
                let width = OPTIMALITY_TOL * (1.0 + lower.abs());
                if upper - lower <= width {
                    break;
                }
                stalled = if lower > before.0 + width || upper < before.1 - width {
                    0
                } else {
                    stalled + 1
                };
                if stalled >= STALL_LIMIT {
                    break;
                }
            }
            if mu < 1e-18 {
                break;
            }

            let d: Vec<f64> = (0..n).map(|k| u[k] / s[k] + v[k] / t[k]).collect();
            let mut h = self.weighted_gram(&d, exec);
            let ridge = 1e-14 * (0..m).map(|i| h[(i, i)]).fold(0.0, f64::max);
            for i in 0..m {
                h[(i, i)] += ridge;
            }
            let Some(chol) = Cholesky::new(h) else {
                break;
            };

            let solve_dir = |r_su: &[f64], r_tv: &[f64]| {
                // w = (r_su - u r_s)/s - (r_tv - v r_t)/t
                let w: Vec<f64> = (0..n)
                    .map(|k| (r_su[k] - u[k] * r_s[k]) / s[k] - (r_tv[k] - v[k] * r_t[k]) / t[k])
                    .collect();
                let dx = chol.solve(&(&r_d - self.apply_t(&w)));
                let adx = self.apply(dx.as_slice(), exec);
                let ds: Vec<f64> = (0..n).map(|k| r_s[k] - adx[k]).collect();
                let dt: Vec<f64> = (0..n).map(|k| r_t[k] + adx[k]).collect();
                let du: Vec<f64> = (0..n).map(|k| (r_su[k] - u[k] * ds[k]) / s[k]).collect();
                let dv: Vec<f64> = (0..n).map(|k| (r_tv[k] - v[k] * dt[k]) / t[k]).collect();
                (dx, ds, dt, du, dv)
            };

            // Predictor.
            let r_su: Vec<f64> = (0..n).map(|k| -s[k] * u[k]).collect();
            let r_tv: Vec<f64> = (0..n).map(|k| -t[k] * v[k]).collect();
            let (_, ds_a, dt_a, du_a, dv_a) = solve_dir(&r_su, &r_tv);
            let ap = max_step(&s, &ds_a).min(max_step(&t, &dt_a)).min(1.0);
            let ad = max_step(&u, &du_a).min(max_step(&v, &dv_a)).min(1.0);
            let comp_aff: f64 = (0..n)
                .map(|k| (s[k] + ap * ds_a[k]) * (u[k] + ad * du_a[k]) + (t[k] + ap * dt_a[k]) * (v[k] + ad * dv_a[k]))
                .sum();
            let sigma = (comp_aff / comp).powi(3).clamp(0.0, 1.0);

            // Corrector.
            let r_su: Vec<f64> = (0..n).map(|k| sigma * mu - s[k] * u[k] - ds_a[k] * du_a[k]).collect();
            let r_tv: Vec<f64> = (0..n).map(|k| sigma * mu - t[k] * v[k] - dt_a[k] * dv_a[k]).collect();
            let (dx, ds, dt, du, dv) = solve_dir(&r_su, &r_tv);
            let ap = (STEP_DAMPING * max_step(&s, &ds).min(max_step(&t, &dt))).min(1.0);
            let ad = (STEP_DAMPING * max_step(&u, &du).min(max_step(&v, &dv))).min(1.0);

            x.iter_mut().zip(dx.iter()).for_each(|(a, b)| *a += ap * b);
            for k in 0..n {
                s[k] += ap * ds[k];
                t[k] += ap * dt[k];
                u[k] += ad * du[k];
                v[k] += ad * dv[k];
            }
            iterations += 1;
        }
        if best.is_none() || upper - lower > ACCEPT_TOL * (1.0 + lower.abs()) {
            if let Some((p, dual)) = self.full_simplex(c, exec) {
                if let Some(y) = dual {
                    upper = upper.min(self.dual_bound(c, &y));
                }
                if p.value > lower {
                    best = Some(LpSolution {
                        value: 0.0,
                        primal_value: p.value,
                        x: p.x,
                        max_activity: p.max_activity,
                        iterations,
                    });
                }
            }
        }
        match best {
            Some(mut sol) if upper - sol.primal_value <= ACCEPT_TOL * (1.0 + sol.primal_value.abs()) => {
                sol.value = upper.max(sol.primal_value);
                sol.iterations = iterations;
                Ok(sol)
            }
            _ => Err(Error::LpIterationLimit { iterations }),
        }
    }
}

/// Largest `a` keeping `z + a dz >= 0`, capped at `1 / STEP_DAMPING`.
fn max_step(z: &[f64], dz: &[f64]) -> f64 {
    z.iter()
        .zip(dz)
        .filter(|(_, d)| **d < 0.0)
        .map(|(z, d)| -z / d)
        .fold(1.0 / STEP_DAMPING, f64::min)
}
