//! Quantum-metric quantities on spectral bands.
//!
//! The seminorm is `L_q(f) = |d_q f|_inf`. Its Monge-Kantorovich metric
//! between two evaluation states on `A_M` is the value of a linear program
//! over real trigonometric polynomials (restricting to self-adjoint `f` loses
//! nothing, and the constant term is invisible to both the seminorm and
//! `phi_a - phi_b`). Writing
//!
//! ```text
//!     f(t) = sum_{n=1}^M a_n cos(n t) + b_n sin(n t),
//!     d_q f(t) = sum_{n=1}^M [n]_q (b_n cos(n t) - a_n sin(n t)),
//! ```
//!
//! and substituting `x = ([n]_q a_n, [n]_q b_n)`, the constraint matrix on the
//! grid `t_k = 2 pi k / N` is the plain trigonometric design matrix, so it
//! does not depend on `q` and stays well conditioned; only the objective
//! carries the factors `1 / [n]_q`.
//!
//! The grid LP relaxes `|d_q f|_inf <= 1`, so its value is an upper bound
//! for the band distance; the solver reports a dual-certified bound on it.
//! Its maximizer scaled by `cos(pi M / N)` satisfies the true constraint,
//! which gives the lower bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{grid_correction, LaurentPoly};
use crate::lp::RowBoxLp;
use crate::par::Execution;
use crate::qcalc::{epsilon_m, q_integer, QDeformation, PI_OVER_SQRT3};

/// `2 pi / sqrt(3)`, the diameter bound for every `q`.
pub const DIAMETER_BOUND: f64 = 2.0 * PI_OVER_SQRT3;

/// Slack allowed on top of [`DIAMETER_BOUND`] by [`diameter_scan`].
pub const DIAMETER_SLACK: f64 = 1e-6;

/// `A_M` equipped with `L_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBand {
    pub m: usize,
    pub q: QDeformation,
}

impl SpectralBand {
    pub fn new(m: usize, q: QDeformation) -> Self {
        SpectralBand { m, q }
    }

    /// Complex dimension `2M + 1`.
    pub fn dimension(&self) -> usize {
        2 * self.m + 1
    }
}

/// Point evaluation `f -> f(e^{i theta})`, with `theta` reduced to `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalState {
    theta: f64,
}

impl EvalState {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!("angle must be finite, got {theta}")));
        }
        let t = theta.rem_euclid(2.0 * PI);
        Ok(EvalState {
            theta: if t >= 2.0 * PI { 0.0 } else { t },
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn apply(&self, f: &LaurentPoly) -> num_complex::Complex64 {
        f.eval(self.theta)
    }
}

/// `max(8M, 1024)` grid points.
pub fn default_mk_grid(m: usize) -> usize {
    (8 * m).max(1024)
}

/// Distance between two evaluation states on a band, sampled on `grid` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MkProblem {
    pub band: SpectralBand,
    pub state_a: EvalState,
    pub state_b: EvalState,
    pub grid: usize,
}

impl MkProblem {
    pub fn new(band: SpectralBand, theta_a: f64, theta_b: f64, grid: usize) -> Result<Self> {
        if grid <= 2 * band.m {
            return Err(Error::GridTooCoarse { grid, band: band.m });
        }
        Ok(MkProblem {
            band,
            state_a: EvalState::new(theta_a)?,
            state_b: EvalState::new(theta_b)?,
            grid,
        })
    }
}

/// Certified bracket on the band distance with a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkResult {
    /// Certified upper bound on the optimum of the grid-sampled LP.
    pub lp_value: f64,
    /// Value of the returned grid-feasible maximizer, a lower bound on the
    /// same optimum.
    pub lp_lower: f64,
    /// `f(theta_a) - f(theta_b)` for `f = optimizer * cos(pi M / N)`.
    pub lower: f64,
    /// Equal to `lp_value`.
    pub upper: f64,
    /// Self-adjoint maximizer of the grid LP.
    pub optimizer: LaurentPoly,
    pub grid: usize,
    pub iterations: usize,
}

/// Lower/upper pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

/// `L_q(f)` bracketed by the certified sup-norm of `d_q f`.
pub fn seminorm_lq(f: &LaurentPoly, q: QDeformation) -> Result<Bracket> {
    let cert = f.d_q(q)?.sup_norm_default();
    Ok(Bracket {
        lower: cert.grid_max,
        upper: cert.corrected_upper,
    })
}

/// Grid LP for one `(M, q, N)`, reusable across pairs of states.
#[derive(Debug, Clone)]
pub struct MkSolver {
    band: SpectralBand,
    grid: usize,
    inv_q_ints: Vec<f64>,
    lp: Option<RowBoxLp>,
}

impl MkSolver {
    pub fn new(band: SpectralBand, grid: usize) -> Result<Self> {
        let m = band.m;
        if grid <= 2 * m {
            return Err(Error::GridTooCoarse { grid, band: m });
        }
        let inv_q_ints = (1..=m as i64)
            .map(|n| q_integer(n, band.q).map(|v| 1.0 / v))
            .collect::<Result<Vec<_>>>()?;
        let lp = if m == 0 {
            None
        } else {
            let mut rows = Vec::with_capacity(grid * 2 * m);
            for k in 0..grid {
                let mut cos_part = Vec::with_capacity(m);
                for n in 1..=m {
                    let t = 2.0 * PI * ((n * k) % grid) as f64 / grid as f64;
                    rows.push(-t.sin());
                    cos_part.push(t.cos());
                }
                rows.extend(cos_part);
            }
            // Grid values determine each coefficient as a discrete Fourier
            // average, so |x_j| <= 2 on the feasible set.
            Some(RowBoxLp::new(2 * m, &rows, 2.0)?)
        };
        Ok(MkSolver {
            band,
            grid,
            inv_q_ints,
            lp,
        })
    }

    pub fn band(&self) -> SpectralBand {
        self.band
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// `cos(pi M / N)`.
    pub fn shrink_factor(&self) -> f64 {
        1.0 / grid_correction(self.band.m, self.grid).expect("grid validated at construction")
    }

    pub fn distance(&self, a: EvalState, b: EvalState, exec: Execution) -> Result<MkResult> {
        let m = self.band.m;
        let zero = MkResult {
            lp_value: 0.0,
            lp_lower: 0.0,
            lower: 0.0,
            upper: 0.0,
            optimizer: LaurentPoly::zero(),
            grid: self.grid,
            iterations: 0,
        };
        let Some(lp) = &self.lp else {
            return Ok(zero);
        };
        if a.theta == b.theta {
            return Ok(zero);
        }
        let mut c = vec![0.0; 2 * m];
        for n in 1..=m {
            let (sa, ca) = (n as f64 * a.theta).sin_cos();
            let (sb, cb) = (n as f64 * b.theta).sin_cos();
            c[n - 1] = (ca - cb) * self.inv_q_ints[n - 1];
            c[m + n - 1] = (sa - sb) * self.inv_q_ints[n - 1];
        }
        let sol = lp.solve(&c, exec)?;
        let cos_coeffs: Vec<f64> = (0..m).map(|i| sol.x[i] * self.inv_q_ints[i]).collect();
        let sin_coeffs: Vec<f64> = (0..m).map(|i| sol.x[m + i] * self.inv_q_ints[i]).collect();
        let lp_value = sol.value.max(0.0);
        Ok(MkResult {
            lp_value,
            lp_lower: sol.primal_value.max(0.0),
            lower: sol.primal_value.max(0.0) * self.shrink_factor(),
            upper: lp_value,
            optimizer: LaurentPoly::from_real_trig(&cos_coeffs, &sin_coeffs),
            grid: self.grid,
            iterations: sol.iterations,
        })
    }
}

/// Monge-Kantorovich distance between two evaluation states on `A_M`.
pub fn mk_distance(p: &MkProblem) -> Result<MkResult> {
    MkSolver::new(p.band, p.grid)?.distance(p.state_a, p.state_b, Execution::Parallel)
}

/// All pairwise results for `angles`; entry `[i][j]` is the distance from
/// `angles[i]` to `angles[j]`. Each unordered pair is solved once in each
/// orientation so symmetry can be checked.
pub fn mk_matrix(band: SpectralBand, angles: &[f64], grid: usize, exec: Execution) -> Result<Vec<Vec<MkResult>>> {
    let solver = MkSolver::new(band, grid)?;
    let states = angles.iter().map(|&t| EvalState::new(t)).collect::<Result<Vec<_>>>()?;
    let n = states.len();
    let flat = exec.map_range(n * n, |idx| {
        solver.distance(states[idx / n], states[idx % n], Execution::Sequential)
    });
    let flat = flat.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(flat.chunks(n).map(|row| row.to_vec()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterScan {
    pub max_upper: f64,
    /// Indices into the angle list of a maximizing pair.
    pub argmax: (usize, usize),
    pub bound: f64,
    pub pairs: usize,
}

/// Largest upper bracket over all pairs of `angles`; fails if it exceeds
/// `2 pi / sqrt(3)` by more than [`DIAMETER_SLACK`].
pub fn diameter_scan(band: SpectralBand, angles: &[f64], grid: usize, exec: Execution) -> Result<DiameterScan> {
    if angles.len() < 2 {
        return Err(Error::InvalidArgument("diameter scan needs at least two angles".into()));
    }
    let solver = MkSolver::new(band, grid)?;
    let states = angles.iter().map(|&t| EvalState::new(t)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..states.len())
        .flat_map(|i| ((i + 1)..states.len()).map(move |j| (i, j)))
        .collect();
    let results = exec.map(&pairs, |&(i, j)| {
        solver
            .distance(states[i], states[j], Execution::Sequential)
            .map(|r| r.upper)
    });
    let mut scan = DiameterScan {
        max_upper: 0.0,
        argmax: (0, 0),
        bound: DIAMETER_BOUND,
        pairs: pairs.len(),
    };
    for (&pair, r) in pairs.iter().zip(results) {
        let upper = r?;
        if upper > scan.max_upper {
            scan.max_upper = upper;
            scan.argmax = pair;
        }
    }
    if scan.max_upper > DIAMETER_BOUND + DIAMETER_SLACK {
        return Err(Error::DiameterBoundExceeded {
            value: scan.max_upper,
            bound: DIAMETER_BOUND,
        });
    }
    Ok(scan)
}

/// `[2n]_q / (2 [n]_q) = L_q(z^2n) / (2 L_q(z^n))`.
///
/// For `q < 1` this equals `(q^n + q^-n) / 2`, which is unbounded in `n`, so
/// no Leibniz constant can exist.
pub fn leibniz_ratio(n: i64, q: QDeformation) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument(format!("leibniz ratio needs n >= 1, got {n}")));
    }
    let two_n = n.checked_mul(2).ok_or(Error::Overflow { n, q: q.value() })?;
    Ok(q_integer(two_n, q)? / (2.0 * q_integer(n, q)?))
}

/// Bracket on `chi(q) = |(d_q)_M - (d_q0)_M|` as an operator on `(A_M, |.|_inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiBounds {
    /// `max_n |[n]_q - [n]_q0|`, attained on `z^n`.
    pub lower: f64,
    /// `sum_n |[n]_q - [n]_q0|`, from `|a_n| <= |f|_inf`.
    pub upper: f64,
}

pub fn chi_bounds(m: usize, q: QDeformation, q0: QDeformation) -> Result<ChiBounds> {
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    let m = m as i64;
    for n in -m..=m {
        let d = (q_integer(n, q)? - q_integer(n, q0)?).abs();
        lower = lower.max(d);
        upper += d;
    }
    Ok(ChiBounds { lower, upper })
}

/// Composition of the distance bounds between `Lip_q` and `Lip_q0` through
/// the band `A_M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhBoundReport {
    pub q: QDeformation,
    pub q0: QDeformation,
    #[serde(rename = "M")]
    pub m: usize,
    pub chi_lower: f64,
    pub chi_upper: f64,
    /// Bound between `(A_M, L_q)` and `(A_M, L_q0)`.
    pub band_bound: f64,
    #[serde(rename = "eps_M")]
    pub eps_m: f64,
    /// `2 eps_M + band_bound`.
    pub total_upper: f64,
}

/// Band comparison constant `C = chi_upper pi / sqrt(3) + 1` turned into
/// `(2 pi / sqrt(3)) |1 - 1/C|`.
pub fn band_bound_from_chi(chi_upper: f64) -> f64 {
    let c = chi_upper * PI_OVER_SQRT3 + 1.0;
    DIAMETER_BOUND * (1.0 - 1.0 / c).abs()
}

pub fn gh_band_bound(m: usize, q: QDeformation, q0: QDeformation) -> Result<GhBoundReport> {
    gh_band_bound_with_eps(m, q, q0, epsilon_m(m as u64).value)
}

fn gh_band_bound_with_eps(m: usize, q: QDeformation, q0: QDeformation, eps_m: f64) -> Result<GhBoundReport> {
    let chi = chi_bounds(m, q, q0)?;
    let band_bound = band_bound_from_chi(chi.upper);
    Ok(GhBoundReport {
        q,
        q0,
        m,
        chi_lower: chi.lower,
        chi_upper: chi.upper,
        band_bound,
        eps_m,
        total_upper: 2.0 * eps_m + band_bound,
    })
}

/// Best bound for one `q` of a continuity scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub q: QDeformation,
    /// Minimizing band half-width.
    #[serde(rename = "best_M")]
    pub best_m: usize,
    pub bound: f64,
    /// `min_M 2 eps_M` over the scanned bands.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityScan {
    pub q0: QDeformation,
    pub rows: Vec<ContinuityRow>,
    /// Every `(q, M)` report, `q`-major.
    pub reports: Vec<GhBoundReport>,
}

pub const CSV_HEADER: &str = "q,M,chi_lower,chi_upper,band_bound,eps_M,total_upper";

impl GhBoundReport {
    pub fn csv_row(&self) -> String {
        use crate::report::fmt_sig;
        [
            fmt_sig(self.q.value()),
            self.m.to_string(),
            fmt_sig(self.chi_lower),
            fmt_sig(self.chi_upper),
            fmt_sig(self.band_bound),
            fmt_sig(self.eps_m),
            fmt_sig(self.total_upper),
        ]
        .join(",")
    }
}

impl ContinuityScan {
    /// Header plus one line per `(q, M)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// For each `q`, the minimum over `m_list` of the composed bound.
pub fn continuity_scan(
    q0: QDeformation,
    q_list: &[QDeformation],
    m_list: &[usize],
    exec: Execution,
) -> Result<ContinuityScan> {
    if m_list.is_empty() {
        return Err(Error::InvalidArgument("continuity scan needs at least one band".into()));
    }
    let eps: Vec<f64> = exec.map(m_list, |&m| epsilon_m(m as u64).value);
    let floor = eps.iter().map(|e| 2.0 * e).fold(f64::INFINITY, f64::min);
    let grid: Vec<(usize, usize)> = (0..q_list.len())
        .flat_map(|i| (0..m_list.len()).map(move |j| (i, j)))
        .collect();
    let reports = exec
        .map(&grid, |&(i, j)| {
            gh_band_bound_with_eps(m_list[j], q_list[i], q0, eps[j])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rows = q_list
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let block = &reports[i * m_list.len()..(i + 1) * m_list.len()];
            let best = block
                .iter()
                .min_by(|a, b| a.total_upper.total_cmp(&b.total_upper))
                .expect("non-empty band list");
            ContinuityRow {
                q,
                best_m: best.m,
                bound: best.total_upper,
                floor,
            }
        })
        .collect();
    Ok(ContinuityScan { q0, rows, reports })
}

/// `min(|d|, 2 pi - |d|)` for `d = a - b` reduced mod `2 pi`.
pub fn arclength(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> QDeformation {
        QDeformation::new(v).unwrap()
    }

    fn equispaced(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    #[test]
    fn seminorm_examples() {
        assert_eq!(
            seminorm_lq(&LaurentPoly::one(), q(0.4)).unwrap(),
            Bracket { lower: 0.0, upper: 0.0 }
        );
        let b = seminorm_lq(&LaurentPoly::z_pow(1), QDeformation::CLASSICAL).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-14 && b.upper >= 1.0 && b.upper <= 1.01);
        for n in [2i64, 5, -7] {
            let b = seminorm_lq(&LaurentPoly::z_pow(n), q(0.6)).unwrap();
            let expected = q_integer(n, q(0.6)).unwrap().abs();
            assert!((b.lower - expected).abs() < 1e-12 * expected);
            assert!(b.upper >= expected);
        }
    }

    #[test]
    fn mk_diagonal_is_zero() {
        let band = SpectralBand::new(8, q(0.7));
        let r = mk_distance(&MkProblem::new(band, 1.0, 1.0, 1024).unwrap()).unwrap();
        assert_eq!(r.lp_value, 0.0);
        assert_eq!(r.lower, 0.0);
    }

    #[test]
    fn mk_first_band_antipodal() {
        // On A_1 at q = 1 the optimum is cos(t): L = 1, objective 2.
        let band = SpectralBand::new(1, QDeformation::CLASSICAL);
        let r = mk_distance(&MkProblem::new(band, 0.0, PI, 4096).unwrap()).unwrap();
        assert!((r.lp_value - 2.0).abs() < 1e-6, "{}", r.lp_value);
        // Brute force over the circle of coefficient vectors (a, b) = (cos s, sin s).
        let brute = (0..100_000)
            .map(|i| 2.0 * (2.0 * PI * i as f64 / 100_000.0).cos())
            .fold(f64::MIN, f64::max);
        assert!(r.upper >= brute - 1e-9);
        assert!((r.optimizer.coeff(1).re - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mk_first_band_general_q_matches_closed_form() {
        // On A_1, L_q(a cos + b sin) = sqrt(a^2 + b^2) since [1]_q = 1, so the
        // distance is |e^{i ta} - e^{i tb}| = 2 |sin((ta - tb) / 2)|.
        for v in [0.3, 1.0] {
            let band = SpectralBand::new(1, q(v));
            let solver = MkSolver::new(band, 4096).unwrap();
            for (ta, tb) in [(0.0, 1.0), (2.0, 5.5), (0.3, 0.4)] {
                let r = solver
                    .distance(
                        EvalState::new(ta).unwrap(),
                        EvalState::new(tb).unwrap(),
                        Execution::Sequential,
                    )
                    .unwrap();
                let exact = 2.0 * ((ta - tb) / 2.0f64).sin().abs();
                assert!(r.lower <= exact + 1e-12 && exact <= r.upper + 1e-12, "{ta} {tb}: {r:?}");
            }
        }
    }

    #[test]
    fn mk_witness_is_certified() {
        let band = SpectralBand::new(12, q(0.7));
        let solver = MkSolver::new(band, default_mk_grid(12)).unwrap();
        let r = solver
            .distance(
                EvalState::new(0.4).unwrap(),
                EvalState::new(2.9).unwrap(),
                Execution::Sequential,
            )
            .unwrap();
        let f = &r.optimizer * solver.shrink_factor();
        assert!(f.is_self_adjoint(1e-15));
        // Fine-grid evaluation of d_q f; the certificate says |d_q f| <= 1.
        let dq = f.d_q(band.q).unwrap();
        let fine = dq.grid_values(1 << 16).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(fine <= 1.0 + 1e-9, "{fine}");
        let gap = (f.eval(0.4) - f.eval(2.9)).re;
        assert!((gap - r.lower).abs() < 1e-9, "{gap} vs {}", r.lower);
    }

    #[test]
    fn mk_symmetry_and_rotation_invariance() {
        let band = SpectralBand::new(10, q(0.7));
        let grid = 1024;
        let solver = MkSolver::new(band, grid).unwrap();
        let s = |t: f64| EvalState::new(t).unwrap();
        let ab = solver
            .distance(s(0.0), s(2.0 * PI * 300.0 / 1024.0), Execution::Sequential)
            .unwrap();
        let ba = solver
            .distance(s(2.0 * PI * 300.0 / 1024.0), s(0.0), Execution::Sequential)
            .unwrap();
        assert!((ab.lp_value - ba.lp_value).abs() < 1e-8);
        // A grid-multiple rotation permutes the constraint rows.
        let rot = 2.0 * PI * 77.0 / 1024.0;
        let shifted = solver
            .distance(s(rot), s(rot + 2.0 * PI * 300.0 / 1024.0), Execution::Sequential)
            .unwrap();
        assert!((ab.lp_value - shifted.lp_value).abs() < 1e-8);
        // Any rotation stays inside both brackets.
        let off = solver
            .distance(s(0.123), s(0.123 + 2.0 * PI * 300.0 / 1024.0), Execution::Sequential)
            .unwrap();
        assert!(off.lower <= ab.upper + 1e-9 && ab.lower <= off.upper + 1e-9);
    }

    #[test]
    fn mk_band_monotone() {
        let mut prev = 0.0;
        for m in [1usize, 2, 4, 8, 16, 32] {
            let band = SpectralBand::new(m, q(0.8));
            let r = mk_distance(&MkProblem::new(band, 0.5, 2.5, 1024).unwrap()).unwrap();
            assert!(r.lp_value >= prev - 1e-9, "M={m}: {} < {prev}", r.lp_value);
            prev = r.lp_value;
        }
    }

    #[test]
    fn mk_separates_points() {
        let band = SpectralBand::new(4, q(0.5));
        let solver = MkSolver::new(band, 1024).unwrap();
        for (a, b) in [(0.0, 0.1), (1.0, 3.0), (6.0, 0.2)] {
            let r = solver
                .distance(
                    EvalState::new(a).unwrap(),
                    EvalState::new(b).unwrap(),
                    Execution::Sequential,
                )
                .unwrap();
            assert!(r.lower >= 1e-6, "{a} {b}: {r:?}");
        }
    }

    #[test]
    fn mk_rejects_coarse_grid() {
        let band = SpectralBand::new(10, q(0.5));
        assert_eq!(
            MkProblem::new(band, 0.0, 1.0, 20).unwrap_err(),
            Error::GridTooCoarse { grid: 20, band: 10 }
        );
        assert!(MkSolver::new(band, 21).is_ok());
    }

    #[test]
    fn band_zero_has_zero_distances() {
        let band = SpectralBand::new(0, q(0.5));
        let r = mk_distance(&MkProblem::new(band, 0.0, PI, 16).unwrap()).unwrap();
        assert_eq!(r.upper, 0.0);
        assert_eq!(band.dimension(), 1);
    }

    #[test]
    fn diameter_examples() {
        let band = SpectralBand::new(6, q(0.5));
        assert!(diameter_scan(band, &[1.0], 1024, Execution::Sequential).is_err());
        let same = diameter_scan(band, &[1.0, 1.0], 1024, Execution::Sequential).unwrap();
        assert_eq!(same.max_upper, 0.0);

        let classical = SpectralBand::new(64, QDeformation::CLASSICAL);
        let scan = diameter_scan(classical, &equispaced(8), default_mk_grid(64), Execution::Parallel).unwrap();
        assert!(scan.max_upper <= DIAMETER_BOUND + DIAMETER_SLACK);
        assert!((scan.max_upper - PI).abs() < 2.0 * epsilon_m(64).value, "{scan:?}");
        assert_eq!(scan.argmax.1 - scan.argmax.0, 4);

        let deformed = SpectralBand::new(16, q(0.5));
        let scan = diameter_scan(deformed, &equispaced(8), default_mk_grid(16), Execution::Parallel).unwrap();
        assert!(scan.max_upper <= DIAMETER_BOUND + DIAMETER_SLACK);
        assert_eq!(scan.pairs, 28);
    }

    #[test]
    fn leibniz_examples() {
        for n in [1i64, 2, 7, 1000] {
            assert_eq!(leibniz_ratio(n, QDeformation::CLASSICAL).unwrap(), 1.0);
        }
        // [10]_{1/2} / (2 [5]_{1/2}) = (2^5 + 2^-5) / 2.
        let r = leibniz_ratio(5, q(0.5)).unwrap();
        assert!((r - 16.015625).abs() < 1e-12, "{r}");
        for v in [0.3, 0.5, 0.8] {
            for n in 1..30 {
                let r = leibniz_ratio(n, q(v)).unwrap();
                let exact = r * 2.0 * q_integer(n, q(v)).unwrap();
                assert!((exact - q_integer(2 * n, q(v)).unwrap()).abs() <= 1e-14 * exact);
            }
            let far = leibniz_ratio(60, q(v)).unwrap();
            assert!((far * v.powi(60) - 0.5).abs() < 1e-3);
        }
        assert!(leibniz_ratio(0, q(0.5)).is_err());
        assert!(leibniz_ratio(600, q(0.3)).is_err());
    }

    #[test]
    fn chi_examples() {
        assert_eq!(
            chi_bounds(5, q(0.7), q(0.7)).unwrap(),
            ChiBounds { lower: 0.0, upper: 0.0 }
        );
        assert_eq!(
            chi_bounds(0, q(0.2), q(1.0)).unwrap(),
            ChiBounds { lower: 0.0, upper: 0.0 }
        );
        let c = chi_bounds(2, q(0.9), QDeformation::CLASSICAL).unwrap();
        let expected = 2.0 * (0.9 + 1.0 / 0.9 - 2.0);
        assert!((c.upper - expected).abs() < 1e-14, "{}", c.upper);
        assert!((c.lower - expected / 2.0).abs() < 1e-14);
    }

    #[test]
    fn gh_examples() {
        for m in [0usize, 3, 40] {
            let r = gh_band_bound(m, q(0.6), q(0.6)).unwrap();
            assert_eq!(r.band_bound, 0.0);
            assert_eq!(r.total_upper, 2.0 * r.eps_m);
        }
        let r = gh_band_bound(2, q(0.9), QDeformation::CLASSICAL).unwrap();
        let chi = 2.0 * (0.9 + 1.0 / 0.9 - 2.0);
        let expected = DIAMETER_BOUND * (1.0 - 1.0 / (chi * PI_OVER_SQRT3 + 1.0));
        assert!((r.band_bound - expected).abs() < 1e-14);
        assert!((r.band_bound - 0.1405).abs() < 1e-3, "{}", r.band_bound);
        assert!((r.total_upper - 2.0 * r.eps_m - r.band_bound).abs() < 1e-15);
        // Continuity in q for a fixed band.
        let close = gh_band_bound(10, q(1.0 - 1e-9), QDeformation::CLASSICAL).unwrap();
        assert!((close.total_upper - 2.0 * close.eps_m).abs() < 1e-9);
    }

    #[test]
    fn continuity_examples() {
        let ms: Vec<usize> = (1..=64).collect();
        let scan = continuity_scan(
            QDeformation::CLASSICAL,
            &[QDeformation::CLASSICAL],
            &ms,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(scan.rows[0].bound, scan.rows[0].floor);
        let scan = continuity_scan(q(0.5), &[q(0.5)], &[3, 9], Execution::Sequential).unwrap();
        assert_eq!(scan.rows[0].bound, 2.0 * epsilon_m(9).value);

        let scan = continuity_scan(QDeformation::CLASSICAL, &[q(0.99), q(0.999)], &ms, Execution::Parallel).unwrap();
        for j in 0..ms.len() {
            let far = &scan.reports[j];
            let near = &scan.reports[ms.len() + j];
            assert_eq!(far.m, near.m);
            if far.band_bound > 0.0 {
                assert!(near.total_upper < far.total_upper, "M={}", far.m);
            }
        }
        assert!(scan.rows[1].bound < scan.rows[0].bound);
        let csv = scan.to_csv();
        assert!(csv.starts_with("q,M,chi_lower,chi_upper,band_bound,eps_M,total_upper\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 64);
    }

    #[test]
    fn arclength_wraps() {
        assert!((arclength(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
        assert!((arclength(0.0, PI) - PI).abs() < 1e-15);
    }
}
