//! Property checks run by `qarc verify` and the acceptance suite.
//!
//! Every check is deterministic: random inputs come from fixed seeds, and
//! the sweep sizes depend only on the [`Scale`].

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::laurent::LaurentPoly;
use crate::par::Execution;
use crate::qcalc::{delta_q, epsilon_m, psi_q, q_integer, QDeformation, PI_OVER_SQRT3};
use crate::qms::{
    arclength, chi_bounds, continuity_scan, default_mk_grid, gh_band_bound, leibniz_ratio, mk_matrix, seminorm_lq,
    EvalState, MkSolver, SpectralBand, DIAMETER_BOUND, DIAMETER_SLACK,
};
use crate::sample::{random_poly, random_smooth_poly, seeded_rng};
use crate::schur::{
    conditional_expectation, op_norm, random_operator, schur_apply, BandedOperator, DerivativeSymbol, Ensemble,
    FejerSymbol, IntegralSymbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Quick,
    Full,
}

impl Scale {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Scale::Quick => quick,
            Scale::Full => full,
        }
    }
}

/// Result of one check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    /// Time limit at full scale, if the property has one.
    pub budget_seconds: Option<f64>,
}

type Runner = fn(Scale, Execution) -> Result<Outcome>;

/// A named property with its runner.
#[derive(Clone, Copy)]
pub struct Property {
    pub id: &'static str,
    pub description: &'static str,
    pub budget_seconds: Option<f64>,
    run: Runner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

impl Property {
    pub fn run(&self, scale: Scale, exec: Execution) -> Check {
        let start = Instant::now();
        let outcome = (self.run)(scale, exec).unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let seconds = start.elapsed().as_secs_f64();
        let over_budget = scale == Scale::Full && self.budget_seconds.is_some_and(|b| seconds > b);
        Check {
            id: self.id,
            description: self.description,
            passed: outcome.passed && !over_budget,
            detail: if over_budget {
                format!(
                    "{} (took {seconds:.1}s, budget {:.0}s)",
                    outcome.detail,
                    self.budget_seconds.unwrap_or(0.0)
                )
            } else {
                outcome.detail
            },
            seconds,
            budget_seconds: self.budget_seconds,
        }
    }
}

const fn prop(id: &'static str, description: &'static str, budget_seconds: Option<f64>, run: Runner) -> Property {
    Property {
        id,
        description,
        budget_seconds,
        run,
    }
}

/// The nine acceptance criteria, in order.
pub fn acceptance_criteria() -> Vec<Property> {
    vec![
        prop(
            "fundamental_theorem",
            "f - I_q d_q f = h(f) and g - d_q I_q g = h(g), polynomials and matrices",
            Some(60.0),
            fundamental_theorem,
        ),
        prop(
            "integral_bound",
            "|psi_q T| <= (pi/sqrt3) |T| on random matrices",
            Some(120.0),
            integral_bound,
        ),
        prop(
            "fejer_approximation",
            "|f - fejer(f, M)| <= eps_M L_q(f)",
            Some(120.0),
            fejer_approximation,
        ),
        prop("diameter", "MK upper brackets <= 2 pi / sqrt3", Some(300.0), diameter),
        prop(
            "arclength_recovery",
            "q = 1 MK distance within 2 eps_M + 0.01 of arc length",
            Some(1200.0),
            arclength_recovery,
        ),
        prop(
            "leibniz_failure",
            "[2n]_q / (2 [n]_q) is unbounded for q < 1 and 1 at q = 1",
            Some(1.0),
            leibniz_failure,
        ),
        prop(
            "twist_continuity",
            "continuity scan decreases toward the floor as q -> 1",
            Some(60.0),
            twist_continuity,
        ),
        prop(
            "mk_metric_axioms",
            "MK symmetry, triangle inequality and zero diagonal",
            Some(180.0),
            mk_metric_axioms,
        ),
        prop(
            "sup_norm_certificate",
            "[grid max, corrected upper] contains a 100x finer grid max",
            Some(60.0),
            sup_norm_certificate,
        ),
    ]
}

/// Module invariants not already covered by an acceptance criterion.
pub fn invariants() -> Vec<Property> {
    vec![
        prop(
            "q_integer_antisymmetry",
            "[-n]_q = -[n]_q",
            None,
            q_integer_antisymmetry,
        ),
        prop("q_integer_growth", "|[n]_q| >= |n|", None, q_integer_growth),
        prop(
            "q_integer_branch_continuity",
            "ratio and sum forms agree near q = 1",
            None,
            q_integer_branch_continuity,
        ),
        prop("q_pascal", "[n+m]_q = q^n [m]_q + [n]_q q^-m", None, q_pascal),
        prop(
            "symbol_hermitian",
            "conj(delta_q(k,j)) = delta_q(j,k), same for psi_q",
            None,
            symbol_hermitian,
        ),
        prop("epsilon_monotone", "eps_M strictly decreasing", None, epsilon_monotone),
        prop(
            "twisted_leibniz",
            "d_q(fg) = sigma(f) d_q(g) + d_q(f) sigma^-1(g)",
            None,
            twisted_leibniz,
        ),
        prop(
            "star_compatibility",
            "d_q(f*) = d_q(f)* and sigma(f*) = sigma^-1(f)*",
            None,
            star_compatibility,
        ),
        prop(
            "poincare_functions",
            "|f - h(f)| <= (pi/sqrt3) |d_q f|",
            None,
            poincare_functions,
        ),
        prop(
            "fejer_contraction",
            "|fejer(f, M)| <= |f| and |gamma_M T| <= |T|",
            None,
            fejer_contraction,
        ),
        prop(
            "fourier_coefficient_bound",
            "|a_n| <= |f|",
            None,
            fourier_coefficient_bound,
        ),
        prop(
            "schur_operator_identities",
            "star equivariance, bimodularity, Poincare and eps_M at operator level",
            None,
            schur_operator_identities,
        ),
        prop(
            "mk_rotation_invariance",
            "MK distance depends only on the angle difference",
            None,
            mk_rotation_invariance,
        ),
        prop(
            "mk_band_monotone",
            "MK distance nondecreasing in M",
            None,
            mk_band_monotone,
        ),
        prop(
            "mk_separation",
            "MK distance >= 1e-6 for angles 0.1 apart",
            None,
            mk_separation,
        ),
        prop(
            "leibniz_divergence",
            "ratio q^n -> 1/2 for q in {0.3, 0.5, 0.8}",
            None,
            leibniz_divergence,
        ),
        prop(
            "gh_bound_validity",
            "chi lower <= chi upper and band bound = 0 iff chi upper = 0",
            None,
            gh_bound_validity,
        ),
    ]
}

pub fn all_properties() -> Vec<Property> {
    let mut all = acceptance_criteria();
    all.extend(invariants());
    all
}

pub fn run_all(scale: Scale, exec: Execution) -> Vec<Check> {
    all_properties().iter().map(|p| p.run(scale, exec)).collect()
}

fn q(v: f64) -> QDeformation {
    QDeformation::new(v).expect("fixed deformation parameters are valid")
}

fn equispaced(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// `max_n |a_n - b_n| / |b_n|`; a difference where `b_n = 0` counts as infinite.
fn coeff_rel_error(a: &LaurentPoly, b: &LaurentPoly) -> f64 {
    let diff = a - b;
    diff.iter()
        .map(|(n, d)| {
            let r = b.coeff(n).norm();
            if r == 0.0 {
                f64::INFINITY
            } else {
                d.norm() / r
            }
        })
        .fold(0.0, f64::max)
}

fn entry_rel_error(a: &BandedOperator, b: &BandedOperator, reference: &BandedOperator) -> f64 {
    let w = reference.window() as i64;
    let mut worst = 0.0f64;
    for j in -w..=w {
        for k in -w..=w {
            let d = (a.get(j, k) - b.get(j, k)).norm();
            if d == 0.0 {
                continue;
            }
            let r = reference.get(j, k).norm();
            worst = worst.max(if r == 0.0 { f64::INFINITY } else { d / r });
        }
    }
    worst
}

const FUNDAMENTAL_QS: [f64; 5] = [0.2, 0.5, 0.9, 1.0 - 1e-7, 1.0];

fn fundamental_theorem(scale: Scale, exec: Execution) -> Result<Outcome> {
    let count = scale.pick(50, 500);
    let tol = 1e-12;
    let mut worst_poly = 0.0f64;
    let mut worst_matrix = 0.0f64;
    for (qi, &qv) in FUNDAMENTAL_QS.iter().enumerate() {
        let qq = q(qv);
        let polys = exec.map_range(count, |i| -> Result<f64> {
            let mut rng = seeded_rng(1_000 + (qi * count + i) as u64);
            let band = rng.random_range(0..=32);
            let f = random_poly(&mut rng, band);
            let h = LaurentPoly::constant(f.haar());
            let a = &f - &f.d_q(qq)?.q_integral(qq)?;
            let b = &f - &f.q_integral(qq)?.d_q(qq)?;
            let err = |x: &LaurentPoly| {
                (x - &h)
                    .iter()
                    .map(|(n, d)| d.norm() / f.coeff(n).norm().max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max)
            };
            Ok(err(&a).max(err(&b)))
        });
        for e in polys {
            worst_poly = worst_poly.max(e?);
        }
        let mats = exec.map_range(count, |i| -> Result<f64> {
            let seed = 2_000 + (qi * count + i) as u64;
            let mut rng = seeded_rng(seed);
            let w = rng.random_range(0..=64);
            let t = random_operator(w, seed, Ensemble::ALL[i % 3]);
            let e = conditional_expectation(&t);
            let a = t.sub(&schur_apply(
                &IntegralSymbol(qq),
                &schur_apply(&DerivativeSymbol(qq), &t)?,
            )?)?;
            let b = t.sub(&schur_apply(
                &DerivativeSymbol(qq),
                &schur_apply(&IntegralSymbol(qq), &t)?,
            )?)?;
            Ok(entry_rel_error(&a, &e, &t).max(entry_rel_error(&b, &e, &t)))
        });
        for e in mats {
            worst_matrix = worst_matrix.max(e?);
        }
    }
    Ok(Outcome::new(
        worst_poly <= tol && worst_matrix <= tol,
        format!(
            "{count} polynomials and {count} matrices per q; worst relative error {worst_poly:.2e} (polynomials), {worst_matrix:.2e} (matrices)"
        ),
    ))
}

fn integral_bound(scale: Scale, exec: Execution) -> Result<Outcome> {
    let per_ensemble = scale.pick(20, 200);
    let windows = [4usize, 16, 64];
    let qs = [0.2, 0.5, 0.9, 1.0];
    let jobs: Vec<(Ensemble, usize)> = Ensemble::ALL
        .iter()
        .flat_map(|&e| (0..per_ensemble).map(move |i| (e, i)))
        .collect();
    let ratios = exec.map(&jobs, |&(ens, i)| -> Result<f64> {
        let w = windows[i % windows.len()];
        let qq = q(qs[(i / windows.len()) % qs.len()]);
        let t = random_operator(w, 3_000 + i as u64 + 100_000 * ens as u64, ens);
        let lhs = op_norm(&schur_apply(&IntegralSymbol(qq), &t)?)?;
        Ok(lhs / op_norm(&t)?)
    });
    let mut worst = 0.0f64;
    for r in ratios {
        worst = worst.max(r?);
    }
    let limit = PI_OVER_SQRT3 * (1.0 + 1e-9);
    Ok(Outcome::new(
        worst <= limit,
        format!(
            "{} matrices; largest |psi_q T| / |T| = {worst:.9} (limit {PI_OVER_SQRT3:.9})",
            jobs.len()
        ),
    ))
}

fn fejer_approximation(scale: Scale, exec: Execution) -> Result<Outcome> {
    let per_case = scale.pick(20, 200);
    let ms = [1u64, 4, 16, 64];
    let qs = [0.3, 0.7, 1.0];
    let cases: Vec<(u64, f64, usize)> = ms
        .iter()
        .flat_map(|&m| qs.iter().flat_map(move |&qv| (0..per_case).map(move |i| (m, qv, i))))
        .collect();
    let results = exec.map(&cases, |&(m, qv, i)| -> Result<(f64, f64)> {
        let mut rng = seeded_rng(4_000 + m * 1_000_000 + (qv * 1000.0) as u64 * 1000 + i as u64);
        let band = rng.random_range(1..=64);
        let decay = [0.0, 1.0, 2.0][i % 3];
        let f = random_smooth_poly(&mut rng, band, decay);
        let err = (&f - &f.fejer(m)).sup_norm_default().grid_max;
        let bound = epsilon_m(m).value * seminorm_lq(&f, q(qv))?.upper;
        Ok((err, bound))
    });
    let mut violations = 0;
    let mut worst = 0.0f64;
    for r in results {
        let (err, bound) = r?;
        if err > bound {
            violations += 1;
        }
        worst = worst.max(err / bound);
    }
    Ok(Outcome::new(
        violations == 0,
        format!(
            "{} polynomials; {violations} violations; largest error / bound = {worst:.4}",
            cases.len()
        ),
    ))
}

fn diameter(scale: Scale, exec: Execution) -> Result<Outcome> {
    let ms: &[usize] = scale.pick(&[4, 16], &[4, 16, 64]);
    let angles = equispaced(8);
    let mut worst = 0.0f64;
    let mut count = 0;
    for &m in ms {
        for qv in [0.5, 1.0] {
            let band = SpectralBand::new(m, q(qv));
            let table = mk_matrix(band, &angles, default_mk_grid(m), exec)?;
            for r in table.iter().flatten() {
                worst = worst.max(r.upper);
                count += 1;
            }
        }
    }
    Ok(Outcome::new(
        worst <= DIAMETER_BOUND + DIAMETER_SLACK,
        format!("{count} brackets; largest upper {worst:.9} (bound {DIAMETER_BOUND:.9})"),
    ))
}

/// LP tolerance used when comparing optimal values of different instances.
/// Comparisons put the certified upper value on the large side and the
/// certified lower value on the small side.
const LP_TOLERANCE: f64 = 1e-8;

fn arclength_recovery(scale: Scale, exec: Execution) -> Result<Outcome> {
    let ms: &[usize] = scale.pick(&[16, 64], &[16, 64, 256]);
    let deltas = [PI / 4.0, PI / 2.0, PI];
    // One grid for every band, so the feasible sets nest as M grows.
    let grid = default_mk_grid(*ms.last().expect("non-empty"));
    let solvers = exec.map(ms, |&m| {
        MkSolver::new(SpectralBand::new(m, QDeformation::CLASSICAL), grid)
    });
    let solvers = solvers.into_iter().collect::<Result<Vec<_>>>()?;
    let a = EvalState::new(0.0)?;
    let mut passed = true;
    let mut lines = Vec::new();
    for &delta in &deltas {
        let b = EvalState::new(delta)?;
        let mut prev: Option<f64> = None;
        let mut row = Vec::new();
        for (solver, &m) in solvers.iter().zip(ms) {
            let r = solver.distance(a, b, exec)?;
            let target = arclength(0.0, delta);
            let allowed = 2.0 * epsilon_m(m as u64).value + 0.01;
            let close = (r.lp_value - target).abs() <= allowed;
            let monotone = prev.is_none_or(|p| r.lp_value >= p - LP_TOLERANCE);
            passed &= close && monotone;
            row.push(format!("M={m}: {:.9}", r.lp_value));
            prev = Some(r.lp_lower);
        }
        lines.push(format!("delta={delta:.6} [{}]", row.join(", ")));
    }
    Ok(Outcome::new(passed, format!("N={grid}; {}", lines.join("; "))))
}

fn leibniz_failure(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    let half = q(0.5);
    let mut ok_growth = true;
    let mut ok_asymptotic = true;
    let mut worst_asymptotic = 0.0f64;
    // [2n]_0.5 overflows past n = 511.
    for n in 4..=500 {
        let r = leibniz_ratio(n, half)?;
        ok_growth &= r >= 4.0;
        if n >= 20 {
            let dev = (r * 2.0 * 0.5f64.powi(n as i32) - 1.0).abs();
            worst_asymptotic = worst_asymptotic.max(dev);
            ok_asymptotic &= dev <= 0.01;
        }
    }
    let mut ok_classical = true;
    for n in 1..=1_000_000 {
        ok_classical &= leibniz_ratio(n, QDeformation::CLASSICAL)? == 1.0;
    }
    Ok(Outcome::new(
        ok_growth && ok_asymptotic && ok_classical,
        format!(
            "q=0.5, n in 4..=500: ratio >= 4 {ok_growth}, worst |2 ratio q^n - 1| for n >= 20 {worst_asymptotic:.2e}; q=1, n <= 1e6: ratio exactly 1 {ok_classical}"
        ),
    ))
}

fn twist_continuity(_scale: Scale, exec: Execution) -> Result<Outcome> {
    let qs = [q(0.9), q(0.99), q(0.999)];
    let ms: Vec<usize> = (0..=256).collect();
    let scan = continuity_scan(QDeformation::CLASSICAL, &qs, &ms, exec)?;
    let bounds: Vec<f64> = scan.rows.iter().map(|r| r.bound).collect();
    let floor = scan.rows[0].floor;
    let decreasing = bounds.windows(2).all(|w| w[1] < w[0]) && bounds.iter().all(|b| *b >= floor);

    // Per-band comparison of q = 0.999 against q = 0.9. Bands where both
    // vanish count as satisfied.
    let per_m = ms.len();
    let coarse = &scan.reports[..per_m];
    let fine = &scan.reports[2 * per_m..];
    let failing: Vec<usize> = coarse
        .iter()
        .zip(fine)
        .filter(|(c, f)| !(f.band_bound < 0.1 * c.band_bound || (f.band_bound == 0.0 && c.band_bound == 0.0)))
        .map(|(c, _)| c.m)
        .collect();
    let band_ratio_ok = failing.is_empty();
    let failing_desc = match (failing.first(), failing.last()) {
        (Some(lo), Some(hi)) => format!("{} bands fail, M in {lo}..={hi}", failing.len()),
        _ => "all bands pass".to_string(),
    };
    Ok(Outcome::new(
        decreasing && band_ratio_ok,
        format!(
            "bounds at q=0.9, 0.99, 0.999: {:.6}, {:.6}, {:.6}; floor {floor:.6}; strictly decreasing {decreasing}; band_bound(0.999) < band_bound(0.9) / 10: {failing_desc}",
            bounds[0], bounds[1], bounds[2]
        ),
    ))
}

fn mk_metric_axioms(_scale: Scale, exec: Execution) -> Result<Outcome> {
    let m = 16;
    let angles = equispaced(8);
    let table = mk_matrix(SpectralBand::new(m, q(0.7)), &angles, default_mk_grid(m), exec)?;
    let n = angles.len();
    let mut worst_symmetry = 0.0f64;
    let mut worst_triangle = f64::NEG_INFINITY;
    let mut diagonal_zero = true;
    for i in 0..n {
        diagonal_zero &= table[i][i].lp_value == 0.0 && table[i][i].upper == 0.0 && table[i][i].lower == 0.0;
        for j in 0..n {
            worst_symmetry = worst_symmetry.max((table[i][j].lp_value - table[j][i].lp_value).abs());
            for k in 0..n {
                // lower(i,k) <= rho(i,k) <= rho(i,j) + rho(j,k) <= upper(i,j) + upper(j,k).
                let excess = table[i][k].lower - table[i][j].upper - table[j][k].upper;
                worst_triangle = worst_triangle.max(excess);
            }
        }
    }
    let passed = diagonal_zero && worst_symmetry <= LP_TOLERANCE && worst_triangle <= 0.0;
    Ok(Outcome::new(
        passed,
        format!(
            "M=16, q=0.7, 8 angles: diagonal exactly zero {diagonal_zero}; worst asymmetry {worst_symmetry:.2e}; worst triangle excess {worst_triangle:.3e}"
        ),
    ))
}

fn sup_norm_certificate(scale: Scale, exec: Execution) -> Result<Outcome> {
    let count = scale.pick(100, 1000);
    let results = exec.map_range(count, |i| -> Result<(bool, f64)> {
        let mut rng = seeded_rng(5_000 + i as u64);
        let band = rng.random_range(0..=64);
        let f = random_poly(&mut rng, band);
        let cert = f.sup_norm_default();
        let fine = f
            .grid_values(100 * cert.grid_size)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        // The coarse grid is a subset of the fine one; allow FFT rounding.
        let contains = cert.grid_max <= fine * (1.0 + 1e-12) && fine <= cert.corrected_upper;
        let used = if cert.corrected_upper > cert.grid_max {
            (fine - cert.grid_max) / (cert.corrected_upper - cert.grid_max)
        } else {
            0.0
        };
        Ok((contains, used))
    });
    let mut violations = 0;
    let mut worst_used = 0.0f64;
    for r in results {
        let (ok, used) = r?;
        violations += usize::from(!ok);
        worst_used = worst_used.max(used);
    }
    Ok(Outcome::new(
        violations == 0,
        format!(
            "{count} polynomials; {violations} violations; fine max uses at most {:.1}% of the correction",
            100.0 * worst_used
        ),
    ))
}

fn q_grid() -> Vec<QDeformation> {
    (1..=20).map(|i| q(i as f64 / 20.0)).chain([q(1.0 - 1e-7)]).collect()
}

fn q_integer_antisymmetry(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    let mut checked = 0;
    for qq in q_grid() {
        for n in -500i64..=500 {
            match (q_integer(n, qq), q_integer(-n, qq)) {
                (Ok(a), Ok(b)) => {
                    if a != -b {
                        return Ok(Outcome::new(false, format!("[{n}]_{} = {a}, [-n] = {b}", qq.value())));
                    }
                    checked += 1;
                }
                (Err(_), Err(_)) => {}
                _ => {
                    return Ok(Outcome::new(
                        false,
                        format!("overflow asymmetric at n={n}, q={}", qq.value()),
                    ))
                }
            }
        }
    }
    Ok(Outcome::new(true, format!("{checked} pairs")))
}

fn q_integer_growth(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    let mut checked = 0;
    for qq in q_grid() {
        for n in -500i64..=500 {
            if let Ok(v) = q_integer(n, qq) {
                if v.abs() < n.abs() as f64 * (1.0 - 1e-15) {
                    return Ok(Outcome::new(false, format!("|[{n}]_{}| = {v}", qq.value())));
                }
                checked += 1;
            }
        }
    }
    Ok(Outcome::new(true, format!("{checked} values")))
}

fn q_integer_branch_continuity(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for qv in [1.0 - 1e-6, 1.0 - 1.0000001e-6, 1.0 - 0.9999999e-6] {
        let qq = q(qv);
        for n in 1i64..=200 {
            let sum: f64 = (0..n).map(|k| qv.powi((n - 1 - 2 * k) as i32)).sum();
            worst = worst.max((q_integer(n, qq)? - sum).abs() / sum);
        }
    }
    Ok(Outcome::new(
        worst <= 1e-12,
        format!("worst relative gap {worst:.2e} near |q - 1| = 1e-6"),
    ))
}

fn q_pascal(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for qq in q_grid().into_iter().filter(|qq| qq.value() >= 0.3) {
        for n in -50i64..=50 {
            for m in -50i64..=50 {
                let lhs = q_integer(n + m, qq)?;
                let rhs = qq.pow(n, n)? * q_integer(m, qq)? + q_integer(n, qq)? * qq.pow(-m, m)?;
                let scale = (qq.pow(n, n)? * q_integer(m, qq)?).abs() + (q_integer(n, qq)? * qq.pow(-m, m)?).abs();
                if scale > 0.0 {
                    worst = worst.max((lhs - rhs).abs() / scale);
                }
            }
        }
    }
    Ok(Outcome::new(
        worst <= 1e-12,
        format!("worst relative error {worst:.2e}"),
    ))
}

fn symbol_hermitian(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    for qq in q_grid() {
        for j in -20i64..=20 {
            for k in -20i64..=20 {
                if delta_q(k, j, qq)?.conj() != delta_q(j, k, qq)? || psi_q(k, j, qq)?.conj() != psi_q(j, k, qq)? {
                    return Ok(Outcome::new(false, format!("fails at ({j}, {k}), q = {}", qq.value())));
                }
            }
        }
    }
    Ok(Outcome::new(true, "window [-20, 20], 21 values of q"))
}

fn epsilon_monotone(scale: Scale, exec: Execution) -> Result<Outcome> {
    let top = scale.pick(200u64, 10_000);
    let ms: Vec<u64> = (0..=top + 1).collect();
    let eps = exec.map(&ms, |&m| epsilon_m(m).value);
    let ok = eps.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome::new(
        ok,
        format!(
            "M in 0..={top}; eps_0 = {:.9}, eps_{top} = {:.6e}",
            eps[0], eps[top as usize]
        ),
    ))
}

const LAURENT_QS: [f64; 4] = [0.3, 0.7, 0.99, 1.0];

fn twisted_leibniz(scale: Scale, exec: Execution) -> Result<Outcome> {
    let count = scale.pick(20, 100);
    let mut worst = 0.0f64;
    for (qi, &qv) in LAURENT_QS.iter().enumerate() {
        let qq = q(qv);
        let errs = exec.map_range(count, |i| -> Result<f64> {
            let mut rng = seeded_rng(6_000 + (qi * count + i) as u64);
            let (bf, bg) = (rng.random_range(0..=20), rng.random_range(0..=20));
            let f = random_poly(&mut rng, bf);
            let g = random_poly(&mut rng, bg);
            let lhs = f.multiply(&g).d_q(qq)?;
            let rhs = &f.sigma(qq, 1)?.multiply(&g.d_q(qq)?) + &f.d_q(qq)?.multiply(&g.sigma(qq, -1)?);
            // Scale by the size of the terms being summed.
            let size = f.l1_norm() * g.l1_norm() * q_integer(40, qq)?;
            Ok(lhs.max_coeff_distance(&rhs) / size)
        });
        for e in errs {
            worst = worst.max(e?);
        }
    }
    Ok(Outcome::new(
        worst <= 1e-12,
        format!("{count} pairs per q; worst scaled error {worst:.2e}"),
    ))
}

fn star_compatibility(scale: Scale, _exec: Execution) -> Result<Outcome> {
    let count = scale.pick(20, 100);
    let mut rng = seeded_rng(7_000);
    let mut worst = 0.0f64;
    for &qv in &LAURENT_QS {
        let qq = q(qv);
        for _ in 0..count {
            let band = rng.random_range(0..=20);
            let f = random_poly(&mut rng, band);
            worst = worst.max(coeff_rel_error(&f.adjoint().d_q(qq)?, &f.d_q(qq)?.adjoint()));
            worst = worst.max(coeff_rel_error(&f.adjoint().sigma(qq, 1)?, &f.sigma(qq, -1)?.adjoint()));
        }
    }
    Ok(Outcome::new(
        worst <= 1e-14,
        format!("{count} polynomials per q; largest relative difference {worst:.2e}"),
    ))
}

fn poincare_functions(scale: Scale, exec: Execution) -> Result<Outcome> {
    let count = scale.pick(30, 200);
    let mut worst = 0.0f64;
    for (qi, &qv) in LAURENT_QS.iter().enumerate() {
        let qq = q(qv);
        let ratios = exec.map_range(count, |i| -> Result<f64> {
            let mut rng = seeded_rng(8_000 + (qi * count + i) as u64);
            let band = rng.random_range(1..=32);
            let f = random_smooth_poly(&mut rng, band, 1.0);
            let centered = &f - &LaurentPoly::constant(f.haar());
            let lhs = centered.sup_norm_default().grid_max;
            let rhs = PI_OVER_SQRT3 * f.d_q(qq)?.sup_norm_default().corrected_upper;
            Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
        });
        for r in ratios {
            worst = worst.max(r?);
        }
    }
    Ok(Outcome::new(worst <= 1.0, format!("largest lhs / rhs {worst:.4}")))
}

fn fejer_contraction(scale: Scale, exec: Execution) -> Result<Outcome> {
    let count = scale.pick(30, 200);
    let results = exec.map_range(count, |i| -> Result<(f64, f64)> {
        let mut rng = seeded_rng(9_000 + i as u64);
        let band = rng.random_range(0..=40);
        let m = rng.random_range(0..=50u64);
        let f = random_poly(&mut rng, band);
        let poly = f.fejer(m).sup_norm_default().grid_max / f.sup_norm_default().corrected_upper;
        let w = rng.random_range(1..=32);
        let t = random_operator(w, 9_500 + i as u64, Ensemble::ALL[i % 3]);
        let op = op_norm(&schur_apply(&FejerSymbol(m), &t)?)? / op_norm(&t)?;
        Ok((poly, op))
    });
    let (mut worst_poly, mut worst_op) = (0.0f64, 0.0f64);
    for r in results {
        let (p, o) = r?;
        worst_poly = worst_poly.max(p);
        worst_op = worst_op.max(o);
    }
    Ok(Outcome::new(
        worst_poly <= 1.0 && worst_op <= 1.0 + 1e-12,
        format!("largest ratio {worst_poly:.6} (functions), {worst_op:.12} (operators)"),
    ))
}

fn fourier_coefficient_bound(scale: Scale, _exec: Execution) -> Result<Outcome> {
    let count = scale.pick(100, 500);
    let mut rng = seeded_rng(10_000);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let band = rng.random_range(0..=64);
        let f = random_poly(&mut rng, band);
        let upper = f.sup_norm_default().corrected_upper;
        worst = worst.max(f.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max) / upper);
    }
    Ok(Outcome::new(worst <= 1.0, format!("largest |a_n| / |f| {worst:.4}")))
}

fn schur_operator_identities(scale: Scale, exec: Execution) -> Result<Outcome> {
    let count = scale.pick(10, 60);
    let qs = [0.5, 0.9, 1.0];
    let results = exec.map_range(count * qs.len(), |idx| -> Result<[f64; 4]> {
        let qq = q(qs[idx % qs.len()]);
        let i = idx / qs.len();
        let mut rng = seeded_rng(11_000 + idx as u64);
        let w = rng.random_range(2..=24);
        let t = random_operator(w, 11_500 + idx as u64, Ensemble::ALL[i % 3]);
        let d = DerivativeSymbol(qq);

        let star = schur_apply(&d, &t.adjoint())?.max_entry_distance(&schur_apply(&d, &t)?.adjoint());

        let diag = |seed: u64| {
            let mut r = seeded_rng(seed);
            let entries: Vec<Complex64> = (0..t.dim()).map(|_| crate::sample::complex_gaussian(&mut r)).collect();
            BandedOperator::diagonal(w, &entries)
        };
        let (d1, d2) = (diag(12_000 + idx as u64)?, diag(13_000 + idx as u64)?);
        let sandwiched = d1.compose(&t)?.compose(&d2)?;
        let lhs = schur_apply(&d, &sandwiched)?;
        let rhs = d1.compose(&schur_apply(&d, &t)?)?.compose(&d2)?;
        let bimod = lhs.max_entry_distance(&rhs) / rhs.max_abs_entry().max(f64::MIN_POSITIVE);

        let dt = op_norm(&schur_apply(&d, &t)?)?;
        let poincare = op_norm(&t.sub(&conditional_expectation(&t))?)? / (PI_OVER_SQRT3 * dt);

        // Compression of a smooth polynomial, where both sides are moderate.
        let f = random_smooth_poly(&mut rng, w.min(12), 2.0);
        let tf = BandedOperator::from_laurent(&f, w);
        let m = rng.random_range(0..=8u64);
        let approx = op_norm(&tf.sub(&schur_apply(&FejerSymbol(m), &tf)?)?)?
            / (epsilon_m(m).value * op_norm(&schur_apply(&d, &tf)?)?).max(f64::MIN_POSITIVE);
        let generic = op_norm(&t.sub(&schur_apply(&FejerSymbol(m), &t)?)?)? / (epsilon_m(m).value * dt);
        Ok([star, bimod, poincare, approx.max(generic)])
    });
    let mut worst = [0.0f64; 4];
    for r in results {
        let r = r?;
        for (w, v) in worst.iter_mut().zip(r) {
            *w = w.max(v);
        }
    }
    let passed = worst[0] == 0.0 && worst[1] <= 1e-12 && worst[2] <= 1.0 + 1e-12 && worst[3] <= 1.0 + 1e-12;
    Ok(Outcome::new(
        passed,
        format!(
            "star difference {:.1e}; bimodularity {:.1e}; Poincare ratio {:.4}; eps_M ratio {:.4}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

fn mk_rotation_invariance(scale: Scale, exec: Execution) -> Result<Outcome> {
    let m = scale.pick(8, 32);
    let grid = default_mk_grid(m);
    let solver = MkSolver::new(SpectralBand::new(m, q(0.7)), grid)?;
    let step = 2.0 * PI / grid as f64;
    let base = solver.distance(EvalState::new(0.0)?, EvalState::new(96.0 * step)?, exec)?;
    let mut worst = 0.0f64;
    for shift in [1usize, 17, 200, 511] {
        let a = shift as f64 * step;
        let r = solver.distance(EvalState::new(a)?, EvalState::new(a + 96.0 * step)?, exec)?;
        worst = worst.max((r.lp_value - base.lp_value).abs());
    }
    Ok(Outcome::new(
        worst <= LP_TOLERANCE,
        format!("M={m}, shifts by grid multiples; largest change {worst:.2e}"),
    ))
}

fn mk_band_monotone(scale: Scale, exec: Execution) -> Result<Outcome> {
    let ms: &[usize] = scale.pick(&[1, 2, 4, 8, 16], &[1, 2, 4, 8, 16, 32, 64]);
    let grid = default_mk_grid(*ms.last().expect("non-empty"));
    let mut passed = true;
    let mut values = Vec::new();
    for qv in [0.5, 1.0] {
        let mut prev = 0.0;
        for &m in ms {
            let r = MkSolver::new(SpectralBand::new(m, q(qv)), grid)?.distance(
                EvalState::new(0.3)?,
                EvalState::new(2.0)?,
                exec,
            )?;
            passed &= r.lp_value >= prev - LP_TOLERANCE;
            prev = r.lp_lower;
            values.push(format!("{:.6}", r.lp_value));
        }
    }
    Ok(Outcome::new(
        passed,
        format!("N={grid}, theta 0.3 vs 2.0, q=0.5 then q=1: {}", values.join(", ")),
    ))
}

fn mk_separation(scale: Scale, exec: Execution) -> Result<Outcome> {
    let ms: &[usize] = scale.pick(&[1, 4], &[1, 4, 16]);
    let mut smallest = f64::INFINITY;
    for &m in ms {
        for qv in [0.3, 0.7, 1.0] {
            let solver = MkSolver::new(SpectralBand::new(m, q(qv)), default_mk_grid(m))?;
            for &(a, b) in &[(0.0, 0.1), (1.0, 1.1), (0.05, 6.2), (2.0, 5.0)] {
                let r = solver.distance(EvalState::new(a)?, EvalState::new(b)?, exec)?;
                smallest = smallest.min(r.lower);
            }
        }
    }
    Ok(Outcome::new(
        smallest >= 1e-6,
        format!("smallest certified lower bound {smallest:.3e}"),
    ))
}

fn leibniz_divergence(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    let mut details = Vec::new();
    let mut passed = true;
    for qv in [0.3, 0.5, 0.8] {
        let qq = q(qv);
        let devs: Vec<f64> = [5i64, 10, 20, 40]
            .iter()
            .map(|&n| leibniz_ratio(n, qq).map(|r| (r * qv.powi(n as i32) - 0.5).abs()))
            .collect::<Result<_>>()?;
        passed &= devs.windows(2).all(|w| w[1] <= w[0] + 1e-12) && devs[3] < 1e-3;
        details.push(format!("q={qv}: {:.2e}", devs[3]));
    }
    Ok(Outcome::new(
        passed,
        format!("|ratio q^n - 1/2| at n=40: {}", details.join(", ")),
    ))
}

fn gh_bound_validity(_scale: Scale, _exec: Execution) -> Result<Outcome> {
    let mut checked = 0;
    for m in [0usize, 1, 2, 5, 16, 64] {
        for qv in [0.3, 0.7, 0.9, 0.999, 1.0] {
            for q0v in [0.5, 0.9, 1.0] {
                let chi = chi_bounds(m, q(qv), q(q0v))?;
                let r = gh_band_bound(m, q(qv), q(q0v))?;
                if chi.lower > chi.upper || (r.band_bound == 0.0) != (r.chi_upper == 0.0) || r.band_bound < 0.0 {
                    return Ok(Outcome::new(false, format!("fails at M={m}, q={qv}, q0={q0v}")));
                }
                checked += 1;
            }
        }
    }
    Ok(Outcome::new(true, format!("{checked} (M, q, q0) triples")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let mut ids: Vec<&str> = all_properties().iter().map(|p| p.id).collect();
        ids.sort_unstable();
        let before = ids.len();
        ids.dedup();
        assert_eq!(before, ids.len());
        assert_eq!(acceptance_criteria().len(), 9);
    }

    #[test]
    fn cheap_invariants_hold_at_quick_scale() {
        for p in invariants().iter().filter(|p| !p.id.starts_with("mk_")) {
            let c = p.run(Scale::Quick, Execution::Parallel);
            assert!(c.passed, "{}: {}", c.id, c.detail);
        }
    }
}
