//! Finite windows of operators on `l2(Z)` and Schur multipliers acting on them.
//!
//! A [`BandedOperator`] is the compression of an infinite matrix `(T_jk)` to
//! indices `j, k` in `[-W, W]`. A Schur multiplier acts entrywise,
//! `M(mu)(T)_jk = mu(j, k) T_jk`, so it commutes with compression: every
//! norm inequality for a multiplier on `B(l2(Z))` holds verbatim for every
//! finite window, and conversely the operator norm of `T` is the supremum of
//! the norms of its compressions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;
use crate::qcalc::{delta_q, gamma_m, psi_q, QDeformation};
use crate::sample::{complex_gaussian, seeded_rng};

/// Largest window for which [`op_norm`] uses a full singular value decomposition.
pub const DENSE_SVD_MAX_WINDOW: usize = 64;

/// Relative change of the Rayleigh quotient that ends power iteration.
pub const POWER_TOLERANCE: f64 = 1e-10;

/// Iteration cap for power iteration.
pub const POWER_MAX_ITERATIONS: usize = 100_000;

/// Dense `(2W+1) x (2W+1)` complex matrix indexed by `j, k` in `[-W, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    window: usize,
    entries: DMatrix<Complex64>,
}

/// An entrywise symbol `mu: Z x Z -> C`.
pub trait Symbol {
    fn entry(&self, j: i64, k: i64) -> Result<Complex64>;
}

impl<F> Symbol for F
where
    F: Fn(i64, i64) -> Result<Complex64>,
{
    fn entry(&self, j: i64, k: i64) -> Result<Complex64> {
        self(j, k)
    }
}

/// `i [j - k]_q`.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeSymbol(pub QDeformation);

/// `-i / [j - k]_q` off the diagonal.
#[derive(Debug, Clone, Copy)]
pub struct IntegralSymbol(pub QDeformation);

/// Triangular window of half-width `M`.
#[derive(Debug, Clone, Copy)]
pub struct FejerSymbol(pub u64);

/// `delta_jk`, the symbol of the conditional expectation.
#[derive(Debug, Clone, Copy)]
pub struct KroneckerSymbol;

impl Symbol for DerivativeSymbol {
    fn entry(&self, j: i64, k: i64) -> Result<Complex64> {
        delta_q(j, k, self.0)
    }
}

impl Symbol for IntegralSymbol {
    fn entry(&self, j: i64, k: i64) -> Result<Complex64> {
        psi_q(j, k, self.0)
    }
}

impl Symbol for FejerSymbol {
    fn entry(&self, j: i64, k: i64) -> Result<Complex64> {
        Ok(Complex64::new(gamma_m(j, k, self.0), 0.0))
    }
}

impl Symbol for KroneckerSymbol {
    fn entry(&self, j: i64, k: i64) -> Result<Complex64> {
        Ok(Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0))
    }
}

/// Random ensembles for property checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// i.i.d. standard complex gaussian entries.
    Gaussian,
    /// Gaussian entries kept with probability [`SPARSE_DENSITY`].
    Sparse,
    /// `v v*` for a gaussian vector `v`.
    RankOne,
}

pub const SPARSE_DENSITY: f64 = 0.1;

impl Ensemble {
    pub const ALL: [Ensemble; 3] = [Ensemble::Gaussian, Ensemble::Sparse, Ensemble::RankOne];
}

impl BandedOperator {
    pub fn zeros(window: usize) -> Self {
        let d = 2 * window + 1;
        BandedOperator {
            window,
            entries: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(window: usize) -> Self {
        let d = 2 * window + 1;
        BandedOperator {
            window,
            entries: DMatrix::identity(d, d),
        }
    }

    /// Wraps a matrix whose side must be `2W + 1`.
    pub fn from_matrix(window: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        let d = 2 * window + 1;
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, window {window} needs {d}x{d}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(BandedOperator { window, entries })
    }

    /// Builds the window from a function of the indices `(j, k)`.
    pub fn from_fn<F: FnMut(i64, i64) -> Complex64>(window: usize, mut f: F) -> Self {
        let w = window as i64;
        let d = 2 * window + 1;
        BandedOperator {
            window,
            entries: DMatrix::from_fn(d, d, |r, c| f(r as i64 - w, c as i64 - w)),
        }
    }

    /// Compression of the multiplication operator by `f`: `T_jk = a_{j-k}`.
    pub fn from_laurent(f: &LaurentPoly, window: usize) -> Self {
        BandedOperator::from_fn(window, |j, k| f.coeff(j - k))
    }

    /// Compression of the bilateral shift `U`, i.e. `e_{k+1, k}`.
    pub fn shift(window: usize) -> Self {
        BandedOperator::from_laurent(&LaurentPoly::z_pow(1), window)
    }

    /// Matrix unit `e_{jk}`.
    pub fn matrix_unit(window: usize, j: i64, k: i64) -> Self {
        BandedOperator::from_fn(window, |a, b| {
            Complex64::new(if a == j && b == k { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// Diagonal operator with `diag[j + W]` at position `(j, j)`.
    pub fn diagonal(window: usize, diag: &[Complex64]) -> Result<Self> {
        let d = 2 * window + 1;
        if diag.len() != d {
            return Err(Error::InvalidArgument(format!(
                "diagonal has {} entries, need {d}",
                diag.len()
            )));
        }
        Ok(BandedOperator {
            window,
            entries: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dim(&self) -> usize {
        2 * self.window + 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Entry `T_jk` for `j, k` in `[-W, W]`.
    pub fn get(&self, j: i64, k: i64) -> Complex64 {
        let w = self.window as i64;
        self.entries[((j + w) as usize, (k + w) as usize)]
    }

    /// `(T*)_jk = conj(T_kj)`.
    pub fn adjoint(&self) -> Self {
        BandedOperator {
            window: self.window,
            entries: self.entries.adjoint(),
        }
    }

    pub fn sub(&self, other: &BandedOperator) -> Result<Self> {
        self.same_window(other)?;
        Ok(BandedOperator {
            window: self.window,
            entries: &self.entries - &other.entries,
        })
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &BandedOperator) -> Result<Self> {
        self.same_window(other)?;
        Ok(BandedOperator {
            window: self.window,
            entries: &self.entries * &other.entries,
        })
    }

    fn same_window(&self, other: &BandedOperator) -> Result<()> {
        if self.window != other.window {
            return Err(Error::InvalidArgument(format!(
                "window mismatch: {} vs {}",
                self.window, other.window
            )));
        }
        Ok(())
    }

    /// `max_jk |T_jk - S_jk|`.
    pub fn max_entry_distance(&self, other: &BandedOperator) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

/// Entrywise product with the symbol; the window is preserved.
pub fn schur_apply<S: Symbol + ?Sized>(symbol: &S, t: &BandedOperator) -> Result<BandedOperator> {
    let w = t.window as i64;
    let mut out = t.entries.clone();
    for c in 0..out.ncols() {
        for r in 0..out.nrows() {
            let mu = symbol.entry(r as i64 - w, c as i64 - w)?;
            out[(r, c)] *= mu;
        }
    }
    Ok(BandedOperator {
        window: t.window,
        entries: out,
    })
}

/// Diagonal part of `T`.
pub fn conditional_expectation(t: &BandedOperator) -> BandedOperator {
    let d = t.dim();
    BandedOperator {
        window: t.window,
        entries: DMatrix::from_fn(d, d, |r, c| {
            if r == c {
                t.entries[(r, c)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    }
}

/// Largest singular value.
///
/// Windows up to [`DENSE_SVD_MAX_WINDOW`] use the full singular value
/// decomposition; larger ones use [`op_norm_power`].
pub fn op_norm(t: &BandedOperator) -> Result<f64> {
    if t.window <= DENSE_SVD_MAX_WINDOW {
        Ok(op_norm_svd(t))
    } else {
        op_norm_power(t).map(|r| r.value)
    }
}

/// Largest singular value from the full decomposition.
pub fn op_norm_svd(t: &BandedOperator) -> f64 {
    t.entries.singular_values().iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub value: f64,
    pub iterations: usize,
}

/// Power iteration on `T* T` from a fixed start vector, stopped when the
/// Rayleigh quotient changes by less than [`POWER_TOLERANCE`] relative.
pub fn op_norm_power(t: &BandedOperator) -> Result<PowerIteration> {
    let d = t.dim();
    let a = &t.entries;
    let mut v = DVector::from_fn(d, |i, _| {
        Complex64::new(1.0 + 0.5 * (i as f64 + 1.0).sin(), 0.25 * (0.7 * i as f64).cos())
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut prev = 0.0f64;
    for it in 1..=POWER_MAX_ITERATIONS {
        let tv = a * &v;
        let w = a.ad_mul(&tv);
        let lambda = tv.norm_squared();
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(PowerIteration {
                value: 0.0,
                iterations: it,
            });
        }
        if it > 1 && (lambda - prev).abs() <= POWER_TOLERANCE * lambda {
            return Ok(PowerIteration {
                value: lambda.sqrt(),
                iterations: it,
            });
        }
        prev = lambda;
        v = w / Complex64::new(wn, 0.0);
    }
    Err(Error::PowerIterationStalled {
        iterations: POWER_MAX_ITERATIONS,
    })
}

/// Deterministic sample from `ensemble` on window `W`.
pub fn random_operator(window: usize, seed: u64, ensemble: Ensemble) -> BandedOperator {
    let mut rng = seeded_rng(seed);
    let d = 2 * window + 1;
    let entries = match ensemble {
        Ensemble::Gaussian => DMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng)),
        Ensemble::Sparse => DMatrix::from_fn(d, d, |_, _| {
            let keep = rng.random_bool(SPARSE_DENSITY);
            let z = complex_gaussian(&mut rng);
            if keep {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
        Ensemble::RankOne => {
            let v = DVector::from_fn(d, |_, _| complex_gaussian(&mut rng));
            &v * v.adjoint()
        }
    };
    BandedOperator { window, entries }
}

/// Debug wire form: window plus row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct OperatorJson {
    window: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for BandedOperator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        OperatorJson {
            window: self.window,
            entries: (0..d)
                .map(|r| {
                    (0..d)
                        .map(|c| [self.entries[(r, c)].re, self.entries[(r, c)].im])
                        .collect()
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BandedOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = OperatorJson::deserialize(deserializer)?;
        let d = 2 * json.window + 1;
        if json.entries.len() != d || json.entries.iter().any(|row| row.len() != d) {
            return Err(serde::de::Error::custom(format!(
                "entries must be {d}x{d} for window {}",
                json.window
            )));
        }
        Ok(BandedOperator {
            window: json.window,
            entries: DMatrix::from_fn(d, d, |r, c| {
                let [re, im] = json.entries[r][c];
                Complex64::new(re, im)
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcalc::{epsilon_m, PI_OVER_SQRT3};
    use crate::sample::random_smooth_poly;

    fn q(v: f64) -> QDeformation {
        QDeformation::new(v).unwrap()
    }

    fn one(_: i64, _: i64) -> Result<Complex64> {
        Ok(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn schur_apply_examples() {
        let t = random_operator(5, 1, Ensemble::Gaussian);
        assert_eq!(schur_apply(&one, &t).unwrap(), t);
        assert_eq!(schur_apply(&KroneckerSymbol, &t).unwrap(), conditional_expectation(&t));
        let qq = q(0.6);
        let back = schur_apply(&IntegralSymbol(qq), &schur_apply(&DerivativeSymbol(qq), &t).unwrap()).unwrap();
        let expected = t.sub(&conditional_expectation(&t)).unwrap();
        assert!(back.max_entry_distance(&expected) < 1e-14);
    }

    #[test]
    fn symbol_overflow_propagates() {
        let t = BandedOperator::identity(600);
        let err = schur_apply(&DerivativeSymbol(q(0.3)), &t).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&BandedOperator::identity(6)).unwrap() - 1.0).abs() < 1e-13);
        assert!((op_norm(&BandedOperator::identity(80)).unwrap() - 1.0).abs() < 1e-9);
        assert!((op_norm(&BandedOperator::matrix_unit(4, -2, 3)).unwrap() - 1.0).abs() < 1e-13);
        // The shift compression is a partial isometry: singular values 1 (x16) and 0.
        let s = BandedOperator::shift(8);
        let mut sv: Vec<f64> = s.matrix().singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        assert!(sv[0].abs() < 1e-12);
        assert!(sv[1..].iter().all(|x| (x - 1.0).abs() < 1e-12));
        assert!((op_norm(&s).unwrap() - 1.0).abs() < 1e-13);
        assert!((op_norm_power(&s).unwrap().value - 1.0).abs() < 1e-9);
        assert_eq!(op_norm(&BandedOperator::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn power_iteration_matches_svd() {
        for w in [2usize, 8, 32, 64] {
            for (i, e) in Ensemble::ALL.iter().enumerate() {
                let t = random_operator(w, 100 + i as u64, *e);
                let svd = op_norm_svd(&t);
                let pow = op_norm_power(&t).unwrap().value;
                assert!((svd - pow).abs() <= 1e-6 * svd, "W={w} {e:?}: {svd} vs {pow}");
            }
        }
    }

    #[test]
    fn conditional_expectation_examples() {
        let t = random_operator(6, 9, Ensemble::Gaussian);
        let e = conditional_expectation(&t);
        assert_eq!(conditional_expectation(&e), e);
        let diag = BandedOperator::diagonal(2, &[Complex64::new(1.0, 2.0); 5]).unwrap();
        assert_eq!(conditional_expectation(&diag), diag);
        let off = t.sub(&e).unwrap();
        assert!((-6..=6).all(|j| off.get(j, j) == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn random_operator_examples() {
        for e in Ensemble::ALL {
            assert_eq!(random_operator(7, 42, e), random_operator(7, 42, e));
        }
        assert_ne!(
            random_operator(7, 42, Ensemble::Gaussian),
            random_operator(7, 43, Ensemble::Gaussian)
        );
        assert!(op_norm(&random_operator(16, 5, Ensemble::Gaussian)).unwrap() > 0.0);
        // Rank one: vv* has norm |v|^2, which is its trace.
        let r = random_operator(10, 8, Ensemble::RankOne);
        let trace: f64 = (-10..=10).map(|j| r.get(j, j).re).sum();
        assert!((op_norm(&r).unwrap() - trace).abs() < 1e-12 * trace);
        let sparse = random_operator(30, 3, Ensemble::Sparse);
        let nnz = sparse.matrix().iter().filter(|z| z.norm() > 0.0).count() as f64;
        let density = nnz / (61.0 * 61.0);
        assert!((0.07..0.13).contains(&density), "{density}");
    }

    #[test]
    fn window_mismatch_is_rejected() {
        let a = BandedOperator::identity(2);
        let b = BandedOperator::identity(3);
        assert!(a.sub(&b).is_err());
        assert!(BandedOperator::from_matrix(2, DMatrix::zeros(4, 5)).is_err());
    }

    #[test]
    fn laurent_compression_intertwines_derivative() {
        let mut rng = seeded_rng(4);
        let f = random_smooth_poly(&mut rng, 6, 1.0);
        let qq = q(0.7);
        let lhs = schur_apply(&DerivativeSymbol(qq), &BandedOperator::from_laurent(&f, 10)).unwrap();
        let rhs = BandedOperator::from_laurent(&f.d_q(qq).unwrap(), 10);
        assert!(lhs.max_entry_distance(&rhs) < 1e-13);
    }

    #[test]
    fn symbols_are_star_equivariant_and_bimodular() {
        let qq = q(0.45);
        for seed in 0..5 {
            let t = random_operator(6, seed, Ensemble::Gaussian);
            let a = schur_apply(&DerivativeSymbol(qq), &t.adjoint()).unwrap();
            let b = schur_apply(&DerivativeSymbol(qq), &t).unwrap().adjoint();
            assert!(a.max_entry_distance(&b) < 1e-13);

            let mut rng = seeded_rng(seed + 50);
            let d1: Vec<_> = (0..13).map(|_| complex_gaussian(&mut rng)).collect();
            let d2: Vec<_> = (0..13).map(|_| complex_gaussian(&mut rng)).collect();
            let d1 = BandedOperator::diagonal(6, &d1).unwrap();
            let d2 = BandedOperator::diagonal(6, &d2).unwrap();
            for sym in [
                &DerivativeSymbol(qq) as &dyn Symbol,
                &IntegralSymbol(qq),
                &FejerSymbol(3),
            ] {
                let lhs = schur_apply(sym, &d1.compose(&t).unwrap().compose(&d2).unwrap()).unwrap();
                let rhs = d1
                    .compose(&schur_apply(sym, &t).unwrap())
                    .unwrap()
                    .compose(&d2)
                    .unwrap();
                assert!(lhs.max_entry_distance(&rhs) <= 1e-12 * (1.0 + rhs.max_abs_entry()));
            }
        }
    }

    #[test]
    fn integral_and_fejer_contract() {
        for (seed, w) in [(1u64, 4usize), (2, 16), (3, 40)] {
            for e in Ensemble::ALL {
                let t = random_operator(w, seed, e);
                let n = op_norm(&t).unwrap();
                for v in [0.2, 0.5, 0.9, 1.0] {
                    let s = op_norm(&schur_apply(&IntegralSymbol(q(v)), &t).unwrap()).unwrap();
                    assert!(s <= PI_OVER_SQRT3 * n * (1.0 + 1e-9));
                }
                for m in [0u64, 2, 7] {
                    let s = op_norm(&schur_apply(&FejerSymbol(m), &t).unwrap()).unwrap();
                    assert!(s <= n * (1.0 + 1e-9), "M={m}: {s} > {n}");
                }
            }
        }
    }

    #[test]
    fn poincare_and_fejer_bounds_at_operator_level() {
        let mut rng = seeded_rng(77);
        for v in [0.3, 0.8, 1.0] {
            let qq = q(v);
            for seed in 0..4 {
                // Laurent compressions keep both sides moderate; random T checks the raw statement.
                let f = random_smooth_poly(&mut rng, 12, 2.0);
                for t in [
                    BandedOperator::from_laurent(&f, 24),
                    random_operator(12, seed, Ensemble::Gaussian),
                ] {
                    let dt = op_norm(&schur_apply(&DerivativeSymbol(qq), &t).unwrap()).unwrap();
                    let off = op_norm(&t.sub(&conditional_expectation(&t)).unwrap()).unwrap();
                    assert!(off <= PI_OVER_SQRT3 * dt * (1.0 + 1e-9));
                    for m in [1u64, 4, 16] {
                        let approx = t.sub(&schur_apply(&FejerSymbol(m), &t).unwrap()).unwrap();
                        let lhs = op_norm(&approx).unwrap();
                        assert!(lhs <= epsilon_m(m).value * dt * (1.0 + 1e-9), "q={v} M={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let t = random_operator(2, 5, Ensemble::Sparse);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with(r#"{"window":2,"entries":[["#));
        let back: BandedOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<BandedOperator>(r#"{"window":1,"entries":[[[0,0]]]}"#).is_err());
    }
}
