//! Laurent polynomials `f = sum_n a_n z^n` on the unit circle.
//!
//! These model the coordinate algebra of the circle and its spectral bands
//! `A_M = span{z^n : |n| <= M}`. The q-calculus acts diagonally on
//! frequencies, so every map here is a coefficientwise rescaling except
//! [`LaurentPoly::multiply`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcalc::{gamma_m, q_integer, QDeformation};

/// Relative noise floor for product coefficients, see [`LaurentPoly::multiply`].
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Smallest grid used by [`LaurentPoly::sup_norm_default`].
pub const MIN_DEFAULT_GRID: usize = 4096;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Finitely supported coefficient family indexed by frequency.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LaurentJson", into = "LaurentJson")]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

/// Wire form: `{"coeffs": [[n, re, im], ...]}` with ascending `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LaurentJson {
    coeffs: Vec<(i64, f64, f64)>,
}

impl TryFrom<LaurentJson> for LaurentPoly {
    type Error = Error;

    fn try_from(json: LaurentJson) -> Result<Self> {
        let mut out = LaurentPoly::zero();
        for (n, re, im) in json.coeffs {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient at frequency {n}"
                )));
            }
            out.add_term(n, Complex64::new(re, im));
        }
        Ok(out)
    }
}

impl From<LaurentPoly> for LaurentJson {
    fn from(p: LaurentPoly) -> Self {
        LaurentJson {
            coeffs: p.coeffs.iter().map(|(&n, c)| (n, c.re, c.im)).collect(),
        }
    }
}

/// Two-sided bracket on the sup-norm from an equispaced grid.
///
/// For a trigonometric polynomial of degree `M` sampled at `N > 2M` points,
/// `grid_max <= |f|_inf <= grid_max / cos(pi M / N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormCert {
    pub grid_max: f64,
    pub corrected_upper: f64,
    pub grid_size: usize,
    pub degree: usize,
}

/// `1 / cos(pi M / N)`, the factor between grid max and sup-norm.
pub fn grid_correction(degree: usize, grid: usize) -> Result<f64> {
    if grid <= 2 * degree {
        return Err(Error::GridTooCoarse { grid, band: degree });
    }
    Ok(1.0 / (PI * degree as f64 / grid as f64).cos())
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn constant(c: Complex64) -> Self {
        LaurentPoly::monomial(0, c)
    }

    pub fn one() -> Self {
        LaurentPoly::constant(Complex64::new(1.0, 0.0))
    }

    /// `c z^n`.
    pub fn monomial(n: i64, c: Complex64) -> Self {
        let mut p = LaurentPoly::zero();
        p.add_term(n, c);
        p
    }

    /// `z^n`.
    pub fn z_pow(n: i64) -> Self {
        LaurentPoly::monomial(n, Complex64::new(1.0, 0.0))
    }

    /// Collects `(n, a_n)` pairs, summing repeated frequencies.
    pub fn from_coeffs<I: IntoIterator<Item = (i64, Complex64)>>(terms: I) -> Self {
        let mut p = LaurentPoly::zero();
        for (n, c) in terms {
            p.add_term(n, c);
        }
        p
    }

    /// Real trigonometric polynomial `sum_n a_n cos(n t) + b_n sin(n t)`,
    /// with `cos_coeffs[0]` and `sin_coeffs[0]` at frequency 1.
    pub fn from_real_trig(cos_coeffs: &[f64], sin_coeffs: &[f64]) -> Self {
        let mut p = LaurentPoly::zero();
        for (idx, (&a, &b)) in cos_coeffs.iter().zip(sin_coeffs).enumerate() {
            let n = idx as i64 + 1;
            p.add_term(n, Complex64::new(a, -b) * 0.5);
            p.add_term(-n, Complex64::new(a, b) * 0.5);
        }
        p
    }

    fn add_term(&mut self, n: i64, c: Complex64) {
        let entry = self.coeffs.entry(n).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&n);
        }
    }

    /// Coefficient of `z^n` (zero when absent).
    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    /// Nonzero coefficients in ascending frequency order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &c)| (n, c))
    }

    /// Number of stored nonzero coefficients.
    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Smallest `M` with support inside `[-M, M]`.
    pub fn band(&self) -> usize {
        self.coeffs.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// `sum |a_n|`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Drops coefficients with modulus at most `threshold`.
    pub fn pruned(mut self, threshold: f64) -> Self {
        self.coeffs.retain(|_, c| c.norm() > threshold);
        self
    }

    fn map_coeffs<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(i64, Complex64) -> Result<Complex64>,
    {
        let mut out = BTreeMap::new();
        for (&n, &c) in &self.coeffs {
            let v = f(n, c)?;
            if v != Complex64::new(0.0, 0.0) {
                out.insert(n, v);
            }
        }
        Ok(LaurentPoly { coeffs: out })
    }

    /// `f(e^{i theta})`, by Horner in `e^{i theta}` over the non-negative
    /// frequencies and in `e^{-i theta}` over the negative ones.
    pub fn eval(&self, theta: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, theta);
        let wbar = w.conj();
        let band = self.band() as i64;
        let mut pos = Complex64::new(0.0, 0.0);
        for n in (0..=band).rev() {
            pos = pos * w + self.coeff(n);
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for n in (1..=band).rev() {
            neg = neg * wbar + self.coeff(-n);
        }
        pos + neg * wbar
    }

    /// Values at `theta_k = 2 pi k / grid` for `k = 0..grid`, by one inverse FFT.
    pub fn grid_values(&self, grid: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); grid];
        if grid == 0 {
            return buf;
        }
        let g = grid as i64;
        for (&n, &c) in &self.coeffs {
            buf[n.rem_euclid(g) as usize] += c;
        }
        PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(grid).process(&mut buf));
        buf
    }

    /// Certified sup-norm bracket on a grid of `grid` points.
    pub fn sup_norm(&self, grid: usize) -> Result<SupNormCert> {
        let degree = self.band();
        let correction = grid_correction(degree, grid)?;
        let grid_max = self.grid_values(grid).iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(SupNormCert {
            grid_max,
            corrected_upper: grid_max * correction,
            grid_size: grid,
            degree,
        })
    }

    /// [`sup_norm`](Self::sup_norm) on `max(4096, 16 * band)` points.
    pub fn sup_norm_default(&self) -> SupNormCert {
        self.sup_norm(default_grid(self.band()))
            .expect("default grid always exceeds twice the band")
    }

    /// Coefficient convolution `(fg)_n = sum_m f_m g_{n-m}`.
    ///
    /// A product coefficient is dropped when it is no larger than
    /// [`PRUNE_THRESHOLD`] times the sum of the moduli of its contributions,
    /// i.e. when it is pure cancellation noise.
    pub fn multiply(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut acc: BTreeMap<i64, (Complex64, f64)> = BTreeMap::new();
        for (&n, &a) in &self.coeffs {
            for (&m, &b) in &other.coeffs {
                let slot = acc.entry(n + m).or_insert((Complex64::new(0.0, 0.0), 0.0));
                let t = a * b;
                slot.0 += t;
                slot.1 += t.norm();
            }
        }
        LaurentPoly {
            coeffs: acc
                .into_iter()
                .filter(|(_, (c, mass))| c.norm() > PRUNE_THRESHOLD * mass)
                .map(|(n, (c, _))| (n, c))
                .collect(),
        }
    }

    /// `(f*)_n = conj(f_{-n})`.
    pub fn adjoint(&self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&n, c)| (-n, c.conj())).collect(),
        }
    }

    /// The automorphism `sigma^power`, which scales `z^n` by `q^(n power)`.
    pub fn sigma(&self, q: QDeformation, power: i32) -> Result<LaurentPoly> {
        self.map_coeffs(|n, c| Ok(c * q.pow(n * power as i64, n)?))
    }

    /// q-derivative: `z^n -> i [n]_q z^n`.
    pub fn d_q(&self, q: QDeformation) -> Result<LaurentPoly> {
        self.map_coeffs(|n, c| Ok(c * Complex64::new(0.0, q_integer(n, q)?)))
    }

    /// q-integral: `z^n -> -i / [n]_q z^n` for `n != 0`, constants to zero.
    pub fn q_integral(&self, q: QDeformation) -> Result<LaurentPoly> {
        self.map_coeffs(|n, c| {
            if n == 0 {
                Ok(Complex64::new(0.0, 0.0))
            } else {
                Ok(c * Complex64::new(0.0, -1.0 / q_integer(n, q)?))
            }
        })
    }

    /// Fejér mean: `z^n -> gamma_M(n, 0) z^n`, landing in `A_M`.
    pub fn fejer(&self, m: u64) -> LaurentPoly {
        self.map_coeffs(|n, c| Ok(c * gamma_m(n, 0, m)))
            .expect("fejer scaling is infallible")
    }

    /// Haar state: the constant coefficient.
    pub fn haar(&self) -> Complex64 {
        self.coeff(0)
    }

    /// `max_n |f_n - g_n|`.
    pub fn max_coeff_distance(&self, other: &LaurentPoly) -> f64 {
        let diff = self - other;
        diff.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.max_coeff_distance(&self.adjoint()) <= tol
    }
}

/// `max(4096, 16 M)`.
pub fn default_grid(band: usize) -> usize {
    MIN_DEFAULT_GRID.max(16 * band)
}

impl Add<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;

    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (&n, &c) in &rhs.coeffs {
            out.add_term(n, c);
        }
        out
    }
}

impl Sub<&LaurentPoly> for &LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (&n, &c) in &rhs.coeffs {
            out.add_term(n, -c);
        }
        out
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&n, &c)| (n, -c)).collect(),
        }
    }
}

impl Mul<Complex64> for &LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: Complex64) -> LaurentPoly {
        self.map_coeffs(|_, c| Ok(c * rhs)).expect("scaling is infallible")
    }
}

impl Mul<f64> for &LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: f64) -> LaurentPoly {
        self * Complex64::new(rhs, 0.0)
    }
}
