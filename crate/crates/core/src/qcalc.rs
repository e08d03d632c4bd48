//! Scalar q-arithmetic and the Schur symbols built from it.
//!
//! The q-integer `[n]_q = (q^n - q^-n) / (q - q^-1)` deforms the integer `n`
//! and equals `n` at `q = 1`. The three symbols of the calculus are
//!
//! - `delta_q(j, k) = i [j - k]_q`, the q-derivative,
//! - `psi_q(j, k) = -i / [j - k]_q` off the diagonal, the q-integral,
//! - `gamma_m(j, k)`, the triangular Fejér window of half-width `M`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `pi / sqrt(3)`, the cb-norm bound of the q-integral.
pub const PI_OVER_SQRT3: f64 = 1.813_799_364_234_217_8;

/// Below this distance from 1 the q-integer is summed as a geometric series.
pub const STABLE_BRANCH_THRESHOLD: f64 = 1e-6;

/// Number of tail terms of `sum 1/k^2` summed explicitly by [`epsilon_m`].
pub const EXPLICIT_TAIL_TERMS: u64 = 1_000_000;

/// Deformation parameter `q` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QDeformation(f64);

impl QDeformation {
    /// The undeformed point `q = 1`.
    pub const CLASSICAL: QDeformation = QDeformation(1.0);

    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q > 0.0 && q <= 1.0 {
            Ok(QDeformation(q))
        } else {
            Err(Error::InvalidDeformation(q))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }

    /// `-ln q`, accurate near `q = 1`.
    #[inline]
    fn log_inverse(self) -> f64 {
        -(self.0 - 1.0).ln_1p()
    }

    /// `q^e` for an integer exponent, with overflow reported against `n`.
    pub fn pow(self, e: i64, n: i64) -> Result<f64> {
        if self.is_classical() || e == 0 {
            return Ok(1.0);
        }
        let v = if let Ok(small) = i32::try_from(e) {
            self.0.powi(small)
        } else {
            (-(e as f64) * self.log_inverse()).exp()
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { n, q: self.0 })
        }
    }
}

impl TryFrom<f64> for QDeformation {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        QDeformation::new(q)
    }
}

impl From<QDeformation> for f64 {
    fn from(q: QDeformation) -> f64 {
        q.0
    }
}

/// The q-integer `[n]_q`.
///
/// At `q = 1` this is `n` exactly. Within [`STABLE_BRANCH_THRESHOLD`] of 1 it
/// is evaluated as the symmetric geometric sum `sum_k q^(|n|-1-2k)`; further
/// away as `sinh(|n| h) / sinh(h)` with `h = -ln q`, which is the defining
/// ratio with the common factor removed.
pub fn q_integer(n: i64, q: QDeformation) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    if q.is_classical() {
        return Ok(n as f64);
    }
    let m = n.unsigned_abs();
    let sign = if n < 0 { -1.0 } else { 1.0 };
    let h = q.log_inverse();
    // The largest summand is q^-(m-1).
    if (m - 1) as f64 * h > f64::MAX.ln() {
        return Err(Error::Overflow { n, q: q.value() });
    }

    let magnitude = if 1.0 - q.value() < STABLE_BRANCH_THRESHOLD {
        geometric_q_integer(m, q.value())
    } else {
        (m as f64 * h).sinh() / h.sinh()
    };
    if magnitude.is_finite() {
        Ok(sign * magnitude)
    } else {
        Err(Error::Overflow { n, q: q.value() })
    }
}

/// `sum_{k=0}^{m-1} q^(m-1-2k)` for `m >= 1`, paired as `q^e + q^-e`.
fn geometric_q_integer(m: u64, q: f64) -> f64 {
    let q2 = q * q;
    let mut low = q.powf((m - 1) as f64);
    let mut high = 1.0 / low;
    let mut acc = if m % 2 == 1 { 1.0 } else { 0.0 };
    // Pair exponents e = m-1, m-3, ... > 0 with their negatives.
    let pairs = m / 2;
    let mut terms = Vec::with_capacity(pairs as usize);
    for _ in 0..pairs {
        terms.push(low + high);
        low /= q2;
        high *= q2;
    }
    // Smallest pairs last in the loop above; add them first.
    for t in terms.iter().rev() {
        acc += t;
    }
    acc
}

/// Symbol of the q-derivative: `i [j - k]_q`.
pub fn delta_q(j: i64, k: i64, q: QDeformation) -> Result<Complex64> {
    Ok(Complex64::new(0.0, q_integer(j - k, q)?))
}

/// Symbol of the q-integral: `-i / [j - k]_q` off the diagonal, `0` on it.
pub fn psi_q(j: i64, k: i64, q: QDeformation) -> Result<Complex64> {
    if j == k {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(Complex64::new(0.0, -1.0 / q_integer(j - k, q)?))
}

/// Fejér symbol `(M + 1 - |j - k|) / (M + 1)`, zero outside the band.
pub fn gamma_m(j: i64, k: i64, m: u64) -> f64 {
    let d = (j - k).unsigned_abs();
    if d > m {
        0.0
    } else {
        (m + 1 - d) as f64 / (m + 1) as f64
    }
}

/// The Fejér approximation constant `eps_M` with the bracket on the tail of
/// `sum 1/k^2` it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConstant {
    pub m: u64,
    pub value: f64,
    pub tail_lo: f64,
    pub tail_hi: f64,
}

/// `eps_M = sqrt(2) * (M / (M+1)^2 + sum_{k > M} 1/k^2)^(1/2)`.
///
/// The tail is summed explicitly over [`EXPLICIT_TAIL_TERMS`] terms and the
/// remainder past `K` is bracketed by `1/(K+1) <= R <= 1/K`. The upper end
/// also absorbs a worst-case rounding allowance for the explicit sum, so
/// `value` is an upper bound.
pub fn epsilon_m(m: u64) -> ApproxConstant {
    let last = m + EXPLICIT_TAIL_TERMS;
    // Smallest terms first.
    let explicit: f64 = ((m + 1)..=last)
        .rev()
        .map(|k| {
            let kf = k as f64;
            1.0 / (kf * kf)
        })
        .sum();
    let rounding = EXPLICIT_TAIL_TERMS as f64 * f64::EPSILON * explicit;
    let lastf = last as f64;
    let tail_lo = explicit - rounding + 1.0 / (lastf + 1.0);
    let tail_hi = explicit + rounding + 1.0 / lastf;
    let mf = m as f64;
    let head = mf / ((mf + 1.0) * (mf + 1.0));
    ApproxConstant {
        m,
        value: std::f64::consts::SQRT_2 * (head + tail_hi).sqrt(),
        tail_lo,
        tail_hi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> QDeformation {
        QDeformation::new(v).unwrap()
    }

    /// Direct evaluation of the defining ratio; only trustworthy away from 1.
    fn ratio_form(n: i64, q: f64) -> f64 {
        (q.powi(n as i32) - q.powi(-n as i32)) / (q - 1.0 / q)
    }

    #[test]
    fn rejects_out_of_range_deformation() {
        for bad in [0.0, -0.3, 1.0 + 1e-12, f64::NAN, f64::INFINITY] {
            assert!(QDeformation::new(bad).is_err(), "{bad}");
        }
        assert!(QDeformation::new(1.0).is_ok());
        assert!(QDeformation::new(1e-300).is_ok());
    }

    #[test]
    fn q_integer_small_values() {
        for v in [0.1, 0.5, 0.999_999_9, 1.0] {
            assert_eq!(q_integer(0, q(v)).unwrap(), 0.0);
            assert!((q_integer(1, q(v)).unwrap() - 1.0).abs() < 1e-15);
        }
        // [2]_q = q + 1/q = 0.5 + 2 exactly.
        assert_eq!(q_integer(2, q(0.5)).unwrap(), 2.5);
        assert_eq!(q_integer(7, QDeformation::CLASSICAL).unwrap(), 7.0);
    }

    #[test]
    fn q_integer_matches_ratio_form_away_from_one() {
        for v in [0.2, 0.5, 0.7, 0.9] {
            for n in -40..=40 {
                if n == 0 {
                    continue;
                }
                let a = q_integer(n, q(v)).unwrap();
                let b = ratio_form(n, v);
                assert!((a - b).abs() <= 1e-13 * b.abs(), "n={n} q={v}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn q_integer_antisymmetric() {
        for v in [0.05, 0.3, 0.5, 0.8, 0.99, 1.0 - 1e-7, 1.0] {
            for n in -500..=500i64 {
                match (q_integer(n, q(v)), q_integer(-n, q(v))) {
                    (Ok(a), Ok(b)) => assert_eq!(a, -b, "n={n} q={v}"),
                    (Err(_), Err(_)) => {}
                    other => panic!("asymmetric overflow at n={n} q={v}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn q_integer_dominates_integer() {
        for v in [0.01, 0.2, 0.5, 0.9, 0.999, 1.0 - 1e-6, 1.0 - 1e-9, 1.0] {
            for n in -300..=300i64 {
                if let Ok(x) = q_integer(n, q(v)) {
                    assert!(x.abs() >= n.unsigned_abs() as f64, "n={n} q={v}: {x}");
                }
            }
        }
    }

    #[test]
    fn branches_agree_at_threshold() {
        // Exact-sum oracle: plain loop over all |n| summands.
        let oracle = |n: i64, q: f64| -> f64 { (0..n).map(|k| q.powi((n - 1 - 2 * k) as i32)).sum() };
        for v in [1.0 - 1e-6, 1.0 - 1.000_001e-6, 1.0 - 0.999_999e-6, 1.0 - 1e-7] {
            for n in 1..=200i64 {
                let a = q_integer(n, q(v)).unwrap();
                let b = oracle(n, v);
                assert!((a - b).abs() <= 1e-12 * b, "n={n} q={v}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn q_pascal_identity() {
        for v in [0.3, 0.7, 0.95, 1.0 - 1e-7, 1.0] {
            let qq = q(v);
            for n in -50..=50i64 {
                for m in -50..=50i64 {
                    let lhs = q_integer(n + m, qq).unwrap();
                    let t1 = qq.pow(n, n).unwrap() * q_integer(m, qq).unwrap();
                    let t2 = q_integer(n, qq).unwrap() * qq.pow(-m, m).unwrap();
                    let scale = t1.abs() + t2.abs() + 1.0;
                    assert!((lhs - t1 - t2).abs() <= 1e-12 * scale, "n={n} m={m} q={v}");
                }
            }
        }
    }

    #[test]
    fn overflow_is_an_error() {
        let err = q_integer(2000, q(0.5)).unwrap_err();
        assert_eq!(err, Error::Overflow { n: 2000, q: 0.5 });
        assert!(q_integer(-2000, q(0.5)).is_err());
        assert!(q_integer(1000, q(0.5)).is_ok());
        assert!(delta_q(5000, 0, q(0.3)).is_err());
    }

    #[test]
    fn symbol_examples() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(delta_q(5, 5, q(0.4)).unwrap(), z);
        assert_eq!(
            delta_q(1, 0, QDeformation::CLASSICAL).unwrap(),
            Complex64::new(0.0, 1.0)
        );
        assert_eq!(delta_q(3, 1, q(0.5)).unwrap(), Complex64::new(0.0, 2.5));
        assert_eq!(psi_q(4, 4, q(0.4)).unwrap(), z);
        assert_eq!(psi_q(1, 0, QDeformation::CLASSICAL).unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(gamma_m(3, 3, 5), 1.0);
        assert_eq!(gamma_m(6, 0, 5), 0.0);
        assert_eq!(gamma_m(1, 0, 1), 0.5);
        assert_eq!(gamma_m(-2, 1, 4), 0.4);
    }

    #[test]
    fn symbols_cancel_and_are_hermitian() {
        for v in [0.2, 0.6, 1.0] {
            let qq = q(v);
            for j in -20..=20i64 {
                for k in -20..=20i64 {
                    let d = delta_q(j, k, qq).unwrap();
                    let p = psi_q(j, k, qq).unwrap();
                    let kron = if j == k { 1.0 } else { 0.0 };
                    assert!((Complex64::new(1.0, 0.0) - p * d - kron).norm() < 1e-14);
                    assert_eq!(delta_q(k, j, qq).unwrap().conj(), d);
                    assert_eq!(psi_q(k, j, qq).unwrap().conj(), p);
                }
            }
        }
    }

    #[test]
    fn epsilon_zero_is_pi_over_sqrt3() {
        let e = epsilon_m(0);
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!(e.tail_lo <= zeta2 && zeta2 <= e.tail_hi, "{e:?}");
        assert!(e.tail_hi - e.tail_lo < 1e-9);
        assert!((e.value - PI_OVER_SQRT3).abs() < 1e-9, "{}", e.value);
        assert!(e.value >= PI_OVER_SQRT3 - 1e-15);
    }

    #[test]
    fn epsilon_256_bracket() {
        // Oracle: 4e6 explicit terms plus the integral remainder.
        let tail: f64 = (257..4_000_257u64)
            .rev()
            .map(|k| 1.0 / (k as f64 * k as f64))
            .sum::<f64>()
            + 1.0 / 4_000_256.5;
        let oracle = (2.0 * (256.0 / (257.0f64 * 257.0) + tail)).sqrt();
        let e = epsilon_m(256);
        assert!((0.1240..=0.1255).contains(&e.value), "{}", e.value);
        assert!((e.value - oracle).abs() < 1e-10);
        assert!(e.tail_lo <= tail + 1e-13 && tail - 1e-13 <= e.tail_hi);
    }

    #[test]
    fn epsilon_strictly_decreasing() {
        let mut prev = epsilon_m(0).value;
        let mut last = 0;
        for m in (1..=1000u64).chain((1097..=10_000).step_by(97)) {
            let e = epsilon_m(m);
            assert!(e.tail_lo <= e.tail_hi);
            assert!(e.value < prev, "eps_{m} = {} >= eps_{last} = {prev}", e.value);
            prev = e.value;
            last = m;
        }
        assert!(prev < 0.03);
    }
}
