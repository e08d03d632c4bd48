//! Seeded random inputs for property checks and sweeps.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::laurent::LaurentPoly;

pub type SampleRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex gaussian: real and imaginary parts i.i.d. `N(0, 1/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Gaussian coefficients on every frequency in `[-band, band]`.
pub fn random_poly<R: Rng + ?Sized>(rng: &mut R, band: usize) -> LaurentPoly {
    let b = band as i64;
    LaurentPoly::from_coeffs((-b..=b).map(|n| (n, complex_gaussian(rng))))
}

/// Gaussian coefficients damped by `(1 + |n|)^-decay`, so that the
/// derivative stays comparable to the function.
pub fn random_smooth_poly<R: Rng + ?Sized>(rng: &mut R, band: usize, decay: f64) -> LaurentPoly {
    let b = band as i64;
    LaurentPoly::from_coeffs((-b..=b).map(|n| {
        let damp = (1.0 + n.unsigned_abs() as f64).powf(-decay);
        (n, complex_gaussian(rng) * damp)
    }))
}
