//! Complex gamma and digamma functions.
//!
//! Gamma is evaluated through its logarithm with the Lanczos approximation,
//! g = 607/128 and the fifteen-term Godfrey coefficient table below (the
//! parameter set used by SciPy and Boost for complex arguments), reflected
//! for Re(z) < 1/2 with a log-space sine so that arguments far up the
//! imaginary axis underflow to zero instead of producing inf * 0. Digamma
//! shifts the argument to Re(z) >= 10 with psi(z) = psi(z+1) - 1/z and then
//! applies the Stirling series with Bernoulli-number coefficients.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162e-6,
];

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// log sin(pi z), stable for large |Im z|.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    let ln_2i = Complex64::new(2.0f64.ln(), PI / 2.0);
    if w.im >= 0.0 {
        // sin(w) = e^(-iw) (e^(2iw) - 1) / (2i)
        let e = (Complex64::new(0.0, 2.0) * w).exp();
        -Complex64::new(0.0, 1.0) * w + (e - 1.0).ln() - ln_2i
    } else {
        // sin(w) = e^(iw) (1 - e^(-2iw)) / (2i)
        let e = (Complex64::new(0.0, -2.0) * w).exp();
        Complex64::new(0.0, 1.0) * w + (1.0 - e).ln() - ln_2i
    }
}

/// log Gamma(z); the imaginary part is not reduced to the principal branch.
pub fn complex_ln_gamma(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::PoleAtNonpositiveInteger(z.re));
    }
    Ok(ln_gamma_unchecked(z))
}

fn ln_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z)
        return PI.ln() - ln_sin_pi(z) - ln_gamma_unchecked(Complex64::new(1.0, 0.0) - z);
    }
    let zm1 = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &coeff) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += coeff / (zm1 + i as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm1 + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma(z) for complex z. Arguments far up the imaginary axis underflow
/// gracefully to zero.
pub fn complex_gamma(z: Complex64) -> Result<Complex64> {
    Ok(complex_ln_gamma(z)?.exp())
}

/// Digamma psi(z) = d/dz log Gamma(z) for complex z.
pub fn complex_digamma(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::PoleAtNonpositiveInteger(z.re));
    }
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < 10.0 {
        shift -= 1.0 / z;
        z += 1.0;
    }
    // Stirling series: ln z - 1/(2z) - sum B_{2k} / (2k z^{2k})
    let inv2 = 1.0 / (z * z);
    let mut series = Complex64::new(0.0, 0.0);
    // B_{2k}/(2k) for k = 7..1, Horner in 1/z^2
    for &coeff in &[
        1.0 / 12.0,        // B14/14 = (7/6)/14
        -691.0 / 32760.0,  // B12/12
        1.0 / 132.0,       // B10/10
        -1.0 / 240.0,      // B8/8
        1.0 / 252.0,       // B6/6
        -1.0 / 120.0,      // B4/4
        1.0 / 12.0,        // B2/2
    ] {
        series = (series + coeff) * inv2;
    }
    Ok(z.ln() - 0.5 / z - series + shift)
}
