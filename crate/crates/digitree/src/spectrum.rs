//! Entropy, variance constants, and oscillation spectra of Bernoulli
//! sources.
//!
//! Moment asymptotics of digital trees oscillate only when the log-ratios of
//! the symbol probabilities are rational; whether `log p / log q` is
//! rational cannot be decided from floating-point inputs, so the caller
//! declares it. Symmetric sources are detected automatically and always
//! periodic with frequencies `chi_k = 2 k pi i / log m`; an asymmetric
//! binary source declared `Rational(r, l)` (meaning `log p / log q = r/l` in
//! lowest terms) gets `chi_k = 2 r k pi i / log p`. Undeclared asymmetric
//! sources are treated as aperiodic: only the k = 0 coefficient exists.

use crate::error::{Error, Result};
use crate::model::{ModelSpec, SYMMETRY_TOL};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Caller's declaration about `log p / log q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rationality {
    /// `log p / log q = r / l` with r, l coprime.
    Rational { r: u32, l: u32 },
    Irrational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
enum Frequencies {
    /// chi_k = 2 k pi i / log m
    SymmetricBase { log_m: f64 },
    /// chi_k = 2 r k pi i / log p
    RationalBase { r: u32, log_p: f64 },
    /// only k = 0
    Aperiodic,
}

/// Spectrum parameters of one source: entropy `h` (nats), the variance
/// constant `lambda` (zero iff symmetric), and the oscillation frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumParams {
    probs: Vec<f64>,
    h: f64,
    lambda: f64,
    rationality: Rationality,
    frequencies: Frequencies,
}

/// Entropy `-sum p_i log p_i` in nats.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| p * p.ln()).sum::<f64>()
}

/// Variance constant `lambda = (sum p_i log^2 p_i - h^2) / h^3`; zero iff
/// all probabilities are equal.
pub fn lambda_moment_form(probs: &[f64]) -> f64 {
    let h = entropy(probs);
    let second: f64 = probs.iter().map(|&p| p * p.ln() * p.ln()).sum();
    (second - h * h) / (h * h * h)
}

/// Binary closed form `p q log^2(p/q) / h^3`, algebraically equal to
/// [`lambda_moment_form`] for two symbols.
pub fn lambda_log_ratio_form(p: f64) -> f64 {
    let q = 1.0 - p;
    let h = entropy(&[p, q]);
    let lr = (p / q).ln();
    p * q * lr * lr / (h * h * h)
}

impl SpectrumParams {
    /// Spectrum for a probability vector. Symmetric vectors are detected
    /// and made periodic with base m regardless of `rationality`; an
    /// asymmetric binary vector uses the caller's declaration (default
    /// aperiodic). Asymmetric vectors with three or more symbols are always
    /// treated as aperiodic here.
    pub fn new(probs: &[f64], rationality: Option<Rationality>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidProbs(
                "need at least 2 probabilities".into(),
            ));
        }
        for &p in probs {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidProbs(format!("entry {p} outside (0, 1)")));
            }
        }
        let lo = probs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let symmetric = hi - lo <= SYMMETRY_TOL;
        let h = entropy(probs);
        let lambda = if symmetric {
            0.0
        } else {
            lambda_moment_form(probs)
        };
        let (rationality, frequencies) = if symmetric {
            (
                Rationality::Rational { r: 1, l: 1 },
                Frequencies::SymmetricBase {
                    log_m: (probs.len() as f64).ln(),
                },
            )
        } else {
            match rationality {
                Some(Rationality::Rational { r, l }) if probs.len() == 2 => (
                    Rationality::Rational { r, l },
                    Frequencies::RationalBase {
                        r,
                        log_p: probs[0].ln(),
                    },
                ),
                Some(Rationality::Rational { .. }) => {
                    return Err(Error::UnsupportedModel(
                        "rational spectra are only available for binary sources".into(),
                    ))
                }
                _ => (Rationality::Irrational, Frequencies::Aperiodic),
            }
        };
        Ok(SpectrumParams {
            probs: probs.to_vec(),
            h,
            lambda,
            rationality,
            frequencies,
        })
    }

    /// Spectrum of the symmetric m-ary source.
    pub fn symmetric(m: usize) -> Result<Self> {
        Self::new(&vec![1.0 / m as f64; m], None)
    }

    /// Spectrum derived from a model's probability vector (aperiodic when
    /// asymmetric).
    pub fn of_model(model: &ModelSpec) -> Result<Self> {
        Self::new(model.probs(), None)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn entropy(&self) -> f64 {
        self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rationality(&self) -> Rationality {
        self.rationality
    }

    /// Whether nonzero frequencies exist.
    pub fn is_periodic(&self) -> bool {
        !matches!(self.frequencies, Frequencies::Aperiodic)
    }

    /// The log-period of `F(x)` in `log x` (None when aperiodic): `log m`
    /// for symmetric sources, `|log p| / r` for declared-rational binary
    /// ones.
    pub fn log_period(&self) -> Option<f64> {
        match self.frequencies {
            Frequencies::SymmetricBase { log_m } => Some(log_m),
            Frequencies::RationalBase { r, log_p } => Some(log_p.abs() / r as f64),
            Frequencies::Aperiodic => None,
        }
    }

    /// Oscillation frequency `chi_k` (purely imaginary). For aperiodic
    /// spectra only k = 0 exists.
    pub fn chi(&self, k: i64) -> Complex64 {
        match self.frequencies {
            Frequencies::SymmetricBase { log_m } => {
                Complex64::new(0.0, 2.0 * k as f64 * PI / log_m)
            }
            Frequencies::RationalBase { r, log_p } => {
                Complex64::new(0.0, 2.0 * (r as f64) * k as f64 * PI / log_p)
            }
            Frequencies::Aperiodic => {
                debug_assert!(k == 0, "aperiodic spectrum has only k = 0");
                Complex64::new(0.0, 0.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_binary_spectrum() {
        let s = SpectrumParams::new(&[0.5, 0.5], None).unwrap();
        assert!((s.entropy() - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(s.lambda(), 0.0);
        assert!(s.is_periodic());
        let chi1 = s.chi(1);
        assert_eq!(chi1.re, 0.0);
        assert!((chi1.im - 2.0 * PI / 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(s.chi(0), Complex64::new(0.0, 0.0));
        assert_eq!(s.chi(-1), s.chi(1).conj());
    }

    #[test]
    fn golden_ratio_rational_spectrum() {
        // p = q^2 with p + q = 1 gives log p / log q = 2 exactly
        let q = (5.0f64.sqrt() - 1.0) / 2.0;
        let p = 1.0 - q;
        assert!((p - q * q).abs() < 1e-15);
        let s = SpectrumParams::new(&[p, q], Some(Rationality::Rational { r: 2, l: 1 })).unwrap();
        assert!(s.is_periodic());
        let chi1 = s.chi(1);
        assert!((chi1.im - 4.0 * PI / p.ln()).abs() < 1e-12);
        // log p < 0, so positive k has negative imaginary part here
        assert!(chi1.im < 0.0);
    }

    #[test]
    fn undeclared_asymmetric_is_aperiodic() {
        let s = SpectrumParams::new(&[0.3, 0.7], None).unwrap();
        assert!(!s.is_periodic());
        assert_eq!(s.chi(0), Complex64::new(0.0, 0.0));
        assert!(s.lambda() > 0.0);
        assert_eq!(s.log_period(), None);
    }

    #[test]
    fn lambda_forms_agree() {
        // deterministic sweep standing in for arbitrary p
        for i in 1..=20 {
            let p = i as f64 / 21.0;
            let a = lambda_moment_form(&[p, 1.0 - p]);
            let b = lambda_log_ratio_form(p);
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "p = {p}");
        }
        assert_eq!(lambda_moment_form(&[0.5, 0.5]), 0.0);
        assert_eq!(lambda_log_ratio_form(0.5), 0.0);
    }
}
