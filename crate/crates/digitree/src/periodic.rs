//! Evaluation of the limiting periodic functions and the asymptotes built
//! from them.
//!
//! `F[g](x) = sum_k g_k x^(-chi_k)` is periodic in `log x` for periodic
//! spectra and collapses to the constant `g_0` otherwise. The correlation
//! asymptote of (S_n, K_n) for a symmetric model is
//! `F(x) = F[g_cov](x) / sqrt(F[g_size](x) F[g_kpl](x))`, and its average is
//! well approximated by the ratio of the k = 0 coefficients.

use crate::coeffs::{
    general_binary_cov_coeffs, sym_mary_trie_coeffs, sym_patricia_coeffs, CoeffSeries,
    FourierCoefficientSet, DEFAULT_J_WINDOW, DEFAULT_K_WINDOW, DEFAULT_REL_TOL,
};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, TreeFamily};
use crate::spectrum::SpectrumParams;
use num_complex::Complex64;
use serde::Serialize;

/// Residual imaginary mass above this aborts [`fourier_eval`].
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;

/// Evaluate `F[g](x)` at real `x > 1`. Aperiodic sets return their single
/// coefficient; periodic sums must come out real up to
/// [`IMAGINARY_RESIDUE_TOL`].
pub fn fourier_eval(set: &FourierCoefficientSet, x: f64) -> Result<f64> {
    if !(x > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fourier_eval needs x > 1, got {x}"
        )));
    }
    if !set.spectrum.is_periodic() {
        return Ok(set.coeff(0).re);
    }
    let log_x = x.ln();
    let mut sum = Complex64::new(0.0, 0.0);
    for (k, g) in set.iter() {
        sum += g * (-set.spectrum.chi(k) * log_x).exp();
    }
    if sum.im.abs() >= IMAGINARY_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue {
            magnitude: sum.im.abs(),
        });
    }
    Ok(sum.re)
}

/// The three coefficient sets describing (Var S, Cov SK, Var K) / n for one
/// symmetric model.
#[derive(Debug, Clone)]
pub struct CoeffTriple {
    pub size_var: FourierCoefficientSet,
    pub cov: FourierCoefficientSet,
    pub kpl_var: FourierCoefficientSet,
}

impl CoeffTriple {
    pub fn sym_trie(m: usize, k_window: usize, rel_tol: f64) -> Result<Self> {
        Ok(CoeffTriple {
            size_var: sym_mary_trie_coeffs(CoeffSeries::SizeVariance, m, k_window, rel_tol)?,
            cov: sym_mary_trie_coeffs(CoeffSeries::SizeKplCovariance, m, k_window, rel_tol)?,
            kpl_var: sym_mary_trie_coeffs(CoeffSeries::KplVariance, m, k_window, rel_tol)?,
        })
    }

    pub fn sym_patricia(m: usize, k_window: usize, rel_tol: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::UnsupportedModel(
                "binary PATRICIA size is deterministic; no correlation asymptote".into(),
            ));
        }
        Ok(CoeffTriple {
            size_var: sym_patricia_coeffs(CoeffSeries::SizeVariance, m, k_window, rel_tol)?,
            cov: sym_patricia_coeffs(CoeffSeries::SizeKplCovariance, m, k_window, rel_tol)?,
            kpl_var: sym_patricia_coeffs(CoeffSeries::KplVariance, m, k_window, rel_tol)?,
        })
    }

    /// For a symmetric model of either trie or PATRICIA family.
    pub fn for_model(model: &ModelSpec, k_window: usize, rel_tol: f64) -> Result<Self> {
        if !model.is_symmetric() {
            return Err(Error::UnsupportedModel(
                "closed-form coefficient triples exist for symmetric models".into(),
            ));
        }
        match model.family() {
            TreeFamily::BinaryTrie | TreeFamily::MaryTrie => {
                Self::sym_trie(model.arity(), k_window, rel_tol)
            }
            TreeFamily::Patricia => Self::sym_patricia(model.arity(), k_window, rel_tol),
            TreeFamily::BucketDst => Err(Error::UnsupportedModel(
                "bucket DST Fourier coefficients are not available in closed form".into(),
            )),
        }
    }

    /// `F(x) = F[cov](x) / sqrt(F[size](x) F[kpl](x))`.
    pub fn correlation_at(&self, x: f64) -> Result<f64> {
        let f1 = fourier_eval(&self.size_var, x)?;
        let f2 = fourier_eval(&self.cov, x)?;
        let f3 = fourier_eval(&self.kpl_var, x)?;
        if f1 <= 0.0 || f3 <= 0.0 {
            return Err(Error::NumericalBreakdown(format!(
                "nonpositive variance prediction: {f1}, {f3}"
            )));
        }
        Ok(f2 / (f1 * f3).sqrt())
    }

    /// Average of the periodic correlation, approximated by the ratio of
    /// the k = 0 coefficients.
    pub fn mean_correlation(&self) -> f64 {
        self.cov.coeff(0).re
            / (self.size_var.coeff(0).re * self.kpl_var.coeff(0).re).sqrt()
    }
}

/// Average correlation of (S_n, K_n) for the symmetric m-ary trie.
pub fn mean_correlation_sym_trie(m: usize) -> Result<f64> {
    Ok(CoeffTriple::sym_trie(m, 0, DEFAULT_REL_TOL)?.mean_correlation())
}

/// Average correlation of (S_n, K_n) for the symmetric m-ary PATRICIA trie,
/// m >= 3.
pub fn mean_correlation_sym_patricia(m: usize) -> Result<f64> {
    Ok(CoeffTriple::sym_patricia(m, 0, DEFAULT_REL_TOL)?.mean_correlation())
}

/// Limiting correlation of (S_n, K_n) evaluated at x = n.
///
/// Symmetric tries (any m >= 2) and symmetric PATRICIA tries (m >= 3) give
/// the periodic value `F(n)`; an asymmetric binary trie gives 0. Everything
/// else has no closed form here.
pub fn rho_asymptotic(model: &ModelSpec, x: f64) -> Result<f64> {
    match model.family() {
        TreeFamily::BinaryTrie | TreeFamily::MaryTrie => {
            if model.is_symmetric() {
                CoeffTriple::for_model(model, DEFAULT_K_WINDOW, DEFAULT_REL_TOL)?
                    .correlation_at(x)
            } else if model.arity() == 2 {
                Ok(0.0)
            } else {
                Err(Error::UnsupportedModel(
                    "asymmetric m-ary tries have no closed-form correlation here".into(),
                ))
            }
        }
        TreeFamily::Patricia => {
            if model.is_symmetric() && model.arity() >= 3 {
                CoeffTriple::for_model(model, DEFAULT_K_WINDOW, DEFAULT_REL_TOL)?
                    .correlation_at(x)
            } else {
                Err(Error::UnsupportedModel(
                    "PATRICIA correlation asymptote needs a symmetric source with m >= 3".into(),
                ))
            }
        }
        TreeFamily::BucketDst => Err(Error::UnsupportedModel(
            "bucket DST coefficients are not available in closed form".into(),
        )),
    }
}

/// Predicted (Var S, Var K, Cov SK) scaled by n, evaluated at x = n.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceAsymptote {
    pub var_s_over_n: Option<f64>,
    pub var_k_over_n: Option<f64>,
    /// true when `var_k_over_n` carries only the `lambda log n` leading term
    /// (asymmetric case, where the periodic constant has no closed form
    /// here)
    pub var_k_leading_only: bool,
    pub cov_sk_over_n: Option<f64>,
}

/// Variance/covariance asymptotes at x = n: symmetric models evaluate all
/// three periodic functions; asymmetric binary tries report
/// `lambda log n` for Var K / n and the aperiodic covariance constant.
pub fn variance_asymptote(model: &ModelSpec, x: f64) -> Result<VarianceAsymptote> {
    if model.is_symmetric() {
        let triple = CoeffTriple::for_model(model, DEFAULT_K_WINDOW, DEFAULT_REL_TOL)?;
        return Ok(VarianceAsymptote {
            var_s_over_n: Some(fourier_eval(&triple.size_var, x)?),
            var_k_over_n: Some(fourier_eval(&triple.kpl_var, x)?),
            var_k_leading_only: false,
            cov_sk_over_n: Some(fourier_eval(&triple.cov, x)?),
        });
    }
    match model.family() {
        TreeFamily::BinaryTrie => {
            let spectrum = SpectrumParams::of_model(model)?;
            let cov = general_binary_cov_coeffs(&spectrum, 0, DEFAULT_J_WINDOW, DEFAULT_REL_TOL)?;
            Ok(VarianceAsymptote {
                var_s_over_n: None,
                var_k_over_n: Some(spectrum.lambda() * x.ln()),
                var_k_leading_only: true,
                cov_sk_over_n: Some(fourier_eval(&cov, x)?),
            })
        }
        _ => Err(Error::UnsupportedModel(
            "variance asymptotes cover symmetric models and asymmetric binary tries".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::general_binary_cov_coeffs;

    #[test]
    fn constant_window_is_constant() {
        let triple = CoeffTriple::sym_trie(2, 0, 1e-16).unwrap();
        let a = fourier_eval(&triple.cov, 10.0).unwrap();
        let b = fourier_eval(&triple.cov, 1234.5).unwrap();
        assert_eq!(a, b);
        assert!((a - triple.cov.coeff(0).re).abs() < 1e-15);
    }

    #[test]
    fn periodicity_in_base_m() {
        for m in [2usize, 3] {
            let triple = CoeffTriple::sym_trie(m, 8, 1e-16).unwrap();
            for x in [37.0, 100.0, 517.3] {
                let a = fourier_eval(&triple.cov, x).unwrap();
                let b = fourier_eval(&triple.cov, x * m as f64).unwrap();
                assert!((a - b).abs() < 1e-12, "m={m} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn aperiodic_returns_constant() {
        let spectrum = SpectrumParams::new(&[0.3, 0.7], None).unwrap();
        let set = general_binary_cov_coeffs(&spectrum, 0, 50, 1e-16).unwrap();
        let a = fourier_eval(&set, 64.0).unwrap();
        let b = fourier_eval(&set, 4096.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn x_domain_checked() {
        let triple = CoeffTriple::sym_trie(2, 0, 1e-16).unwrap();
        assert!(matches!(
            fourier_eval(&triple.cov, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rho_asymptotic_cases() {
        let sym = ModelSpec::binary_trie(0.5).unwrap();
        let rho = rho_asymptotic(&sym, 300.0).unwrap();
        assert!(rho > 0.9 && rho < 0.95);
        let asym = ModelSpec::binary_trie(0.3).unwrap();
        assert_eq!(rho_asymptotic(&asym, 300.0).unwrap(), 0.0);
        let bucket = ModelSpec::bucket_dst(0.5, 2).unwrap();
        assert!(matches!(
            rho_asymptotic(&bucket, 300.0),
            Err(Error::UnsupportedModel(_))
        ));
        let pat2 = ModelSpec::patricia_symmetric(2).unwrap();
        assert!(matches!(
            rho_asymptotic(&pat2, 300.0),
            Err(Error::UnsupportedModel(_))
        ));
        let pat3 = ModelSpec::patricia_symmetric(3).unwrap();
        let rho = rho_asymptotic(&pat3, 300.0).unwrap();
        assert!(rho > 0.5 && rho < 1.0);
    }

    #[test]
    fn variance_asymptote_symmetric_and_asymmetric() {
        let sym = ModelSpec::binary_trie(0.5).unwrap();
        let va = variance_asymptote(&sym, 1024.0).unwrap();
        assert!(!va.var_k_leading_only);
        assert!(va.var_s_over_n.unwrap() > 0.0);
        assert!(va.var_k_over_n.unwrap() > 0.0);
        let asym = ModelSpec::binary_trie(0.3).unwrap();
        let va = variance_asymptote(&asym, 1024.0).unwrap();
        assert!(va.var_k_leading_only);
        assert!(va.var_s_over_n.is_none());
        assert!(va.var_k_over_n.unwrap() > 0.0);
        assert!(va.cov_sk_over_n.unwrap() > 0.0);
    }
}
