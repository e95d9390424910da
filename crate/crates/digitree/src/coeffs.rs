//! Closed-form Fourier coefficients of the limiting periodic functions.
//!
//! For a symmetric m-ary source the scaled variance of the size, the scaled
//! size/KPL covariance, and the scaled KPL variance each converge to a
//! periodic function of `log_m n` whose Fourier coefficients have explicit
//! expressions: a gamma-factor leading term plus an alternating series with
//! geometrically decaying terms (ratio roughly `1/m`). PATRICIA tries get
//! their own three expressions, and the size/KPL covariance of an arbitrary
//! binary trie has a general expression combining a gamma leading term, a
//! digamma term, a frequency-convolution sum (periodic case only) and an
//! alternating series with divisors `1 - p^l - q^l`.
//!
//! At k = 0 every gamma prefactor pole pairs with a bracket vanishing at
//! chi = 0; the removable limits are evaluated from their first-order
//! expansions (each recorded next to the code). Series stop once two
//! consecutive terms fall below `rel_tol` times the running sum, with a hard
//! cap of [`MAX_SERIES_TERMS`] terms.

use crate::error::{Error, Result};
use crate::special::{complex_digamma, complex_gamma, EULER_GAMMA};
use crate::spectrum::SpectrumParams;
use num_complex::Complex64;
use serde::Serialize;

/// Hard cap on alternating-series terms.
pub const MAX_SERIES_TERMS: usize = 300;

/// Default relative term threshold for series truncation.
pub const DEFAULT_REL_TOL: f64 = 1e-16;

/// Default half-width of the coefficient window.
pub const DEFAULT_K_WINDOW: usize = 10;

/// Default half-width of the convolution sum in the general binary
/// covariance coefficients.
pub const DEFAULT_J_WINDOW: usize = 50;

/// Which limiting second-moment sequence a coefficient set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoeffSeries {
    /// Var(S_n) / n
    SizeVariance,
    /// Cov(S_n, K_n) / n
    SizeKplCovariance,
    /// Var(K_n) / n (after removing `lambda n log n` in the asymmetric case)
    KplVariance,
}

/// Which family of closed forms produced a coefficient set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoeffFamily {
    SymmetricMaryTrie { m: usize },
    SymmetricPatricia { m: usize },
    GeneralBinaryTrie,
}

/// Truncation record for one coefficient.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailReport {
    /// series terms actually summed
    pub terms: usize,
    /// magnitude of the last summed term
    pub last_term: f64,
    /// convolution terms summed per side, when applicable
    pub j_terms: Option<usize>,
    /// magnitude of the first omitted convolution term
    pub j_tail: Option<f64>,
}

/// Complex Fourier coefficients over `k` in `[-k_window, k_window]` together
/// with their spectrum and truncation reports.
#[derive(Debug, Clone, Serialize)]
pub struct FourierCoefficientSet {
    pub series: CoeffSeries,
    pub family: CoeffFamily,
    pub k_window: usize,
    pub spectrum: SpectrumParams,
    coeffs: Vec<Complex64>,
    tails: Vec<TailReport>,
}

impl FourierCoefficientSet {
    /// Coefficient at index k, |k| <= k_window.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = (k + self.k_window as i64) as usize;
        self.coeffs[idx]
    }

    pub fn tail(&self, k: i64) -> &TailReport {
        &self.tails[(k + self.k_window as i64) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let window = self.k_window as i64;
        (-window..=window).map(move |k| (k, self.coeff(k)))
    }

    /// Fixed CSV column order for coefficient sets.
    pub const CSV_HEADER: &'static str = "k,re,im,terms,last_term";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (k, g) in self.iter() {
            let tail = self.tail(k);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                k, g.re, g.im, tail.terms, tail.last_term
            ));
        }
        out
    }
}

/// Sum an alternating series until two consecutive terms drop below
/// `rel_tol` times the partial sum (guards against isolated zero terms).
fn sum_series<F>(mut term: F, rel_tol: f64) -> Result<(Complex64, TailReport)>
where
    F: FnMut(usize) -> Complex64,
{
    let mut sum = Complex64::new(0.0, 0.0);
    let mut small_streak = 0;
    let mut last = 0.0;
    for ell in 1..=MAX_SERIES_TERMS {
        let t = term(ell);
        if t.is_finite() {
            sum += t;
        }
        last = t.norm();
        let floor = rel_tol * sum.norm().max(1e-30);
        if last <= floor {
            small_streak += 1;
            if small_streak >= 2 && ell >= 3 {
                return Ok((
                    sum,
                    TailReport {
                        terms: ell,
                        last_term: last,
                        j_terms: None,
                        j_tail: None,
                    },
                ));
            }
        } else {
            small_streak = 0;
        }
    }
    let _ = last;
    Err(Error::SeriesNotConverged {
        terms: MAX_SERIES_TERMS,
    })
}

fn two_pow(z: Complex64) -> Complex64 {
    (z * 2.0f64.ln()).exp()
}

fn real_pow(base: f64, z: Complex64) -> Complex64 {
    (z * base.ln()).exp()
}

/// Coefficients of the symmetric m-ary trie.
///
/// Leading terms at k = 0 (bracket expansions around chi = 0):
/// size variance `1 / (4 log m)`, covariance `(log 2 - 1/4) / log m`,
/// KPL variance `(log 2 + 1/4) / log m`.
pub fn sym_mary_trie_coeffs(
    series: CoeffSeries,
    m: usize,
    k_window: usize,
    rel_tol: f64,
) -> Result<FourierCoefficientSet> {
    if m < 2 {
        return Err(Error::InvalidArgument("m must be at least 2".into()));
    }
    let spectrum = SpectrumParams::symmetric(m)?;
    let log_m = (m as f64).ln();
    let ln2 = 2.0f64.ln();
    let mf = m as f64;
    let mut coeffs = Vec::with_capacity(2 * k_window + 1);
    let mut tails = Vec::with_capacity(2 * k_window + 1);
    for k in -(k_window as i64)..=(k_window as i64) {
        let chi = spectrum.chi(k);
        let leading = if k == 0 {
            match series {
                CoeffSeries::SizeVariance => Complex64::new(0.25 / log_m, 0.0),
                CoeffSeries::SizeKplCovariance => Complex64::new((ln2 - 0.25) / log_m, 0.0),
                CoeffSeries::KplVariance => Complex64::new((ln2 + 0.25) / log_m, 0.0),
            }
        } else {
            let p22 = two_pow(chi + 2.0);
            match series {
                CoeffSeries::SizeVariance => {
                    complex_gamma(chi - 1.0)?
                        * (chi - (chi * chi * chi + 2.0 * chi * chi + 5.0 * chi) / p22)
                        / log_m
                }
                CoeffSeries::SizeKplCovariance => {
                    complex_gamma(chi)? * (1.0 - (chi * chi + chi + 4.0) / p22) / log_m
                }
                CoeffSeries::KplVariance => {
                    complex_gamma(chi)? * (1.0 - (chi * chi - chi + 4.0) / p22) / log_m
                }
            }
        };
        // ratio = Gamma(chi + ell) / (ell + 1)!, advanced incrementally
        let mut ratio = complex_gamma(chi + 1.0)? / 2.0;
        let (sum, tail) = sum_series(
            |ell| {
                let ellf = ell as f64;
                let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
                let denom = mf.powi(ell as i32) - 1.0;
                let poly = match series {
                    CoeffSeries::SizeVariance => (chi + ellf) * ellf * ellf - ellf,
                    CoeffSeries::SizeKplCovariance => {
                        (chi + ellf) * ellf * (2.0 * ellf + 1.0) - (ellf + 1.0) * (ellf + 1.0)
                    }
                    // the KPL series carries 1/ell! rather than 1/(ell+1)!
                    CoeffSeries::KplVariance => {
                        ((chi + ellf - 1.0) * ellf - 1.0) * (ellf + 1.0)
                    }
                };
                let t = sign * ratio * poly / denom;
                ratio = ratio * (chi + ellf) / (ellf + 2.0);
                t
            },
            rel_tol,
        )?;
        let prefactor = match series {
            CoeffSeries::SizeVariance => 2.0 / log_m,
            CoeffSeries::SizeKplCovariance => 1.0 / log_m,
            CoeffSeries::KplVariance => 2.0 / log_m,
        };
        coeffs.push(leading + prefactor * sum);
        tails.push(tail);
    }
    Ok(FourierCoefficientSet {
        series,
        family: CoeffFamily::SymmetricMaryTrie { m },
        k_window,
        spectrum,
        coeffs,
        tails,
    })
}

/// Coefficients of the symmetric PATRICIA trie.
///
/// For m = 2 the size is deterministic: the size-variance and covariance
/// coefficients vanish identically and are returned as zeros; the KPL series
/// still converges and is evaluated. Leading terms at k = 0:
/// size variance `-(m-1) m log(4 m (m-1) / (2m-1)^2) / log m`,
/// covariance `(log 2 - (m-1)/2 + (m-1)^2/(2m-1)) / log m`,
/// KPL variance `((m+1)/(4(m-1)) + log 2) / log m`.
pub fn sym_patricia_coeffs(
    series: CoeffSeries,
    m: usize,
    k_window: usize,
    rel_tol: f64,
) -> Result<FourierCoefficientSet> {
    if m < 2 {
        return Err(Error::InvalidArgument("m must be at least 2".into()));
    }
    let spectrum = SpectrumParams::symmetric(m)?;
    let mf = m as f64;
    let log_m = mf.ln();
    let ln2 = 2.0f64.ln();
    // a = 1 - 1/m and c = 2 - 1/m appear as complex power bases
    let a = 1.0 - 1.0 / mf;
    let cc = 2.0 - 1.0 / mf;
    let mut coeffs = Vec::with_capacity(2 * k_window + 1);
    let mut tails = Vec::with_capacity(2 * k_window + 1);
    for k in -(k_window as i64)..=(k_window as i64) {
        if m == 2 && !matches!(series, CoeffSeries::KplVariance) {
            coeffs.push(Complex64::new(0.0, 0.0));
            tails.push(TailReport {
                terms: 0,
                last_term: 0.0,
                j_terms: None,
                j_tail: None,
            });
            continue;
        }
        let chi = spectrum.chi(k);
        let a_neg_chi = real_pow(a, -chi);
        let leading = if k == 0 {
            let value = match series {
                CoeffSeries::SizeVariance => {
                    -(mf - 1.0) * mf * (4.0 * mf * (mf - 1.0) / ((2.0 * mf - 1.0) * (2.0 * mf - 1.0))).ln()
                }
                CoeffSeries::SizeKplCovariance => {
                    ln2 - (mf - 1.0) / 2.0 + (mf - 1.0) * (mf - 1.0) / (2.0 * mf - 1.0)
                }
                CoeffSeries::KplVariance => (mf + 1.0) / (4.0 * (mf - 1.0)) + ln2,
            };
            Complex64::new(value / log_m, 0.0)
        } else {
            let two_chi = two_pow(chi);
            let c_neg_chi = real_pow(cc, -chi);
            match series {
                CoeffSeries::SizeVariance => {
                    let bracket = -1.0 - (mf - 1.0) * (chi + 1.0) / two_chi
                        + a_neg_chi * (1.0 - ((mf - 1.0) * chi + mf + 1.0) / two_chi)
                        + c_neg_chi * (2.0 * (mf - 1.0) * chi + 2.0 * mf);
                    (mf - 1.0) * complex_gamma(chi - 1.0)? * bracket / log_m
                }
                CoeffSeries::SizeKplCovariance => {
                    let bracket = a_neg_chi
                        * (1.0 - ((mf - 1.0) * chi + 2.0) / two_pow(chi + 1.0))
                        + c_neg_chi * (mf - 1.0) * (mf - 1.0) * chi / (2.0 * mf - 1.0);
                    complex_gamma(chi)? * bracket / log_m
                }
                CoeffSeries::KplVariance => {
                    let bracket = 1.0 + chi / (mf - 1.0)
                        - ((mf - 1.0) * chi * chi - (mf - 3.0) * chi + 4.0 * (mf - 1.0))
                            / ((mf - 1.0) * two_pow(chi + 2.0));
                    complex_gamma(chi)? * a_neg_chi * bracket / log_m
                }
            }
        };
        let (sum, tail) = match series {
            CoeffSeries::SizeVariance => {
                // ratio = Gamma(ell + chi) / (ell + 1)!
                let mut ratio = complex_gamma(chi + 1.0)? / 2.0;
                let mut a_pow = a; // a^ell
                let mut a_neg = 1.0 / a; // a^(-ell)
                sum_series(
                    |ell| {
                        let ellf = ell as f64;
                        let sign = if ell % 2 == 0 { -1.0 } else { 1.0 };
                        let denom = mf.powi(ell as i32) - 1.0;
                        let t = sign * ratio * ellf * (1.0 - a_pow)
                            * (1.0 - a_neg * a_neg_chi)
                            / denom;
                        ratio = ratio * (chi + ellf) / (ellf + 2.0);
                        a_pow *= a;
                        a_neg /= a;
                        t
                    },
                    rel_tol,
                )?
            }
            CoeffSeries::SizeKplCovariance => {
                let mut ratio = complex_gamma(chi + 1.0)? / 2.0;
                let mut a_pow = a;
                let mut a_neg = 1.0 / a;
                sum_series(
                    |ell| {
                        let ellf = ell as f64;
                        let sign = if ell % 2 == 0 { -1.0 } else { 1.0 };
                        let denom = mf.powi(ell as i32) - 1.0;
                        let inner = (ellf + 1.0) * a_pow + (chi - 1.0) * a_neg_chi
                            - (chi + ellf) * a_neg * a_neg_chi;
                        let t = sign * ratio * ellf * inner / denom;
                        ratio = ratio * (chi + ellf) / (ellf + 2.0);
                        a_pow *= a;
                        a_neg /= a;
                        t
                    },
                    rel_tol,
                )?
            }
            CoeffSeries::KplVariance => {
                // ratio = Gamma(ell + chi + 1) / (ell - 1)!
                let mut ratio = complex_gamma(chi + 2.0)?;
                sum_series(
                    |ell| {
                        let ellf = ell as f64;
                        let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
                        let denom = mf.powi(ell as i32) - 1.0;
                        let t = sign * ratio / denom;
                        ratio = ratio * (chi + ellf + 1.0) / ellf;
                        t
                    },
                    rel_tol,
                )?
            }
        };
        let prefactor = match series {
            CoeffSeries::SizeVariance => {
                Complex64::new(2.0 * (mf - 1.0) * (mf - 1.0) / log_m, 0.0)
            }
            CoeffSeries::SizeKplCovariance => Complex64::new((mf - 1.0) / log_m, 0.0),
            CoeffSeries::KplVariance => 2.0 * real_pow(mf - 1.0, -chi) / log_m,
        };
        coeffs.push(leading + prefactor * sum);
        tails.push(tail);
    }
    Ok(FourierCoefficientSet {
        series,
        family: CoeffFamily::SymmetricPatricia { m },
        k_window,
        spectrum,
        coeffs,
        tails,
    })
}

/// General covariance coefficients for a binary trie with success
/// probability p.
///
/// The four pieces: a gamma leading term (limit `(log 2 - 1/2) / h` at
/// k = 0), a convolution sum over nonzero frequencies (periodic spectra
/// only, truncated at `|j| <= j_window` with the first omitted term recorded
/// as the tail bound), a digamma term, and an alternating series over
/// `ell >= 2` with divisors `1 - p^ell - q^ell`. Aperiodic spectra carry a
/// single coefficient: requesting `k_window > 0` for one is an error.
pub fn general_binary_cov_coeffs(
    spectrum: &SpectrumParams,
    k_window: usize,
    j_window: usize,
    rel_tol: f64,
) -> Result<FourierCoefficientSet> {
    if spectrum.probs().len() != 2 {
        return Err(Error::UnsupportedModel(
            "general covariance coefficients need a binary source".into(),
        ));
    }
    if !spectrum.is_periodic() && k_window > 0 {
        return Err(Error::RationalityRequired);
    }
    let p = spectrum.probs()[0];
    let q = spectrum.probs()[1];
    let h = spectrum.entropy();
    let ln2 = 2.0f64.ln();
    let second_log_moment = p * p.ln() * p.ln() + q * q.ln() * q.ln();
    let mut coeffs = Vec::with_capacity(2 * k_window + 1);
    let mut tails = Vec::with_capacity(2 * k_window + 1);
    for k in -(k_window as i64)..=(k_window as i64) {
        let chi = spectrum.chi(k);
        let leading = if k == 0 {
            Complex64::new((ln2 - 0.5) / h, 0.0)
        } else {
            complex_gamma(chi)? * (1.0 - (chi + 2.0) / two_pow(chi + 1.0)) / h
        };
        // convolution over the other frequencies (periodic case only)
        let mut convolution = Complex64::new(0.0, 0.0);
        let mut j_tail = None;
        let mut j_terms = None;
        if spectrum.is_periodic() {
            let conv_term = |j: i64| -> Result<Complex64> {
                let chi_j = spectrum.chi(j);
                Ok(complex_gamma(spectrum.chi(k - j) + 1.0)?
                    * (chi_j - 1.0)
                    * complex_gamma(chi_j)?)
            };
            for j in -(j_window as i64)..=(j_window as i64) {
                if j == 0 {
                    continue;
                }
                convolution += conv_term(j)?;
            }
            let omitted = j_window as i64 + 1;
            j_tail = Some(
                (conv_term(omitted)?.norm() + conv_term(-omitted)?.norm()) / (h * h),
            );
            j_terms = Some(j_window);
            convolution = -convolution / (h * h);
        }
        let digamma_term = -complex_gamma(chi + 1.0)? / (h * h)
            * (EULER_GAMMA + 1.0 + complex_digamma(chi + 1.0)?
                - second_log_moment / (2.0 * h));
        // ratio = Gamma(chi + ell - 1) / ell!, starting at ell = 2
        let mut ratio = complex_gamma(chi + 1.0)? / 2.0;
        let (series_sum, mut tail) = sum_series(
            |ell| {
                let ell = ell + 1; // series starts at ell = 2
                let ellf = ell as f64;
                let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
                let pq_pow = p.powi(ell as i32) + q.powi(ell as i32);
                let divisor = 1.0 - pq_pow;
                let t = sign * ratio * pq_pow
                    * (2.0 * ellf * ellf - 2.0 * ellf + 1.0 + chi * (2.0 * ellf - 1.0))
                    / divisor;
                ratio = ratio * (chi + ellf - 1.0) / (ellf + 1.0);
                t
            },
            rel_tol,
        )?;
        tail.j_terms = j_terms;
        tail.j_tail = j_tail;
        coeffs.push(leading + convolution + digamma_term + series_sum / h);
        tails.push(tail);
    }
    Ok(FourierCoefficientSet {
        series: CoeffSeries::SizeKplCovariance,
        family: CoeffFamily::GeneralBinaryTrie,
        k_window,
        spectrum: spectrum.clone(),
        coeffs,
        tails,
    })
}
