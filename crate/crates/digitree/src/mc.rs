//! Monte-Carlo moment estimation, whitening of (S, K) samples, and
//! bivariate-normality diagnostics.
//!
//! Whitened with the exact covariance matrix and exact means, the centered
//! pair `(S_n, K_n)` converges to a standard bivariate normal; the report
//! here checks that empirically with marginal Kolmogorov-Smirnov statistics,
//! the deviation of the sample covariance from the identity, and Mardia's
//! multivariate skewness and kurtosis. Thresholds live in
//! [`NormalityConfig`] and are finite-n engineering bands, not limit
//! statements.

use crate::error::{Error, Result};
use crate::matrix::{sqrt_spd_2x2, CovMatrix2};
use crate::model::{ModelSpec, ShapeStats};
use crate::simulate::sample_shapes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Batches for batch-means standard errors.
pub const SE_BATCHES: usize = 16;

/// Summary statistics of the (S, K) sample with batch-means standard
/// errors (present when trials >= 2 * SE_BATCHES).
#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub trials: u64,
    pub mean_s: f64,
    pub mean_k: f64,
    pub mean_n: f64,
    pub var_s: f64,
    pub var_k: f64,
    pub cov_sk: f64,
    pub rho_sk: Option<f64>,
    pub se_mean_s: Option<f64>,
    pub se_mean_k: Option<f64>,
    pub se_var_s: Option<f64>,
    pub se_var_k: Option<f64>,
    pub se_cov_sk: Option<f64>,
}

/// A reproducible Monte-Carlo sample of tree shapes.
#[derive(Debug, Clone, Serialize)]
pub struct SampleSet {
    pub model: ModelSpec,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub shapes: Vec<ShapeStats>,
    pub summary: SampleSummary,
}

fn second_moments(shapes: &[ShapeStats]) -> (f64, f64, f64, f64, f64, f64) {
    let len = shapes.len() as f64;
    let (mut s1, mut k1, mut n1) = (0.0, 0.0, 0.0);
    for sh in shapes {
        s1 += sh.size as f64;
        k1 += sh.kpl as f64;
        n1 += sh.npl as f64;
    }
    let (ms, mk, mn) = (s1 / len, k1 / len, n1 / len);
    let (mut vs, mut vk, mut csk) = (0.0, 0.0, 0.0);
    for sh in shapes {
        let ds = sh.size as f64 - ms;
        let dk = sh.kpl as f64 - mk;
        vs += ds * ds;
        vk += dk * dk;
        csk += ds * dk;
    }
    // sample (n-1) normalization
    let denom = (len - 1.0).max(1.0);
    (ms, mk, mn, vs / denom, vk / denom, csk / denom)
}

fn summarize(shapes: &[ShapeStats]) -> SampleSummary {
    let trials = shapes.len();
    let (ms, mk, mn, vs, vk, csk) = second_moments(shapes);
    let rho = if vs > 0.0 && vk > 0.0 {
        Some(csk / (vs * vk).sqrt())
    } else {
        None
    };
    let mut summary = SampleSummary {
        trials: trials as u64,
        mean_s: ms,
        mean_k: mk,
        mean_n: mn,
        var_s: vs,
        var_k: vk,
        cov_sk: csk,
        rho_sk: rho,
        se_mean_s: None,
        se_mean_k: None,
        se_var_s: None,
        se_var_k: None,
        se_cov_sk: None,
    };
    if trials >= 2 * SE_BATCHES {
        let batch_len = trials / SE_BATCHES;
        let mut stats = [[0.0f64; SE_BATCHES]; 5];
        for b in 0..SE_BATCHES {
            let lo = b * batch_len;
            let hi = if b + 1 == SE_BATCHES {
                trials
            } else {
                lo + batch_len
            };
            let (bms, bmk, _, bvs, bvk, bcsk) = second_moments(&shapes[lo..hi]);
            stats[0][b] = bms;
            stats[1][b] = bmk;
            stats[2][b] = bvs;
            stats[3][b] = bvk;
            stats[4][b] = bcsk;
        }
        let se = |vals: &[f64; SE_BATCHES]| {
            let mean = vals.iter().sum::<f64>() / SE_BATCHES as f64;
            let var = vals
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / (SE_BATCHES as f64 - 1.0);
            Some((var / SE_BATCHES as f64).sqrt())
        };
        summary.se_mean_s = se(&stats[0]);
        summary.se_mean_k = se(&stats[1]);
        summary.se_var_s = se(&stats[2]);
        summary.se_var_k = se(&stats[3]);
        summary.se_cov_sk = se(&stats[4]);
    }
    summary
}

/// Sample `trials` shapes and summarize them. Deterministic in
/// `(model, n, trials, seed)` and independent of worker count.
pub fn mc_moments(model: &ModelSpec, n: u64, trials: u64, seed: u64) -> Result<SampleSet> {
    if trials < 2 {
        return Err(Error::TooFewSamples {
            got: trials as usize,
            need: 2,
        });
    }
    let shapes = sample_shapes(model, n, trials, seed)?;
    let summary = summarize(&shapes);
    Ok(SampleSet {
        model: model.clone(),
        n,
        trials,
        seed,
        shapes,
        summary,
    })
}

impl SampleSet {
    /// Fixed CSV column order for per-trial rows.
    pub const CSV_HEADER: &'static str = "trial,size,kpl,npl";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, sh) in self.shapes.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", i, sh.size, sh.kpl, sh.npl));
        }
        out
    }

    /// (S, K) pairs as floats.
    pub fn pairs(&self) -> Vec<[f64; 2]> {
        self.shapes
            .iter()
            .map(|sh| [sh.size as f64, sh.kpl as f64])
            .collect()
    }
}

/// Map each (S, K) pair to `M^(-1/2) (S - center_s, K - center_k)`.
pub fn whiten_pairs(
    pairs: &[[f64; 2]],
    center: [f64; 2],
    cov: &CovMatrix2,
) -> Result<Vec<[f64; 2]>> {
    let w = sqrt_spd_2x2(cov)?;
    Ok(pairs
        .iter()
        .map(|p| w.inv_sqrt.apply([p[0] - center[0], p[1] - center[1]]))
        .collect())
}

/// Whiten a sample set with the given centering and covariance (typically
/// the exact values from the moment tables).
pub fn whiten(samples: &SampleSet, center: [f64; 2], cov: &CovMatrix2) -> Result<Vec<[f64; 2]>> {
    whiten_pairs(&samples.pairs(), center, cov)
}

/// Thresholds for [`normality_check`]. Defaults target the 1% level:
/// Kolmogorov-Smirnov critical value `1.6276 / sqrt(n)` (asymptotic 1%
/// point of the Kolmogorov distribution), Mardia skewness against the 1%
/// point of chi-square with 4 degrees of freedom, Mardia kurtosis against
/// the two-sided 1% normal point, and a 0.05 band for the sample
/// covariance against the identity.
#[derive(Debug, Clone, Serialize)]
pub struct NormalityConfig {
    pub min_samples: usize,
    pub ks_critical_coefficient: f64,
    pub mardia_skew_critical: f64,
    pub mardia_kurt_critical: f64,
    pub max_cov_deviation: f64,
}

impl Default for NormalityConfig {
    fn default() -> Self {
        NormalityConfig {
            min_samples: 1000,
            ks_critical_coefficient: 1.6276,
            mardia_skew_critical: 13.2767,
            mardia_kurt_critical: 2.5758,
            max_cov_deviation: 0.05,
        }
    }
}

/// Diagnostics of whitened pairs against the standard bivariate normal.
#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub samples: usize,
    pub ks_stat_s: f64,
    pub ks_stat_k: f64,
    pub ks_critical: f64,
    pub sample_cov: CovMatrix2,
    pub max_cov_deviation: f64,
    /// Mardia skewness statistic `n b1 / 6` (chi-square, 4 df); `None` when
    /// the sample covariance is degenerate.
    pub mardia_skewness: Option<f64>,
    /// Mardia kurtosis statistic `(b2 - 8) / sqrt(64 / n)` (standard
    /// normal); `None` when the sample covariance is degenerate.
    pub mardia_kurtosis: Option<f64>,
    pub pass_ks: bool,
    pub pass_cov: bool,
    pub pass_mardia_skewness: bool,
    pub pass_mardia_kurtosis: bool,
    pub pass: bool,
    pub config: NormalityConfig,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov-Smirnov statistic of one coordinate against N(0, 1).
fn ks_statistic(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in values.iter().enumerate() {
        let cdf = std_normal_cdf(x);
        d = d.max(cdf - i as f64 / n);
        d = d.max((i + 1) as f64 / n - cdf);
    }
    d
}

/// Check whitened pairs against N2(0, I).
///
/// Mardia's statistics standardize by the sample mean and sample covariance
/// as usual; with d = 2 the skewness reduces to an O(n) sum because
/// `(z_i . z_j)^3` expands over four mixed-moment products.
pub fn normality_check(pairs: &[[f64; 2]], config: &NormalityConfig) -> Result<NormalityReport> {
    let n = pairs.len();
    if n < config.min_samples {
        return Err(Error::TooFewSamples {
            got: n,
            need: config.min_samples,
        });
    }
    let nf = n as f64;
    let mut xs: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
    let mut ys: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
    let ks_stat_s = ks_statistic(&mut xs);
    let ks_stat_k = ks_statistic(&mut ys);
    let ks_critical = config.ks_critical_coefficient / nf.sqrt();

    let mean = pairs.iter().fold([0.0f64; 2], |acc, p| {
        [acc[0] + p[0] / nf, acc[1] + p[1] / nf]
    });
    let mut cov = [0.0f64; 3];
    for p in pairs {
        let dx = p[0] - mean[0];
        let dy = p[1] - mean[1];
        cov[0] += dx * dx / nf;
        cov[1] += dx * dy / nf;
        cov[2] += dy * dy / nf;
    }
    let sample_cov = CovMatrix2::new(cov[0], cov[1], cov[2]);
    let max_cov_deviation = (sample_cov.a - 1.0)
        .abs()
        .max(sample_cov.b.abs())
        .max((sample_cov.c - 1.0).abs());

    let (mardia_skewness, mardia_kurtosis) = match sqrt_spd_2x2(&sample_cov) {
        Ok(w) => {
            // standardized coordinates z_i = S^(-1/2) (x_i - mean)
            let mut m3 = [0.0f64; 4]; // sums of z1^a z2^(3-a), a = 0..3
            let mut b2 = 0.0f64;
            for p in pairs {
                let z = w.inv_sqrt.apply([p[0] - mean[0], p[1] - mean[1]]);
                let r2 = z[0] * z[0] + z[1] * z[1];
                b2 += r2 * r2;
                m3[0] += z[1] * z[1] * z[1];
                m3[1] += z[0] * z[1] * z[1];
                m3[2] += z[0] * z[0] * z[1];
                m3[3] += z[0] * z[0] * z[0];
            }
            b2 /= nf;
            let binom = [1.0, 3.0, 3.0, 1.0];
            let b1 = (0..4).map(|a| binom[a] * m3[a] * m3[a]).sum::<f64>() / (nf * nf);
            let skew = nf * b1 / 6.0;
            let kurt = (b2 - 8.0) / (64.0 / nf).sqrt();
            (Some(skew), Some(kurt))
        }
        Err(_) => (None, None),
    };

    let pass_ks = ks_stat_s < ks_critical && ks_stat_k < ks_critical;
    let pass_cov = max_cov_deviation < config.max_cov_deviation;
    let pass_mardia_skewness =
        mardia_skewness.map_or(false, |s| s < config.mardia_skew_critical);
    let pass_mardia_kurtosis =
        mardia_kurtosis.map_or(false, |k| k.abs() < config.mardia_kurt_critical);
    Ok(NormalityReport {
        samples: n,
        ks_stat_s,
        ks_stat_k,
        ks_critical,
        sample_cov,
        max_cov_deviation,
        mardia_skewness,
        mardia_kurtosis,
        pass_ks,
        pass_cov,
        pass_mardia_skewness,
        pass_mardia_kurtosis,
        pass: pass_ks && pass_cov && pass_mardia_skewness && pass_mardia_kurtosis,
        config: config.clone(),
    })
}

/// Exact standard bivariate normal pairs for calibrating the diagnostics.
pub fn standard_normal_pairs(trials: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            [a, b]
        })
        .collect()
}

/// 2D histogram of the raw (S, K) sample.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram2d {
    pub bins: usize,
    pub s_min: u64,
    pub s_max: u64,
    pub k_min: u64,
    pub k_max: u64,
    /// row-major: counts[s_bin * bins + k_bin]
    pub counts: Vec<u64>,
}

impl Histogram2d {
    pub const CSV_HEADER: &'static str = "s_bin,k_bin,count";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for sb in 0..self.bins {
            for kb in 0..self.bins {
                out.push_str(&format!("{},{},{}\n", sb, kb, self.counts[sb * self.bins + kb]));
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bin the (S, K) pairs of a sample on a `bins x bins` grid spanning the
/// observed ranges. Degenerate ranges collapse into bin 0.
pub fn joint_histogram(samples: &SampleSet, bins: usize) -> Result<Histogram2d> {
    if bins < 2 {
        return Err(Error::InvalidArgument("need at least 2 bins per axis".into()));
    }
    let s_min = samples.shapes.iter().map(|s| s.size).min().unwrap_or(0);
    let s_max = samples.shapes.iter().map(|s| s.size).max().unwrap_or(0);
    let k_min = samples.shapes.iter().map(|s| s.kpl).min().unwrap_or(0);
    let k_max = samples.shapes.iter().map(|s| s.kpl).max().unwrap_or(0);
    let mut counts = vec![0u64; bins * bins];
    let index = |v: u64, lo: u64, hi: u64| -> usize {
        if hi == lo {
            return 0;
        }
        let t = (v - lo) as f64 / (hi - lo) as f64;
        ((t * bins as f64) as usize).min(bins - 1)
    };
    for sh in &samples.shapes {
        let sb = index(sh.size, s_min, s_max);
        let kb = index(sh.kpl, k_min, k_max);
        counts[sb * bins + kb] += 1;
    }
    Ok(Histogram2d {
        bins,
        s_min,
        s_max,
        k_min,
        k_max,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mc_moments_is_reproducible() {
        let model = ModelSpec::binary_trie(0.5).unwrap();
        let a = mc_moments(&model, 32, 500, 7).unwrap();
        let b = mc_moments(&model, 32, 500, 7).unwrap();
        assert_eq!(a.shapes, b.shapes);
        assert_eq!(a.summary.mean_s, b.summary.mean_s);
        assert!(matches!(
            mc_moments(&model, 32, 1, 7),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn whitening_with_identity_is_centering() {
        let pairs = vec![[3.0, 4.0], [5.0, 8.0]];
        let out = whiten_pairs(&pairs, [4.0, 6.0], &CovMatrix2::identity()).unwrap();
        assert_eq!(out, vec![[-1.0, -2.0], [1.0, 2.0]]);
    }

    #[test]
    fn whitening_synthetic_gaussian_recovers_identity() {
        // z ~ N(0, I) pushed through M^(1/2) has covariance M; whitening
        // with M must bring the sample covariance back near I at the
        // 5 / sqrt(trials) scale.
        let trials = 40_000;
        let m = CovMatrix2::new(4.0, 1.2, 2.0);
        let w = sqrt_spd_2x2(&m).unwrap();
        let raw = standard_normal_pairs(trials, 11);
        let pushed: Vec<[f64; 2]> = raw.iter().map(|z| w.sqrt.apply(*z)).collect();
        let white = whiten_pairs(&pushed, [0.0, 0.0], &m).unwrap();
        let nf = trials as f64;
        let mut cov = [0.0f64; 3];
        for z in &white {
            cov[0] += z[0] * z[0] / nf;
            cov[1] += z[0] * z[1] / nf;
            cov[2] += z[1] * z[1] / nf;
        }
        let band = 5.0 / nf.sqrt();
        assert!((cov[0] - 1.0).abs() < band, "{}", cov[0]);
        assert!(cov[1].abs() < band, "{}", cov[1]);
        assert!((cov[2] - 1.0).abs() < band, "{}", cov[2]);
    }

    #[test]
    fn normality_passes_on_exact_normal_input() {
        let pairs = standard_normal_pairs(100_000, 123);
        let report = normality_check(&pairs, &NormalityConfig::default()).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn normality_fails_on_constant_input() {
        let pairs = vec![[5.0, 5.0]; 2000];
        let report = normality_check(&pairs, &NormalityConfig::default()).unwrap();
        assert!(report.ks_stat_s > 0.99);
        assert!(!report.pass);
        assert!(report.mardia_skewness.is_none());
    }

    #[test]
    fn normality_fails_on_skewed_input() {
        // squaring one coordinate wrecks both Mardia statistics
        let pairs: Vec<[f64; 2]> = standard_normal_pairs(20_000, 5)
            .into_iter()
            .map(|p| [p[0] * p[0], p[1]])
            .collect();
        let report = normality_check(&pairs, &NormalityConfig::default()).unwrap();
        assert!(!report.pass_mardia_skewness || !report.pass_mardia_kurtosis);
        assert!(!report.pass);
    }

    #[test]
    fn too_few_samples_rejected() {
        let pairs = standard_normal_pairs(100, 1);
        assert!(matches!(
            normality_check(&pairs, &NormalityConfig::default()),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn histogram_counts_sum_to_trials() {
        let model = ModelSpec::binary_trie(0.4).unwrap();
        let set = mc_moments(&model, 64, 300, 3).unwrap();
        let h = joint_histogram(&set, 8).unwrap();
        assert_eq!(h.total(), 300);
        assert!(matches!(
            joint_histogram(&set, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn histogram_single_trial_single_cell() {
        let model = ModelSpec::binary_trie(0.5).unwrap();
        let mut set = mc_moments(&model, 16, 2, 9).unwrap();
        set.shapes.truncate(1);
        let h = joint_histogram(&set, 4).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
    }
}
