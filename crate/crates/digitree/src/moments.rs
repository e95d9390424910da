//! Exact joint moments of (S, K, N) by dynamic programming over n.
//!
//! The distributional recurrences only state how a tree of n keys decomposes
//! into independent subtrees over the random split vector. Taking
//! expectations conditioned on the split and factoring products across the
//! independent subtrees turns them into linear recurrences for the moment
//! sequences. For binary-splitting models the split `(a, c) = (B_n, n - B_n)`
//! gives, per split,
//!
//! ```text
//! S = S_a + S'_c + 1        K = K_a + K'_c + n        N = N_a + N'_c + S_a + S'_c
//! ```
//!
//! with `(S_a, K_a, N_a)` the joint functionals of one subtree and primes an
//! independent copy. Expanding, e.g., `E[SK | a, c]` gives
//! `ESK(a) + ESK(c) + ES(a)EK(c) + ES(c)EK(a) + n(ES(a) + ES(c)) + EK(a) + EK(c) + n`:
//! same-subtree products stay joint moments, cross-subtree products factor.
//! The boundary splits `a = n` or `c = n` (all keys on one side) reference
//! the unknown moment at n itself; moving those two terms to the left leaves
//! the divisor `1 - p^n - q^n`. Within one n the nine series resolve in the
//! order ES, EK, EN, ES2, EK2, ESK, ESN, EKN, EN2, so every boundary term is
//! already final when used.
//!
//! Bucket digital search trees recurse from `n + b` keys down to indices
//! `<= n`, so their table is a direct index-shifted sweep with no divisor.
//! Symmetric m-ary tries need the pairwise joint split law: cross terms
//! `E[X(I_i) Y(I_j)]`, `i != j`, are identical across pairs by symmetry and
//! reduce to one double sum over the trinomial `(I_1, I_2)`.
//!
//! Binomial and trinomial weights are computed in log space from a cumulative
//! log-factorial table and renormalized per row, keeping each row's mass
//! error at the 1e-15 level even at the table caps.

use crate::error::{Error, Result};
use crate::matrix::CovMatrix2;
use crate::model::ModelSpec;
use serde::Serialize;

/// Table cap for binary-splitting models (binary trie, bucket DST); the
/// sweep is O(n_max^2).
pub const BINARY_TABLE_CAP: usize = 1 << 14;

/// Table cap for symmetric m-ary tries; the pairwise joint sums make the
/// sweep O(n_max^3).
pub const MARY_TABLE_CAP: usize = 1 << 10;

/// Variances below this are treated as zero when forming correlations.
pub const VAR_DEFINED_MIN: f64 = 1e-12;

/// Divisors below this abort the sweep.
const DIVISOR_MIN: f64 = 1e-300;

/// Exact moment series for n = 0..=n_max.
///
/// Node-path-length series are present for binary and m-ary tries only;
/// bucket DSTs track S and K. Correlations are `None` wherever either
/// variance is below [`VAR_DEFINED_MIN`].
#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub model: ModelSpec,
    pub n_max: usize,
    pub es: Vec<f64>,
    pub ek: Vec<f64>,
    pub es2: Vec<f64>,
    pub ek2: Vec<f64>,
    pub esk: Vec<f64>,
    pub en: Option<Vec<f64>>,
    pub en2: Option<Vec<f64>>,
    pub esn: Option<Vec<f64>>,
    pub ekn: Option<Vec<f64>>,
    pub var_s: Vec<f64>,
    pub var_k: Vec<f64>,
    pub cov_sk: Vec<f64>,
    pub rho_sk: Vec<Option<f64>>,
    pub var_n: Option<Vec<f64>>,
    pub cov_sn: Option<Vec<f64>>,
    pub cov_kn: Option<Vec<f64>>,
    pub rho_sn: Option<Vec<Option<f64>>>,
    pub rho_kn: Option<Vec<Option<f64>>>,
}

/// Cumulative log-factorials with compensated summation.
fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n_max + 1);
    table.push(0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 1..=n_max {
        let y = (i as f64).ln() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        table.push(sum);
    }
    table
}

/// Binomial(n, p) weights, renormalized so the row sums to exactly 1.
fn binom_row(n: usize, ln_p: f64, ln_q: f64, lnfact: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let mut max = f64::NEG_INFINITY;
    for j in 0..=n {
        let lw = lnfact[n] - lnfact[j] - lnfact[n - j] + j as f64 * ln_p + (n - j) as f64 * ln_q;
        out.push(lw);
        max = max.max(lw);
    }
    let mut sum = 0.0;
    for w in out.iter_mut() {
        *w = (*w - max).exp();
        sum += *w;
    }
    for w in out.iter_mut() {
        *w /= sum;
    }
}

/// Exact moments of a binary trie with success probability `p`, all nine
/// series.
pub fn moment_table_binary_trie(p: f64, n_max: usize) -> Result<MomentTable> {
    let model = ModelSpec::binary_trie(p)?;
    if n_max > BINARY_TABLE_CAP {
        return Err(Error::CapExceeded {
            requested: n_max,
            cap: BINARY_TABLE_CAP,
        });
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let q = 1.0 - p;
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let lnfact = ln_factorials(n_max);
    let zeros = || vec![0.0f64; n_max + 1];
    let (mut es, mut ek, mut en) = (zeros(), zeros(), zeros());
    let (mut es2, mut ek2, mut esk) = (zeros(), zeros(), zeros());
    let (mut esn, mut ekn, mut en2) = (zeros(), zeros(), zeros());
    let mut w = Vec::with_capacity(n_max + 1);

    for n in 2..=n_max {
        binom_row(n, ln_p, ln_q, &lnfact, &mut w);
        let nf = n as f64;
        let boundary = p.powi(n as i32) + q.powi(n as i32);
        let divisor = 1.0 - boundary;
        if divisor < DIVISOR_MIN {
            return Err(Error::NumericalBreakdown(format!(
                "self-reference divisor {divisor:e} at n = {n}"
            )));
        }
        let mut sum_s = 0.0;
        let mut sum_k = 0.0;
        let mut sum_n = 0.0;
        let mut sum_s2 = 0.0;
        let mut sum_k2 = 0.0;
        let mut sum_sk = 0.0;
        let mut sum_sn = 0.0;
        let mut sum_kn = 0.0;
        let mut sum_n2 = 0.0;
        for a in 1..n {
            let c = n - a;
            let wi = w[a];
            let (s1a, s1c) = (es[a], es[c]);
            let (k1a, k1c) = (ek[a], ek[c]);
            let (n1a, n1c) = (en[a], en[c]);
            // ua = E[N_a + S_a], the left-subtree contribution to N's additive term
            let (ua, uc) = (n1a + s1a, n1c + s1c);
            sum_s += wi * (s1a + s1c);
            sum_k += wi * (k1a + k1c);
            sum_n += wi * (n1a + n1c + s1a + s1c);
            sum_s2 += wi * (es2[a] + es2[c] + 2.0 * s1a * s1c + 2.0 * (s1a + s1c));
            sum_k2 += wi * (ek2[a] + ek2[c] + 2.0 * k1a * k1c + 2.0 * nf * (k1a + k1c));
            sum_sk += wi
                * (esk[a] + esk[c] + s1a * k1c + s1c * k1a + nf * (s1a + s1c) + k1a + k1c);
            sum_sn += wi
                * (esn[a] + esn[c] + es2[a] + es2[c] + s1a * uc + s1c * ua + ua + uc);
            sum_kn += wi
                * (ekn[a] + ekn[c] + esk[a] + esk[c] + k1a * uc + k1c * ua + nf * (ua + uc));
            sum_n2 += wi
                * (en2[a] + en2[c] + 2.0 * (esn[a] + esn[c]) + es2[a] + es2[c] + 2.0 * ua * uc);
        }
        // Boundary splits (a, c) = (n, 0) or (0, n) contribute their known
        // parts here; the unknown moment at n is on the left of the divisor.
        es[n] = (1.0 + sum_s) / divisor;
        ek[n] = (nf + sum_k) / divisor;
        en[n] = (sum_n + boundary * es[n]) / divisor;
        es2[n] = (1.0 + sum_s2 + boundary * 2.0 * es[n]) / divisor;
        ek2[n] = (nf * nf + sum_k2 + boundary * 2.0 * nf * ek[n]) / divisor;
        esk[n] = (nf + sum_sk + boundary * (nf * es[n] + ek[n])) / divisor;
        esn[n] = (sum_sn + boundary * (es2[n] + en[n] + es[n])) / divisor;
        ekn[n] = (sum_kn + boundary * (esk[n] + nf * (en[n] + es[n]))) / divisor;
        en2[n] = (sum_n2 + boundary * (2.0 * esn[n] + es2[n])) / divisor;
    }

    let mut table = MomentTable {
        model,
        n_max,
        es,
        ek,
        es2,
        ek2,
        esk,
        en: Some(en),
        en2: Some(en2),
        esn: Some(esn),
        ekn: Some(ekn),
        var_s: Vec::new(),
        var_k: Vec::new(),
        cov_sk: Vec::new(),
        rho_sk: Vec::new(),
        var_n: None,
        cov_sn: None,
        cov_kn: None,
        rho_sn: None,
        rho_kn: None,
    };
    corr_series(&mut table);
    Ok(table)
}

/// Exact S and K moments of a bucket digital search tree with capacity `b`.
///
/// Initial conditions: a node exists as soon as it holds a key
/// (`ES = 1` for `1 <= n < b`) and stored keys sit at depth 0 (`EK = 0`
/// for `n < b`). The recurrence maps index `n + b` to indices `<= n`, so
/// the sweep has no self-reference divisor.
pub fn moment_table_bucket_dst(p: f64, b: u32, n_max: usize) -> Result<MomentTable> {
    let model = ModelSpec::bucket_dst(p, b)?;
    if n_max > BINARY_TABLE_CAP {
        return Err(Error::CapExceeded {
            requested: n_max,
            cap: BINARY_TABLE_CAP,
        });
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let q = 1.0 - p;
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let lnfact = ln_factorials(n_max);
    let zeros = || vec![0.0f64; n_max + 1];
    let (mut es, mut ek) = (zeros(), zeros());
    let (mut es2, mut ek2, mut esk) = (zeros(), zeros(), zeros());
    let b = b as usize;
    for i in 1..b.min(n_max + 1) {
        es[i] = 1.0;
        es2[i] = 1.0; // size is exactly 1, so the second moment equals the first
    }
    let mut w = Vec::new();
    for t in b..=n_max {
        let n = t - b;
        binom_row(n, ln_p, ln_q, &lnfact, &mut w);
        let nf = n as f64;
        let mut sum_s = 0.0;
        let mut sum_k = 0.0;
        let mut sum_s2 = 0.0;
        let mut sum_k2 = 0.0;
        let mut sum_sk = 0.0;
        for a in 0..=n {
            let c = n - a;
            let wi = w[a];
            let (s1a, s1c) = (es[a], es[c]);
            let (k1a, k1c) = (ek[a], ek[c]);
            sum_s += wi * (s1a + s1c);
            sum_k += wi * (k1a + k1c);
            sum_s2 += wi * (es2[a] + es2[c] + 2.0 * s1a * s1c + 2.0 * (s1a + s1c));
            sum_k2 += wi * (ek2[a] + ek2[c] + 2.0 * k1a * k1c + 2.0 * nf * (k1a + k1c));
            sum_sk +=
                wi * (esk[a] + esk[c] + s1a * k1c + s1c * k1a + nf * (s1a + s1c) + k1a + k1c);
        }
        es[t] = 1.0 + sum_s;
        ek[t] = nf + sum_k;
        es2[t] = 1.0 + sum_s2;
        ek2[t] = nf * nf + sum_k2;
        esk[t] = nf + sum_sk;
    }

    let mut table = MomentTable {
        model,
        n_max,
        es,
        ek,
        es2,
        ek2,
        esk,
        en: None,
        en2: None,
        esn: None,
        ekn: None,
        var_s: Vec::new(),
        var_k: Vec::new(),
        cov_sk: Vec::new(),
        rho_sk: Vec::new(),
        var_n: None,
        cov_sn: None,
        cov_kn: None,
        rho_sn: None,
        rho_kn: None,
    };
    corr_series(&mut table);
    Ok(table)
}

/// Exact S and K moments of the symmetric m-ary trie.
///
/// First moments use the Binomial(n, 1/m) marginal of one subtree count;
/// second and mixed moments additionally need `E[X(I_1) Y(I_2)]` over the
/// trinomial joint law of two subtree counts, identical for every ordered
/// pair by symmetry. The self-reference divisor is `1 - m^(1-n)`.
pub fn moment_table_mary_trie_symmetric(m: usize, n_max: usize) -> Result<MomentTable> {
    let model = ModelSpec::mary_trie_symmetric(m)?;
    if n_max > MARY_TABLE_CAP {
        return Err(Error::CapExceeded {
            requested: n_max,
            cap: MARY_TABLE_CAP,
        });
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let mf = m as f64;
    let ln_p = -(mf.ln());
    let ln_q = (1.0 - 1.0 / mf).ln();
    let lnfact = ln_factorials(n_max);
    let zeros = || vec![0.0f64; n_max + 1];
    let (mut es, mut ek) = (zeros(), zeros());
    let (mut es2, mut ek2, mut esk) = (zeros(), zeros(), zeros());
    let mut w = Vec::new();

    for n in 2..=n_max {
        binom_row(n, ln_p, ln_q, &lnfact, &mut w);
        let nf = n as f64;
        let divisor = 1.0 - mf * (1.0 / mf).powi(n as i32);
        if divisor < DIVISOR_MIN {
            return Err(Error::NumericalBreakdown(format!(
                "self-reference divisor {divisor:e} at n = {n}"
            )));
        }

        // Cross moments over the pairwise joint law (I_1, I_2). For m = 2 the
        // joint law is degenerate (I_2 = n - I_1).
        let mut cross_ss = 0.0;
        let mut cross_kk = 0.0;
        let mut cross_sk = 0.0;
        if m == 2 {
            for a in 0..=n {
                let c = n - a;
                cross_ss += w[a] * es[a] * es[c];
                cross_kk += w[a] * ek[a] * ek[c];
                cross_sk += w[a] * es[a] * ek[c];
            }
        } else {
            let ln_rest = (1.0 - 2.0 / mf).ln();
            // rows[a] = (mass, sum_c tri(a,c) es[c], sum_c tri(a,c) ek[c]),
            // unnormalized; `total` renormalizes the whole triangle.
            let mut total = 0.0;
            let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(n + 1);
            let mut row = Vec::new();
            for a in 0..=n {
                let base = lnfact[n] - lnfact[a] + (a as f64) * ln_p;
                row.clear();
                for c in 0..=(n - a) {
                    row.push(
                        base - lnfact[c] - lnfact[n - a - c]
                            + (c as f64) * ln_p
                            + ((n - a - c) as f64) * ln_rest,
                    );
                }
                let row_max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut row_mass = 0.0;
                let mut row_s = 0.0;
                let mut row_k = 0.0;
                for (c, lw) in row.iter().enumerate() {
                    let weight = (lw - row_max).exp();
                    row_mass += weight;
                    row_s += weight * es[c];
                    row_k += weight * ek[c];
                }
                let scale = row_max.exp();
                rows.push((row_mass * scale, row_s * scale, row_k * scale));
                total += row_mass * scale;
            }
            for (a, &(_, row_s, row_k)) in rows.iter().enumerate() {
                cross_ss += es[a] * row_s / total;
                cross_kk += ek[a] * row_k / total;
                cross_sk += es[a] * row_k / total;
            }
        }

        // Self terms: sums over one marginal, split at the unknown index n.
        let head_s: f64 = (0..n).map(|j| w[j] * es[j]).sum();
        let head_k: f64 = (0..n).map(|j| w[j] * ek[j]).sum();
        let head_s2: f64 = (0..n).map(|j| w[j] * es2[j]).sum();
        let head_k2: f64 = (0..n).map(|j| w[j] * ek2[j]).sum();
        let head_sk: f64 = (0..n).map(|j| w[j] * esk[j]).sum();

        es[n] = (1.0 + mf * head_s) / divisor;
        ek[n] = (nf + mf * head_k) / divisor;
        let full_s = head_s + w[n] * es[n];
        let full_k = head_k + w[n] * ek[n];
        es2[n] = (1.0 + mf * head_s2 + mf * (mf - 1.0) * cross_ss + 2.0 * mf * full_s) / divisor;
        ek2[n] =
            (nf * nf + mf * head_k2 + mf * (mf - 1.0) * cross_kk + 2.0 * nf * mf * full_k)
                / divisor;
        esk[n] = (nf
            + mf * head_sk
            + mf * (mf - 1.0) * cross_sk
            + nf * mf * full_s
            + mf * full_k)
            / divisor;
    }

    let mut table = MomentTable {
        model,
        n_max,
        es,
        ek,
        es2,
        ek2,
        esk,
        en: None,
        en2: None,
        esn: None,
        ekn: None,
        var_s: Vec::new(),
        var_k: Vec::new(),
        cov_sk: Vec::new(),
        rho_sk: Vec::new(),
        var_n: None,
        cov_sn: None,
        cov_kn: None,
        rho_sn: None,
        rho_kn: None,
    };
    corr_series(&mut table);
    Ok(table)
}

fn variance(e2: &[f64], e1: &[f64]) -> Vec<f64> {
    e2.iter().zip(e1).map(|(m2, m1)| m2 - m1 * m1).collect()
}

fn covariance(exy: &[f64], ex: &[f64], ey: &[f64]) -> Vec<f64> {
    exy.iter()
        .zip(ex.iter().zip(ey))
        .map(|(xy, (x, y))| xy - x * y)
        .collect()
}

fn correlations(cov: &[f64], vx: &[f64], vy: &[f64]) -> Vec<Option<f64>> {
    cov.iter()
        .zip(vx.iter().zip(vy))
        .map(|(c, (x, y))| {
            if *x > VAR_DEFINED_MIN && *y > VAR_DEFINED_MIN {
                Some(c / (x * y).sqrt())
            } else {
                None
            }
        })
        .collect()
}

/// Fill the variance, covariance and correlation series from the raw moment
/// fields. Builders call this; it may be re-run at any time.
pub fn corr_series(table: &mut MomentTable) {
    table.var_s = variance(&table.es2, &table.es);
    table.var_k = variance(&table.ek2, &table.ek);
    table.cov_sk = covariance(&table.esk, &table.es, &table.ek);
    table.rho_sk = correlations(&table.cov_sk, &table.var_s, &table.var_k);
    if let (Some(en), Some(en2), Some(esn), Some(ekn)) =
        (&table.en, &table.en2, &table.esn, &table.ekn)
    {
        let var_n = variance(en2, en);
        let cov_sn = covariance(esn, &table.es, en);
        let cov_kn = covariance(ekn, &table.ek, en);
        table.rho_sn = Some(correlations(&cov_sn, &table.var_s, &var_n));
        table.rho_kn = Some(correlations(&cov_kn, &table.var_k, &var_n));
        table.var_n = Some(var_n);
        table.cov_sn = Some(cov_sn);
        table.cov_kn = Some(cov_kn);
    }
}

/// Covariance matrix of (S_n, K_n) at one index.
pub fn covariance_matrix(table: &MomentTable, n: usize) -> Result<CovMatrix2> {
    if n > table.n_max {
        return Err(Error::InvalidArgument(format!(
            "n = {n} beyond table n_max = {}",
            table.n_max
        )));
    }
    let m = CovMatrix2::new(table.var_s[n], table.cov_sk[n], table.var_k[n]);
    if !m.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(m)
}

/// Fixed CSV column order for moment tables.
pub const MOMENT_CSV_HEADER: &str = "n,es,ek,en,es2,ek2,en2,esk,esn,ekn,var_s,var_k,var_n,cov_sk,cov_sn,cov_kn,rho_sk,rho_sn,rho_kn";

impl MomentTable {
    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    /// One row per n in the [`MOMENT_CSV_HEADER`] column order; series the
    /// model does not track are left empty, as are undefined correlations.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MOMENT_CSV_HEADER);
        out.push('\n');
        let opt = |v: &Option<Vec<f64>>, n: usize| match v {
            Some(col) => col[n].to_string(),
            None => String::new(),
        };
        let opt_rho = |v: &Option<Vec<Option<f64>>>, n: usize| match v {
            Some(col) => col[n].map(|r| r.to_string()).unwrap_or_default(),
            None => String::new(),
        };
        for n in 0..=self.n_max {
            let row = [
                n.to_string(),
                self.es[n].to_string(),
                self.ek[n].to_string(),
                opt(&self.en, n),
                self.es2[n].to_string(),
                self.ek2[n].to_string(),
                opt(&self.en2, n),
                self.esk[n].to_string(),
                opt(&self.esn, n),
                opt(&self.ekn, n),
                self.var_s[n].to_string(),
                self.var_k[n].to_string(),
                opt(&self.var_n, n),
                self.cov_sk[n].to_string(),
                opt(&self.cov_sn, n),
                opt(&self.cov_kn, n),
                self.rho_sk[n].map(|r| r.to_string()).unwrap_or_default(),
                opt_rho(&self.rho_sn, n),
                opt_rho(&self.rho_kn, n),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
