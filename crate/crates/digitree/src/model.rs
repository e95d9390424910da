//! Tree-model specifications and exact shape statistics for explicit key sets.
//!
//! A model is a tree family (binary trie, m-ary trie, PATRICIA trie, bucket
//! digital search tree) together with its symbol distribution and, for bucket
//! DSTs, the node capacity. Random shapes are produced in [`crate::simulate`];
//! this module also builds the deterministic tree of an explicit key set and
//! reports its shape statistics.

use crate::error::{Error, Result};
use serde::Serialize;

/// Probability entries must sum to 1 within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Probability entries within this spread of each other are treated as equal
/// when detecting the symmetric case.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TreeFamily {
    BinaryTrie,
    MaryTrie,
    Patricia,
    BucketDst,
}

impl TreeFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            TreeFamily::BinaryTrie => "binary-trie",
            TreeFamily::MaryTrie => "mary-trie",
            TreeFamily::Patricia => "patricia",
            TreeFamily::BucketDst => "bucket-dst",
        }
    }
}

/// A tree family plus its probability vector (and bucket capacity for DSTs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    family: TreeFamily,
    probs: Vec<f64>,
    bucket_capacity: Option<u32>,
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::InvalidProbs(format!(
            "need at least 2 symbol probabilities, got {}",
            probs.len()
        )));
    }
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbs(format!(
                "entry {p} is outside the open interval (0, 1)"
            )));
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidProbs(format!(
            "entries sum to {sum}, expected 1 within {PROB_SUM_TOL:e}"
        )));
    }
    Ok(())
}

impl ModelSpec {
    /// Binary trie over a Bernoulli(p) source.
    pub fn binary_trie(p: f64) -> Result<Self> {
        let probs = vec![p, 1.0 - p];
        validate_probs(&probs)?;
        Ok(ModelSpec {
            family: TreeFamily::BinaryTrie,
            probs,
            bucket_capacity: None,
        })
    }

    /// m-ary trie with one probability per symbol.
    pub fn mary_trie(probs: Vec<f64>) -> Result<Self> {
        validate_probs(&probs)?;
        Ok(ModelSpec {
            family: TreeFamily::MaryTrie,
            probs,
            bucket_capacity: None,
        })
    }

    /// Symmetric m-ary trie (all symbols equally likely).
    pub fn mary_trie_symmetric(m: usize) -> Result<Self> {
        Self::mary_trie(vec![1.0 / m as f64; m])
    }

    /// PATRICIA trie over an m-ary source. `m = 2` is accepted but has
    /// deterministic size; see [`ModelSpec::deterministic_size`].
    pub fn patricia(probs: Vec<f64>) -> Result<Self> {
        validate_probs(&probs)?;
        Ok(ModelSpec {
            family: TreeFamily::Patricia,
            probs,
            bucket_capacity: None,
        })
    }

    /// Symmetric PATRICIA trie.
    pub fn patricia_symmetric(m: usize) -> Result<Self> {
        Self::patricia(vec![1.0 / m as f64; m])
    }

    /// Bucket digital search tree over a Bernoulli(p) source with node
    /// capacity `b >= 2`.
    pub fn bucket_dst(p: f64, b: u32) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidArgument(format!(
                "bucket capacity must be at least 2, got {b}"
            )));
        }
        let probs = vec![p, 1.0 - p];
        validate_probs(&probs)?;
        Ok(ModelSpec {
            family: TreeFamily::BucketDst,
            probs,
            bucket_capacity: Some(b),
        })
    }

    pub fn family(&self) -> TreeFamily {
        self.family
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn arity(&self) -> usize {
        self.probs.len()
    }

    pub fn bucket_capacity(&self) -> Option<u32> {
        self.bucket_capacity
    }

    /// All symbol probabilities equal (within [`SYMMETRY_TOL`]).
    pub fn is_symmetric(&self) -> bool {
        let lo = self.probs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= SYMMETRY_TOL
    }

    /// A binary PATRICIA trie always has exactly n-1 internal nodes.
    pub fn deterministic_size(&self) -> bool {
        self.family == TreeFamily::Patricia && self.arity() == 2
    }
}

/// Shape statistics of one digital tree: size (internal node count), key
/// path length (sum of external-node depths) and node path length (sum of
/// internal-node depths).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ShapeStats {
    pub size: u64,
    pub kpl: u64,
    pub npl: u64,
}

/// A finite set of keys over the alphabet `{0, .., m-1}`, stored as digit
/// strings. Finite stand-ins for infinite symbol streams; prefix-free sets
/// describe a complete tree.
#[derive(Debug, Clone)]
pub struct KeySet {
    keys: Vec<Vec<u8>>,
    alphabet: usize,
}

impl KeySet {
    /// Parse keys given as strings of decimal digit characters. The alphabet
    /// size is inferred as `max symbol + 1` (at least 2) unless `alphabet`
    /// is supplied, in which case every symbol must be below it.
    pub fn from_digit_strings<S: AsRef<str>>(keys: &[S], alphabet: Option<usize>) -> Result<Self> {
        let mut parsed = Vec::with_capacity(keys.len());
        let mut max_sym = 0u8;
        for key in keys {
            let key = key.as_ref();
            let mut symbols = Vec::with_capacity(key.len());
            for ch in key.chars() {
                let sym = ch.to_digit(10).ok_or_else(|| Error::SymbolOutsideAlphabet {
                    key: key.to_string(),
                    symbol: ch as u8,
                    alphabet: alphabet.unwrap_or(10),
                })? as u8;
                max_sym = max_sym.max(sym);
                symbols.push(sym);
            }
            parsed.push(symbols);
        }
        let inferred = (max_sym as usize + 1).max(2);
        let alphabet = match alphabet {
            Some(m) => {
                if max_sym as usize >= m {
                    let key = keys
                        .iter()
                        .map(|k| k.as_ref())
                        .find(|k| k.chars().any(|c| c.to_digit(10).map_or(true, |d| d as usize >= m)))
                        .unwrap_or("")
                        .to_string();
                    return Err(Error::SymbolOutsideAlphabet {
                        key,
                        symbol: max_sym,
                        alphabet: m,
                    });
                }
                m
            }
            None => inferred,
        };
        Ok(KeySet {
            keys: parsed,
            alphabet,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }
}

/// Which deterministic construction [`shape_of_keys`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyFamily {
    Trie,
    Patricia,
}

/// Exact (S, K, N) of the tree built from an explicit key set.
///
/// For the trie every node splitting >= 2 keys counts, including one-way
/// chains; for PATRICIA only proper splits (>= 2 nonempty symbol classes)
/// create nodes and contribute depth.
pub fn shape_of_keys(keys: &KeySet, family: KeyFamily) -> Result<ShapeStats> {
    let refs: Vec<&[u8]> = keys.keys.iter().map(|k| k.as_slice()).collect();
    for (i, a) in refs.iter().enumerate() {
        for b in refs.iter().skip(i + 1) {
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "duplicate key {:?}",
                    digits_to_string(a)
                )));
            }
        }
    }
    let mut stats = ShapeStats::default();
    split_keys(&refs, 0, 0, keys.alphabet, family, &mut stats)?;
    Ok(stats)
}

fn digits_to_string(key: &[u8]) -> String {
    key.iter().map(|d| char::from(b'0' + d)).collect()
}

fn split_keys(
    group: &[&[u8]],
    pos: usize,
    depth: u64,
    alphabet: usize,
    family: KeyFamily,
    stats: &mut ShapeStats,
) -> Result<()> {
    if group.len() <= 1 {
        if group.len() == 1 {
            stats.kpl += depth;
        }
        return Ok(());
    }
    // A key exhausted while the group still holds others is a proper prefix
    // of each of them.
    if let Some(short) = group.iter().find(|k| k.len() <= pos) {
        return Err(Error::PrefixViolation {
            key: digits_to_string(short),
        });
    }
    let mut classes: Vec<Vec<&[u8]>> = vec![Vec::new(); alphabet];
    for key in group {
        let sym = key[pos] as usize;
        debug_assert!(sym < alphabet);
        classes[sym].push(key);
    }
    let nonempty = classes.iter().filter(|c| !c.is_empty()).count();
    let proper = nonempty >= 2;
    match family {
        KeyFamily::Trie => {
            stats.size += 1;
            stats.npl += depth;
            for class in classes.iter().filter(|c| !c.is_empty()) {
                split_keys(class, pos + 1, depth + 1, alphabet, family, stats)?;
            }
        }
        KeyFamily::Patricia => {
            if proper {
                stats.size += 1;
                stats.npl += depth;
                for class in classes.iter().filter(|c| !c.is_empty()) {
                    split_keys(class, pos + 1, depth + 1, alphabet, family, stats)?;
                }
            } else {
                // One-way descent: consume the symbol without creating a node.
                split_keys(group, pos + 1, depth, alphabet, family, stats)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_validation() {
        assert!(ModelSpec::binary_trie(0.5).is_ok());
        assert!(matches!(
            ModelSpec::binary_trie(0.0),
            Err(Error::InvalidProbs(_))
        ));
        assert!(matches!(
            ModelSpec::binary_trie(1.0),
            Err(Error::InvalidProbs(_))
        ));
        assert!(matches!(
            ModelSpec::mary_trie(vec![0.5, 0.3]),
            Err(Error::InvalidProbs(_))
        ));
        assert!(matches!(
            ModelSpec::bucket_dst(0.5, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(ModelSpec::bucket_dst(0.5, 2).is_ok());
        assert!(ModelSpec::mary_trie_symmetric(3).unwrap().is_symmetric());
        assert!(!ModelSpec::mary_trie(vec![0.2, 0.3, 0.5])
            .unwrap()
            .is_symmetric());
        assert!(ModelSpec::patricia_symmetric(2)
            .unwrap()
            .deterministic_size());
        assert!(!ModelSpec::patricia_symmetric(3)
            .unwrap()
            .deterministic_size());
    }

    #[test]
    fn two_keys_split_once() {
        // single root split
        let keys = KeySet::from_digit_strings(&["0", "1"], None).unwrap();
        let s = shape_of_keys(&keys, KeyFamily::Trie).unwrap();
        assert_eq!(
            s,
            ShapeStats {
                size: 1,
                kpl: 2,
                npl: 0
            }
        );
    }

    #[test]
    fn three_key_trie_hand_enumerated() {
        // root splits {00,01} | {1}; the left child splits again at depth 1:
        // S = 2, N = 0 + 1 = 1, K = 2 + 2 + 1 = 5.
        let keys = KeySet::from_digit_strings(&["00", "01", "1"], None).unwrap();
        let s = shape_of_keys(&keys, KeyFamily::Trie).unwrap();
        assert_eq!(
            s,
            ShapeStats {
                size: 2,
                kpl: 5,
                npl: 1
            }
        );
    }

    #[test]
    fn patricia_equals_trie_without_one_way_chains() {
        let keys = KeySet::from_digit_strings(&["00", "01", "1"], None).unwrap();
        let t = shape_of_keys(&keys, KeyFamily::Trie).unwrap();
        let p = shape_of_keys(&keys, KeyFamily::Patricia).unwrap();
        assert_eq!(t, p);
        assert_eq!(
            p,
            ShapeStats {
                size: 2,
                kpl: 5,
                npl: 1
            }
        );
    }

    #[test]
    fn patricia_compresses_one_way_chain() {
        // Keys {000, 001}: the trie walks two one-way nodes before the split,
        // PATRICIA keeps only the split node.
        let keys = KeySet::from_digit_strings(&["000", "001"], None).unwrap();
        let t = shape_of_keys(&keys, KeyFamily::Trie).unwrap();
        assert_eq!(
            t,
            ShapeStats {
                size: 3,
                kpl: 6,
                npl: 3
            }
        );
        let p = shape_of_keys(&keys, KeyFamily::Patricia).unwrap();
        assert_eq!(
            p,
            ShapeStats {
                size: 1,
                kpl: 2,
                npl: 0
            }
        );
    }

    #[test]
    fn singleton_and_empty_key_sets() {
        let keys = KeySet::from_digit_strings(&["0110"], None).unwrap();
        let s = shape_of_keys(&keys, KeyFamily::Trie).unwrap();
        assert_eq!(s, ShapeStats::default());
        let empty = KeySet::from_digit_strings::<&str>(&[], None).unwrap();
        assert_eq!(
            shape_of_keys(&empty, KeyFamily::Patricia).unwrap(),
            ShapeStats::default()
        );
    }

    #[test]
    fn prefix_violation_detected() {
        let keys = KeySet::from_digit_strings(&["01", "011"], None).unwrap();
        assert!(matches!(
            shape_of_keys(&keys, KeyFamily::Trie),
            Err(Error::PrefixViolation { .. })
        ));
    }

    #[test]
    fn symbol_outside_alphabet_detected() {
        assert!(matches!(
            KeySet::from_digit_strings(&["012"], Some(2)),
            Err(Error::SymbolOutsideAlphabet { .. })
        ));
        // inferred alphabet accepts the same keys
        let keys = KeySet::from_digit_strings(&["012", "2"], None).unwrap();
        assert_eq!(keys.alphabet(), 3);
    }
}
