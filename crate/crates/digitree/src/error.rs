use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbs(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("key {key:?} is a prefix of another key; the split never terminates")]
    PrefixViolation { key: String },

    #[error("key {key:?} contains symbol {symbol} outside the alphabet 0..{alphabet}")]
    SymbolOutsideAlphabet {
        key: String,
        symbol: u8,
        alphabet: usize,
    },

    #[error("recursion exceeded the safety depth {limit}; astronomically unlikely split sequence or RNG fault")]
    DepthGuardExceeded { limit: u32 },

    #[error("n_max {requested} exceeds the table cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("matrix is not positive-definite")]
    NotPositiveDefinite,

    #[error("gamma function pole at nonpositive integer {0}")]
    PoleAtNonpositiveInteger(f64),

    #[error("series did not converge within {terms} terms")]
    SeriesNotConverged { terms: usize },

    #[error("rational spectrum (r, l) required for this evaluation")]
    RationalityRequired,

    #[error("model not covered by closed-form coefficients: {0}")]
    UnsupportedModel(String),

    #[error("periodic sum has imaginary residue {magnitude:.3e}; coefficient set violates conjugate symmetry")]
    ImaginaryResidue { magnitude: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
}
