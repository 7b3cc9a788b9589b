use std::fmt;

/// A theorem hypothesis that a parameter set failed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// N ≥ 400.
    LevelAtLeast400,
    /// N does not divide q.
    LevelNotDividingModulus,
    /// q²/2π ≤ σ.
    SigmaLowerWindow,
    /// σ > q²/2π (strict form used by the B-functional bound).
    SigmaStrictlyAboveLower,
    /// σ ≤ Nq/log N.
    SigmaUpperWindow,
    /// A = σ N log N ≥ 300.
    ScaleAtLeast300,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hypothesis::LevelAtLeast400 => "N ≥ 400",
            Hypothesis::LevelNotDividingModulus => "N ∤ q",
            Hypothesis::SigmaLowerWindow => "q²/2π ≤ σ",
            Hypothesis::SigmaStrictlyAboveLower => "σ > q²/2π",
            Hypothesis::SigmaUpperWindow => "σ ≤ Nq/log N",
            Hypothesis::ScaleAtLeast300 => "σ N log N ≥ 300",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{0} must be at least 1")]
    Zero(&'static str),

    #[error("{x} is not invertible modulo {modulus}")]
    NotInvertible { x: i64, modulus: u64 },

    #[error("{what} = {value} is outside the supported range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("{what} = {value} exceeds the limit {limit}")]
    TooLarge {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("quadrature did not reach tolerance {tol:e} at x = {x} within the evaluation budget")]
    QuadratureBudget { x: f64, tol: f64 },

    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(Hypothesis),

    #[error("modulus c = {c} is not a positive multiple of the level N = {level}")]
    NotMultipleOfLevel { c: u64, level: u64 },

    #[error("c = {c} is not above 400; the twisted-sum bounds are only derived for c > 400")]
    BelowDerivationRange { c: u64 },

    #[error("|1 - exp(q eps_y)| vanishes numerically at c = {c}, y = {y}")]
    DivergentDenominator { c: u64, y: u64 },

    #[error("character index {index} out of range: there are {count} characters modulo {modulus}")]
    CharacterIndex {
        index: usize,
        count: usize,
        modulus: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
