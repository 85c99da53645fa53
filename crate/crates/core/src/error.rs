use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series did not converge after {terms} terms ({context}); last term magnitude {last_term:e}")]
    NonConvergence {
        context: String,
        terms: usize,
        last_term: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite result in {0}")]
    Overflow(String),

    #[error("argument {v} lies outside the validity strip |Im(v - shift)| < {bound}")]
    OutsideStrip { v: String, bound: f64 },

    #[error("degenerate modulus: {0}")]
    DegenerateModulus(String),

    #[error("ill-conditioned coefficient extraction: residual {residual:e} exceeds {limit:e}")]
    IllConditioned { residual: f64, limit: f64 },

    #[error("pole encountered: {0}")]
    PoleEncountered(String),

    #[error("numerator vanishes at this point; the exponential form cannot represent a zero: {0}")]
    NearZeroOfNumerator(String),

    #[error("explicit scheme unstable: dt = {dt:e} exceeds bound {bound:e}")]
    UnstableScheme { dt: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal consistency check failed: {0}")]
    SelfCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;
