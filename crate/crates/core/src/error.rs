use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by zero")]
    DivisionByZero,

    /// A value carrying a nonzero power of sqrt(pi) was asked for as a rational.
    #[error("irrational result: value carries pi^({pi_half_exponent}/2)")]
    Irrational { pi_half_exponent: i32 },

    #[error(
        "pair-product expansion for m = {m} exceeds the configured ceiling m <= {limit}; \
         raise it with `chamber::set_max_dimension` if the memory is available"
    )]
    Capacity { m: usize, limit: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),
}
