use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid walk spec: {0}")]
    InvalidSpec(String),

    #[error("atom budget exceeded: {required} compositions > budget {budget}; use Monte Carlo for this size")]
    AtomBudget { required: u128, budget: u64 },

    #[error("series truncation failure: tail bound {bound:.3e} above tolerance {tolerance:.3e} (≈{required_terms} terms needed)")]
    Truncation {
        bound: f64,
        tolerance: f64,
        required_terms: usize,
    },

    #[error("moment order {k} exceeds the exact-binomial limit {limit}")]
    MomentOrder { k: u32, limit: u32 },

    #[error("all {paths} exit samples were truncated at the horizon cap")]
    AllTruncated { paths: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
