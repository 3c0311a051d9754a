use thiserror::Error;

/// Errors produced by the spectral toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters (sigma = {sigma}, tau = {tau}): {reason}")]
    InvalidParams { sigma: f64, tau: f64, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("zeta(s) requires real s > 1, got {0}")]
    ZetaDomain(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (dimension {dim})")]
    NoConvergence { dim: usize, sweeps: usize },

    #[error("n = {n} has prime factor {p} beyond the table cutoff {p_max}")]
    PrimeBeyondCutoff { n: u64, p: u64, p_max: u64 },

    #[error("eigenvalue index {k} of the local matrix at p = {p} lies below the local floor")]
    BelowFloor { p: f64, k: usize },

    #[error("top-eigenvalue certificate unavailable at p = {p} (h_p = {h} >= 1)")]
    CertificateUnavailable { p: f64, h: f64 },

    #[error("enumeration cutoff {required} exceeds the available coverage {available}")]
    EnumerationTooLarge { required: u64, available: u64 },

    #[error("no closed form for kappa at rho = {rho}")]
    NoClosedForm { rho: f64 },

    #[error("enumeration stopped at the memory cap {cap} (partial count {partial})")]
    CapExceeded { cap: usize, partial: u64 },

    #[error("cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
