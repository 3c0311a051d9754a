//! Spectral analysis of the arithmetical LCM matrices
//!
//! ```text
//! E(sigma, tau) = { n^sigma m^sigma / [n, m]^tau },   n, m >= 1,
//! ```
//!
//! through the per-prime factors `E_p(sigma, tau)` and the product formula
//! `lambda_n = prod_p lambda_{k_p}(E_p)` for `n = prod_p p^{k_p}`.
//!
//! Modules:
//!
//! * [`arith`]: primes, factorization, entry formula, power sums, `zeta(s)`.
//! * [`linalg`]: dense symmetric eigensolvers.
//! * [`local`]: per-prime spectra, sandwich envelopes, top-eigenvalue certificates.
//! * [`global`]: product-formula spectrum, counting function, finite sections.
//! * [`kappa`]: the asymptotic constant `kappa(sigma, tau)`.
//! * [`toeplitz`]: truncated multiplicative Toeplitz matrices and Schatten norms.
//! * [`beurling`]: the generalized prime system built from local spectra.
//! * [`cache`]: binary persistence of local spectra.

pub mod arith;
pub mod beurling;
pub mod cache;
pub mod error;
pub mod global;
pub mod kappa;
pub mod linalg;
pub mod local;
pub mod numeric;
pub mod toeplitz;

pub use arith::{FactoredIndex, SpectralParams};
pub use beurling::BeurlingSystem;
pub use error::{Error, Result};
pub use global::{CountingResult, GlobalEigenvalue, GlobalSpectrumTable};
pub use kappa::KappaComputation;
pub use local::{LocalSpectrum, SandwichEnvelope, TopEigCertificate};
