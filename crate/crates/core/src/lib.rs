//! Optimal N-point approximation of compactly supported measures under the
//! L^p Wasserstein distance.
//!
//! The crate is organised around the measures being quantized
//! ([`measures`]), exact discrete optimal transport ([`transport`]), the
//! quantizers themselves ([`quantizer`]), closed-form results for the dyadic
//! Cantor measure ([`cantor`]) and the asymptotic post-processing that turns
//! quantizer output into rate exponents and constants ([`analysis`]).
//! [`cli`] implements the `wq` batch front end on top of all of them.

pub mod analysis;
pub mod cantor;
pub mod check;
pub mod cli;
mod error;
pub mod format;
pub mod measures;
pub mod quantizer;
pub mod transport;

pub use error::{Error, Result};

/// Library version string embedded in every report.
pub const VERSION: &str = concat!("wq ", env!("CARGO_PKG_VERSION"));
