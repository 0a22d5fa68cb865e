//! Bell functionals for star and bilocal networks.
//!
//! Classical bounds by closed form and exhaustive search, optimal quantum
//! realizations, certification of the self-tested relations, see-saw
//! optimization and finite-shot sampling.

pub mod certify;
pub mod classical;
pub mod encoding;
pub mod error;
pub mod io;
pub mod operator;
pub mod quantum;
pub mod sampling;
pub mod scenario;
pub mod seesaw;
pub mod selftest;

pub use error::{Error, Result};
