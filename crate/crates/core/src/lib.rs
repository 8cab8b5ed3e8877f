//! Zeros of random holomorphic sections of O(k) → CP¹ twisted by
//! Berezin-Toeplitz operators: simulation, asymptotic theory curves, kernel
//! checks and level-set reconstruction.

pub mod constants;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernel;
pub mod par;
pub mod quad;
pub mod sections;
pub mod toeplitz;
pub mod zeros;

pub use error::{Error, Result};
