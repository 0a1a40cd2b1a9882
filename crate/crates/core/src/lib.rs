//! Space-time Chebyshev spectral collocation for the 3-D Maxwell equations.

pub mod chebyshev;
pub mod cli;
pub mod error;
pub mod kron;
pub mod limits;
pub mod maxwell;
pub mod tensor;
pub mod tt;
pub mod verify;

pub use error::{Error, Result};
