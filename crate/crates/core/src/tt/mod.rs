//! Tensor trains: compressed 4-D fields, TT-matrices, cross interpolation,
//! and an alternating linear solver.

pub mod amen;
pub mod cross;
pub mod io;
pub(crate) mod linalg;
pub mod matrix;
pub mod maxvol;
pub mod tensor;

pub use amen::{amen_solve, relative_residual, AmenConfig, AmenResult, StopReason};
pub use cross::{tt_cross, CrossConfig, CrossResult};
pub use matrix::TtMatrix;
pub use maxvol::{dominance, maxvol, MAXVOL_DELTA};
pub use tensor::{Core3, TtTensor};
