//! Multilinear time-invariant systems over dense tensors.

pub mod block;
pub mod decomp;
pub mod einstein;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod random;
pub mod system;
pub mod tensor;

pub use error::{Error, Result};
