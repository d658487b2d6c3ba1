//! Magnitude and maximum diversity of finite metric spaces, with the
//! dimension estimators and ultrametric tools built on them.

pub mod grid;
pub mod magnitude;
pub mod metric;
pub mod diversity;
pub mod dimension;
pub mod spaces;
pub mod ultra;
pub mod cli;

pub use nalgebra;
