pub mod error;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod integrand;
pub mod monitors;
pub mod quadrature;

pub use error::{Error, Result};
