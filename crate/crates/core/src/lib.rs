pub mod acceptance;
pub mod catalog;
pub mod cli;
pub mod diffops;
pub mod equations;
pub mod error;
pub mod expr;
pub mod grid;
pub mod limits;
pub mod meromorphic;
pub mod nevanlinna;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;
