pub mod algebra;
pub mod conv;
pub mod converge;
pub mod error;
pub mod linalg;
mod matindex;
pub mod nonuniq;
pub mod rep;

pub use error::{Error, Result};
